//! Synthetic deployment areas: UE populations per slice, candidate RU sites and
//! OLT sites with their remote-node (splitter) positions.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{self, CoverageQuery, RuKind, SplitShares};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SliceId {
    #[serde(rename = "uRLLC")]
    Urllc,
    #[serde(rename = "eMBB")]
    Embb,
    #[serde(rename = "mMTC")]
    Mmtc,
}

impl SliceId {
    pub const ALL: [SliceId; 3] = [SliceId::Urllc, SliceId::Embb, SliceId::Mmtc];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            SliceId::Urllc => "uRLLC",
            SliceId::Embb => "eMBB",
            SliceId::Mmtc => "mMTC",
        }
    }
}

impl std::fmt::Display for SliceId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AreaClass {
    Industrial,
    Urban,
    Rural,
}

impl AreaClass {
    pub const ALL: [AreaClass; 3] = [AreaClass::Industrial, AreaClass::Urban, AreaClass::Rural];

    /// Peak UE density per km².
    pub fn max_density(self) -> f64 {
        match self {
            AreaClass::Industrial => 2000.0,
            AreaClass::Urban => 1000.0,
            AreaClass::Rural => 500.0,
        }
    }

    pub fn slice_shares(self) -> [f64; 3] {
        match self {
            AreaClass::Industrial => [0.25, 0.25, 0.50],
            AreaClass::Urban => [0.30, 0.50, 0.20],
            AreaClass::Rural => [0.20, 0.60, 0.20],
        }
    }

    /// Hourly fraction of the peak density that is active. Editable defaults,
    /// shaped by hand: industrial peaks in working hours, urban in the evening,
    /// rural stays flatter.
    pub fn default_profile(self) -> Vec<f64> {
        match self {
            AreaClass::Industrial => vec![
                0.10, 0.10, 0.10, 0.10, 0.10, 0.15, 0.30, 0.60, 0.90, 1.00, 1.00, 0.95, 0.85, 0.95,
                1.00, 1.00, 0.90, 0.60, 0.35, 0.20, 0.15, 0.10, 0.10, 0.10,
            ],
            AreaClass::Urban => vec![
                0.30, 0.20, 0.15, 0.10, 0.10, 0.15, 0.30, 0.50, 0.60, 0.55, 0.50, 0.55, 0.60, 0.55,
                0.50, 0.55, 0.60, 0.75, 0.90, 1.00, 1.00, 0.90, 0.70, 0.50,
            ],
            AreaClass::Rural => vec![
                0.30, 0.25, 0.20, 0.20, 0.20, 0.30, 0.45, 0.60, 0.70, 0.75, 0.75, 0.75, 0.80, 0.75,
                0.75, 0.75, 0.80, 0.85, 0.90, 1.00, 0.85, 0.70, 0.50, 0.40,
            ],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AreaClass::Industrial => "industrial",
            AreaClass::Urban => "urban",
            AreaClass::Rural => "rural",
        }
    }
}

impl std::fmt::Display for AreaClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for AreaClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "industrial" => Ok(AreaClass::Industrial),
            "urban" => Ok(AreaClass::Urban),
            "rural" => Ok(AreaClass::Rural),
            _ => Err(Error::param("class", format!("unknown area class `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

pub fn centroid(points: &[Point]) -> Option<Point> {
    if points.is_empty() {
        return None;
    }
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    Some(Point::new(sx / n, sy / n))
}

/// Per-slice demand ranges (Mbps) and latency budgets (seconds).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceSpec {
    pub id: SliceId,
    pub share: f64,
    pub ul_demand_mbps: (f64, f64),
    pub dl_demand_mbps: (f64, f64),
    pub ota_budget: f64,
    pub mh_budget: f64,
    pub fh_budget: f64,
    pub bbu_budget: f64,
}

impl SliceSpec {
    pub fn defaults(class: AreaClass) -> Vec<SliceSpec> {
        let shares = class.slice_shares();
        vec![
            SliceSpec {
                id: SliceId::Urllc,
                share: shares[0],
                ul_demand_mbps: (10.0, 20.0),
                dl_demand_mbps: (30.0, 50.0),
                ota_budget: 200e-6,
                mh_budget: 100e-6,
                fh_budget: 100e-6,
                bbu_budget: 50e-6,
            },
            SliceSpec {
                id: SliceId::Embb,
                share: shares[1],
                ul_demand_mbps: (50.0, 80.0),
                dl_demand_mbps: (100.0, 150.0),
                ota_budget: 400e-6,
                mh_budget: 500e-6,
                fh_budget: 100e-6,
                bbu_budget: 80e-6,
            },
            SliceSpec {
                id: SliceId::Mmtc,
                share: shares[2],
                ul_demand_mbps: (10.0, 20.0),
                dl_demand_mbps: (10.0, 20.0),
                ota_budget: 300e-6,
                mh_budget: 1000e-6,
                fh_budget: 100e-6,
                bbu_budget: 100e-6,
            },
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ue {
    pub position: Point,
    pub slice: SliceId,
    pub ul_demand: f64,
    pub dl_demand: f64,
    /// Bit h set when the UE transmits during hour h.
    pub active_hours: u32,
}

/// Per-direction GOPS demand of one RU for each processing tier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuGops {
    pub ru_ul: f64,
    pub ru_dl: f64,
    pub du_ul: f64,
    pub du_dl: f64,
    pub cu_ul: f64,
    pub cu_dl: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateRu {
    pub position: Point,
    pub slice: SliceId,
    pub kind: RuKind,
    pub coverage_km: f64,
    pub ul_cap: f64,
    pub dl_cap: f64,
    pub fh_demand_ul: f64,
    pub fh_demand_dl: f64,
    pub mh_demand_ul: f64,
    pub mh_demand_dl: f64,
    pub gops: RuGops,
}

/// OLT candidate sites plus the splitter position serving each of them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteGraph {
    pub stage1_olt_sites: Vec<Point>,
    pub stage2_olt_sites: Vec<Point>,
    pub stage1_rn: Vec<Point>,
    pub stage2_rn: Vec<Point>,
    pub stage1_reach_km: f64,
    pub stage2_reach_km: f64,
}

impl SiteGraph {
    /// The RN of a Stage-I OLT sits at the centroid of the RU sites within
    /// reach of it; a Stage-II RN at the centroid of the Stage-I sites within
    /// reach. With no member in reach the RN collapses onto the OLT.
    pub fn build(
        ru_positions: &[Point],
        stage1: Vec<Point>,
        stage2: Vec<Point>,
        stage1_reach_km: f64,
        stage2_reach_km: f64,
    ) -> SiteGraph {
        let rn_for = |site: &Point, members: &[Point], reach: f64| {
            let near: Vec<Point> = members
                .iter()
                .copied()
                .filter(|p| p.dist(site) <= reach)
                .collect();
            centroid(&near).unwrap_or(*site)
        };
        let stage1_rn = stage1
            .iter()
            .map(|o| rn_for(o, ru_positions, stage1_reach_km))
            .collect();
        let stage2_rn = stage2
            .iter()
            .map(|q| rn_for(q, &stage1, stage2_reach_km))
            .collect();
        SiteGraph {
            stage1_olt_sites: stage1,
            stage2_olt_sites: stage2,
            stage1_rn,
            stage2_rn,
            stage1_reach_km,
            stage2_reach_km,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum UePlacement {
    Uniform,
    /// Matérn-style clusters: parents uniform, daughters uniform in a disc.
    Clustered {
        parents_per_km2: f64,
        radius_km: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemandLaw {
    Uniform,
    UpperEndpoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadioSettings {
    pub bandwidth_hz: f64,
    pub noise_dbm_per_hz: f64,
    pub macro_tx_dbm: f64,
    pub small_tx_dbm: f64,
    pub macro_cap_km: f64,
    pub small_cap_km: f64,
    pub min_coverage_km: f64,
    pub ul_cap_bps: f64,
    pub dl_cap_bps: f64,
}

impl Default for RadioSettings {
    fn default() -> Self {
        Self {
            bandwidth_hz: 100e6,
            noise_dbm_per_hz: -174.0,
            macro_tx_dbm: 46.0,
            small_tx_dbm: 30.0,
            macro_cap_km: 1.0,
            small_cap_km: 0.75,
            min_coverage_km: 0.5,
            ul_cap_bps: 28e9,
            dl_cap_bps: 30e9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    /// Replaces the class defaults when set.
    pub slices: Option<Vec<SliceSpec>>,
    pub ue_density_per_km2: Option<f64>,
    pub density_profile: Option<Vec<f64>>,
    pub placement: UePlacement,
    pub demand_law: DemandLaw,
    pub ru_sites_per_km2: f64,
    pub stage2_sites_per_km2: f64,
    pub lattice_jitter: f64,
    pub slice_kinds: [RuKind; 3],
    pub radio: RadioSettings,
    pub fh_rate_ul: f64,
    pub fh_rate_dl: f64,
    pub mh_rate_ul: f64,
    pub mh_rate_dl: f64,
    pub ru_gops_total: f64,
    pub split_shares: SplitShares,
    /// Share of each tier's GOPS charged to the uplink; the rest is downlink.
    pub gops_ul_fraction: f64,
    pub tti: f64,
    pub stage1_reach_km: f64,
    pub stage2_reach_km: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            slices: None,
            ue_density_per_km2: None,
            density_profile: None,
            placement: UePlacement::Uniform,
            demand_law: DemandLaw::Uniform,
            ru_sites_per_km2: 15.0,
            stage2_sites_per_km2: 0.25,
            lattice_jitter: 0.1,
            slice_kinds: [RuKind::Small, RuKind::Macro, RuKind::Small],
            radio: RadioSettings::default(),
            fh_rate_ul: 9.632e9,
            fh_rate_dl: 11.113e9,
            mh_rate_ul: 1.111e9,
            mh_rate_dl: 1.111e9,
            ru_gops_total: 1800.0,
            split_shares: SplitShares::default(),
            gops_ul_fraction: 0.5,
            tti: 0.5e-3,
            stage1_reach_km: 20.0,
            stage2_reach_km: 20.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub class: AreaClass,
    pub side_km: f64,
    pub seed: u64,
    pub tti: f64,
    pub slices: Vec<SliceSpec>,
    pub density_profile: Vec<f64>,
    pub ues: Vec<Ue>,
    pub candidate_rus: Vec<CandidateRu>,
    pub sites: SiteGraph,
}

impl Scenario {
    pub fn area_km2(&self) -> f64 {
        self.side_km * self.side_km
    }

    pub fn slice(&self, id: SliceId) -> &SliceSpec {
        self.slices
            .iter()
            .find(|s| s.id == id)
            .expect("scenario carries every slice")
    }

    pub fn active_count(&self, hour: usize) -> usize {
        self.ues
            .iter()
            .filter(|u| u.active_hours & (1 << hour) != 0)
            .count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Scenario> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Splits `total` into integer counts proportional to `weights` (largest
/// remainder, ties to the lower index).
pub fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() || sum <= 0.0 {
        return vec![0; weights.len()];
    }
    let exact: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut left = total - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

/// Row-major lattice of `n` points over a square; the last row is spread
/// evenly over the full width.
pub fn lattice(n: usize, side: f64) -> Vec<Point> {
    if n == 0 {
        return Vec::new();
    }
    let cols = (n as f64).sqrt().ceil() as usize;
    let rows = n.div_ceil(cols);
    let mut out = Vec::with_capacity(n);
    for r in 0..rows {
        let in_row = if r + 1 == rows {
            n - cols * (rows - 1)
        } else {
            cols
        };
        let y = (r as f64 + 0.5) * side / rows as f64;
        for c in 0..in_row {
            out.push(Point::new((c as f64 + 0.5) * side / in_row as f64, y));
        }
    }
    out
}

fn validate(
    class_side: f64,
    cfg: &ScenarioConfig,
    slices: &[SliceSpec],
    profile: &[f64],
) -> Result<()> {
    if !(1.0..=8.0).contains(&class_side) {
        return Err(Error::param(
            "side_km",
            format!("{class_side} is outside [1, 8]"),
        ));
    }
    if slices.len() != 3
        || SliceId::ALL
            .iter()
            .any(|id| !slices.iter().any(|s| s.id == *id))
    {
        return Err(Error::param(
            "slices",
            "exactly one spec per slice is required",
        ));
    }
    for s in slices {
        if !(s.share >= 0.0) {
            return Err(Error::param(
                format!("slices.{}.share", s.id),
                "must be non-negative",
            ));
        }
        for (name, v) in [
            ("ota_budget", s.ota_budget),
            ("mh_budget", s.mh_budget),
            ("fh_budget", s.fh_budget),
            ("bbu_budget", s.bbu_budget),
        ] {
            if !(v > 0.0) {
                return Err(Error::param(
                    format!("slices.{}.{name}", s.id),
                    "must be positive",
                ));
            }
        }
        for (name, (lo, hi)) in [
            ("ul_demand_mbps", s.ul_demand_mbps),
            ("dl_demand_mbps", s.dl_demand_mbps),
        ] {
            if !(lo >= 0.0 && hi >= lo) {
                return Err(Error::param(
                    format!("slices.{}.{name}", s.id),
                    "needs 0 <= low <= high",
                ));
            }
        }
    }
    if slices.iter().map(|s| s.share).sum::<f64>() <= 0.0 {
        return Err(Error::param("slices", "shares sum to zero"));
    }
    if profile.len() != 24 || profile.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::param(
            "density_profile",
            "needs 24 fractions in [0, 1]",
        ));
    }
    if !(cfg.ru_sites_per_km2 > 0.0 && cfg.ru_sites_per_km2 <= 15.0) {
        return Err(Error::param("ru_sites_per_km2", "must lie in (0, 15]"));
    }
    if !(cfg.stage2_sites_per_km2 >= 0.0) {
        return Err(Error::param("stage2_sites_per_km2", "must be non-negative"));
    }
    if !(0.0..0.5).contains(&cfg.lattice_jitter) {
        return Err(Error::param("lattice_jitter", "must lie in [0, 0.5)"));
    }
    if !(0.0..=1.0).contains(&cfg.gops_ul_fraction) {
        return Err(Error::param("gops_ul_fraction", "must lie in [0, 1]"));
    }
    if !(cfg.tti > 0.0) {
        return Err(Error::param("tti", "must be positive"));
    }
    Ok(())
}

pub fn generate(
    class: AreaClass,
    side_km: f64,
    seed: u64,
    cfg: &ScenarioConfig,
) -> Result<Scenario> {
    let slices = cfg
        .slices
        .clone()
        .unwrap_or_else(|| SliceSpec::defaults(class));
    let profile = cfg
        .density_profile
        .clone()
        .unwrap_or_else(|| class.default_profile());
    validate(side_km, cfg, &slices, &profile)?;
    let slices: Vec<SliceSpec> = SliceId::ALL
        .iter()
        .map(|id| *slices.iter().find(|s| s.id == *id).unwrap())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let area = side_km * side_km;
    let density = cfg.ue_density_per_km2.unwrap_or(class.max_density());
    let n_ue = (density * area).round() as usize;

    let positions = place_ues(&mut rng, n_ue, side_km, &cfg.placement);

    let shares: Vec<f64> = slices.iter().map(|s| s.share).collect();
    let counts = apportion(n_ue, &shares);
    let mut labels: Vec<SliceId> = SliceId::ALL
        .iter()
        .zip(&counts)
        .flat_map(|(id, &c)| std::iter::repeat_n(*id, c))
        .collect();
    labels.shuffle(&mut rng);

    let mut active = vec![0u32; n_ue];
    let mut idx: Vec<usize> = (0..n_ue).collect();
    for (h, p) in profile.iter().enumerate() {
        let k = (p * n_ue as f64).round() as usize;
        let (chosen, _) = idx.partial_shuffle(&mut rng, k);
        for &u in chosen.iter() {
            active[u] |= 1 << h;
        }
    }

    let mut ues = Vec::with_capacity(n_ue);
    for u in 0..n_ue {
        let spec = &slices[labels[u].index()];
        let draws = active[u].count_ones().max(1);
        let (mut ul, mut dl) = (0.0, 0.0);
        for _ in 0..draws {
            ul += draw(&mut rng, spec.ul_demand_mbps, cfg.demand_law);
            dl += draw(&mut rng, spec.dl_demand_mbps, cfg.demand_law);
        }
        ues.push(Ue {
            position: positions[u],
            slice: labels[u],
            ul_demand: ul / f64::from(draws) * 1e6,
            dl_demand: dl / f64::from(draws) * 1e6,
            active_hours: active[u],
        });
    }

    let n_ru = ((cfg.ru_sites_per_km2 * area).floor() as usize).max(SliceId::ALL.len());
    let ru_counts = apportion(n_ru, &shares);
    let mut candidate_rus = Vec::with_capacity(n_ru);
    for (spec, &count) in slices.iter().zip(&ru_counts) {
        let kind = cfg.slice_kinds[spec.id.index()];
        let coverage = ru_coverage(spec, kind, &cfg.radio)?;
        let spacing = side_km / (count.max(1) as f64).sqrt();
        for p in lattice(count, side_km) {
            let jx = rng.gen_range(-1.0..=1.0) * cfg.lattice_jitter * spacing;
            let jy = rng.gen_range(-1.0..=1.0) * cfg.lattice_jitter * spacing;
            candidate_rus.push(CandidateRu {
                position: Point::new(
                    (p.x + jx).clamp(0.0, side_km),
                    (p.y + jy).clamp(0.0, side_km),
                ),
                slice: spec.id,
                kind,
                coverage_km: coverage,
                ul_cap: cfg.radio.ul_cap_bps,
                dl_cap: cfg.radio.dl_cap_bps,
                fh_demand_ul: cfg.fh_rate_ul,
                fh_demand_dl: cfg.fh_rate_dl,
                mh_demand_ul: cfg.mh_rate_ul,
                mh_demand_dl: cfg.mh_rate_dl,
                gops: ru_gops(cfg)?,
            });
        }
    }

    let stage1: Vec<Point> = candidate_rus.iter().map(|r| r.position).collect();
    let n_q = ((cfg.stage2_sites_per_km2 * area).round() as usize)
        .max(usize::from(cfg.stage2_sites_per_km2 > 0.0));
    let stage2 = lattice(n_q, side_km);
    let sites = SiteGraph::build(
        &stage1,
        stage1.clone(),
        stage2,
        cfg.stage1_reach_km,
        cfg.stage2_reach_km,
    );

    Ok(Scenario {
        class,
        side_km,
        seed,
        tti: cfg.tti,
        slices,
        density_profile: profile,
        ues,
        candidate_rus,
        sites,
    })
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64), law: DemandLaw) -> f64 {
    match law {
        DemandLaw::UpperEndpoint => hi,
        DemandLaw::Uniform if hi > lo => rng.gen_range(lo..=hi),
        DemandLaw::Uniform => lo,
    }
}

fn place_ues(rng: &mut ChaCha8Rng, n: usize, side: f64, placement: &UePlacement) -> Vec<Point> {
    match *placement {
        UePlacement::Uniform => (0..n)
            .map(|_| Point::new(rng.gen_range(0.0..side), rng.gen_range(0.0..side)))
            .collect(),
        UePlacement::Clustered {
            parents_per_km2,
            radius_km,
        } => {
            let n_parents = ((parents_per_km2 * side * side).round() as usize).max(1);
            let parents: Vec<Point> = (0..n_parents)
                .map(|_| Point::new(rng.gen_range(0.0..side), rng.gen_range(0.0..side)))
                .collect();
            let mut out = Vec::with_capacity(n);
            while out.len() < n {
                let c = parents[rng.gen_range(0..n_parents)];
                let r = radius_km * rng.gen::<f64>().sqrt();
                let t = rng.gen_range(0.0..std::f64::consts::TAU);
                let p = Point::new(c.x + r * t.cos(), c.y + r * t.sin());
                if (0.0..side).contains(&p.x) && (0.0..side).contains(&p.y) {
                    out.push(p);
                }
            }
            out
        }
    }
}

fn ru_coverage(spec: &SliceSpec, kind: RuKind, radio: &RadioSettings) -> Result<f64> {
    let (tx, cap) = match kind {
        RuKind::Macro => (radio.macro_tx_dbm, radio.macro_cap_km),
        RuKind::Small => (radio.small_tx_dbm, radio.small_cap_km),
    };
    let d = models::max_coverage_distance(&CoverageQuery {
        slice_peak_rate: spec.dl_demand_mbps.1.max(spec.ul_demand_mbps.1) * 1e6,
        bandwidth_hz: radio.bandwidth_hz,
        tx_power_dbm: tx,
        noise_dbm_per_hz: radio.noise_dbm_per_hz,
        kind,
        cap_km: cap,
        resolution_km: 1e-3,
    })?;
    Ok(d.max(radio.min_coverage_km.min(cap)))
}

fn ru_gops(cfg: &ScenarioConfig) -> Result<RuGops> {
    let s = models::split_gops(cfg.ru_gops_total, &cfg.split_shares)?;
    let f = cfg.gops_ul_fraction;
    Ok(RuGops {
        ru_ul: s.ru * f,
        ru_dl: s.ru * (1.0 - f),
        du_ul: s.du * f,
        du_dl: s.du * (1.0 - f),
        cu_ul: s.cu * f,
        cu_dl: s.cu * (1.0 - f),
    })
}

/// Distance tables derived from a scenario's site graph. UE to RU distances
/// are computed on demand because the dense table grows with UE count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceTables {
    pub ru_rn1: Vec<Vec<f64>>,
    pub rn1_olt: Vec<f64>,
    pub olt_rn2: Vec<Vec<f64>>,
    pub rn2_q: Vec<f64>,
}

pub fn distances(s: &Scenario) -> DistanceTables {
    site_distances(
        &s.candidate_rus
            .iter()
            .map(|r| r.position)
            .collect::<Vec<_>>(),
        &s.sites,
    )
}

pub fn site_distances(rus: &[Point], g: &SiteGraph) -> DistanceTables {
    DistanceTables {
        ru_rn1: rus
            .iter()
            .map(|b| g.stage1_rn.iter().map(|r| b.dist(r)).collect())
            .collect(),
        rn1_olt: g
            .stage1_rn
            .iter()
            .zip(&g.stage1_olt_sites)
            .map(|(r, o)| r.dist(o))
            .collect(),
        olt_rn2: g
            .stage1_olt_sites
            .iter()
            .map(|o| g.stage2_rn.iter().map(|r| o.dist(r)).collect())
            .collect(),
        rn2_q: g
            .stage2_rn
            .iter()
            .zip(&g.stage2_olt_sites)
            .map(|(r, q)| r.dist(q))
            .collect(),
    }
}

pub fn ue_ru_distance(s: &Scenario, u: usize, b: usize) -> f64 {
    s.ues[u].position.dist(&s.candidate_rus[b].position)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apportion_is_exact() {
        assert_eq!(apportion(15, &[0.3, 0.5, 0.2]), vec![5, 7, 3]);
        assert_eq!(apportion(15, &[0.25, 0.25, 0.5]), vec![4, 4, 7]);
        assert_eq!(apportion(1000, &[0.3, 0.5, 0.2]), vec![300, 500, 200]);
        assert_eq!(apportion(0, &[1.0, 1.0]), vec![0, 0]);
    }

    #[test]
    fn lattice_fills_square() {
        let pts = lattice(7, 2.0);
        assert_eq!(pts.len(), 7);
        assert!(pts
            .iter()
            .all(|p| p.x > 0.0 && p.x < 2.0 && p.y > 0.0 && p.y < 2.0));
        assert!(lattice(0, 1.0).is_empty());
    }

    #[test]
    fn distance_basics() {
        let a = Point::new(0.0, 0.0);
        assert_eq!(a.dist(&Point::new(3.0, 4.0)), 5.0);
        assert_eq!(a.dist(&a), 0.0);
    }

    #[test]
    fn side_out_of_range() {
        let cfg = ScenarioConfig::default();
        assert!(generate(AreaClass::Urban, 0.5, 1, &cfg).is_err());
        assert!(generate(AreaClass::Urban, 9.0, 1, &cfg).is_err());
    }

    #[test]
    fn rn_falls_back_to_site_when_nothing_in_reach() {
        let g = SiteGraph::build(
            &[Point::new(100.0, 0.0)],
            vec![Point::new(0.0, 0.0)],
            vec![],
            20.0,
            20.0,
        );
        assert_eq!(g.stage1_rn[0], Point::new(0.0, 0.0));
    }
}
