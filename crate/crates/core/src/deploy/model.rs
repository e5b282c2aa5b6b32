use serde::{Deserialize, Serialize};

use crate::assoc::{Assignment, P1Model};
use crate::cost::PriceBook;
use crate::error::{Error, Result};
use crate::models::{burst_frames, EthernetModel, PhysicalConstants};
use crate::scenario::{Point, RuGops, Scenario, SiteGraph, SliceId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Ul,
    Dl,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::Ul, Direction::Dl];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DuPolicy {
    /// Cheaper feasible case per RU.
    Auto,
    /// DU always at the Stage-I OLT (Stage-I carries front-haul).
    ForceOlt,
    /// DU always at the RU site (Stage-I carries mid-haul).
    ForceRu,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeployConfig {
    pub pon1_ul: f64,
    pub pon1_dl: f64,
    pub pon2_ul: f64,
    pub pon2_dl: f64,
    /// Stage-II wavelengths aggregated per PON (R_q = N·R).
    pub stage2_rate_multiplier: f64,
    pub onu_wait_stage1: f64,
    pub onu_wait_stage2: f64,
    /// RU hardware capacity H per direction.
    pub ru_hw_gops: f64,
    /// Total server capacity at an RU site (G_b).
    pub ru_server_gops: f64,
    /// Total server capacity at a Stage-I OLT (G_o).
    pub stage1_server_gops: f64,
    /// Part of G_o reserved for DUs; the rest hosts CUs.
    pub stage1_du_fraction: f64,
    /// Total server capacity at a Stage-II OLT (G_q).
    pub stage2_server_gops: f64,
    /// Share of each server's capacity given to the uplink.
    pub ul_share: f64,
    pub splitter_cap: Option<usize>,
    /// Front/mid-haul rates are carried in Ethernet bursts when set.
    pub ethernet: Option<EthernetModel>,
    pub stage2_enabled: bool,
    pub du_policy: DuPolicy,
    pub prices: PriceBook,
}

impl Default for DeployConfig {
    fn default() -> Self {
        Self {
            pon1_ul: 100e9,
            pon1_dl: 100e9,
            pon2_ul: 100e9,
            pon2_dl: 100e9,
            stage2_rate_multiplier: 1.0,
            onu_wait_stage1: 5e-6,
            onu_wait_stage2: 5e-6,
            ru_hw_gops: 2e4,
            ru_server_gops: 1e5,
            stage1_server_gops: 1e5,
            stage1_du_fraction: 5.0 / 6.0,
            stage2_server_gops: 1e5,
            ul_share: 0.5,
            splitter_cap: Some(64),
            ethernet: Some(EthernetModel::default()),
            stage2_enabled: true,
            du_policy: DuPolicy::Auto,
            prices: PriceBook::default(),
        }
    }
}

impl DeployConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pon1_ul", self.pon1_ul),
            ("pon1_dl", self.pon1_dl),
            ("pon2_ul", self.pon2_ul),
            ("pon2_dl", self.pon2_dl),
            ("stage2_rate_multiplier", self.stage2_rate_multiplier),
            ("ru_hw_gops", self.ru_hw_gops),
        ] {
            if !(v > 0.0) {
                return Err(Error::param(name, "must be positive"));
            }
        }
        for (name, v) in [
            ("onu_wait_stage1", self.onu_wait_stage1),
            ("onu_wait_stage2", self.onu_wait_stage2),
            ("ru_server_gops", self.ru_server_gops),
            ("stage1_server_gops", self.stage1_server_gops),
            ("stage2_server_gops", self.stage2_server_gops),
        ] {
            if !(v >= 0.0) {
                return Err(Error::param(name, "must be non-negative"));
            }
        }
        for (name, v) in [
            ("stage1_du_fraction", self.stage1_du_fraction),
            ("ul_share", self.ul_share),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(name, "must lie in [0, 1]"));
            }
        }
        if let Some(e) = &self.ethernet {
            e.validate()?;
        }
        if self.splitter_cap == Some(0) {
            return Err(Error::param("splitter_cap", "must be at least 1"));
        }
        self.prices.validate()
    }

    pub fn share(&self, d: Direction) -> f64 {
        match d {
            Direction::Ul => self.ul_share,
            Direction::Dl => 1.0 - self.ul_share,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeployRu {
    /// Candidate RU index in the originating scenario.
    pub id: usize,
    pub position: Point,
    pub slice: SliceId,
    pub fh_ul: f64,
    pub fh_dl: f64,
    pub mh_ul: f64,
    pub mh_dl: f64,
    pub gops: RuGops,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeployInstance {
    pub tti: f64,
    pub fh_budget: [f64; 3],
    pub mh_budget: [f64; 3],
    pub bbu_budget: [f64; 3],
    pub rus: Vec<DeployRu>,
    pub sites: SiteGraph,
    #[serde(default)]
    pub constants: PhysicalConstants,
}

impl DeployInstance {
    /// Installed RUs of `assignment`; their own sites are the Stage-I OLT
    /// candidates and the scenario's Stage-II lattice the Stage-II ones.
    pub fn from_assignment(p1: &P1Model, assignment: &Assignment, s: &Scenario) -> DeployInstance {
        let ids = assignment.installed_ids(p1);
        DeployInstance::from_ru_ids(&ids, s)
    }

    pub fn from_ru_ids(ids: &[usize], s: &Scenario) -> DeployInstance {
        let mut fh = [0.0; 3];
        let mut mh = [0.0; 3];
        let mut bbu = [0.0; 3];
        for spec in &s.slices {
            fh[spec.id.index()] = spec.fh_budget;
            mh[spec.id.index()] = spec.mh_budget;
            bbu[spec.id.index()] = spec.bbu_budget;
        }
        let rus: Vec<DeployRu> = ids
            .iter()
            .map(|&id| {
                let r = &s.candidate_rus[id];
                DeployRu {
                    id,
                    position: r.position,
                    slice: r.slice,
                    fh_ul: r.fh_demand_ul,
                    fh_dl: r.fh_demand_dl,
                    mh_ul: r.mh_demand_ul,
                    mh_dl: r.mh_demand_dl,
                    gops: r.gops,
                }
            })
            .collect();
        let positions: Vec<Point> = rus.iter().map(|r| r.position).collect();
        let sites = SiteGraph::build(
            &positions,
            positions.clone(),
            s.sites.stage2_olt_sites.clone(),
            s.sites.stage1_reach_km,
            s.sites.stage2_reach_km,
        );
        DeployInstance {
            tti: s.tti,
            fh_budget: fh,
            mh_budget: mh,
            bbu_budget: bbu,
            rus,
            sites,
            constants: PhysicalConstants::default(),
        }
    }
}

impl DeployInstance {
    /// Keeps only the listed OLT candidates (indices into the current lists).
    pub fn restrict_sites(&self, stage1: &[usize], stage2: &[usize]) -> DeployInstance {
        let g = &self.sites;
        let mut out = self.clone();
        out.sites = SiteGraph {
            stage1_olt_sites: stage1.iter().map(|&o| g.stage1_olt_sites[o]).collect(),
            stage1_rn: stage1.iter().map(|&o| g.stage1_rn[o]).collect(),
            stage2_olt_sites: stage2.iter().map(|&q| g.stage2_olt_sites[q]).collect(),
            stage2_rn: stage2.iter().map(|&q| g.stage2_rn[q]).collect(),
            stage1_reach_km: g.stage1_reach_km,
            stage2_reach_km: g.stage2_reach_km,
        };
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct P2Model {
    pub instance: DeployInstance,
    pub config: DeployConfig,
    /// Front-haul (V) and mid-haul (U) demand per RU after framing.
    pub v_ul: Vec<f64>,
    pub v_dl: Vec<f64>,
    pub u_ul: Vec<f64>,
    pub u_dl: Vec<f64>,
    pub d_ru_rn1: Vec<Vec<f64>>,
    pub d_rn1_olt: Vec<f64>,
    pub d_olt_rn2: Vec<Vec<f64>>,
    pub d_rn2_q: Vec<f64>,
    pub reach1: Vec<Vec<bool>>,
    pub reach2: Vec<Vec<bool>>,
}

impl P2Model {
    pub fn new(instance: DeployInstance, config: DeployConfig) -> Result<P2Model> {
        config.validate()?;
        if !(instance.tti > 0.0) {
            return Err(Error::param("tti", "must be positive"));
        }
        let g = &instance.sites;
        if g.stage1_rn.len() != g.stage1_olt_sites.len()
            || g.stage2_rn.len() != g.stage2_olt_sites.len()
        {
            return Err(Error::param("sites", "every OLT site needs a remote node"));
        }
        let framed = |rate: f64| match &config.ethernet {
            Some(eth) => burst_frames(rate, eth).actual_throughput,
            None => rate,
        };
        let v_ul = instance.rus.iter().map(|r| framed(r.fh_ul)).collect();
        let v_dl = instance.rus.iter().map(|r| framed(r.fh_dl)).collect();
        let u_ul = instance.rus.iter().map(|r| framed(r.mh_ul)).collect();
        let u_dl = instance.rus.iter().map(|r| framed(r.mh_dl)).collect();
        let positions: Vec<Point> = instance.rus.iter().map(|r| r.position).collect();
        let t = crate::scenario::site_distances(&positions, g);
        let reach1 = t
            .ru_rn1
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&t.rn1_olt)
                    .map(|(a, b)| a + b <= g.stage1_reach_km)
                    .collect()
            })
            .collect();
        let reach2 = t
            .olt_rn2
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&t.rn2_q)
                    .map(|(a, b)| a + b <= g.stage2_reach_km)
                    .collect()
            })
            .collect();
        Ok(P2Model {
            v_ul,
            v_dl,
            u_ul,
            u_dl,
            d_ru_rn1: t.ru_rn1,
            d_rn1_olt: t.rn1_olt,
            d_olt_rn2: t.olt_rn2,
            d_rn2_q: t.rn2_q,
            reach1,
            reach2,
            instance,
            config,
        })
    }

    pub fn n_rus(&self) -> usize {
        self.instance.rus.len()
    }

    pub fn n_stage1(&self) -> usize {
        self.instance.sites.stage1_olt_sites.len()
    }

    pub fn n_stage2(&self) -> usize {
        self.instance.sites.stage2_olt_sites.len()
    }

    pub fn slice_of(&self, b: usize) -> SliceId {
        self.instance.rus[b].slice
    }

    pub fn v(&self, b: usize, d: Direction) -> f64 {
        match d {
            Direction::Ul => self.v_ul[b],
            Direction::Dl => self.v_dl[b],
        }
    }

    pub fn u(&self, b: usize, d: Direction) -> f64 {
        match d {
            Direction::Ul => self.u_ul[b],
            Direction::Dl => self.u_dl[b],
        }
    }

    pub fn r_o(&self, d: Direction) -> f64 {
        match d {
            Direction::Ul => self.config.pon1_ul,
            Direction::Dl => self.config.pon1_dl,
        }
    }

    pub fn r_q(&self, d: Direction) -> f64 {
        self.config.stage2_rate_multiplier
            * match d {
                Direction::Ul => self.config.pon2_ul,
                Direction::Dl => self.config.pon2_dl,
            }
    }

    pub fn h(&self, _d: Direction) -> f64 {
        self.config.ru_hw_gops
    }

    pub fn gd_b(&self, d: Direction) -> f64 {
        self.config.ru_server_gops * self.config.share(d)
    }

    pub fn gd_o(&self, d: Direction) -> f64 {
        self.config.stage1_server_gops * self.config.stage1_du_fraction * self.config.share(d)
    }

    pub fn gc_o(&self, d: Direction) -> f64 {
        self.config.stage1_server_gops
            * (1.0 - self.config.stage1_du_fraction)
            * self.config.share(d)
    }

    pub fn gc_q(&self, d: Direction) -> f64 {
        self.config.stage2_server_gops * self.config.share(d)
    }

    pub fn eta(&self, b: usize, d: Direction) -> f64 {
        let g = &self.instance.rus[b].gops;
        match d {
            Direction::Ul => g.ru_ul,
            Direction::Dl => g.ru_dl,
        }
    }

    pub fn gamma_du(&self, b: usize, d: Direction) -> f64 {
        let g = &self.instance.rus[b].gops;
        match d {
            Direction::Ul => g.du_ul,
            Direction::Dl => g.du_dl,
        }
    }

    pub fn gamma_cu(&self, b: usize, d: Direction) -> f64 {
        let g = &self.instance.rus[b].gops;
        match d {
            Direction::Ul => g.cu_ul,
            Direction::Dl => g.cu_dl,
        }
    }

    /// D_{b,r_I} + D_{r_I,o}.
    pub fn path1_km(&self, b: usize, o: usize) -> f64 {
        self.d_ru_rn1[b][o] + self.d_rn1_olt[o]
    }

    /// D_{o,r_II} + D_{r_II,q}.
    pub fn path2_km(&self, o: usize, q: usize) -> f64 {
        self.d_olt_rn2[o][q] + self.d_rn2_q[q]
    }

    pub fn fh_budget(&self, b: usize) -> f64 {
        self.instance.fh_budget[self.slice_of(b).index()]
    }

    pub fn mh_budget_slice(&self, s: SliceId) -> f64 {
        self.instance.mh_budget[s.index()]
    }

    pub fn processing_bound(&self, b: usize) -> f64 {
        self.instance.bbu_budget[self.slice_of(b).index()] / self.instance.tti
    }

    pub fn du_allowed_at_ru(&self) -> bool {
        self.config.du_policy != DuPolicy::ForceOlt
    }

    pub fn du_allowed_at_olt(&self) -> bool {
        self.config.du_policy != DuPolicy::ForceRu
    }
}

pub fn build_p2(
    p1: &P1Model,
    assignment: &Assignment,
    s: &Scenario,
    config: &DeployConfig,
) -> Result<P2Model> {
    let model = P2Model::new(
        DeployInstance::from_assignment(p1, assignment, s),
        config.clone(),
    )?;
    ensure_reachable(&model)?;
    Ok(model)
}

pub fn ensure_reachable(model: &P2Model) -> Result<()> {
    for b in 0..model.n_rus() {
        if !model.reach1[b].iter().any(|&r| r) {
            return Err(Error::Infeasible(format!(
                "RU {} is beyond reach of every Stage-I OLT candidate",
                model.instance.rus[b].id
            )));
        }
    }
    Ok(())
}
