//! Pricing of TWDM-PON plans, the OTN mesh baseline and the Stage-II
//! wavelength scaling study. Money is kept in integer euro cents.

use std::collections::{BTreeMap, BinaryHeap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deploy::{greedy_deploy, DeploymentPlan, DuSite, P2Model};
use crate::error::{Error, Result};
use crate::scenario::Point;

pub type Cents = i64;

pub fn cents(eur: f64) -> Cents {
    (eur * 100.0).round() as Cents
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OtnDevicePricing {
    /// ROADM and E-switch are priced separately.
    PerDevice,
    /// One price covers the ROADM + E-switch pair.
    PerPair,
}

/// Prices in euros.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriceBook {
    pub olt: f64,
    pub onu: f64,
    pub splitter: f64,
    pub fiber_material_per_km: f64,
    pub fiber_install_per_km: f64,
    pub server_install: f64,
    pub per_gops: f64,
    pub roadm: f64,
    pub eswitch: f64,
    pub otn_pricing: OtnDevicePricing,
}

impl Default for PriceBook {
    fn default() -> Self {
        Self {
            olt: 16000.0,
            onu: 2000.0,
            splitter: 200.0,
            fiber_material_per_km: 100.0,
            fiber_install_per_km: 2500.0,
            server_install: 3800.0,
            per_gops: 1.5,
            roadm: 19200.0,
            eswitch: 19200.0,
            otn_pricing: OtnDevicePricing::PerDevice,
        }
    }
}

impl PriceBook {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("olt", self.olt),
            ("onu", self.onu),
            ("splitter", self.splitter),
            ("fiber_material_per_km", self.fiber_material_per_km),
            ("fiber_install_per_km", self.fiber_install_per_km),
            ("server_install", self.server_install),
            ("per_gops", self.per_gops),
            ("roadm", self.roadm),
            ("eswitch", self.eswitch),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(
                    format!("prices.{name}"),
                    "must be a non-negative amount",
                ));
            }
        }
        Ok(())
    }

    pub fn fiber_per_km(&self) -> f64 {
        self.fiber_material_per_km + self.fiber_install_per_km
    }

    pub fn scaled(&self, k: f64) -> PriceBook {
        PriceBook {
            olt: self.olt * k,
            onu: self.onu * k,
            splitter: self.splitter * k,
            fiber_material_per_km: self.fiber_material_per_km * k,
            fiber_install_per_km: self.fiber_install_per_km * k,
            server_install: self.server_install * k,
            per_gops: self.per_gops * k,
            roadm: self.roadm * k,
            eswitch: self.eswitch * k,
            otn_pricing: self.otn_pricing,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub olt_onu: Cents,
    pub fiber: Cents,
    pub splitters: Cents,
    pub servers_install: Cents,
    pub servers_gops: Cents,
    pub switching: Cents,
    pub total: Cents,
}

impl CostBreakdown {
    fn with_total(mut self) -> Self {
        self.total = self.olt_onu
            + self.fiber
            + self.splitters
            + self.servers_install
            + self.servers_gops
            + self.switching;
        self
    }

    pub fn total_eur(&self) -> f64 {
        self.total as f64 / 100.0
    }
}

/// Server line items shared by the PON and OTN designs.
fn server_items(model: &P2Model, plan: &DeploymentPlan, book: &PriceBook) -> (Cents, Cents) {
    let cfg = &model.config;
    let mut install = 0;
    let mut gops = 0;
    let mut add = |count: usize, capacity: f64| {
        if capacity > 0.0 {
            install += count as Cents * cents(book.server_install);
            gops += count as Cents * cents(book.per_gops * capacity);
        }
    };
    add(plan.du_at_ru.len(), cfg.ru_server_gops);
    add(plan.stage1_installed.len(), cfg.stage1_server_gops);
    add(plan.stage2_installed.len(), cfg.stage2_server_gops);
    (install, gops)
}

/// Itemized price of a plan. Stage-II OLT and OLT-ONU box prices scale with
/// the number of aggregated wavelengths.
pub fn price_plan(model: &P2Model, plan: &DeploymentPlan, book: &PriceBook) -> CostBreakdown {
    let n = model.config.stage2_rate_multiplier;
    let fiber_km: f64 =
        plan.fiber_stage1_km.values().sum::<f64>() + plan.fiber_stage2_km.values().sum::<f64>();
    let (servers_install, servers_gops) = server_items(model, plan, book);
    CostBreakdown {
        olt_onu: plan.stage1_installed.len() as Cents * cents(book.olt)
            + plan.y.len() as Cents * cents(book.onu)
            + plan.stage2_installed.len() as Cents * cents(book.olt * n)
            + plan.z.len() as Cents * cents(book.onu * n),
        fiber: cents(fiber_km * book.fiber_per_km()),
        splitters: (plan.stage1_installed.len() + plan.stage2_installed.len()) as Cents
            * cents(book.splitter),
        servers_install,
        servers_gops,
        switching: 0,
        total: 0,
    }
    .with_total()
}

/// Total cost under the model's own price book.
pub fn plan_cost(model: &P2Model, plan: &DeploymentPlan) -> Cents {
    price_plan(model, plan, &model.config.prices).total
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OtnConfig {
    pub path_capacity_bps: f64,
    /// Each node links to this many nearest neighbours (plus a spanning tree).
    pub neighbors: usize,
    /// E-switch delay added at every hop.
    pub switch_latency: f64,
}

impl Default for OtnConfig {
    fn default() -> Self {
        Self {
            path_capacity_bps: 100e9,
            neighbors: 3,
            switch_latency: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OtnLink {
    pub a: usize,
    pub b: usize,
    pub km: f64,
    pub load_bps: f64,
    pub fibers: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OtnFlow {
    pub src: usize,
    pub dst: usize,
    pub rate_bps: f64,
    pub budget: f64,
    pub latency: f64,
    pub path: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OtnDesign {
    pub nodes: Vec<Point>,
    pub links: Vec<OtnLink>,
    pub flows: Vec<OtnFlow>,
    pub cost: CostBreakdown,
}

fn node_index(nodes: &mut Vec<Point>, p: Point) -> usize {
    if let Some(i) = nodes.iter().position(|n| n.dist(&p) < 1e-9) {
        return i;
    }
    nodes.push(p);
    nodes.len() - 1
}

/// k-nearest-neighbour edges plus a minimum spanning tree, as (a, b) with a < b.
fn candidate_mesh(nodes: &[Point], k: usize) -> Vec<(usize, usize)> {
    let n = nodes.len();
    let mut edges = std::collections::BTreeSet::new();
    for i in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        others.sort_by(|&a, &b| {
            nodes[i]
                .dist(&nodes[a])
                .partial_cmp(&nodes[i].dist(&nodes[b]))
                .unwrap()
                .then(a.cmp(&b))
        });
        for &j in others.iter().take(k) {
            edges.insert((i.min(j), i.max(j)));
        }
    }
    if n > 1 {
        let mut in_tree = vec![false; n];
        let mut best = vec![(f64::INFINITY, usize::MAX); n];
        in_tree[0] = true;
        for j in 1..n {
            best[j] = (nodes[0].dist(&nodes[j]), 0);
        }
        for _ in 1..n {
            let (j, _) = (0..n)
                .filter(|&j| !in_tree[j])
                .map(|j| (j, best[j]))
                .min_by(|a, b| a.1 .0.partial_cmp(&b.1 .0).unwrap().then(a.0.cmp(&b.0)))
                .unwrap();
            in_tree[j] = true;
            let parent = best[j].1;
            edges.insert((j.min(parent), j.max(parent)));
            for t in 0..n {
                if !in_tree[t] {
                    let d = nodes[j].dist(&nodes[t]);
                    if d < best[t].0 {
                        best[t] = (d, j);
                    }
                }
            }
        }
    }
    edges.into_iter().collect()
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .0
            .partial_cmp(&self.0)
            .unwrap()
            .then(other.1.cmp(&self.1))
    }
}

fn shortest_path(
    n: usize,
    adj: &BTreeMap<usize, Vec<(usize, f64)>>,
    hop: &dyn Fn(f64) -> f64,
    s: usize,
    t: usize,
) -> Option<(f64, Vec<usize>)> {
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[s] = 0.0;
    heap.push(HeapItem(0.0, s));
    while let Some(HeapItem(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        if u == t {
            break;
        }
        for &(v, km) in adj.get(&u).map(Vec::as_slice).unwrap_or(&[]) {
            let nd = d + hop(km);
            if nd < dist[v] {
                dist[v] = nd;
                prev[v] = u;
                heap.push(HeapItem(nd, v));
            }
        }
    }
    if !dist[t].is_finite() {
        return None;
    }
    let mut path = vec![t];
    while *path.last().unwrap() != s {
        path.push(prev[*path.last().unwrap()]);
    }
    path.reverse();
    Some((dist[t], path))
}

/// OTN mesh carrying the same front/mid-haul flows as `plan`. Each hop adds
/// fiber delay, one E-switch delay and the flow's serialization time at the
/// path rate; flows whose best mesh route misses the budget get a direct link.
pub fn price_otn(
    model: &P2Model,
    plan: &DeploymentPlan,
    book: &PriceBook,
    otn: &OtnConfig,
) -> Result<OtnDesign> {
    let mut nodes = Vec::new();
    let sites = &model.instance.sites;
    let ru_node: Vec<usize> = (0..model.n_rus())
        .map(|b| node_index(&mut nodes, model.instance.rus[b].position))
        .collect();
    let mut olt_node = BTreeMap::new();
    for &o in &plan.stage1_installed {
        olt_node.insert(o, node_index(&mut nodes, sites.stage1_olt_sites[o]));
    }
    let mut q_node = BTreeMap::new();
    for &q in &plan.stage2_installed {
        q_node.insert(q, node_index(&mut nodes, sites.stage2_olt_sites[q]));
    }

    let tti = model.instance.tti;
    let mut wanted = Vec::new();
    for &(b, o) in &plan.y {
        let s = model.slice_of(b);
        let mh_rate = model.u_ul[b].max(model.u_dl[b]);
        let cu_node = match plan.cu_site(o, s) {
            Some(Some(q)) => q_node[&q],
            _ => olt_node[&o],
        };
        match plan.du_site(b, o) {
            Some(DuSite::Ru) => {
                wanted.push((ru_node[b], cu_node, mh_rate, model.mh_budget_slice(s)))
            }
            _ => {
                wanted.push((
                    ru_node[b],
                    olt_node[&o],
                    model.v_ul[b].max(model.v_dl[b]),
                    model.fh_budget(b),
                ));
                if cu_node != olt_node[&o] {
                    wanted.push((olt_node[&o], cu_node, mh_rate, model.mh_budget_slice(s)));
                }
            }
        }
    }

    let mut edge_km: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (a, b) in candidate_mesh(&nodes, otn.neighbors) {
        edge_km.insert((a, b), nodes[a].dist(&nodes[b]));
    }
    let consts = model.instance.constants;
    let mut flows = Vec::new();
    let mut load: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (src, dst, rate, budget) in wanted {
        let hop = |km: f64| {
            consts.fiber_delay(km) + otn.switch_latency + rate * tti / otn.path_capacity_bps
        };
        if src == dst {
            flows.push(OtnFlow {
                src,
                dst,
                rate_bps: rate,
                budget,
                latency: 0.0,
                path: vec![src],
            });
            continue;
        }
        let mut adj: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
        for (&(a, b), &km) in &edge_km {
            adj.entry(a).or_default().push((b, km));
            adj.entry(b).or_default().push((a, km));
        }
        let routed = shortest_path(nodes.len(), &adj, &hop, src, dst)
            .filter(|(lat, _)| *lat <= budget * (1.0 + 1e-12));
        let (latency, path) = match routed {
            Some(r) => r,
            None => {
                let km = nodes[src].dist(&nodes[dst]);
                let lat = hop(km);
                if lat > budget * (1.0 + 1e-12) {
                    return Err(Error::Infeasible(format!(
                        "OTN flow {src}->{dst} needs {lat:.3e} s on a direct link, budget {budget:.3e} s"
                    )));
                }
                edge_km.insert((src.min(dst), src.max(dst)), km);
                (lat, vec![src, dst])
            }
        };
        for w in path.windows(2) {
            *load.entry((w[0].min(w[1]), w[0].max(w[1]))).or_default() += rate;
        }
        flows.push(OtnFlow {
            src,
            dst,
            rate_bps: rate,
            budget,
            latency,
            path,
        });
    }

    let links: Vec<OtnLink> = load
        .iter()
        .map(|(&(a, b), &l)| OtnLink {
            a,
            b,
            km: edge_km[&(a, b)],
            load_bps: l,
            fibers: ((l / otn.path_capacity_bps) - 1e-12).ceil().max(1.0) as u64,
        })
        .collect();
    let fiber_km: f64 = links.iter().map(|l| l.km * l.fibers as f64).sum();
    let per_node = match book.otn_pricing {
        OtnDevicePricing::PerDevice => cents(book.roadm) + cents(book.eswitch),
        OtnDevicePricing::PerPair => cents(book.roadm),
    };
    let (servers_install, servers_gops) = server_items(model, plan, book);
    let cost = CostBreakdown {
        olt_onu: 0,
        fiber: cents(fiber_km * book.fiber_per_km()),
        splitters: 0,
        servers_install,
        servers_gops,
        switching: nodes.len() as Cents * per_node,
        total: 0,
    }
    .with_total();
    Ok(OtnDesign {
        nodes,
        links,
        flows,
        cost,
    })
}

/// (OTN − PON) / OTN.
pub fn savings(pon: &CostBreakdown, otn: &CostBreakdown) -> f64 {
    (otn.total - pon.total) as f64 / otn.total as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub n: u32,
    pub cost: Option<CostBreakdown>,
    pub stage2_olts: usize,
    pub plan: Option<DeploymentPlan>,
}

/// Re-runs the greedy design with R_q = N·R and Stage-II OLT/ONU prices
/// scaled by N, one point per N.
pub fn stage2_scaling(model: &P2Model, ns: &[u32]) -> Vec<ScalingPoint> {
    ns.par_iter()
        .map(|&n| {
            let mut m = model.clone();
            m.config.stage2_rate_multiplier = f64::from(n);
            match greedy_deploy(&m) {
                Ok(plan) => ScalingPoint {
                    n,
                    cost: Some(price_plan(&m, &plan, &m.config.prices)),
                    stage2_olts: plan.stage2_installed.len(),
                    plan: Some(plan),
                },
                Err(_) => ScalingPoint {
                    n,
                    cost: None,
                    stage2_olts: 0,
                    plan: None,
                },
            }
        })
        .collect()
}
