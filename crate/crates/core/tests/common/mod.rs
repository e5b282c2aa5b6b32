//! Instance generators and brute-force oracles shared by the integration
//! tests. The oracles recompute latencies and objectives from the raw
//! instance data instead of going through the solver helpers.
#![allow(dead_code)]

use oranplan::assoc::{AssocInstance, P1Model, RuSpec, UeSpec};
use oranplan::cost::plan_cost;
use oranplan::deploy::{
    check_plan, DeployConfig, DeployInstance, DeployRu, DeploymentPlan, DuSite, P2Model,
};
use oranplan::models::PhysicalConstants;
use oranplan::scenario::{generate, AreaClass, Point, RuGops, ScenarioConfig, SiteGraph, SliceId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TTI: f64 = 0.5e-3;
pub const OTA: [f64; 3] = [200e-6, 400e-6, 300e-6];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random association instance in a 0.6 km square. Every RU can carry
/// roughly two to five UEs before the OTA budget of its slice binds.
pub fn random_assoc(r: &mut ChaCha8Rng, n_ues: usize, n_rus: usize) -> AssocInstance {
    let side = 0.6;
    let slices = SliceId::ALL;
    let rus: Vec<RuSpec> = (0..n_rus)
        .map(|b| RuSpec {
            position: Point::new(r.gen_range(0.0..side), r.gen_range(0.0..side)),
            // Cycle the slices so each of the first three RUs serves a
            // different one.
            slice: if b < 3 {
                slices[b % 3]
            } else {
                *slices.choose(r).unwrap()
            },
            coverage_km: r.gen_range(0.5..1.0),
            ul_cap: 1e8,
            dl_cap: 1e8,
        })
        .collect();
    let used: Vec<SliceId> = rus.iter().map(|x| x.slice).collect();
    let ues = (0..n_ues)
        .map(|_| UeSpec {
            position: Point::new(r.gen_range(0.0..side), r.gen_range(0.0..side)),
            slice: *used.choose(r).unwrap(),
            ul_demand: r.gen_range(2e6..1.6e7),
            dl_demand: r.gen_range(2e6..1.6e7),
        })
        .collect();
    AssocInstance {
        tti: TTI,
        ota_budget: OTA,
        ues,
        rus,
        ru_ids: (0..n_rus).collect(),
        ue_ids: (0..n_ues).collect(),
        constants: PhysicalConstants::default(),
    }
}

/// Coverage-dominated instance: RUs spread over a `side` km square with
/// 0.5-1 km coverage and capacities between 2e8 and 2e9 bps, so that which
/// RUs reach which UEs matters more than how much each RU can carry.
pub fn spread_assoc(r: &mut ChaCha8Rng, n_ues: usize, n_rus: usize, side: f64) -> AssocInstance {
    let slices = SliceId::ALL;
    let rus: Vec<RuSpec> = (0..n_rus)
        .map(|b| {
            let cap = 2e8 * 10f64.powf(r.gen_range(0.0..1.0));
            RuSpec {
                position: Point::new(r.gen_range(0.0..side), r.gen_range(0.0..side)),
                slice: if b < 3 {
                    slices[b % 3]
                } else {
                    *slices.choose(r).unwrap()
                },
                coverage_km: r.gen_range(0.5..1.0),
                ul_cap: cap,
                dl_cap: cap,
            }
        })
        .collect();
    let used: Vec<SliceId> = rus.iter().map(|x| x.slice).collect();
    let ues = (0..n_ues)
        .map(|_| UeSpec {
            position: Point::new(r.gen_range(0.0..side), r.gen_range(0.0..side)),
            slice: *used.choose(r).unwrap(),
            ul_demand: r.gen_range(2e6..1.6e7),
            dl_demand: r.gen_range(2e6..1.6e7),
        })
        .collect();
    AssocInstance {
        tti: TTI,
        ota_budget: OTA,
        ues,
        rus,
        ru_ids: (0..n_rus).collect(),
        ue_ids: (0..n_ues).collect(),
        constants: PhysicalConstants::default(),
    }
}

pub fn random_p1(r: &mut ChaCha8Rng, n_ues: usize, n_rus: usize) -> P1Model {
    P1Model::new(random_assoc(r, n_ues, n_rus)).unwrap()
}

fn air(km: f64) -> f64 {
    km * 1e3 / 3e8
}

/// Best attachment found by enumerating every UE-to-RU map.
#[derive(Clone, Debug)]
pub struct BruteP1 {
    pub objective: f64,
    pub installed: usize,
    pub map: Vec<usize>,
}

/// Objective of an attachment map, summed pair by pair:
/// α·|RUs used| + β·Σ_s Σ_{u∈s} Σ_{b∈s} (T^UL_ub + T^DL_ub) with
/// T_ub = x_ub·D_ub/c + Σ_{u'} x_{u'b}·W_{u'}·δ/W_b.
pub fn brute_objective(inst: &AssocInstance, map: &[usize]) -> f64 {
    let alpha = 1.0 / inst.rus.len() as f64;
    let beta = 1.0 / inst.ues.len() as f64;
    let mut used: Vec<usize> = map.to_vec();
    used.sort_unstable();
    used.dedup();
    let mut total = 0.0;
    for (u, ue) in inst.ues.iter().enumerate() {
        for (b, ru) in inst.rus.iter().enumerate() {
            if ru.slice != ue.slice {
                continue;
            }
            let mut load_ul = 0.0;
            let mut load_dl = 0.0;
            for (v, other) in inst.ues.iter().enumerate() {
                if map[v] == b {
                    load_ul += other.ul_demand * inst.tti / ru.ul_cap;
                    load_dl += other.dl_demand * inst.tti / ru.dl_cap;
                }
            }
            let x = if map[u] == b { 1.0 } else { 0.0 };
            let prop = x * air(ue.position.dist(&ru.position));
            total += prop + load_ul + prop + load_dl;
        }
    }
    alpha * used.len() as f64 + beta * total
}

/// Coverage, slice match and both OTA budgets, from raw positions.
pub fn brute_feasible(inst: &AssocInstance, map: &[usize]) -> bool {
    for (u, ue) in inst.ues.iter().enumerate() {
        let ru = &inst.rus[map[u]];
        let d = ue.position.dist(&ru.position);
        if ru.slice != ue.slice || d > ru.coverage_km {
            return false;
        }
        let mut load_ul = 0.0;
        let mut load_dl = 0.0;
        for (v, other) in inst.ues.iter().enumerate() {
            if map[v] == map[u] {
                load_ul += other.ul_demand * inst.tti / ru.ul_cap;
                load_dl += other.dl_demand * inst.tti / ru.dl_cap;
            }
        }
        let budget = inst.ota_budget[ue.slice.index()] * (1.0 + 1e-12);
        if air(d) + load_ul > budget || air(d) + load_dl > budget {
            return false;
        }
    }
    true
}

/// Exhaustive minimum over all |RU|^|UE| attachment maps. Installing an RU
/// nobody uses only adds α, so the installed set is the set of RUs in use.
pub fn brute_p1(inst: &AssocInstance) -> Option<BruteP1> {
    let nu = inst.ues.len();
    let nb = inst.rus.len();
    let mut map = vec![0usize; nu];
    let mut best: Option<BruteP1> = None;
    loop {
        if brute_feasible(inst, &map) {
            let obj = brute_objective(inst, &map);
            if best.as_ref().is_none_or(|b| obj < b.objective) {
                let mut used = map.clone();
                used.sort_unstable();
                used.dedup();
                best = Some(BruteP1 {
                    objective: obj,
                    installed: used.len(),
                    map: map.clone(),
                });
            }
        }
        let mut i = 0;
        while i < nu {
            map[i] += 1;
            if map[i] < nb {
                break;
            }
            map[i] = 0;
            i += 1;
        }
        if i == nu {
            return best;
        }
    }
}

/// Fewest installed RUs over all feasible maps.
pub fn brute_min_rus(inst: &AssocInstance) -> Option<usize> {
    let nu = inst.ues.len();
    let nb = inst.rus.len();
    let mut map = vec![0usize; nu];
    let mut best: Option<usize> = None;
    loop {
        if brute_feasible(inst, &map) {
            let mut used = map.clone();
            used.sort_unstable();
            used.dedup();
            best = Some(best.map_or(used.len(), |b| b.min(used.len())));
        }
        let mut i = 0;
        while i < nu {
            map[i] += 1;
            if map[i] < nb {
                break;
            }
            map[i] = 0;
            i += 1;
        }
        if i == nu {
            return best;
        }
    }
}

/// Small deployment instance cut from a generated scenario: `n_rus` random
/// candidate RUs with `n1` Stage-I and `n2` Stage-II OLT candidates.
pub fn random_p2(seed: u64, n_rus: usize, n1: usize, n2: usize, config: DeployConfig) -> P2Model {
    let mut r = rng(seed);
    let class = *AreaClass::ALL.choose(&mut r).unwrap();
    let cfg = ScenarioConfig {
        stage2_sites_per_km2: 2.0,
        ..ScenarioConfig::default()
    };
    let s = generate(class, 1.0, seed, &cfg).unwrap();
    let mut ids: Vec<usize> = (0..s.candidate_rus.len()).collect();
    ids.shuffle(&mut r);
    ids.truncate(n_rus);
    ids.sort_unstable();
    let inst = DeployInstance::from_ru_ids(&ids, &s);
    let mut st1: Vec<usize> = (0..inst.sites.stage1_olt_sites.len()).collect();
    st1.shuffle(&mut r);
    st1.truncate(n1);
    st1.sort_unstable();
    let mut st2: Vec<usize> = (0..inst.sites.stage2_olt_sites.len()).collect();
    st2.shuffle(&mut r);
    st2.truncate(n2);
    st2.sort_unstable();
    P2Model::new(inst.restrict_sites(&st1, &st2), config).unwrap()
}

/// Cheapest plan passing `check_plan`, by enumerating every RU attachment,
/// DU site and per-OLT CU placement (each slice local or at the OLT's single
/// Stage-II site). Meant for three or four RUs.
pub fn brute_p2(model: &P2Model) -> Option<i64> {
    let nb = model.n_rus();
    let n1 = model.n_stage1();
    let n2 = model.n_stage2();
    let choices: Vec<(usize, DuSite)> = (0..n1)
        .flat_map(|o| [(o, DuSite::Ru), (o, DuSite::Olt)])
        .collect();
    let mut idx = vec![0usize; nb];
    let mut best: Option<i64> = None;
    loop {
        let mut base = DeploymentPlan::default();
        for (b, &i) in idx.iter().enumerate() {
            let (o, du) = choices[i];
            base.y.insert((b, o));
            match du {
                DuSite::Ru => {
                    base.du_at_ru.insert(b);
                }
                DuSite::Olt => {
                    base.du_at_olt.insert((b, o));
                }
            }
        }
        let olts: Vec<usize> = {
            let mut v: Vec<usize> = base.y.iter().map(|&(_, o)| o).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let slices_on: Vec<Vec<SliceId>> = olts
            .iter()
            .map(|&o| {
                let mut v: Vec<SliceId> = base
                    .rus_on(o)
                    .iter()
                    .map(|&b| model.instance.rus[b].slice)
                    .collect();
                v.sort_by_key(|s| s.index());
                v.dedup();
                v
            })
            .collect();
        // Per OLT: option 0 keeps every CU local; otherwise a Stage-II site q
        // and a mask of slices sent there.
        let options: Vec<Vec<(Option<usize>, u32)>> = slices_on
            .iter()
            .map(|sl| {
                let mut v = vec![(None, 0u32)];
                for q in 0..n2 {
                    for mask in 1..(1u32 << sl.len()) {
                        v.push((Some(q), mask));
                    }
                }
                v
            })
            .collect();
        let mut pick = vec![0usize; olts.len()];
        loop {
            let mut plan = base.clone();
            for (k, &o) in olts.iter().enumerate() {
                let (q, mask) = options[k][pick[k]];
                for (j, &s) in slices_on[k].iter().enumerate() {
                    match q {
                        Some(q) if mask & (1 << j) != 0 => {
                            plan.cu_stage2.insert((o, q, s));
                            plan.z.insert((o, q));
                        }
                        _ => {
                            plan.cu_stage1.insert((o, s));
                        }
                    }
                }
            }
            plan.finalize(model);
            if check_plan(model, &plan).is_empty() {
                let c = plan_cost(model, &plan);
                best = Some(best.map_or(c, |b| b.min(c)));
            }
            let mut k = 0;
            while k < pick.len() {
                pick[k] += 1;
                if pick[k] < options[k].len() {
                    break;
                }
                pick[k] = 0;
                k += 1;
            }
            if k == pick.len() {
                break;
            }
        }
        let mut i = 0;
        while i < nb {
            idx[i] += 1;
            if idx[i] < choices.len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
        if i == nb {
            return best;
        }
    }
}

/// Deployment RU with the default split-7.2/split-2 rates and 1800 GOPS split
/// 40/50/10 evenly over UL and DL.
pub fn deploy_ru(id: usize, position: Point, slice: SliceId) -> DeployRu {
    DeployRu {
        id,
        position,
        slice,
        fh_ul: 9.632e9,
        fh_dl: 11.113e9,
        mh_ul: 1.111e9,
        mh_dl: 1.111e9,
        gops: RuGops {
            ru_ul: 360.0,
            ru_dl: 360.0,
            du_ul: 450.0,
            du_dl: 450.0,
            cu_ul: 90.0,
            cu_dl: 90.0,
        },
    }
}

/// Hand-placed deployment instance. Sites are (OLT position, RN position).
pub fn manual_p2(
    rus: Vec<DeployRu>,
    stage1: &[(Point, Point)],
    stage2: &[(Point, Point)],
    config: DeployConfig,
) -> P2Model {
    let inst = DeployInstance {
        tti: TTI,
        fh_budget: [100e-6; 3],
        mh_budget: [100e-6, 500e-6, 1000e-6],
        bbu_budget: [50e-6, 80e-6, 100e-6],
        rus,
        sites: SiteGraph {
            stage1_olt_sites: stage1.iter().map(|s| s.0).collect(),
            stage1_rn: stage1.iter().map(|s| s.1).collect(),
            stage2_olt_sites: stage2.iter().map(|s| s.0).collect(),
            stage2_rn: stage2.iter().map(|s| s.1).collect(),
            stage1_reach_km: 20.0,
            stage2_reach_km: 20.0,
        },
        constants: PhysicalConstants::default(),
    };
    P2Model::new(inst, config).unwrap()
}
