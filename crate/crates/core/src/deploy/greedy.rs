use serde::{Deserialize, Serialize};

use super::latency::{
    pon_latency_stage1, pon_latency_stage2, processing_parts, stage1_bound, stage2_bound,
};
use super::model::{Direction, P2Model};
use super::plan::{DeploymentPlan, DuSite};
use crate::cost::plan_cost;
use crate::error::{Error, Result};
use crate::scenario::SliceId;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedyStats {
    /// Sweeps restarted because an RU could not be placed.
    pub stage1_restarts: usize,
    pub stage2_restarts: usize,
}

const TOL: f64 = 1e-12;

fn within(v: f64, bound: f64) -> bool {
    v <= bound * (1.0 + TOL)
}

#[derive(Clone, Copy, PartialEq)]
enum CuHome {
    Local,
    Remote,
    Unknown,
}

/// Whether the CUs of the RUs on `o` could go to some Stage-II OLT with no
/// other traffic on it: Stage-II latency under the tightest mid-haul budget
/// and the Stage-II CU processing term.
fn remote_cu_possible(model: &P2Model, plan: &DeploymentPlan, o: usize, rus: &[usize]) -> bool {
    let tti = model.instance.tti;
    let budget = rus
        .iter()
        .map(|&b| model.mh_budget_slice(model.slice_of(b)))
        .fold(f64::INFINITY, f64::min);
    let link_ok = (0..model.n_stage2())
        .filter(|&q| model.reach2[o][q])
        .any(|q| {
            Direction::BOTH.iter().all(|&d| {
                let wait = match d {
                    Direction::Ul => model.config.onu_wait_stage2,
                    Direction::Dl => 0.0,
                };
                let load: f64 = rus.iter().map(|&b| model.u(b, d)).sum();
                within(
                    wait + model.instance.constants.fiber_delay(model.path2_km(o, q))
                        + load * tti / model.r_q(d),
                    budget,
                )
            })
        });
    link_ok
        && rus.iter().all(|&b| {
            Direction::BOTH.iter().all(|&d| {
                let cu: f64 = rus.iter().map(|&bb| model.gamma_cu(bb, d)).sum();
                within(
                    processing_parts(model, plan, b, d, false) + cu / model.gc_q(d),
                    model.processing_bound(b),
                )
            })
        })
}

/// Stage-I latency, processing (RU and DU terms, plus the CU term of
/// wherever the CUs must go) and splitter checks for every RU on OLT `o`.
fn stage1_ok(model: &P2Model, plan: &DeploymentPlan, o: usize, cu: CuHome) -> bool {
    let rus = plan.rus_on(o);
    if let Some(cap) = model.config.splitter_cap {
        if rus.len() > cap {
            return false;
        }
    }
    for &b in &rus {
        let bound = stage1_bound(model, plan, b, o);
        for d in Direction::BOTH {
            if !within(pon_latency_stage1(model, plan, b, o, d), bound) {
                return false;
            }
            let mut r = processing_parts(model, plan, b, d, false);
            if cu == CuHome::Local {
                let all: f64 = rus.iter().map(|&bb| model.gamma_cu(bb, d)).sum();
                r += all / model.gc_o(d);
            }
            if !within(r, model.processing_bound(b)) {
                return false;
            }
        }
    }
    cu != CuHome::Remote || remote_cu_possible(model, plan, o, &rus)
}

fn with_ru(plan: &DeploymentPlan, b: usize, o: usize, du: DuSite) -> DeploymentPlan {
    let mut p = plan.clone();
    p.y.insert((b, o));
    p.stage1_installed.insert(o);
    match du {
        DuSite::Ru => {
            p.du_at_ru.insert(b);
        }
        DuSite::Olt => {
            p.du_at_olt.insert((b, o));
        }
    }
    p
}

/// Round-robin over slices: the k-th RU of each slice in turn.
fn sweep_order(model: &P2Model) -> Vec<usize> {
    let mut per: [Vec<usize>; 3] = Default::default();
    for b in 0..model.n_rus() {
        per[model.slice_of(b).index()].push(b);
    }
    let longest = per.iter().map(Vec::len).max().unwrap_or(0);
    let mut order = Vec::with_capacity(model.n_rus());
    for k in 0..longest {
        for list in &per {
            if let Some(&b) = list.get(k) {
                order.push(b);
            }
        }
    }
    order
}

/// Next Stage-I OLT: highest PON rate, then fewest unreachable and smallest
/// total fiber path to the RUs still unplaced.
fn next_stage1(model: &P2Model, open: &[usize], unplaced: &[usize]) -> Option<usize> {
    (0..model.n_stage1())
        .filter(|o| !open.contains(o))
        .map(|o| {
            let unreachable = unplaced.iter().filter(|&&b| !model.reach1[b][o]).count();
            let dist: f64 = unplaced
                .iter()
                .filter(|&&b| model.reach1[b][o])
                .map(|&b| model.path1_km(b, o))
                .sum();
            (o, unreachable, dist)
        })
        .min_by(|a, b| {
            a.1.cmp(&b.1)
                .then(a.2.partial_cmp(&b.2).unwrap())
                .then(a.0.cmp(&b.0))
        })
        .map(|(o, _, _)| o)
}

fn next_stage2(model: &P2Model, open: &[usize], pending: &[usize]) -> Option<usize> {
    (0..model.n_stage2())
        .filter(|q| !open.contains(q))
        .map(|q| {
            let unreachable = pending.iter().filter(|&&o| !model.reach2[o][q]).count();
            let dist: f64 = pending
                .iter()
                .filter(|&&o| model.reach2[o][q])
                .map(|&o| model.path2_km(o, q))
                .sum();
            (q, unreachable, dist)
        })
        .min_by(|a, b| {
            a.1.cmp(&b.1)
                .then(a.2.partial_cmp(&b.2).unwrap())
                .then(a.0.cmp(&b.0))
        })
        .map(|(q, _, _)| q)
}

pub fn greedy_deploy(model: &P2Model) -> Result<DeploymentPlan> {
    greedy_deploy_with_stats(model).map(|(p, _)| p)
}

pub fn greedy_deploy_with_stats(model: &P2Model) -> Result<(DeploymentPlan, GreedyStats)> {
    let mut stats = GreedyStats {
        stage1_restarts: 0,
        stage2_restarts: 0,
    };
    if model.n_rus() == 0 {
        return Ok((DeploymentPlan::default(), stats));
    }
    let order = sweep_order(model);
    let cu_home = if model.gc_o(Direction::Ul) > 0.0 && model.gc_o(Direction::Dl) > 0.0 {
        CuHome::Local
    } else if model.config.stage2_enabled && model.n_stage2() > 0 {
        CuHome::Remote
    } else {
        CuHome::Unknown
    };
    // All RUs share one remaining set at the start, so every Stage-I site is
    // ranked against the full RU list; PON rates are uniform across sites.
    let mut open =
        vec![next_stage1(model, &[], &order)
            .ok_or_else(|| stage1_fail("no Stage-I OLT candidates"))?];
    let plan = loop {
        match stage1_pass(model, &open, &order, cu_home) {
            Ok(plan) => break plan,
            Err(i) => {
                let unplaced = &order[i..];
                match next_stage1(model, &open, unplaced) {
                    Some(o) => {
                        open.push(o);
                        stats.stage1_restarts += 1;
                    }
                    None => {
                        return Err(stage1_fail(&format!(
                            "RU {} cannot be placed with every OLT open",
                            order[i]
                        )))
                    }
                }
            }
        }
    };
    let mut plan = stage2(model, plan, &mut stats)?;
    plan.finalize(model);
    Ok((plan, stats))
}

/// One sweep over `order` with the given OLTs open. On failure returns the
/// position of the first RU that could not be placed.
fn stage1_pass(
    model: &P2Model,
    open: &[usize],
    order: &[usize],
    cu_home: CuHome,
) -> std::result::Result<DeploymentPlan, usize> {
    let mut plan = DeploymentPlan::default();
    for (i, &b) in order.iter().enumerate() {
        let mut olts: Vec<usize> = open
            .iter()
            .copied()
            .filter(|&o| model.reach1[b][o])
            .collect();
        olts.sort_by(|&x, &y| {
            model
                .path1_km(b, x)
                .partial_cmp(&model.path1_km(b, y))
                .unwrap()
                .then(x.cmp(&y))
        });
        let mut placed = false;
        for o in olts {
            let mut best: Option<(i64, DeploymentPlan)> = None;
            // Case-2 first so that it wins ties.
            for du in [DuSite::Olt, DuSite::Ru] {
                let allowed = match du {
                    DuSite::Olt => model.du_allowed_at_olt(),
                    DuSite::Ru => model.du_allowed_at_ru(),
                };
                if !allowed {
                    continue;
                }
                let cand = with_ru(&plan, b, o, du);
                if !stage1_ok(model, &cand, o, cu_home) {
                    continue;
                }
                let cost = plan_cost(model, &cand);
                if best.as_ref().is_none_or(|(c, _)| cost < *c) {
                    best = Some((cost, cand));
                }
            }
            if let Some((_, cand)) = best {
                plan = cand;
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(i);
        }
    }
    Ok(plan)
}

fn stage1_fail(detail: &str) -> Error {
    Error::Infeasible(format!("Stage-I: {detail}"))
}

fn stage2_fail(detail: String) -> Error {
    Error::Infeasible(format!("Stage-II: {detail}"))
}

/// Processing of every RU whose CU shares a server with the CUs at `o`/`q`
/// and latency of every Stage-II link into `q`.
fn cu_ok(model: &P2Model, plan: &DeploymentPlan, o: usize, q: Option<usize>) -> bool {
    let mut rus = plan.rus_on(o);
    if let Some(q) = q {
        if let Some(cap) = model.config.splitter_cap {
            if plan.olts_on(q).len() > cap {
                return false;
            }
        }
        for oo in plan.olts_on(q) {
            let bound = stage2_bound(model, plan, oo, q);
            for d in Direction::BOTH {
                if !within(pon_latency_stage2(model, plan, oo, q, d), bound) {
                    return false;
                }
            }
            if oo != o {
                rus.extend(plan.rus_on(oo));
            }
        }
    }
    rus.iter().all(|&b| {
        Direction::BOTH.iter().all(|&d| {
            within(
                super::latency::processing_latency(model, plan, b, d),
                model.processing_bound(b),
            )
        })
    })
}

/// CU placement for every slice at `o`: on o's own server where it fits,
/// otherwise on one Stage-II OLT shared by all of o's remote slices. Open
/// Stage-II OLTs are tried nearest first.
fn place_cus(
    model: &P2Model,
    plan: &DeploymentPlan,
    o: usize,
    slices: &[SliceId],
    open_q: &[usize],
) -> Option<DeploymentPlan> {
    let mut local = plan.clone();
    let mut remote = Vec::new();
    for &s in slices {
        let mut cand = local.clone();
        cand.cu_stage1.insert((o, s));
        if cu_ok(model, &cand, o, None) {
            local = cand;
        } else {
            remote.push(s);
        }
    }
    if remote.is_empty() {
        return Some(local);
    }
    let mut qs: Vec<usize> = open_q
        .iter()
        .copied()
        .filter(|&q| model.reach2[o][q])
        .collect();
    qs.sort_by(|&a, &b| {
        model
            .path2_km(o, a)
            .partial_cmp(&model.path2_km(o, b))
            .unwrap()
            .then(a.cmp(&b))
    });
    qs.into_iter().find_map(|q| {
        let mut cand = local.clone();
        cand.z.insert((o, q));
        cand.stage2_installed.insert(q);
        for &s in &remote {
            cand.cu_stage2.insert((o, q, s));
        }
        cu_ok(model, &cand, o, Some(q)).then_some(cand)
    })
}

fn stage2(
    model: &P2Model,
    base: DeploymentPlan,
    stats: &mut GreedyStats,
) -> Result<DeploymentPlan> {
    let olts: Vec<usize> = base
        .y
        .iter()
        .map(|&(_, o)| o)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let slices_at = |plan: &DeploymentPlan, o: usize| -> Vec<SliceId> {
        SliceId::ALL
            .iter()
            .copied()
            .filter(|&s| plan.rus_on(o).iter().any(|&b| model.slice_of(b) == s))
            .collect()
    };
    let mut open_q: Vec<usize> = Vec::new();
    loop {
        let mut plan = base.clone();
        let mut failed: Option<usize> = None;
        for (i, &o) in olts.iter().enumerate() {
            match place_cus(model, &plan, o, &slices_at(&plan, o), &open_q) {
                Some(p) => plan = p,
                None => {
                    failed = Some(i);
                    break;
                }
            }
        }
        let Some(i) = failed else {
            return Ok(plan);
        };
        if !model.config.stage2_enabled {
            return Err(stage2_fail(format!(
                "CU of OLT {} does not fit locally and Stage-II is disabled",
                olts[i]
            )));
        }
        match next_stage2(model, &open_q, &olts[i..]) {
            Some(q) => {
                open_q.push(q);
                stats.stage2_restarts += 1;
            }
            None => {
                return Err(stage2_fail(format!(
                    "CU of OLT {} cannot be placed with every Stage-II OLT open",
                    olts[i]
                )));
            }
        }
    }
}
