use serde::{Deserialize, Serialize};

use super::latency::{
    pon_latency_stage1, pon_latency_stage2, processing_latency, processing_parts, stage1_bound,
    stage2_bound,
};
use super::model::{Direction, P2Model};
use super::plan::{DeploymentPlan, DuSite};
use crate::assoc::SolveStatus;
use crate::cost::plan_cost;
use crate::scenario::SliceId;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct P2Limits {
    pub max_nodes: u64,
}

impl Default for P2Limits {
    fn default() -> Self {
        Self {
            max_nodes: 20_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct P2ExactResult {
    pub status: SolveStatus,
    pub plan: Option<DeploymentPlan>,
    pub cost_cents: Option<i64>,
    pub proven_optimal: bool,
    pub nodes: u64,
}

const TOL: f64 = 1e-12;

fn within(v: f64, bound: f64) -> bool {
    v <= bound * (1.0 + TOL)
}

struct Search<'a> {
    model: &'a P2Model,
    nodes: u64,
    max_nodes: u64,
    exhausted: bool,
    best: Option<(i64, DeploymentPlan)>,
}

/// Depth-first search over (RU → OLT, DU site) followed by the CU placement of
/// each used Stage-I OLT. Latency loads and plan cost only grow along a
/// branch, so partial violations and partial costs prune soundly.
pub fn solve_p2_exact_small(model: &P2Model, limits: &P2Limits) -> P2ExactResult {
    let mut s = Search {
        model,
        nodes: 0,
        max_nodes: limits.max_nodes.max(1),
        exhausted: false,
        best: None,
    };
    s.assign_ru(0, DeploymentPlan::default());
    let (status, proven) = match (&s.best, s.exhausted) {
        (Some(_), false) => (SolveStatus::Optimal, true),
        (Some(_), true) => (SolveStatus::Feasible, false),
        (None, false) => (SolveStatus::Infeasible, false),
        (None, true) => (SolveStatus::Unknown, false),
    };
    let (cost, plan) = match s.best {
        Some((c, p)) => (Some(c), Some(p)),
        None => (None, None),
    };
    P2ExactResult {
        status,
        plan,
        cost_cents: cost,
        proven_optimal: proven,
        nodes: s.nodes,
    }
}

impl Search<'_> {
    fn tick(&mut self) -> bool {
        self.nodes += 1;
        if self.nodes >= self.max_nodes {
            self.exhausted = true;
        }
        !self.exhausted
    }

    fn worse_than_best(&self, plan: &DeploymentPlan) -> bool {
        match &self.best {
            Some((c, _)) => partial_cost(self.model, plan) >= *c,
            None => false,
        }
    }

    fn assign_ru(&mut self, b: usize, plan: DeploymentPlan) {
        if !self.tick() {
            return;
        }
        let m = self.model;
        if b == m.n_rus() {
            let olts: Vec<usize> = plan
                .y
                .iter()
                .map(|&(_, o)| o)
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .collect();
            self.assign_cu(&olts, 0, plan);
            return;
        }
        let mut olts: Vec<usize> = (0..m.n_stage1()).filter(|&o| m.reach1[b][o]).collect();
        olts.sort_by(|&x, &y| {
            m.path1_km(b, x)
                .partial_cmp(&m.path1_km(b, y))
                .unwrap()
                .then(x.cmp(&y))
        });
        for o in olts {
            for du in [DuSite::Olt, DuSite::Ru] {
                let allowed = match du {
                    DuSite::Olt => m.du_allowed_at_olt(),
                    DuSite::Ru => m.du_allowed_at_ru(),
                };
                if !allowed {
                    continue;
                }
                let mut p = plan.clone();
                p.y.insert((b, o));
                p.stage1_installed.insert(o);
                match du {
                    DuSite::Ru => p.du_at_ru.insert(b),
                    DuSite::Olt => p.du_at_olt.insert((b, o)),
                };
                if !stage1_partial_ok(m, &p, o) || self.worse_than_best(&p) {
                    continue;
                }
                self.assign_ru(b + 1, p);
                if self.exhausted {
                    return;
                }
            }
        }
    }

    fn assign_cu(&mut self, olts: &[usize], i: usize, plan: DeploymentPlan) {
        if !self.tick() {
            return;
        }
        let m = self.model;
        if i == olts.len() {
            let mut done = plan;
            done.finalize(m);
            let cost = plan_cost(m, &done);
            if self.best.as_ref().is_none_or(|(c, _)| cost < *c) {
                self.best = Some((cost, done));
            }
            return;
        }
        let o = olts[i];
        let slices: Vec<SliceId> = SliceId::ALL
            .iter()
            .copied()
            .filter(|&s| plan.rus_on(o).iter().any(|&b| m.slice_of(b) == s))
            .collect();
        let k = slices.len();
        // mask bit set: that slice's CU moves to Stage-II.
        let mut options: Vec<(Option<usize>, u32)> = vec![(None, 0)];
        for q in (0..m.n_stage2()).filter(|&q| m.reach2[o][q]) {
            for mask in 1..(1u32 << k) {
                options.push((Some(q), mask));
            }
        }
        for (q, mask) in options {
            let mut p = plan.clone();
            for (j, &s) in slices.iter().enumerate() {
                if mask & (1 << j) != 0 {
                    p.cu_stage2.insert((o, q.unwrap(), s));
                } else {
                    p.cu_stage1.insert((o, s));
                }
            }
            if let Some(q) = q {
                p.z.insert((o, q));
                p.stage2_installed.insert(q);
            }
            if !cu_partial_ok(m, &p, o, q) || self.worse_than_best(&p) {
                continue;
            }
            self.assign_cu(olts, i + 1, p);
            if self.exhausted {
                return;
            }
        }
    }
}

fn partial_cost(model: &P2Model, plan: &DeploymentPlan) -> i64 {
    let mut p = plan.clone();
    p.finalize(model);
    plan_cost(model, &p)
}

fn stage1_partial_ok(m: &P2Model, plan: &DeploymentPlan, o: usize) -> bool {
    let rus = plan.rus_on(o);
    if m.config.splitter_cap.is_some_and(|cap| rus.len() > cap) {
        return false;
    }
    rus.iter().all(|&b| {
        let bound = stage1_bound(m, plan, b, o);
        Direction::BOTH.iter().all(|&d| {
            within(pon_latency_stage1(m, plan, b, o, d), bound)
                && within(
                    processing_parts(m, plan, b, d, false),
                    m.processing_bound(b),
                )
        })
    })
}

fn cu_partial_ok(m: &P2Model, plan: &DeploymentPlan, o: usize, q: Option<usize>) -> bool {
    let mut rus = plan.rus_on(o);
    if let Some(q) = q {
        let on_q = plan.olts_on(q);
        if m.config.splitter_cap.is_some_and(|cap| on_q.len() > cap) {
            return false;
        }
        for &oo in &on_q {
            let bound = stage2_bound(m, plan, oo, q);
            if !Direction::BOTH
                .iter()
                .all(|&d| within(pon_latency_stage2(m, plan, oo, q, d), bound))
            {
                return false;
            }
            if oo != o {
                rus.extend(plan.rus_on(oo));
            }
        }
    }
    rus.iter().all(|&b| {
        Direction::BOTH
            .iter()
            .all(|&d| within(processing_latency(m, plan, b, d), m.processing_bound(b)))
    })
}
