use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::model::{Assignment, P1Model};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    /// Limits hit; the returned incumbent is feasible but not proven optimal.
    Feasible,
    Infeasible,
    /// Limits hit before any incumbent was found.
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactLimits {
    pub max_nodes: u64,
    /// Wall-clock cap. Leaving it unset keeps the result reproducible.
    pub time_limit: Option<Duration>,
}

impl Default for ExactLimits {
    fn default() -> Self {
        Self {
            max_nodes: 20_000_000,
            time_limit: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactResult {
    pub status: SolveStatus,
    pub assignment: Option<Assignment>,
    pub proven_optimal: bool,
    pub nodes: u64,
}

/// Same tolerance as the feasibility checker so the solver never accepts
/// what the checker rejects.
const LATENCY_TOL: f64 = 1e-12;

fn better(v: f64, best: f64) -> bool {
    if !best.is_finite() {
        return v < best;
    }
    v < best - 1e-12 * best.abs().max(1.0)
}

struct Budget {
    nodes: u64,
    max_nodes: u64,
    deadline: Option<Instant>,
    exhausted: bool,
}

impl Budget {
    fn tick(&mut self) -> bool {
        self.nodes += 1;
        if self.nodes >= self.max_nodes {
            self.exhausted = true;
        } else if self.nodes.is_multiple_of(4096) {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    self.exhausted = true;
                }
            }
        }
        !self.exhausted
    }
}

/// Slice subproblem in local indices.
struct SliceProblem {
    alpha: f64,
    budget: f64,
    /// UEs in branching order (global ids).
    ues: Vec<usize>,
    /// RUs that some UE of the slice can reach (global ids).
    rus: Vec<usize>,
    /// cost[i][j], prop[i][j], ul[i][j], dl[i][j]; cost is NaN when ineligible.
    cost: Vec<Vec<f64>>,
    prop: Vec<Vec<f64>>,
    ul: Vec<Vec<f64>>,
    dl: Vec<Vec<f64>>,
    dist: Vec<Vec<f64>>,
    ul_bits: Vec<f64>,
    dl_bits: Vec<f64>,
    ul_cap: Vec<f64>,
    dl_cap: Vec<f64>,
}

struct Incumbent {
    value: f64,
    rus: Vec<usize>,
    map: Vec<usize>,
}

struct Search<'a> {
    p: &'a SliceProblem,
    subset: Vec<usize>,
    in_subset: Vec<bool>,
    /// children[i]: local RUs of the subset eligible for UE i, nearest first.
    children: Vec<Vec<usize>>,
    suffix_min: Vec<f64>,
    suffix_ul_bits: Vec<f64>,
    suffix_dl_bits: Vec<f64>,
    load_ul: Vec<f64>,
    load_dl: Vec<f64>,
    max_prop: Vec<f64>,
    count: Vec<usize>,
    map: Vec<usize>,
    unused: usize,
}

pub fn solve_exact(model: &P1Model, limits: &ExactLimits) -> ExactResult {
    let mut budget = Budget {
        nodes: 0,
        max_nodes: limits.max_nodes.max(1),
        deadline: limits.time_limit.map(|t| Instant::now() + t),
        exhausted: false,
    };
    if !model.uncovered_ues().is_empty() {
        return ExactResult {
            status: SolveStatus::Infeasible,
            assignment: None,
            proven_optimal: false,
            nodes: 0,
        };
    }
    let n = model.n_ues();
    let mut map = vec![usize::MAX; n];
    let mut installed = Vec::new();
    let mut complete = true;
    for s in 0..3 {
        if model.slice_ues[s].is_empty() {
            continue;
        }
        let p = slice_problem(model, s);
        let Some(inc) = solve_slice(&p, &mut budget) else {
            let status = if budget.exhausted {
                SolveStatus::Unknown
            } else {
                SolveStatus::Infeasible
            };
            return ExactResult {
                status,
                assignment: None,
                proven_optimal: false,
                nodes: budget.nodes,
            };
        };
        for (i, &u) in p.ues.iter().enumerate() {
            map[u] = p.rus[inc.map[i]];
        }
        installed.extend(inc.rus.iter().map(|&j| p.rus[j]));
        if budget.exhausted {
            complete = false;
        }
    }
    let assignment = Assignment::new(model, installed, map.iter().map(|&b| vec![b]).collect());
    ExactResult {
        status: if complete {
            SolveStatus::Optimal
        } else {
            SolveStatus::Feasible
        },
        assignment: Some(assignment),
        proven_optimal: complete,
        nodes: budget.nodes,
    }
}

fn slice_problem(model: &P1Model, s: usize) -> SliceProblem {
    let inst = &model.instance;
    let mut ues = model.slice_ues[s].clone();
    ues.sort_by(|&a, &b| {
        let la = inst.ues[a].ul_demand + inst.ues[a].dl_demand;
        let lb = inst.ues[b].ul_demand + inst.ues[b].dl_demand;
        lb.partial_cmp(&la).unwrap().then(a.cmp(&b))
    });
    let rus: Vec<usize> = model.slice_rus[s]
        .iter()
        .copied()
        .filter(|&b| ues.iter().any(|&u| model.pair(u, b).is_some()))
        .collect();
    let m = rus.len();
    let mut cost = vec![vec![f64::NAN; m]; ues.len()];
    let mut prop = vec![vec![0.0; m]; ues.len()];
    let mut ul = vec![vec![0.0; m]; ues.len()];
    let mut dl = vec![vec![0.0; m]; ues.len()];
    let mut dist = vec![vec![0.0; m]; ues.len()];
    for (i, &u) in ues.iter().enumerate() {
        for (j, &b) in rus.iter().enumerate() {
            if let Some(pair) = model.pair(u, b) {
                cost[i][j] = pair.cost;
                prop[i][j] = pair.prop;
                ul[i][j] = pair.ul_coef;
                dl[i][j] = pair.dl_coef;
                dist[i][j] = pair.dist_km;
            }
        }
    }
    SliceProblem {
        alpha: model.alpha,
        budget: inst.ota_budget[s],
        ul_bits: ues
            .iter()
            .map(|&u| inst.ues[u].ul_demand * inst.tti)
            .collect(),
        dl_bits: ues
            .iter()
            .map(|&u| inst.ues[u].dl_demand * inst.tti)
            .collect(),
        ul_cap: rus.iter().map(|&b| inst.rus[b].ul_cap).collect(),
        dl_cap: rus.iter().map(|&b| inst.rus[b].dl_cap).collect(),
        ues,
        rus,
        cost,
        prop,
        ul,
        dl,
        dist,
    }
}

fn solve_slice(p: &SliceProblem, budget: &mut Budget) -> Option<Incumbent> {
    let n = p.ues.len();
    let m = p.rus.len();
    let global_min: f64 = (0..n)
        .map(|i| {
            p.cost[i]
                .iter()
                .copied()
                .filter(|c| !c.is_nan())
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    let mut best: Option<Incumbent> = None;
    for k in 1..=m.min(n) {
        let best_v = best.as_ref().map_or(f64::INFINITY, |b| b.value);
        if !better(p.alpha * k as f64 + global_min, best_v) {
            break;
        }
        let mut combo: Vec<usize> = (0..k).collect();
        loop {
            if budget.exhausted {
                return best;
            }
            try_subset(p, &combo, &mut best, budget);
            if !next_combination(&mut combo, m) {
                break;
            }
        }
    }
    best
}

fn next_combination(c: &mut [usize], m: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < m - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn try_subset(
    p: &SliceProblem,
    subset: &[usize],
    best: &mut Option<Incumbent>,
    budget: &mut Budget,
) {
    let n = p.ues.len();
    let mut in_subset = vec![false; p.rus.len()];
    for &j in subset {
        in_subset[j] = true;
    }
    let mut children = Vec::with_capacity(n);
    let mut mins = Vec::with_capacity(n);
    for i in 0..n {
        let mut ch: Vec<usize> = subset
            .iter()
            .copied()
            .filter(|&j| !p.cost[i][j].is_nan())
            .collect();
        if ch.is_empty() {
            return;
        }
        ch.sort_by(|&a, &b| {
            p.dist[i][a]
                .partial_cmp(&p.dist[i][b])
                .unwrap()
                .then(a.cmp(&b))
        });
        mins.push(
            ch.iter()
                .map(|&j| p.cost[i][j])
                .fold(f64::INFINITY, f64::min),
        );
        children.push(ch);
    }
    let mut suffix_min = vec![0.0; n + 1];
    let mut suffix_ul_bits = vec![0.0; n + 1];
    let mut suffix_dl_bits = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix_min[i] = suffix_min[i + 1] + mins[i];
        suffix_ul_bits[i] = suffix_ul_bits[i + 1] + p.ul_bits[i];
        suffix_dl_bits[i] = suffix_dl_bits[i + 1] + p.dl_bits[i];
    }
    let base = p.alpha * subset.len() as f64;
    let best_v = best.as_ref().map_or(f64::INFINITY, |b| b.value);
    if !better(base + suffix_min[0], best_v) {
        return;
    }
    let m = p.rus.len();
    let mut s = Search {
        p,
        subset: subset.to_vec(),
        in_subset,
        children,
        suffix_min,
        suffix_ul_bits,
        suffix_dl_bits,
        load_ul: vec![0.0; m],
        load_dl: vec![0.0; m],
        max_prop: vec![0.0; m],
        count: vec![0; m],
        map: vec![usize::MAX; n],
        unused: subset.len(),
    };
    s.dfs(0, base, best, budget);
}

impl Search<'_> {
    fn dfs(&mut self, i: usize, cost: f64, best: &mut Option<Incumbent>, budget: &mut Budget) {
        if !budget.tick() {
            return;
        }
        let n = self.p.ues.len();
        if i == n {
            if self.unused == 0 && better(cost, best.as_ref().map_or(f64::INFINITY, |b| b.value)) {
                *best = Some(Incumbent {
                    value: cost,
                    rus: self.subset.clone(),
                    map: self.map.clone(),
                });
            }
            return;
        }
        let best_v = best.as_ref().map_or(f64::INFINITY, |b| b.value);
        if !better(cost + self.suffix_min[i], best_v) || self.unused > n - i {
            return;
        }
        if !self.capacity_left(i) {
            return;
        }
        let p = self.p;
        let limit = p.budget * (1.0 + LATENCY_TOL);
        for c in 0..self.children[i].len() {
            let j = self.children[i][c];
            debug_assert!(self.in_subset[j]);
            let mp = self.max_prop[j].max(p.prop[i][j]);
            let lu = self.load_ul[j] + p.ul[i][j];
            let ld = self.load_dl[j] + p.dl[i][j];
            if mp + lu > limit || mp + ld > limit {
                continue;
            }
            let saved = (self.max_prop[j], self.load_ul[j], self.load_dl[j]);
            self.max_prop[j] = mp;
            self.load_ul[j] = lu;
            self.load_dl[j] = ld;
            self.count[j] += 1;
            if self.count[j] == 1 {
                self.unused -= 1;
            }
            self.map[i] = j;
            self.dfs(i + 1, cost + p.cost[i][j], best, budget);
            self.map[i] = usize::MAX;
            if self.count[j] == 1 {
                self.unused += 1;
            }
            self.count[j] -= 1;
            (self.max_prop[j], self.load_ul[j], self.load_dl[j]) = saved;
            if budget.exhausted {
                return;
            }
        }
    }

    /// Aggregate bits still to place must fit in the subset's remaining room.
    fn capacity_left(&self, i: usize) -> bool {
        let p = self.p;
        let (mut room_ul, mut room_dl) = (0.0, 0.0);
        for &j in &self.subset {
            let slack = p.budget * (1.0 + LATENCY_TOL) - self.max_prop[j];
            room_ul += (slack - self.load_ul[j]).max(0.0) * p.ul_cap[j];
            room_dl += (slack - self.load_dl[j]).max(0.0) * p.dl_cap[j];
        }
        self.suffix_ul_bits[i] <= room_ul * (1.0 + 1e-9)
            && self.suffix_dl_bits[i] <= room_dl * (1.0 + 1e-9)
    }
}
