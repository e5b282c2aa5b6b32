//! Lagrangian relaxation of the association problem: closed-form relaxed
//! subproblem, feasibility repair for upper bounds and subgradient ascent on
//! the per-UE multipliers.

use serde::{Deserialize, Serialize};

use crate::assoc::{Assignment, P1Model};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LagrangianConfig {
    pub max_iterations: usize,
    pub lambda0: f64,
    /// Consecutive non-improving lower bounds before λ is halved.
    pub halve_after: usize,
    /// Relative stopping tolerance on (ub − lb)/max(1, ub).
    pub tolerance: f64,
}

impl Default for LagrangianConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            lambda0: 2.0,
            halve_after: 5,
            tolerance: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct R1Solution {
    pub x: Vec<Vec<usize>>,
    pub theta: Vec<bool>,
    pub lower_bound: f64,
    /// Coefficient evaluations performed, for cost accounting.
    pub pair_evaluations: usize,
}

/// Minimizes the relaxed objective for fixed multipliers. RUs are
/// independent once the single-attachment rows are priced into the objective.
pub fn solve_r1(model: &P1Model, nu: &[f64]) -> R1Solution {
    let n_rus = model.n_rus();
    let mut gain = vec![0.0; n_rus];
    let mut evals = 0;
    for (u, pairs) in model.eligible.iter().enumerate() {
        for p in pairs {
            evals += 1;
            let c = p.cost - nu[u];
            if c < 0.0 {
                gain[p.ru] += c;
            }
        }
    }
    let theta: Vec<bool> = gain.iter().map(|g| model.alpha + g < 0.0).collect();
    let mut x = vec![Vec::new(); model.n_ues()];
    let mut lb: f64 = nu.iter().sum();
    for (b, &open) in theta.iter().enumerate() {
        if open {
            lb += model.alpha + gain[b];
        }
    }
    for (u, pairs) in model.eligible.iter().enumerate() {
        for p in pairs {
            if theta[p.ru] && p.cost - nu[u] < 0.0 {
                x[u].push(p.ru);
            }
        }
    }
    R1Solution {
        x,
        theta,
        lower_bound: lb,
        pair_evaluations: evals,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum RepairOutcome {
    Feasible(Assignment),
    Infeasible { ue: usize },
}

/// Attaches every UE to an open RU that keeps the OTA budgets, preferring the
/// largest latency improvement over its relaxed attachment. UEs are placed in
/// decreasing demand order.
pub fn repair_ub(model: &P1Model, theta: &[bool], x_lb: &[Vec<usize>]) -> RepairOutcome {
    let inst = &model.instance;
    let n_rus = model.n_rus();
    let mut load_ul = vec![0.0; n_rus];
    let mut load_dl = vec![0.0; n_rus];
    let mut max_prop = vec![0.0f64; n_rus];
    let mut order: Vec<usize> = (0..model.n_ues()).collect();
    order.sort_by(|&a, &b| {
        let da = inst.ues[a].ul_demand + inst.ues[a].dl_demand;
        let db = inst.ues[b].ul_demand + inst.ues[b].dl_demand;
        db.partial_cmp(&da).unwrap().then(a.cmp(&b))
    });
    let mut map = vec![usize::MAX; model.n_ues()];
    for &u in &order {
        let budget = model.budget(u);
        let limit = budget * (1.0 + 1e-12);
        let with_u = |b: usize| {
            let p = model.pair(u, b)?;
            let mp = max_prop[b].max(p.prop);
            let ul = load_ul[b] + p.ul_coef;
            let dl = load_dl[b] + p.dl_coef;
            Some((mp + ul, mp + dl, p.prop + ul + p.prop + dl))
        };
        let base = x_lb[u]
            .first()
            .and_then(|&b| with_u(b))
            .map_or(2.0 * budget, |(_, _, total)| total);
        let mut best: Option<(f64, usize)> = None;
        for p in &model.eligible[u] {
            if !theta[p.ru] {
                continue;
            }
            let (worst_ul, worst_dl, total) = with_u(p.ru).expect("eligible pair");
            if worst_ul > limit || worst_dl > limit {
                continue;
            }
            let dw = base - total;
            if best.is_none_or(|(bw, _)| dw > bw) {
                best = Some((dw, p.ru));
            }
        }
        let Some((_, b)) = best else {
            return RepairOutcome::Infeasible { ue: u };
        };
        let p = model.pair(u, b).unwrap();
        max_prop[b] = max_prop[b].max(p.prop);
        load_ul[b] += p.ul_coef;
        load_dl[b] += p.dl_coef;
        map[u] = b;
    }
    RepairOutcome::Feasible(Assignment::from_map(model, &map))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagrangianState {
    pub multipliers: Vec<f64>,
    pub iteration: usize,
    pub lambda: f64,
    pub best_ub: f64,
    pub lb: f64,
    pub best_lb: f64,
    pub incumbent: Option<Assignment>,
    pub stall: usize,
}

impl LagrangianState {
    pub fn new(model: &P1Model, lambda0: f64) -> Self {
        Self {
            multipliers: vec![0.0; model.n_ues()],
            iteration: 0,
            lambda: lambda0,
            best_ub: f64::INFINITY,
            lb: f64::NEG_INFINITY,
            best_lb: f64::NEG_INFINITY,
            incumbent: None,
            stall: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubgradientStep {
    pub multipliers: Vec<f64>,
    pub step_sizes: [f64; 3],
}

/// One multiplier update. Each slice gets its own step from its own
/// subgradient norm; a zero norm gives a zero step.
pub fn subgradient_step(
    model: &P1Model,
    state: &LagrangianState,
    x_lb: &[Vec<usize>],
) -> SubgradientStep {
    let mut nu = state.multipliers.clone();
    let mut steps = [0.0; 3];
    if !state.best_ub.is_finite() {
        return SubgradientStep {
            multipliers: nu,
            step_sizes: steps,
        };
    }
    let numer = state.lambda * (state.best_ub - state.best_lb);
    for (s, ues) in model.slice_ues.iter().enumerate() {
        let denom: f64 = ues
            .iter()
            .map(|&u| (1.0 - x_lb[u].len() as f64).powi(2))
            .sum();
        if denom == 0.0 {
            continue;
        }
        steps[s] = numer / denom;
        for &u in ues {
            nu[u] += steps[s] * (1.0 - x_lb[u].len() as f64);
        }
    }
    SubgradientStep {
        multipliers: nu,
        step_sizes: steps,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub lb: f64,
    pub best_lb: f64,
    /// Best incumbent after this iteration.
    pub ub: f64,
    /// Upper bound from this iteration's repair, when it succeeded.
    pub iteration_ub: Option<f64>,
    pub lambda: f64,
    pub step_sizes: [f64; 3],
    /// λ·(best ub − lb) used by the step, zero when no incumbent existed.
    pub step_term: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GapTrace {
    pub records: Vec<IterationRecord>,
    pub final_gap_bound: f64,
}

impl GapTrace {
    pub fn final_gap(&self) -> f64 {
        self.records
            .last()
            .map_or(f64::INFINITY, |r| r.ub - r.best_lb)
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["iteration", "lb", "ub", "lambda"])?;
        for r in &self.records {
            out.write_record([
                r.iteration.to_string(),
                r.lb.to_string(),
                r.ub.to_string(),
                r.lambda.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// (R² + Σ s²) / ((2/G)·Σ s) over the recorded step terms s.
pub fn gap_bound(trace: &GapTrace, r: f64, g: f64) -> f64 {
    let steps: Vec<f64> = trace
        .records
        .iter()
        .map(|rec| rec.step_term)
        .filter(|s| *s > 0.0)
        .collect();
    let sum: f64 = steps.iter().sum();
    if sum <= 0.0 {
        return f64::INFINITY;
    }
    let sq: f64 = steps.iter().map(|s| s * s).sum();
    (r * r + sq) / ((2.0 / g) * sum)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagrangianResult {
    pub assignment: Assignment,
    pub trace: GapTrace,
    pub multipliers: Vec<f64>,
}

/// Runs the subgradient loop. Before the first iteration the repair is run
/// with every RU open so that an incumbent, and hence a step size, exists.
pub fn run_algorithm1(model: &P1Model, cfg: &LagrangianConfig) -> Result<LagrangianResult> {
    if !(cfg.lambda0 > 0.0 && cfg.lambda0 <= 2.0) {
        return Err(Error::param("lambda0", "must lie in (0, 2]"));
    }
    let mut st = LagrangianState::new(model, cfg.lambda0);
    let empty = vec![Vec::new(); model.n_ues()];
    if let RepairOutcome::Feasible(a) = repair_ub(model, &vec![true; model.n_rus()], &empty) {
        st.best_ub = a.objective;
        st.incumbent = Some(a);
    }
    let mut trace = GapTrace::default();
    for n in 1..=cfg.max_iterations.max(1) {
        st.iteration = n;
        let r1 = solve_r1(model, &st.multipliers);
        st.lb = r1.lower_bound;
        if !st.best_lb.is_finite()
            || r1.lower_bound > st.best_lb + 1e-12 * st.best_lb.abs().max(1.0)
        {
            st.best_lb = r1.lower_bound;
            st.stall = 0;
        } else {
            st.stall += 1;
            if st.stall >= cfg.halve_after {
                st.lambda /= 2.0;
                st.stall = 0;
            }
        }
        let iteration_ub = match repair_ub(model, &r1.theta, &r1.x) {
            RepairOutcome::Feasible(a) => {
                let v = a.objective;
                if v < st.best_ub {
                    st.best_ub = v;
                    st.incumbent = Some(a);
                }
                Some(v)
            }
            RepairOutcome::Infeasible { .. } => None,
        };
        let step = subgradient_step(model, &st, &r1.x);
        let step_term = if st.best_ub.is_finite() {
            st.lambda * (st.best_ub - st.best_lb)
        } else {
            0.0
        };
        trace.records.push(IterationRecord {
            iteration: n,
            lb: st.lb,
            best_lb: st.best_lb,
            ub: st.best_ub,
            iteration_ub,
            lambda: st.lambda,
            step_sizes: step.step_sizes,
            step_term,
        });
        st.multipliers = step.multipliers;
        if st.best_ub.is_finite() && st.best_ub - st.best_lb <= cfg.tolerance * st.best_ub.max(1.0)
        {
            break;
        }
    }
    // Per-slice bound with G = U_s; the loosest slice covers the whole gap.
    let g = model
        .slice_ues
        .iter()
        .map(|u| u.len())
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    trace.final_gap_bound = gap_bound(&trace, 1.0, g);
    match st.incumbent {
        Some(assignment) => Ok(LagrangianResult {
            assignment,
            trace,
            multipliers: st.multipliers,
        }),
        None => Err(Error::Infeasible(
            "no iteration produced a feasible association".into(),
        )),
    }
}
