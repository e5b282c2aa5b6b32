use rayon::prelude::*;

use super::{
    ExperimentConfig, LagrangianSummary, OracleRecord, OracleStage, ResultBundle, RunRecord,
    RunStatus, ScalingRow, SliceLatency, SolverChoice, TraceRow, Variant,
};
use crate::assoc::{build_p1, check_feasible, solve_exact, Assignment, ExactLimits, P1Model};
use crate::cost::{
    price_otn, price_plan, savings, stage2_scaling, CostBreakdown, OtnConfig, OtnDesign,
};
use crate::deploy::{
    check_plan, ensure_reachable, greedy_deploy, solve_p2_exact_small, theorem2_factor,
    DeployConfig, DeployInstance, DeploymentPlan, DuSite, P2Limits, P2Model,
};
use crate::error::{Error, Result};
use crate::lagrangian::{run_algorithm1, GapTrace};
use crate::scenario::{generate, AreaClass, Point, Scenario, SliceId, SliceSpec};

const BUDGET_TOL: f64 = 1e-9;

fn staged(stage: &str, instance: &str, e: Error) -> Error {
    match e {
        Error::Infeasible(detail) => Error::Stage {
            stage: stage.into(),
            instance: instance.into(),
            detail,
        },
        other => other,
    }
}

pub(crate) fn case_id(class: AreaClass, side: f64, seed: u64) -> String {
    format!("{}-{}km-s{}", class.name(), side, seed)
}

/// Scenario for one sweep point with the configured budgets applied.
pub fn scenario_for(
    cfg: &ExperimentConfig,
    class: AreaClass,
    side: f64,
    seed: u64,
) -> Result<Scenario> {
    let mut sc = cfg.scenario.clone();
    if let Some(b) = &cfg.budgets {
        let mut slices = sc
            .slices
            .clone()
            .unwrap_or_else(|| SliceSpec::defaults(class));
        b.apply(&mut slices);
        sc.slices = Some(slices);
    }
    generate(class, side, seed, &sc)
}

pub struct AssocOutcome {
    pub model: P1Model,
    pub assignment: Assignment,
    pub trace: Option<GapTrace>,
    pub solver: &'static str,
}

/// Solves P1 and cross-checks the result before handing it on. `Both` runs
/// the heuristic; exact solving at full size only makes sense on tiny inputs.
pub fn associate_stage(
    s: &Scenario,
    cfg: &ExperimentConfig,
    solver: SolverChoice,
) -> Result<AssocOutcome> {
    let id = case_id(s.class, s.side_km, s.seed);
    let model = build_p1(s).map_err(|e| staged("associate", &id, e))?;
    let (assignment, trace, name) = match solver {
        SolverChoice::Exact => {
            let limits = ExactLimits {
                max_nodes: cfg.oracle.max_nodes,
                time_limit: None,
            };
            let r = solve_exact(&model, &limits);
            match r.assignment {
                Some(a) => (a, None, "exact"),
                None => {
                    return Err(staged(
                        "associate",
                        &id,
                        Error::Infeasible(format!("exact solver ended with status {:?}", r.status)),
                    ))
                }
            }
        }
        _ => {
            let r =
                run_algorithm1(&model, &cfg.lagrangian).map_err(|e| staged("associate", &id, e))?;
            (r.assignment, Some(r.trace), "lagrangian")
        }
    };
    let violations = check_feasible(&model, &assignment);
    if let Some(v) = violations.first() {
        return Err(Error::Stage {
            stage: "associate".into(),
            instance: id,
            detail: format!("assignment fails the feasibility check: {v:?}"),
        });
    }
    Ok(AssocOutcome {
        model,
        assignment,
        trace,
        solver: name,
    })
}

/// Greedy front/mid-haul design for the installed RUs, verified by the checker.
pub fn deploy_stage(
    p1: &P1Model,
    assignment: &Assignment,
    s: &Scenario,
    deploy: &DeployConfig,
) -> Result<(P2Model, DeploymentPlan)> {
    let id = case_id(s.class, s.side_km, s.seed);
    let model = P2Model::new(
        DeployInstance::from_assignment(p1, assignment, s),
        deploy.clone(),
    )?;
    ensure_reachable(&model).map_err(|e| staged("deploy", &id, e))?;
    let plan = greedy_deploy(&model).map_err(|e| staged("deploy", &id, e))?;
    let violations = check_plan(&model, &plan);
    if let Some(v) = violations.first() {
        return Err(Error::Stage {
            stage: "deploy".into(),
            instance: id,
            detail: format!("plan fails the constraint check: {v:?}"),
        });
    }
    Ok((model, plan))
}

pub struct PricedPlan {
    pub cost: CostBreakdown,
    pub otn: Option<Result<OtnDesign>>,
}

pub fn price_stage(model: &P2Model, plan: &DeploymentPlan, otn: Option<&OtnConfig>) -> PricedPlan {
    let book = &model.config.prices;
    PricedPlan {
        cost: price_plan(model, plan, book),
        otn: otn.map(|o| price_otn(model, plan, book, o)),
    }
}

fn mean(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        None
    } else {
        Some(v.iter().sum::<f64>() / v.len() as f64)
    }
}

fn max(v: &[f64]) -> Option<f64> {
    v.iter().copied().reduce(f64::max)
}

/// Per-slice latency summary and whether every value is inside its budget.
pub fn latency_summary(model: &P2Model, plan: &DeploymentPlan) -> ([SliceLatency; 3], bool) {
    #[derive(Default)]
    struct Acc {
        rus: usize,
        fh: (Vec<f64>, Vec<f64>),
        mh1: (Vec<f64>, Vec<f64>),
        mh2: (Vec<f64>, Vec<f64>),
        bbu: (Vec<f64>, Vec<f64>),
    }
    let mut acc: [Acc; 3] = Default::default();
    for l in &plan.stage1_links {
        let a = &mut acc[model.slice_of(l.ru).index()];
        a.rus += 1;
        let target = match l.du {
            DuSite::Olt => &mut a.fh,
            DuSite::Ru => &mut a.mh1,
        };
        target.0.push(l.ul);
        target.1.push(l.dl);
        a.bbu.0.push(l.proc_ul);
        a.bbu.1.push(l.proc_dl);
    }
    for l in &plan.stage2_links {
        for b in plan.rus_on(l.olt) {
            let s = model.slice_of(b);
            if plan.cu_site(l.olt, s) == Some(Some(l.q)) {
                let a = &mut acc[s.index()];
                a.mh2.0.push(l.ul);
                a.mh2.1.push(l.dl);
            }
        }
    }
    let mut ok = true;
    let mut out = [SliceLatency::default(); 3];
    for s in SliceId::ALL {
        let a = &acc[s.index()];
        let i = s.index();
        let all_fh: Vec<f64> = a.fh.0.iter().chain(&a.fh.1).copied().collect();
        let all_mh: Vec<f64> = a
            .mh1
            .0
            .iter()
            .chain(&a.mh1.1)
            .chain(&a.mh2.0)
            .chain(&a.mh2.1)
            .copied()
            .collect();
        let all_bbu: Vec<f64> = a.bbu.0.iter().chain(&a.bbu.1).copied().collect();
        let sl = SliceLatency {
            rus: a.rus,
            fh_ul: mean(&a.fh.0),
            fh_dl: mean(&a.fh.1),
            mh1_ul: mean(&a.mh1.0),
            mh1_dl: mean(&a.mh1.1),
            mh2_ul: mean(&a.mh2.0),
            mh2_dl: mean(&a.mh2.1),
            bbu_ul: mean(&a.bbu.0),
            bbu_dl: mean(&a.bbu.1),
            max_fh: max(&all_fh),
            max_mh: max(&all_mh),
            max_bbu: max(&all_bbu),
            fh_budget: model.instance.fh_budget[i],
            mh_budget: model.instance.mh_budget[i],
            bbu_budget: model.instance.bbu_budget[i],
        };
        let within = |v: Option<f64>, b: f64| v.is_none_or(|v| v <= b * (1.0 + BUDGET_TOL));
        ok &= within(sl.max_fh, sl.fh_budget)
            && within(sl.max_mh, sl.mh_budget)
            && within(sl.max_bbu, sl.bbu_budget);
        out[i] = sl;
    }
    (out, ok)
}

#[derive(Default)]
pub struct CaseOutput {
    pub runs: Vec<RunRecord>,
    pub traces: Vec<TraceRow>,
    pub scaling: Vec<ScalingRow>,
    pub oracles: Vec<OracleRecord>,
}

fn status_of(e: &Error) -> RunStatus {
    if e.is_infeasible() {
        RunStatus::Infeasible
    } else {
        RunStatus::Error
    }
}

fn stage_of(e: &Error, default: &str) -> String {
    match e {
        Error::Stage { stage, .. } => stage.clone(),
        _ => default.to_string(),
    }
}

struct RecordBase<'a> {
    cfg: &'a ExperimentConfig,
    hash: &'a str,
    class: AreaClass,
    side: f64,
    seed: u64,
}

impl RecordBase<'_> {
    fn empty(&self, variant: &Variant) -> RunRecord {
        RunRecord {
            run_id: format!(
                "{}-{}",
                case_id(self.class, self.side, self.seed),
                variant.name
            ),
            class: self.class,
            side_km: self.side,
            seed: self.seed,
            variant: variant.name.clone(),
            p1_solver: String::new(),
            p2_solver: "greedy".into(),
            config_hash: self.hash.to_string(),
            status: RunStatus::Ok,
            failed_stage: None,
            detail: None,
            n_ues: 0,
            n_candidate_rus: 0,
            rus: [0; 3],
            rus_total: 0,
            olts_stage1: 0,
            olts_stage2: 0,
            du_at_ru: 0,
            latency: [SliceLatency::default(); 3],
            budgets_met: false,
            cost: None,
            otn: None,
            otn_detail: None,
            savings: None,
            lagrangian: None,
        }
    }

    fn failed(&self, variant: &Variant, stage: &str, e: &Error) -> RunRecord {
        RunRecord {
            status: status_of(e),
            failed_stage: Some(stage_of(e, stage)),
            detail: Some(e.to_string()),
            ..self.empty(variant)
        }
    }
}

/// Runs one (class, side, seed) point through every variant.
pub fn run_case(
    cfg: &ExperimentConfig,
    hash: &str,
    class: AreaClass,
    side: f64,
    seed: u64,
) -> CaseOutput {
    let base = RecordBase {
        cfg,
        hash,
        class,
        side,
        seed,
    };
    let mut out = CaseOutput::default();
    let id = case_id(class, side, seed);
    let s = match scenario_for(cfg, class, side, seed) {
        Ok(s) => s,
        Err(e) => {
            out.runs = cfg
                .variants
                .iter()
                .map(|v| base.failed(v, "generate", &e))
                .collect();
            return out;
        }
    };
    let assoc = match associate_stage(&s, cfg, cfg.p1_solver) {
        Ok(a) => a,
        Err(e) => {
            out.runs = cfg
                .variants
                .iter()
                .map(|v| RunRecord {
                    n_ues: s.ues.len(),
                    n_candidate_rus: s.candidate_rus.len(),
                    ..base.failed(v, "associate", &e)
                })
                .collect();
            return out;
        }
    };
    let lag = assoc.trace.as_ref().map(|t| {
        let last = t.records.last();
        LagrangianSummary {
            iterations: t.records.len(),
            best_lb: last.map_or(0.0, |r| r.best_lb),
            ub: last.map_or(0.0, |r| r.ub),
            gap: t.final_gap(),
            gap_bound: t.final_gap_bound.is_finite().then_some(t.final_gap_bound),
        }
    });
    if let Some(t) = &assoc.trace {
        out.traces = t
            .records
            .iter()
            .map(|r| TraceRow {
                run_id: id.clone(),
                config_hash: hash.to_string(),
                iteration: r.iteration,
                lb: r.lb,
                ub: r.ub,
                lambda: r.lambda,
            })
            .collect();
    }
    if cfg.p1_solver == SolverChoice::Both {
        out.oracles.push(p1_oracle(&base, &s, &assoc));
    }

    let mut rus = [0usize; 3];
    for &b in &assoc.assignment.installed {
        rus[assoc.model.instance.rus[b].slice.index()] += 1;
    }
    for (vi, variant) in cfg.variants.iter().enumerate() {
        let mut rec = RunRecord {
            p1_solver: assoc.solver.into(),
            n_ues: s.ues.len(),
            n_candidate_rus: s.candidate_rus.len(),
            rus,
            rus_total: rus.iter().sum(),
            lagrangian: lag,
            ..base.empty(variant)
        };
        let (model, plan) = match deploy_stage(&assoc.model, &assoc.assignment, &s, &variant.deploy)
        {
            Ok(x) => x,
            Err(e) => {
                out.runs.push(RunRecord {
                    status: status_of(&e),
                    failed_stage: Some(stage_of(&e, "deploy")),
                    detail: Some(e.to_string()),
                    ..rec
                });
                continue;
            }
        };
        rec.olts_stage1 = plan.stage1_installed.len();
        rec.olts_stage2 = plan.stage2_installed.len();
        rec.du_at_ru = plan.du_at_ru.len();
        let (lat, ok) = latency_summary(&model, &plan);
        rec.latency = lat;
        rec.budgets_met = ok;
        let priced = price_stage(&model, &plan, variant.otn.then_some(&cfg.otn));
        rec.cost = Some(priced.cost);
        match priced.otn {
            Some(Ok(d)) => {
                rec.savings = Some(savings(&priced.cost, &d.cost));
                rec.otn = Some(d.cost);
            }
            Some(Err(e)) => rec.otn_detail = Some(e.to_string()),
            None => {}
        }
        if variant.scaling && !cfg.scaling_n.is_empty() {
            for p in stage2_scaling(&model, &cfg.scaling_n) {
                out.scaling.push(ScalingRow {
                    run_id: rec.run_id.clone(),
                    class,
                    side_km: side,
                    seed,
                    variant: variant.name.clone(),
                    config_hash: hash.to_string(),
                    n: p.n,
                    total: p.cost.map(|c| c.total),
                    stage2_olts: p.stage2_olts,
                });
            }
        }
        if vi == 0 && cfg.p2_solver.wants_exact() {
            out.oracles
                .push(p2_oracle(&base, &s, &model, &plan, &variant.deploy));
        }
        out.runs.push(rec);
    }
    out
}

fn nearest(points: &[Point], to: Point, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| {
        points[a]
            .dist(&to)
            .total_cmp(&points[b].dist(&to))
            .then(a.cmp(&b))
    });
    idx.truncate(k);
    idx
}

/// Exact and heuristic association on a neighbourhood of the installed RU
/// closest to the area centre.
fn p1_oracle(base: &RecordBase, s: &Scenario, assoc: &AssocOutcome) -> OracleRecord {
    let lim = base.cfg.oracle;
    let inst = &assoc.model.instance;
    let centre = Point::new(s.side_km / 2.0, s.side_km / 2.0);
    let installed_pos: Vec<Point> = assoc
        .assignment
        .installed
        .iter()
        .map(|&b| inst.rus[b].position)
        .collect();
    let anchor = installed_pos[nearest(&installed_pos, centre, 1)[0]];
    let ru_pos: Vec<Point> = inst.rus.iter().map(|r| r.position).collect();
    let mut rus = nearest(&ru_pos, anchor, lim.p1_max_rus);
    rus.sort_unstable();
    let ue_pos: Vec<Point> = inst.ues.iter().map(|u| u.position).collect();
    let mut ues: Vec<usize> = nearest(&ue_pos, anchor, ue_pos.len())
        .into_iter()
        .filter(|&u| assoc.assignment.ru_of(u).is_some_and(|b| rus.contains(&b)))
        .take(lim.p1_max_ues)
        .collect();
    ues.sort_unstable();
    let mut rec = OracleRecord {
        run_id: case_id(base.class, base.side, base.seed),
        stage: OracleStage::P1,
        config_hash: base.hash.to_string(),
        label: "oracle subsample".into(),
        n_ues: ues.len(),
        n_rus: rus.len(),
        n_stage1: 0,
        n_stage2: 0,
        exact_status: String::new(),
        heuristic_rus: 0,
        exact_rus: None,
        heuristic_olts: 0,
        exact_olts: None,
        heuristic_cost: None,
        exact_cost: None,
        factor_bound: None,
    };
    let sub = match P1Model::new(inst.subset(&ues, &rus)) {
        Ok(m) => m,
        Err(e) => {
            rec.exact_status = format!("error: {e}");
            return rec;
        }
    };
    if let Ok(h) = run_algorithm1(&sub, &base.cfg.lagrangian) {
        rec.heuristic_rus = h.assignment.installed_count();
    }
    let ex = solve_exact(
        &sub,
        &ExactLimits {
            max_nodes: lim.max_nodes,
            time_limit: None,
        },
    );
    rec.exact_status = format!("{:?}", ex.status).to_lowercase();
    rec.exact_rus = ex.assignment.map(|a| a.installed_count());
    rec
}

/// Greedy against exhaustive search on a few RUs and OLT candidates taken
/// from the full plan.
fn p2_oracle(
    base: &RecordBase,
    s: &Scenario,
    model: &P2Model,
    plan: &DeploymentPlan,
    deploy: &DeployConfig,
) -> OracleRecord {
    let lim = base.cfg.oracle;
    let inst = &model.instance;
    let ru_pos: Vec<Point> = inst.rus.iter().map(|r| r.position).collect();
    let anchor_ru = *plan
        .du_at_olt
        .iter()
        .map(|(b, _)| b)
        .chain(&plan.du_at_ru)
        .min()
        .unwrap_or(&0);
    let mut picked = nearest(&ru_pos, ru_pos[anchor_ru], lim.p2_max_rus);
    picked.sort_unstable();
    let ids: Vec<usize> = picked.iter().map(|&b| inst.rus[b].id).collect();
    let sub_inst = DeployInstance::from_ru_ids(&ids, s);
    let c = crate::scenario::centroid(&picked.iter().map(|&b| ru_pos[b]).collect::<Vec<_>>())
        .unwrap_or(ru_pos[anchor_ru]);
    let mut st1 = nearest(&sub_inst.sites.stage1_olt_sites, c, lim.p2_max_stage1);
    st1.sort_unstable();
    let mut st2 = nearest(&sub_inst.sites.stage2_olt_sites, c, lim.p2_max_stage2);
    st2.sort_unstable();
    let sub_inst = sub_inst.restrict_sites(&st1, &st2);
    let mut rec = OracleRecord {
        run_id: case_id(base.class, base.side, base.seed),
        stage: OracleStage::P2,
        config_hash: base.hash.to_string(),
        label: "oracle subsample".into(),
        n_ues: 0,
        n_rus: ids.len(),
        n_stage1: st1.len(),
        n_stage2: st2.len(),
        exact_status: String::new(),
        heuristic_rus: ids.len(),
        exact_rus: Some(ids.len()),
        heuristic_olts: 0,
        exact_olts: None,
        heuristic_cost: None,
        exact_cost: None,
        factor_bound: None,
    };
    let sub = match P2Model::new(sub_inst, deploy.clone())
        .and_then(|m| ensure_reachable(&m).map(|_| m))
    {
        Ok(m) => m,
        Err(e) => {
            rec.exact_status = format!("error: {e}");
            return rec;
        }
    };
    rec.factor_bound = Some(theorem2_factor(&sub));
    if let Ok(p) = greedy_deploy(&sub) {
        rec.heuristic_olts = p.stage1_installed.len() + p.stage2_installed.len();
        rec.heuristic_cost = Some(crate::cost::plan_cost(&sub, &p));
    }
    let ex = solve_p2_exact_small(
        &sub,
        &P2Limits {
            max_nodes: lim.max_nodes,
        },
    );
    rec.exact_status = format!("{:?}", ex.status).to_lowercase();
    rec.exact_olts = ex
        .plan
        .as_ref()
        .map(|p| p.stage1_installed.len() + p.stage2_installed.len());
    rec.exact_cost = ex.cost_cents;
    rec
}

/// Runs every (class, side, seed) point on a worker pool. Output order does
/// not depend on scheduling.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<ResultBundle> {
    cfg.validate()?;
    let hash = cfg.hash();
    let mut jobs = Vec::new();
    for &class in &cfg.classes {
        for &side in &cfg.sides_km {
            for &seed in &cfg.seeds {
                jobs.push((class, side, seed));
            }
        }
    }
    let work = || -> Vec<CaseOutput> {
        jobs.par_iter()
            .map(|&(class, side, seed)| run_case(cfg, &hash, class, side, seed))
            .collect()
    };
    let outputs = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Domain(format!("worker pool: {e}")))?
            .install(work),
        None => work(),
    };
    let mut bundle = ResultBundle {
        config_hash: hash,
        ..Default::default()
    };
    for o in outputs {
        bundle.runs.extend(o.runs);
        bundle.traces.extend(o.traces);
        bundle.scaling.extend(o.scaling);
        bundle.oracles.extend(o.oracles);
    }
    Ok(bundle)
}
