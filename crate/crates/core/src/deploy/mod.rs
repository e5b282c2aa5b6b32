//! Front/mid-haul TWDM-PON design with DU/CU placement: model, latency
//! formulas, greedy heuristic, small exact solver and plan checker.

mod check;
mod exact;
mod greedy;
mod latency;
mod model;
mod plan;

pub use check::{check_plan, P2Family, PlanViolation};
pub use exact::{solve_p2_exact_small, P2ExactResult, P2Limits};
pub use greedy::{greedy_deploy, greedy_deploy_with_stats, GreedyStats};
pub use latency::{
    pon_latency_stage1, pon_latency_stage2, processing_latency, stage1_bound, stage1_load,
    stage2_bound, stage2_load,
};
pub use model::{
    build_p2, ensure_reachable, DeployConfig, DeployInstance, DeployRu, Direction, DuPolicy,
    P2Model,
};
pub use plan::{DeploymentPlan, DuSite, Stage1Link, Stage2Link};

/// ln(O·ΣB): the approximation factor of the greedy heuristic.
pub fn theorem2_factor(model: &P2Model) -> f64 {
    ((model.n_stage1() * model.n_rus()) as f64).ln()
}
