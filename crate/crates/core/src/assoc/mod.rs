//! UE to RU association: model, exact branch-and-bound, LP relaxation bound
//! and feasibility checking.

mod check;
mod exact;
mod lp;
mod model;

pub use check::{check_feasible, P1Family, Violation};
pub use exact::{solve_exact, ExactLimits, ExactResult, SolveStatus};
pub use lp::{lp_lower_bound, LpBound};
pub use model::{
    build_p1, objective, ota_latency, ru_loads, Assignment, AssocInstance, P1Model, Pair,
    PairLatency, RuSpec, UeSpec,
};
