use super::model::{Direction, P2Model};
use super::plan::{DeploymentPlan, DuSite};

/// Aggregate rate on Stage-I PON `o`: mid-haul U for RUs hosting their own
/// DU, front-haul V for RUs whose DU sits at the OLT.
pub fn stage1_load(model: &P2Model, plan: &DeploymentPlan, o: usize, d: Direction) -> f64 {
    plan.y
        .iter()
        .filter(|&&(_, oo)| oo == o)
        .map(|&(b, _)| match plan.du_site(b, o) {
            Some(DuSite::Ru) => model.u(b, d),
            Some(DuSite::Olt) => model.v(b, d),
            None => 0.0,
        })
        .sum()
}

pub fn pon_latency_stage1(
    model: &P2Model,
    plan: &DeploymentPlan,
    b: usize,
    o: usize,
    d: Direction,
) -> f64 {
    let wait = match d {
        Direction::Ul => model.config.onu_wait_stage1,
        Direction::Dl => 0.0,
    };
    wait + model.instance.constants.fiber_delay(model.path1_km(b, o))
        + stage1_load(model, plan, o, d) * model.instance.tti / model.r_o(d)
}

/// Mid-haul budget when the DU sits at the RU, front-haul budget when it sits
/// at the OLT.
pub fn stage1_bound(model: &P2Model, plan: &DeploymentPlan, b: usize, o: usize) -> f64 {
    match plan.du_site(b, o) {
        Some(DuSite::Ru) => model.mh_budget_slice(model.slice_of(b)),
        _ => model.fh_budget(b),
    }
}

/// Mid-haul rate carried to Stage-II OLT `q`: U of every RU whose slice CU
/// is hosted at q.
pub fn stage2_load(model: &P2Model, plan: &DeploymentPlan, q: usize, d: Direction) -> f64 {
    let mut load = 0.0;
    for &(o, qq, s) in &plan.cu_stage2 {
        if qq != q {
            continue;
        }
        for &(b, oo) in &plan.y {
            if oo == o && model.slice_of(b) == s {
                load += model.u(b, d);
            }
        }
    }
    load
}

/// Both directions use D_{o,r_II} + D_{r_II,q}.
pub fn pon_latency_stage2(
    model: &P2Model,
    plan: &DeploymentPlan,
    o: usize,
    q: usize,
    d: Direction,
) -> f64 {
    let wait = match d {
        Direction::Ul => model.config.onu_wait_stage2,
        Direction::Dl => 0.0,
    };
    wait + model.instance.constants.fiber_delay(model.path2_km(o, q))
        + stage2_load(model, plan, q, d) * model.instance.tti / model.r_q(d)
}

/// Tightest mid-haul budget among the slices whose CU traffic uses the link.
pub fn stage2_bound(model: &P2Model, plan: &DeploymentPlan, o: usize, q: usize) -> f64 {
    plan.cu_stage2
        .iter()
        .filter(|&&(oo, qq, _)| oo == o && qq == q)
        .map(|&(_, _, s)| model.mh_budget_slice(s))
        .fold(f64::INFINITY, f64::min)
}

fn ratio(load: f64, cap: f64) -> f64 {
    if load == 0.0 {
        0.0
    } else if cap > 0.0 {
        load / cap
    } else {
        f64::INFINITY
    }
}

/// RU, DU and CU processing time of RU `b` in units of the TTI.
pub fn processing_latency(model: &P2Model, plan: &DeploymentPlan, b: usize, d: Direction) -> f64 {
    processing_parts(model, plan, b, d, true)
}

/// Same as [`processing_latency`]; with `with_cu` false the CU terms are left
/// out, which gives a lower bound while CU placement is still open.
pub(crate) fn processing_parts(
    model: &P2Model,
    plan: &DeploymentPlan,
    b: usize,
    d: Direction,
    with_cu: bool,
) -> f64 {
    let mut r = ratio(model.eta(b, d), model.h(d));
    let Some(o) = plan.olt_of(b) else {
        return r;
    };
    match plan.du_site(b, o) {
        Some(DuSite::Ru) => r += ratio(model.gamma_du(b, d), model.gd_b(d)),
        Some(DuSite::Olt) => {
            let shared: f64 = plan
                .du_at_olt
                .iter()
                .filter(|&&(_, oo)| oo == o)
                .map(|&(bb, _)| model.gamma_du(bb, d))
                .sum();
            r += ratio(shared, model.gd_o(d));
        }
        None => {}
    }
    if !with_cu {
        return r;
    }
    r + cu_term(model, plan, o, b, d)
}

pub(crate) fn cu_term(
    model: &P2Model,
    plan: &DeploymentPlan,
    o: usize,
    b: usize,
    d: Direction,
) -> f64 {
    match plan.cu_site(o, model.slice_of(b)) {
        Some(None) => ratio(local_cu_load(model, plan, o, d), model.gc_o(d)),
        Some(Some(q)) => ratio(stage2_cu_load(model, plan, q, d), model.gc_q(d)),
        None => 0.0,
    }
}

/// Γ_CU of RUs at `o` whose slice CU runs on o's own server.
pub(crate) fn local_cu_load(model: &P2Model, plan: &DeploymentPlan, o: usize, d: Direction) -> f64 {
    plan.y
        .iter()
        .filter(|&&(bb, oo)| oo == o && plan.cu_stage1.contains(&(o, model.slice_of(bb))))
        .map(|&(bb, _)| model.gamma_cu(bb, d))
        .sum()
}

pub(crate) fn stage2_cu_load(
    model: &P2Model,
    plan: &DeploymentPlan,
    q: usize,
    d: Direction,
) -> f64 {
    let mut load = 0.0;
    for &(o, qq, s) in &plan.cu_stage2 {
        if qq != q {
            continue;
        }
        for &(bb, oo) in &plan.y {
            if oo == o && model.slice_of(bb) == s {
                load += model.gamma_cu(bb, d);
            }
        }
    }
    load
}
