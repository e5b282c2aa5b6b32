use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::latency::{
    pon_latency_stage1, pon_latency_stage2, processing_latency, stage1_bound, stage2_bound,
};
use super::model::{Direction, P2Model};
use super::plan::DeploymentPlan;
use crate::scenario::SliceId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum P2Family {
    Reach,
    Installation,
    Uniqueness,
    /// Placement flags that disagree with the attachments they qualify.
    Linearization,
    Stage1Latency,
    Stage2Latency,
    Processing,
    Splitter,
    /// Stored fiber lengths differ from the ones implied by the attachments.
    FiberRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanViolation {
    pub family: P2Family,
    pub detail: String,
    pub slack: f64,
}

const TOL: f64 = 1e-12;

fn v(family: P2Family, detail: String, slack: f64) -> PlanViolation {
    PlanViolation {
        family,
        detail,
        slack,
    }
}

pub fn check_plan(model: &P2Model, plan: &DeploymentPlan) -> Vec<PlanViolation> {
    let mut out = Vec::new();
    let n1 = model.n_stage1();
    let n2 = model.n_stage2();
    let nb = model.n_rus();

    let bad_index = plan.y.iter().any(|&(b, o)| b >= nb || o >= n1)
        || plan.z.iter().any(|&(o, q)| o >= n1 || q >= n2)
        || plan.du_at_ru.iter().any(|&b| b >= nb)
        || plan.du_at_olt.iter().any(|&(b, o)| b >= nb || o >= n1)
        || plan.cu_stage1.iter().any(|&(o, _)| o >= n1)
        || plan.cu_stage2.iter().any(|&(o, q, _)| o >= n1 || q >= n2)
        || plan.stage1_installed.iter().any(|&o| o >= n1)
        || plan.stage2_installed.iter().any(|&q| q >= n2);
    if bad_index {
        out.push(v(
            P2Family::Installation,
            "index out of range".into(),
            f64::NEG_INFINITY,
        ));
        return out;
    }

    for &(b, o) in &plan.y {
        if !model.reach1[b][o] {
            out.push(v(
                P2Family::Reach,
                format!("RU {b} to OLT {o}"),
                model.instance.sites.stage1_reach_km - model.path1_km(b, o),
            ));
        }
        if !plan.stage1_installed.contains(&o) {
            out.push(v(
                P2Family::Installation,
                format!("RU {b} on uninstalled OLT {o}"),
                -1.0,
            ));
        }
    }
    for &(o, q) in &plan.z {
        if !model.reach2[o][q] {
            out.push(v(
                P2Family::Reach,
                format!("OLT {o} to Stage-II {q}"),
                model.instance.sites.stage2_reach_km - model.path2_km(o, q),
            ));
        }
        if !plan.stage2_installed.contains(&q) {
            out.push(v(
                P2Family::Installation,
                format!("OLT {o} on uninstalled Stage-II {q}"),
                -1.0,
            ));
        }
        if !plan.stage1_installed.contains(&o) {
            out.push(v(
                P2Family::Installation,
                format!("uninstalled OLT {o} attached to Stage-II {q}"),
                -1.0,
            ));
        }
    }

    for b in 0..nb {
        let n_links = plan.y.range((b, 0)..(b + 1, 0)).count();
        if n_links != 1 {
            out.push(v(
                P2Family::Uniqueness,
                format!("RU {b} has {n_links} Stage-I attachments"),
                1.0 - n_links as f64,
            ));
        }
        let n_du = usize::from(plan.du_at_ru.contains(&b))
            + plan.du_at_olt.range((b, 0)..(b + 1, 0)).count();
        if n_du != 1 {
            out.push(v(
                P2Family::Uniqueness,
                format!("RU {b} has {n_du} DU placements"),
                1.0 - n_du as f64,
            ));
        }
    }
    for &(b, o) in &plan.du_at_olt {
        if !plan.y.contains(&(b, o)) {
            out.push(v(
                P2Family::Linearization,
                format!("DU of RU {b} at OLT {o} without the attachment"),
                -1.0,
            ));
        }
    }

    let mut slices_at: BTreeMap<usize, Vec<SliceId>> = BTreeMap::new();
    for &(b, o) in &plan.y {
        let e = slices_at.entry(o).or_default();
        if !e.contains(&model.slice_of(b)) {
            e.push(model.slice_of(b));
        }
    }
    for (&o, slices) in &slices_at {
        for &s in slices {
            let n = usize::from(plan.cu_stage1.contains(&(o, s)))
                + plan
                    .cu_stage2
                    .iter()
                    .filter(|&&(oo, _, ss)| oo == o && ss == s)
                    .count();
            if n != 1 {
                out.push(v(
                    P2Family::Uniqueness,
                    format!("{s} CU of OLT {o} placed {n} times"),
                    1.0 - n as f64,
                ));
            }
        }
        let n_up = plan.z.range((o, 0)..(o + 1, 0)).count();
        if n_up > 1 {
            out.push(v(
                P2Family::Uniqueness,
                format!("OLT {o} attached to {n_up} Stage-II OLTs"),
                1.0 - n_up as f64,
            ));
        }
    }
    for &(o, _) in &plan.cu_stage1 {
        if !plan.stage1_installed.contains(&o) {
            out.push(v(
                P2Family::Linearization,
                format!("CU at uninstalled OLT {o}"),
                -1.0,
            ));
        }
    }
    for &(o, q, s) in &plan.cu_stage2 {
        if !plan.z.contains(&(o, q)) {
            out.push(v(
                P2Family::Linearization,
                format!("{s} CU of OLT {o} at Stage-II {q} without the attachment"),
                -1.0,
            ));
        }
    }

    for &(b, o) in &plan.y {
        let bound = stage1_bound(model, plan, b, o);
        for d in Direction::BOTH {
            let t = pon_latency_stage1(model, plan, b, o, d);
            if t > bound * (1.0 + TOL) {
                out.push(v(
                    P2Family::Stage1Latency,
                    format!("RU {b} at OLT {o} {d:?}"),
                    bound - t,
                ));
            }
        }
    }
    for &(o, q) in &plan.z {
        let bound = stage2_bound(model, plan, o, q);
        for d in Direction::BOTH {
            let t = pon_latency_stage2(model, plan, o, q, d);
            if t > bound * (1.0 + TOL) {
                out.push(v(
                    P2Family::Stage2Latency,
                    format!("OLT {o} at Stage-II {q} {d:?}"),
                    bound - t,
                ));
            }
        }
    }
    for &(b, _) in &plan.y {
        let bound = model.processing_bound(b);
        for d in Direction::BOTH {
            let r = processing_latency(model, plan, b, d);
            if r > bound * (1.0 + TOL) {
                out.push(v(P2Family::Processing, format!("RU {b} {d:?}"), bound - r));
            }
        }
    }

    if let Some(cap) = model.config.splitter_cap {
        let mut per_o: BTreeMap<usize, usize> = BTreeMap::new();
        for &(_, o) in &plan.y {
            *per_o.entry(o).or_default() += 1;
        }
        let mut per_q: BTreeMap<usize, usize> = BTreeMap::new();
        for &(_, q) in &plan.z {
            *per_q.entry(q).or_default() += 1;
        }
        for (name, map) in [("OLT", per_o), ("Stage-II", per_q)] {
            for (k, n) in map {
                if n > cap {
                    out.push(v(
                        P2Family::Splitter,
                        format!("{name} {k} serves {n} ONUs"),
                        cap as f64 - n as f64,
                    ));
                }
            }
        }
    }

    let (f1, f2) = plan.recompute_fiber(model);
    for (stored, fresh, name) in [
        (&plan.fiber_stage1_km, &f1, "Stage-I"),
        (&plan.fiber_stage2_km, &f2, "Stage-II"),
    ] {
        if stored.len() != fresh.len()
            || stored
                .iter()
                .zip(fresh)
                .any(|((a, x), (b, y))| a != b || (x - y).abs() > 1e-9)
        {
            out.push(v(
                P2Family::FiberRecord,
                format!("{name} fiber lengths are stale"),
                0.0,
            ));
        }
    }
    out
}
