use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::latency::{
    pon_latency_stage1, pon_latency_stage2, processing_latency, stage1_bound, stage2_bound,
};
use super::model::{Direction, P2Model};
use crate::scenario::SliceId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DuSite {
    Ru,
    Olt,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage1Link {
    pub ru: usize,
    pub olt: usize,
    pub du: DuSite,
    pub ul: f64,
    pub dl: f64,
    pub bound: f64,
    /// Processing latency T_rdc in seconds.
    pub proc_ul: f64,
    pub proc_dl: f64,
    pub proc_bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage2Link {
    pub olt: usize,
    pub q: usize,
    pub ul: f64,
    pub dl: f64,
    pub bound: f64,
}

/// Front/mid-haul design. Indices refer to the RUs and OLT candidates of the
/// model the plan was built for.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DeploymentPlan {
    /// (RU, Stage-I OLT).
    pub y: BTreeSet<(usize, usize)>,
    /// (Stage-I OLT, Stage-II OLT).
    pub z: BTreeSet<(usize, usize)>,
    pub du_at_ru: BTreeSet<usize>,
    /// (RU, Stage-I OLT) hosting that RU's DU.
    pub du_at_olt: BTreeSet<(usize, usize)>,
    pub cu_stage1: BTreeSet<(usize, SliceId)>,
    pub cu_stage2: BTreeSet<(usize, usize, SliceId)>,
    pub stage1_installed: BTreeSet<usize>,
    pub stage2_installed: BTreeSet<usize>,
    pub fiber_stage1_km: BTreeMap<usize, f64>,
    pub fiber_stage2_km: BTreeMap<usize, f64>,
    pub stage1_links: Vec<Stage1Link>,
    pub stage2_links: Vec<Stage2Link>,
}

impl DeploymentPlan {
    pub fn olt_of(&self, b: usize) -> Option<usize> {
        self.y.range((b, 0)..(b + 1, 0)).next().map(|&(_, o)| o)
    }

    pub fn rus_on(&self, o: usize) -> Vec<usize> {
        self.y
            .iter()
            .filter(|&&(_, oo)| oo == o)
            .map(|&(b, _)| b)
            .collect()
    }

    pub fn olts_on(&self, q: usize) -> Vec<usize> {
        self.z
            .iter()
            .filter(|&&(_, qq)| qq == q)
            .map(|&(o, _)| o)
            .collect()
    }

    pub fn stage2_of(&self, o: usize) -> Option<usize> {
        self.z.range((o, 0)..(o + 1, 0)).next().map(|&(_, q)| q)
    }

    pub fn du_site(&self, b: usize, o: usize) -> Option<DuSite> {
        if self.du_at_ru.contains(&b) {
            Some(DuSite::Ru)
        } else if self.du_at_olt.contains(&(b, o)) {
            Some(DuSite::Olt)
        } else {
            None
        }
    }

    /// Where the CU serving slice `s` at OLT `o` runs: `None` for the Stage-I
    /// OLT itself, `Some(q)` for a Stage-II OLT.
    pub fn cu_site(&self, o: usize, s: SliceId) -> Option<Option<usize>> {
        if self.cu_stage1.contains(&(o, s)) {
            return Some(None);
        }
        self.cu_stage2
            .iter()
            .find(|&&(oo, _, ss)| oo == o && ss == s)
            .map(|&(_, q, _)| Some(q))
    }

    pub fn ru_count(&self) -> usize {
        self.y.len()
    }

    /// ρ_o = D_{r_I,o} + Σ_b y·D_{b,r_I} and ρ_q likewise.
    pub fn recompute_fiber(&self, model: &P2Model) -> (BTreeMap<usize, f64>, BTreeMap<usize, f64>) {
        let mut f1 = BTreeMap::new();
        for &o in &self.stage1_installed {
            let mut rho = model.d_rn1_olt[o];
            for &(b, oo) in &self.y {
                if oo == o {
                    rho += model.d_ru_rn1[b][o];
                }
            }
            f1.insert(o, rho);
        }
        let mut f2 = BTreeMap::new();
        for &q in &self.stage2_installed {
            let mut rho = model.d_rn2_q[q];
            for &(o, qq) in &self.z {
                if qq == q {
                    rho += model.d_olt_rn2[o][q];
                }
            }
            f2.insert(q, rho);
        }
        (f1, f2)
    }

    /// Installs exactly the OLTs in use, then fills fiber lengths and the
    /// per-link latency annotations.
    pub fn finalize(&mut self, model: &P2Model) {
        self.stage1_installed = self.y.iter().map(|&(_, o)| o).collect();
        self.stage2_installed = self.z.iter().map(|&(_, q)| q).collect();
        self.annotate(model);
    }

    pub fn annotate(&mut self, model: &P2Model) {
        let (f1, f2) = self.recompute_fiber(model);
        self.fiber_stage1_km = f1;
        self.fiber_stage2_km = f2;
        let tti = model.instance.tti;
        self.stage1_links = self
            .y
            .iter()
            .map(|&(b, o)| Stage1Link {
                ru: b,
                olt: o,
                du: self.du_site(b, o).unwrap_or(DuSite::Olt),
                ul: pon_latency_stage1(model, self, b, o, Direction::Ul),
                dl: pon_latency_stage1(model, self, b, o, Direction::Dl),
                bound: stage1_bound(model, self, b, o),
                proc_ul: processing_latency(model, self, b, Direction::Ul) * tti,
                proc_dl: processing_latency(model, self, b, Direction::Dl) * tti,
                proc_bound: model.processing_bound(b) * tti,
            })
            .collect();
        self.stage2_links = self
            .z
            .iter()
            .map(|&(o, q)| Stage2Link {
                olt: o,
                q,
                ul: pon_latency_stage2(model, self, o, q, Direction::Ul),
                dl: pon_latency_stage2(model, self, o, q, Direction::Dl),
                bound: stage2_bound(model, self, o, q),
            })
            .collect();
    }
}
