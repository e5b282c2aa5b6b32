use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::PhysicalConstants;
use crate::scenario::{Point, Scenario, SliceId};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UeSpec {
    pub position: Point,
    pub slice: SliceId,
    pub ul_demand: f64,
    pub dl_demand: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuSpec {
    pub position: Point,
    pub slice: SliceId,
    pub coverage_km: f64,
    pub ul_cap: f64,
    pub dl_cap: f64,
}

/// Self-contained association instance. `ru_ids` maps back to candidate RU
/// indices of the scenario it was cut from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssocInstance {
    pub tti: f64,
    pub ota_budget: [f64; 3],
    pub ues: Vec<UeSpec>,
    pub rus: Vec<RuSpec>,
    pub ru_ids: Vec<usize>,
    pub ue_ids: Vec<usize>,
    #[serde(default)]
    pub constants: PhysicalConstants,
}

impl AssocInstance {
    pub fn from_scenario(s: &Scenario) -> AssocInstance {
        let mut budgets = [0.0; 3];
        for spec in &s.slices {
            budgets[spec.id.index()] = spec.ota_budget;
        }
        AssocInstance {
            tti: s.tti,
            ota_budget: budgets,
            ues: s
                .ues
                .iter()
                .map(|u| UeSpec {
                    position: u.position,
                    slice: u.slice,
                    ul_demand: u.ul_demand,
                    dl_demand: u.dl_demand,
                })
                .collect(),
            rus: s
                .candidate_rus
                .iter()
                .map(|r| RuSpec {
                    position: r.position,
                    slice: r.slice,
                    coverage_km: r.coverage_km,
                    ul_cap: r.ul_cap,
                    dl_cap: r.dl_cap,
                })
                .collect(),
            ru_ids: (0..s.candidate_rus.len()).collect(),
            ue_ids: (0..s.ues.len()).collect(),
            constants: PhysicalConstants::default(),
        }
    }

    /// Keeps the listed UEs and RUs (indices into this instance).
    pub fn subset(&self, ues: &[usize], rus: &[usize]) -> AssocInstance {
        AssocInstance {
            tti: self.tti,
            ota_budget: self.ota_budget,
            ues: ues.iter().map(|&u| self.ues[u]).collect(),
            rus: rus.iter().map(|&b| self.rus[b]).collect(),
            ru_ids: rus.iter().map(|&b| self.ru_ids[b]).collect(),
            ue_ids: ues.iter().map(|&u| self.ue_ids[u]).collect(),
            constants: self.constants,
        }
    }
}

/// One eligible UE-RU pair with its objective coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub ru: usize,
    pub dist_km: f64,
    /// One-way propagation delay D/c.
    pub prop: f64,
    /// W_u^UL·δ/W_b^UL.
    pub ul_coef: f64,
    pub dl_coef: f64,
    /// β·(2D/c + U_s·ul_coef + U_s·dl_coef).
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct P1Model {
    pub instance: AssocInstance,
    pub alpha: f64,
    pub beta: f64,
    pub slice_ues: [Vec<usize>; 3],
    pub slice_rus: [Vec<usize>; 3],
    /// Eligible pairs per UE, sorted by RU index.
    pub eligible: Vec<Vec<Pair>>,
}

impl P1Model {
    pub fn new(instance: AssocInstance) -> Result<P1Model> {
        if !(instance.tti > 0.0) {
            return Err(Error::param("tti", "must be positive"));
        }
        for (i, b) in instance.ota_budget.iter().enumerate() {
            if !(*b > 0.0) {
                return Err(Error::param(format!("ota_budget[{i}]"), "must be positive"));
            }
        }
        for (b, ru) in instance.rus.iter().enumerate() {
            if !(ru.ul_cap > 0.0 && ru.dl_cap > 0.0) {
                return Err(Error::param(
                    format!("rus[{b}].cap"),
                    "capacities must be positive",
                ));
            }
            if !(ru.coverage_km >= 0.0) {
                return Err(Error::param(
                    format!("rus[{b}].coverage_km"),
                    "must be non-negative",
                ));
            }
        }
        for (u, ue) in instance.ues.iter().enumerate() {
            if !(ue.ul_demand >= 0.0 && ue.dl_demand >= 0.0) {
                return Err(Error::param(
                    format!("ues[{u}].demand"),
                    "must be non-negative",
                ));
            }
        }
        let mut slice_ues: [Vec<usize>; 3] = Default::default();
        let mut slice_rus: [Vec<usize>; 3] = Default::default();
        for (u, ue) in instance.ues.iter().enumerate() {
            slice_ues[ue.slice.index()].push(u);
        }
        for (b, ru) in instance.rus.iter().enumerate() {
            slice_rus[ru.slice.index()].push(b);
        }
        let alpha = if instance.rus.is_empty() {
            1.0
        } else {
            1.0 / instance.rus.len() as f64
        };
        let beta = if instance.ues.is_empty() {
            1.0
        } else {
            1.0 / instance.ues.len() as f64
        };
        let c = instance.constants;
        let eligible = instance
            .ues
            .iter()
            .map(|ue| {
                let us = slice_ues[ue.slice.index()].len() as f64;
                slice_rus[ue.slice.index()]
                    .iter()
                    .filter_map(|&b| {
                        let ru = &instance.rus[b];
                        let d = ue.position.dist(&ru.position);
                        if d > ru.coverage_km {
                            return None;
                        }
                        let prop = c.air_delay(d);
                        let ul_coef = ue.ul_demand * instance.tti / ru.ul_cap;
                        let dl_coef = ue.dl_demand * instance.tti / ru.dl_cap;
                        Some(Pair {
                            ru: b,
                            dist_km: d,
                            prop,
                            ul_coef,
                            dl_coef,
                            cost: beta * (2.0 * prop + us * ul_coef + us * dl_coef),
                        })
                    })
                    .collect()
            })
            .collect();
        Ok(P1Model {
            instance,
            alpha,
            beta,
            slice_ues,
            slice_rus,
            eligible,
        })
    }

    pub fn n_ues(&self) -> usize {
        self.instance.ues.len()
    }

    pub fn n_rus(&self) -> usize {
        self.instance.rus.len()
    }

    pub fn budget(&self, u: usize) -> f64 {
        self.instance.ota_budget[self.instance.ues[u].slice.index()]
    }

    pub fn pair(&self, u: usize, b: usize) -> Option<&Pair> {
        self.eligible[u]
            .binary_search_by_key(&b, |p| p.ru)
            .ok()
            .map(|i| &self.eligible[u][i])
    }

    pub fn uncovered_ues(&self) -> Vec<usize> {
        (0..self.n_ues())
            .filter(|&u| self.eligible[u].is_empty())
            .collect()
    }

    /// Objective coefficient of an attachment of u to b, eligible or not.
    pub fn raw_cost(&self, u: usize, b: usize) -> f64 {
        let ue = &self.instance.ues[u];
        let ru = &self.instance.rus[b];
        let us = self.slice_ues[ue.slice.index()].len() as f64;
        let prop = self
            .instance
            .constants
            .air_delay(ue.position.dist(&ru.position));
        self.beta
            * (2.0 * prop
                + us * ue.ul_demand * self.instance.tti / ru.ul_cap
                + us * ue.dl_demand * self.instance.tti / ru.dl_cap)
    }
}

pub fn build_p1(s: &Scenario) -> Result<P1Model> {
    let model = P1Model::new(AssocInstance::from_scenario(s))?;
    if let Some(&u) = model.uncovered_ues().first() {
        let n = model.uncovered_ues().len();
        return Err(Error::Infeasible(format!(
            "UE {u} ({} slice) has no RU within coverage ({n} such UEs)",
            model.instance.ues[u].slice
        )));
    }
    Ok(model)
}

/// Solution of the association problem. `attach[u]` lists the RUs UE u is
/// attached to; a feasible assignment has exactly one per UE.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub installed: Vec<usize>,
    pub attach: Vec<Vec<usize>>,
    pub latencies: Vec<PairLatency>,
    pub objective: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairLatency {
    pub ue: usize,
    pub ru: usize,
    pub ul: f64,
    pub dl: f64,
}

impl Assignment {
    /// Builds an assignment and fills in latencies and objective.
    pub fn new(model: &P1Model, mut installed: Vec<usize>, attach: Vec<Vec<usize>>) -> Assignment {
        installed.sort_unstable();
        installed.dedup();
        let mut a = Assignment {
            installed,
            attach,
            latencies: Vec::new(),
            objective: 0.0,
        };
        a.refresh(model);
        a
    }

    /// Single-RU-per-UE form; installed = RUs in use.
    pub fn from_map(model: &P1Model, map: &[usize]) -> Assignment {
        let installed: Vec<usize> = map.to_vec();
        Assignment::new(model, installed, map.iter().map(|&b| vec![b]).collect())
    }

    pub fn ru_of(&self, u: usize) -> Option<usize> {
        self.attach[u].first().copied()
    }

    pub fn installed_count(&self) -> usize {
        self.installed.len()
    }

    pub fn refresh(&mut self, model: &P1Model) {
        let loads = ru_loads(model, &self.attach);
        self.latencies = self
            .attach
            .iter()
            .enumerate()
            .flat_map(|(u, rus)| rus.iter().map(move |&b| (u, b)))
            .map(|(u, b)| {
                let (ul, dl) = latency_with_loads(model, &loads, u, b);
                PairLatency {
                    ue: u,
                    ru: b,
                    ul,
                    dl,
                }
            })
            .collect();
        self.objective = objective(model, &self.installed, &self.attach);
    }

    /// Installed RUs mapped back to scenario candidate indices.
    pub fn installed_ids(&self, model: &P1Model) -> Vec<usize> {
        self.installed
            .iter()
            .map(|&b| model.instance.ru_ids[b])
            .collect()
    }
}

/// Per-RU (UL, DL) transmission loads Σ W·δ/W_b over attached UEs.
pub fn ru_loads(model: &P1Model, attach: &[Vec<usize>]) -> Vec<(f64, f64)> {
    let inst = &model.instance;
    let mut loads = vec![(0.0, 0.0); inst.rus.len()];
    for (u, rus) in attach.iter().enumerate() {
        for &b in rus {
            loads[b].0 += inst.ues[u].ul_demand * inst.tti / inst.rus[b].ul_cap;
            loads[b].1 += inst.ues[u].dl_demand * inst.tti / inst.rus[b].dl_cap;
        }
    }
    loads
}

fn latency_with_loads(model: &P1Model, loads: &[(f64, f64)], u: usize, b: usize) -> (f64, f64) {
    let inst = &model.instance;
    let prop = inst
        .constants
        .air_delay(inst.ues[u].position.dist(&inst.rus[b].position));
    (prop + loads[b].0, prop + loads[b].1)
}

pub fn ota_latency(model: &P1Model, a: &Assignment, u: usize, b: usize) -> (f64, f64) {
    latency_with_loads(model, &ru_loads(model, &a.attach), u, b)
}

/// α·|installed| + Σ c_ub over attachments, which equals α·|installed| plus β
/// times the sum of T^UL + T^DL over every (UE, RU) pair of each slice, where
/// T_ub = x_ub·D/c + load_b.
pub fn objective(model: &P1Model, installed: &[usize], attach: &[Vec<usize>]) -> f64 {
    let mut obj = model.alpha * installed.len() as f64;
    for (u, rus) in attach.iter().enumerate() {
        for &b in rus {
            obj += model.raw_cost(u, b);
        }
    }
    obj
}
