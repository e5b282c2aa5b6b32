use serde::{Deserialize, Serialize};

use super::model::{ru_loads, Assignment, P1Model};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum P1Family {
    /// UE outside the RU's coverage or in another slice.
    Coverage,
    /// Attached to an RU that is not installed.
    Installation,
    /// Not attached to exactly one RU.
    Uniqueness,
    OtaUplink,
    OtaDownlink,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub family: P1Family,
    pub ue: usize,
    pub ru: Option<usize>,
    /// Negative: amount by which the constraint is exceeded.
    pub slack: f64,
}

const LATENCY_TOL: f64 = 1e-12;

pub fn check_feasible(model: &P1Model, a: &Assignment) -> Vec<Violation> {
    let inst = &model.instance;
    let mut out = Vec::new();
    if a.attach.len() != inst.ues.len() {
        for u in a.attach.len()..inst.ues.len() {
            out.push(Violation {
                family: P1Family::Uniqueness,
                ue: u,
                ru: None,
                slack: 1.0,
            });
        }
    }
    let attach: Vec<Vec<usize>> = a
        .attach
        .iter()
        .take(inst.ues.len())
        .map(|rus| {
            rus.iter()
                .copied()
                .filter(|&b| b < inst.rus.len())
                .collect()
        })
        .collect();
    let loads = ru_loads(model, &attach);
    for (u, rus) in a.attach.iter().enumerate().take(inst.ues.len()) {
        let ue = &inst.ues[u];
        if rus.len() != 1 {
            out.push(Violation {
                family: P1Family::Uniqueness,
                ue: u,
                ru: None,
                slack: 1.0 - rus.len() as f64,
            });
        }
        for &b in rus {
            if b >= inst.rus.len() {
                out.push(Violation {
                    family: P1Family::Coverage,
                    ue: u,
                    ru: Some(b),
                    slack: f64::NEG_INFINITY,
                });
                continue;
            }
            let ru = &inst.rus[b];
            let d = ue.position.dist(&ru.position);
            if ru.slice != ue.slice || d > ru.coverage_km {
                let slack = if ru.slice != ue.slice {
                    f64::NEG_INFINITY
                } else {
                    ru.coverage_km - d
                };
                out.push(Violation {
                    family: P1Family::Coverage,
                    ue: u,
                    ru: Some(b),
                    slack,
                });
            }
            if a.installed.binary_search(&b).is_err() {
                out.push(Violation {
                    family: P1Family::Installation,
                    ue: u,
                    ru: Some(b),
                    slack: -1.0,
                });
            }
            let prop = inst.constants.air_delay(d);
            let budget = inst.ota_budget[ue.slice.index()];
            let ul = prop + loads[b].0;
            let dl = prop + loads[b].1;
            if ul > budget * (1.0 + LATENCY_TOL) {
                out.push(Violation {
                    family: P1Family::OtaUplink,
                    ue: u,
                    ru: Some(b),
                    slack: budget - ul,
                });
            }
            if dl > budget * (1.0 + LATENCY_TOL) {
                out.push(Violation {
                    family: P1Family::OtaDownlink,
                    ue: u,
                    ru: Some(b),
                    slack: budget - dl,
                });
            }
        }
    }
    out
}
