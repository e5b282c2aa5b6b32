use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{OracleStage, ResultBundle};
use crate::error::Result;

/// Heuristic minus exact on one oracle subsample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub run_id: String,
    pub stage: OracleStage,
    pub ru_delta: Option<i64>,
    pub olt_delta: Option<i64>,
    pub cost_delta: Option<i64>,
    pub cost_ratio: Option<f64>,
    pub factor_bound: Option<f64>,
    /// Cost ratio above ln(O·ΣB).
    pub factor_violated: bool,
}

pub fn compare_solvers(bundle: &ResultBundle) -> Vec<GapRow> {
    bundle
        .oracles
        .iter()
        .map(|o| {
            let ratio = match (o.heuristic_cost, o.exact_cost) {
                (Some(h), Some(e)) if e > 0 => Some(h as f64 / e as f64),
                (Some(0), Some(0)) => Some(1.0),
                _ => None,
            };
            GapRow {
                run_id: o.run_id.clone(),
                stage: o.stage,
                ru_delta: o.exact_rus.map(|e| o.heuristic_rus as i64 - e as i64),
                olt_delta: o.exact_olts.map(|e| o.heuristic_olts as i64 - e as i64),
                cost_delta: o.heuristic_cost.zip(o.exact_cost).map(|(h, e)| h - e),
                cost_ratio: ratio,
                factor_bound: o.factor_bound,
                factor_violated: matches!((ratio, o.factor_bound), (Some(r), Some(f)) if r > f * (1.0 + 1e-12)),
            }
        })
        .collect()
}

pub fn write_gap_table<W: Write>(rows: &[GapRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "run_id",
        "stage",
        "ru_delta",
        "olt_delta",
        "cost_delta_eur",
        "cost_ratio",
        "factor_bound",
        "factor_violated",
    ])?;
    let s = |v: Option<i64>| v.map(|x| x.to_string()).unwrap_or_default();
    let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        out.write_record([
            r.run_id.clone(),
            format!("{:?}", r.stage).to_lowercase(),
            s(r.ru_delta),
            s(r.olt_delta),
            f(r.cost_delta.map(|c| c as f64 / 100.0)),
            f(r.cost_ratio),
            f(r.factor_bound),
            r.factor_violated.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
