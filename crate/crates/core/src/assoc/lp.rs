use minilp::{ComparisonOp, OptimizationDirection, Problem, Variable};
use serde::{Deserialize, Serialize};

use super::model::P1Model;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpBound {
    pub objective: f64,
    /// Σθ of the relaxed optimum.
    pub installed_fraction: f64,
}

/// Optimum of the association problem with θ and x relaxed to [0, 1].
pub fn lp_lower_bound(model: &P1Model) -> Result<LpBound> {
    if let Some(&u) = model.uncovered_ues().first() {
        return Err(Error::Infeasible(format!("UE {u} has no eligible RU")));
    }
    let inst = &model.instance;
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let theta: Vec<Variable> = (0..model.n_rus())
        .map(|_| lp.add_var(model.alpha, (0.0, 1.0)))
        .collect();
    let x: Vec<Vec<Variable>> = model
        .eligible
        .iter()
        .map(|pairs| {
            pairs
                .iter()
                .map(|p| lp.add_var(p.cost, (0.0, 1.0)))
                .collect()
        })
        .collect();

    let mut on_ru: Vec<Vec<(usize, usize)>> = vec![Vec::new(); model.n_rus()];
    for (u, pairs) in model.eligible.iter().enumerate() {
        let row: Vec<(Variable, f64)> = x[u].iter().map(|&v| (v, 1.0)).collect();
        lp.add_constraint(row.as_slice(), ComparisonOp::Eq, 1.0);
        for (k, p) in pairs.iter().enumerate() {
            lp.add_constraint([(x[u][k], 1.0), (theta[p.ru], -1.0)], ComparisonOp::Le, 0.0);
            on_ru[p.ru].push((u, k));
        }
    }
    // Latency rows: one per eligible pair (u, b) and direction, plus a
    // propagation-free row per RU.
    for (b, members) in on_ru.iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let budget = inst.ota_budget[inst.rus[b].slice.index()];
        for dir in 0..2 {
            let load: Vec<(Variable, f64)> = members
                .iter()
                .map(|&(u, k)| {
                    let p = &model.eligible[u][k];
                    (x[u][k], if dir == 0 { p.ul_coef } else { p.dl_coef })
                })
                .collect();
            lp.add_constraint(load.as_slice(), ComparisonOp::Le, budget);
            for (i, &(u, k)) in members.iter().enumerate() {
                let mut row = load.clone();
                row[i].1 += model.eligible[u][k].prop;
                lp.add_constraint(row.as_slice(), ComparisonOp::Le, budget);
            }
        }
    }
    let sol = lp.solve().map_err(|e| match e {
        minilp::Error::Infeasible => {
            Error::Infeasible("relaxed association problem is infeasible".into())
        }
        minilp::Error::Unbounded => {
            Error::Domain("relaxed association problem is unbounded".into())
        }
    })?;
    Ok(LpBound {
        objective: sol.objective(),
        installed_fraction: theta.iter().map(|&t| sol[t]).sum(),
    })
}
