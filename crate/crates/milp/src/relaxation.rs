//! LP relaxation: integrality dropped, optional fixings applied as bounds.

use crate::error::{MilpError, Result};
use crate::model::{ConstraintSense, MilpModel, VarId};
use crate::simplex::{LpData, LpOutcome, Simplex};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpRelaxation {
    pub status: LpStatus,
    /// Primal values (meaningful when `Optimal`).
    pub values: Vec<f64>,
    /// Objective including the model's constant offset.
    pub objective: f64,
    pub row_duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

pub(crate) fn iteration_cap(data: &LpData) -> usize {
    50 * (data.n + data.m) + 10_000
}

/// Solves the continuous relaxation of `model` with every `(var, value)` in
/// `fixings` pinned through its bounds.
pub fn solve_lp_relaxation(model: &MilpModel, fixings: &[(VarId, f64)]) -> Result<LpRelaxation> {
    model.validate()?;
    let data = LpData::from_model(model);
    let mut lower = data.lower.clone();
    let mut upper = data.upper.clone();
    for &(v, val) in fixings {
        if v.0 >= model.num_variables() {
            return Err(MilpError::UnknownVariable { constraint: "fixings".into(), index: v.0 });
        }
        lower[v.0] = lower[v.0].max(val);
        upper[v.0] = upper[v.0].min(val);
    }
    let infeasible = LpRelaxation {
        status: LpStatus::Infeasible,
        values: Vec::new(),
        objective: f64::INFINITY,
        row_duals: Vec::new(),
        reduced_costs: Vec::new(),
        iterations: 0,
    };
    if lower.iter().zip(&upper).any(|(l, u)| l > u) {
        return Ok(infeasible);
    }
    let mut simplex = Simplex::new(&data);
    simplex.set_bounds(&lower, &upper);
    simplex.reset_to_slack_basis()?;
    let outcome = simplex.primal(iteration_cap(&data))?;
    let constant = model.objective().constant;
    match outcome {
        LpOutcome::Optimal => {
            let (row_duals, reduced_costs) = simplex.duals();
            Ok(LpRelaxation {
                status: LpStatus::Optimal,
                values: simplex.values().to_vec(),
                objective: simplex.objective() + constant,
                row_duals,
                reduced_costs,
                iterations: simplex.iterations,
            })
        }
        LpOutcome::Infeasible => Ok(LpRelaxation { iterations: simplex.iterations, ..infeasible }),
        LpOutcome::Unbounded => Ok(LpRelaxation {
            status: LpStatus::Unbounded,
            objective: f64::NEG_INFINITY,
            iterations: simplex.iterations,
            ..infeasible
        }),
        LpOutcome::IterationLimit | LpOutcome::TimeLimit => Err(MilpError::NumericalBreakdown("simplex iteration limit".into())),
    }
}

/// Lagrangian lower bound `min_{box} (c - Aᵀy)ᵀx + yᵀs` rebuilt from row
/// duals, evaluated over the model's own bounds. At an optimal basis it
/// equals the primal objective up to round-off.
pub fn dual_bound(model: &MilpModel, relaxation: &LpRelaxation, fixings: &[(VarId, f64)]) -> f64 {
    let y = &relaxation.row_duals;
    let mut d = model.objective_vector();
    for (i, c) in model.constraints().iter().enumerate() {
        for &(v, a) in &c.terms {
            d[v.0] -= a * y[i];
        }
    }
    let mut lower: Vec<f64> = model.variables().iter().map(|v| v.lower).collect();
    let mut upper: Vec<f64> = model.variables().iter().map(|v| v.upper).collect();
    for &(v, val) in fixings {
        lower[v.0] = lower[v.0].max(val);
        upper[v.0] = upper[v.0].min(val);
    }
    let tiny = 1e-9;
    let mut bound = model.objective().constant;
    for j in 0..d.len() {
        bound += if d[j] > tiny {
            d[j] * lower[j]
        } else if d[j] < -tiny {
            d[j] * upper[j]
        } else {
            d[j] * relaxation.values[j]
        };
    }
    for (i, c) in model.constraints().iter().enumerate() {
        let (lo, hi) = match c.sense {
            ConstraintSense::Le => (f64::NEG_INFINITY, c.rhs),
            ConstraintSense::Ge => (c.rhs, f64::INFINITY),
            ConstraintSense::Eq => (c.rhs, c.rhs),
        };
        let yi = y[i];
        bound += if yi > tiny {
            yi * lo
        } else if yi < -tiny {
            yi * hi
        } else {
            yi * c.activity(&relaxation.values)
        };
    }
    bound
}
