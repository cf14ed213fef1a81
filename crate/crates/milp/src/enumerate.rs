//! Exhaustive oracle: every assignment of the free binaries is fixed in turn
//! and the remaining LP solved. Binaries whose bounds already coincide stay at
//! that value and do not count against the cap. Exponential; intended for
//! tests.

use std::time::Instant;

use crate::branch::{MilpSolution, SolveStatus};
use crate::error::{MilpError, Result};
use crate::model::{MilpModel, VarId};
use crate::relaxation::{solve_lp_relaxation, LpStatus};

pub const MAX_ENUMERATED_BINARIES: usize = 24;

pub fn enumerate_solve(model: &MilpModel) -> Result<MilpSolution> {
    model.validate()?;
    let mut fixed = Vec::new();
    let mut free = Vec::new();
    for b in model.binary_ids() {
        let v = model.variable(b);
        if v.lower == v.upper {
            fixed.push((b, v.lower));
        } else {
            free.push(b);
        }
    }
    if free.len() > MAX_ENUMERATED_BINARIES {
        return Err(MilpError::TooManyBinaries { count: free.len(), max: MAX_ENUMERATED_BINARIES });
    }
    let clock = Instant::now();
    let mut walk = Walk { model, free: &free, fixings: fixed, best: None, unbounded: false, iterations: 0 };
    walk.visit(0)?;
    let Walk { best, unbounded, iterations, .. } = walk;
    let count: u64 = 1 << free.len();
    let wall_time = clock.elapsed().as_secs_f64();
    let solution = match (unbounded, best) {
        (true, _) => MilpSolution {
            status: SolveStatus::Unbounded,
            values: Vec::new(),
            objective_value: f64::NEG_INFINITY,
            best_bound: f64::NEG_INFINITY,
            node_count: count,
            lp_iterations: iterations,
            wall_time,
        },
        (false, Some((obj, values))) => MilpSolution {
            status: SolveStatus::Optimal,
            values,
            objective_value: obj,
            best_bound: obj,
            node_count: count,
            lp_iterations: iterations,
            wall_time,
        },
        (false, None) => MilpSolution {
            status: SolveStatus::Infeasible,
            values: Vec::new(),
            objective_value: f64::INFINITY,
            best_bound: f64::INFINITY,
            node_count: count,
            lp_iterations: iterations,
            wall_time,
        },
    };
    Ok(solution)
}

/// Depth-first walk over the free binaries. A partial fixing whose LP is
/// infeasible covers its whole subtree, since fixing more variables can only
/// shrink the feasible set; no objective bound is ever used to prune.
struct Walk<'a> {
    model: &'a MilpModel,
    free: &'a [VarId],
    fixings: Vec<(VarId, f64)>,
    best: Option<(f64, Vec<f64>)>,
    unbounded: bool,
    iterations: u64,
}

impl Walk<'_> {
    fn visit(&mut self, depth: usize) -> Result<()> {
        let lp = solve_lp_relaxation(self.model, &self.fixings)?;
        self.iterations += lp.iterations as u64;
        if lp.status == LpStatus::Infeasible {
            return Ok(());
        }
        if depth == self.free.len() {
            match lp.status {
                LpStatus::Unbounded => self.unbounded = true,
                LpStatus::Optimal => {
                    if self.best.as_ref().map_or(true, |(b, _)| lp.objective < *b) {
                        self.best = Some((lp.objective, lp.values));
                    }
                }
                LpStatus::Infeasible => {}
            }
            return Ok(());
        }
        for value in [0.0, 1.0] {
            self.fixings.push((self.free[depth], value));
            self.visit(depth + 1)?;
            self.fixings.pop();
        }
        Ok(())
    }
}
