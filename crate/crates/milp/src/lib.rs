//! A self-contained mixed-integer linear programming toolkit.
//!
//! * [`MilpModel`] holds variables (continuous or binary), linear rows and a
//!   minimization objective.
//! * [`solve_lp_relaxation`] solves the continuous relaxation with a
//!   bounded-variable revised simplex (sparse LU basis factorization).
//! * [`solve`] runs deterministic best-bound branch-and-bound over the
//!   binaries, re-optimizing children with the dual simplex.
//! * [`enumerate_solve`] is an exhaustive oracle for small models.
//! * [`export_lp`] writes the model in LP text format for cross-checking with
//!   external solvers.
//!
//! ```
//! use bliss_milp::{solve, ConstraintSense, MilpModel, SolveLimits, SolveStatus};
//!
//! let mut m = MilpModel::new();
//! let a = m.add_binary("a").unwrap();
//! let b = m.add_binary("b").unwrap();
//! m.add_constraint("cap", &[(a, 1.0), (b, 1.0)], ConstraintSense::Le, 1.0).unwrap();
//! m.add_objective_term(a, -3.0).unwrap();
//! m.add_objective_term(b, -2.0).unwrap();
//! let sol = solve(&m, &SolveLimits::default()).unwrap();
//! assert_eq!(sol.status, SolveStatus::Optimal);
//! assert_eq!(sol.values, vec![1.0, 0.0]);
//! ```

mod branch;
mod disjunction;
mod enumerate;
mod error;
mod lp_format;
mod lu;
mod model;
mod relaxation;
mod simplex;

pub use branch::{solve, solve_with_start, MilpSolution, SolveLimits, SolveStatus};
pub use enumerate::{enumerate_solve, MAX_ENUMERATED_BINARIES};
pub use error::{MilpError, Result};
pub use lp_format::{export_lp, format_coefficient, sanitize_name};
pub use model::{Constraint, ConstraintId, ConstraintSense, Integrality, MilpModel, Objective, VarId, Variable};
pub use relaxation::{dual_bound, solve_lp_relaxation, LpRelaxation, LpStatus};
