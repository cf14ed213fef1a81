//! Bookkeeping for covering disjunctions `Σ members ≥ 1`: which groups are
//! genuinely violated by an LP point, and a repair-and-round heuristic.
//!
//! A member whose only role is to switch a row on is often fractional in
//! the LP even when its row would already hold with the member at one. Such
//! a group is repairable and is not worth branching on.

use crate::model::{ConstraintSense, MilpModel};

pub(crate) struct Groups {
    pub members: Vec<Vec<usize>>,
    pub priority: Vec<i32>,
    columns: Vec<Vec<(usize, f64)>>,
    row_lo: Vec<f64>,
    row_hi: Vec<f64>,
}

pub(crate) enum GroupState {
    /// Some member is already at one.
    Satisfied,
    /// Raising `member` to one keeps all of its rows feasible.
    Repairable { member: usize },
    /// Every member breaks a row when raised; `violation` is the smallest
    /// such breach.
    Violated { violation: f64 },
}

impl Groups {
    pub fn new(model: &MilpModel) -> Self {
        let n = model.num_variables();
        let members: Vec<Vec<usize>> = model.disjunctions().iter().map(|d| d.iter().map(|v| v.0).collect()).collect();
        let priority = members
            .iter()
            .map(|m| m.iter().map(|&j| model.variables()[j].priority).max().unwrap_or(0))
            .collect();
        let mut wanted = vec![false; n];
        for m in &members {
            for &j in m {
                wanted[j] = true;
            }
        }
        let mut columns = vec![Vec::new(); n];
        let mut row_lo = Vec::with_capacity(model.num_constraints());
        let mut row_hi = Vec::with_capacity(model.num_constraints());
        for (i, c) in model.constraints().iter().enumerate() {
            for &(v, a) in &c.terms {
                if wanted[v.0] {
                    columns[v.0].push((i, a));
                }
            }
            let (lo, hi) = match c.sense {
                ConstraintSense::Le => (f64::NEG_INFINITY, c.rhs),
                ConstraintSense::Ge => (c.rhs, f64::INFINITY),
                ConstraintSense::Eq => (c.rhs, c.rhs),
            };
            row_lo.push(lo);
            row_hi.push(hi);
        }
        Groups { members, priority, columns, row_lo, row_hi }
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn activities(model: &MilpModel, values: &[f64]) -> Vec<f64> {
        model.constraints().iter().map(|c| c.activity(values)).collect()
    }

    /// Largest row breach caused by moving `j` from its value to one.
    fn lift_violation(&self, j: usize, values: &[f64], activity: &[f64]) -> f64 {
        let delta = 1.0 - values[j];
        self.columns[j]
            .iter()
            .map(|&(i, a)| {
                let act = activity[i] + a * delta;
                (self.row_lo[i] - act).max(act - self.row_hi[i]).max(0.0)
            })
            .fold(0.0, f64::max)
    }

    pub fn state(&self, g: usize, values: &[f64], upper: &[f64], activity: &[f64], tol: f64) -> GroupState {
        let mut best: Option<(usize, f64)> = None;
        for &j in &self.members[g] {
            if values[j] >= 1.0 - tol {
                return GroupState::Satisfied;
            }
            if upper[j] < 0.5 {
                continue;
            }
            let v = self.lift_violation(j, values, activity);
            if best.map_or(true, |(_, b)| v < b) {
                best = Some((j, v));
            }
        }
        match best {
            Some((member, v)) if v <= 1e-7 => GroupState::Repairable { member },
            Some((_, v)) => GroupState::Violated { violation: v },
            None => GroupState::Violated { violation: f64::INFINITY },
        }
    }

    /// Sets one repairable member of every unsatisfied group to one and the
    /// rest of that group to zero, then rounds the remaining binaries.
    pub fn repair_and_round(
        &self,
        values: &[f64],
        upper: &[f64],
        binaries: &[usize],
        activity: &[f64],
        tol: f64,
    ) -> Vec<f64> {
        let mut out = values.to_vec();
        for g in 0..self.members.len() {
            if let GroupState::Repairable { member } = self.state(g, values, upper, activity, tol) {
                for &j in &self.members[g] {
                    out[j] = if j == member { 1.0 } else { 0.0 };
                }
            }
        }
        for &b in binaries {
            out[b] = out[b].round().clamp(0.0, 1.0);
        }
        out
    }
}
