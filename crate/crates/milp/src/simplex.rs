//! Bounded-variable revised simplex over `A x - s = 0`, where every row `i`
//! owns a logical variable `s_i` carrying the row bounds. Nonbasic variables
//! sit at a bound (or at zero when free). The basis is kept as a sparse LU
//! factorization with eta updates.
//!
//! Both a primal method (composite phase 1, Dantzig pricing that falls back
//! to Bland's rule on long degenerate runs) and a dual method (used to
//! re-optimize after bound changes in branch-and-bound) are provided.

use std::time::Instant;

use crate::error::MilpError;
use crate::lu::LuFactors;
use crate::model::{ConstraintSense, MilpModel};

pub(crate) const PRIMAL_TOL: f64 = 1e-9;
pub(crate) const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const BREAKDOWN_PIVOT: f64 = 1e-11;
const REFACTOR_EVERY: usize = 100;
const DEGENERATE_BEFORE_BLAND: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub(crate) enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpOutcome {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    /// The wall-clock deadline passed mid-solve.
    TimeLimit,
}

/// Computational form of a model: structural columns in CSC layout followed
/// by one logical per row.
#[derive(Debug, Clone)]
pub(crate) struct LpData {
    pub n: usize,
    pub m: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    pub cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpData {
    pub fn from_model(model: &MilpModel) -> Self {
        let n = model.num_variables();
        let m = model.num_constraints();
        let mut per_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, c) in model.constraints().iter().enumerate() {
            for &(v, a) in &c.terms {
                if a != 0.0 {
                    per_col[v.0].push((i, a));
                }
            }
        }
        let mut col_start = Vec::with_capacity(n + 1);
        let mut col_row = Vec::new();
        let mut col_val = Vec::new();
        col_start.push(0);
        for col in per_col {
            for (i, a) in col {
                col_row.push(i);
                col_val.push(a);
            }
            col_start.push(col_row.len());
        }
        let mut cost = model.objective_vector();
        cost.resize(n + m, 0.0);
        let mut lower: Vec<f64> = model.variables().iter().map(|v| v.lower).collect();
        let mut upper: Vec<f64> = model.variables().iter().map(|v| v.upper).collect();
        for c in model.constraints() {
            let (lo, hi) = match c.sense {
                ConstraintSense::Le => (f64::NEG_INFINITY, c.rhs),
                ConstraintSense::Ge => (c.rhs, f64::INFINITY),
                ConstraintSense::Eq => (c.rhs, c.rhs),
            };
            lower.push(lo);
            upper.push(hi);
        }
        LpData { n, m, col_start, col_row, col_val, cost, lower, upper }
    }

    fn column(&self, j: usize, out: &mut Vec<(usize, f64)>) {
        out.clear();
        if j < self.n {
            for t in self.col_start[j]..self.col_start[j + 1] {
                out.push((self.col_row[t], self.col_val[t]));
            }
        } else {
            out.push((j - self.n, -1.0));
        }
    }

    #[inline]
    fn dot_column(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.n {
            let mut s = 0.0;
            for t in self.col_start[j]..self.col_start[j + 1] {
                s += self.col_val[t] * y[self.col_row[t]];
            }
            s
        } else {
            -y[j - self.n]
        }
    }

    fn scatter_column(&self, j: usize, scale: f64, out: &mut [f64]) {
        if j < self.n {
            for t in self.col_start[j]..self.col_start[j + 1] {
                out[self.col_row[t]] += scale * self.col_val[t];
            }
        } else {
            out[j - self.n] -= scale;
        }
    }
}

pub(crate) struct Simplex<'a> {
    data: &'a LpData,
    lower: Vec<f64>,
    upper: Vec<f64>,
    status: Vec<VarStatus>,
    head: Vec<usize>,
    x: Vec<f64>,
    lu: LuFactors,
    y: Vec<f64>,
    d: Vec<f64>,
    alpha: Vec<f64>,
    work: Vec<f64>,
    colbuf: Vec<(usize, f64)>,
    pub iterations: usize,
    degenerate_run: usize,
    /// Cost perturbation active during the dual method only.
    shift: Vec<f64>,
    shifted: bool,
    pub deadline: Option<Instant>,
}

fn nonbasic_status(lo: f64, hi: f64) -> VarStatus {
    if lo.is_finite() {
        VarStatus::AtLower
    } else if hi.is_finite() {
        VarStatus::AtUpper
    } else {
        VarStatus::Free
    }
}

impl<'a> Simplex<'a> {
    pub fn new(data: &'a LpData) -> Self {
        let (n, m) = (data.n, data.m);
        let mut s = Simplex {
            data,
            lower: data.lower.clone(),
            upper: data.upper.clone(),
            status: vec![VarStatus::AtLower; n + m],
            head: Vec::with_capacity(m),
            x: vec![0.0; n + m],
            lu: LuFactors::default(),
            y: vec![0.0; m],
            d: vec![0.0; n + m],
            alpha: vec![0.0; m],
            work: vec![0.0; m],
            colbuf: Vec::new(),
            iterations: 0,
            degenerate_run: 0,
            shift: vec![0.0; n + m],
            shifted: false,
            deadline: None,
        };
        s.slack_basis();
        s
    }

    fn slack_basis(&mut self) {
        let (n, m) = (self.data.n, self.data.m);
        for j in 0..n {
            self.status[j] = nonbasic_status(self.lower[j], self.upper[j]);
        }
        self.head.clear();
        for i in 0..m {
            self.status[n + i] = VarStatus::Basic;
            self.head.push(n + i);
        }
    }

    /// Replaces the working bounds (used for branch-and-bound nodes).
    pub fn set_bounds(&mut self, lower: &[f64], upper: &[f64]) {
        self.lower.copy_from_slice(lower);
        self.upper.copy_from_slice(upper);
    }

    fn past_deadline(&self) -> bool {
        self.iterations % 64 == 0 && self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    pub fn statuses(&self) -> &[VarStatus] {
        &self.status
    }

    /// Installs a basis given by per-variable statuses. Falls back to the
    /// slack basis when the status vector does not describe `m` basics.
    pub fn load_basis(&mut self, statuses: &[VarStatus]) -> Result<(), MilpError> {
        let m = self.data.m;
        let basics = statuses.iter().filter(|&&s| s == VarStatus::Basic).count();
        if basics != m || statuses.len() != self.status.len() {
            self.slack_basis();
        } else {
            self.status.copy_from_slice(statuses);
            self.head.clear();
            for (j, s) in statuses.iter().enumerate() {
                if *s == VarStatus::Basic {
                    self.head.push(j);
                }
            }
        }
        self.fix_nonbasic_statuses();
        self.refactor()
    }

    /// Keeps the current basis and factorization after `set_bounds`.
    pub fn refresh_after_bound_change(&mut self) {
        self.fix_nonbasic_statuses();
        self.recompute_basics();
    }

    pub fn reset_to_slack_basis(&mut self) -> Result<(), MilpError> {
        self.slack_basis();
        self.refactor()
    }

    fn fix_nonbasic_statuses(&mut self) {
        for j in 0..self.status.len() {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            match self.status[j] {
                VarStatus::Basic => {}
                VarStatus::AtLower if !lo.is_finite() => self.status[j] = nonbasic_status(lo, hi),
                VarStatus::AtUpper if !hi.is_finite() => self.status[j] = nonbasic_status(lo, hi),
                VarStatus::Free if lo.is_finite() || hi.is_finite() => self.status[j] = nonbasic_status(lo, hi),
                _ => {}
            }
        }
    }

    fn snap_nonbasic(&mut self) {
        for j in 0..self.status.len() {
            self.x[j] = match self.status[j] {
                VarStatus::Basic => self.x[j],
                VarStatus::AtLower => self.lower[j],
                VarStatus::AtUpper => self.upper[j],
                VarStatus::Free => 0.0,
            };
        }
    }

    /// Refactorizes the basis and recomputes basic values from the
    /// nonbasic ones. Singular columns are swapped for row logicals.
    pub fn refactor(&mut self) -> Result<(), MilpError> {
        let m = self.data.m;
        for _attempt in 0..4 {
            let mut cols = Vec::with_capacity(m);
            for p in 0..m {
                let mut c = Vec::new();
                self.data.column(self.head[p], &mut c);
                cols.push(c);
            }
            match LuFactors::factorize(m, &cols) {
                Ok(lu) => {
                    self.lu = lu;
                    self.recompute_basics();
                    return Ok(());
                }
                Err(sing) => {
                    for (&pos, &row) in sing.positions.iter().zip(&sing.rows) {
                        let out = self.head[pos];
                        self.status[out] = nonbasic_status(self.lower[out], self.upper[out]);
                        let logical = self.data.n + row;
                        self.head[pos] = logical;
                        self.status[logical] = VarStatus::Basic;
                    }
                }
            }
        }
        Err(MilpError::NumericalBreakdown("basis could not be factorized".into()))
    }

    fn recompute_basics(&mut self) {
        self.snap_nonbasic();
        let m = self.data.m;
        let mut rhs = vec![0.0; m];
        for j in 0..self.status.len() {
            if self.status[j] != VarStatus::Basic && self.x[j] != 0.0 {
                self.data.scatter_column(j, -self.x[j], &mut rhs);
            }
        }
        self.lu.ftran(&mut rhs, &mut self.work);
        for p in 0..m {
            self.x[self.head[p]] = rhs[p];
        }
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let v = self.x[j];
        if v < self.lower[j] - PRIMAL_TOL {
            self.lower[j] - v
        } else if v > self.upper[j] + PRIMAL_TOL {
            v - self.upper[j]
        } else {
            0.0
        }
    }

    fn compute_duals(&mut self, phase_one: bool) {
        let m = self.data.m;
        for p in 0..m {
            let j = self.head[p];
            self.y[p] = if phase_one {
                let v = self.x[j];
                if v < self.lower[j] - PRIMAL_TOL {
                    -1.0
                } else if v > self.upper[j] + PRIMAL_TOL {
                    1.0
                } else {
                    0.0
                }
            } else {
                self.cost(j)
            };
        }
        self.lu.btran(&mut self.y, &mut self.work);
        for j in 0..self.status.len() {
            if self.status[j] == VarStatus::Basic {
                self.d[j] = 0.0;
            } else {
                let c = if phase_one { 0.0 } else { self.cost(j) };
                self.d[j] = c - self.data.dot_column(j, &self.y);
            }
        }
    }

    #[inline]
    fn cost(&self, j: usize) -> f64 {
        if self.shifted {
            self.data.cost[j] + self.shift[j]
        } else {
            self.data.cost[j]
        }
    }

    /// Small deterministic cost shifts pointing into the dual feasible side,
    /// which breaks the ties of highly dual-degenerate bases.
    fn perturb_costs(&mut self) {
        let scale = self.data.cost.iter().fold(0.0f64, |a, c| a.max(c.abs())).max(1.0);
        let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
        for j in 0..self.shift.len() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            let r = 0.5 + (state >> 11) as f64 / (1u64 << 53) as f64;
            let mag = 1e-7 * scale * r * (1.0 + self.data.cost[j].abs() / scale);
            self.shift[j] = match self.status[j] {
                VarStatus::AtLower => mag,
                VarStatus::AtUpper => -mag,
                VarStatus::Free => 0.0,
                VarStatus::Basic => {
                    if state & 1 == 0 {
                        mag
                    } else {
                        -mag
                    }
                }
            };
        }
        self.shifted = true;
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.lower[j] == self.upper[j]
    }

    fn price(&self, bland: bool) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for j in 0..self.status.len() {
            let dj = self.d[j];
            let eligible = match self.status[j] {
                VarStatus::Basic => false,
                VarStatus::AtLower => dj < -DUAL_TOL && !self.is_fixed(j),
                VarStatus::AtUpper => dj > DUAL_TOL && !self.is_fixed(j),
                VarStatus::Free => dj.abs() > DUAL_TOL,
            };
            if !eligible {
                continue;
            }
            if bland {
                return Some(j);
            }
            if best.map_or(true, |(b, _)| dj.abs() > b) {
                best = Some((dj.abs(), j));
            }
        }
        best.map(|(_, j)| j)
    }

    fn ftran_column(&mut self, j: usize) {
        self.alpha.iter_mut().for_each(|a| *a = 0.0);
        self.data.column(j, &mut self.colbuf);
        for &(i, a) in &self.colbuf {
            self.alpha[i] = a;
        }
        self.lu.ftran(&mut self.alpha, &mut self.work);
    }

    fn replace_basic(&mut self, r: usize, entering: usize) -> Result<(), MilpError> {
        self.head[r] = entering;
        self.status[entering] = VarStatus::Basic;
        self.lu.push_eta(r, &self.alpha);
        if self.lu.num_etas() >= REFACTOR_EVERY {
            self.refactor()?;
        }
        Ok(())
    }

    fn has_primal_infeasibility(&self) -> bool {
        self.head.iter().any(|&j| self.infeasibility(j) > 0.0)
    }

    /// Primal simplex from the current basis.
    pub fn primal(&mut self, max_iterations: usize) -> Result<LpOutcome, MilpError> {
        let m = self.data.m;
        let mut verified = false;
        let mut small_pivot_retries = 0;
        loop {
            if self.iterations >= max_iterations {
                return Ok(LpOutcome::IterationLimit);
            }
            if self.past_deadline() {
                return Ok(LpOutcome::TimeLimit);
            }
            let phase_one = self.has_primal_infeasibility();
            self.compute_duals(phase_one);
            let bland = self.degenerate_run >= DEGENERATE_BEFORE_BLAND;
            let Some(q) = self.price(bland) else {
                if !verified {
                    // confirm on a fresh factorization before declaring the outcome
                    self.refactor()?;
                    verified = true;
                    continue;
                }
                return Ok(if phase_one { LpOutcome::Infeasible } else { LpOutcome::Optimal });
            };
            verified = false;
            self.iterations += 1;
            self.ftran_column(q);
            let dir = if self.d[q] < 0.0 { 1.0 } else { -1.0 };

            // ratio test over basic variables: x_B(θ) = x_B - dir·θ·α
            let mut theta_max = f64::INFINITY;
            for p in 0..m {
                let a = self.alpha[p];
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let rate = -dir * a;
                if let Some(dist) = self.primal_distance(self.head[p], rate, phase_one) {
                    theta_max = theta_max.min((dist + PRIMAL_TOL) / rate.abs());
                }
            }
            let mut leave: Option<(usize, f64)> = None;
            if theta_max.is_finite() {
                let mut best_piv = 0.0;
                let mut best_ratio = f64::INFINITY;
                for p in 0..m {
                    let a = self.alpha[p];
                    if a.abs() <= PIVOT_TOL {
                        continue;
                    }
                    let rate = -dir * a;
                    let Some(dist) = self.primal_distance(self.head[p], rate, phase_one) else {
                        continue;
                    };
                    let ratio = dist.max(0.0) / rate.abs();
                    if ratio > theta_max {
                        continue;
                    }
                    let better = if bland {
                        ratio < best_ratio - 1e-12
                            || (ratio <= best_ratio + 1e-12
                                && leave.map_or(true, |(lp, _)| self.head[p] < self.head[lp]))
                    } else {
                        a.abs() > best_piv
                    };
                    if better {
                        best_piv = a.abs();
                        best_ratio = ratio;
                        leave = Some((p, ratio));
                    }
                }
            }
            let range = self.upper[q] - self.lower[q];
            let step_limit = leave.map_or(f64::INFINITY, |(_, t)| t);
            if range.is_finite() && range <= step_limit {
                // bound flip
                for p in 0..m {
                    let j = self.head[p];
                    self.x[j] -= dir * range * self.alpha[p];
                }
                self.status[q] = if dir > 0.0 { VarStatus::AtUpper } else { VarStatus::AtLower };
                self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
                self.degenerate_run = if range > 1e-12 { 0 } else { self.degenerate_run + 1 };
                continue;
            }
            let Some((r, theta)) = leave else {
                if phase_one {
                    return Err(MilpError::NumericalBreakdown("unbounded phase-one direction".into()));
                }
                return Ok(LpOutcome::Unbounded);
            };
            if self.alpha[r].abs() < BREAKDOWN_PIVOT {
                small_pivot_retries += 1;
                if small_pivot_retries > 2 {
                    return Err(MilpError::NumericalBreakdown(format!(
                        "pivot magnitude {:e} below threshold",
                        self.alpha[r].abs()
                    )));
                }
                self.refactor()?;
                continue;
            }
            small_pivot_retries = 0;
            self.degenerate_run = if theta > 1e-12 { 0 } else { self.degenerate_run + 1 };
            for p in 0..m {
                let j = self.head[p];
                self.x[j] -= dir * theta * self.alpha[p];
            }
            self.x[q] += dir * theta;
            let out = self.head[r];
            let (st, val) = self.leaving_bound(out);
            self.status[out] = st;
            self.x[out] = val;
            self.replace_basic(r, q)?;
        }
    }

    /// Distance a basic variable moving at `rate` may travel before it must
    /// leave the basis, or `None` when it imposes no limit.
    fn primal_distance(&self, j: usize, rate: f64, phase_one: bool) -> Option<f64> {
        let (v, lo, hi) = (self.x[j], self.lower[j], self.upper[j]);
        if phase_one && v < lo - PRIMAL_TOL {
            return (rate > 0.0).then(|| lo - v);
        }
        if phase_one && v > hi + PRIMAL_TOL {
            return (rate < 0.0).then(|| v - hi);
        }
        if rate > 0.0 {
            hi.is_finite().then(|| hi - v)
        } else {
            lo.is_finite().then(|| v - lo)
        }
    }

    /// Bound at which a leaving variable rests: the one it has just reached.
    fn leaving_bound(&self, j: usize) -> (VarStatus, f64) {
        let (v, lo, hi) = (self.x[j], self.lower[j], self.upper[j]);
        let at_upper = if lo.is_finite() && hi.is_finite() {
            (hi - v).abs() < (v - lo).abs()
        } else {
            hi.is_finite()
        };
        if at_upper {
            (VarStatus::AtUpper, hi)
        } else {
            (VarStatus::AtLower, lo)
        }
    }

    fn dual_feasible(&self) -> bool {
        (0..self.status.len()).all(|j| {
            if self.is_fixed(j) {
                return true;
            }
            match self.status[j] {
                VarStatus::Basic => true,
                VarStatus::AtLower => self.d[j] >= -1e3 * DUAL_TOL,
                VarStatus::AtUpper => self.d[j] <= 1e3 * DUAL_TOL,
                VarStatus::Free => self.d[j].abs() <= 1e3 * DUAL_TOL,
            }
        })
    }

    /// Dual simplex from the current basis. Returns `None` when the basis is
    /// not dual feasible (the caller should fall back to the primal method).
    pub fn dual(&mut self, max_iterations: usize) -> Result<Option<LpOutcome>, MilpError> {
        self.shifted = false;
        self.compute_duals(false);
        if !self.dual_feasible() {
            return Ok(None);
        }
        self.perturb_costs();
        let result = self.dual_loop(max_iterations);
        self.shifted = false;
        result
    }

    fn dual_loop(&mut self, max_iterations: usize) -> Result<Option<LpOutcome>, MilpError> {
        let m = self.data.m;
        let total = self.status.len();
        let mut rho = vec![0.0; m];
        let mut row_alpha = vec![0.0; total];
        let mut retries = 0;
        loop {
            if self.iterations >= max_iterations {
                return Ok(Some(LpOutcome::IterationLimit));
            }
            if self.past_deadline() {
                return Ok(Some(LpOutcome::TimeLimit));
            }
            self.compute_duals(false);
            if !self.dual_feasible() {
                return Ok(None);
            }
            // leaving row: largest primal infeasibility
            let mut leave: Option<(usize, f64)> = None;
            for p in 0..m {
                let inf = self.infeasibility(self.head[p]);
                if inf > 0.0 && leave.map_or(true, |(_, b)| inf > b) {
                    leave = Some((p, inf));
                }
            }
            let Some((r, _)) = leave else {
                return Ok(Some(LpOutcome::Optimal));
            };
            self.iterations += 1;
            let out = self.head[r];
            let increase = self.x[out] < self.lower[out];
            let target = if increase { self.lower[out] } else { self.upper[out] };
            let s = if increase { 1.0 } else { -1.0 };

            rho.iter_mut().for_each(|v| *v = 0.0);
            rho[r] = 1.0;
            self.lu.btran(&mut rho, &mut self.work);
            let mut theta_max = f64::INFINITY;
            for j in 0..total {
                if self.status[j] == VarStatus::Basic || self.is_fixed(j) {
                    row_alpha[j] = 0.0;
                    continue;
                }
                let a = self.data.dot_column(j, &rho);
                row_alpha[j] = a;
                if let Some(dj) = self.dual_ratio_numerator(j, a, s) {
                    theta_max = theta_max.min((dj + DUAL_TOL) / a.abs());
                }
            }
            if !theta_max.is_finite() {
                if retries < 1 {
                    retries += 1;
                    self.refactor()?;
                    continue;
                }
                return Ok(Some(LpOutcome::Infeasible));
            }
            let mut entering: Option<usize> = None;
            let mut best = 0.0;
            for j in 0..total {
                let a = row_alpha[j];
                if a == 0.0 || self.status[j] == VarStatus::Basic {
                    continue;
                }
                let Some(dj) = self.dual_ratio_numerator(j, a, s) else {
                    continue;
                };
                if dj.max(0.0) / a.abs() <= theta_max && a.abs() > best {
                    best = a.abs();
                    entering = Some(j);
                }
            }
            let q = entering.expect("ratio test found a bound");
            self.ftran_column(q);
            let arq = self.alpha[r];
            if arq.abs() < BREAKDOWN_PIVOT || (arq - row_alpha[q]).abs() > 1e-6 * (1.0 + arq.abs()) {
                retries += 1;
                if retries > 3 {
                    return Err(MilpError::NumericalBreakdown(format!(
                        "unstable dual pivot {arq:e} vs {:e}",
                        row_alpha[q]
                    )));
                }
                self.refactor()?;
                continue;
            }
            retries = 0;
            let delta = (self.x[out] - target) / arq;
            for p in 0..m {
                let j = self.head[p];
                self.x[j] -= self.alpha[p] * delta;
            }
            self.x[q] += delta;
            self.x[out] = target;
            self.status[out] = if increase { VarStatus::AtLower } else { VarStatus::AtUpper };
            self.replace_basic(r, q)?;
        }
    }

    /// For a nonbasic `j` with row entry `a`, returns the (sign-corrected)
    /// reduced cost when `j` can move the leaving variable toward its bound.
    fn dual_ratio_numerator(&self, j: usize, a: f64, s: f64) -> Option<f64> {
        if a.abs() <= PIVOT_TOL {
            return None;
        }
        match self.status[j] {
            VarStatus::AtLower if s * a < 0.0 => Some(self.d[j].max(0.0)),
            VarStatus::AtUpper if s * a > 0.0 => Some((-self.d[j]).max(0.0)),
            VarStatus::Free => Some(self.d[j].abs()),
            _ => None,
        }
    }

    /// Runs dual simplex when possible and primal otherwise; verifies the
    /// final point on a fresh factorization.
    pub fn optimize(&mut self, max_iterations: usize) -> Result<LpOutcome, MilpError> {
        match self.dual(max_iterations)? {
            Some(LpOutcome::Optimal) => {
                self.refactor()?;
                self.primal(max_iterations)
            }
            Some(other) => Ok(other),
            None => self.primal(max_iterations),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.x[..self.data.n]
    }

    pub fn objective(&self) -> f64 {
        (0..self.data.n).map(|j| self.data.cost[j] * self.x[j]).sum()
    }

    /// Row duals `y` and structural reduced costs `c - Aᵀy` for the
    /// current basis.
    pub fn duals(&mut self) -> (Vec<f64>, Vec<f64>) {
        self.compute_duals(false);
        let y = self.y.clone();
        let d = (0..self.data.n)
            .map(|j| self.data.cost[j] - self.data.dot_column(j, &y))
            .collect();
        (y, d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ConstraintSense;

    fn started(data: &LpData) -> Simplex<'_> {
        let mut s = Simplex::new(data);
        s.reset_to_slack_basis().unwrap();
        s
    }

    #[test]
    fn bounded_lp_reaches_upper_bounds() {
        // max x + y with x + 2y ≤ 4, x ≤ 3, y ≤ 3
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, 3.0).unwrap();
        let y = m.add_continuous("y", 0.0, 3.0).unwrap();
        m.add_constraint("r", &[(x, 1.0), (y, 2.0)], ConstraintSense::Le, 4.0).unwrap();
        m.add_objective_term(x, -1.0).unwrap();
        m.add_objective_term(y, -1.0).unwrap();
        let data = LpData::from_model(&m);
        let mut s = started(&data);
        assert_eq!(s.optimize(100).unwrap(), LpOutcome::Optimal);
        assert!((s.objective() + 3.5).abs() < 1e-9);
        assert!((s.values()[0] - 3.0).abs() < 1e-9 && (s.values()[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, 10.0).unwrap();
        m.add_constraint("lo", &[(x, 1.0)], ConstraintSense::Ge, 6.0).unwrap();
        m.add_constraint("hi", &[(x, 1.0)], ConstraintSense::Le, 5.0).unwrap();
        let data = LpData::from_model(&m);
        assert_eq!(started(&data).optimize(100).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn dual_reoptimizes_after_a_bound_change() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, 4.0).unwrap();
        let y = m.add_continuous("y", 0.0, 4.0).unwrap();
        m.add_constraint("r", &[(x, 1.0), (y, 1.0)], ConstraintSense::Ge, 3.0).unwrap();
        m.add_objective_term(x, 1.0).unwrap();
        m.add_objective_term(y, 2.0).unwrap();
        let data = LpData::from_model(&m);
        let mut s = started(&data);
        assert_eq!(s.optimize(100).unwrap(), LpOutcome::Optimal);
        assert!((s.objective() - 3.0).abs() < 1e-9);
        let mut upper = data.upper.clone();
        upper[0] = 1.0;
        s.set_bounds(&data.lower, &upper);
        s.refresh_after_bound_change();
        assert_eq!(s.optimize(100).unwrap(), LpOutcome::Optimal);
        assert!((s.objective() - 5.0).abs() < 1e-9, "{}", s.objective());
    }
}
