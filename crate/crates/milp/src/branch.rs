//! Best-bound branch-and-bound over binary variables.
//!
//! Nodes are re-optimized with the dual simplex starting from the parent's
//! optimal basis. Until a first incumbent exists the search dives depth
//! first; afterwards it always expands the open node with the lowest bound,
//! preferring deeper nodes on ties. Branching picks the most fractional
//! binary, lowest index on ties.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::{Duration, Instant};

use crate::disjunction::{GroupState, Groups};
use crate::error::{MilpError, Result};
use crate::model::{MilpModel, VarId};
use crate::relaxation::iteration_cap;
use crate::simplex::{LpData, LpOutcome, Simplex, VarStatus};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveLimits {
    /// Wall-clock budget in seconds.
    pub time_limit: f64,
    pub node_limit: u64,
    pub relative_gap: f64,
    pub integrality_tolerance: f64,
}

impl Default for SolveLimits {
    fn default() -> Self {
        SolveLimits { time_limit: 300.0, node_limit: 1_000_000, relative_gap: 1e-6, integrality_tolerance: 1e-6 }
    }
}

impl SolveLimits {
    pub fn validate(&self) -> Result<()> {
        let ok = self.time_limit > 0.0
            && self.node_limit > 0
            && self.relative_gap > 0.0
            && self.integrality_tolerance > 0.0
            && self.integrality_tolerance < 0.5;
        if ok {
            Ok(())
        } else {
            Err(MilpError::ModelMalformed(format!("invalid solve limits {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    LimitReached,
}

#[derive(Debug, Clone)]
pub struct MilpSolution {
    pub status: SolveStatus,
    /// Incumbent assignment; empty when no feasible point is known.
    pub values: Vec<f64>,
    pub objective_value: f64,
    /// Proven lower bound on the optimum.
    pub best_bound: f64,
    pub node_count: u64,
    pub lp_iterations: u64,
    /// Seconds.
    pub wall_time: f64,
}

impl MilpSolution {
    pub fn has_incumbent(&self) -> bool {
        !self.values.is_empty()
    }

    pub fn value(&self, var: VarId) -> f64 {
        self.values[var.0]
    }

    pub fn relative_gap(&self) -> f64 {
        if !self.has_incumbent() {
            return f64::INFINITY;
        }
        relative_gap(self.objective_value, self.best_bound)
    }
}

fn relative_gap(incumbent: f64, bound: f64) -> f64 {
    ((incumbent - bound).max(0.0)) / incumbent.abs().max(1e-10)
}

/// Detects a common step `g` such that every feasible objective value is
/// `constant + k·g` for an integer `k`. Requires all objective weight to sit
/// on binaries with coefficients that are integer multiples of `g`.
pub(crate) fn objective_granularity(model: &MilpModel) -> Option<f64> {
    let mut coefs = Vec::new();
    for &(v, c) in &model.objective().terms {
        if c == 0.0 {
            continue;
        }
        if !model.variable(v).is_binary() {
            return None;
        }
        coefs.push(c.abs());
    }
    let g = coefs.iter().copied().fold(f64::INFINITY, f64::min);
    if !g.is_finite() {
        return None;
    }
    // try g, g/2, ..., g/12 as the common step
    for div in 1..=12 {
        let step = g / div as f64;
        if coefs.iter().all(|c| {
            let k = c / step;
            (k - k.round()).abs() < 1e-9 * k.max(1.0)
        }) {
            return Some(step);
        }
    }
    None
}

struct Node {
    bound: f64,
    depth: u32,
    seq: u64,
    changes: Rc<Vec<(usize, f64, f64)>>,
    basis: Rc<Vec<VarStatus>>,
    parent: u64,
}

/// Heap entry. While diving the deepest, newest node comes first; in
/// best-bound mode the lowest bound does, deeper and newer on ties.
struct Ranked {
    node: Node,
    best_bound_mode: bool,
}

impl Ranked {
    fn key(&self) -> (f64, u32, u64) {
        if self.best_bound_mode {
            (-self.node.bound, self.node.depth, self.node.seq)
        } else {
            (0.0, self.node.depth, self.node.seq)
        }
    }
}

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ranked {}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.key(), other.key());
        a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
    }
}

struct Search<'a> {
    model: &'a MilpModel,
    limits: SolveLimits,
    granularity: Option<f64>,
    constant: f64,
    incumbent: Option<(f64, Vec<f64>)>,
}

impl Search<'_> {
    fn rounded(&self, bound: f64) -> f64 {
        match self.granularity {
            Some(g) => {
                let k = ((bound - self.constant) / g - 1e-6).ceil();
                self.constant + k * g
            }
            None => bound,
        }
    }

    /// Whether a node with this bound can still beat the incumbent.
    fn promising(&self, bound: f64) -> bool {
        match &self.incumbent {
            None => true,
            Some((best, _)) => {
                let b = self.rounded(bound);
                match self.granularity {
                    Some(g) => b < best - 0.5 * g,
                    None => {
                        let tol = (self.limits.relative_gap * best.abs()).max(1e-9);
                        b < best - tol
                    }
                }
            }
        }
    }

    fn offer(&mut self, values: Vec<f64>) {
        let obj = self.model.objective().evaluate(&values);
        if self.incumbent.as_ref().map_or(true, |(best, _)| obj < *best) {
            self.incumbent = Some((obj, values));
        }
    }
}

enum Branch {
    Variable(usize, f64),
    Group(usize),
}

/// Picks the highest priority class among fractional binaries outside any
/// disjunction and violated disjunctions. Within a class a violated
/// disjunction wins (largest breach first); otherwise the most fractional
/// binary, lowest index on ties. Fractional members of repairable groups
/// are left alone. `None` when nothing needs branching.
fn choose_branch(
    values: &[f64],
    binaries: &[usize],
    priority: &[i32],
    grouped: &[bool],
    groups: &Groups,
    upper: &[f64],
    activity: &[f64],
    int_tol: f64,
) -> Option<Branch> {
    let mut var: Option<(i32, f64, usize)> = None;
    for &b in binaries {
        if grouped[b] {
            continue;
        }
        let v = values[b];
        let frac = v.min(1.0 - v);
        if frac <= int_tol {
            continue;
        }
        if var.map_or(true, |(p, f, _)| priority[b] > p || (priority[b] == p && frac > f)) {
            var = Some((priority[b], frac, b));
        }
    }
    let mut group: Option<(i32, f64, usize)> = None;
    for g in 0..groups.members.len() {
        if let GroupState::Violated { violation } = groups.state(g, values, upper, activity, int_tol) {
            let p = groups.priority[g];
            if group.map_or(true, |(gp, gv, _)| p > gp || (p == gp && violation > gv)) {
                group = Some((p, violation, g));
            }
        }
    }
    match (var, group) {
        (Some((vp, _, b)), Some((gp, _, _))) if vp > gp => Some(Branch::Variable(b, values[b])),
        (_, Some((_, _, g))) => Some(Branch::Group(g)),
        (Some((_, _, b)), None) => Some(Branch::Variable(b, values[b])),
        (None, None) => None,
    }
}

fn most_fractional(values: &[f64], binaries: &[usize], int_tol: f64) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for &b in binaries {
        let frac = values[b].min(1.0 - values[b]);
        if frac > int_tol && best.map_or(true, |(f, _)| frac > f) {
            best = Some((frac, b));
        }
    }
    best.map(|(_, b)| b)
}

/// Solves `model` to optimality (within `limits.relative_gap`) or until a
/// limit is hit.
pub fn solve(model: &MilpModel, limits: &SolveLimits) -> Result<MilpSolution> {
    solve_with_start(model, limits, None)
}

/// As [`solve`], seeding the search with a known feasible assignment. The
/// start is ignored when it violates the model by more than `1e-6`.
pub fn solve_with_start(model: &MilpModel, limits: &SolveLimits, start: Option<&[f64]>) -> Result<MilpSolution> {
    model.validate()?;
    limits.validate()?;
    let clock = Instant::now();
    let data = LpData::from_model(model);
    let cap = iteration_cap(&data);
    let binaries: Vec<usize> = model.binary_ids().into_iter().map(|v| v.0).collect();
    let int_tol = limits.integrality_tolerance;
    let mut search = Search {
        model,
        limits: *limits,
        granularity: objective_granularity(model),
        constant: model.objective().constant,
        incumbent: None,
    };
    if let Some(start) = start {
        if start.len() == model.num_variables()
            && model.max_violation(start) <= 1e-6
            && binaries.iter().all(|&b| (start[b] - start[b].round()).abs() <= int_tol)
        {
            let mut v = start.to_vec();
            for &b in &binaries {
                v[b] = v[b].round();
            }
            search.offer(v);
        }
    }

    let root_lower = data.lower.clone();
    let root_upper = data.upper.clone();
    let mut simplex = Simplex::new(&data);
    simplex.deadline = clock.checked_add(Duration::from_secs_f64(limits.time_limit.min(1e9)));
    simplex.reset_to_slack_basis()?;

    let mut best_mode = search.incumbent.is_some();
    let mut open: BinaryHeap<Ranked> = BinaryHeap::new();
    open.push(Ranked {
        node: Node {
            bound: f64::NEG_INFINITY,
            depth: 0,
            seq: 0,
            changes: Rc::new(Vec::new()),
            basis: Rc::new(simplex.statuses().to_vec()),
            parent: u64::MAX,
        },
        best_bound_mode: best_mode,
    });
    let priority: Vec<i32> = model.variables().iter().map(|v| v.priority).collect();
    let groups = Groups::new(model);
    let mut grouped = vec![false; model.num_variables()];
    for m in &groups.members {
        for &j in m {
            grouped[j] = true;
        }
    }
    let mut seq: u64 = 1;
    let mut node_count: u64 = 0;
    let mut last_solved: u64 = u64::MAX;
    let mut limit_hit = false;
    let mut root_unbounded = false;
    let mut lower = root_lower.clone();
    let mut upper = root_upper.clone();

    loop {
        if !best_mode && search.incumbent.is_some() {
            best_mode = true;
            open = open.into_iter().map(|r| Ranked { node: r.node, best_bound_mode: true }).collect();
        }
        if best_mode {
            while open.peek().is_some_and(|r| !search.promising(r.node.bound)) {
                open.pop();
            }
        }
        let Some(top) = open.peek() else { break };
        if let Some((best, _)) = &search.incumbent {
            if relative_gap(*best, search.rounded(top.node.bound)) <= limits.relative_gap {
                break;
            }
        }
        if node_count >= limits.node_limit || clock.elapsed().as_secs_f64() >= limits.time_limit {
            limit_hit = true;
            break;
        }
        let node = open.pop().expect("peeked").node;
        if !search.promising(node.bound) {
            continue;
        }
        node_count += 1;

        lower.copy_from_slice(&root_lower);
        upper.copy_from_slice(&root_upper);
        for &(j, lo, hi) in node.changes.iter() {
            lower[j] = lo;
            upper[j] = hi;
        }
        simplex.set_bounds(&lower, &upper);
        if node.parent != last_solved || node.parent == u64::MAX {
            simplex.load_basis(&node.basis)?;
        } else {
            simplex.refresh_after_bound_change();
        }
        let mut outcome = simplex.optimize(simplex.iterations + cap)?;
        if outcome == LpOutcome::IterationLimit {
            simplex.reset_to_slack_basis()?;
            outcome = simplex.primal(simplex.iterations + cap)?;
            if outcome == LpOutcome::IterationLimit {
                return Err(MilpError::NumericalBreakdown("node LP hit the iteration limit".into()));
            }
        }
        if outcome == LpOutcome::TimeLimit {
            limit_hit = true;
            break;
        }
        last_solved = node.seq;
        match outcome {
            LpOutcome::Infeasible => continue,
            LpOutcome::Unbounded => {
                if node.depth == 0 {
                    root_unbounded = true;
                    break;
                }
                continue;
            }
            _ => {}
        }
        let obj = simplex.objective() + search.constant;
        if !search.promising(obj) {
            continue;
        }
        let values = simplex.values();
        let activity = if groups.is_empty() { Vec::new() } else { Groups::activities(model, values) };
        // repair-and-round heuristic on every node
        let candidate = groups.repair_and_round(values, &upper, &binaries, &activity, int_tol);
        let candidate_ok = model.max_violation(&candidate) <= 1e-6;
        let candidate_obj = model.objective().evaluate(&candidate);
        if candidate_ok {
            search.offer(candidate);
            if !search.promising(obj) {
                continue;
            }
        }
        let decision = match choose_branch(values, &binaries, &priority, &grouped, &groups, &upper, &activity, int_tol) {
            Some(d) => d,
            None if candidate_ok && candidate_obj <= obj + 1e-9 => continue,
            None => match most_fractional(values, &binaries, int_tol) {
                Some(b) => Branch::Variable(b, values[b]),
                None => {
                    let mut vals = values.to_vec();
                    for &bi in &binaries {
                        vals[bi] = vals[bi].round().clamp(0.0, 1.0);
                    }
                    search.offer(vals);
                    continue;
                }
            },
        };
        let basis = Rc::new(simplex.statuses().to_vec());
        // children listed least promising first; the last is expanded first on ties
        let children: Vec<Vec<(usize, f64, f64)>> = match decision {
            Branch::Variable(b, v) => {
                let mut order = [0.0, 1.0];
                if v < 0.5 {
                    order.swap(0, 1);
                }
                order
                    .iter()
                    .map(|&val| {
                        let mut ch = (*node.changes).clone();
                        ch.push((b, val, val));
                        ch
                    })
                    .collect()
            }
            Branch::Group(g) => {
                let mut members: Vec<usize> = groups.members[g].iter().copied().filter(|&j| upper[j] > 0.5).collect();
                members.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(b.cmp(&a)));
                members
                    .into_iter()
                    .map(|j| {
                        let mut ch = (*node.changes).clone();
                        ch.push((j, 1.0, 1.0));
                        ch
                    })
                    .collect()
            }
        };
        let rounded = search.rounded(obj).max(node.bound);
        for ch in children {
            open.push(Ranked {
                node: Node {
                    bound: rounded,
                    depth: node.depth + 1,
                    seq,
                    changes: Rc::new(ch),
                    basis: Rc::clone(&basis),
                    parent: node.seq,
                },
                best_bound_mode: best_mode,
            });
            seq += 1;
        }
    }

    let wall_time = clock.elapsed().as_secs_f64();
    let lp_iterations = simplex.iterations as u64;
    if root_unbounded {
        return Ok(MilpSolution {
            status: SolveStatus::Unbounded,
            values: Vec::new(),
            objective_value: f64::NEG_INFINITY,
            best_bound: f64::NEG_INFINITY,
            node_count,
            lp_iterations,
            wall_time,
        });
    }
    let open_bound = open.iter().map(|r| search.rounded(r.node.bound)).fold(f64::INFINITY, f64::min);
    match search.incumbent {
        Some((obj, values)) => {
            let best_bound = open_bound.min(obj);
            let status = if limit_hit && relative_gap(obj, best_bound) > limits.relative_gap {
                SolveStatus::LimitReached
            } else {
                SolveStatus::Optimal
            };
            Ok(MilpSolution { status, values, objective_value: obj, best_bound, node_count, lp_iterations, wall_time })
        }
        None => Ok(MilpSolution {
            status: if limit_hit { SolveStatus::LimitReached } else { SolveStatus::Infeasible },
            values: Vec::new(),
            objective_value: f64::INFINITY,
            best_bound: if limit_hit { open_bound } else { f64::INFINITY },
            node_count,
            lp_iterations,
            wall_time,
        }),
    }
}
