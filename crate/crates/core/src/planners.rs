//! The MILP planner and the decoupled two-stage baseline (grid A* followed
//! by greedy scan scheduling).

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use bliss_milp::{solve_with_start, MilpError, SolveLimits, SolveStatus};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{propagate_mean, BeliefError, HybridAction, Vec4};
use crate::encoder::{
    assignment_from_plan, convex_overlap, decode, encode, goal_admissible, in_goal, DecodeError, EncodeError, Plan, ProblemConfig,
};
use crate::geometry::{ConvexObstacle, GeometryError, Point, WorldMap};

pub const GRID_RESOLUTION: f64 = 0.25;

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("no grid path between start and goal")]
    NoPath,
    #[error("waypoint {0} violates a chance constraint even right after a scan")]
    Unschedulable(usize),
    #[error("solver found no feasible plan ({0:?})")]
    NoSolution(SolveStatus),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Milp(#[from] MilpError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Belief(#[from] BeliefError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    Milp,
    #[serde(alias = "two-stage")]
    TwoStage,
}

impl PlannerKind {
    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::Milp => "milp",
            PlannerKind::TwoStage => "two_stage",
        }
    }
}

impl std::str::FromStr for PlannerKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "milp" => Ok(PlannerKind::Milp),
            "two_stage" | "two-stage" | "twostage" => Ok(PlannerKind::TwoStage),
            other => Err(format!("unknown planner `{other}` (expected milp or two_stage)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlannerOutput {
    pub plan: Plan,
    /// Seconds spent planning.
    pub compute_time: f64,
    /// `None` for the two-stage planner.
    pub solver_status: Option<SolveStatus>,
    /// Relative gap reported by the solver (0 for the two-stage planner).
    pub gap: f64,
    pub replan_index: usize,
}

impl PlannerOutput {
    pub fn is_suboptimal(&self) -> bool {
        self.solver_status == Some(SolveStatus::LimitReached)
    }
}

/// Row-major cell index `(col, row)`.
pub type Cell = (usize, usize);

/// Occupancy lattice over the workspace bounds.
#[derive(Debug, Clone)]
pub struct GridMap {
    pub resolution: f64,
    pub origin: Point,
    pub cols: usize,
    pub rows: usize,
    occupied: Vec<bool>,
}

impl GridMap {
    /// Marks every cell whose closed square meets an obstacle inflated by
    /// `radius`, then frees the start and goal cells.
    pub fn build(map: &WorldMap, resolution: f64, radius: f64, start: Point) -> Result<Self, PlannerError> {
        if !(resolution > 0.0) || !(radius >= 0.0) {
            return Err(PlannerError::InvalidGrid(format!("resolution {resolution}, radius {radius}")));
        }
        let b = map.bounds;
        let cols = (b.width() / resolution - 1e-9).ceil().max(1.0) as usize;
        let rows = (b.height() / resolution - 1e-9).ceil().max(1.0) as usize;
        let inflated = map.inflated(radius)?;
        let mut grid = GridMap { resolution, origin: [b.xmin, b.ymin], cols, rows, occupied: vec![false; cols * rows] };
        for r in 0..rows {
            for c in 0..cols {
                let x0 = b.xmin + c as f64 * resolution;
                let y0 = b.ymin + r as f64 * resolution;
                let square = ConvexObstacle::rectangle(x0, y0, x0 + resolution, y0 + resolution)?;
                let bbox = square.bounding_box();
                grid.occupied[r * cols + c] = inflated.iter().any(|o| {
                    let ob = o.bounding_box();
                    ob[0] <= bbox[2] && bbox[0] <= ob[2] && ob[1] <= bbox[3] && bbox[1] <= ob[3] && convex_overlap(o, &square)
                });
            }
        }
        for p in [start, map.goal] {
            let c = grid.cell_of(p);
            grid.occupied[c.1 * cols + c.0] = false;
        }
        Ok(grid)
    }

    /// Grid of the given size with the listed cells blocked.
    pub fn from_cells(cols: usize, rows: usize, resolution: f64, blocked: &[Cell]) -> Self {
        let mut occupied = vec![false; cols * rows];
        for &(c, r) in blocked {
            occupied[r * cols + c] = true;
        }
        GridMap { resolution, origin: [0.0, 0.0], cols, rows, occupied }
    }

    pub fn cell_of(&self, p: Point) -> Cell {
        let c = ((p[0] - self.origin[0]) / self.resolution).floor().clamp(0.0, (self.cols - 1) as f64) as usize;
        let r = ((p[1] - self.origin[1]) / self.resolution).floor().clamp(0.0, (self.rows - 1) as f64) as usize;
        (c, r)
    }

    pub fn center(&self, cell: Cell) -> Point {
        [
            self.origin[0] + (cell.0 as f64 + 0.5) * self.resolution,
            self.origin[1] + (cell.1 as f64 + 0.5) * self.resolution,
        ]
    }

    pub fn is_occupied(&self, cell: Cell) -> bool {
        self.occupied[cell.1 * self.cols + cell.0]
    }

    pub fn index(&self, cell: Cell) -> usize {
        cell.1 * self.cols + cell.0
    }

    /// 8-connected free neighbours with step costs. Diagonal steps need
    /// both adjacent orthogonal cells free.
    pub fn neighbours(&self, cell: Cell) -> impl Iterator<Item = (Cell, f64)> + '_ {
        let (c, r) = (cell.0 as i64, cell.1 as i64);
        const D: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];
        D.iter().filter_map(move |&(dc, dr)| {
            let (nc, nr) = (c + dc, r + dr);
            let inside = |a: i64, b: i64| a >= 0 && b >= 0 && (a as usize) < self.cols && (b as usize) < self.rows;
            if !inside(nc, nr) || self.is_occupied((nc as usize, nr as usize)) {
                return None;
            }
            if dc != 0 && dr != 0 {
                if self.is_occupied(((c + dc) as usize, r as usize)) || self.is_occupied((c as usize, (r + dr) as usize)) {
                    return None;
                }
                Some(((nc as usize, nr as usize), std::f64::consts::SQRT_2))
            } else {
                Some(((nc as usize, nr as usize), 1.0))
            }
        })
    }
}

fn octile(a: Cell, b: Cell) -> f64 {
    let dx = (a.0 as f64 - b.0 as f64).abs();
    let dy = (a.1 as f64 - b.1 as f64).abs();
    dx.max(dy) + (std::f64::consts::SQRT_2 - 1.0) * dx.min(dy)
}

#[derive(PartialEq)]
struct Open {
    f: f64,
    h: f64,
    index: usize,
    cell: Cell,
}

impl Eq for Open {}

impl Ord for Open {
    // BinaryHeap is a max-heap: reverse so the smallest (f, h, index) pops first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then(other.h.total_cmp(&self.h))
            .then(other.index.cmp(&self.index))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest 8-connected path in cells (unit orthogonal and √2 diagonal
/// steps), including both endpoints. Ties break on `(f, h, row-major index)`.
pub fn astar(grid: &GridMap, start: Cell, goal: Cell) -> Result<Vec<Cell>, PlannerError> {
    if grid.is_occupied(start) || grid.is_occupied(goal) {
        return Err(PlannerError::NoPath);
    }
    let n = grid.cols * grid.rows;
    let mut g = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    g[grid.index(start)] = 0.0;
    let h0 = octile(start, goal);
    open.push(Open { f: h0, h: h0, index: grid.index(start), cell: start });
    while let Some(Open { index, cell, .. }) = open.pop() {
        if closed[index] {
            continue;
        }
        closed[index] = true;
        if cell == goal {
            let mut path = vec![cell];
            let mut at = index;
            while parent[at] != usize::MAX {
                at = parent[at];
                path.push((at % grid.cols, at / grid.cols));
            }
            path.reverse();
            return Ok(path);
        }
        for (next, cost) in grid.neighbours(cell) {
            let ni = grid.index(next);
            let cand = g[index] + cost;
            if !closed[ni] && cand < g[ni] - 1e-12 {
                g[ni] = cand;
                parent[ni] = index;
                let h = octile(next, goal);
                open.push(Open { f: cand + h, h, index: ni, cell: next });
            }
        }
    }
    Err(PlannerError::NoPath)
}

/// Length of a cell path with unit orthogonal and √2 diagonal steps.
pub fn path_cost(path: &[Cell]) -> f64 {
    path.windows(2)
        .map(|w| if w[0].0 != w[1].0 && w[0].1 != w[1].1 { std::f64::consts::SQRT_2 } else { 1.0 })
        .sum()
}

/// Turns a cell path into waypoints: the exact start, the cell centres where
/// the direction changes, and the exact goal.
pub fn waypoints(grid: &GridMap, path: &[Cell], start: Point, goal: Point) -> Vec<Point> {
    let mut out = vec![start];
    let dir = |a: Cell, b: Cell| (b.0 as i64 - a.0 as i64, b.1 as i64 - a.1 as i64);
    for i in 1..path.len().saturating_sub(1) {
        if dir(path[i - 1], path[i]) != dir(path[i], path[i + 1]) {
            out.push(grid.center(path[i]));
        }
    }
    if out.last() != Some(&goal) {
        out.push(goal);
    }
    out
}

/// Max-speed moves from `from` to `to`: full steps of `v_max` on the
/// dominant axis, then one shorter move for the remainder.
pub fn segment_moves(from: Point, to: Point, v_max: f64, dt: f64) -> Vec<HybridAction> {
    let d = [to[0] - from[0], to[1] - from[1]];
    let len = d[0].abs().max(d[1].abs());
    if len <= 1e-12 {
        return Vec::new();
    }
    let step = v_max * dt;
    let full = ((len / step) + 1e-9).floor() as usize;
    let u = [d[0] / len * v_max, d[1] / len * v_max];
    let mut out = vec![HybridAction::Move { u }; full];
    let rest = len - full as f64 * step;
    if rest > 1e-9 {
        let f = rest / len / dt;
        out.push(HybridAction::Move { u: [d[0] * f, d[1] * f] });
    }
    out
}

/// Whether `mean` satisfies every obstacle's chance constraint.
pub fn mean_is_safe(problem: &ProblemConfig, obstacles: &[ConvexObstacle], betas: &[Vec<f64>], mean: &Vec4) -> bool {
    let d = problem.backoff_driver(mean);
    obstacles.iter().zip(betas).all(|(o, b)| {
        o.halfplanes().iter().zip(b).any(|(h, &bt)| h.eval([mean[0], mean[1]]) - bt * d >= h.offset - 1e-9)
    })
}

/// Walks `path` at maximum speed and inserts a scan right before any move
/// whose resulting mean would violate a chance constraint. Stops on
/// arrival, scanning there if the covariance is still too large.
pub fn schedule_scans(path: &[Point], problem: &ProblemConfig) -> Result<Plan, PlannerError> {
    let s = &problem.settings;
    let obstacles = problem.planning_obstacles()?;
    let betas = problem.backoffs()?;
    let mut mean = problem.start_mean();
    let mut actions = Vec::new();
    let scan = HybridAction::Scan;
    let mut arrived = in_goal(problem, &mean);
    'legs: for (w, leg) in path.windows(2).enumerate() {
        for mv in segment_moves([mean[0], mean[1]], leg[1], s.v_max, s.dt) {
            if arrived {
                break 'legs;
            }
            let mut next = propagate_mean(mean, &mv, s.dt)?;
            if !mean_is_safe(problem, &obstacles, &betas, &next) {
                if mean[3] <= 1.0 {
                    return Err(PlannerError::Unschedulable(w + 1));
                }
                actions.push(scan);
                mean = propagate_mean(mean, &scan, s.dt)?;
                next = propagate_mean(mean, &mv, s.dt)?;
                if !mean_is_safe(problem, &obstacles, &betas, &next) {
                    return Err(PlannerError::Unschedulable(w + 1));
                }
            }
            actions.push(mv);
            mean = next;
            arrived = in_goal(problem, &mean);
            if !arrived && l1(problem, &mean) <= s.eps_g {
                actions.push(scan);
                mean = propagate_mean(mean, &scan, s.dt)?;
                arrived = true;
            }
        }
    }
    if !arrived {
        actions.push(scan);
    }
    Ok(Plan::from_actions(problem, &actions)?)
}

fn l1(problem: &ProblemConfig, mean: &Vec4) -> f64 {
    (mean[0] - problem.map.goal[0]).abs() + (mean[1] - problem.map.goal[1]).abs()
}

/// Grid inflation used by the two-stage planner: the planning inflation plus
/// the largest back-off right after a scan.
pub fn two_stage_radius(problem: &ProblemConfig) -> Result<f64, PlannerError> {
    let beta = problem.backoffs()?.into_iter().flatten().fold(0.0, f64::max);
    Ok(problem.inflation_radius() + beta)
}

/// A* on a grid inflated by `radius`, then scan scheduling.
pub fn grid_plan(problem: &ProblemConfig, radius: f64) -> Result<Plan, PlannerError> {
    let grid = GridMap::build(&problem.map, GRID_RESOLUTION, radius, problem.start)?;
    let cells = astar(&grid, grid.cell_of(problem.start), grid.cell_of(problem.map.goal))?;
    let path = waypoints(&grid, &cells, problem.start, problem.map.goal);
    schedule_scans(&path, problem)
}

/// The two-stage baseline: shortest grid path, then scans wherever the
/// accumulated uncertainty requires one.
pub fn plan_two_stage(problem: &ProblemConfig) -> Result<PlannerOutput, PlannerError> {
    let clock = Instant::now();
    problem.validate()?;
    let plan = grid_plan(problem, two_stage_radius(problem)?)?;
    Ok(PlannerOutput {
        plan,
        compute_time: clock.elapsed().as_secs_f64(),
        solver_status: None,
        gap: 0.0,
        replan_index: 0,
    })
}

/// Earliest-arrival grid search without intermediate scans. A cell is
/// usable only if the chance constraints hold at its centre for the clock
/// value at which the robot would get there moving at full speed (one
/// Chebyshev cell per half step at the default settings). Because the
/// constraint only tightens with time, expanding cells in arrival order is
/// exact on the grid.
pub fn clock_aware_path(problem: &ProblemConfig, resolution: f64) -> Result<Vec<Point>, PlannerError> {
    let s = &problem.settings;
    let obstacles = problem.planning_obstacles()?;
    let betas = problem.backoffs()?;
    let grid = GridMap::build(&problem.map, resolution, 0.0, problem.start)?;
    let per_cell = resolution / (s.v_max * s.dt);
    let start = grid.cell_of(problem.start);
    let goal = grid.cell_of(problem.map.goal);
    let n = grid.cols * grid.rows;
    let mut g = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    let cheb = |a: Cell, b: Cell| (a.0 as f64 - b.0 as f64).abs().max((a.1 as f64 - b.1 as f64).abs());
    g[grid.index(start)] = 0.0;
    open.push(Open { f: cheb(start, goal), h: cheb(start, goal), index: grid.index(start), cell: start });
    while let Some(Open { index, cell, .. }) = open.pop() {
        if closed[index] {
            continue;
        }
        closed[index] = true;
        if cell == goal {
            let mut path = vec![cell];
            let mut at = index;
            while parent[at] != usize::MAX {
                at = parent[at];
                path.push((at % grid.cols, at / grid.cols));
            }
            path.reverse();
            return Ok(waypoints(&grid, &path, problem.start, problem.map.goal));
        }
        for (next, _) in grid.neighbours(cell) {
            let ni = grid.index(next);
            let cand = g[index] + 1.0;
            if closed[ni] || cand >= g[ni] - 1e-12 {
                continue;
            }
            // one extra step of clock and the whole cell, since the moves
            // do not land exactly on cell centres
            let t = problem.start_time + cand * per_cell + 1.0;
            let c = grid.center(next);
            let half = resolution / 2.0;
            let safe = [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)].iter().all(|&(dx, dy)| {
                let mean = [c[0] + dx * half, c[1] + dy * half, t * t, t];
                mean_is_safe(problem, &obstacles, &betas, &mean)
            });
            if next != goal && !safe {
                continue;
            }
            g[ni] = cand;
            parent[ni] = index;
            let h = cheb(next, goal);
            open.push(Open { f: cand + h, h, index: ni, cell: next });
        }
    }
    Err(PlannerError::NoPath)
}

/// Cheap feasible plans used to seed the branch and bound: grid paths at a
/// ladder of inflation levels (the back-off at several clock values), each
/// followed by scan scheduling. Wider margins trade path length for fewer
/// scans.
pub fn seed_plans(problem: &ProblemConfig) -> Vec<Plan> {
    let Ok(base) = two_stage_radius(problem) else { return Vec::new() };
    let beta = base - problem.inflation_radius();
    let horizon = problem.settings.horizon as f64 * problem.settings.dt;
    let mut out: Vec<Plan> = Vec::new();
    for i in 0..=8 {
        let t = 1.0 + horizon * i as f64 / 8.0;
        if let Ok(plan) = grid_plan(problem, base + beta * (t - 1.0)) {
            if !out.iter().any(|p| p.steps == plan.steps) {
                out.push(plan);
            }
        }
    }
    if let Ok(plan) = clock_aware_path(problem, GRID_RESOLUTION).and_then(|path| schedule_scans(&path, problem)) {
        out.push(plan);
    }
    out
}

/// Encodes, solves and decodes. The branch and bound starts from the best
/// seed plan that fits the horizon. When the solve stops on a limit the
/// incumbent is returned and the output is flagged suboptimal.
pub fn plan_milp(problem: &ProblemConfig, limits: &SolveLimits) -> Result<PlannerOutput, PlannerError> {
    plan_milp_seeded(problem, limits, &seed_plans(problem))
}

pub fn plan_milp_seeded(problem: &ProblemConfig, limits: &SolveLimits, seeds: &[Plan]) -> Result<PlannerOutput, PlannerError> {
    let clock = Instant::now();
    let encoded = encode(problem)?;
    if !goal_admissible(problem)? {
        return Err(PlannerError::NoSolution(SolveStatus::Infeasible));
    }
    let mut start: Option<(f64, Vec<f64>)> = None;
    for plan in seeds {
        if let Some(v) = assignment_from_plan(problem, &encoded, plan) {
            if encoded.model.max_violation(&v) > 1e-6 {
                continue;
            }
            let obj = encoded.model.objective().evaluate(&v);
            if start.as_ref().map_or(true, |(best, _)| obj < *best) {
                start = Some((obj, v));
            }
        }
    }
    let solution = solve_with_start(&encoded.model, limits, start.as_ref().map(|(_, v)| v.as_slice()))?;
    match solution.status {
        SolveStatus::Optimal | SolveStatus::LimitReached if solution.has_incumbent() => {}
        status => return Err(PlannerError::NoSolution(status)),
    }
    let plan = decode(problem, &encoded, &solution)?;
    Ok(PlannerOutput {
        plan,
        compute_time: clock.elapsed().as_secs_f64(),
        solver_status: Some(solution.status),
        gap: solution.relative_gap(),
        replan_index: 0,
    })
}

/// Runs the selected planner. `limits` only affects the MILP planner.
pub fn plan_with(kind: PlannerKind, problem: &ProblemConfig, limits: &SolveLimits) -> Result<PlannerOutput, PlannerError> {
    match kind {
        PlannerKind::Milp => plan_milp(problem, limits),
        PlannerKind::TwoStage => plan_two_stage(problem),
    }
}
