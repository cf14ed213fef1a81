//! Problem configuration, MILP encoding of the Move/Scan planning problem,
//! decoding of solver output into a plan, and a plan checker shared by all
//! planners.

use bliss_milp::{ConstraintSense, MilpModel, MilpSolution, VarId};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{
    self, per_obstacle_risk, propagate_mean, risk_backoff, validate_covariance, BackoffForm, BeliefError, Cov2,
    HybridAction, Vec4,
};
use crate::geometry::{ConvexObstacle, GeometryError, Point, WorldMap};

const CHECK_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("start violates the chance constraint of obstacle {0} even right after a scan")]
    RiskInfeasible(usize),
    #[error(transparent)]
    Belief(#[from] BeliefError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Milp(#[from] bliss_milp::MilpError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error("solution has no assignment")]
    NoAssignment,
    #[error("inconsistent solution at step {step}: {detail}")]
    InconsistentSolution { step: usize, detail: String },
}

/// Big-M constants for the disjunctive rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum BigM {
    /// One constant per family, from the workspace diagonal.
    #[default]
    Auto,
    /// Smallest valid constant per obstacle row given per-step reachable boxes.
    Tight,
    Manual { obstacle: f64, goal: f64, covariance: f64 },
}

/// Everything but the map. All fields have defaults so config files can be
/// partial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub horizon: usize,
    pub dt: f64,
    /// Per-step position noise covariance (m²).
    pub sigma_w: Cov2,
    pub v_max: f64,
    pub delta_c: f64,
    pub eps_g: f64,
    pub eps_sigma: f64,
    pub cost_scan: f64,
    pub cost_outside: f64,
    pub big_m: BigM,
    pub backoff: BackoffForm,
    /// Once in the goal the plan stays there, and the covariance bound is
    /// checked at the arrival step only.
    pub absorbing_goal: bool,
    /// Inflate obstacles by `v_max·dt/2` against corner cutting.
    pub corner_inflation: bool,
    /// Emit the valid inequality "some scan happened within the last
    /// `t_max` steps before arrival" to strengthen the relaxation.
    pub window_cuts: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            horizon: 40,
            dt: 1.0,
            sigma_w: [[4e-4, 0.0], [0.0, 4e-4]],
            v_max: 0.5,
            delta_c: 0.1,
            eps_g: 0.5,
            eps_sigma: 0.08,
            cost_scan: 100.0,
            cost_outside: 0.5,
            big_m: BigM::Auto,
            backoff: BackoffForm::StdDev,
            absorbing_goal: true,
            corner_inflation: true,
            window_cuts: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub map: WorldMap,
    /// Belief mean position at step 0 (the map start unless replanning).
    pub start: Point,
    /// Time since the last scan at step 0.
    pub start_time: f64,
    pub settings: Settings,
}

impl ProblemConfig {
    pub fn new(map: WorldMap, settings: Settings) -> Self {
        Self { start: map.start, map, start_time: 1.0, settings }
    }

    /// Same problem re-rooted at `start` with `start_time`.
    pub fn from_state(&self, start: Point, start_time: f64) -> Self {
        Self { start, start_time, ..self.clone() }
    }

    pub fn start_mean(&self) -> Vec4 {
        [self.start[0], self.start[1], self.start_time * self.start_time, self.start_time]
    }

    pub fn validate(&self) -> Result<(), EncodeError> {
        let s = &self.settings;
        let bad = |m: &str| Err(EncodeError::InvalidConfig(m.into()));
        if s.horizon < 1 {
            return bad("horizon must be at least 1");
        }
        if !(s.dt > 0.0 && s.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(s.delta_c > 0.0 && s.delta_c < 0.5) {
            return bad("delta_c must lie in (0, 0.5)");
        }
        if !(s.eps_g > 0.0) {
            return bad("eps_g must be positive");
        }
        if !(s.v_max > 0.0 && s.v_max.is_finite()) {
            return bad("v_max must be positive");
        }
        if !(s.cost_scan >= 0.0 && s.cost_outside >= 0.0) {
            return bad("costs must be non-negative");
        }
        validate_covariance(&s.sigma_w)?;
        if !(self.start_time >= 1.0) {
            return bad("start_time must be at least 1");
        }
        let tr = belief::trace(&s.sigma_w);
        if !(s.eps_sigma > tr) {
            return bad("eps_sigma must exceed the trace of sigma_w");
        }
        if let BigM::Manual { obstacle, goal, covariance } = s.big_m {
            if !(obstacle > 0.0 && goal > 0.0 && covariance > 0.0) {
                return bad("big-M constants must be positive");
            }
        }
        if !self.map.bounds.contains(self.start) {
            return bad("start outside the workspace");
        }
        Ok(())
    }

    pub fn inflation_radius(&self) -> f64 {
        if self.settings.corner_inflation {
            self.settings.v_max * self.settings.dt / 2.0
        } else {
            0.0
        }
    }

    /// Obstacles as the planner sees them.
    pub fn planning_obstacles(&self) -> Result<Vec<ConvexObstacle>, GeometryError> {
        self.map.inflated(self.inflation_radius())
    }

    pub fn per_obstacle_risk(&self) -> f64 {
        per_obstacle_risk(self.settings.delta_c, self.map.obstacles.len())
    }

    /// Back-off coefficient for every face of every planning obstacle.
    pub fn backoffs(&self) -> Result<Vec<Vec<f64>>, EncodeError> {
        let delta = self.per_obstacle_risk();
        let obstacles = self.planning_obstacles()?;
        let mut out = Vec::with_capacity(obstacles.len());
        for o in &obstacles {
            let mut row = Vec::with_capacity(o.num_edges());
            for h in o.halfplanes() {
                row.push(risk_backoff(h.normal, &self.settings.sigma_w, delta, self.settings.backoff)?);
            }
            out.push(row);
        }
        Ok(out)
    }

    /// The quantity that multiplies β: `t` or `t²` depending on the form.
    pub fn backoff_driver(&self, mean: &Vec4) -> f64 {
        match self.settings.backoff {
            BackoffForm::StdDev => mean[3],
            BackoffForm::Variance => mean[2],
        }
    }

    /// Whether every point within `eps_g` (L1) of the goal is outside every
    /// planning obstacle, which permits relaxing obstacle rows after arrival.
    pub fn goal_region_clear(&self) -> Result<bool, GeometryError> {
        let g = self.map.goal;
        let e = self.settings.eps_g;
        let diamond = ConvexObstacle::new(&[[g[0] + e, g[1]], [g[0], g[1] + e], [g[0] - e, g[1]], [g[0], g[1] - e]])?;
        let obstacles = self.planning_obstacles()?;
        Ok(obstacles.iter().all(|o| !convex_overlap(o, &diamond)))
    }
}

/// Whether some point of the goal region satisfies every chance constraint
/// right after a scan. When it does not, no plan can arrive, which the full
/// model cannot prove quickly; this small disjunctive check can.
pub fn goal_admissible(problem: &ProblemConfig) -> Result<bool, EncodeError> {
    use ConstraintSense::*;
    let s = &problem.settings;
    let b = problem.map.bounds;
    let g = problem.map.goal;
    let driver = problem.backoff_driver(&[g[0], g[1], 1.0, 1.0]);
    let obstacles = problem.planning_obstacles()?;
    let betas = problem.backoffs()?;
    let mut m = MilpModel::new();
    let x = m.add_continuous("x", b.xmin, b.xmax)?;
    let y = m.add_continuous("y", b.ymin, b.ymax)?;
    let ax = m.add_continuous("ax", 0.0, s.eps_g)?;
    let ay = m.add_continuous("ay", 0.0, s.eps_g)?;
    m.add_constraint("axp", &[(ax, 1.0), (x, -1.0)], Ge, -g[0])?;
    m.add_constraint("axn", &[(ax, 1.0), (x, 1.0)], Ge, g[0])?;
    m.add_constraint("ayp", &[(ay, 1.0), (y, -1.0)], Ge, -g[1])?;
    m.add_constraint("ayn", &[(ay, 1.0), (y, 1.0)], Ge, g[1])?;
    m.add_constraint("l1", &[(ax, 1.0), (ay, 1.0)], Le, s.eps_g)?;
    let big = b.diagonal() + 2.0 * s.eps_g;
    for (o, obs) in obstacles.iter().enumerate() {
        let mut ids = Vec::new();
        for (i, h) in obs.halfplanes().iter().enumerate() {
            let id = m.add_binary(format!("y_{o}_{i}"))?;
            let rhs = h.offset + betas[o][i] * driver;
            let far = rhs - h.eval(g) + s.eps_g;
            m.add_constraint(format!("h_{o}_{i}"), &[(x, h.normal[0]), (y, h.normal[1]), (id, -far.max(big))], Ge, rhs - far.max(big))?;
            ids.push(id);
        }
        m.add_disjunction(format!("d_{o}"), &ids)?;
    }
    let sol = bliss_milp::solve(&m, &bliss_milp::SolveLimits::default())?;
    Ok(sol.has_incumbent())
}

/// Separating-axis test on closed convex polygons.
pub(crate) fn convex_overlap(a: &ConvexObstacle, b: &ConvexObstacle) -> bool {
    for (p, q) in [(a, b), (b, a)] {
        for h in p.halfplanes() {
            if q.vertices().iter().all(|&v| h.eval(v) > h.offset) {
                return false;
            }
        }
    }
    true
}

/// Variable handles of an encoded model. State vectors are indexed by step
/// `1..=N` at position `k - 1`; per-action vectors by `0..N`.
#[derive(Debug, Clone)]
pub struct VarIndex {
    pub state: Vec<[VarId; 4]>,
    pub control: Vec<[VarId; 2]>,
    pub move_sel: Vec<VarId>,
    pub scan_sel: Vec<VarId>,
    pub slack_mean: Vec<[VarId; 4]>,
    pub slack_control: Vec<[VarId; 4]>,
    pub outside_goal: Vec<VarId>,
    pub l1_aux: Vec<[VarId; 2]>,
    /// `[state step - 1][obstacle][face]`.
    pub faces: Vec<Vec<Vec<VarId>>>,
}

#[derive(Debug, Clone)]
pub struct EncodedProblem {
    pub model: MilpModel,
    pub vars: VarIndex,
    pub big_m_obstacle: f64,
    pub big_m_goal: f64,
    pub big_m_covariance: f64,
    pub relax_after_arrival: bool,
}

/// Range of `H·p − β·d − b` over a state box, per face.
fn face_range(obs: &ConvexObstacle, betas: &[f64], bx: &StateBox, driver_idx: usize) -> Vec<(f64, f64)> {
    obs.halfplanes()
        .iter()
        .zip(betas)
        .map(|(h, &beta)| {
            let corners = [bx.lo[0], bx.hi[0]]
                .into_iter()
                .flat_map(|x| [bx.lo[1], bx.hi[1]].map(|y| h.eval([x, y])));
            let (lo, hi) = corners.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            (lo - beta * bx.hi[driver_idx] - h.offset, hi - beta * bx.lo[driver_idx] - h.offset)
        })
        .collect()
}

/// Per-step interval bounds on the state implied by the start, the velocity
/// limit and the clock.
#[derive(Debug, Clone, Copy)]
struct StateBox {
    lo: Vec4,
    hi: Vec4,
}

fn state_boxes(p: &ProblemConfig) -> Vec<StateBox> {
    let s = &p.settings;
    let b = &p.map.bounds;
    let x0 = p.start_mean();
    (0..=s.horizon)
        .map(|k| {
            let reach = s.v_max * s.dt * k as f64;
            let tmax = p.start_time + k as f64 * s.dt;
            let tmin = if k == 0 { p.start_time } else { 1.0 };
            StateBox {
                lo: [(x0[0] - reach).max(b.xmin), (x0[1] - reach).max(b.ymin), tmin * tmin, tmin],
                hi: [(x0[0] + reach).min(b.xmax), (x0[1] + reach).min(b.ymax), tmax * tmax, tmax],
            }
        })
        .collect()
}

// Branching priorities: goal indicators first (they drive the bound),
// then the action selectors, then the face binaries.
const PRIORITY_GOAL: i32 = 2;
const PRIORITY_SELECTOR: i32 = 1;
const PRIORITY_FACE: i32 = 0;

/// Builds the MILP. See the crate README for the variable and row tally.

pub fn encode(problem: &ProblemConfig) -> Result<EncodedProblem, EncodeError> {
    problem.validate()?;
    let s = &problem.settings;
    let n = s.horizon;
    let dt = s.dt;
    let bounds = problem.map.bounds;
    let obstacles = problem.planning_obstacles()?;
    let betas = problem.backoffs()?;
    let x0 = problem.start_mean();
    let boxes = state_boxes(problem);
    let tr = belief::trace(&s.sigma_w);
    let t_last = boxes[n].hi[3];
    let driver_max = match s.backoff {
        BackoffForm::StdDev => t_last,
        BackoffForm::Variance => t_last * t_last,
    };
    let driver_idx = match s.backoff {
        BackoffForm::StdDev => 3,
        BackoffForm::Variance => 2,
    };

    for (o, (obs, beta)) in obstacles.iter().zip(&betas).enumerate() {
        let d = problem.backoff_driver(&x0);
        let ok = obs.halfplanes().iter().zip(beta).any(|(h, &bt)| h.eval(problem.start) - bt * d >= h.offset - 1e-9);
        if !ok {
            return Err(EncodeError::RiskInfeasible(o));
        }
    }

    let beta_max = betas.iter().flatten().copied().fold(0.0, f64::max);
    let max_b = obstacles.iter().flat_map(|o| o.halfplanes()).map(|h| h.offset.abs()).fold(0.0, f64::max);
    let diag = bounds.diagonal();
    let (m_obs, m_goal, m_cov) = match s.big_m {
        BigM::Manual { obstacle, goal, covariance } => (obstacle, goal, covariance),
        _ => (diag + max_b + beta_max * driver_max, 2.0 * diag, (tr * t_last * t_last).max(2.0 * diag)),
    };
    let relax = s.absorbing_goal && problem.goal_region_clear()?;

    let mut m = MilpModel::new();
    let mut vars = VarIndex {
        state: Vec::with_capacity(n),
        control: Vec::with_capacity(n),
        move_sel: Vec::with_capacity(n),
        scan_sel: Vec::with_capacity(n),
        slack_mean: Vec::with_capacity(n),
        slack_control: Vec::with_capacity(n),
        outside_goal: Vec::with_capacity(n),
        l1_aux: Vec::with_capacity(n),
        faces: Vec::with_capacity(n),
    };
    const NAMES: [&str; 4] = ["x", "y", "tt", "t"];

    for k in 0..n {
        let bx = boxes[k + 1];
        let st: [VarId; 4] = std::array::from_fn(|i| {
            m.add_continuous(format!("{}_{}", NAMES[i], k + 1), bx.lo[i], bx.hi[i]).expect("fresh name")
        });
        vars.state.push(st);
        let u = [
            m.add_continuous(format!("ux_{k}"), -s.v_max, s.v_max)?,
            m.add_continuous(format!("uy_{k}"), -s.v_max, s.v_max)?,
        ];
        vars.control.push(u);
        let my = m.add_binary(format!("my_{k}"))?;
        let sy = m.add_binary(format!("sy_{k}"))?;
        m.set_priority(my, PRIORITY_SELECTOR)?;
        m.set_priority(sy, PRIORITY_SELECTOR)?;
        vars.move_sel.push(my);
        vars.scan_sel.push(sy);
        let cur = boxes[k];
        let rm: [VarId; 4] = std::array::from_fn(|i| {
            m.add_continuous(format!("rm{}_{k}", NAMES[i]), cur.lo[i].min(0.0), cur.hi[i].max(0.0))
                .expect("fresh name")
        });
        vars.slack_mean.push(rm);
        let ru = [
            m.add_continuous(format!("rmux_{k}"), -s.v_max, s.v_max)?,
            m.add_continuous(format!("rmuy_{k}"), -s.v_max, s.v_max)?,
            m.add_continuous(format!("rmu2_{k}"), 0.0, 0.0)?,
            m.add_continuous(format!("rmu3_{k}"), 0.0, 0.0)?,
        ];
        vars.slack_control.push(ru);
        // the goal diamond lies outside this step's reach: z is forced to 1
        let g = problem.map.goal;
        let gap = |i: usize| (bx.lo[i] - g[i]).max(g[i] - bx.hi[i]).max(0.0);
        let z_lb = if k + 1 < n && gap(0) + gap(1) > s.eps_g + 1e-9 { 1.0 } else { 0.0 };
        let z_ub = if k + 1 == n { 0.0 } else { 1.0 };
        let z = m.add_variable(format!("z_{}", k + 1), z_lb, z_ub, bliss_milp::Integrality::Binary)?;
        m.set_priority(z, PRIORITY_GOAL)?;
        vars.outside_goal.push(z);
        let width = bounds.width().max(bounds.height()) + diag;
        vars.l1_aux.push([
            m.add_continuous(format!("ax_{}", k + 1), 0.0, width)?,
            m.add_continuous(format!("ay_{}", k + 1), 0.0, width)?,
        ]);
        let mut faces = Vec::with_capacity(obstacles.len());
        let may_have_arrived = relax && k >= 1 && m.variable(vars.outside_goal[k - 1]).lower < 1.0;
        for (o, obs) in obstacles.iter().enumerate() {
            let range = face_range(obs, &betas[o], &bx, driver_idx);
            let certain = range.iter().position(|&(lo, _)| lo >= 1e-9);
            let ids: Vec<VarId> = range
                .iter()
                .enumerate()
                .map(|(i, &(_, hi))| {
                    let (lo, up) = match certain {
                        // one face holds over the whole box: it alone covers the disjunction
                        Some(c) if c == i => (1.0, 1.0),
                        Some(_) => (0.0, 0.0),
                        None if hi < -1e-9 && !may_have_arrived => (0.0, 0.0),
                        None => (0.0, 1.0),
                    };
                    m.add_variable(format!("yo_{o}_{i}_{}", k + 1), lo, up, bliss_milp::Integrality::Binary)
                })
                .collect::<Result<_, _>>()?;
            for &id in &ids {
                m.set_priority(id, PRIORITY_FACE)?;
            }
            faces.push(ids);
        }
        vars.faces.push(faces);
        m.add_objective_term(sy, s.cost_scan)?;
        m.add_objective_term(z, s.cost_outside)?;
    }

    use ConstraintSense::*;
    for k in 0..n {
        let my = vars.move_sel[k];
        let sy = vars.scan_sel[k];
        m.add_constraint(format!("sel_{k}"), &[(my, 1.0), (sy, 1.0)], Eq, 1.0)?;

        // r = my·μ_k, exact for binary my
        let cur = boxes[k];
        for i in 0..4 {
            let r = vars.slack_mean[k][i];
            let (lo, hi) = (cur.lo[i], cur.hi[i]);
            if k == 0 {
                let c = x0[i];
                m.add_constraint(format!("mc{}a_{k}", NAMES[i]), &[(r, 1.0), (my, -c)], Ge, 0.0)?;
                m.add_constraint(format!("mc{}b_{k}", NAMES[i]), &[(r, 1.0), (my, -c)], Le, 0.0)?;
                m.add_constraint(format!("mc{}c_{k}", NAMES[i]), &[(r, 1.0), (my, -c)], Ge, 0.0)?;
                m.add_constraint(format!("mc{}d_{k}", NAMES[i]), &[(r, 1.0), (my, -c)], Le, 0.0)?;
            } else {
                let mu = vars.state[k - 1][i];
                m.add_constraint(format!("mc{}a_{k}", NAMES[i]), &[(r, 1.0), (my, -lo)], Ge, 0.0)?;
                m.add_constraint(format!("mc{}b_{k}", NAMES[i]), &[(r, 1.0), (my, -hi)], Le, 0.0)?;
                m.add_constraint(format!("mc{}c_{k}", NAMES[i]), &[(r, 1.0), (mu, -1.0), (my, -hi)], Ge, -hi)?;
                m.add_constraint(format!("mc{}d_{k}", NAMES[i]), &[(r, 1.0), (mu, -1.0), (my, -lo)], Le, -lo)?;
            }
        }
        for i in 0..2 {
            let r = vars.slack_control[k][i];
            let u = vars.control[k][i];
            let v = s.v_max;
            let tag = ["ux", "uy"][i];
            m.add_constraint(format!("mc{tag}a_{k}"), &[(r, 1.0), (my, v)], Ge, 0.0)?;
            m.add_constraint(format!("mc{tag}b_{k}"), &[(r, 1.0), (my, -v)], Le, 0.0)?;
            m.add_constraint(format!("mc{tag}c_{k}"), &[(r, 1.0), (u, -1.0), (my, -v)], Ge, -v)?;
            m.add_constraint(format!("mc{tag}d_{k}"), &[(r, 1.0), (u, -1.0), (my, v)], Le, v)?;
        }

        // μ_{k+1} = ᴹA r^M + ᴹB r^M_u + ᴹC ᴹy + ˢA (μ_k − r^M) + ˢC ˢy
        let next = vars.state[k];
        let rm = vars.slack_mean[k];
        let ru = vars.slack_control[k];
        for i in 0..2 {
            let mut terms = vec![(next[i], 1.0), (rm[i], -1.0), (ru[i], -dt), (rm[i], 1.0)];
            let mut rhs = 0.0;
            if k == 0 {
                rhs = x0[i];
            } else {
                terms.push((vars.state[k - 1][i], -1.0));
            }
            terms.retain(|t| t.1 != 0.0);
            m.add_constraint(format!("dyn{}_{k}", NAMES[i]), &terms, Eq, rhs)?;
        }
        m.add_constraint(
            format!("dyntt_{k}"),
            &[(next[2], 1.0), (rm[2], -1.0), (rm[3], -2.0 * dt), (my, -dt * dt), (sy, -1.0)],
            Eq,
            0.0,
        )?;
        m.add_constraint(format!("dynt_{k}"), &[(next[3], 1.0), (rm[3], -1.0), (my, -dt), (sy, -1.0)], Eq, 0.0)?;
    }

    let g = problem.map.goal;
    for k in 1..=n {
        let st = vars.state[k - 1];
        let z = vars.outside_goal[k - 1];
        let [ax, ay] = vars.l1_aux[k - 1];
        m.add_constraint(format!("absxp_{k}"), &[(ax, 1.0), (st[0], -1.0)], Ge, -g[0])?;
        m.add_constraint(format!("absxn_{k}"), &[(ax, 1.0), (st[0], 1.0)], Ge, g[0])?;
        m.add_constraint(format!("absyp_{k}"), &[(ay, 1.0), (st[1], -1.0)], Ge, -g[1])?;
        m.add_constraint(format!("absyn_{k}"), &[(ay, 1.0), (st[1], 1.0)], Ge, g[1])?;
        let reach = boxes[k];
        let (mg, mc) = match s.big_m {
            BigM::Tight => {
                let far = (reach.lo[0] - g[0]).abs().max((reach.hi[0] - g[0]).abs())
                    + (reach.lo[1] - g[1]).abs().max((reach.hi[1] - g[1]).abs());
                ((far - s.eps_g).max(1e-6), (tr * reach.hi[2] - s.eps_sigma).max(1e-6))
            }
            _ => (m_goal, m_cov),
        };
        m.add_constraint(format!("goal_{k}"), &[(ax, 1.0), (ay, 1.0), (z, -mg)], Le, s.eps_g)?;
        if s.absorbing_goal && k >= 2 {
            let prev = vars.outside_goal[k - 2];
            m.add_constraint(format!("cov_{k}"), &[(st[2], tr), (z, -mc), (prev, mc)], Le, s.eps_sigma + mc)?;
            m.add_constraint(format!("stay_{k}"), &[(z, 1.0), (prev, -1.0)], Le, 0.0)?;
        } else {
            m.add_constraint(format!("cov_{k}"), &[(st[2], tr), (z, -mc)], Le, s.eps_sigma)?;
        }
        if s.window_cuts {
            // t at state k is 1 + (k - 1 - j)·dt after a scan at action j
            let t_max = (s.eps_sigma / tr).sqrt();
            let unscanned = problem.start_time + k as f64 * s.dt;
            if unscanned > t_max * (1.0 + 1e-12) {
                let span = ((t_max - 1.0) / s.dt + 1e-9).floor().max(0.0) as usize;
                let first = (k - 1).saturating_sub(span);
                let mut terms: Vec<(VarId, f64)> = (first..k).map(|j| (vars.scan_sel[j], 1.0)).collect();
                terms.push((z, 1.0));
                let mut rhs = 1.0;
                if s.absorbing_goal && k >= 2 {
                    terms.push((vars.outside_goal[k - 2], -1.0));
                    rhs = 0.0;
                }
                m.add_constraint(format!("window_{k}"), &terms, Ge, rhs)?;
            }
        }

        let prev_z = if k >= 2 { Some(vars.outside_goal[k - 2]) } else { None };
        for (o, obs) in obstacles.iter().enumerate() {
            let ids = &vars.faces[k - 1][o];
            for (i, h) in obs.halfplanes().iter().enumerate() {
                let beta = betas[o][i];
                let big = match s.big_m {
                    BigM::Tight => {
                        let min_hp = [reach.lo[0], reach.hi[0]]
                            .iter()
                            .flat_map(|&x| [reach.lo[1], reach.hi[1]].map(|y| h.normal[0] * x + h.normal[1] * y))
                            .fold(f64::INFINITY, f64::min);
                        (h.offset - min_hp + beta * reach.hi[driver_idx]).max(1e-6)
                    }
                    _ => m_obs,
                };
                // H·p − β·t ≥ b − M(1 − y) [− M(1 − z_{k−1}) once arrived]
                let mut terms = vec![(st[0], h.normal[0]), (st[1], h.normal[1]), (st[driver_idx], -beta), (ids[i], -big)];
                let mut rhs = h.offset - big;
                if relax {
                    if let Some(pz) = prev_z {
                        terms.push((pz, -big));
                        rhs -= big;
                    }
                }
                terms.retain(|t| t.1 != 0.0);
                m.add_constraint(format!("obs_{o}_{i}_{k}"), &terms, Ge, rhs)?;
            }
            m.add_disjunction(format!("disj_{o}_{k}"), ids)?;
        }
    }

    Ok(EncodedProblem {
        model: m,
        vars,
        big_m_obstacle: m_obs,
        big_m_goal: m_goal,
        big_m_covariance: m_cov,
        relax_after_arrival: relax,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStep {
    pub k: usize,
    pub action: HybridAction,
    /// Mean after the action.
    pub predicted_mean: Vec4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub start_mean: Vec4,
    pub steps: Vec<PlanStep>,
    pub objective_value: f64,
    pub scan_count: usize,
    pub move_count: usize,
    /// First step (1-based state index) counted as inside the goal.
    pub arrival: Option<usize>,
}

impl Plan {
    pub fn means(&self) -> impl Iterator<Item = &Vec4> {
        std::iter::once(&self.start_mean).chain(self.steps.iter().map(|s| &s.predicted_mean))
    }

    /// Actions up to and including the arrival step (the whole plan when it
    /// never arrives).
    pub fn executable(&self) -> &[PlanStep] {
        &self.steps[..self.arrival.unwrap_or(self.steps.len())]
    }

    /// Builds a plan from actions by forward propagation and scores it with
    /// the MILP objective.
    pub fn from_actions(problem: &ProblemConfig, actions: &[HybridAction]) -> Result<Self, BeliefError> {
        let s = &problem.settings;
        let start = problem.start_mean();
        let mut mean = start;
        let mut steps = Vec::with_capacity(actions.len());
        for (k, a) in actions.iter().enumerate() {
            mean = propagate_mean(mean, a, s.dt)?;
            steps.push(PlanStep { k, action: *a, predicted_mean: mean });
        }
        let arrival = steps.iter().position(|st| in_goal(problem, &st.predicted_mean)).map(|i| i + 1);
        let scan_count = actions.iter().filter(|a| matches!(a, HybridAction::Scan)).count();
        let outside = arrival.map_or(actions.len(), |a| a - 1);
        Ok(Self {
            start_mean: start,
            steps,
            objective_value: s.cost_scan * scan_count as f64 + s.cost_outside * outside as f64,
            scan_count,
            move_count: actions.len() - scan_count,
            arrival,
        })
    }
}

fn l1_to_goal(problem: &ProblemConfig, mean: &Vec4) -> f64 {
    (mean[0] - problem.map.goal[0]).abs() + (mean[1] - problem.map.goal[1]).abs()
}

/// Goal test used for arrival: position within `eps_g` and covariance trace
/// within `eps_sigma`.
pub fn in_goal(problem: &ProblemConfig, mean: &Vec4) -> bool {
    let s = &problem.settings;
    l1_to_goal(problem, mean) <= s.eps_g + CHECK_TOL && belief::trace(&s.sigma_w) * mean[2] <= s.eps_sigma + CHECK_TOL
}

/// Reads the selectors and controls back into a plan and cross-checks the
/// model's state variables against forward propagation.
pub fn decode(problem: &ProblemConfig, encoded: &EncodedProblem, solution: &MilpSolution) -> Result<Plan, DecodeError> {
    if !solution.has_incumbent() {
        return Err(DecodeError::NoAssignment);
    }
    let v = |id: VarId| solution.values[id.0];
    let s = &problem.settings;
    let ix = &encoded.vars;
    let start = problem.start_mean();
    let mut mean = start;
    let mut steps = Vec::with_capacity(s.horizon);
    let mut arrival = None;
    for k in 0..s.horizon {
        let action = if v(ix.scan_sel[k]) > 0.5 {
            HybridAction::Scan
        } else {
            let u = [v(ix.control[k][0]), v(ix.control[k][1])];
            HybridAction::Move { u: u.map(|c| c.clamp(-s.v_max, s.v_max)) }
        };
        mean = propagate_mean(mean, &action, s.dt).map_err(|e| DecodeError::InconsistentSolution {
            step: k,
            detail: e.to_string(),
        })?;
        let modelled = ix.state[k].map(v);
        for i in 0..4 {
            let scale = 1.0f64.max(mean[i].abs());
            if (modelled[i] - mean[i]).abs() > CHECK_TOL * scale {
                return Err(DecodeError::InconsistentSolution {
                    step: k + 1,
                    detail: format!("state {i}: model {} vs propagated {}", modelled[i], mean[i]),
                });
            }
        }
        if arrival.is_none() && v(ix.outside_goal[k]) < 0.5 {
            arrival = Some(k + 1);
        }
        steps.push(PlanStep { k, action, predicted_mean: mean });
    }
    let scan_count = steps.iter().filter(|st| matches!(st.action, HybridAction::Scan)).count();
    Ok(Plan {
        start_mean: start,
        move_count: steps.len() - scan_count,
        scan_count,
        steps,
        objective_value: solution.objective_value,
        arrival,
    })
}

/// Full variable assignment that realizes `plan` in `encoded`, padded with
/// zero-velocity moves up to the horizon. `None` when the plan is longer
/// than the horizon or never arrives. The result may still violate rows
/// (the solver checks before using it as a start).
pub fn assignment_from_plan(problem: &ProblemConfig, encoded: &EncodedProblem, plan: &Plan) -> Option<Vec<f64>> {
    let s = &problem.settings;
    let n = s.horizon;
    let arrival = plan.arrival?;
    let exec = &plan.steps[..arrival];
    if exec.len() > n {
        return None;
    }
    let mut actions: Vec<HybridAction> = exec.iter().map(|st| st.action).collect();
    actions.resize(n, HybridAction::Move { u: [0.0, 0.0] });
    let ix = &encoded.vars;
    let obstacles = problem.planning_obstacles().ok()?;
    let betas = problem.backoffs().ok()?;
    let g = problem.map.goal;
    let mut v = vec![0.0; encoded.model.num_variables()];
    let mut mean = problem.start_mean();
    let mut z_prev = 1.0;
    for (k, a) in actions.iter().enumerate() {
        let moving = matches!(a, HybridAction::Move { .. });
        let u = a.control();
        v[ix.move_sel[k].0] = if moving { 1.0 } else { 0.0 };
        v[ix.scan_sel[k].0] = if moving { 0.0 } else { 1.0 };
        v[ix.control[k][0].0] = u[0];
        v[ix.control[k][1].0] = u[1];
        for i in 0..4 {
            v[ix.slack_mean[k][i].0] = if moving { mean[i] } else { 0.0 };
        }
        v[ix.slack_control[k][0].0] = u[0];
        v[ix.slack_control[k][1].0] = u[1];
        mean = propagate_mean(mean, a, s.dt).ok()?;
        for i in 0..4 {
            v[ix.state[k][i].0] = mean[i];
        }
        v[ix.l1_aux[k][0].0] = (mean[0] - g[0]).abs();
        v[ix.l1_aux[k][1].0] = (mean[1] - g[1]).abs();
        let z = if s.absorbing_goal {
            if k + 1 >= arrival {
                0.0
            } else {
                1.0
            }
        } else if in_goal(problem, &mean) {
            0.0
        } else {
            1.0
        };
        v[ix.outside_goal[k].0] = z;
        let d = problem.backoff_driver(&mean);
        for (o, obs) in obstacles.iter().enumerate() {
            let ids = &ix.faces[k][o];
            for (i, h) in obs.halfplanes().iter().enumerate() {
                let var = encoded.model.variable(ids[i]);
                let holds = h.eval([mean[0], mean[1]]) - betas[o][i] * d >= h.offset;
                v[ids[i].0] = if holds { 1.0_f64 } else { 0.0 }.clamp(var.lower, var.upper);
            }
            let any = ids.iter().any(|id| v[id.0] == 1.0);
            if !any && encoded.relax_after_arrival && z_prev == 0.0 {
                if let Some(id) = ids.iter().find(|&&id| encoded.model.variable(id).upper == 1.0) {
                    v[id.0] = 1.0;
                }
            }
        }
        z_prev = z;
    }
    Some(v)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanViolation {
    #[error("step {0}: mean does not follow the dynamics")]
    Dynamics(usize),
    #[error("step {0}: control exceeds v_max")]
    Velocity(usize),
    #[error("step {step}: chance constraint of obstacle {obstacle} violated")]
    ChanceConstraint { step: usize, obstacle: usize },
    #[error("step {0}: arrival outside the goal tolerances")]
    Goal(usize),
    #[error("plan never reaches the goal")]
    NoArrival,
    #[error("scan/move counts do not add up")]
    Counts,
    #[error("objective {reported} differs from recomputed {recomputed}")]
    Objective { reported: f64, recomputed: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Post-hoc validation of any plan against the problem: dynamics, velocity
/// limits, chance constraints up to arrival (and beyond unless the problem
/// allows relaxing them at the goal), goal tolerances at arrival and the
/// objective identity.
pub fn check_plan(problem: &ProblemConfig, plan: &Plan, relaxed_after_arrival: bool) -> Result<(), PlanViolation> {
    let s = &problem.settings;
    if plan.scan_count + plan.move_count != plan.steps.len() {
        return Err(PlanViolation::Counts);
    }
    let obstacles = problem.planning_obstacles()?;
    let betas = problem.backoffs().map_err(|_| PlanViolation::Counts)?;
    let mut mean = plan.start_mean;
    for (k, st) in plan.steps.iter().enumerate() {
        if let HybridAction::Move { u } = st.action {
            if u[0].abs() > s.v_max + CHECK_TOL || u[1].abs() > s.v_max + CHECK_TOL {
                return Err(PlanViolation::Velocity(k));
            }
        }
        let next = propagate_mean(mean, &st.action, s.dt).map_err(|_| PlanViolation::Dynamics(k))?;
        if (0..4).any(|i| (next[i] - st.predicted_mean[i]).abs() > CHECK_TOL * 1f64.max(next[i].abs())) {
            return Err(PlanViolation::Dynamics(k));
        }
        mean = st.predicted_mean;
        let step = k + 1;
        let past_arrival = plan.arrival.is_some_and(|a| step > a);
        if past_arrival && relaxed_after_arrival {
            continue;
        }
        let d = problem.backoff_driver(&mean);
        for (o, obs) in obstacles.iter().enumerate() {
            let safe = obs
                .halfplanes()
                .iter()
                .zip(&betas[o])
                .any(|(h, &b)| h.eval([mean[0], mean[1]]) - b * d >= h.offset - CHECK_TOL);
            if !safe {
                return Err(PlanViolation::ChanceConstraint { step, obstacle: o });
            }
        }
    }
    let arrival = plan.arrival.ok_or(PlanViolation::NoArrival)?;
    let at = &plan.steps[arrival - 1].predicted_mean;
    if !in_goal(problem, at) {
        return Err(PlanViolation::Goal(arrival));
    }
    if s.absorbing_goal {
        for st in &plan.steps[arrival..] {
            if l1_to_goal(problem, &st.predicted_mean) > s.eps_g + CHECK_TOL {
                return Err(PlanViolation::Goal(st.k + 1));
            }
        }
    }
    let recomputed = s.cost_scan * plan.scan_count as f64 + s.cost_outside * (arrival - 1) as f64;
    if (recomputed - plan.objective_value).abs() > CHECK_TOL * 1f64.max(recomputed.abs()) {
        return Err(PlanViolation::Objective { reported: plan.objective_value, recomputed });
    }
    Ok(())
}

#[derive(Debug, Error)]
pub enum SolutionViolation {
    #[error("step {0}: selectors are not a one-hot integral pair")]
    Selector(usize),
    #[error("step {0}: slack differs from selector times value")]
    Slack(usize),
    #[error("step {0}: scan does not reset the clock or keeps moving")]
    ScanReset(usize),
    #[error("state {step}: no half-plane of obstacle {obstacle} holds")]
    ChanceConstraint { step: usize, obstacle: usize },
    #[error("state {0}: inside-goal indicator set outside the goal tolerances")]
    GoalAccounting(usize),
    #[error("objective {reported} differs from recomputed {recomputed}")]
    Objective { reported: f64, recomputed: f64 },
    #[error("assignment has {got} values, model has {expected} variables")]
    Length { got: usize, expected: usize },
    #[error(transparent)]
    Problem(#[from] EncodeError),
}

/// Checks a raw assignment of `encoded` against the structural properties of
/// the encoding: selector exclusivity, slack products, scan reset, chance
/// constraints (skipped after arrival when the encoding relaxes them), goal
/// accounting and the objective identity, all within 1e-6.
pub fn check_solution(problem: &ProblemConfig, encoded: &EncodedProblem, values: &[f64]) -> Result<(), SolutionViolation> {
    let expected = encoded.model.num_variables();
    if values.len() != expected {
        return Err(SolutionViolation::Length { got: values.len(), expected });
    }
    let near = |a: f64, b: f64| (a - b).abs() <= CHECK_TOL * 1f64.max(b.abs());
    let v = |id: VarId| values[id.0];
    let s = &problem.settings;
    let ix = &encoded.vars;
    let obstacles = problem.planning_obstacles().map_err(EncodeError::from)?;
    let betas = problem.backoffs()?;
    let tr = belief::trace(&s.sigma_w);
    let mut prev = problem.start_mean();
    let (mut scans, mut outside) = (0usize, 0usize);
    let mut prev_z = 1.0;
    for k in 0..s.horizon {
        let (my, sy) = (v(ix.move_sel[k]), v(ix.scan_sel[k]));
        let integral = |b: f64| near(b, 0.0) || near(b, 1.0);
        if !integral(my) || !integral(sy) || !near(my + sy, 1.0) {
            return Err(SolutionViolation::Selector(k));
        }
        let moving = my > 0.5;
        let u = ix.control[k].map(v);
        let slack_ok = (0..4).all(|i| near(v(ix.slack_mean[k][i]), if moving { prev[i] } else { 0.0 }))
            && (0..2).all(|i| near(v(ix.slack_control[k][i]), if moving { u[i] } else { 0.0 }));
        if !slack_ok {
            return Err(SolutionViolation::Slack(k));
        }
        let st = ix.state[k].map(v);
        if !moving {
            scans += 1;
            if !near(st[2], 1.0) || !near(st[3], 1.0) || !near(st[0], prev[0]) || !near(st[1], prev[1]) {
                return Err(SolutionViolation::ScanReset(k));
            }
        }
        let step = k + 1;
        if !(encoded.relax_after_arrival && prev_z < 0.5) {
            let d = problem.backoff_driver(&st);
            for (o, obs) in obstacles.iter().enumerate() {
                let safe = obs
                    .halfplanes()
                    .iter()
                    .zip(&betas[o])
                    .any(|(h, &b)| h.eval([st[0], st[1]]) - b * d >= h.offset - CHECK_TOL);
                if !safe {
                    return Err(SolutionViolation::ChanceConstraint { step, obstacle: o });
                }
            }
        }
        let z = v(ix.outside_goal[k]);
        if !integral(z) {
            return Err(SolutionViolation::GoalAccounting(step));
        }
        if z < 0.5 {
            // with an absorbing goal the covariance bound applies at arrival only
            let arriving = !s.absorbing_goal || prev_z > 0.5;
            if l1_to_goal(problem, &st) > s.eps_g + CHECK_TOL || (arriving && tr * st[2] > s.eps_sigma + CHECK_TOL) {
                return Err(SolutionViolation::GoalAccounting(step));
            }
        } else {
            outside += 1;
        }
        prev = st;
        prev_z = z;
    }
    let reported = encoded.model.objective().evaluate(values);
    let recomputed = s.cost_scan * scans as f64 + s.cost_outside * outside as f64;
    if !near(reported, recomputed) {
        return Err(SolutionViolation::Objective { reported, recomputed });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Bounds;

    fn open_map() -> WorldMap {
        WorldMap::new(Bounds { xmin: -1.0, ymin: -1.0, xmax: 11.0, ymax: 11.0 }, [0.0, 0.0], [1.0, 0.0], vec![]).unwrap()
    }

    fn one_step() -> ProblemConfig {
        ProblemConfig::new(open_map(), Settings { horizon: 1, ..Settings::default() })
    }

    #[test]
    fn single_step_tally() {
        let e = encode(&one_step()).unwrap();
        // 4 state, 2 control, 2 selectors, 8 slack, 1 indicator, 2 L1 aux
        assert_eq!(e.model.num_variables(), 19);
        // 1 selector, 24 McCormick, 4 dynamics, 4 epigraph, 1 goal, 1 covariance
        assert_eq!(e.model.num_constraints(), 35);
    }

    #[test]
    fn rejects_bad_risk() {
        let mut p = one_step();
        p.settings.delta_c = 0.5;
        assert!(matches!(encode(&p), Err(EncodeError::InvalidConfig(_))));
    }

    #[test]
    fn obstacle_row_coefficients() {
        let map = WorldMap::new(
            Bounds { xmin: -1.0, ymin: -1.0, xmax: 11.0, ymax: 11.0 },
            [5.0, 0.0],
            [5.0, 1.0],
            vec![ConvexObstacle::rectangle(0.0, 0.0, 1.0, 1.0).unwrap()],
        )
        .unwrap();
        let mut p = ProblemConfig::new(map, Settings { horizon: 2, corner_inflation: false, ..Settings::default() });
        p.settings.absorbing_goal = false;
        let e = encode(&p).unwrap();
        let row = e.model.constraints().iter().find(|c| c.name == "obs_0_1_1").unwrap();
        let coef = |name: &str| {
            let id = e.model.var_by_name(name).unwrap();
            row.terms.iter().find(|t| t.0 == id).map_or(0.0, |t| t.1)
        };
        let beta = risk_backoff([1.0, 0.0], &p.settings.sigma_w, 0.1, BackoffForm::StdDev).unwrap();
        assert_eq!(coef("x_1"), 1.0);
        assert!((coef("t_1") + beta).abs() < 1e-15);
        assert_eq!(coef("yo_0_1_1"), -e.big_m_obstacle);
        assert!((row.rhs - (1.0 - e.big_m_obstacle)).abs() < 1e-12);
        assert_eq!(row.sense, ConstraintSense::Ge);
    }

    #[test]
    fn start_inside_backoff_is_risk_infeasible() {
        let map = WorldMap::new(
            Bounds { xmin: -1.0, ymin: -1.0, xmax: 11.0, ymax: 11.0 },
            [1.01, 0.5],
            [5.0, 5.0],
            vec![ConvexObstacle::rectangle(0.0, 0.0, 1.0, 1.0).unwrap()],
        )
        .unwrap();
        let p = ProblemConfig::new(map, Settings { corner_inflation: false, ..Settings::default() });
        assert!(matches!(encode(&p), Err(EncodeError::RiskInfeasible(0))));
    }
}
