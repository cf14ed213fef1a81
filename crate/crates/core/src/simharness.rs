//! Seeded execution of plans under Gaussian process noise: blind moves,
//! perfect scans that re-localize and trigger a replan, collision and goal
//! adjudication, and SR/ET/CT aggregation.

use bliss_milp::SolveLimits;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{propagate_mean, BeliefError, Cov2, HybridAction, Vec4};
use crate::encoder::{EncodeError, Plan, ProblemConfig};
use crate::geometry::Point;
use crate::planners::{plan_with, PlannerKind, PlannerOutput};

/// Duration of one scan in seconds.
pub const SCAN_SECONDS: f64 = 100.0;
/// Duration of one move in seconds.
pub const MOVE_SECONDS: f64 = 0.5;
/// Replanning cycles without enough progress before a run times out.
pub const STALL_REPLANS: usize = 4;
/// Hard cap on planning calls per run.
pub const MAX_REPLANS: usize = 64;

pub const CSV_HEADER: &str = "planner,map,delta_c,runs,sr,et_mean,et_sd,ct_mean,ct_sd,scans_mean";

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid problem: {0}")]
    Problem(#[from] EncodeError),
    #[error("invalid execution settings: {0}")]
    Settings(String),
    #[error(transparent)]
    Belief(#[from] BeliefError),
}

/// How the execution noise on each move is sized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    /// `Σ^ω` per move: a random walk whose spread grows like `sqrt(t)`.
    #[default]
    Iid,
    /// Increments sized so that the spread after each move equals the
    /// planner's `Σ^ω·t²` exactly.
    PlannerMatched,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionSettings {
    pub noise: NoiseModel,
    /// Scales the execution noise covariance only; the planner still sees
    /// the configured `Σ^ω`.
    pub noise_scale: f64,
    pub limits: SolveLimits,
}

impl Default for ExecutionSettings {
    fn default() -> Self {
        Self {
            noise: NoiseModel::Iid,
            noise_scale: 1.0,
            limits: SolveLimits { time_limit: 120.0, relative_gap: 1e-4, ..SolveLimits::default() },
        }
    }
}

impl ExecutionSettings {
    fn validate(&self) -> Result<(), SimError> {
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(SimError::Settings(format!("noise_scale {}", self.noise_scale)));
        }
        self.limits.validate().map_err(|e| SimError::Settings(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Success,
    /// The true segment of action `step` entered obstacle `obstacle`.
    Collision { step: usize, obstacle: usize },
    /// No progress over several replans, or too many replans.
    Timeout,
    /// The plan finished but the true position is outside the goal tolerance.
    Missed,
    /// A planning call made before action `step` failed.
    PlannerFailure { step: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub seed: u64,
    pub outcome: Outcome,
    pub actions: Vec<HybridAction>,
    /// One more entry than `actions`: the start, then after each action.
    pub true_positions: Vec<Point>,
    pub belief_means: Vec<Vec4>,
    /// Wall time of each planning call in seconds.
    pub timings: Vec<f64>,
}

impl ExecutionTrace {
    pub fn scan_count(&self) -> usize {
        self.actions.iter().filter(|a| matches!(a, HybridAction::Scan)).count()
    }

    pub fn move_count(&self) -> usize {
        self.actions.len() - self.scan_count()
    }

    pub fn execution_time(&self) -> f64 {
        execution_time(self.scan_count(), self.move_count())
    }

    pub fn compute_time(&self) -> f64 {
        self.timings.iter().sum()
    }

    pub fn is_success(&self) -> bool {
        self.outcome == Outcome::Success
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

pub fn execution_time(scans: usize, moves: usize) -> f64 {
    SCAN_SECONDS * scans as f64 + MOVE_SECONDS * moves as f64
}

/// L1 radius around the goal within which a finished run counts as a
/// success: `ε^g` plus three standard deviations of the largest terminal
/// spread the goal test admits.
pub fn success_tolerance(problem: &ProblemConfig) -> f64 {
    problem.settings.eps_g + 3.0 * problem.settings.eps_sigma.sqrt()
}

/// Two independent standard normals for move `step` of run `seed`. Each
/// step has its own ChaCha8 stream, so draws never depend on how many
/// earlier steps ran. Box–Muller with a fixed ordering.
pub fn standard_normals(seed: u64, step: u64) -> [f64; 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(step);
    // 53-bit uniforms in (0, 1]
    let u1 = ((rng.next_u64() >> 11) as f64 + 1.0) / (1u64 << 53) as f64;
    let u2 = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let r = (-2.0 * u1.ln()).sqrt();
    let a = 2.0 * std::f64::consts::PI * u2;
    [r * a.cos(), r * a.sin()]
}

/// Sample `L·z` with `LLᵀ = cov` (2×2 Cholesky, PSD tolerant).
fn correlate(cov: &Cov2, z: [f64; 2]) -> [f64; 2] {
    let l00 = cov[0][0].max(0.0).sqrt();
    let l10 = if l00 > 0.0 { cov[1][0] / l00 } else { 0.0 };
    let l11 = (cov[1][1] - l10 * l10).max(0.0).sqrt();
    [l00 * z[0], l10 * z[0] + l11 * z[1]]
}

fn scaled(cov: &Cov2, s: f64) -> Cov2 {
    [[cov[0][0] * s, cov[0][1] * s], [cov[1][0] * s, cov[1][1] * s]]
}

fn l1(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).abs() + (a[1] - b[1]).abs()
}

/// Executes `planner` on `problem` with noise drawn from `seed`.
pub fn rollout(
    planner: PlannerKind,
    problem: &ProblemConfig,
    seed: u64,
    exec: &ExecutionSettings,
) -> Result<ExecutionTrace, SimError> {
    rollout_with_first_plan(planner, problem, seed, exec, None)
}

/// As [`rollout`], reusing `first` for the initial planning call. Planners
/// are deterministic, so every run of a batch shares its first plan.
pub fn rollout_with_first_plan(
    planner: PlannerKind,
    problem: &ProblemConfig,
    seed: u64,
    exec: &ExecutionSettings,
    first: Option<&Result<PlannerOutput, String>>,
) -> Result<ExecutionTrace, SimError> {
    problem.validate()?;
    exec.validate()?;
    let s = &problem.settings;
    let goal = problem.map.goal;
    let tolerance = success_tolerance(problem);
    let noise = scaled(&s.sigma_w, exec.noise_scale);

    let mut truth = problem.start;
    let mut belief = problem.start_mean();
    let mut trace = ExecutionTrace {
        seed,
        outcome: Outcome::Timeout,
        actions: Vec::new(),
        true_positions: vec![truth],
        belief_means: vec![belief],
        timings: Vec::new(),
    };
    // planner-matched mode: position variance (in units of Σ^ω) already injected
    let mut injected = 0.0;
    let mut best = l1(truth, goal);
    let mut stalled = 0;

    for replan in 0..MAX_REPLANS {
        let step = trace.actions.len();
        let output = match (replan, first) {
            (0, Some(f)) => f.clone(),
            _ => plan_with(planner, &problem.from_state([belief[0], belief[1]], belief[3]), &exec.limits)
                .map_err(|e| e.to_string()),
        };
        let output = match output {
            Ok(o) => o,
            Err(reason) => {
                trace.outcome = Outcome::PlannerFailure { step, reason };
                return Ok(trace);
            }
        };
        trace.timings.push(output.compute_time);
        let plan: &Plan = &output.plan;
        let steps = plan.executable();
        let mut rescanned = false;
        for (i, st) in steps.iter().enumerate() {
            let k = trace.actions.len();
            match st.action {
                HybridAction::Move { u } => {
                    let next = propagate_mean(belief, &st.action, s.dt)?;
                    let cov = match exec.noise {
                        NoiseModel::Iid => noise,
                        NoiseModel::PlannerMatched => {
                            let grow = (next[2] - injected).max(0.0);
                            injected = next[2];
                            scaled(&noise, grow)
                        }
                    };
                    let w = correlate(&cov, standard_normals(seed, k as u64));
                    let moved = [truth[0] + u[0] * s.dt + w[0], truth[1] + u[1] * s.dt + w[1]];
                    let hit = problem.map.first_collision(truth, moved);
                    truth = moved;
                    belief = next;
                    trace.actions.push(st.action);
                    trace.true_positions.push(truth);
                    trace.belief_means.push(belief);
                    if let Some(obstacle) = hit {
                        trace.outcome = Outcome::Collision { step: k, obstacle };
                        return Ok(trace);
                    }
                }
                HybridAction::Scan => {
                    belief = propagate_mean(belief, &st.action, s.dt)?;
                    belief[0] = truth[0];
                    belief[1] = truth[1];
                    injected = 0.0;
                    trace.actions.push(st.action);
                    trace.true_positions.push(truth);
                    trace.belief_means.push(belief);
                    // a scan that ends the plan needs no replan
                    if i + 1 < steps.len() {
                        rescanned = true;
                        break;
                    }
                }
            }
        }
        if !rescanned {
            trace.outcome = if l1(truth, goal) <= tolerance { Outcome::Success } else { Outcome::Missed };
            return Ok(trace);
        }
        let d = l1(truth, goal);
        if d <= best - s.eps_g / 2.0 {
            best = d;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= STALL_REPLANS {
                break;
            }
        }
    }
    trace.outcome = Outcome::Timeout;
    Ok(trace)
}

/// Aggregate metrics; ET, CT and scan statistics use successful runs only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub runs: usize,
    pub successes: usize,
    pub collisions: usize,
    pub timeouts: usize,
    pub missed: usize,
    pub planner_failures: usize,
    /// Percent.
    pub sr: f64,
    pub et_mean: Option<f64>,
    pub et_sd: Option<f64>,
    pub ct_mean: Option<f64>,
    pub ct_sd: Option<f64>,
    pub scans_mean: Option<f64>,
}

/// Mean and sample standard deviation (n − 1); the deviation of a single
/// sample is 0.
pub fn mean_sd(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    Some((mean, var.sqrt()))
}

pub fn compute_metrics(traces: &[ExecutionTrace]) -> RunMetrics {
    let ok: Vec<&ExecutionTrace> = traces.iter().filter(|t| t.is_success()).collect();
    let count = |f: fn(&Outcome) -> bool| traces.iter().filter(|t| f(&t.outcome)).count();
    let et = mean_sd(&ok.iter().map(|t| t.execution_time()).collect::<Vec<_>>());
    let ct = mean_sd(&ok.iter().map(|t| t.compute_time()).collect::<Vec<_>>());
    let scans = mean_sd(&ok.iter().map(|t| t.scan_count() as f64).collect::<Vec<_>>());
    RunMetrics {
        runs: traces.len(),
        successes: ok.len(),
        collisions: count(|o| matches!(o, Outcome::Collision { .. })),
        timeouts: count(|o| matches!(o, Outcome::Timeout)),
        missed: count(|o| matches!(o, Outcome::Missed)),
        planner_failures: count(|o| matches!(o, Outcome::PlannerFailure { .. })),
        sr: if traces.is_empty() { 0.0 } else { 100.0 * ok.len() as f64 / traces.len() as f64 },
        et_mean: et.map(|v| v.0),
        et_sd: et.map(|v| v.1),
        ct_mean: ct.map(|v| v.0),
        ct_sd: ct.map(|v| v.1),
        scans_mean: scans.map(|v| v.0),
    }
}

/// Runs seeds `base_seed..base_seed + n_runs`. Planner failures count as
/// unsuccessful runs.
pub fn monte_carlo(
    planner: PlannerKind,
    problem: &ProblemConfig,
    n_runs: usize,
    base_seed: u64,
    exec: &ExecutionSettings,
) -> Result<(RunMetrics, Vec<ExecutionTrace>), SimError> {
    if n_runs == 0 {
        return Err(SimError::Settings("n_runs must be at least 1".into()));
    }
    problem.validate()?;
    exec.validate()?;
    let first = plan_with(planner, problem, &exec.limits).map_err(|e| e.to_string());
    let traces = (0..n_runs as u64)
        .map(|i| rollout_with_first_plan(planner, problem, base_seed.wrapping_add(i), exec, Some(&first)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((compute_metrics(&traces), traces))
}

/// One CSV row of [`CSV_HEADER`]; absent statistics serialize as empty
/// fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub planner: String,
    pub map: String,
    pub delta_c: f64,
    pub runs: usize,
    pub sr: f64,
    pub et_mean: Option<f64>,
    pub et_sd: Option<f64>,
    pub ct_mean: Option<f64>,
    pub ct_sd: Option<f64>,
    pub scans_mean: Option<f64>,
}

impl MetricsRow {
    pub fn new(planner: PlannerKind, map: &str, delta_c: f64, m: &RunMetrics) -> Self {
        Self {
            planner: planner.name().into(),
            map: map.into(),
            delta_c,
            runs: m.runs,
            sr: m.sr,
            et_mean: m.et_mean,
            et_sd: m.et_sd,
            ct_mean: m.ct_mean,
            ct_sd: m.ct_sd,
            scans_mean: m.scans_mean,
        }
    }
}

/// The planned step closest to violating a chance constraint, before the
/// first scan of a plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TightStep {
    /// Index into the plan's states (0 is the start).
    pub state: usize,
    pub obstacle: usize,
    pub face: usize,
    /// `H·μ − β·t − b` for the certifying face.
    pub slack: f64,
}

/// Finds the state with the smallest certified margin among the states
/// reached by moves before the first scan. For each obstacle the certifying
/// face is the one with the largest margin.
pub fn tightest_step(problem: &ProblemConfig, plan: &Plan) -> Result<Option<TightStep>, SimError> {
    let obstacles = problem.planning_obstacles().map_err(|e| SimError::Problem(e.into()))?;
    let betas = problem.backoffs()?;
    let mut best: Option<TightStep> = None;
    for (i, st) in plan.executable().iter().enumerate() {
        if matches!(st.action, HybridAction::Scan) {
            break;
        }
        let mean = st.predicted_mean;
        let d = problem.backoff_driver(&mean);
        for (o, (ob, b)) in obstacles.iter().zip(&betas).enumerate() {
            let (face, slack) = ob
                .halfplanes()
                .iter()
                .zip(b)
                .map(|(h, &bt)| h.eval([mean[0], mean[1]]) - bt * d - h.offset)
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (f, v)| if v > acc.1 { (f, v) } else { acc });
            if best.map_or(true, |t| slack < t.slack) {
                best = Some(TightStep { state: i + 1, obstacle: o, face, slack });
            }
        }
    }
    Ok(best)
}

/// Fraction of traces whose true position at `tight.state` lies on the
/// obstacle side of the certifying face. Traces that ended earlier are
/// skipped; returns the frequency and the number of traces counted.
pub fn violation_frequency(problem: &ProblemConfig, tight: &TightStep, traces: &[ExecutionTrace]) -> Result<(f64, usize), SimError> {
    let obstacles = problem.planning_obstacles().map_err(|e| SimError::Problem(e.into()))?;
    let h = obstacles[tight.obstacle].halfplanes()[tight.face];
    let mut hits = 0;
    let mut counted = 0;
    for t in traces {
        if let Some(&p) = t.true_positions.get(tight.state) {
            counted += 1;
            if h.eval(p) < h.offset {
                hits += 1;
            }
        }
    }
    let freq = if counted == 0 { 0.0 } else { hits as f64 / counted as f64 };
    Ok((freq, counted))
}
