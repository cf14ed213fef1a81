use bliss_milp::SolveLimits;
use bliss_tamp::belief::HybridAction;
use bliss_tamp::encoder::{ProblemConfig, Settings};
use bliss_tamp::geometry::{Bounds, ConvexObstacle, WorldMap};
use bliss_tamp::planners::PlannerKind;
use bliss_tamp::simharness::{
    compute_metrics, execution_time, monte_carlo, rollout, ExecutionSettings, ExecutionTrace, Outcome,
};
use proptest::prelude::*;

fn bounds() -> Bounds {
    Bounds { xmin: -1.0, ymin: -1.0, xmax: 11.0, ymax: 11.0 }
}

fn quiet() -> ExecutionSettings {
    ExecutionSettings { noise_scale: 0.0, ..ExecutionSettings::default() }
}

#[test]
fn noiseless_execution_follows_the_plan() {
    let map = WorldMap::new(bounds(), [0.0, 0.0], [5.0, 5.0], vec![]).unwrap();
    let problem = ProblemConfig::new(map, Settings { horizon: 20, ..Settings::default() });
    for planner in [PlannerKind::TwoStage, PlannerKind::Milp] {
        let trace = rollout(planner, &problem, 3, &quiet()).unwrap();
        assert_eq!(trace.outcome, Outcome::Success, "{planner:?}");
        for (p, m) in trace.true_positions.iter().zip(&trace.belief_means) {
            assert!((p[0] - m[0]).abs() <= 1e-12 && (p[1] - m[1]).abs() <= 1e-12);
        }
        assert_eq!(trace.true_positions.len(), trace.actions.len() + 1);
    }
}

#[test]
fn rollouts_are_deterministic() {
    let wall = ConvexObstacle::rectangle(2.0, 2.0, 3.0, 6.0).unwrap();
    let map = WorldMap::new(bounds(), [0.0, 0.0], [6.0, 6.0], vec![wall]).unwrap();
    let problem = ProblemConfig::new(map, Settings { horizon: 30, ..Settings::default() });
    let exec = ExecutionSettings::default();
    // wall-clock timings are the only field allowed to differ
    let run = || ExecutionTrace { timings: Vec::new(), ..rollout(PlannerKind::TwoStage, &problem, 11, &exec).unwrap() };
    let (a, b) = (run(), run());
    assert_eq!(a.to_json(), b.to_json());
    let c = rollout(PlannerKind::TwoStage, &problem, 12, &exec).unwrap();
    assert_ne!(a.true_positions, c.true_positions);
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Straight run beneath a long wall with the execution noise inflated 100
/// times. The walk collides iff some position crosses the wall face, so the
/// collision rate lies between the largest per-step tail and the union bound.
#[test]
fn inflated_noise_collisions_match_gaussian_tails() {
    let wall = ConvexObstacle::rectangle(-1.0, 1.2, 11.0, 1.7).unwrap();
    let map = WorldMap::new(bounds(), [0.0, 0.5], [5.0, 0.5], vec![wall]).unwrap();
    let problem = ProblemConfig::new(map, Settings::default());
    let exec = ExecutionSettings { noise_scale: 100.0, ..ExecutionSettings::default() };
    let runs = 300;
    let (metrics, traces) = monte_carlo(PlannerKind::TwoStage, &problem, runs, 0, &exec).unwrap();

    let plan = &traces[0];
    let sigma = (100.0 * problem.settings.sigma_w[1][1]).sqrt();
    let mut tails = Vec::new();
    let mut moves = 0.0;
    for (a, m) in plan.actions.iter().zip(&plan.belief_means[1..]) {
        if let HybridAction::Move { .. } = a {
            moves += 1.0;
            tails.push(normal_cdf(-(1.2 - m[1]) / (sigma * f64::sqrt(moves))));
        }
    }
    let lower = tails.iter().copied().fold(0.0, f64::max);
    let upper: f64 = tails.iter().sum::<f64>().min(1.0);
    let freq = metrics.collisions as f64 / runs as f64;
    let se = (lower.max(0.05) * (1.0 - lower.min(0.95)) / runs as f64).sqrt();
    assert!(freq > 0.0 && freq < 0.5, "collisions should be a minority, got {freq}");
    assert!(freq >= lower - 3.0 * se, "{freq} below tail {lower}");
    assert!(freq <= upper + 3.0 * se, "{freq} above union bound {upper}");
}

fn trace(outcome: Outcome, scans: usize, moves: usize, ct: f64) -> ExecutionTrace {
    let mut actions = vec![HybridAction::Scan; scans];
    actions.extend(std::iter::repeat(HybridAction::Move { u: [0.5, 0.0] }).take(moves));
    ExecutionTrace {
        seed: 0,
        outcome,
        true_positions: vec![[0.0, 0.0]; actions.len() + 1],
        belief_means: vec![[0.0, 0.0, 1.0, 1.0]; actions.len() + 1],
        actions,
        timings: vec![ct],
    }
}

#[test]
fn one_scan_and_27_moves() {
    assert_eq!(trace(Outcome::Success, 1, 27, 0.0).execution_time(), 113.5);
}

#[test]
fn success_rate_examples() {
    let all: Vec<_> = (0..25).map(|_| trace(Outcome::Success, 1, 10, 1.0)).collect();
    assert_eq!(compute_metrics(&all).sr, 100.0);
    let some: Vec<_> = (0..25)
        .map(|i| if i < 16 { trace(Outcome::Success, 1, 10, 1.0) } else { trace(Outcome::Timeout, 0, 3, 1.0) })
        .collect();
    let m = compute_metrics(&some);
    assert_eq!(m.sr, 64.0);
    assert_eq!(m.timeouts, 9);
}

#[test]
fn statistics_use_successes_only() {
    let ts = vec![
        trace(Outcome::Success, 1, 0, 2.0),
        trace(Outcome::Success, 1, 40, 4.0),
        trace(Outcome::Collision { step: 3, obstacle: 0 }, 0, 4, 50.0),
    ];
    let m = compute_metrics(&ts);
    assert!((m.et_mean.unwrap() - 110.0).abs() < 1e-12);
    assert!((m.et_sd.unwrap() - 200f64.sqrt()).abs() < 1e-12);
    assert!((m.ct_mean.unwrap() - 3.0).abs() < 1e-12);
    assert_eq!(m.collisions, 1);

    let single = compute_metrics(&ts[..1]);
    assert_eq!(single.et_sd, Some(0.0));
    let none = compute_metrics(&ts[2..]);
    assert_eq!(none.sr, 0.0);
    assert_eq!(none.et_mean, None);
}

#[test]
fn traces_round_trip_through_json() {
    let t = trace(Outcome::PlannerFailure { step: 2, reason: "no path".into() }, 1, 2, 0.5);
    let back: ExecutionTrace = serde_json::from_str(&t.to_json()).unwrap();
    assert_eq!(back, t);
}

#[test]
fn monte_carlo_rejects_zero_runs() {
    let map = WorldMap::new(bounds(), [0.0, 0.0], [5.0, 5.0], vec![]).unwrap();
    let problem = ProblemConfig::new(map, Settings::default());
    assert!(monte_carlo(PlannerKind::TwoStage, &problem, 0, 0, &ExecutionSettings::default()).is_err());
}

#[test]
fn milp_batch_shares_its_first_plan() {
    let map = WorldMap::new(bounds(), [0.0, 0.0], [4.0, 4.0], vec![]).unwrap();
    let problem = ProblemConfig::new(map, Settings { horizon: 16, ..Settings::default() });
    let exec = ExecutionSettings { limits: SolveLimits { time_limit: 30.0, ..SolveLimits::default() }, ..quiet() };
    let (m, traces) = monte_carlo(PlannerKind::Milp, &problem, 3, 0, &exec).unwrap();
    assert_eq!(m.sr, 100.0);
    assert!(traces.windows(2).all(|w| w[0].actions == w[1].actions));
}

proptest! {
    #[test]
    fn execution_time_is_an_action_count_identity(scans in 0usize..50, moves in 0usize..200) {
        let t = trace(Outcome::Success, scans, moves, 0.0);
        prop_assert_eq!(t.execution_time(), execution_time(t.scan_count(), t.move_count()));
        prop_assert_eq!(t.execution_time(), 100.0 * scans as f64 + 0.5 * moves as f64);
    }
}
