use bliss_milp::{enumerate_solve, solve, SolveLimits, SolveStatus};
use bliss_tamp::encoder::{check_plan, check_solution, decode, encode, goal_admissible, ProblemConfig, Settings};
use bliss_tamp::geometry::{Bounds, ConvexObstacle, WorldMap};

/// Six steps, one obstacle just below the goal corner. Reachability fixes
/// most indicator and face binaries, leaving few enough free ones for the
/// exhaustive oracle.
fn six_step_problem() -> ProblemConfig {
    let bounds = Bounds { xmin: -1.0, ymin: -1.0, xmax: 3.2, ymax: 3.2 };
    let obstacle = ConvexObstacle::rectangle(2.4, 1.2, 3.2, 1.9).unwrap();
    let map = WorldMap::new(bounds, [0.0, 0.0], [2.5, 2.5], vec![obstacle]).unwrap();
    ProblemConfig::new(map, Settings { horizon: 6, ..Settings::default() })
}

fn exact() -> SolveLimits {
    SolveLimits { relative_gap: 1e-9, ..SolveLimits::default() }
}

#[test]
fn six_step_solve_matches_enumeration() {
    let problem = six_step_problem();
    let encoded = encode(&problem).unwrap();
    let free = encoded
        .model
        .binary_ids()
        .into_iter()
        .filter(|&b| {
            let v = encoded.model.variable(b);
            v.lower < v.upper
        })
        .count();
    assert!(free <= bliss_milp::MAX_ENUMERATED_BINARIES);
    let faces_free = encoded.vars.faces.iter().flatten().flatten().any(|&b| encoded.model.variable(b).upper == 1.0);
    assert!(faces_free, "the obstacle should leave a real choice of face");
    let bb = solve(&encoded.model, &exact()).unwrap();
    let en = enumerate_solve(&encoded.model).unwrap();
    assert_eq!(bb.status, SolveStatus::Optimal);
    assert_eq!(en.status, SolveStatus::Optimal);
    assert!((bb.objective_value - en.objective_value).abs() <= 1e-6);
    check_solution(&problem, &encoded, &bb.values).unwrap();
    check_solution(&problem, &encoded, &en.values).unwrap();
    let plan = decode(&problem, &encoded, &bb).unwrap();
    check_plan(&problem, &plan, encoded.relax_after_arrival).unwrap();
}

#[test]
fn fixed_binaries_keep_seed_assignments_feasible() {
    let problem = six_step_problem();
    let encoded = encode(&problem).unwrap();
    let solution = solve(&encoded.model, &exact()).unwrap();
    let plan = decode(&problem, &encoded, &solution).unwrap();
    let values = bliss_tamp::encoder::assignment_from_plan(&problem, &encoded, &plan).unwrap();
    assert!(encoded.model.max_violation(&values) <= 1e-6);
    check_solution(&problem, &encoded, &values).unwrap();
}

#[test]
fn tampered_solution_is_caught() {
    let problem = six_step_problem();
    let encoded = encode(&problem).unwrap();
    let mut solution = solve(&encoded.model, &exact()).unwrap();
    let x2 = encoded.vars.state[1][0];
    solution.values[x2.0] += 0.1;
    assert!(decode(&problem, &encoded, &solution).is_err());
    assert!(check_solution(&problem, &encoded, &solution.values).is_err());
}

#[test]
fn unreachable_goal_steps_are_fixed_outside() {
    let problem = six_step_problem();
    let encoded = encode(&problem).unwrap();
    // L1 distance 5 at 0.5 per axis per step: the diamond of radius 0.5 is
    // out of reach for the first three transitions
    for k in 0..3 {
        assert_eq!(encoded.model.variable(encoded.vars.outside_goal[k]).lower, 1.0, "step {k}");
    }
    let last = *encoded.vars.outside_goal.last().unwrap();
    assert_eq!(encoded.model.variable(last).lower, 0.0);
}

#[test]
fn goal_admissibility_follows_the_goal_neighbourhood() {
    assert!(goal_admissible(&six_step_problem()).unwrap());
    let bounds = Bounds { xmin: 0.0, ymin: 0.0, xmax: 8.0, ymax: 6.0 };
    let slot = vec![
        ConvexObstacle::rectangle(4.0, 2.0, 4.75, 4.0).unwrap(),
        ConvexObstacle::rectangle(5.25, 2.0, 6.0, 4.0).unwrap(),
        ConvexObstacle::rectangle(4.0, 4.0, 6.0, 4.5).unwrap(),
    ];
    let blocked = WorldMap::new(bounds, [1.0, 1.0], [5.0, 3.5], slot.clone()).unwrap();
    assert!(!goal_admissible(&ProblemConfig::new(blocked, Settings::default())).unwrap());
    // the slot mouth lies inside the diamond once it is wide enough
    let wide = WorldMap::new(bounds, [1.0, 1.0], [5.0, 3.5], slot).unwrap();
    let settings = Settings { eps_g: 2.0, ..Settings::default() };
    assert!(goal_admissible(&ProblemConfig::new(wide, settings)).unwrap());
}
