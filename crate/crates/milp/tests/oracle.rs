mod common;

use bliss_milp::{
    dual_bound, enumerate_solve, solve, solve_lp_relaxation, ConstraintSense, LpStatus, MilpModel, SolveLimits,
    SolveStatus,
};
use common::random_model;

#[test]
fn branch_and_bound_matches_enumeration_on_random_models() {
    let limits = SolveLimits::default();
    let mut optimal = 0;
    for seed in 0..200 {
        let model = random_model(seed);
        let bb = solve(&model, &limits).unwrap();
        let en = enumerate_solve(&model).unwrap();
        assert_eq!(bb.status, en.status, "seed {seed}");
        if bb.status == SolveStatus::Optimal {
            optimal += 1;
            assert!(
                (bb.objective_value - en.objective_value).abs() <= 1e-6,
                "seed {seed}: {} vs {}",
                bb.objective_value,
                en.objective_value
            );
            assert!(model.max_violation(&bb.values) <= 1e-6, "seed {seed}");
            for b in model.binary_ids() {
                let v = bb.values[b.0];
                assert!(v == 0.0 || v == 1.0);
            }
        }
    }
    // the generator must exercise both outcomes
    assert!(optimal > 40 && optimal < 200, "optimal count {optimal}");
}

#[test]
fn relaxation_dual_bound_matches_primal() {
    let mut checked = 0;
    for seed in 0..200 {
        let model = random_model(1000 + seed);
        let lp = solve_lp_relaxation(&model, &[]).unwrap();
        if lp.status != LpStatus::Optimal {
            continue;
        }
        checked += 1;
        let bound = dual_bound(&model, &lp, &[]);
        assert!((bound - lp.objective).abs() <= 1e-7, "seed {seed}: dual {bound} primal {}", lp.objective);
        assert!(model.max_violation(&lp.values) <= 1e-7);
    }
    assert!(checked > 50);
}

#[test]
fn solve_is_deterministic() {
    for seed in 0..30 {
        let model = random_model(5000 + seed);
        let a = solve(&model, &SolveLimits::default()).unwrap();
        let b = solve(&model, &SolveLimits::default()).unwrap();
        assert_eq!(a.status, b.status);
        assert_eq!(a.node_count, b.node_count);
        assert_eq!(a.values, b.values);
        assert_eq!(a.objective_value.to_bits(), b.objective_value.to_bits());
    }
}

#[test]
fn extra_constraint_never_improves_objective() {
    for seed in 0..60 {
        let model = random_model(9000 + seed);
        let base = solve(&model, &SolveLimits::default()).unwrap();
        if base.status != SolveStatus::Optimal {
            continue;
        }
        let mut tighter = model.clone();
        let vars: Vec<_> = (0..model.num_variables()).map(bliss_milp::VarId).collect();
        let terms: Vec<_> = vars.iter().enumerate().map(|(k, &v)| (v, ((k % 3) as f64) - 1.0)).collect();
        tighter.add_constraint("extra", &terms, ConstraintSense::Le, 0.0).unwrap();
        let t = solve(&tighter, &SolveLimits::default()).unwrap();
        if t.status == SolveStatus::Optimal {
            assert!(t.objective_value >= base.objective_value - 1e-6, "seed {seed}");
        }
    }
}

#[test]
fn continuous_model_reduces_to_root_lp() {
    let mut m = MilpModel::new();
    let x = m.add_continuous("x", 0.0, 5.0).unwrap();
    let y = m.add_continuous("y", 0.0, 5.0).unwrap();
    m.add_constraint("c", &[(x, 1.0), (y, 1.0)], ConstraintSense::Ge, 2.0).unwrap();
    m.add_objective_term(x, 1.0).unwrap();
    m.add_objective_term(y, 1.0).unwrap();
    let lp = solve_lp_relaxation(&m, &[]).unwrap();
    let bb = solve(&m, &SolveLimits::default()).unwrap();
    assert_eq!(bb.status, SolveStatus::Optimal);
    assert_eq!(bb.node_count, 1);
    assert!((bb.objective_value - lp.objective).abs() < 1e-12);
    assert!((bb.objective_value - 2.0).abs() < 1e-9);
}
