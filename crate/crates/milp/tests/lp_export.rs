use bliss_milp::{export_lp, ConstraintSense, MilpModel};

fn knapsack() -> MilpModel {
    let mut m = MilpModel::new();
    let w = [3.0, 4.0, 2.0];
    let v = [4.0, 5.0, 3.0];
    let ids: Vec<_> = (0..3).map(|i| m.add_binary(format!("item{i}")).unwrap()).collect();
    let cap: Vec<_> = ids.iter().zip(w).map(|(&id, w)| (id, w)).collect();
    m.add_constraint("capacity", &cap, ConstraintSense::Le, 6.0).unwrap();
    let slack = m.add_continuous("slack", 0.0, 6.0).unwrap();
    let mut bal = cap.clone();
    bal.push((slack, 1.0));
    m.add_constraint("balance", &bal, ConstraintSense::Eq, 6.0).unwrap();
    for (&id, v) in ids.iter().zip(v) {
        m.add_objective_term(id, -v).unwrap();
    }
    m
}

#[test]
fn knapsack_matches_golden_file() {
    let expected = include_str!("fixtures/knapsack.lp");
    assert_eq!(export_lp(&knapsack()), expected);
}

#[test]
fn export_is_stable_across_calls() {
    let m = knapsack();
    assert_eq!(export_lp(&m), export_lp(&m.clone()));
}

proptest::proptest! {
    #[test]
    fn coefficients_round_trip(x in proptest::num::f64::NORMAL | proptest::num::f64::ZERO) {
        let s = bliss_milp::format_coefficient(x);
        proptest::prop_assert_eq!(s.parse::<f64>().unwrap(), x);
    }
}
