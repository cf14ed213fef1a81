use bliss_tamp::belief::{
    covariance_at, normal_quantile, propagate_mean, risk_backoff, BackoffForm, Cov2, HybridAction,
};
use proptest::prelude::*;

/// Independent quantile: bisection on the complementary error function.
fn quantile_oracle(p: f64) -> f64 {
    let (target, sign) = if p < 0.5 { (p, -1.0) } else { (1.0 - p, 1.0) };
    // find z >= 0 with 0.5 * erfc(z / sqrt 2) = target
    let (mut lo, mut hi) = (0.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if 0.5 * libm::erfc(mid / std::f64::consts::SQRT_2) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    sign * 0.5 * (lo + hi)
}

#[test]
fn quantile_matches_oracle_at_probe_points() {
    let mut probes: Vec<f64> = (1..=90).map(|i| i as f64 / 91.0).collect();
    probes.extend([1e-9, 1e-6, 1e-4, 0.001, 0.01, 0.99, 0.999, 0.9999, 1.0 - 1e-6, 0.025]);
    assert_eq!(probes.len(), 100);
    for p in probes {
        let z = normal_quantile(p).unwrap();
        let oracle = quantile_oracle(p);
        assert!((z - oracle).abs() <= 1e-9, "p={p}: {z} vs {oracle}");
    }
    assert!((quantile_oracle(0.1) + 1.2815515655).abs() < 1e-9);
}

fn action() -> impl Strategy<Value = HybridAction> {
    prop_oneof![
        3 => (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| HybridAction::Move { u: [a, b] }),
        1 => Just(HybridAction::Scan),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn time_square_stays_consistent(actions in proptest::collection::vec(action(), 0..40), dt in 0.05f64..2.0) {
        let mut m = [0.0, 0.0, 1.0, 1.0];
        for a in &actions {
            let next = propagate_mean(m, a, dt).unwrap();
            if let HybridAction::Scan = a {
                prop_assert_eq!([next[0], next[1]], [m[0], m[1]]);
                prop_assert_eq!(propagate_mean(next, a, dt).unwrap(), next);
            }
            m = next;
            prop_assert!(m[3] >= 1.0);
            prop_assert!((m[2] - m[3] * m[3]).abs() <= 1e-9 * m[2].max(1.0), "{:?}", m);
        }
    }
}

proptest! {
    #[test]
    fn covariance_is_monotone(t1 in 1.0f64..100.0, dt in 0.0f64..50.0, a in 0.0f64..0.1, d in 0.0f64..0.1) {
        let s: Cov2 = [[a, 0.0], [0.0, d]];
        let c1 = covariance_at(t1, &s);
        let c2 = covariance_at(t1 + dt, &s);
        prop_assert!(c2[0][0] >= c1[0][0] && c2[1][1] >= c1[1][1]);
    }

    #[test]
    fn backoff_decreases_with_risk(d1 in 1e-6f64..0.49, gap in 1e-4f64..0.2, ang in 0.0f64..6.28) {
        let d2 = (d1 + gap).min(0.4999);
        prop_assume!(d2 > d1);
        let h = [ang.cos(), ang.sin()];
        let s: Cov2 = [[4e-4, 1e-4], [1e-4, 9e-4]];
        let b1 = risk_backoff(h, &s, d1, BackoffForm::StdDev).unwrap();
        let b2 = risk_backoff(h, &s, d2, BackoffForm::StdDev).unwrap();
        prop_assert!(b1 > b2 && b2 > 0.0);
    }
}
