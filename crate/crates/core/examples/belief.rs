//! Belief propagation through moves and a scan, and the resulting risk
//! back-off on one obstacle face.

use bliss_tamp::belief::{covariance_at, per_obstacle_risk, propagate_mean, risk_backoff, BackoffForm, HybridAction};

fn main() {
    let sigma_w = [[4e-4, 0.0], [0.0, 4e-4]];
    let actions = [
        HybridAction::Move { u: [0.5, 0.0] },
        HybridAction::Move { u: [0.5, 0.3] },
        HybridAction::Move { u: [0.0, 0.5] },
        HybridAction::Scan,
        HybridAction::Move { u: [0.5, 0.5] },
    ];
    let mut mean = [0.0, 0.0, 1.0, 1.0];
    for a in &actions {
        mean = propagate_mean(mean, a, 1.0).unwrap();
        let cov = covariance_at(mean[3], &sigma_w);
        println!("{a:?}: position ({:.2}, {:.2}), t = {}, var x = {:.1e}", mean[0], mean[1], mean[3], cov[0][0]);
    }
    let delta = per_obstacle_risk(0.1, 1);
    let beta = risk_backoff([1.0, 0.0], &sigma_w, delta, BackoffForm::StdDev).unwrap();
    println!("risk {delta} per obstacle: the face constraint tightens by {beta:.4}·t");
}
