//! Move/Scan belief dynamics over the augmented state `[x, y, t², t]`, with
//! position covariance `Σ^ω·t²` and Gaussian half-plane back-offs.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

pub type Vec4 = [f64; 4];
pub type Mat4 = [[f64; 4]; 4];
/// Position block of the per-step process noise covariance (m²).
pub type Cov2 = [[f64; 2]; 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeliefError {
    #[error("time step must be positive, got {0}")]
    NonPositiveDt(f64),
    #[error("probability {0} outside (0, 1)")]
    OutOfDomain(f64),
    #[error("risk {0} outside (0, 0.5)")]
    RiskOutOfRange(f64),
    #[error("normal vector must have unit length, got |H| = {0}")]
    NonUnitNormal(f64),
    #[error("scan action carries a control")]
    ControlOnScan,
    #[error("move action has no control")]
    MissingControl,
    #[error("noise covariance must be symmetric positive semidefinite")]
    InvalidCovariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionKind {
    Move,
    Scan,
}

/// A Move carries a velocity; a Scan carries nothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAction", into = "RawAction")]
pub enum HybridAction {
    Move { u: [f64; 2] },
    Scan,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAction {
    kind: ActionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    u: Option<[f64; 2]>,
}

impl TryFrom<RawAction> for HybridAction {
    type Error = BeliefError;

    fn try_from(raw: RawAction) -> Result<Self, BeliefError> {
        match (raw.kind, raw.u) {
            (ActionKind::Move, Some(u)) => Ok(HybridAction::Move { u }),
            (ActionKind::Move, None) => Err(BeliefError::MissingControl),
            (ActionKind::Scan, None) => Ok(HybridAction::Scan),
            (ActionKind::Scan, Some(_)) => Err(BeliefError::ControlOnScan),
        }
    }
}

impl From<HybridAction> for RawAction {
    fn from(a: HybridAction) -> Self {
        match a {
            HybridAction::Move { u } => RawAction { kind: ActionKind::Move, u: Some(u) },
            HybridAction::Scan => RawAction { kind: ActionKind::Scan, u: None },
        }
    }
}

impl HybridAction {
    pub fn kind(&self) -> ActionKind {
        match self {
            HybridAction::Move { .. } => ActionKind::Move,
            HybridAction::Scan => ActionKind::Scan,
        }
    }

    pub fn control(&self) -> [f64; 2] {
        match *self {
            HybridAction::Move { u } => u,
            HybridAction::Scan => [0.0, 0.0],
        }
    }
}

/// `X' = A·X + B·[u, 0, 0] + C + noise·ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionMatrices {
    pub a: Mat4,
    pub b: Mat4,
    pub c: Vec4,
    /// Gain applied to the process noise draw; zero for Scan.
    pub noise: Mat4,
}

pub fn action_matrices(kind: ActionKind, dt: f64) -> Result<ActionMatrices, BeliefError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(BeliefError::NonPositiveDt(dt));
    }
    let zero = [[0.0; 4]; 4];
    Ok(match kind {
        ActionKind::Move => {
            let mut a = zero;
            a[0][0] = 1.0;
            a[1][1] = 1.0;
            a[2][2] = 1.0;
            a[2][3] = 2.0 * dt;
            a[3][3] = 1.0;
            let mut b = zero;
            b[0][0] = dt;
            b[1][1] = dt;
            let mut noise = zero;
            noise[0][0] = 1.0;
            noise[1][1] = 1.0;
            ActionMatrices { a, b, c: [0.0, 0.0, dt * dt, dt], noise }
        }
        ActionKind::Scan => {
            let mut a = zero;
            a[0][0] = 1.0;
            a[1][1] = 1.0;
            ActionMatrices { a, b: zero, c: [0.0, 0.0, 1.0, 1.0], noise: zero }
        }
    })
}

/// Expected next mean: `A·μ + B·u + C`.
pub fn propagate_mean(mean: Vec4, action: &HybridAction, dt: f64) -> Result<Vec4, BeliefError> {
    let m = action_matrices(action.kind(), dt)?;
    let u = action.control();
    let ext = [u[0], u[1], 0.0, 0.0];
    let mut out = m.c;
    for (i, o) in out.iter_mut().enumerate() {
        for j in 0..4 {
            *o += m.a[i][j] * mean[j] + m.b[i][j] * ext[j];
        }
    }
    Ok(out)
}

/// Position covariance after `t` seconds without a scan.
pub fn covariance_at(t: f64, sigma_w: &Cov2) -> Cov2 {
    let s = t * t;
    [[sigma_w[0][0] * s, sigma_w[0][1] * s], [sigma_w[1][0] * s, sigma_w[1][1] * s]]
}

pub fn validate_covariance(sigma_w: &Cov2) -> Result<(), BeliefError> {
    let [[a, b], [c, d]] = *sigma_w;
    let ok = [a, b, c, d].iter().all(|v| v.is_finite())
        && (b - c).abs() <= 1e-15 * (1.0 + a.abs() + d.abs())
        && a >= 0.0
        && d >= 0.0
        && a * d - b * c >= -1e-18;
    if ok {
        Ok(())
    } else {
        Err(BeliefError::InvalidCovariance)
    }
}

pub fn trace(sigma_w: &Cov2) -> f64 {
    sigma_w[0][0] + sigma_w[1][1]
}

/// Standard normal inverse CDF.
pub fn normal_quantile(p: f64) -> Result<f64, BeliefError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(BeliefError::OutOfDomain(p));
    }
    Ok(Normal::standard().inverse_cdf(p))
}

/// How the half-plane margin scales with time since the last scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackoffForm {
    /// Gaussian margin `z·sqrt(HΣHᵀ)`; the coefficient multiplies `t`.
    #[default]
    StdDev,
    /// Margin `z·HΣHᵀ` with no square root; the coefficient multiplies `t²`.
    Variance,
}

/// Back-off coefficient `β` so that `H·μ − β·t ≥ b` (or `β·t²` in the
/// variance form) bounds the violation probability of one half-plane by
/// `delta`.
pub fn risk_backoff(h: [f64; 2], sigma_w: &Cov2, delta: f64, form: BackoffForm) -> Result<f64, BeliefError> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(BeliefError::RiskOutOfRange(delta));
    }
    let len = h[0].hypot(h[1]);
    if (len - 1.0).abs() > 1e-9 {
        return Err(BeliefError::NonUnitNormal(len));
    }
    let var = h[0] * (sigma_w[0][0] * h[0] + sigma_w[0][1] * h[1]) + h[1] * (sigma_w[1][0] * h[0] + sigma_w[1][1] * h[1]);
    let z = -normal_quantile(delta)?;
    Ok(match form {
        BackoffForm::StdDev => z * var.max(0.0).sqrt(),
        BackoffForm::Variance => z * var.max(0.0),
    })
}

/// Uniform split of the per-step risk budget across obstacles.
pub fn per_obstacle_risk(delta_c: f64, num_obstacles: usize) -> f64 {
    delta_c / num_obstacles.max(1) as f64
}
