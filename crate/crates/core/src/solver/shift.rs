use serde::{Deserialize, Serialize};

use super::DeflationSet;

/// How the shift `σ` of `K ≈ (H − σS)⁻¹` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum ShiftStrategy {
    /// The same `σ` for every run.
    Fixed { sigma: f64 },
    /// `initial` for the first run, then the last accepted eigenvalue plus
    /// `offset`.
    PrevEig {
        initial: f64,
        #[serde(default)]
        offset: f64,
    },
    /// As `PrevEig` at the start of a run; during the run `σ ← (σ + θ₁)/2`
    /// whenever the convergence-rate estimate `η` and the residual norm both
    /// fall below their thresholds.
    Dynamic {
        initial: f64,
        #[serde(default)]
        offset: f64,
        #[serde(default = "default_threshold")]
        eta_threshold: f64,
        #[serde(default = "default_threshold")]
        res_threshold: f64,
        #[serde(default = "default_floor")]
        refine_tol_floor: f64,
    },
}

fn default_threshold() -> f64 {
    0.1
}

fn default_floor() -> f64 {
    1e-12
}

impl ShiftStrategy {
    pub fn dynamic(initial: f64) -> Self {
        ShiftStrategy::Dynamic {
            initial,
            offset: 0.0,
            eta_threshold: default_threshold(),
            res_threshold: default_threshold(),
            refine_tol_floor: default_floor(),
        }
    }

    /// Shift used when a run starts.
    pub fn initial_shift(&self, defl: &DeflationSet) -> f64 {
        match *self {
            ShiftStrategy::Fixed { sigma } => sigma,
            ShiftStrategy::PrevEig { initial, offset } | ShiftStrategy::Dynamic { initial, offset, .. } => {
                match defl.eigenvalues().last() {
                    Some(&last) => last + offset,
                    None => initial,
                }
            }
        }
    }
}

/// Outcome of [`update_shift`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftUpdate {
    pub sigma: f64,
    pub switched: bool,
    /// New inner tolerance for Krylov preconditioners after a switch.
    pub inner_tol: Option<f64>,
    /// The rate estimate `η`, when it could be formed.
    pub eta: Option<f64>,
}

/// Applies the strategy between two outer steps.
///
/// `theta` holds the current Ritz values, `prev_theta_first` the first Ritz
/// value of the previous step and `resnorm` the stopping norm of the first
/// `k` columns.
pub fn update_shift(
    strategy: &ShiftStrategy,
    sigma: f64,
    theta: &[f64],
    prev_theta_first: Option<f64>,
    resnorm: f64,
    defl: &DeflationSet,
) -> ShiftUpdate {
    let unchanged = ShiftUpdate {
        sigma,
        switched: false,
        inner_tol: None,
        eta: None,
    };
    match *strategy {
        ShiftStrategy::Fixed { .. } => unchanged,
        ShiftStrategy::PrevEig { offset, .. } => match defl.eigenvalues().last() {
            Some(&last) => ShiftUpdate {
                sigma: last + offset,
                ..unchanged
            },
            None => unchanged,
        },
        ShiftStrategy::Dynamic {
            eta_threshold,
            res_threshold,
            refine_tol_floor,
            ..
        } => {
            let (Some(old), [t1, t2, ..]) = (prev_theta_first, theta) else {
                return unchanged;
            };
            let gap = t2 - t1;
            if !(gap > 0.0) {
                return unchanged;
            }
            let eta = (old - t1) / gap;
            let mut out = ShiftUpdate {
                eta: Some(eta),
                ..unchanged
            };
            if eta < eta_threshold && resnorm < res_threshold {
                let candidate = 0.5 * (sigma + t1);
                // Ritz values stand in for the unknown eigenvalues in the
                // admissible window σ < (λᵢ + λᵢ₊₁)/2.
                if candidate < 0.5 * (t1 + t2) {
                    out.sigma = candidate;
                    out.switched = true;
                    out.inner_tol = Some(eta.max(refine_tol_floor));
                }
            }
            out
        }
    }
}
