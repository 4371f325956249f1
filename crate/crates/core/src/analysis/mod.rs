//! Dense reference spectra, preconditioner quality and convergence bounds.
//!
//! Everything here is meant for small problems where a full
//! eigendecomposition is affordable. The [`verify_trace`] entry point compares
//! a recorded solver trace with the single-step and multi-step estimates.

mod bounds;
mod oracle;
mod quality;
mod sharpness;
mod verify;

pub use bounds::{
    compute_tau, kappa, larger_shift_bounds, multi_step_bounds, ratio, ratio_to_error, single_step_factor, BoundValue,
    LargerShiftBounds, MultiStepBounds, MultiStepInput, Tau,
};
pub use oracle::{dense_oracle, SpectralOracle};
pub use quality::{
    effective_form, max_principal_sine, quality_epsilon, realized_epsilon, Definiteness, EpsilonSchedule, NuRule,
    QualityObserver, QualityReport, RestrictedOperators,
};
pub use sharpness::{sharpness_probe, SharpnessPoint, SharpnessReport};
pub use verify::{verify_trace, BoundReport, BoundRow, MultiStepRow, Regime, SkipReason, VerifyConfig};
