//! Sparse and small dense kernels.

pub mod dense;
pub mod jacobi;
pub mod krylov;
pub mod ortho;
pub mod pencil;
pub mod ritz;
pub mod sparse;

pub use dense::{axpy, dot, norm2, DenseBlock};
pub use jacobi::{sym_eig, SymEig, DEFAULT_DENSE_LIMIT};
pub use krylov::{cg, minres, KrylovConfig, KrylovOutcome};
pub use ortho::{s_orthonormalize, DEFAULT_DROPTOL};
pub use pencil::{rayleigh_quotient, s_inner, s_inv_norm, Pencil};
pub use ritz::{rayleigh_ritz, ritz_in_orthonormal_basis, RitzSet};
pub use sparse::SparseMatrix;

/// Parlett-style radius `‖r‖_{S⁻¹}/‖z‖_S` of the interval around `ρ(z)` that
/// is guaranteed to contain an eigenvalue.
pub fn certificate_radius(r_s_inv_norm: f64, z_s_norm: f64) -> f64 {
    r_s_inv_norm / z_s_norm
}
