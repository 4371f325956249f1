//! Block preconditioned steepest descent eigensolvers with implicit deflation.
//!
//! The crate computes the smallest eigenpairs of a sparse symmetric-definite
//! pencil `(H, S)` with the PSD-id / BPSD-id iterations and ships the tooling
//! needed to check the observed convergence against the known single-step and
//! multi-step estimates:
//!
//! * [`linalg`]: sparse/dense kernels, S-orthonormalization, Jacobi
//!   eigensolver, Rayleigh-Ritz.
//! * [`preconditioner`]: shift-invert operators `K ≈ (H - σS)⁻¹`.
//! * [`solver`]: the outer iteration, shift strategies and the multi-run
//!   driver with successive deflation.
//! * [`analysis`]: dense spectral oracle, preconditioner quality and bound
//!   evaluation against recorded traces.
//! * [`problems`]: slit-rectangle Laplacians and Matrix Market I/O.

pub mod analysis;
pub mod error;
pub mod linalg;
pub mod preconditioner;
pub mod problems;
pub mod solver;

pub use error::{Error, Result};
pub use linalg::{DenseBlock, Pencil, RitzSet, SparseMatrix};
