//! Test problems and Matrix Market exchange.

mod laplacian;
mod mm;

pub use laplacian::{analytic_rectangle_eigs, build_slit_laplacian, GridIndexMap, Slit, SlitRectangleSpec};
pub use mm::{mm_format, mm_parse, mm_read, mm_write};
