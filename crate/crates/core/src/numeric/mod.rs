//! Small self-contained numerical kernels.

pub mod linalg;
pub mod poly;
pub mod quad;
pub mod tridiag;
