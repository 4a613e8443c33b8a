//! Slow, dense reference implementations for the test suites.
//!
//! Nothing here shares code with `tvspline`: B-splines come from the
//! textbook recursion, quadrature from the Jacobi eigenproblem, and the
//! linear algebra and TV minimizers work on dense `nalgebra` matrices.

pub mod bspline;
pub mod gauss;
pub mod linalg;
pub mod tv;
