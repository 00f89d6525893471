//! Conic modeling layer and interior-point solver.
//!
//! Supports linear, second-order (plain and rotated), exponential and complex
//! Hermitian PSD cones. Complex quantities are modeled through their real and
//! imaginary parts; Hermitian PSD variables are handled natively by the
//! solver with the `−log det` barrier.

mod cones;
mod embed;
mod error;
mod expr;
mod hermitian;
mod program;
mod solver;

pub use embed::{embed_hermitian, embed_vector};
pub use error::ConicError;
pub use expr::{ComplexExpr, LinExpr};
pub use program::{ComplexVector, ConeProgram, HermitianExpr, HermitianVar, RealVector, Scalar};
pub use solver::{ConicSolution, SolveStatus, SolverSettings};
