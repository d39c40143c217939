//! A convex-analysis engine for robust and distributionally robust
//! optimization.
//!
//! The crate turns problems described by atoms with known conjugates into
//! explicit finite convex programs, solves them with an embedded first-order
//! method, extracts worst-case scenarios and distributions, and
//! cross-validates every closed form against brute-force oracles.
//!
//! Start from the runnable examples (`cargo run --example <name>`): each one
//! exercises a major capability end to end.

pub mod ext;
pub mod linalg;
pub mod expr;
pub mod cone;
pub mod program;
pub mod solver;
pub mod oracle;
pub mod robust;
pub mod dro;
pub mod ot;
pub mod schema;
pub mod cli;

pub use ext::{ExtReal, Tolerances};
pub use expr::{FunctionExpr, Norm, SaddleFunction};
