pub mod acceptance;
pub mod asymptotic_lab;
pub mod combinatorics;
pub mod diagonal_calculus;
pub mod divided_difference_ops;
pub mod error;
pub mod exact_algebra;
pub mod numeric_harness;
pub mod oracle;
pub mod symmetric_basis;

pub use error::{Error, Result};
