use thiserror::Error;

use crate::exact_algebra::SparsePoly;

#[derive(Debug, Error)]
pub enum Error {
    #[error("polynomials live in different rings: {left} vs {right} variables")]
    NvarsMismatch { left: usize, right: usize },

    #[error("variable index {index} out of range for {nvars} variables")]
    VariableOutOfRange { index: usize, nvars: usize },

    #[error("exact division failed, nonzero remainder:\n{remainder}")]
    NotDivisible { remainder: Box<SparsePoly> },

    #[error("division by the zero {0}")]
    DivisionByZero(&'static str),

    #[error("partitions {left} and {right} have different weights")]
    Incomparable { left: String, right: String },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("no coordinate u_{r} in {nvars} variables")]
    NoSuchCoordinate { r: usize, nvars: usize },

    #[error("operator order {d} out of range for {nvars} variables")]
    OperatorOrder { d: usize, nvars: usize },

    #[error("polynomial is not symmetric: {0}")]
    NotSymmetric(String),

    #[error("partition {partition} is not admissible for {nvars} variables")]
    Inadmissible { partition: String, nvars: usize },

    #[error("basis conversion unsupported: {0}")]
    Conversion(String),

    #[error("coincidence pattern: {0}")]
    Pattern(String),

    #[error("oracle cannot supply {0}")]
    Oracle(String),

    #[error("singular jacobian at the requested point")]
    SingularJacobian,

    #[error("limit did not converge: {0}")]
    NoConvergence(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
