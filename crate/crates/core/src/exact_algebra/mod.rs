//! Exact polynomial and rational-function arithmetic over the rationals.

mod poly;
mod rational_n;
mod rational_x;

pub use poly::{
    format_rational, has_integer_coefficients, integer, parse_rational, poly, rational, Exponents, Monomial,
    SparsePoly,
};
pub use rational_n::{DecayOrder, RationalOfN, UniPoly};
pub use rational_x::RationalFuncX;
