//! Symmetric test functions `φ` that supply values and partial derivatives,
//! exactly when they are polynomials and by finite differences otherwise.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exact_algebra::{SparsePoly, UniPoly};

/// Field elements the diagonal formulas are evaluated in: exact rationals or
/// `f64`.
pub trait Scalar: Clone + fmt::Debug + PartialEq + Num + std::ops::Neg<Output = Self> + Send + Sync + 'static {
    fn from_rational(q: &BigRational) -> Self;
    fn to_f64(&self) -> f64;
    /// `None` for non-finite input.
    fn from_f64(v: f64) -> Option<Self>;
    fn is_exact() -> bool;

    fn from_int(n: i64) -> Self {
        Self::from_rational(&BigRational::from_integer(BigInt::from(n)))
    }

    fn powu(&self, k: usize) -> Self {
        (0..k).fold(Self::one(), |acc, _| acc * self.clone())
    }
}

impl Scalar for f64 {
    fn from_rational(q: &BigRational) -> Self {
        ToPrimitive::to_f64(q).unwrap_or(f64::NAN)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn from_f64(v: f64) -> Option<Self> {
        v.is_finite().then_some(v)
    }
    fn is_exact() -> bool {
        false
    }
    fn from_int(n: i64) -> Self {
        n as f64
    }
    fn powu(&self, k: usize) -> Self {
        self.powi(k as i32)
    }
}

impl Scalar for BigRational {
    fn from_rational(q: &BigRational) -> Self {
        q.clone()
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn from_f64(v: f64) -> Option<Self> {
        BigRational::from_float(v)
    }
    fn is_exact() -> bool {
        true
    }
}

/// Step and stencil settings for finite-difference partials.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiniteDifference {
    /// Relative base step; order-`k` stencils use `step^{1/(k+1)}`.
    pub step: f64,
    /// Apply one Richardson halving step.
    pub richardson: bool,
}

impl Default for FiniteDifference {
    fn default() -> Self {
        Self { step: 1e-6, richardson: true }
    }
}

impl FiniteDifference {
    /// `∏_i ∂_i^{orders[i]} f` at `point` by nested central differences.
    pub fn partial(&self, f: &dyn Fn(&[f64]) -> f64, orders: &[u32], point: &[f64]) -> f64 {
        let total: u32 = orders.iter().sum();
        if total == 0 {
            return f(point);
        }
        let scale = point.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let h = self.step.powf(1.0 / f64::from(total + 1)) * scale;
        let coarse = central_stencil(f, orders, point, h);
        if !self.richardson {
            return coarse;
        }
        let fine = central_stencil(f, orders, point, h / 2.0);
        (4.0 * fine - coarse) / 3.0
    }
}

/// `Σ_{j} (−1)^{j} C(k,j) f(x + (k/2 − j)h e_i) / h^k`, nested over variables.
fn central_stencil(f: &dyn Fn(&[f64]) -> f64, orders: &[u32], point: &[f64], h: f64) -> f64 {
    let Some(i) = orders.iter().position(|&k| k > 0) else {
        return f(point);
    };
    let k = orders[i];
    let mut rest = orders.to_vec();
    rest[i] = 0;
    let mut shifted = point.to_vec();
    let mut acc = 0.0;
    let mut binom = 1.0f64;
    for j in 0..=k {
        shifted[i] = point[i] + (f64::from(k) / 2.0 - f64::from(j)) * h;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binom * central_stencil(f, &rest, &shifted, h);
        binom = binom * f64::from(k - j) / f64::from(j + 1);
    }
    acc / h.powi(k as i32)
}

/// Univariate real function with known derivatives, `f^{(k)}(x)`.
pub type DerivativeFn = Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>;
pub type BlackBoxFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum OracleKind {
    /// Exact polynomial; derivatives are symbolic.
    Polynomial(SparsePoly),
    /// `Σ_i f(x_i)` for a polynomial `f`; exact.
    TracePoly(UniPoly),
    /// `Σ_i f(x_i)` for a smooth `f` given with its derivatives; `f64` only.
    TraceFn(DerivativeFn),
    /// Opaque symmetric function; derivatives by finite differences.
    BlackBox(BlackBoxFn, FiniteDifference),
}

impl fmt::Debug for OracleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleKind::Polynomial(p) => write!(f, "Polynomial({} terms)", p.len()),
            OracleKind::TracePoly(p) => write!(f, "TracePoly({:?})", p.coeffs()),
            OracleKind::TraceFn(_) => write!(f, "TraceFn"),
            OracleKind::BlackBox(_, fd) => write!(f, "BlackBox({fd:?})"),
        }
    }
}

/// A symmetric function of `arity` variables. Derivative polynomials are
/// memoized behind a lock, so one oracle may serve concurrent callers.
#[derive(Clone, Debug)]
pub struct FunctionOracle {
    arity: usize,
    kind: OracleKind,
    derivatives: Arc<RwLock<HashMap<Vec<u32>, Arc<SparsePoly>>>>,
}

impl FunctionOracle {
    pub fn polynomial(p: SparsePoly) -> Self {
        Self::new(p.nvars(), OracleKind::Polynomial(p))
    }

    pub fn trace_poly(arity: usize, f: UniPoly) -> Self {
        Self::new(arity, OracleKind::TracePoly(f))
    }

    pub fn trace_fn(arity: usize, f: DerivativeFn) -> Self {
        Self::new(arity, OracleKind::TraceFn(f))
    }

    pub fn black_box(arity: usize, f: BlackBoxFn, fd: FiniteDifference) -> Self {
        Self::new(arity, OracleKind::BlackBox(f, fd))
    }

    fn new(arity: usize, kind: OracleKind) -> Self {
        Self { arity, kind, derivatives: Arc::default() }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn kind(&self) -> &OracleKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            OracleKind::Polynomial(_) => "polynomial",
            OracleKind::TracePoly(_) => "trace",
            OracleKind::TraceFn(_) => "trace-fn",
            OracleKind::BlackBox(..) => "black-box",
        }
    }

    /// Whether every partial is computed without approximation.
    pub fn is_exact(&self) -> bool {
        matches!(self.kind, OracleKind::Polynomial(_) | OracleKind::TracePoly(_))
    }

    pub fn as_polynomial(&self) -> Option<&SparsePoly> {
        match &self.kind {
            OracleKind::Polynomial(p) => Some(p),
            _ => None,
        }
    }

    /// The polynomial this oracle equals, when it has one.
    pub fn to_polynomial(&self) -> Option<SparsePoly> {
        match &self.kind {
            OracleKind::Polynomial(p) => Some(p.clone()),
            OracleKind::TracePoly(f) => {
                let n = self.arity;
                let mut out = SparsePoly::zero(n);
                for i in 0..n {
                    let xi = SparsePoly::var(n, i).ok()?;
                    let mut power = SparsePoly::one(n);
                    for c in f.coeffs() {
                        out = &out + &power.scale(c);
                        power = &power * &xi;
                    }
                }
                Some(out)
            }
            _ => None,
        }
    }

    fn check_point<S>(&self, orders: &[u32], point: &[S]) -> Result<()> {
        if point.len() != self.arity || orders.len() != self.arity {
            return Err(Error::NvarsMismatch { left: self.arity, right: point.len().max(orders.len()) });
        }
        Ok(())
    }

    fn derivative_poly(&self, p: &SparsePoly, orders: &[u32]) -> Result<Arc<SparsePoly>> {
        if let Some(d) = self.derivatives.read().expect("oracle lock").get(orders) {
            return Ok(d.clone());
        }
        let d = Arc::new(p.derivative(orders)?);
        self.derivatives.write().expect("oracle lock").insert(orders.to_vec(), d.clone());
        Ok(d)
    }

    /// `∏_i ∂_i^{orders[i]} φ` at `point`.
    pub fn partial<S: Scalar>(&self, orders: &[u32], point: &[S]) -> Result<S> {
        self.check_point(orders, point)?;
        match &self.kind {
            OracleKind::Polynomial(p) => Ok(evaluate_poly(&*self.derivative_poly(p, orders)?, point)),
            OracleKind::TracePoly(f) => {
                let active: Vec<usize> = (0..orders.len()).filter(|&i| orders[i] > 0).collect();
                match active.as_slice() {
                    [] => Ok(point.iter().fold(S::zero(), |acc, x| acc + evaluate_uni(f, 0, x))),
                    [i] => Ok(evaluate_uni(f, orders[*i] as usize, &point[*i])),
                    _ => Ok(S::zero()),
                }
            }
            OracleKind::TraceFn(f) => {
                if S::is_exact() {
                    return Err(Error::Oracle("exact values of a floating-point trace function".into()));
                }
                let active: Vec<usize> = (0..orders.len()).filter(|&i| orders[i] > 0).collect();
                let v = match active.as_slice() {
                    [] => point.iter().map(|x| f(0, x.to_f64())).sum(),
                    [i] => f(orders[*i] as usize, point[*i].to_f64()),
                    _ => 0.0,
                };
                from_float::<S>(v)
            }
            OracleKind::BlackBox(f, fd) => {
                if S::is_exact() {
                    return Err(Error::Oracle("exact values of a black-box function".into()));
                }
                let x: Vec<f64> = point.iter().map(Scalar::to_f64).collect();
                let v = fd.partial(f.as_ref(), orders, &x);
                from_float::<S>(v)
            }
        }
    }

    pub fn value<S: Scalar>(&self, point: &[S]) -> Result<S> {
        self.partial(&vec![0; self.arity], point)
    }

    /// `φ` as a plain `f64` closure, for finite-difference cross-checks.
    pub fn as_f64_fn(&self) -> impl Fn(&[f64]) -> f64 + '_ {
        move |x: &[f64]| self.value::<f64>(x).unwrap_or(f64::NAN)
    }
}

fn from_float<S: Scalar>(v: f64) -> Result<S> {
    S::from_f64(v).ok_or_else(|| Error::Oracle(format!("non-finite value {v}")))
}

/// Evaluates a polynomial in any scalar field.
pub fn evaluate_poly<S: Scalar>(p: &SparsePoly, point: &[S]) -> S {
    p.terms().fold(S::zero(), |acc, (m, c)| {
        let term = m
            .exponents()
            .iter()
            .zip(point)
            .filter(|(e, _)| **e > 0)
            .fold(S::from_rational(c), |t, (&e, x)| t * x.powu(usize::from(e)));
        acc + term
    })
}

/// `f^{(k)}(x)` for a polynomial `f`, by Horner on the differentiated
/// coefficients.
fn evaluate_uni<S: Scalar>(f: &UniPoly, k: usize, x: &S) -> S {
    let mut acc = S::zero();
    for (n, c) in f.coeffs().iter().enumerate().skip(k).rev() {
        let falling: BigInt = ((n - k + 1)..=n).map(BigInt::from).product();
        acc = acc * x.clone() + S::from_rational(&(c * BigRational::from_integer(falling)));
    }
    acc
}

/// `f^{(k)}` as a polynomial.
pub fn uni_derivative(f: &UniPoly, k: usize) -> UniPoly {
    let coeffs = f
        .coeffs()
        .iter()
        .enumerate()
        .skip(k)
        .map(|(n, c)| c * BigRational::from_integer(((n - k + 1)..=n).map(BigInt::from).product()))
        .collect();
    UniPoly::new(coeffs)
}

/// `f(x) = x^k`.
pub fn monomial_uni(k: usize) -> UniPoly {
    let mut c = vec![BigRational::zero(); k + 1];
    c[k] = BigRational::one();
    UniPoly::new(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_algebra::{integer, poly};

    #[test]
    fn polynomial_partials() {
        let e2 = poly(3, &[(1, &[1, 1, 0]), (1, &[1, 0, 1]), (1, &[0, 1, 1])]);
        let phi = FunctionOracle::polynomial(e2);
        let pt = [integer(1), integer(2), integer(3)];
        assert_eq!(phi.partial(&[1, 1, 0], &pt).unwrap(), integer(1));
        assert_eq!(phi.value(&pt).unwrap(), integer(11));
        let ptf = [1.0, 2.0, 3.0];
        assert_eq!(phi.partial::<f64>(&[1, 0, 0], &ptf).unwrap(), 5.0);
    }

    #[test]
    fn trace_partials() {
        let phi = FunctionOracle::trace_poly(3, monomial_uni(3));
        let pt = [integer(1), integer(2), integer(3)];
        assert_eq!(phi.value(&pt).unwrap(), integer(36));
        assert_eq!(phi.partial(&[0, 2, 0], &pt).unwrap(), integer(12));
        assert_eq!(phi.partial(&[1, 1, 0], &pt).unwrap(), integer(0));
        assert_eq!(phi.partial(&[0, 0, 3], &pt).unwrap(), integer(6));
        assert_eq!(phi.partial(&[0, 0, 4], &pt).unwrap(), integer(0));
        assert_eq!(phi.to_polynomial().unwrap(), poly(3, &[(1, &[3, 0, 0]), (1, &[0, 3, 0]), (1, &[0, 0, 3])]));
        assert_eq!(uni_derivative(&monomial_uni(3), 2), UniPoly::new(vec![integer(0), integer(6)]));
    }

    #[test]
    fn finite_differences() {
        let fd = FiniteDifference::default();
        let sq = |x: &[f64]| x[0] * x[0];
        assert!((fd.partial(&sq, &[1], &[3.0]) - 6.0).abs() < 1e-9);
        let x2y = |x: &[f64]| x[0] * x[0] * x[1];
        let v = fd.partial(&x2y, &[2, 1], &[1.3, -0.7]);
        assert!((v - 2.0).abs() < 1e-5, "{v}");
    }

    #[test]
    fn inexact_kinds_refuse_exact_scalars() {
        let phi = FunctionOracle::trace_fn(2, Arc::new(|_, x: f64| x.exp()));
        assert!(phi.value(&[integer(1), integer(2)]).is_err());
        let v: f64 = phi.partial(&[0, 2], &[0.0, 1.0]).unwrap();
        assert!((v - 1f64.exp()).abs() < 1e-12);
        let bb = FunctionOracle::black_box(2, Arc::new(|x: &[f64]| x[0] * x[1]), FiniteDifference::default());
        let v: f64 = bb.partial(&[1, 1], &[0.5, 2.0]).unwrap();
        assert!((v - 1.0).abs() < 1e-6);
    }
}
