//! The divided-difference operators `D_I`, `D_d`, `D̂_d` and `D_λ` acting on
//! exact polynomials, with the duality and commutator checks.

use std::collections::BTreeMap;

use itertools::Itertools;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::combinatorics::{factorial, falling_factorial, Partition};
use crate::error::{Error, Result};
use crate::exact_algebra::{format_rational, RationalFuncX, SparsePoly};
use crate::symmetric_basis::{build_u, Basis, SymExpr};

/// `D_I φ = Σ_{i∈I} ∂_i φ / ∏_{j∈I, j≠i} (x_j − x_i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    /// `D_I` for a subset of 0-based indices.
    Subset(Vec<usize>),
    /// `D_d = d!·Σ_{|I|=d} D_I`
    Order(usize),
    /// `D̂_d = (N−d)!/N!·D_d`, the average of the `D_I`.
    Averaged(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorSpec {
    kind: OperatorKind,
    nvars: usize,
}

impl OperatorSpec {
    pub fn new(kind: OperatorKind, nvars: usize) -> Result<Self> {
        match &kind {
            OperatorKind::Subset(set) => {
                if set.is_empty() {
                    return Err(Error::Invalid("D_I needs a nonempty index set".into()));
                }
                if let Some(&i) = set.iter().find(|&&i| i >= nvars) {
                    return Err(Error::VariableOutOfRange { index: i, nvars });
                }
                if set.iter().duplicates().next().is_some() {
                    return Err(Error::Invalid(format!("repeated index in {set:?}")));
                }
            }
            OperatorKind::Order(d) | OperatorKind::Averaged(d) => check_order(*d, nvars)?,
        }
        Ok(Self { kind, nvars })
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Applies the operator; the image must be a polynomial.
    pub fn apply(&self, p: &SparsePoly) -> Result<SparsePoly> {
        check_ring(p, self.nvars)?;
        match &self.kind {
            OperatorKind::Subset(set) => apply_di_polynomial(set, p),
            OperatorKind::Order(d) => apply_dd(*d, p),
            OperatorKind::Averaged(d) => apply_dhat(*d, p),
        }
    }
}

fn check_order(d: usize, nvars: usize) -> Result<()> {
    if d == 0 || d > nvars {
        return Err(Error::OperatorOrder { d, nvars });
    }
    Ok(())
}

fn check_ring(p: &SparsePoly, nvars: usize) -> Result<()> {
    if p.nvars() != nvars {
        return Err(Error::NvarsMismatch { left: nvars, right: p.nvars() });
    }
    Ok(())
}

/// Result of `D_I` on an arbitrary polynomial.
#[derive(Clone, Debug)]
pub enum Image {
    Polynomial(SparsePoly),
    Rational(RationalFuncX),
}

impl Image {
    pub fn into_polynomial(self) -> Option<SparsePoly> {
        match self {
            Image::Polynomial(p) => Some(p),
            Image::Rational(f) => f.as_polynomial(),
        }
    }
}

/// Numerator of `D_I p` over `V_I = ∏_{a<b ∈ I} (x_a − x_b)`, and `V_I`.
///
/// `∏_{j≠i}(x_j − x_i) = (−1)^{#{j∈I : j>i}}·∏(factors of V_I containing i)`,
/// so the cofactor of `∂_i p` is `±∏(factors of V_I not containing i)`.
fn di_numerator(set: &[usize], p: &SparsePoly) -> Result<(SparsePoly, SparsePoly)> {
    let n = p.nvars();
    let mut sorted = set.to_vec();
    sorted.sort_unstable();
    let pairs: Vec<(usize, usize)> = sorted.iter().copied().tuple_combinations().collect();
    let factors: Vec<SparsePoly> =
        pairs.iter().map(|&(a, b)| SparsePoly::var_difference(n, a, b)).collect::<Result<_>>()?;
    let vandermonde = factors.iter().fold(SparsePoly::one(n), |acc, f| &acc * f);
    let mut numerator = SparsePoly::zero(n);
    for (pos, &i) in sorted.iter().enumerate() {
        let di = p.partial_derivative(i)?;
        if di.is_zero() {
            continue;
        }
        let cofactor = pairs
            .iter()
            .zip(&factors)
            .filter(|((a, b), _)| *a != i && *b != i)
            .fold(SparsePoly::one(n), |acc, (_, f)| &acc * f);
        let later = sorted.len() - pos - 1;
        let term = &cofactor * &di;
        numerator = if later.is_multiple_of(2) { &numerator + &term } else { &numerator - &term };
    }
    Ok((numerator, vandermonde))
}

/// `D_I p`. With `require_polynomial`, a nonzero remainder is an error;
/// otherwise it yields a reduced rational function.
pub fn apply_di(set: &[usize], p: &SparsePoly, require_polynomial: bool) -> Result<Image> {
    OperatorSpec::new(OperatorKind::Subset(set.to_vec()), p.nvars())?;
    let (numerator, vandermonde) = di_numerator(set, p)?;
    match numerator.exact_divide(&vandermonde) {
        Ok(q) => Ok(Image::Polynomial(q)),
        Err(e) if require_polynomial => Err(e),
        Err(_) => Ok(Image::Rational(RationalFuncX::new(numerator, vandermonde)?)),
    }
}

fn apply_di_polynomial(set: &[usize], p: &SparsePoly) -> Result<SparsePoly> {
    let (numerator, vandermonde) = di_numerator(set, p)?;
    numerator.exact_divide(&vandermonde)
}

/// `Σ_{|I|=d} D_I p`, summed in parallel; exact addition makes the result
/// independent of the summation order.
fn subset_sum(d: usize, p: &SparsePoly) -> Result<SparsePoly> {
    let n = p.nvars();
    check_order(d, n)?;
    let subsets: Vec<Vec<usize>> = (0..n).combinations(d).collect();
    subsets
        .par_iter()
        .map(|set| apply_di_polynomial(set, p))
        .try_reduce(|| SparsePoly::zero(n), |a, b| Ok(&a + &b))
}

/// `D_d p = d!·Σ_{|I|=d} D_I p`. Fails with the division remainder when `p`
/// is not symmetric enough for the image to be a polynomial.
pub fn apply_dd(d: usize, p: &SparsePoly) -> Result<SparsePoly> {
    Ok(subset_sum(d, p)?.scale(&BigRational::from_integer(factorial(d))))
}

/// `D̂_d p = (N−d)!/N!·D_d p`.
pub fn apply_dhat(d: usize, p: &SparsePoly) -> Result<SparsePoly> {
    let n = p.nvars();
    check_order(d, n)?;
    let scale = BigRational::new(factorial(d), falling_factorial(n, d));
    Ok(subset_sum(d, p)?.scale(&scale))
}

/// `D_λ p = ∏_h D_h^{m_h} p`, applying the parts of `λ` in order.
pub fn apply_dlambda(lambda: &Partition, p: &SparsePoly) -> Result<SparsePoly> {
    lambda.parts().iter().try_fold(p.clone(), |acc, &d| apply_dd(d, &acc))
}

/// `D_d` on an `ẽ`-basis expression through `D_d ẽ_λ = Σ_h m_h ẽ_{λ−dε_h}`,
/// an evaluation path independent of the subset sum.
pub fn apply_dd_etilde(d: usize, expr: &SymExpr) -> Result<SymExpr> {
    if expr.basis() != Basis::ETilde {
        return Err(Error::Conversion(format!("expected an et expression, got {}", expr.basis())));
    }
    check_order(d, expr.nvars())?;
    let mut out: BTreeMap<Partition, BigRational> = BTreeMap::new();
    for (lambda, c) in expr.coeffs() {
        for (h, m) in lambda.multiplicities() {
            if let Some(lowered) = lambda.lower_part(h, d) {
                let v = out.entry(lowered).or_insert_with(BigRational::zero);
                *v += c * BigRational::from_integer(BigInt::from(m));
            }
        }
    }
    SymExpr::new(expr.nvars(), Basis::ETilde, out)
}

/// One entry of the duality matrix that is not the expected constant.
#[derive(Clone, Debug, Serialize)]
pub struct DualityFailure {
    pub d: usize,
    pub r: usize,
    pub residual: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct DualityReport {
    pub nvars: usize,
    /// `matrix[d−1][r−1]` is the constant term of `D_d u_r`.
    pub matrix: Vec<Vec<String>>,
    pub failures: Vec<DualityFailure>,
    pub passed: bool,
}

/// Checks `D_d u_r = δ_{d,r}` for all `1 ≤ d, r ≤ N`.
pub fn check_duality(nvars: usize) -> Result<DualityReport> {
    let pairs: Vec<(usize, usize)> = (1..=nvars).cartesian_product(1..=nvars).collect();
    let images: Vec<SparsePoly> = pairs
        .par_iter()
        .map(|&(d, r)| apply_dd(d, build_u(r, nvars)?.poly()))
        .collect::<Result<_>>()?;
    let mut matrix = vec![vec![String::new(); nvars]; nvars];
    let mut failures = Vec::new();
    for (&(d, r), image) in pairs.iter().zip(&images) {
        let expected = if d == r { SparsePoly::one(nvars) } else { SparsePoly::zero(nvars) };
        let c = image.constant_term();
        matrix[d - 1][r - 1] = format_rational(&c);
        if *image != expected {
            failures.push(DualityFailure { d, r, residual: (image - &expected).to_text() });
        }
    }
    let passed = failures.is_empty();
    Ok(DualityReport { nvars, matrix, failures, passed })
}

/// `D_d(u_r ψ) − u_r D_d ψ = δ_{d,r} ψ`.
pub fn check_weyl_commutator(d: usize, r: usize, psi: &SparsePoly) -> Result<bool> {
    let n = psi.nvars();
    let u = build_u(r, n)?;
    let lhs = &apply_dd(d, &(u.poly() * psi))? - &(u.poly() * &apply_dd(d, psi)?);
    let rhs = if d == r { psi.clone() } else { SparsePoly::zero(n) };
    Ok(lhs == rhs)
}

/// `D_{d1} D_{d2} ψ = D_{d2} D_{d1} ψ`.
pub fn check_operators_commute(d1: usize, d2: usize, psi: &SparsePoly) -> Result<bool> {
    Ok(apply_dd(d1, &apply_dd(d2, psi)?)? == apply_dd(d2, &apply_dd(d1, psi)?)?)
}

/// `matrix[d−1][r−1] = D_d u_r`; fails if some image is not a constant.
pub fn duality_matrix(nvars: usize) -> Result<Vec<Vec<BigRational>>> {
    let mut out = vec![vec![BigRational::zero(); nvars]; nvars];
    for d in 1..=nvars {
        for r in 1..=nvars {
            let image = apply_dd(d, build_u(r, nvars)?.poly())?;
            if image.degree().unwrap_or(0) > 0 {
                return Err(Error::Invalid(format!("D_{d} u_{r} is not constant")));
            }
            out[d - 1][r - 1] = image.constant_term();
        }
    }
    Ok(out)
}

/// `(N−h+d)!/(N−h)!`, the factor in `D_d e_h = (N−h+d)!/(N−h)!·e_{h−d}`.
pub fn dd_elementary_factor(d: usize, h: usize, nvars: usize) -> BigRational {
    if h < d || h > nvars {
        return BigRational::zero();
    }
    BigRational::from_integer(falling_factorial(nvars - h + d, d))
}

/// Whether `D_d 1 = 0`.
pub fn kills_constants(d: usize, nvars: usize) -> Result<bool> {
    Ok(apply_dd(d, &SparsePoly::one(nvars))?.is_zero())
}
