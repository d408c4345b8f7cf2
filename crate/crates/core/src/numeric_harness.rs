//! Floating-point checks of the exact machinery: the chain rule through the
//! `u` coordinates, limits of generic formulas onto coincidence patterns,
//! and finite-difference partials.
//!
//! Wherever the oracle is exact, the reference side is computed in exact
//! arithmetic first and only then converted to `f64`.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::diagonal_calculus::{apply_di_at, eval_dd, generic_dd, generic_di, CoincidencePattern};
use crate::error::{Error, Result};
use crate::oracle::{evaluate_poly, FiniteDifference, FunctionOracle, Scalar};
use crate::symmetric_basis::build_u;

/// Environment variable consulted when no explicit seed is given.
pub const SEED_ENV: &str = "SYMCOORD_SEED";
pub const DEFAULT_SEED: u64 = 0x5eed_2024;

/// The explicit seed, else `SYMCOORD_SEED`, else [`DEFAULT_SEED`].
pub fn resolve_seed(explicit: Option<u64>) -> u64 {
    explicit
        .or_else(|| std::env::var(SEED_ENV).ok()?.parse().ok())
        .unwrap_or(DEFAULT_SEED)
}

/// Step sizes, limit schedule and acceptance tolerances.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NumericPolicy {
    /// Relative finite-difference step.
    pub fd_step: f64,
    /// `ε_k = eps0 · ratio^k` for `k = 0..steps`.
    pub eps0: f64,
    pub eps_ratio: f64,
    pub eps_steps: usize,
    /// Number of Richardson elimination passes over the schedule.
    pub richardson_order: usize,
    /// Relative tolerance for checks of derivative order ≤ 2.
    pub tol_rel_low: f64,
    /// Relative tolerance for derivative order ≥ 3.
    pub tol_rel_high: f64,
}

impl Default for NumericPolicy {
    fn default() -> Self {
        Self {
            fd_step: 1e-6,
            eps0: 0.1,
            eps_ratio: 0.5,
            eps_steps: 21,
            richardson_order: 2,
            tol_rel_low: 1e-7,
            tol_rel_high: 1e-5,
        }
    }
}

impl NumericPolicy {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.fd_step, self.eps0, self.eps_ratio, self.tol_rel_low, self.tol_rel_high];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Invalid("numeric policy entries must be positive".into()));
        }
        if self.eps_ratio >= 1.0 {
            return Err(Error::Invalid("limit schedule must be strictly decreasing".into()));
        }
        if self.eps_steps < self.richardson_order + 2 {
            return Err(Error::Invalid("limit schedule too short for the extrapolation order".into()));
        }
        Ok(())
    }

    pub fn tolerance(&self, derivative_order: usize) -> f64 {
        if derivative_order >= 3 {
            self.tol_rel_high
        } else {
            self.tol_rel_low
        }
    }

    /// The schedule as exact rationals, so exact oracles see no rounding.
    pub fn schedule(&self) -> Vec<BigRational> {
        let eps0 = BigRational::from_float(self.eps0).expect("finite");
        let ratio = BigRational::from_float(self.eps_ratio).expect("finite");
        (0..self.eps_steps as i32).map(|k| &eps0 * num_traits::pow(ratio.clone(), k as usize)).collect()
    }

    fn finite_difference(&self) -> FiniteDifference {
        FiniteDifference { step: self.fd_step, richardson: true }
    }
}

/// One compared quantity.
#[derive(Clone, Debug, Serialize)]
pub struct NumericReport {
    pub case: String,
    /// The reference side was computed in exact arithmetic.
    pub exact: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pattern: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branch: Option<String>,
    pub value_formula: f64,
    pub value_reference: f64,
    pub abs_err: f64,
    pub rel_err: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observed_order: Option<f64>,
    pub pass: bool,
}

impl NumericReport {
    fn compare(case: String, exact: bool, formula: f64, reference: f64, scale: f64, tol: f64) -> Self {
        let abs_err = (formula - reference).abs();
        let rel_err = if scale > 0.0 { abs_err / scale } else { abs_err };
        Self {
            case,
            exact,
            pattern: None,
            branch: None,
            value_formula: formula,
            value_reference: reference,
            abs_err,
            rel_err,
            observed_order: None,
            pass: rel_err.is_finite() && rel_err <= tol,
        }
    }
}

/// Distinct integer coordinates from `1..=97`, as a reproducible draw.
pub fn random_distinct_point(nvars: usize, rng: &mut ChaCha8Rng) -> Vec<i64> {
    sample(rng, 97, nvars).into_iter().map(|i| i as i64 + 1).collect()
}

/// Solves `a v = b` exactly by Gaussian elimination.
fn solve_exact(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Result<Vec<BigRational>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero()).ok_or(Error::SingularJacobian)?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = a[col][col].recip();
        for r in (col + 1)..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] * &inv;
            for c in col..n {
                let delta = &f * &a[col][c];
                a[r][c] -= delta;
            }
            let delta = &f * &b[col];
            b[r] -= delta;
        }
    }
    let mut v = vec![BigRational::zero(); n];
    for r in (0..n).rev() {
        let tail: BigRational = ((r + 1)..n).map(|c| &a[r][c] * &v[c]).sum();
        v[r] = (&b[r] - tail) / &a[r][r];
    }
    Ok(v)
}

/// Result of [`jacobian_check`]: the `u`-gradient of `φ` solved from its
/// `x`-gradient, entry `d` against `D_d φ`.
#[derive(Clone, Debug, Serialize)]
pub struct JacobianReport {
    pub nvars: usize,
    pub point: Vec<f64>,
    pub u_gradient: Vec<f64>,
    /// The exactly solved gradient equals the exact `D_d φ` entry by entry;
    /// `None` for inexact oracles or non-rational points.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_agree: Option<bool>,
    pub entries: Vec<NumericReport>,
    pub max_rel_err: f64,
    pub pass: bool,
}

/// Chain-rule check `∂φ/∂u_d = D_d φ` at a point with distinct coordinates.
pub fn jacobian_check(phi: &FunctionOracle, point: &[f64], policy: &NumericPolicy) -> Result<JacobianReport> {
    let n = phi.arity();
    if point.len() != n {
        return Err(Error::NvarsMismatch { left: n, right: point.len() });
    }
    let (pattern, _) = CoincidencePattern::detect(point, 0.0);
    if !pattern.is_generic() {
        return Err(Error::SingularJacobian);
    }

    // jac[i][r] = ∂u_{r+1}/∂x_i
    let coords = (1..=n).map(|r| build_u(r, n)).collect::<Result<Vec<_>>>()?;
    let partials: Vec<Vec<crate::exact_algebra::SparsePoly>> = (0..n)
        .map(|i| coords.iter().map(|u| u.poly().partial_derivative(i)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let jac = DMatrix::from_fn(n, n, |i, r| evaluate_poly(&partials[i][r], point));
    let grad = DVector::from_fn(n, |i, _| {
        let mut orders = vec![0u32; n];
        orders[i] = 1;
        phi.partial::<f64>(&orders, point).unwrap_or(f64::NAN)
    });
    // column equilibration: the u_r have wildly different magnitudes
    let col_scale: Vec<f64> = (0..n).map(|r| jac.column(r).amax().max(f64::MIN_POSITIVE)).collect();
    let scaled = DMatrix::from_fn(n, n, |i, r| jac[(i, r)] / col_scale[r]);
    let lu = scaled.lu();
    if !lu.is_invertible() {
        return Err(Error::SingularJacobian);
    }
    let solved = lu.solve(&grad).ok_or(Error::SingularJacobian)?;
    let u_gradient: Vec<f64> = (0..n).map(|r| solved[r] / col_scale[r]).collect();

    let exact_point: Option<Vec<BigRational>> =
        if phi.is_exact() { point.iter().map(|&x| BigRational::from_float(x)).collect() } else { None };
    let (reference, exact_agree): (Vec<f64>, Option<bool>) = match &exact_point {
        Some(xp) => {
            let dd = (1..=n).map(|d| generic_dd(d, phi, xp)).collect::<Result<Vec<BigRational>>>()?;
            let jac_q: Vec<Vec<BigRational>> =
                (0..n).map(|i| (0..n).map(|r| evaluate_poly(&partials[i][r], xp)).collect()).collect();
            let grad_q = (0..n)
                .map(|i| {
                    let mut orders = vec![0u32; n];
                    orders[i] = 1;
                    phi.partial::<BigRational>(&orders, xp)
                })
                .collect::<Result<Vec<_>>>()?;
            let v = solve_exact(jac_q, grad_q)?;
            (dd.iter().map(Scalar::to_f64).collect(), Some(v == dd))
        }
        None => ((1..=n).map(|d| generic_dd(d, phi, point)).collect::<Result<Vec<f64>>>()?, None),
    };

    let scale = reference.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = policy.tolerance(1);
    let entries: Vec<NumericReport> = (0..n)
        .map(|d| {
            NumericReport::compare(
                format!("d={}", d + 1),
                exact_point.is_some(),
                u_gradient[d],
                reference[d],
                scale,
                tol,
            )
        })
        .collect();
    let max_rel_err = entries.iter().fold(0.0f64, |m, e| m.max(e.rel_err));
    let pass = entries.iter().all(|e| e.pass) && exact_agree != Some(false);
    Ok(JacobianReport { nvars: n, point: point.to_vec(), u_gradient, exact_agree, entries, max_rel_err, pass })
}

/// [`jacobian_check`] at `count` reproducible random points, in parallel.
pub fn jacobian_batch(
    phi: &FunctionOracle,
    count: usize,
    seed: u64,
    policy: &NumericPolicy,
) -> Result<Vec<JacobianReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<f64>> = (0..count)
        .map(|_| random_distinct_point(phi.arity(), &mut rng).into_iter().map(|x| x as f64).collect())
        .collect();
    points.par_iter().map(|p| jacobian_check(phi, p, policy)).collect()
}

/// Operator whose coincident-point formula is checked as a limit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LimitOperator {
    /// `D_I` for the given 0-based index set.
    Subset(Vec<usize>),
    /// `D_d`.
    Order(usize),
}

impl LimitOperator {
    fn derivative_order(&self, pattern: &CoincidencePattern) -> usize {
        match self {
            LimitOperator::Subset(set) => pattern
                .blocks()
                .iter()
                .map(|b| b.iter().filter(|i| set.contains(i)).count())
                .max()
                .unwrap_or(1),
            LimitOperator::Order(d) => *d,
        }
    }

    fn generic<S: Scalar>(&self, phi: &FunctionOracle, point: &[S]) -> Result<S> {
        match self {
            LimitOperator::Subset(set) => generic_di(set, phi, point),
            LimitOperator::Order(d) => generic_dd(*d, phi, point),
        }
    }

    fn formula<S: Scalar>(&self, phi: &FunctionOracle, point: &[S]) -> Result<(String, S)> {
        match self {
            LimitOperator::Subset(set) => {
                let (branch, v) = apply_di_at(set, phi, point)?;
                Ok((branch.to_string(), v))
            }
            LimitOperator::Order(d) => {
                let ev = eval_dd(*d, phi, point, 0.0)?;
                Ok((ev.branch.to_string(), ev.value))
            }
        }
    }

    fn label(&self) -> String {
        match self {
            LimitOperator::Subset(set) => format!("D_{{{}}}", set.iter().map(|i| i + 1).join(",")),
            LimitOperator::Order(d) => format!("D_{d}"),
        }
    }
}

/// Moves the `q`-th member of every block off its value by `q·ε`.
fn spread<S: Scalar>(pattern: &CoincidencePattern, target: &[S], eps: &S) -> Vec<S> {
    let mut out = target.to_vec();
    for b in pattern.blocks() {
        for (q, &i) in b.iter().enumerate().skip(1) {
            out[i] = target[i].clone() + S::from_int(q as i64) * eps.clone();
        }
    }
    out
}

/// Repeated Richardson elimination for a geometric schedule with ratio `r`:
/// pass `j` removes the `ε^j` error term.
fn richardson<S: Scalar>(values: &[S], ratio: &S, passes: usize) -> Vec<S> {
    let mut row = values.to_vec();
    let mut rj = S::one();
    for _ in 0..passes {
        rj = rj * ratio.clone();
        let denom = S::one() - rj.clone();
        row = row.windows(2).map(|w| (w[1].clone() - rj.clone() * w[0].clone()) / denom.clone()).collect();
    }
    row
}

/// Evaluates the generic formula along the schedule collapsing onto the
/// coincident `target`, extrapolates, and compares with the closed form at
/// `target`. Exact oracles are evaluated in rationals throughout.
pub fn limit_check(
    op: &LimitOperator,
    phi: &FunctionOracle,
    target: &[BigRational],
    policy: &NumericPolicy,
) -> Result<NumericReport> {
    policy.validate()?;
    let (pattern, _) = CoincidencePattern::detect(target, 0.0);
    let order = op.derivative_order(&pattern);
    let schedule = policy.schedule();
    let ratio = BigRational::from_float(policy.eps_ratio).expect("finite");

    let (branch, formula, sequence, extrapolated, exact) = if phi.is_exact() {
        let (branch, formula) = op.formula(phi, target)?;
        let seq = schedule
            .iter()
            .map(|eps| op.generic(phi, &spread(&pattern, target, eps)))
            .collect::<Result<Vec<BigRational>>>()?;
        let extra = richardson(&seq, &ratio, policy.richardson_order);
        let errs: Vec<f64> = seq.iter().map(|v| (v - &formula).abs().to_f64()).collect();
        (branch, formula.to_f64(), errs, extra.last().expect("schedule long enough").to_f64(), true)
    } else {
        let target_f: Vec<f64> = target.iter().map(Scalar::to_f64).collect();
        let (branch, formula) = op.formula(phi, &target_f)?;
        let seq = schedule
            .iter()
            .map(|eps| op.generic(phi, &spread(&pattern, &target_f, &eps.to_f64())))
            .collect::<Result<Vec<f64>>>()?;
        let extra = richardson(&seq, &policy.eps_ratio, policy.richardson_order);
        let errs: Vec<f64> = seq.iter().map(|v| (v - formula).abs()).collect();
        (branch, formula, errs, *extra.last().expect("schedule long enough"), false)
    };

    let scale = formula.abs().max(1.0);
    let mut report = NumericReport::compare(
        format!("{} of {} at {}", op.label(), phi.kind_name(), pattern),
        exact,
        formula,
        extrapolated,
        scale,
        policy.tolerance(order),
    );
    report.pattern = Some(pattern.to_string());
    report.branch = Some(branch);
    report.observed_order = observed_order(&sequence, policy.eps_ratio);
    if let Some(p) = report.observed_order {
        report.pass &= p >= 1.0 - 1e-3;
    }
    Ok(report)
}

/// `log(e_k / e_{k+1}) / log(1/ratio)` at the finest pair with both errors
/// nonzero; `None` when the generic formula is already exact along the
/// schedule.
fn observed_order(errors: &[f64], ratio: f64) -> Option<f64> {
    errors
        .windows(2)
        .rev()
        .find(|w| w[0] > 0.0 && w[1] > 0.0)
        .map(|w| (w[0] / w[1]).ln() / (1.0 / ratio).ln())
}

/// One entry of a finite-difference derivative tensor.
#[derive(Clone, Debug, Serialize)]
pub struct FdEntry {
    /// 1-based variable indices, with repetition.
    pub indices: Vec<usize>,
    pub finite_difference: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_err: Option<f64>,
}

/// All partials of total order `order ≤ 4` by central differences, paired
/// with the exact partial for exact oracles.
pub fn fd_gradient(phi: &FunctionOracle, point: &[f64], order: usize, policy: &NumericPolicy) -> Result<Vec<FdEntry>> {
    if order == 0 || order > 4 {
        return Err(Error::Invalid(format!("finite-difference order {order} outside 1..=4")));
    }
    let n = phi.arity();
    if point.len() != n {
        return Err(Error::NvarsMismatch { left: n, right: point.len() });
    }
    let f = phi.as_f64_fn();
    let fd = policy.finite_difference();
    let exact_point: Option<Vec<BigRational>> =
        if phi.is_exact() { point.iter().map(|&x| BigRational::from_float(x)).collect() } else { None };
    (0..n)
        .combinations_with_replacement(order)
        .map(|idx| {
            let mut orders = vec![0u32; n];
            for &i in &idx {
                orders[i] += 1;
            }
            let approx = fd.partial(&f, &orders, point);
            let exact = match &exact_point {
                Some(xp) => Some(phi.partial::<BigRational>(&orders, xp)?.to_f64()),
                None => None,
            };
            Ok(FdEntry {
                indices: idx.iter().map(|i| i + 1).collect(),
                finite_difference: approx,
                exact,
                abs_err: exact.map(|e| (e - approx).abs()),
            })
        })
        .collect()
}

/// Largest `|exact − fd| / max(1, |exact|)` over a tensor.
pub fn fd_max_rel_err(entries: &[FdEntry]) -> Option<f64> {
    entries
        .iter()
        .map(|e| Some(e.abs_err? / e.exact?.abs().max(1.0)))
        .try_fold(0.0f64, |m, v| Some(m.max(v?)))
}

/// `1 / 10`, `7 / 3`, ... as exact rationals, for building targets.
pub fn rationals(values: &[(i64, i64)]) -> Vec<BigRational> {
    values.iter().map(|&(n, d)| BigRational::new(BigInt::from(n), BigInt::from(d))).collect()
}

/// Integer coordinates as exact rationals.
pub fn integer_point(values: &[i64]) -> Vec<BigRational> {
    values.iter().map(|&v| BigRational::from_integer(BigInt::from(v))).collect()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::combinatorics::enumerate_partitions;
    use crate::diagonal_calculus::trace_diagonal_value_exact;
    use crate::exact_algebra::poly;
    use crate::oracle::monomial_uni;
    use crate::symmetric_basis::{elementary_all, power_sum};
    use crate::combinatorics::{binomial, factorial};

    fn e_lambda(parts: &[usize], n: usize) -> crate::exact_algebra::SparsePoly {
        parts.iter().fold(crate::exact_algebra::SparsePoly::one(n), |acc, &h| &acc * &elementary_all(h, n))
    }

    #[test]
    fn policy_defaults_are_valid() {
        let p = NumericPolicy::default();
        p.validate().unwrap();
        let s = p.schedule();
        assert_eq!(s.len(), 21);
        assert!(s.windows(2).all(|w| w[1] < w[0]));
        assert!(NumericPolicy { eps_ratio: 1.5, ..p.clone() }.validate().is_err());
        assert!(NumericPolicy { fd_step: 0.0, ..p }.validate().is_err());
    }

    #[test]
    fn seed_resolution_prefers_explicit() {
        assert_eq!(resolve_seed(Some(7)), 7);
    }

    #[test]
    fn jacobian_sum_of_squares() {
        let phi = FunctionOracle::polynomial(power_sum(2, 2));
        let report = jacobian_check(&phi, &[3.0, 8.0], &NumericPolicy::default()).unwrap();
        assert!(report.pass);
        assert_eq!(report.exact_agree, Some(true));
        assert!((report.u_gradient[0] - 22.0).abs() < 1e-9);
        assert!((report.u_gradient[1] + 4.0).abs() < 1e-9);
    }

    #[test]
    fn jacobian_of_e1_e2() {
        let phi = FunctionOracle::polynomial(e_lambda(&[2, 1], 3));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pt: Vec<f64> = random_distinct_point(3, &mut rng).into_iter().map(|x| x as f64).collect();
        let report = jacobian_check(&phi, &pt, &NumericPolicy::default()).unwrap();
        assert!(report.max_rel_err < 1e-9, "{report:?}");
    }

    #[test]
    fn jacobian_of_coordinate_is_unit_vector() {
        for n in 2..=4 {
            for r in 1..=n {
                let phi = FunctionOracle::polynomial(build_u(r, n).unwrap().poly().clone());
                let pt: Vec<f64> = (1..=n).map(|i| (i * i + 1) as f64).collect();
                let report = jacobian_check(&phi, &pt, &NumericPolicy::default()).unwrap();
                assert!(report.pass);
                for (d, g) in report.u_gradient.iter().enumerate() {
                    let expected = if d + 1 == r { 1.0 } else { 0.0 };
                    assert!((g - expected).abs() < 1e-7, "N={n} r={r} d={d}: {g}");
                }
            }
        }
    }

    #[test]
    fn jacobian_rejects_coincidence() {
        let phi = FunctionOracle::polynomial(power_sum(2, 3));
        assert!(matches!(jacobian_check(&phi, &[1.0, 2.0, 1.0], &NumericPolicy::default()), Err(Error::SingularJacobian)));
    }

    #[test]
    fn jacobian_random_batch() {
        let policy = NumericPolicy::default();
        for n in 2..=5 {
            for r in 1..=4 {
                for lambda in enumerate_partitions(r).into_iter().filter(|l| l.max_part() <= n) {
                    let phi = FunctionOracle::polynomial(e_lambda(lambda.parts(), n));
                    for report in jacobian_batch(&phi, 20, 1 + n as u64, &policy).unwrap() {
                        assert!(report.pass, "N={n} λ={lambda}: {:?}", report.max_rel_err);
                    }
                }
            }
        }
    }

    #[test]
    fn limit_of_two_squares() {
        let phi = FunctionOracle::polynomial(poly(2, &[(1, &[2, 0]), (1, &[0, 2])]));
        let report =
            limit_check(&LimitOperator::Subset(vec![0, 1]), &phi, &integer_point(&[3, 3]), &NumericPolicy::default())
                .unwrap();
        assert!(report.pass);
        assert_eq!(report.value_formula, -2.0);
        // the generic value is −2 everywhere, so there is nothing to converge
        assert_eq!(report.observed_order, None);
    }

    #[test]
    fn limit_of_e3_on_a_pair() {
        let phi = FunctionOracle::polynomial(elementary_all(3, 3));
        let report = limit_check(
            &LimitOperator::Subset(vec![0, 1, 2]),
            &phi,
            &integer_point(&[2, 2, 5]),
            &NumericPolicy::default(),
        )
        .unwrap();
        assert!(report.pass && report.abs_err < 1e-8, "{report:?}");
        assert_eq!(report.branch.as_deref(), Some("one-block"));
    }

    #[test]
    fn limit_orders_are_at_least_one() {
        let phi = FunctionOracle::polynomial(&power_sum(5, 4) + &(&elementary_all(2, 4) * &elementary_all(2, 4)));
        let policy = NumericPolicy::default();
        for (set, target) in [
            (vec![0, 1, 2, 3], [1, 1, 4, 6]),
            (vec![0, 1, 2], [1, 1, 1, 6]),
            (vec![0, 1, 2, 3], [2, 2, 5, 5]),
            (vec![0, 1, 2, 3], [2, 2, 2, 2]),
        ] {
            let report = limit_check(&LimitOperator::Subset(set), &phi, &integer_point(&target), &policy).unwrap();
            assert!(report.pass, "{report:?}");
            assert!(report.observed_order.unwrap() >= 1.0 - 1e-3);
        }
        for d in 1..=4 {
            let report = limit_check(&LimitOperator::Order(d), &phi, &integer_point(&[1, 1, 3, 3]), &policy).unwrap();
            assert!(report.pass, "{report:?}");
        }
    }

    #[test]
    fn limit_of_trace_on_total_diagonal() {
        let f = monomial_uni(4);
        let phi = FunctionOracle::trace_poly(3, f.clone());
        let a = BigRational::from_integer(2.into());
        let report =
            limit_check(&LimitOperator::Order(2), &phi, &[a.clone(), a.clone(), a.clone()], &NumericPolicy::default())
                .unwrap();
        assert!(report.pass, "{report:?}");
        assert_eq!(report.branch.as_deref(), Some("total-diagonal"));
        let scale = BigRational::from_integer(factorial(2) * binomial(3, 2));
        assert_eq!(report.value_formula, (scale * trace_diagonal_value_exact(2, &f, &a)).to_f64());
    }

    #[test]
    fn limit_in_floats_for_smooth_trace() {
        let phi = FunctionOracle::trace_fn(3, Arc::new(|_, x: f64| x.exp()));
        let policy = NumericPolicy { eps_steps: 12, ..NumericPolicy::default() };
        let report = limit_check(&LimitOperator::Subset(vec![0, 1, 2]), &phi, &rationals(&[(1, 2), (1, 2), (3, 1)]), &policy)
            .unwrap();
        assert!(!report.exact);
        assert!(report.rel_err < 1e-5, "{report:?}");
    }

    #[test]
    fn fd_examples() {
        let policy = NumericPolicy::default();
        let sq = FunctionOracle::polynomial(poly(1, &[(1, &[2])]));
        let g = fd_gradient(&sq, &[3.0], 1, &policy).unwrap();
        assert!((g[0].finite_difference - 6.0).abs() < 1e-9);

        let e2 = FunctionOracle::polynomial(elementary_all(2, 3));
        let h = fd_gradient(&e2, &[1.0, 2.0, 3.0], 2, &policy).unwrap();
        let xy = h.iter().find(|e| e.indices == [1, 2]).unwrap();
        assert_eq!(xy.exact, Some(1.0));

        let x2y = FunctionOracle::polynomial(poly(2, &[(1, &[2, 1])]));
        let t = fd_gradient(&x2y, &[1.5, -0.5], 3, &policy).unwrap();
        assert!(fd_max_rel_err(&t).unwrap() < policy.tolerance(3));
        assert!(fd_gradient(&x2y, &[1.0, 1.0], 5, &policy).is_err());
    }
}
