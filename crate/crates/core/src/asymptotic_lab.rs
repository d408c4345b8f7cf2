//! Exact dependence on `N`: the order-`r` derivative constants of `u_r`,
//! their decay orders, and the convergence of `û_r` to `(−1)^{r−1} p_r / r`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::combinatorics::{count_x, enumerate_partitions, factorial, DerivativePattern, Partition};
use crate::error::{Error, Result};
use crate::exact_algebra::{format_rational, DecayOrder, RationalOfN, UniPoly};
use crate::symmetric_basis::{build_u, build_u_normalized, newton_power_sums, Basis, NormalizationTag};

/// Largest `r` the set-partition counting is meant for.
pub const MAX_R: usize = 8;

/// `∂^σ u_r` as an exact function of `N`; the derivative has total order
/// `r = |σ|`, so it is constant in `x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivativeConstant {
    pub r: usize,
    pub sigma: DerivativePattern,
    pub value: RationalOfN,
}

/// `(−1)^{l−1} (l−1)! / ∏ m_h!`, the coefficient of `ẽ_λ` in `u_r`.
pub fn etilde_coefficient(lambda: &Partition) -> BigRational {
    let l = lambda.len();
    let sign = if l % 2 == 1 { BigInt::one() } else { -BigInt::one() };
    BigRational::new(sign * factorial(l - 1), lambda.multiplicity_factorials())
}

/// `P_λ(N) = ∏_h (N!/(N−h)!)^{m_h}`.
pub fn p_lambda(lambda: &Partition) -> UniPoly {
    lambda.parts().iter().fold(UniPoly::constant(BigRational::one()), |acc, &h| acc.mul(&UniPoly::falling_factorial(h)))
}

fn constant_over(lambda: &Partition, sigma: &DerivativePattern) -> Result<Option<RationalOfN>> {
    let count = count_x(sigma, lambda);
    if count == 0 {
        return Ok(None);
    }
    let c = etilde_coefficient(lambda)
        * BigRational::from_integer(BigInt::from(count) * lambda.multiplicity_factorials());
    Ok(Some(RationalOfN::new(UniPoly::constant(c), p_lambda(lambda))?))
}

fn check_r(r: usize) -> Result<()> {
    if r == 0 || r > MAX_R {
        return Err(Error::Invalid(format!("derivative constants are computed for 1 ≤ r ≤ {MAX_R}, got {r}")));
    }
    Ok(())
}

/// `Σ_{λ ≤ σ^t} c_λ |X^λ| ∏ m_h(λ)! / P_λ(N)`.
pub fn derivative_constant(sigma: &Partition) -> Result<DerivativeConstant> {
    let r = sigma.weight();
    check_r(r)?;
    let pattern = DerivativePattern::new(sigma.clone());
    let dual = sigma.conjugate();
    let mut value = RationalOfN::zero();
    for lambda in enumerate_partitions(r) {
        if !dual.dominates(&lambda)? {
            continue;
        }
        if let Some(term) = constant_over(&lambda, &pattern)? {
            value = value.add(&term);
        }
    }
    Ok(DerivativeConstant { r, sigma: pattern, value })
}

/// The same sum over every `λ ⊢ r`, without the dominance filter.
pub fn derivative_constant_unfiltered(sigma: &Partition) -> Result<RationalOfN> {
    check_r(sigma.weight())?;
    let pattern = DerivativePattern::new(sigma.clone());
    let mut value = RationalOfN::zero();
    for lambda in enumerate_partitions(sigma.weight()) {
        if let Some(term) = constant_over(&lambda, &pattern)? {
            value = value.add(&term);
        }
    }
    Ok(value)
}

/// `∂^σ u_r` in `N` variables by differentiating the built polynomial.
pub fn derivative_constant_symbolic(sigma: &Partition, nvars: usize) -> Result<BigRational> {
    let r = sigma.weight();
    let u = build_u(r, nvars)?;
    let orders = DerivativePattern::new(sigma.clone()).orders(nvars)?;
    Ok(u.poly().derivative(&orders)?.constant_term())
}

/// Where a decay order sits relative to the conjectured `r + l(σ) − 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ConjectureStatus {
    Meets,
    Exceeds,
    Violates,
}

impl fmt::Display for ConjectureStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConjectureStatus::Meets => "meets",
            ConjectureStatus::Exceeds => "exceeds",
            ConjectureStatus::Violates => "VIOLATES",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayRow {
    pub r: usize,
    pub sigma: Partition,
    pub decay_order: DecayOrder,
    pub conjectured_order: i64,
    /// The proven lower bound: exactly `r` for `σ = (r)`, `r + 1` otherwise.
    pub theorem_bound: i64,
    pub status: ConjectureStatus,
    pub theorem_holds: bool,
    pub value: String,
}

impl DecayRow {
    pub fn tsv_header() -> &'static str {
        "r\tsigma\tdecay_order\tconjectured_order\ttheorem_bound\tstatus"
    }

    pub fn to_tsv(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            self.r, self.sigma, self.decay_order, self.conjectured_order, self.theorem_bound, self.status
        )
    }
}

fn decay_row(sigma: Partition) -> Result<DecayRow> {
    let r = sigma.weight();
    let constant = derivative_constant(&sigma)?;
    let decay = constant.value.decay_order();
    let conjectured = (r + sigma.len() - 1) as i64;
    let pure = sigma.len() == 1;
    let theorem_bound = if pure { r as i64 } else { r as i64 + 1 };
    let status = match decay {
        DecayOrder::Finite(k) if k < conjectured => ConjectureStatus::Violates,
        DecayOrder::Finite(k) if k == conjectured => ConjectureStatus::Meets,
        _ => ConjectureStatus::Exceeds,
    };
    let theorem_holds = match decay {
        DecayOrder::Finite(k) if pure => k == theorem_bound,
        DecayOrder::Finite(k) => k >= theorem_bound,
        DecayOrder::Infinite => !pure,
    };
    Ok(DecayRow {
        r,
        sigma,
        decay_order: decay,
        conjectured_order: conjectured,
        theorem_bound,
        status,
        theorem_holds,
        value: constant.value.pretty(),
    })
}

/// One row per `σ ⊢ r`, `r = 1..=r_max`, ordered by `r` then reverse-lex
/// `σ`. A conjecture violation is reported in the row; a violation of the
/// proven bound is an error.
pub fn decay_table(r_max: usize) -> Result<Vec<DecayRow>> {
    check_r(r_max)?;
    let sigmas: Vec<Partition> = (1..=r_max).flat_map(enumerate_partitions).collect();
    let rows = sigmas.into_par_iter().map(decay_row).collect::<Result<Vec<_>>>()?;
    if let Some(bad) = rows.iter().find(|row| !row.theorem_holds) {
        return Err(Error::Invalid(format!(
            "decay order {} of σ = {} breaks the proven bound {}",
            bad.decay_order, bad.sigma, bad.theorem_bound
        )));
    }
    Ok(rows)
}

/// `û_r − (−1)^{r−1} p_r / r` in the `e` basis, for one `N`.
#[derive(Clone, Debug, Serialize)]
pub struct PowerSumGap {
    pub nvars: usize,
    /// Coefficient of `e_λ` in the difference, for `λ` with parts `≤ N`.
    pub coefficients: BTreeMap<String, String>,
    pub exact_equal: bool,
    /// The expansion agrees with the closed form in `N` at this `N`.
    pub closed_form_agrees: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PowerSumLimitReport {
    pub r: usize,
    /// Per `λ ⊢ r`: `c_λ (N)_r / P_λ(N) − c_λ` as a function of `N`.
    pub closed_form: BTreeMap<String, String>,
    /// Every closed-form coefficient decays at least like `1/N`.
    pub all_decay: bool,
    pub samples: Vec<PowerSumGap>,
    /// Samples with `N < r`, where `û_r` does not exist.
    pub skipped: Vec<usize>,
}

impl PowerSumLimitReport {
    /// `r = 1` matches the power sum at every `N`; `r ≥ 2` at none.
    pub fn equality_pattern_holds(&self) -> bool {
        self.samples.iter().all(|s| s.exact_equal == (self.r == 1))
    }

    pub fn pass(&self) -> bool {
        self.all_decay && self.equality_pattern_holds() && self.samples.iter().all(|s| s.closed_form_agrees)
    }
}

/// Coefficient of `e_λ` in `û_r` is `c_λ (N)_r / P_λ(N)`; in
/// `(−1)^{r−1} p_r / r` it is `c_λ` again, so each gap is `1 − quotient of
/// monic degree-r polynomials`, scaled.
pub fn limit_to_power_sum(r: usize, samples: &[usize]) -> Result<PowerSumLimitReport> {
    check_r(r)?;
    if samples.iter().all(|&n| n < r) {
        return Err(Error::NoSuchCoordinate { r, nvars: samples.iter().copied().max().unwrap_or(0) });
    }
    let newton = newton_power_sums(r).pop().expect("r ≥ 1");
    let target_scale = BigRational::new(if r % 2 == 1 { BigInt::one() } else { -BigInt::one() }, BigInt::from(r));
    let limit: BTreeMap<Partition, BigRational> =
        newton.into_iter().map(|(lambda, c)| (lambda, c * &target_scale)).collect();

    let mut closed: BTreeMap<Partition, RationalOfN> = BTreeMap::new();
    for lambda in enumerate_partitions(r) {
        let c = etilde_coefficient(&lambda);
        let hat = RationalOfN::new(UniPoly::falling_factorial(r).scale(&c), p_lambda(&lambda))?;
        let gap = hat.sub(&RationalOfN::constant(limit.get(&lambda).cloned().unwrap_or_else(BigRational::zero)));
        closed.insert(lambda, gap);
    }
    let all_decay = closed.values().all(|g| g.decay_order() >= DecayOrder::Finite(1));

    let (usable, skipped): (Vec<usize>, Vec<usize>) = samples.iter().partition(|&&n| n >= r);
    let gaps = usable
        .into_par_iter()
        .map(|n| {
            let (hat_etilde, _) = build_u_normalized(r, n, NormalizationTag::Hat)?;
            let hat_e = hat_etilde.convert(Basis::Elementary)?;
            let mut coefficients = BTreeMap::new();
            let mut exact_equal = true;
            let mut closed_form_agrees = true;
            for (lambda, gap_fn) in &closed {
                if lambda.max_part() > n {
                    continue;
                }
                let gap = hat_e.coefficient(lambda) - limit.get(lambda).cloned().unwrap_or_else(BigRational::zero);
                exact_equal &= gap.is_zero();
                closed_form_agrees &= gap_fn.evaluate_int(n as i64)? == gap;
                coefficients.insert(lambda.to_string(), format_rational(&gap));
            }
            Ok(PowerSumGap { nvars: n, coefficients, exact_equal, closed_form_agrees })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(PowerSumLimitReport {
        r,
        closed_form: closed.iter().map(|(l, g)| (l.to_string(), g.pretty())).collect(),
        all_decay,
        samples: gaps,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_algebra::rational;

    fn p(s: &str) -> Partition {
        s.parse().unwrap()
    }

    #[test]
    fn pure_derivative_constant() {
        for r in 1..=7 {
            let c = derivative_constant(&Partition::single(r)).unwrap();
            let sign = if r % 2 == 1 { 1 } else { -1 };
            // (−1)^{r−1} (r−1)! / N^r
            let mut den = vec![BigRational::zero(); r + 1];
            den[r] = BigRational::one();
            let expected = RationalOfN::new(
                UniPoly::constant(BigRational::from_integer(factorial(r - 1) * sign)),
                UniPoly::new(den),
            )
            .unwrap();
            assert_eq!(c.value, expected, "r={r}");
            assert_eq!(c.value.decay_order(), DecayOrder::Finite(r as i64));
        }
    }

    #[test]
    fn low_order_constants() {
        assert_eq!(derivative_constant(&p("[1]")).unwrap().value.evaluate_int(5).unwrap(), rational(1, 5));
        let mixed = derivative_constant(&p("[1,1]")).unwrap().value;
        assert_eq!(mixed.decay_order(), DecayOrder::Finite(3));
        for n in 2..=9 {
            let n_q = BigRational::from_integer(n.into());
            let expected = (&n_q * &n_q * (&n_q - BigRational::one())).recip();
            assert_eq!(mixed.evaluate_int(n).unwrap(), expected);
        }
        // ∂_x∂_y of −(x−y)²/8 in two variables
        assert_eq!(mixed.evaluate_int(2).unwrap(), rational(1, 4));
    }

    #[test]
    fn closed_form_matches_symbolic_derivatives() {
        for r in 1..=5 {
            for sigma in enumerate_partitions(r) {
                let c = derivative_constant(&sigma).unwrap();
                for n in r..=7 {
                    let symbolic = derivative_constant_symbolic(&sigma, n).unwrap();
                    assert_eq!(c.value.evaluate_int(n as i64).unwrap(), symbolic, "σ={sigma} N={n}");
                }
            }
        }
    }

    #[test]
    fn dominance_filter_is_lossless() {
        for r in 1..=6 {
            for sigma in enumerate_partitions(r) {
                assert_eq!(derivative_constant(&sigma).unwrap().value, derivative_constant_unfiltered(&sigma).unwrap());
            }
        }
    }

    #[test]
    fn decay_table_low_orders() {
        let rows = decay_table(6).unwrap();
        assert!(rows.iter().all(|r| r.theorem_holds));
        let find = |s: &str| rows.iter().find(|r| r.sigma == p(s)).unwrap();
        assert_eq!(find("[2]").decay_order, DecayOrder::Finite(2));
        assert_eq!(find("[1,1]").decay_order, DecayOrder::Finite(3));
        assert_eq!(find("[1,1]").status, ConjectureStatus::Meets);
        assert!(rows.iter().all(|r| r.status != ConjectureStatus::Violates));
        assert_eq!(rows[0].to_tsv(), "1\t[1]\t1\t1\t1\tmeets");
    }

    #[test]
    fn power_sum_limit() {
        let one = limit_to_power_sum(1, &[1, 2, 3, 5]).unwrap();
        assert!(one.pass());
        assert!(one.samples.iter().all(|s| s.exact_equal));
        for r in 2..=4 {
            let report = limit_to_power_sum(r, &[2, 3, 4, 6, 8]).unwrap();
            assert!(report.pass(), "r={r}: {report:?}");
            assert!(report.samples.iter().all(|s| !s.exact_equal));
        }
        // coefficient of e_1² in û_2 is −(N−1)/2N, limit −1/2
        let two = limit_to_power_sum(2, &[4]).unwrap();
        assert_eq!(two.samples[0].coefficients["[1,1]"], "1/8");
    }

    #[test]
    fn out_of_envelope_is_an_error() {
        assert!(derivative_constant(&Partition::single(9)).is_err());
        assert!(decay_table(0).is_err());
    }
}
