//! The coordinates `u_r`, their normalizations and the diagonal-vanishing
//! check.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;

use super::{Basis, SymExpr};
use crate::combinatorics::{enumerate_partitions, factorial, falling_factorial, DerivativePattern, Partition};
use crate::error::{Error, Result};
use crate::exact_algebra::SparsePoly;

/// How the degree-`r` coordinate is scaled relative to `u_r`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationTag {
    /// `u_r`
    #[default]
    Paper,
    /// `û_r = N!/(N−r)!·u_r`
    Hat,
    /// `(−1)^{r−1} r û_r`
    SignedPower,
    /// `(−1)^{r−1} û_r/(r−1)!`
    Taylor,
}

impl NormalizationTag {
    pub const ALL: [NormalizationTag; 4] =
        [NormalizationTag::Paper, NormalizationTag::Hat, NormalizationTag::SignedPower, NormalizationTag::Taylor];

    /// The scalar `s` with `coordinate_r = s·u_r`. The dual operator of the
    /// rescaled coordinate is scaled by `1/s`.
    pub fn factor(self, r: usize, nvars: usize) -> BigRational {
        let hat = BigRational::from_integer(falling_factorial(nvars, r));
        let sign = if r % 2 == 1 { BigRational::one() } else { -BigRational::one() };
        match self {
            NormalizationTag::Paper => BigRational::one(),
            NormalizationTag::Hat => hat,
            NormalizationTag::SignedPower => sign * hat * BigRational::from_integer(BigInt::from(r)),
            NormalizationTag::Taylor => sign * hat / BigRational::from_integer(factorial(r.saturating_sub(1))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NormalizationTag::Paper => "paper",
            NormalizationTag::Hat => "hat",
            NormalizationTag::SignedPower => "signed-power",
            NormalizationTag::Taylor => "taylor",
        }
    }
}

impl FromStr for NormalizationTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "paper" | "paper-u" => Ok(NormalizationTag::Paper),
            "hat" | "hat-u" => Ok(NormalizationTag::Hat),
            "signed-power" => Ok(NormalizationTag::SignedPower),
            "taylor" => Ok(NormalizationTag::Taylor),
            other => Err(Error::Invalid(format!("unknown normalization {other:?}"))),
        }
    }
}

impl fmt::Display for NormalizationTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `u_r` in `N` variables, in the `ẽ` basis and expanded.
#[derive(Debug)]
pub struct UCoordinate {
    r: usize,
    nvars: usize,
    etilde: SymExpr,
    poly: SparsePoly,
}

impl UCoordinate {
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn etilde(&self) -> &SymExpr {
        &self.etilde
    }

    pub fn poly(&self) -> &SparsePoly {
        &self.poly
    }
}

/// `u_r = Σ_{λ⊢r} (−1)^{l−1} (l−1)!/∏m_h! · ẽ_λ`.
pub fn u_etilde_partition_sum(r: usize, nvars: usize) -> Result<SymExpr> {
    check_range(r, nvars)?;
    let mut coeffs = BTreeMap::new();
    for lambda in enumerate_partitions(r) {
        let l = lambda.len();
        let sign = if l % 2 == 1 { BigInt::one() } else { -BigInt::one() };
        coeffs.insert(lambda.clone(), BigRational::new(sign * factorial(l - 1), lambda.multiplicity_factorials()));
    }
    SymExpr::new(nvars, Basis::ETilde, coeffs)
}

/// `u_r = −Σ_t B̂_{r,t}(−ẽ_1, …)/t`, with `B̂_{r,t}` built from the
/// convolution recurrence `B̂_{r,t} = Σ_i z_i B̂_{r−i,t−1}` rather than the
/// partition sum.
pub fn u_etilde_bell(r: usize, nvars: usize) -> Result<SymExpr> {
    check_range(r, nvars)?;
    let z: Vec<SymExpr> = (1..=r)
        .map(|h| Ok(SymExpr::basis_element(nvars, Basis::ETilde, Partition::single(h))?.scale(&-BigRational::one())))
        .collect::<Result<_>>()?;
    // bell[k] = B̂_{k,t} for the current t
    let one = SymExpr::basis_element(nvars, Basis::ETilde, Partition::empty())?;
    let mut bell: Vec<SymExpr> = (0..=r)
        .map(|k| if k == 0 { one.clone() } else { SymExpr::zero(nvars, Basis::ETilde) })
        .collect();
    let mut u = SymExpr::zero(nvars, Basis::ETilde);
    for t in 1..=r {
        let mut next: Vec<SymExpr> = vec![SymExpr::zero(nvars, Basis::ETilde); r + 1];
        for k in t..=r {
            for i in 1..=(k + 1 - t) {
                next[k] = next[k].add(&z[i - 1].mul(&bell[k - i])?)?;
            }
        }
        bell = next;
        u = u.add(&bell[r].scale(&BigRational::new(-BigInt::one(), BigInt::from(t))))?;
    }
    Ok(u)
}

fn check_range(r: usize, nvars: usize) -> Result<()> {
    if r == 0 || r > nvars {
        return Err(Error::NoSuchCoordinate { r, nvars });
    }
    Ok(())
}

type Cache = RwLock<HashMap<(usize, usize), Arc<UCoordinate>>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// `u_r` in `N` variables, memoized per `(N, r)`. Both constructions are
/// computed on first use and must agree exactly.
pub fn build_u(r: usize, nvars: usize) -> Result<Arc<UCoordinate>> {
    check_range(r, nvars)?;
    if let Some(u) = cache().read().expect("cache lock").get(&(nvars, r)) {
        return Ok(u.clone());
    }
    let etilde = u_etilde_partition_sum(r, nvars)?;
    let bell = u_etilde_bell(r, nvars)?;
    if etilde != bell {
        return Err(Error::Invalid(format!("u_{r}: partition-sum and Bell constructions disagree")));
    }
    let poly = etilde.expand()?;
    let built = Arc::new(UCoordinate { r, nvars, etilde, poly });
    let mut guard = cache().write().expect("cache lock");
    Ok(guard.entry((nvars, r)).or_insert(built).clone())
}

/// `û_r = N!/(N−r)!·u_r`.
pub fn u_hat(r: usize, nvars: usize) -> Result<SparsePoly> {
    Ok(build_u(r, nvars)?.poly().scale(&NormalizationTag::Hat.factor(r, nvars)))
}

/// The tagged coordinate, in the `ẽ` basis and expanded.
pub fn build_u_normalized(r: usize, nvars: usize, tag: NormalizationTag) -> Result<(SymExpr, SparsePoly)> {
    let u = build_u(r, nvars)?;
    let s = tag.factor(r, nvars);
    Ok((u.etilde().scale(&s), u.poly().scale(&s)))
}

/// `u_η = ∏ u_{η_i}`.
pub fn u_product(eta: &Partition, nvars: usize) -> Result<SparsePoly> {
    let mut out = SparsePoly::one(nvars);
    for &h in eta.parts() {
        out = &out * build_u(h, nvars)?.poly();
    }
    Ok(out)
}

/// `p(t, …, t)` as a polynomial in the single variable `t`.
pub fn diagonal_restriction(p: &SparsePoly) -> Result<SparsePoly> {
    let t = SparsePoly::var(1, 0)?;
    p.compose(&vec![t; p.nvars()])
}

/// Whether the derivative realizing `pattern` kills `u_r` on the total
/// diagonal `x_1 = … = x_N`.
pub fn check_diagonal_vanishing(r: usize, pattern: &DerivativePattern, nvars: usize) -> Result<bool> {
    let u = build_u(r, nvars)?;
    let d = u.poly().derivative(&pattern.orders(nvars)?)?;
    Ok(diagonal_restriction(&d)?.is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;
    use crate::exact_algebra::{integer, poly, rational};
    use crate::symmetric_basis::{elementary_all, normalized_elementary};

    fn part(p: &[usize]) -> Partition {
        Partition::new(p.to_vec()).unwrap()
    }

    #[test]
    fn low_degree_coordinates() {
        for n in 1..=4 {
            assert_eq!(build_u(1, n).unwrap().poly(), &elementary_all(1, n).scale(&rational(1, n as i64)));
        }
        let u2 = build_u(2, 2).unwrap();
        let expected = poly(2, &[(1, &[2, 0]), (-2, &[1, 1]), (1, &[0, 2])]).scale(&rational(-1, 8));
        assert_eq!(u2.poly(), &expected);

        let u3 = build_u(3, 4).unwrap();
        let expected: BTreeMap<Partition, BigRational> =
            [(part(&[3]), integer(1)), (part(&[2, 1]), integer(-1)), (part(&[1, 1, 1]), rational(1, 3))]
                .into_iter()
                .collect();
        assert_eq!(u3.etilde().coeffs(), &expected);
        let direct = &(&normalized_elementary(3, 4) - &(&normalized_elementary(1, 4) * &normalized_elementary(2, 4)))
            + &normalized_elementary(1, 4).pow(3).scale(&rational(1, 3));
        assert_eq!(u3.poly(), &direct);
    }

    #[test]
    fn hat_u2_closed_form() {
        for n in 2..=6i64 {
            let e1 = elementary_all(1, n as usize);
            let e2 = elementary_all(2, n as usize);
            let expected = &e2 - &(&e1 * &e1).scale(&rational(n - 1, 2 * n));
            assert_eq!(u_hat(2, n as usize).unwrap(), expected);
        }
        // the two-variable illustration: û_2 = −(x−y)²/4
        let expected = poly(2, &[(1, &[2, 0]), (-2, &[1, 1]), (1, &[0, 2])]).scale(&rational(-1, 4));
        assert_eq!(u_hat(2, 2).unwrap(), expected);
    }

    #[test]
    fn constructions_agree() {
        for n in 1..=8 {
            for r in 1..=n {
                assert_eq!(u_etilde_partition_sum(r, n).unwrap(), u_etilde_bell(r, n).unwrap(), "r={r} N={n}");
            }
        }
    }

    #[test]
    fn out_of_range() {
        assert!(matches!(build_u(3, 2), Err(Error::NoSuchCoordinate { r: 3, nvars: 2 })));
        assert!(build_u(0, 2).is_err());
    }

    #[test]
    fn diagonal_vanishing_examples() {
        let s = |p: &[usize]| DerivativePattern(part(p));
        assert!(check_diagonal_vanishing(3, &s(&[1, 1]), 4).unwrap());
        assert!(!check_diagonal_vanishing(2, &s(&[2]), 3).unwrap());
        assert!(check_diagonal_vanishing(2, &s(&[1]), 2).unwrap());
        let d = build_u(2, 3).unwrap().poly().derivative(&[2, 0, 0]).unwrap();
        assert_eq!(d, SparsePoly::constant(3, rational(-1, 9)));
    }

    #[test]
    fn structural_properties() {
        for n in 1..=6usize {
            let a = rational(5, 7);
            for r in 1..=n {
                let u = build_u(r, n).unwrap();
                let p = u.poly();
                assert!(p.is_homogeneous() && p.degree() == Some(r as u32) && p.is_symmetric());
                assert_eq!(u.etilde().coefficient(&Partition::single(r)), integer(1));

                let on_diag = p.evaluate(&vec![a.clone(); n]).unwrap();
                assert_eq!(on_diag, if r == 1 { a.clone() } else { BigRational::zero() });

                let mut euler = SparsePoly::zero(n);
                for i in 0..n {
                    euler = &euler + &(&SparsePoly::var(n, i).unwrap() * &p.partial_derivative(i).unwrap());
                }
                assert_eq!(euler, p.scale(&integer(r as i64)));
            }
        }
    }

    #[test]
    fn products_without_unit_parts_vanish_to_lower_order() {
        let n = 5;
        let u22 = u_product(&part(&[2, 2]), n).unwrap();
        for d in 0..4 {
            for sigma in enumerate_partitions(d) {
                let pattern = DerivativePattern(sigma);
                let dp = u22.derivative(&pattern.orders(n).unwrap()).unwrap();
                assert!(diagonal_restriction(&dp).unwrap().is_zero(), "{}", pattern.partition());
            }
        }
    }

    #[test]
    fn normalization_factors() {
        assert_eq!(NormalizationTag::Hat.factor(2, 5), integer(20));
        assert_eq!(NormalizationTag::SignedPower.factor(2, 5), integer(-40));
        assert_eq!(NormalizationTag::Taylor.factor(3, 5), integer(30));
        assert_eq!(NormalizationTag::Paper.factor(4, 5), integer(1));
        for tag in NormalizationTag::ALL {
            assert_eq!(tag.name().parse::<NormalizationTag>().unwrap(), tag);
        }
    }
}
