//! Elementary and power-sum polynomials, Newton identities and ordinary Bell
//! polynomials.

use std::ops::{Add, Mul};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::combinatorics::{binomial, enumerate_partitions, factorial, Partition};
use crate::error::{Error, Result};
use crate::exact_algebra::{Monomial, SparsePoly};

/// `e_h` over the variables `vars` of an `nvars`-variable ring. Zero when
/// `h > |vars|`, one when `h = 0`.
pub fn elementary(h: usize, vars: &[usize], nvars: usize) -> Result<SparsePoly> {
    if let Some(&i) = vars.iter().find(|&&i| i >= nvars) {
        return Err(Error::VariableOutOfRange { index: i, nvars });
    }
    let mut out = SparsePoly::zero(nvars);
    if h > vars.len() {
        return Ok(out);
    }
    for subset in itertools::Itertools::combinations(vars.iter().copied(), h) {
        let mut exps = vec![0u16; nvars];
        for i in subset {
            exps[i] += 1;
        }
        out.add_term(Monomial::new(exps), BigRational::one());
    }
    Ok(out)
}

/// `e_h(x_1..x_N)`.
pub fn elementary_all(h: usize, nvars: usize) -> SparsePoly {
    let vars: Vec<usize> = (0..nvars).collect();
    elementary(h, &vars, nvars).expect("indices in range")
}

/// `h!·C(N,h)`, the normalizer turning `e_h` into `ẽ_h`.
pub fn etilde_normalizer(h: usize, nvars: usize) -> BigInt {
    factorial(h) * binomial(nvars, h)
}

/// `ẽ_h = e_h / (h!·C(N,h))`; zero for `h > N`.
pub fn normalized_elementary(h: usize, nvars: usize) -> SparsePoly {
    if h > nvars {
        return SparsePoly::zero(nvars);
    }
    let scale = BigRational::new(BigInt::one(), etilde_normalizer(h, nvars));
    elementary_all(h, nvars).scale(&scale)
}

/// The splitting `e_h = Σ_l e_l(x_I)·e_{h−l}(x_{I^c})`, as the list of pairs
/// for `l = 0..=h`.
pub fn expand_product_rule(h: usize, subset: &[usize], nvars: usize) -> Result<Vec<(SparsePoly, SparsePoly)>> {
    let complement: Vec<usize> = (0..nvars).filter(|i| !subset.contains(i)).collect();
    (0..=h)
        .map(|l| Ok((elementary(l, subset, nvars)?, elementary(h - l, &complement, nvars)?)))
        .collect()
}

/// `p_r = Σ x_i^r`.
pub fn power_sum(r: usize, nvars: usize) -> SparsePoly {
    let mut out = SparsePoly::zero(nvars);
    for i in 0..nvars {
        let mut exps = vec![0u16; nvars];
        exps[i] = r as u16;
        out.add_term(Monomial::new(exps), BigRational::one());
    }
    out
}

/// `p_1..p_k` as maps from e-partitions to coefficients, via Newton's
/// identities `p_k = Σ_{i<k} (−1)^{i−1} e_i p_{k−i} + (−1)^{k−1} k e_k`.
/// Entry `k−1` holds `p_k`.
pub fn newton_power_sums(k: usize) -> Vec<std::collections::BTreeMap<Partition, BigRational>> {
    let mut out: Vec<std::collections::BTreeMap<Partition, BigRational>> = Vec::with_capacity(k);
    for n in 1..=k {
        let mut pn = std::collections::BTreeMap::new();
        let sign = |i: usize| if i % 2 == 1 { BigRational::one() } else { -BigRational::one() };
        for i in 1..n {
            for (lam, c) in &out[n - i - 1] {
                let key = lam.with_part(i);
                let v = pn.entry(key).or_insert_with(BigRational::zero);
                *v += sign(i) * c;
            }
        }
        let top = pn.entry(Partition::single(n)).or_insert_with(BigRational::zero);
        *top += sign(n) * BigRational::from_integer(BigInt::from(n));
        pn.retain(|_, c| !c.is_zero());
        out.push(pn);
    }
    out
}

/// Commutative-ring values accepted by [`ordinary_bell`].
pub trait BellArg: Clone + for<'a> Mul<&'a Self, Output = Self> + for<'a> Add<&'a Self, Output = Self> {
    fn zero_like(&self) -> Self;
    fn from_rational_like(&self, q: BigRational) -> Self;
}

impl BellArg for BigRational {
    fn zero_like(&self) -> Self {
        BigRational::zero()
    }
    fn from_rational_like(&self, q: BigRational) -> Self {
        q
    }
}

impl BellArg for SparsePoly {
    fn zero_like(&self) -> Self {
        SparsePoly::zero(self.nvars())
    }
    fn from_rational_like(&self, q: BigRational) -> Self {
        SparsePoly::constant(self.nvars(), q)
    }
}

/// Partial ordinary Bell polynomial
/// `B̂_{r,t}(z) = Σ_{λ⊢r, l(λ)=t} t! ∏_h z_h^{m_h}/m_h!`, with `z[h−1] = z_h`.
/// Needs `z.len() ≥ r − t + 1`.
pub fn ordinary_bell<T: BellArg>(r: usize, t: usize, z: &[T]) -> Result<T> {
    let first = z.first().ok_or_else(|| Error::Invalid("Bell polynomial needs at least one argument".into()))?;
    if t == 0 || t > r {
        return Err(Error::Invalid(format!("Bell polynomial B_{{{r},{t}}} needs 1 ≤ t ≤ r")));
    }
    if z.len() < r - t + 1 {
        return Err(Error::Invalid(format!("B_{{{r},{t}}} needs {} arguments, got {}", r - t + 1, z.len())));
    }
    let mut total = first.zero_like();
    for lam in enumerate_partitions(r).into_iter().filter(|l| l.len() == t) {
        let coeff = BigRational::new(factorial(t), lam.multiplicity_factorials());
        let mut term = first.from_rational_like(coeff);
        for &part in lam.parts() {
            term = term * &z[part - 1];
        }
        total = total + &term;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_algebra::{integer, poly, rational};

    #[test]
    fn elementary_examples() {
        assert_eq!(
            elementary_all(2, 3),
            poly(3, &[(1, &[1, 1, 0]), (1, &[1, 0, 1]), (1, &[0, 1, 1])])
        );
        assert!(elementary_all(4, 3).is_zero());
        assert_eq!(elementary_all(0, 3), SparsePoly::one(3));
        assert_eq!(elementary(1, &[0, 2], 3).unwrap(), poly(3, &[(1, &[1, 0, 0]), (1, &[0, 0, 1])]));
    }

    #[test]
    fn normalized_elementary_on_diagonal() {
        let a = rational(7, 3);
        let at = |h, n: usize| normalized_elementary(h, n).evaluate(&vec![a.clone(); n]).unwrap();
        assert_eq!(at(1, 3), a);
        assert_eq!(normalized_elementary(2, 2), poly(2, &[(1, &[1, 1])]).scale(&rational(1, 2)));
        assert_eq!(at(2, 4), &a * &a / integer(2));
        for n in 1..=6 {
            for h in 0..=n {
                let expected = (0..h).fold(BigRational::one(), |acc, _| acc * &a) / BigRational::from_integer(factorial(h));
                assert_eq!(at(h, n), expected);
            }
        }
        assert!(normalized_elementary(3, 2).is_zero());
    }

    #[test]
    fn product_rule_sums_to_e_h() {
        for (n, h, subset) in [(3usize, 2usize, vec![0usize, 1]), (4, 3, vec![1, 3]), (4, 0, vec![2]), (3, 2, vec![])] {
            let pairs = expand_product_rule(h, &subset, n).unwrap();
            assert_eq!(pairs.len(), h + 1);
            let sum = pairs.iter().fold(SparsePoly::zero(n), |acc, (a, b)| &acc + &(a * b));
            assert_eq!(sum, elementary_all(h, n));
        }
        let trivial = expand_product_rule(0, &[0], 2).unwrap();
        assert_eq!(trivial, vec![(SparsePoly::one(2), SparsePoly::one(2))]);
    }

    #[test]
    fn power_sums_and_newton() {
        assert_eq!(power_sum(2, 2), poly(2, &[(1, &[2, 0]), (1, &[0, 2])]));
        assert_eq!(power_sum(1, 4), elementary_all(1, 4));
        let newton = newton_power_sums(6);
        for n in 1..=4usize {
            for (k, pk) in newton.iter().enumerate() {
                let mut expanded = SparsePoly::zero(n);
                for (lam, c) in pk {
                    let prod = lam.parts().iter().fold(SparsePoly::one(n), |acc, &h| &acc * &elementary_all(h, n));
                    expanded = &expanded + &prod.scale(c);
                }
                assert_eq!(expanded, power_sum(k + 1, n), "p_{} in {n} variables", k + 1);
            }
        }
    }

    #[test]
    fn bell_examples() {
        let z = [integer(3), integer(5)];
        assert_eq!(ordinary_bell(2, 1, &z).unwrap(), integer(5));
        assert_eq!(ordinary_bell(2, 2, &z[..1]).unwrap(), integer(9));
        assert!(ordinary_bell(2, 3, &z).is_err());
    }

    /// Coefficient of `x^r` in `(Σ z_i x^i)^t`, an independent route to `B̂_{r,t}`.
    fn bell_by_series(r: usize, t: usize, z: &[BigRational]) -> BigRational {
        let mut series = vec![BigRational::zero(); r + 1];
        series[0] = BigRational::one();
        for _ in 0..t {
            let mut next = vec![BigRational::zero(); r + 1];
            for (i, a) in series.iter().enumerate() {
                for j in 1..=r - i {
                    if let Some(zj) = z.get(j - 1) {
                        next[i + j] += a * zj;
                    }
                }
            }
            series = next;
        }
        series[r].clone()
    }

    #[test]
    fn bell_matches_series_and_sign_law() {
        let z: Vec<BigRational> = (1..=7).map(|k| rational(2 * k - 5, k + 1)).collect();
        let neg: Vec<BigRational> = z.iter().map(|q| -q.clone()).collect();
        for r in 1..=7 {
            for t in 1..=r {
                let b = ordinary_bell(r, t, &z).unwrap();
                assert_eq!(b, bell_by_series(r, t, &z));
                let sign = if t % 2 == 0 { integer(1) } else { integer(-1) };
                assert_eq!(ordinary_bell(r, t, &neg).unwrap(), sign * b);
            }
        }
    }
}
