//! Symmetric polynomials in the bases `e`, `ẽ`, `m`, `p` and `u`, with exact
//! conversion between them through the `e` basis.

mod coordinates;
mod generators;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::combinatorics::Partition;
use crate::error::{Error, Result};
use crate::exact_algebra::{parse_rational, Monomial, SparsePoly};

pub use coordinates::{
    build_u, build_u_normalized, check_diagonal_vanishing, diagonal_restriction, u_etilde_bell,
    u_etilde_partition_sum, u_hat, u_product, NormalizationTag, UCoordinate,
};
pub use generators::{
    elementary, elementary_all, etilde_normalizer, expand_product_rule, newton_power_sums, normalized_elementary,
    ordinary_bell, power_sum, BellArg,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Basis {
    Elementary,
    ETilde,
    Monomial,
    Power,
    U,
}

impl Basis {
    pub fn letter(self) -> &'static str {
        match self {
            Basis::Elementary => "e",
            Basis::ETilde => "et",
            Basis::Monomial => "m",
            Basis::Power => "p",
            Basis::U => "u",
        }
    }

    /// Whether `b_λ = ∏ b_{λ_i}`.
    pub fn is_multiplicative(self) -> bool {
        self != Basis::Monomial
    }

    /// Keys allowed in `nvars` variables: parts at most `N` for the
    /// multiplicative bases, at most `N` parts for the monomial basis.
    pub fn admits(self, lambda: &Partition, nvars: usize) -> bool {
        match self {
            Basis::Monomial => lambda.len() <= nvars,
            _ => lambda.max_part() <= nvars,
        }
    }
}

impl FromStr for Basis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "e" | "elementary" => Ok(Basis::Elementary),
            "et" | "etilde" => Ok(Basis::ETilde),
            "m" | "monomial" => Ok(Basis::Monomial),
            "p" | "power" => Ok(Basis::Power),
            "u" => Ok(Basis::U),
            other => Err(Error::Conversion(format!("unknown basis {other:?}"))),
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.letter())
    }
}

/// A symmetric polynomial in `nvars` variables written in one basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymExpr {
    nvars: usize,
    basis: Basis,
    coeffs: BTreeMap<Partition, BigRational>,
}

type Coeffs = BTreeMap<Partition, BigRational>;

fn accumulate(map: &mut Coeffs, key: Partition, c: BigRational) {
    if c.is_zero() {
        return;
    }
    let v = map.entry(key.clone()).or_insert_with(BigRational::zero);
    *v += c;
    if v.is_zero() {
        map.remove(&key);
    }
}

/// Product in a multiplicative basis; keys with a part above `nvars` vanish.
fn multiply(a: &Coeffs, b: &Coeffs, nvars: usize) -> Coeffs {
    let mut out = Coeffs::new();
    for (la, ca) in a {
        for (lb, cb) in b {
            let key = la.union(lb);
            if key.max_part() <= nvars {
                accumulate(&mut out, key, ca * cb);
            }
        }
    }
    out
}

fn unit() -> Coeffs {
    [(Partition::empty(), BigRational::one())].into_iter().collect()
}

impl SymExpr {
    pub fn new(nvars: usize, basis: Basis, coeffs: BTreeMap<Partition, BigRational>) -> Result<Self> {
        if let Some(bad) = coeffs.keys().find(|l| !basis.admits(l, nvars)) {
            return Err(Error::Inadmissible { partition: bad.to_string(), nvars });
        }
        let coeffs = coeffs.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        Ok(Self { nvars, basis, coeffs })
    }

    pub fn zero(nvars: usize, basis: Basis) -> Self {
        Self { nvars, basis, coeffs: Coeffs::new() }
    }

    /// The single basis element `b_λ`.
    pub fn basis_element(nvars: usize, basis: Basis, lambda: Partition) -> Result<Self> {
        Self::new(nvars, basis, [(lambda, BigRational::one())].into_iter().collect())
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn coeffs(&self) -> &BTreeMap<Partition, BigRational> {
        &self.coeffs
    }

    pub fn coefficient(&self, lambda: &Partition) -> BigRational {
        self.coeffs.get(lambda).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn check_same(&self, other: &SymExpr) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::NvarsMismatch { left: self.nvars, right: other.nvars });
        }
        if self.basis != other.basis {
            return Err(Error::Conversion(format!("cannot combine {} and {} expressions", self.basis, other.basis)));
        }
        Ok(())
    }

    pub fn add(&self, other: &SymExpr) -> Result<SymExpr> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (l, c) in &other.coeffs {
            accumulate(&mut out.coeffs, l.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn scale(&self, c: &BigRational) -> SymExpr {
        let mut out = SymExpr::zero(self.nvars, self.basis);
        for (l, v) in &self.coeffs {
            accumulate(&mut out.coeffs, l.clone(), v * c);
        }
        out
    }

    /// Product in a multiplicative basis.
    pub fn mul(&self, other: &SymExpr) -> Result<SymExpr> {
        self.check_same(other)?;
        if !self.basis.is_multiplicative() {
            return Err(Error::Conversion("monomial-basis products are not supported".into()));
        }
        Ok(SymExpr { nvars: self.nvars, basis: self.basis, coeffs: multiply(&self.coeffs, &other.coeffs, self.nvars) })
    }

    /// The polynomial in `x_1..x_N`.
    pub fn expand(&self) -> Result<SparsePoly> {
        let n = self.nvars;
        let mut out = SparsePoly::zero(n);
        let mut cache: HashMap<usize, SparsePoly> = HashMap::new();
        for (lambda, c) in &self.coeffs {
            let term = match self.basis {
                Basis::Monomial => monomial_symmetric(lambda, n),
                _ => {
                    let mut prod = SparsePoly::one(n);
                    for &h in lambda.parts() {
                        if !cache.contains_key(&h) {
                            cache.insert(h, generator_poly(self.basis, h, n)?);
                        }
                        prod = &prod * &cache[&h];
                    }
                    prod
                }
            };
            out = &out + &term.scale(c);
        }
        Ok(out)
    }

    /// Re-expresses the same polynomial in `target`.
    pub fn convert(&self, target: Basis) -> Result<SymExpr> {
        if target == self.basis {
            return Ok(self.clone());
        }
        let e = self.to_elementary()?;
        let coeffs = match target {
            Basis::Elementary => e,
            Basis::Monomial => {
                let p = SymExpr { nvars: self.nvars, basis: Basis::Elementary, coeffs: e }.expand()?;
                monomial_coefficients(&p)?
            }
            _ => from_elementary(&e, target, self.nvars)?,
        };
        SymExpr::new(self.nvars, target, coeffs)
    }

    /// Writes a symmetric polynomial in the given basis.
    pub fn from_poly(p: &SparsePoly, target: Basis) -> Result<SymExpr> {
        if !p.is_symmetric() {
            return Err(Error::NotSymmetric(format!("{} terms", p.len())));
        }
        let n = p.nvars();
        let e = poly_to_elementary(p)?;
        SymExpr::new(n, Basis::Elementary, e)?.convert(target)
    }

    fn to_elementary(&self) -> Result<Coeffs> {
        let n = self.nvars;
        match self.basis {
            Basis::Elementary => Ok(self.coeffs.clone()),
            Basis::Monomial => poly_to_elementary(&self.expand()?),
            basis => {
                let mut gens: HashMap<usize, Coeffs> = HashMap::new();
                let mut out = Coeffs::new();
                for (lambda, c) in &self.coeffs {
                    let mut prod = unit();
                    for &h in lambda.parts() {
                        if !gens.contains_key(&h) {
                            gens.insert(h, generator_in_elementary(basis, h, n)?);
                        }
                        prod = multiply(&prod, &gens[&h], n);
                    }
                    for (k, v) in prod {
                        accumulate(&mut out, k, v * c);
                    }
                }
                Ok(out)
            }
        }
    }

    /// Parses the line format `<num>/<den> : <letter>[parts]`; every line
    /// must use `basis`.
    pub fn parse(text: &str, nvars: usize, basis: Basis) -> Result<SymExpr> {
        let mut coeffs = Coeffs::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse { line: idx + 1, msg };
            let (c, key) = line.split_once(':').ok_or_else(|| err("missing ':'".into()))?;
            let c = parse_rational(c.trim()).ok_or_else(|| err(format!("bad coefficient {c:?}")))?;
            let key = key.trim();
            let open = key.find('[').ok_or_else(|| err(format!("bad key {key:?}")))?;
            let letter: Basis = key[..open].parse().map_err(|e: Error| err(e.to_string()))?;
            if letter != basis {
                return Err(err(format!("expected basis {basis}, found {letter}")));
            }
            let lambda: Partition = key[open..].parse().map_err(|e: Error| err(e.to_string()))?;
            accumulate(&mut coeffs, lambda, c);
        }
        SymExpr::new(nvars, basis, coeffs)
    }
}

impl fmt::Display for SymExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (lambda, c) in &self.coeffs {
            writeln!(f, "{}/{} : {}{}", c.numer(), c.denom(), self.basis.letter(), lambda)?;
        }
        Ok(())
    }
}

/// `b_h` expanded as a polynomial, for the multiplicative bases.
fn generator_poly(basis: Basis, h: usize, n: usize) -> Result<SparsePoly> {
    match basis {
        Basis::Elementary => Ok(elementary_all(h, n)),
        Basis::ETilde => Ok(normalized_elementary(h, n)),
        Basis::Power => Ok(power_sum(h, n)),
        Basis::U => Ok(build_u(h, n)?.poly().clone()),
        Basis::Monomial => Err(Error::Conversion("monomial basis has no generators".into())),
    }
}

/// `b_h` written in the `e` basis.
fn generator_in_elementary(basis: Basis, h: usize, n: usize) -> Result<Coeffs> {
    let single = |c: BigRational| -> Coeffs {
        if h > n {
            Coeffs::new()
        } else {
            [(Partition::single(h), c)].into_iter().collect()
        }
    };
    match basis {
        Basis::Elementary => Ok(single(BigRational::one())),
        Basis::ETilde => Ok(single(BigRational::new(BigInt::one(), etilde_normalizer(h, n)))),
        Basis::Power => {
            let mut p = newton_power_sums(h).pop().unwrap_or_default();
            p.retain(|l, _| l.max_part() <= n);
            Ok(p)
        }
        Basis::U => {
            let u = build_u(h, n)?;
            let mut out = Coeffs::new();
            for (lambda, c) in u.etilde().coeffs() {
                let norm: BigInt = lambda.parts().iter().map(|&p| etilde_normalizer(p, n)).product();
                accumulate(&mut out, lambda.clone(), c / BigRational::from_integer(norm));
            }
            Ok(out)
        }
        Basis::Monomial => Err(Error::Conversion("monomial basis has no generators".into())),
    }
}

/// Rewrites an `e`-basis expression in a multiplicative basis `g` by solving
/// `g_h = c_h e_h + (terms in e_1..e_{h−1})` for `e_h`, degree by degree.
fn from_elementary(e: &Coeffs, target: Basis, n: usize) -> Result<Coeffs> {
    let top = e.keys().map(Partition::max_part).max().unwrap_or(0);
    // e_in_g[h] = e_h written in the target basis
    let mut e_in_g: Vec<Coeffs> = vec![unit()];
    for h in 1..=top {
        let gen = generator_in_elementary(target, h, n)?;
        let lead = gen.get(&Partition::single(h)).cloned().unwrap_or_else(BigRational::zero);
        if lead.is_zero() {
            return Err(Error::Conversion(format!("{target}_{h} has no e_{h} component in {n} variables")));
        }
        let mut eh: Coeffs = [(Partition::single(h), BigRational::one())].into_iter().collect();
        for (mu, c) in &gen {
            if *mu == Partition::single(h) {
                continue;
            }
            let mut prod = unit();
            for &p in mu.parts() {
                prod = multiply(&prod, &e_in_g[p], usize::MAX);
            }
            for (k, v) in prod {
                accumulate(&mut eh, k, -(v * c));
            }
        }
        let inv = lead.recip();
        e_in_g.push(eh.into_iter().map(|(k, v)| (k, v * &inv)).collect());
    }
    let mut out = Coeffs::new();
    for (lambda, c) in e {
        let mut prod = unit();
        for &p in lambda.parts() {
            prod = multiply(&prod, &e_in_g[p], usize::MAX);
        }
        for (k, v) in prod {
            accumulate(&mut out, k, v * c);
        }
    }
    Ok(out)
}

/// `m_λ = Σ` over distinct permutations of the padded exponent vector.
fn monomial_symmetric(lambda: &Partition, n: usize) -> SparsePoly {
    let mut out = SparsePoly::zero(n);
    if lambda.len() > n {
        return out;
    }
    let mut exps: Vec<u16> = lambda.parts().iter().map(|&p| p as u16).collect();
    exps.resize(n, 0);
    exps.sort_unstable();
    loop {
        out.add_term(Monomial::new(exps.clone()), BigRational::one());
        if !next_permutation(&mut exps) {
            break;
        }
    }
    out
}

fn next_permutation(v: &mut [u16]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).expect("pivot exists");
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Coefficients of `m_λ` in a symmetric polynomial: the coefficient of the
/// sorted exponent vector.
fn monomial_coefficients(p: &SparsePoly) -> Result<Coeffs> {
    let mut out = Coeffs::new();
    for (m, c) in p.terms() {
        let ex = m.exponents();
        if ex.windows(2).all(|w| w[0] >= w[1]) {
            let lambda = Partition::from_unsorted(ex.iter().map(|&e| usize::from(e)).collect());
            accumulate(&mut out, lambda, c.clone());
        }
    }
    Ok(out)
}

/// The classical leading-term algorithm: the lex-leading monomial `x^α` of a
/// symmetric polynomial has weakly decreasing `α`, and `e_{α^t}` has the
/// same leading monomial.
fn poly_to_elementary(p: &SparsePoly) -> Result<Coeffs> {
    let n = p.nvars();
    let mut rest = p.clone();
    let mut out = Coeffs::new();
    let mut cache: HashMap<usize, SparsePoly> = HashMap::new();
    while let Some((m, c)) = rest.leading_term() {
        let alpha: Vec<usize> = m.exponents().iter().map(|&e| usize::from(e)).collect();
        if alpha.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::NotSymmetric(format!("leading exponent {alpha:?} is not sorted")));
        }
        let c = c.clone();
        let lambda = Partition::from_unsorted(alpha).conjugate();
        let mut prod = SparsePoly::one(n);
        for &h in lambda.parts() {
            let eh = cache.entry(h).or_insert_with(|| elementary_all(h, n));
            prod = &prod * &*eh;
        }
        rest = &rest - &prod.scale(&c);
        accumulate(&mut out, lambda, c);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::enumerate_partitions;
    use crate::exact_algebra::{integer, rational};

    fn part(p: &[usize]) -> Partition {
        Partition::new(p.to_vec()).unwrap()
    }

    #[test]
    fn power_sum_in_u_basis() {
        let p2 = SymExpr::basis_element(2, Basis::Power, part(&[2])).unwrap();
        let u = p2.convert(Basis::U).unwrap();
        let expected: Coeffs = [(part(&[1, 1]), integer(2)), (part(&[2]), integer(-4))].into_iter().collect();
        assert_eq!(u.coeffs(), &expected);
        assert_eq!(u.expand().unwrap(), power_sum(2, 2));
    }

    #[test]
    fn every_basis_round_trips_through_polynomials() {
        for n in 1..=4usize {
            for r in 1..=4usize {
                for basis in [Basis::Elementary, Basis::ETilde, Basis::Monomial, Basis::Power, Basis::U] {
                    for lambda in enumerate_partitions(r).into_iter().filter(|l| basis.admits(l, n)) {
                        let x = SymExpr::basis_element(n, basis, lambda.clone()).unwrap();
                        let poly = x.expand().unwrap();
                        for target in [Basis::Elementary, Basis::ETilde, Basis::Monomial, Basis::Power, Basis::U] {
                            let y = x.convert(target).unwrap();
                            assert_eq!(y.expand().unwrap(), poly, "{basis}{lambda} -> {target}, N={n}");
                            assert_eq!(y.convert(basis).unwrap(), x);
                        }
                        assert_eq!(SymExpr::from_poly(&poly, basis).unwrap(), x);
                    }
                }
            }
        }
    }

    #[test]
    fn newton_agrees_with_bell_form() {
        // p_r = (−1)^r r Σ_t B̂_{r,t}(−e)/t, evaluated as e-basis expressions
        for r in 1..=6usize {
            let n = r;
            let neg_e: Vec<SymExpr> = (1..=r)
                .map(|h| SymExpr::basis_element(n, Basis::Elementary, part(&[h])).unwrap().scale(&integer(-1)))
                .collect();
            let mut total = SymExpr::zero(n, Basis::Elementary);
            for t in 1..=r {
                let mut b = SymExpr::zero(n, Basis::Elementary);
                for lambda in enumerate_partitions(r).into_iter().filter(|l| l.len() == t) {
                    let mut term = SymExpr::basis_element(n, Basis::Elementary, Partition::empty()).unwrap().scale(
                        &BigRational::new(crate::combinatorics::factorial(t), lambda.multiplicity_factorials()),
                    );
                    for &p in lambda.parts() {
                        term = term.mul(&neg_e[p - 1]).unwrap();
                    }
                    b = b.add(&term).unwrap();
                }
                total = total.add(&b.scale(&rational(1, t as i64))).unwrap();
            }
            let sign = if r % 2 == 0 { 1 } else { -1 };
            let bell = total.scale(&integer(sign * r as i64));
            let newton = SymExpr::basis_element(n, Basis::Power, part(&[r])).unwrap().convert(Basis::Elementary).unwrap();
            assert_eq!(bell, newton, "r={r}");
        }
    }

    #[test]
    fn admissibility_enforced() {
        assert!(matches!(
            SymExpr::basis_element(2, Basis::Elementary, part(&[3])),
            Err(Error::Inadmissible { .. })
        ));
        assert!(SymExpr::basis_element(2, Basis::Monomial, part(&[3])).is_ok());
        assert!(SymExpr::basis_element(2, Basis::Monomial, part(&[1, 1, 1])).is_err());
    }

    #[test]
    fn text_format() {
        let x = SymExpr::new(
            3,
            Basis::ETilde,
            [(part(&[1, 1]), rational(-1, 2)), (part(&[2]), integer(1))].into_iter().collect(),
        )
        .unwrap();
        let text = x.to_string();
        assert!(text.contains("-1/2 : et[1,1]"));
        assert_eq!(SymExpr::parse(&text, 3, Basis::ETilde).unwrap(), x);
        assert!(SymExpr::parse(&text, 3, Basis::U).is_err());
    }

    #[test]
    fn asymmetric_input_rejected() {
        let p = crate::exact_algebra::poly(2, &[(1, &[1, 0])]);
        assert!(matches!(SymExpr::from_poly(&p, Basis::Elementary), Err(Error::NotSymmetric(_))));
    }
}
