use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use smallvec::SmallVec;

use crate::error::{Error, Result};

pub type Exponents = SmallVec<[u16; 8]>;

/// Exponent vector with its cached total degree. The derived order compares
/// degree first and then exponents lexicographically (graded lex with
/// `x_1 > x_2 > ...`).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    degree: u32,
    exps: Exponents,
}

impl Monomial {
    pub fn new(exps: impl Into<Exponents>) -> Self {
        let exps = exps.into();
        let degree = exps.iter().map(|&e| u32::from(e)).sum();
        Self { degree, exps }
    }

    pub fn one(nvars: usize) -> Self {
        Self { degree: 0, exps: SmallVec::from_elem(0, nvars) }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn exponents(&self) -> &[u16] {
        &self.exps
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let exps = self.exps.iter().zip(&other.exps).map(|(a, b)| a + b).collect();
        Monomial { degree: self.degree + other.degree, exps }
    }

    /// `self / other` when every exponent of `other` fits.
    fn checked_div(&self, other: &Monomial) -> Option<Monomial> {
        let exps = self
            .exps
            .iter()
            .zip(&other.exps)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Exponents>>()?;
        Some(Monomial { degree: self.degree - other.degree, exps })
    }
}

/// Sparse polynomial in `nvars` variables with exact rational coefficients.
/// Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SparsePoly {
    nvars: usize,
    terms: BTreeMap<Monomial, BigRational>,
}

impl SparsePoly {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, BigRational::one())
    }

    pub fn constant(nvars: usize, c: BigRational) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(Monomial::one(nvars), c);
        p
    }

    pub fn from_int(nvars: usize, c: i64) -> Self {
        Self::constant(nvars, BigRational::from_integer(c.into()))
    }

    /// The variable `x_i` (0-based).
    pub fn var(nvars: usize, i: usize) -> Result<Self> {
        if i >= nvars {
            return Err(Error::VariableOutOfRange { index: i, nvars });
        }
        let mut exps = SmallVec::from_elem(0, nvars);
        exps[i] = 1;
        Ok(Self::monomial(Monomial::new(exps), BigRational::one()))
    }

    /// `x_i − x_j`.
    pub fn var_difference(nvars: usize, i: usize, j: usize) -> Result<Self> {
        Ok(Self::var(nvars, i)? - Self::var(nvars, j)?)
    }

    pub fn monomial(m: Monomial, c: BigRational) -> Self {
        let mut p = Self::zero(m.exps.len());
        p.add_term(m, c);
        p
    }

    /// Builds a polynomial from `(coefficient, exponents)` pairs.
    pub fn from_terms(
        nvars: usize,
        terms: impl IntoIterator<Item = (BigRational, Vec<u16>)>,
    ) -> Result<Self> {
        let mut p = Self::zero(nvars);
        for (c, exps) in terms {
            if exps.len() != nvars {
                return Err(Error::NvarsMismatch { left: nvars, right: exps.len() });
            }
            p.add_term(Monomial::new(exps), c);
        }
        Ok(p)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending monomial order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> BigRational {
        self.terms.get(m).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn coefficient_of(&self, exps: &[u16]) -> BigRational {
        self.coefficient(&Monomial::new(Exponents::from_slice(exps)))
    }

    pub fn leading_term(&self) -> Option<(&Monomial, &BigRational)> {
        self.terms.iter().next_back()
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.leading_term().map(|(m, _)| m.degree)
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut degrees = self.terms.keys().map(|m| m.degree);
        match degrees.next() {
            None => true,
            Some(d) => degrees.all(|e| e == d),
        }
    }

    /// The constant term.
    pub fn constant_term(&self) -> BigRational {
        self.coefficient(&Monomial::one(self.nvars))
    }

    pub fn add_term(&mut self, m: Monomial, c: BigRational) {
        debug_assert_eq!(m.exps.len(), self.nvars);
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn check_ring(&self, other: &SparsePoly) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::NvarsMismatch { left: self.nvars, right: other.nvars });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &SparsePoly) -> Result<SparsePoly> {
        self.check_ring(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &SparsePoly) -> Result<SparsePoly> {
        self.check_ring(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &SparsePoly) -> Result<SparsePoly> {
        self.check_ring(other)?;
        let mut out = SparsePoly::zero(self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &BigRational) -> SparsePoly {
        if c.is_zero() {
            return SparsePoly::zero(self.nvars);
        }
        SparsePoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> SparsePoly {
        let mut out = SparsePoly::one(self.nvars);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// `∂/∂x_i`.
    pub fn partial_derivative(&self, i: usize) -> Result<SparsePoly> {
        if i >= self.nvars {
            return Err(Error::VariableOutOfRange { index: i, nvars: self.nvars });
        }
        let mut out = SparsePoly::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m.exps[i];
            if e == 0 {
                continue;
            }
            let mut exps = m.exps.clone();
            exps[i] -= 1;
            out.add_term(
                Monomial { degree: m.degree - 1, exps },
                c * BigRational::from_integer(BigInt::from(e)),
            );
        }
        Ok(out)
    }

    /// `∏_i ∂_i^{orders[i]}`.
    pub fn derivative(&self, orders: &[u32]) -> Result<SparsePoly> {
        if orders.len() != self.nvars {
            return Err(Error::NvarsMismatch { left: self.nvars, right: orders.len() });
        }
        let mut out = SparsePoly::zero(self.nvars);
        'terms: for (m, c) in &self.terms {
            let mut exps = m.exps.clone();
            let mut coeff = c.clone();
            let mut degree = m.degree;
            for (i, &k) in orders.iter().enumerate() {
                for _ in 0..k {
                    if exps[i] == 0 {
                        continue 'terms;
                    }
                    coeff *= BigRational::from_integer(BigInt::from(exps[i]));
                    exps[i] -= 1;
                    degree -= 1;
                }
            }
            out.add_term(Monomial { degree, exps }, coeff);
        }
        Ok(out)
    }

    /// Exact value at a full point.
    pub fn evaluate(&self, point: &[BigRational]) -> Result<BigRational> {
        if point.len() != self.nvars {
            return Err(Error::NvarsMismatch { left: self.nvars, right: point.len() });
        }
        let mut total = BigRational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (x, &e) in point.iter().zip(&m.exps) {
                for _ in 0..e {
                    t *= x;
                }
            }
            total += t;
        }
        Ok(total)
    }

    /// Floating-point value at a full point.
    pub fn evaluate_f64(&self, point: &[f64]) -> Result<f64> {
        use num_traits::ToPrimitive;
        if point.len() != self.nvars {
            return Err(Error::NvarsMismatch { left: self.nvars, right: point.len() });
        }
        Ok(self
            .terms
            .iter()
            .map(|(m, c)| {
                let mut t = c.to_f64().unwrap_or(f64::NAN);
                for (x, &e) in point.iter().zip(&m.exps) {
                    t *= x.powi(i32::from(e));
                }
                t
            })
            .sum())
    }

    /// Replaces every variable `x_i` by `images[i]`; all images share one
    /// target ring.
    pub fn compose(&self, images: &[SparsePoly]) -> Result<SparsePoly> {
        if images.len() != self.nvars {
            return Err(Error::NvarsMismatch { left: self.nvars, right: images.len() });
        }
        let target = images.first().map_or(0, SparsePoly::nvars);
        for im in images {
            if im.nvars != target {
                return Err(Error::NvarsMismatch { left: target, right: im.nvars });
            }
        }
        let mut powers: Vec<Vec<SparsePoly>> = images.iter().map(|im| vec![SparsePoly::one(im.nvars), im.clone()]).collect();
        let mut out = SparsePoly::zero(target);
        for (m, c) in &self.terms {
            let mut t = SparsePoly::constant(target, c.clone());
            for (i, &e) in m.exps.iter().enumerate() {
                let e = usize::from(e);
                while powers[i].len() <= e {
                    let next = &powers[i][powers[i].len() - 1] * &images[i];
                    powers[i].push(next);
                }
                if e > 0 {
                    t = &t * &powers[i][e];
                }
            }
            out = &out + &t;
        }
        Ok(out)
    }

    /// Fixes the listed variables to values; the ring is unchanged.
    pub fn substitute(&self, assignment: &BTreeMap<usize, BigRational>) -> Result<SparsePoly> {
        if let Some(&i) = assignment.keys().find(|&&i| i >= self.nvars) {
            return Err(Error::VariableOutOfRange { index: i, nvars: self.nvars });
        }
        let mut out = SparsePoly::zero(self.nvars);
        for (m, c) in &self.terms {
            let mut coeff = c.clone();
            let mut exps = m.exps.clone();
            for (&i, v) in assignment {
                for _ in 0..exps[i] {
                    coeff *= v;
                }
                exps[i] = 0;
            }
            out.add_term(Monomial::new(exps), coeff);
        }
        Ok(out)
    }

    /// Exchanges `x_i` and `x_j`.
    pub fn swap_variables(&self, i: usize, j: usize) -> Result<SparsePoly> {
        for k in [i, j] {
            if k >= self.nvars {
                return Err(Error::VariableOutOfRange { index: k, nvars: self.nvars });
            }
        }
        let mut out = SparsePoly::zero(self.nvars);
        for (m, c) in &self.terms {
            let mut exps = m.exps.clone();
            exps.swap(i, j);
            out.add_term(Monomial { degree: m.degree, exps }, c.clone());
        }
        Ok(out)
    }

    /// Invariance under every adjacent transposition.
    pub fn is_symmetric(&self) -> bool {
        (1..self.nvars).all(|i| self.swap_variables(i - 1, i).is_ok_and(|s| s == *self))
    }

    /// Embeds into a ring with more variables, `x_i ↦ x_{positions[i]}`.
    pub fn embed(&self, nvars: usize, positions: &[usize]) -> Result<SparsePoly> {
        if positions.len() != self.nvars {
            return Err(Error::NvarsMismatch { left: self.nvars, right: positions.len() });
        }
        if let Some(&i) = positions.iter().find(|&&i| i >= nvars) {
            return Err(Error::VariableOutOfRange { index: i, nvars });
        }
        let mut out = SparsePoly::zero(nvars);
        for (m, c) in &self.terms {
            let mut exps: Exponents = SmallVec::from_elem(0, nvars);
            for (k, &e) in m.exps.iter().enumerate() {
                exps[positions[k]] += e;
            }
            out.add_term(Monomial { degree: m.degree, exps }, c.clone());
        }
        Ok(out)
    }

    /// Exact quotient `self / q`, by repeated leading-term division in graded
    /// lex order. Fails with the full remainder when `q` does not divide.
    pub fn exact_divide(&self, q: &SparsePoly) -> Result<SparsePoly> {
        self.check_ring(q)?;
        let (lm_q, lc_q) = q.leading_term().ok_or(Error::DivisionByZero("polynomial"))?;
        let (lm_q, lc_q) = (lm_q.clone(), lc_q.clone());
        let mut rest = self.clone();
        let mut quotient = SparsePoly::zero(self.nvars);
        let mut remainder = SparsePoly::zero(self.nvars);
        while let Some((lm, lc)) = rest.leading_term() {
            let (lm, lc) = (lm.clone(), lc.clone());
            match lm.checked_div(&lm_q) {
                Some(shift) => {
                    let c = &lc / &lc_q;
                    for (m, v) in &q.terms {
                        rest.add_term(m.mul(&shift), -(v * &c));
                    }
                    quotient.add_term(shift, c);
                }
                None => {
                    rest.terms.remove(&lm);
                    remainder.add_term(lm, lc);
                }
            }
        }
        if remainder.is_zero() {
            Ok(quotient)
        } else {
            Err(Error::NotDivisible { remainder: Box::new(remainder) })
        }
    }

    /// Writes the `nvars=` header and one term per line, leading term first.
    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn from_text(s: &str) -> Result<SparsePoly> {
        s.parse()
    }
}

impl fmt::Display for SparsePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nvars={}", self.nvars)?;
        for (m, c) in self.terms.iter().rev() {
            write!(f, "{}/{} :", c.numer(), c.denom())?;
            for e in m.exps.iter() {
                write!(f, " {e}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl FromStr for SparsePoly {
    type Err = Error;

    fn from_str(s: &str) -> Result<SparsePoly> {
        let mut lines = s.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty input".into() })?;
        let nvars = header
            .trim()
            .strip_prefix("nvars=")
            .and_then(|n| n.trim().parse::<usize>().ok())
            .ok_or_else(|| Error::Parse { line: 1, msg: format!("bad header {header:?}") })?;
        let mut p = SparsePoly::zero(nvars);
        for (idx, line) in lines {
            let line_no = idx + 1;
            let err = |msg: String| Error::Parse { line: line_no, msg };
            let (coef, exps) = line.split_once(':').ok_or_else(|| err("missing ':'".into()))?;
            let c = parse_rational(coef.trim()).ok_or_else(|| err(format!("bad coefficient {coef:?}")))?;
            let exps = exps
                .split_whitespace()
                .map(|t| t.parse::<u16>().map_err(|e| err(format!("{t:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if exps.len() != nvars {
                return Err(err(format!("expected {nvars} exponents, got {}", exps.len())));
            }
            p.add_term(Monomial::new(exps), c);
        }
        Ok(p)
    }
}

/// Parses `n` or `n/d` into an exact rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    match s.split_once('/') {
        Some((n, d)) => {
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(BigRational::new(n.trim().parse().ok()?, d))
        }
        None => Some(BigRational::from_integer(s.trim().parse().ok()?)),
    }
}

/// `num/den` with `den` omitted when it is 1.
pub fn format_rational(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

pub fn integer(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait<&SparsePoly> for &SparsePoly {
            type Output = SparsePoly;
            /// Panics when the rings differ; use the `checked_` form to get
            /// an error instead.
            fn $method(self, rhs: &SparsePoly) -> SparsePoly {
                self.$checked(rhs).expect("polynomial ring mismatch")
            }
        }
        impl $trait<SparsePoly> for SparsePoly {
            type Output = SparsePoly;
            fn $method(self, rhs: SparsePoly) -> SparsePoly {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&SparsePoly> for SparsePoly {
            type Output = SparsePoly;
            fn $method(self, rhs: &SparsePoly) -> SparsePoly {
                (&self).$method(rhs)
            }
        }
    };
}

forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);

impl Neg for &SparsePoly {
    type Output = SparsePoly;
    fn neg(self) -> SparsePoly {
        SparsePoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }
}

impl Neg for SparsePoly {
    type Output = SparsePoly;
    fn neg(self) -> SparsePoly {
        -&self
    }
}

/// `Σ c·x^e` shorthand used by tests: `poly(2, &[(1, &[2, 0]), (-1, &[0, 2])])`.
pub fn poly(nvars: usize, terms: &[(i64, &[u16])]) -> SparsePoly {
    SparsePoly::from_terms(nvars, terms.iter().map(|(c, e)| (integer(*c), e.to_vec())))
        .expect("exponent vector length")
}

/// Whether the absolute value of every coefficient is an integer.
pub fn has_integer_coefficients(p: &SparsePoly) -> bool {
    p.terms().all(|(_, c)| c.abs().is_integer())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(n: usize, i: usize) -> SparsePoly {
        SparsePoly::var(n, i).unwrap()
    }

    #[test]
    fn partial_derivatives() {
        let p = poly(2, &[(1, &[2, 1])]);
        assert_eq!(p.partial_derivative(0).unwrap(), poly(2, &[(2, &[1, 1])]));
        assert!(SparsePoly::from_int(2, 7).partial_derivative(0).unwrap().is_zero());
        assert!(p.partial_derivative(2).is_err());
        assert_eq!(p.derivative(&[2, 1]).unwrap(), SparsePoly::from_int(2, 2));
    }

    #[test]
    fn difference_of_squares() {
        let (a, b) = (x(2, 0), x(2, 1));
        assert_eq!(&(&a + &b) * &(&a - &b), poly(2, &[(1, &[2, 0]), (-1, &[0, 2])]));
    }

    #[test]
    fn mismatched_rings() {
        let r = x(2, 0).checked_add(&x(3, 0));
        assert!(matches!(r, Err(Error::NvarsMismatch { left: 2, right: 3 })));
    }

    #[test]
    fn divisions() {
        let (a, b) = (x(2, 0), x(2, 1));
        let diff = &a - &b;
        let sq = poly(2, &[(1, &[2, 0]), (-1, &[0, 2])]);
        assert_eq!(sq.exact_divide(&diff).unwrap(), &a + &b);

        let (u, v, w) = (x(3, 0), x(3, 1), x(3, 2));
        let vdm = &(&(&u - &v) * &(&u - &w)) * &(&v - &w);
        let q = vdm.exact_divide(&(&(&u - &v) * &(&u - &w))).unwrap();
        assert_eq!(q, &v - &w);

        let sum = poly(2, &[(1, &[2, 0]), (1, &[0, 2])]);
        match sum.exact_divide(&diff) {
            Err(Error::NotDivisible { remainder }) => assert!(!remainder.is_zero()),
            other => panic!("expected NotDivisible, got {other:?}"),
        }
        assert!(matches!(sum.exact_divide(&SparsePoly::zero(2)), Err(Error::DivisionByZero(_))));
    }

    #[test]
    fn substitutions() {
        let sum = poly(2, &[(1, &[2, 0]), (1, &[0, 2])]);
        let t = x(1, 0);
        assert_eq!(sum.compose(&[t.clone(), t]).unwrap(), poly(1, &[(2, &[2])]));

        let e2 = poly(3, &[(1, &[1, 1, 0]), (1, &[1, 0, 1]), (1, &[0, 1, 1])]);
        let v = e2.evaluate(&[integer(1), integer(2), integer(3)]).unwrap();
        assert_eq!(v, integer(11));

        let fixed = e2.substitute(&[(0, integer(2))].into_iter().collect()).unwrap();
        assert_eq!(fixed, poly(3, &[(2, &[0, 1, 0]), (2, &[0, 0, 1]), (1, &[0, 1, 1])]));
    }

    #[test]
    fn text_round_trip() {
        let p = SparsePoly::from_terms(
            3,
            [(rational(-3, 4), vec![2, 0, 1]), (integer(5), vec![0, 0, 0]), (rational(1, 3), vec![0, 1, 0])],
        )
        .unwrap();
        let text = p.to_text();
        assert!(text.starts_with("nvars=3\n-3/4 : 2 0 1\n"));
        assert_eq!(SparsePoly::from_text(&text).unwrap(), p);
        assert_eq!(SparsePoly::from_text("nvars=2\n").unwrap(), SparsePoly::zero(2));
        assert!(SparsePoly::from_text("nvars=2\n1/2 : 1\n").is_err());
    }

    #[test]
    fn homogeneity_and_symmetry() {
        let e2 = poly(3, &[(1, &[1, 1, 0]), (1, &[1, 0, 1]), (1, &[0, 1, 1])]);
        assert!(e2.is_homogeneous() && e2.is_symmetric());
        assert_eq!(e2.degree(), Some(2));
        let q = poly(2, &[(1, &[1, 0]), (1, &[0, 2])]);
        assert!(!q.is_homogeneous() && !q.is_symmetric());
        assert_eq!(SparsePoly::zero(2).degree(), None);
    }

    #[test]
    fn embedding() {
        let p = poly(2, &[(1, &[2, 1])]);
        assert_eq!(p.embed(3, &[2, 0]).unwrap(), poly(3, &[(1, &[1, 0, 2])]));
        assert!(p.embed(2, &[0, 2]).is_err());
    }
}
