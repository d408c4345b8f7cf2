use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

/// Dense univariate polynomial in `N` over the rationals, coefficients in
/// ascending powers with no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UniPoly {
    coeffs: Vec<BigRational>,
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: BigRational) -> Self {
        Self::new(vec![c])
    }

    /// The variable `N`.
    pub fn n() -> Self {
        Self::new(vec![BigRational::zero(), BigRational::one()])
    }

    /// `N + c`.
    pub fn n_plus(c: i64) -> Self {
        Self::new(vec![BigRational::from_integer(c.into()), BigRational::one()])
    }

    /// `N(N−1)...(N−h+1) = N!/(N−h)!`.
    pub fn falling_factorial(h: usize) -> Self {
        (0..h).fold(Self::constant(BigRational::one()), |acc, k| acc.mul(&Self::n_plus(-(k as i64))))
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for zero.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading_coefficient(&self) -> BigRational {
        self.coeffs.last().cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn add(&self, other: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = BigRational::zero();
        UniPoly::new(
            (0..n)
                .map(|i| self.coeffs.get(i).unwrap_or(&zero) + other.coeffs.get(i).unwrap_or(&zero))
                .collect(),
        )
    }

    pub fn neg(&self) -> UniPoly {
        UniPoly { coeffs: self.coeffs.iter().map(|c| -c.clone()).collect() }
    }

    pub fn sub(&self, other: &UniPoly) -> UniPoly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &UniPoly) -> UniPoly {
        if self.is_zero() || other.is_zero() {
            return UniPoly::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        UniPoly::new(out)
    }

    pub fn scale(&self, c: &BigRational) -> UniPoly {
        UniPoly::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    /// Euclidean division `self = q·d + r` with `deg r < deg d`.
    pub fn div_rem(&self, d: &UniPoly) -> Result<(UniPoly, UniPoly)> {
        let dd = d.degree().ok_or(Error::DivisionByZero("polynomial in N"))?;
        let lc = d.leading_coefficient();
        let mut r = self.coeffs.clone();
        let mut q = vec![BigRational::zero(); r.len().saturating_sub(dd)];
        while r.len() > dd {
            let k = r.len() - 1 - dd;
            let c = r.last().expect("nonempty") / &lc;
            for (i, dc) in d.coeffs.iter().enumerate() {
                r[k + i] -= &c * dc;
            }
            q[k] = c;
            r.pop();
            while r.last().is_some_and(Zero::is_zero) {
                r.pop();
            }
        }
        Ok((UniPoly::new(q), UniPoly::new(r)))
    }

    /// Monic gcd; `gcd(0, 0) = 0`.
    pub fn gcd(&self, other: &UniPoly) -> UniPoly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b).expect("b is nonzero");
            a = b;
            b = r;
        }
        if a.is_zero() {
            return a;
        }
        let lc = a.leading_coefficient().recip();
        a.scale(&lc)
    }

    pub fn evaluate(&self, n: &BigRational) -> BigRational {
        self.coeffs.iter().rev().fold(BigRational::zero(), |acc, c| acc * n + c)
    }

    /// Lagrange interpolation through `(n_k, v_k)`.
    pub fn interpolate(points: &[(BigRational, BigRational)]) -> UniPoly {
        let mut out = UniPoly::zero();
        for (k, (xk, yk)) in points.iter().enumerate() {
            let mut basis = UniPoly::constant(yk.clone());
            for (j, (xj, _)) in points.iter().enumerate() {
                if j != k {
                    let lin = UniPoly::new(vec![-xj.clone(), BigRational::one()]);
                    basis = basis.mul(&lin).scale(&(xk - xj).recip());
                }
            }
            out = out.add(&basis);
        }
        out
    }
}

/// Decay order as `N → ∞`: `deg den − deg num`, infinite for zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DecayOrder {
    Finite(i64),
    Infinite,
}

impl DecayOrder {
    pub fn finite(self) -> Option<i64> {
        match self {
            DecayOrder::Finite(k) => Some(k),
            DecayOrder::Infinite => None,
        }
    }
}

impl PartialOrd for DecayOrder {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DecayOrder {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (DecayOrder::Infinite, DecayOrder::Infinite) => Ordering::Equal,
            (DecayOrder::Infinite, _) => Ordering::Greater,
            (_, DecayOrder::Infinite) => Ordering::Less,
            (DecayOrder::Finite(a), DecayOrder::Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for DecayOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecayOrder::Finite(k) => write!(f, "{k}"),
            DecayOrder::Infinite => write!(f, "inf"),
        }
    }
}

/// Rational function of a symbolic `N`, kept reduced: coprime numerator and
/// denominator with integer coefficients, content 1, and a positive leading
/// denominator coefficient. Zero is `0/1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalOfN {
    num: Vec<BigInt>,
    den: Vec<BigInt>,
}

impl RationalOfN {
    pub fn new(num: UniPoly, den: UniPoly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero("function of N"));
        }
        if num.is_zero() {
            return Ok(Self::zero());
        }
        let g = num.gcd(&den);
        let (num, _) = num.div_rem(&g)?;
        let (den, _) = den.div_rem(&g)?;

        let lcm = num
            .coeffs
            .iter()
            .chain(&den.coeffs)
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let to_int = |p: &UniPoly| -> Vec<BigInt> {
            p.coeffs.iter().map(|c| (c * BigRational::from_integer(lcm.clone())).to_integer()).collect()
        };
        let (mut n, mut d) = (to_int(&num), to_int(&den));
        let content = n.iter().chain(&d).fold(BigInt::zero(), |acc, c| acc.gcd(c));
        let sign = if d.last().expect("nonzero").is_negative() { -BigInt::one() } else { BigInt::one() };
        let factor = content * sign;
        for c in n.iter_mut().chain(d.iter_mut()) {
            *c = &*c / &factor;
        }
        Ok(Self { num: n, den: d })
    }

    pub fn zero() -> Self {
        Self { num: Vec::new(), den: vec![BigInt::one()] }
    }

    pub fn from_poly(p: UniPoly) -> Self {
        Self::new(p, UniPoly::constant(BigRational::one())).expect("denominator 1")
    }

    pub fn constant(c: BigRational) -> Self {
        Self::from_poly(UniPoly::constant(c))
    }

    fn upoly(v: &[BigInt]) -> UniPoly {
        UniPoly::new(v.iter().map(|c| BigRational::from_integer(c.clone())).collect())
    }

    pub fn numerator(&self) -> UniPoly {
        Self::upoly(&self.num)
    }

    pub fn denominator(&self) -> UniPoly {
        Self::upoly(&self.den)
    }

    pub fn numerator_coeffs(&self) -> &[BigInt] {
        &self.num
    }

    pub fn denominator_coeffs(&self) -> &[BigInt] {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_empty()
    }

    pub fn add(&self, other: &RationalOfN) -> RationalOfN {
        let (a, b, c, d) = (self.numerator(), self.denominator(), other.numerator(), other.denominator());
        Self::new(a.mul(&d).add(&c.mul(&b)), b.mul(&d)).expect("nonzero denominators")
    }

    pub fn neg(&self) -> RationalOfN {
        Self { num: self.num.iter().map(|c| -c).collect(), den: self.den.clone() }
    }

    pub fn sub(&self, other: &RationalOfN) -> RationalOfN {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &RationalOfN) -> RationalOfN {
        Self::new(self.numerator().mul(&other.numerator()), self.denominator().mul(&other.denominator()))
            .expect("nonzero denominators")
    }

    pub fn scale(&self, c: &BigRational) -> RationalOfN {
        Self::new(self.numerator().scale(c), self.denominator()).expect("nonzero denominator")
    }

    pub fn div(&self, other: &RationalOfN) -> Result<RationalOfN> {
        if other.is_zero() {
            return Err(Error::DivisionByZero("function of N"));
        }
        Self::new(self.numerator().mul(&other.denominator()), self.denominator().mul(&other.numerator()))
    }

    pub fn decay_order(&self) -> DecayOrder {
        if self.is_zero() {
            return DecayOrder::Infinite;
        }
        DecayOrder::Finite(self.den.len() as i64 - self.num.len() as i64)
    }

    /// `lim_{N→∞} N^{decay}·f`: the ratio of leading coefficients.
    pub fn leading_ratio(&self) -> BigRational {
        match (self.num.last(), self.den.last()) {
            (Some(a), Some(b)) => BigRational::new(a.clone(), b.clone()),
            _ => BigRational::zero(),
        }
    }

    pub fn evaluate(&self, n: &BigRational) -> Result<BigRational> {
        let d = self.denominator().evaluate(n);
        if d.is_zero() {
            return Err(Error::DivisionByZero("denominator at this N"));
        }
        Ok(self.numerator().evaluate(n) / d)
    }

    pub fn evaluate_int(&self, n: i64) -> Result<BigRational> {
        self.evaluate(&BigRational::from_integer(n.into()))
    }

    /// Human-readable form, e.g. `1 / (N^3 - N^2)`.
    pub fn pretty(&self) -> String {
        let num = pretty_poly(&self.num);
        if self.den.len() == 1 && self.den[0].is_one() {
            return num;
        }
        let wrap = |s: String, v: &[BigInt]| {
            if v.iter().filter(|c| !c.is_zero()).count() > 1 { format!("({s})") } else { s }
        };
        format!("{} / {}", wrap(num, &self.num), wrap(pretty_poly(&self.den), &self.den))
    }
}

fn pretty_poly(c: &[BigInt]) -> String {
    let mut s = String::new();
    for (k, a) in c.iter().enumerate().rev() {
        if a.is_zero() {
            continue;
        }
        let mag = a.abs();
        let sign = if a.is_negative() { "-" } else { "+" };
        if s.is_empty() {
            if a.is_negative() {
                s.push('-');
            }
        } else {
            s.push_str(&format!(" {sign} "));
        }
        let coef = if mag.is_one() && k > 0 { String::new() } else { mag.to_string() };
        let var = match k {
            0 => String::new(),
            1 => "N".to_string(),
            _ => format!("N^{k}"),
        };
        s.push_str(&coef);
        s.push_str(&var);
    }
    if s.is_empty() { "0".to_string() } else { s }
}

impl fmt::Display for RationalOfN {
    /// `[c0, c1, ...] / [d0, d1, ...]`, ascending powers of `N`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[BigInt]| v.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ");
        write!(f, "[{}] / [{}]", list(&self.num), list(&self.den))
    }
}
