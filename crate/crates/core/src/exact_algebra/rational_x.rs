use num_rational::BigRational;
use num_traits::{One, Zero};

use super::poly::SparsePoly;
use crate::error::{Error, Result};

/// Quotient of two polynomials in the same ring. Cancellation is only
/// attempted through exact divisibility tests, never a full gcd.
#[derive(Clone, Debug)]
pub struct RationalFuncX {
    numerator: SparsePoly,
    denominator: SparsePoly,
}

impl RationalFuncX {
    pub fn new(numerator: SparsePoly, denominator: SparsePoly) -> Result<Self> {
        if numerator.nvars() != denominator.nvars() {
            return Err(Error::NvarsMismatch { left: numerator.nvars(), right: denominator.nvars() });
        }
        if denominator.is_zero() {
            return Err(Error::DivisionByZero("denominator"));
        }
        let mut out = Self { numerator, denominator };
        out.reduce();
        Ok(out)
    }

    pub fn from_poly(p: SparsePoly) -> Self {
        let n = p.nvars();
        Self { numerator: p, denominator: SparsePoly::one(n) }
    }

    pub fn numerator(&self) -> &SparsePoly {
        &self.numerator
    }

    pub fn denominator(&self) -> &SparsePoly {
        &self.denominator
    }

    pub fn nvars(&self) -> usize {
        self.numerator.nvars()
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    /// The polynomial this equals, if the denominator has cancelled.
    pub fn as_polynomial(&self) -> Option<SparsePoly> {
        if self.denominator.degree() == Some(0) {
            Some(self.numerator.scale(&self.denominator.constant_term().recip()))
        } else {
            None
        }
    }

    /// Divides out the whole denominator when it divides the numerator, then
    /// any common linear factors `x_i − x_j`, then makes the denominator's
    /// leading coefficient 1.
    fn reduce(&mut self) {
        if self.numerator.is_zero() {
            self.denominator = SparsePoly::one(self.nvars());
            return;
        }
        if let Ok(q) = self.numerator.exact_divide(&self.denominator) {
            self.numerator = q;
            self.denominator = SparsePoly::one(self.nvars());
            return;
        }
        let n = self.nvars();
        for i in 0..n {
            for j in (i + 1)..n {
                let lin = SparsePoly::var_difference(n, i, j).expect("indices in range");
                loop {
                    let (Ok(a), Ok(b)) =
                        (self.numerator.exact_divide(&lin), self.denominator.exact_divide(&lin))
                    else {
                        break;
                    };
                    self.numerator = a;
                    self.denominator = b;
                }
            }
        }
        if let Some((_, lc)) = self.denominator.leading_term() {
            let inv = lc.recip();
            if !inv.is_one() {
                self.numerator = self.numerator.scale(&inv);
                self.denominator = self.denominator.scale(&inv);
            }
        }
    }

    pub fn add(&self, other: &RationalFuncX) -> Result<RationalFuncX> {
        if self.denominator == other.denominator {
            return RationalFuncX::new(
                self.numerator.checked_add(&other.numerator)?,
                self.denominator.clone(),
            );
        }
        RationalFuncX::new(
            self.numerator.checked_mul(&other.denominator)?.checked_add(&other.numerator.checked_mul(&self.denominator)?)?,
            self.denominator.checked_mul(&other.denominator)?,
        )
    }

    pub fn neg(&self) -> RationalFuncX {
        Self { numerator: -&self.numerator, denominator: self.denominator.clone() }
    }

    pub fn sub(&self, other: &RationalFuncX) -> Result<RationalFuncX> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &RationalFuncX) -> Result<RationalFuncX> {
        RationalFuncX::new(
            self.numerator.checked_mul(&other.numerator)?,
            self.denominator.checked_mul(&other.denominator)?,
        )
    }

    pub fn div(&self, other: &RationalFuncX) -> Result<RationalFuncX> {
        if other.is_zero() {
            return Err(Error::DivisionByZero("rational function"));
        }
        RationalFuncX::new(
            self.numerator.checked_mul(&other.denominator)?,
            self.denominator.checked_mul(&other.numerator)?,
        )
    }

    /// `∂/∂x_i` by the quotient rule.
    pub fn partial_derivative(&self, i: usize) -> Result<RationalFuncX> {
        let dn = self.numerator.partial_derivative(i)?;
        let dd = self.denominator.partial_derivative(i)?;
        RationalFuncX::new(
            &(&dn * &self.denominator) - &(&self.numerator * &dd),
            &self.denominator * &self.denominator,
        )
    }

    /// Exact value at a point off the polar locus.
    pub fn evaluate(&self, point: &[BigRational]) -> Result<BigRational> {
        let d = self.denominator.evaluate(point)?;
        if d.is_zero() {
            return Err(Error::DivisionByZero("denominator at this point"));
        }
        Ok(self.numerator.evaluate(point)? / d)
    }

    /// Equality as functions: cross-multiplied numerators agree.
    pub fn equals(&self, other: &RationalFuncX) -> Result<bool> {
        Ok(self.numerator.checked_mul(&other.denominator)? == other.numerator.checked_mul(&self.denominator)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_algebra::poly::{integer, poly};

    #[test]
    fn cancels_linear_factors() {
        let num = poly(2, &[(1, &[2, 0]), (-1, &[0, 2])]);
        let den = &poly(2, &[(1, &[1, 0]), (-1, &[0, 1])]) * &poly(2, &[(1, &[1, 0])]);
        let f = RationalFuncX::new(num, den).unwrap();
        assert_eq!(f.numerator(), &poly(2, &[(1, &[1, 0]), (1, &[0, 1])]));
        assert_eq!(f.denominator(), &poly(2, &[(1, &[1, 0])]));
    }

    #[test]
    fn arithmetic_matches_evaluation() {
        let a = RationalFuncX::new(poly(2, &[(1, &[0, 0])]), poly(2, &[(1, &[1, 0]), (-1, &[0, 1])])).unwrap();
        let b = RationalFuncX::new(poly(2, &[(1, &[0, 1])]), poly(2, &[(1, &[1, 0])])).unwrap();
        let pt = [integer(5), integer(2)];
        let (va, vb) = (a.evaluate(&pt).unwrap(), b.evaluate(&pt).unwrap());
        assert_eq!(a.add(&b).unwrap().evaluate(&pt).unwrap(), &va + &vb);
        assert_eq!(a.sub(&b).unwrap().evaluate(&pt).unwrap(), &va - &vb);
        assert_eq!(a.mul(&b).unwrap().evaluate(&pt).unwrap(), &va * &vb);
        assert_eq!(a.div(&b).unwrap().evaluate(&pt).unwrap(), &va / &vb);
        assert!(a.sub(&a).unwrap().is_zero());
    }

    #[test]
    fn quotient_rule() {
        // d/dx (1/(y − x)) = 1/(y − x)^2
        let f = RationalFuncX::new(poly(2, &[(1, &[0, 0])]), poly(2, &[(-1, &[1, 0]), (1, &[0, 1])])).unwrap();
        let df = f.partial_derivative(0).unwrap();
        let expected = f.mul(&f).unwrap();
        assert!(df.equals(&expected).unwrap());
    }

    #[test]
    fn zero_denominator_rejected() {
        assert!(RationalFuncX::new(SparsePoly::one(1), SparsePoly::zero(1)).is_err());
        let f = RationalFuncX::new(SparsePoly::one(2), poly(2, &[(1, &[1, 0]), (-1, &[0, 1])])).unwrap();
        assert!(f.evaluate(&[integer(3), integer(3)]).is_err());
    }

    #[test]
    fn polynomial_when_denominator_cancels() {
        let f = RationalFuncX::new(poly(1, &[(4, &[2])]), poly(1, &[(2, &[1])])).unwrap();
        assert_eq!(f.as_polynomial(), Some(poly(1, &[(2, &[1])])));
    }
}
