use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::Zero;

use super::param::{ParamExpr, ParamValues};
use super::SymbolicError;

/// Polynomial in one indeterminate with [`ParamExpr`] coefficients, stored
/// by ascending degree with a nonzero leading coefficient.
///
/// Used for the loop-counter polynomials `P(n)` of closed forms and for
/// characteristic polynomials.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct UPoly {
    coeffs: Vec<ParamExpr>,
}

/// Polynomial in the loop counter `n`.
pub type CounterPoly = UPoly;

impl UPoly {
    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(ParamExpr::one())
    }

    pub fn constant(c: ParamExpr) -> Self {
        Self::from_coeffs(vec![c])
    }

    /// The indeterminate itself.
    pub fn x() -> Self {
        Self::from_coeffs(vec![ParamExpr::zero(), ParamExpr::one()])
    }

    pub fn monomial(k: usize, c: ParamExpr) -> Self {
        let mut v = vec![ParamExpr::zero(); k + 1];
        v[k] = c;
        Self::from_coeffs(v)
    }

    pub fn from_coeffs(mut coeffs: Vec<ParamExpr>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[ParamExpr] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, k: usize) -> ParamExpr {
        self.coeffs.get(k).cloned().unwrap_or_default()
    }

    pub fn lead(&self) -> Option<&ParamExpr> {
        self.coeffs.last()
    }

    pub fn scale(&self, c: &ParamExpr) -> Self {
        Self::from_coeffs(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn eval(&self, x: &ParamExpr) -> ParamExpr {
        let mut acc = ParamExpr::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * x) + c;
        }
        acc
    }

    pub fn eval_int(&self, n: i64) -> ParamExpr {
        self.eval(&ParamExpr::from_int(n))
    }

    /// Numeric evaluation of coefficients at `env` and the indeterminate at `n`.
    pub fn eval_numeric(&self, n: &BigRational, env: &ParamValues) -> Result<BigRational, SymbolicError> {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * n + c.eval(env)?;
        }
        Ok(acc)
    }

    /// Coefficient-wise partial derivative with respect to a parameter.
    pub fn diff_param(&self, p: &str) -> Self {
        Self::from_coeffs(self.coeffs.iter().map(|c| c.diff(p)).collect())
    }

    /// Derivative with respect to the indeterminate.
    pub fn derivative(&self) -> Self {
        Self::from_coeffs(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * &ParamExpr::from_int(k as i64))
                .collect(),
        )
    }

    /// `P(x + k)`.
    pub fn shift(&self, k: i64) -> Self {
        let step = Self::from_coeffs(vec![ParamExpr::from_int(k), ParamExpr::one()]);
        let mut acc = Self::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * &step) + &Self::constant(c.clone());
        }
        acc
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Euclidean division; fails on a zero divisor.
    pub fn div_rem(&self, d: &UPoly) -> Result<(UPoly, UPoly), SymbolicError> {
        let dd = d.degree().ok_or(SymbolicError::DivisionByZero)?;
        let inv = d.coeffs[dd].recip()?;
        let mut rem = self.coeffs.clone();
        let mut quot = vec![ParamExpr::zero(); self.coeffs.len().saturating_sub(dd)];
        while rem.len() > dd && !rem.is_empty() {
            let k = rem.len() - 1 - dd;
            let c = &rem[rem.len() - 1] * &inv;
            if !c.is_zero() {
                for (i, dc) in d.coeffs.iter().enumerate() {
                    rem[k + i] = &rem[k + i] - &(&c * dc);
                }
            }
            quot[k] = c;
            rem.pop();
            while rem.last().is_some_and(|c| c.is_zero()) {
                rem.pop();
            }
        }
        Ok((UPoly::from_coeffs(quot), UPoly::from_coeffs(rem)))
    }

    /// Whether all coefficients are parameter-free rationals.
    pub fn is_numeric(&self) -> bool {
        self.coeffs.iter().all(|c| c.as_rational().is_some())
    }

    /// Renders with the given indeterminate name, ascending degree, every
    /// coefficient parenthesized unless atomic.
    pub fn render(&self, var: &str) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let s = match k {
                0 => c.parenthesized(),
                1 if c.is_one() => var.to_string(),
                1 => format!("{}*{var}", c.parenthesized()),
                _ if c.is_one() => format!("{var}^{k}"),
                _ => format!("{}*{var}^{k}", c.parenthesized()),
            };
            parts.push(s);
        }
        parts.join(" + ")
    }
}

impl Add for &UPoly {
    type Output = UPoly;
    fn add(self, rhs: &UPoly) -> UPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        UPoly::from_coeffs((0..n).map(|k| &self.coeff(k) + &rhs.coeff(k)).collect())
    }
}

impl Sub for &UPoly {
    type Output = UPoly;
    fn sub(self, rhs: &UPoly) -> UPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        UPoly::from_coeffs((0..n).map(|k| &self.coeff(k) - &rhs.coeff(k)).collect())
    }
}

impl Neg for &UPoly {
    type Output = UPoly;
    fn neg(self) -> UPoly {
        UPoly {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Mul for &UPoly {
    type Output = UPoly;
    fn mul(self, rhs: &UPoly) -> UPoly {
        if self.is_zero() || rhs.is_zero() {
            return UPoly::zero();
        }
        let mut out = vec![ParamExpr::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = &out[i + j] + &(a * b);
            }
        }
        UPoly::from_coeffs(out)
    }
}

impl fmt::Display for UPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render("n"))
    }
}

impl fmt::Debug for UPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(n: i64) -> ParamExpr {
        ParamExpr::from_int(n)
    }

    #[test]
    fn division_by_linear_factor() {
        // (x - 1)(x - 2) = x^2 - 3x + 2
        let q = UPoly::from_coeffs(vec![c(2), c(-3), c(1)]);
        let d = UPoly::from_coeffs(vec![c(-1), c(1)]);
        let (quot, rem) = q.div_rem(&d).unwrap();
        assert!(rem.is_zero());
        assert_eq!(quot, UPoly::from_coeffs(vec![c(-2), c(1)]));
    }

    #[test]
    fn shift_matches_evaluation() {
        let q = UPoly::from_coeffs(vec![c(1), c(2), c(3)]);
        let s = q.shift(2);
        for n in 0..5 {
            assert_eq!(s.eval_int(n), q.eval_int(n + 2));
        }
    }
}
