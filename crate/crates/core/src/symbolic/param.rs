use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use super::monomial::{Monomial, Sym};
use super::poly::{Coeff, MPoly};
use super::SymbolicError;

/// Numeric assignment of parameters.
pub type ParamValues = BTreeMap<String, BigRational>;

/// Exact rational function in the symbolic parameters.
///
/// Always stored reduced: numerator and denominator share no nonconstant
/// factor and the denominator's leading coefficient is 1, so equal values are
/// structurally equal.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ParamExpr {
    num: MPoly,
    den: MPoly,
}

impl ParamExpr {
    pub fn zero() -> Self {
        Self {
            num: MPoly::zero(),
            den: MPoly::one(),
        }
    }

    pub fn one() -> Self {
        Self::from_rational(BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(BigRational::from_integer(n.into()))
    }

    pub fn from_ratio(n: i64, d: i64) -> Self {
        Self::from_rational(BigRational::new(n.into(), d.into()))
    }

    pub fn from_rational(q: BigRational) -> Self {
        Self {
            num: MPoly::constant(q),
            den: MPoly::one(),
        }
    }

    pub fn param(name: &str) -> Self {
        Self {
            num: MPoly::var(name),
            den: MPoly::one(),
        }
    }

    pub fn from_poly(p: MPoly) -> Self {
        Self {
            num: p,
            den: MPoly::one(),
        }
    }

    /// Builds `num / den` in canonical form.
    pub fn new(num: MPoly, den: MPoly) -> Result<Self, SymbolicError> {
        if den.is_zero() {
            return Err(SymbolicError::DivisionByZero);
        }
        Ok(Self::reduce(num, den))
    }

    fn reduce(num: MPoly, den: MPoly) -> Self {
        if num.is_zero() {
            return Self::zero();
        }
        if let Some(c) = den.as_constant() {
            return Self {
                num: num.scale(&c.recip()),
                den: MPoly::one(),
            };
        }
        let g = num.gcd(&den);
        let (num, den) = if g.as_constant().is_some() {
            (num, den)
        } else {
            (
                num.div_exact(&g).expect("gcd divides numerator"),
                den.div_exact(&g).expect("gcd divides denominator"),
            )
        };
        let (lc, den) = den.monic();
        Self {
            num: num.scale(&lc.recip()),
            den,
        }
    }

    pub fn numer(&self) -> &MPoly {
        &self.num
    }

    pub fn denom(&self) -> &MPoly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.as_constant().is_some() && self.num.as_constant().is_some_and(|c| c.is_one())
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        if self.den.as_constant().is_some() {
            self.num.as_constant()
        } else {
            None
        }
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.as_constant().is_some()
    }

    pub fn params(&self) -> BTreeSet<Sym> {
        let mut s = self.num.vars();
        s.extend(self.den.vars());
        s
    }

    pub fn contains_param(&self, name: &str) -> bool {
        self.num.contains_var(name) || self.den.contains_var(name)
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self, SymbolicError> {
        if other.is_zero() {
            return Err(SymbolicError::DivisionByZero);
        }
        Ok(Self::reduce(&self.num * &other.den, &self.den * &other.num))
    }

    pub fn recip(&self) -> Result<Self, SymbolicError> {
        Self::one().checked_div(self)
    }

    pub fn pow(&self, k: u32) -> Self {
        Self {
            num: self.num.pow(k),
            den: self.den.pow(k),
        }
    }

    pub fn powi(&self, k: i32) -> Result<Self, SymbolicError> {
        if k >= 0 {
            Ok(self.pow(k as u32))
        } else {
            Ok(self.recip()?.pow(k.unsigned_abs()))
        }
    }

    /// Partial derivative with respect to parameter `p` (quotient rule).
    pub fn diff(&self, p: &str) -> Self {
        if !self.contains_param(p) {
            return Self::zero();
        }
        if self.den.as_constant().is_some() {
            return Self {
                num: self.num.derivative(p),
                den: self.den.clone(),
            };
        }
        let n1 = &(&self.num.derivative(p) * &self.den) - &(&self.num * &self.den.derivative(p));
        Self::reduce(n1, self.den.pow(2))
    }

    /// Evaluates at `env`; fails if a parameter is unassigned or the
    /// denominator vanishes.
    pub fn eval(&self, env: &ParamValues) -> Result<BigRational, SymbolicError> {
        let look = |s: &str| env.get(s).cloned();
        let missing = || {
            let mut all = self.params();
            all.retain(|s| !env.contains_key(s.as_ref()));
            SymbolicError::UnassignedParameter(
                all.iter().next().map(|s| s.to_string()).unwrap_or_default(),
            )
        };
        let d = self.den.eval(&look).ok_or_else(missing)?;
        if d.is_zero() {
            return Err(SymbolicError::SingularAssignment {
                denominator: self.den.to_string(),
            });
        }
        let n = self.num.eval(&look).ok_or_else(missing)?;
        Ok(n / d)
    }

    /// Substitutes values for some parameters, leaving the rest symbolic.
    pub fn partial_eval(&self, env: &ParamValues) -> Result<Self, SymbolicError> {
        let f = |s: &str| env.get(s).map(|q| MPoly::constant(q.clone()));
        let num = self.num.substitute(&f);
        let den = self.den.substitute(&f);
        if den.is_zero() {
            return Err(SymbolicError::SingularAssignment {
                denominator: self.den.to_string(),
            });
        }
        Ok(Self::reduce(num, den))
    }

    /// Renders with surrounding parentheses unless atomic.
    pub fn parenthesized(&self) -> String {
        let s = self.to_string();
        let atomic = self.is_polynomial()
            && match self.num.terms().next() {
                None => true,
                Some((m, c)) => {
                    self.num.len() == 1
                        && !c.is_negative()
                        && (c.is_one() || (m.is_one() && c.is_integer()))
                }
            };
        if atomic {
            s
        } else {
            format!("({s})")
        }
    }
}

impl Default for ParamExpr {
    fn default() -> Self {
        Self::zero()
    }
}

impl Zero for ParamExpr {
    fn zero() -> Self {
        ParamExpr::zero()
    }
    fn is_zero(&self) -> bool {
        ParamExpr::is_zero(self)
    }
}

impl One for ParamExpr {
    fn one() -> Self {
        ParamExpr::one()
    }
}

impl Coeff for ParamExpr {
    fn add_ref(&self, other: &Self) -> Self {
        self + other
    }
    fn sub_ref(&self, other: &Self) -> Self {
        self - other
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
    fn neg_ref(&self) -> Self {
        -self
    }
    fn from_int(n: i64) -> Self {
        ParamExpr::from_int(n)
    }
}

impl Add for &ParamExpr {
    type Output = ParamExpr;
    fn add(self, rhs: &ParamExpr) -> ParamExpr {
        if rhs.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return rhs.clone();
        }
        if self.den == rhs.den {
            if self.den.as_constant().is_some() {
                return ParamExpr {
                    num: &self.num + &rhs.num,
                    den: self.den.clone(),
                };
            }
            return ParamExpr::reduce(&self.num + &rhs.num, self.den.clone());
        }
        ParamExpr::reduce(
            &(&self.num * &rhs.den) + &(&rhs.num * &self.den),
            &self.den * &rhs.den,
        )
    }
}

impl Sub for &ParamExpr {
    type Output = ParamExpr;
    fn sub(self, rhs: &ParamExpr) -> ParamExpr {
        self + &(-rhs)
    }
}

impl Neg for &ParamExpr {
    type Output = ParamExpr;
    fn neg(self) -> ParamExpr {
        ParamExpr {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

impl Mul for &ParamExpr {
    type Output = ParamExpr;
    fn mul(self, rhs: &ParamExpr) -> ParamExpr {
        if self.is_zero() || rhs.is_zero() {
            return ParamExpr::zero();
        }
        if self.den.as_constant().is_some() && rhs.den.as_constant().is_some() {
            return ParamExpr {
                num: &self.num * &rhs.num,
                den: MPoly::one(),
            };
        }
        ParamExpr::reduce(&self.num * &rhs.num, &self.den * &rhs.den)
    }
}

macro_rules! owned_ops {
    ($t:ty) => {
        impl Add for $t {
            type Output = $t;
            fn add(self, rhs: $t) -> $t {
                &self + &rhs
            }
        }
        impl Sub for $t {
            type Output = $t;
            fn sub(self, rhs: $t) -> $t {
                &self - &rhs
            }
        }
        impl Mul for $t {
            type Output = $t;
            fn mul(self, rhs: $t) -> $t {
                &self * &rhs
            }
        }
        impl Neg for $t {
            type Output = $t;
            fn neg(self) -> $t {
                -&self
            }
        }
    };
}

owned_ops!(ParamExpr);

impl fmt::Display for ParamExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_polynomial() {
            return write!(f, "{}", self.num);
        }
        // clear rational coefficients so both sides print with integers
        let (cn, pn) = self.num.primitive_part();
        let (cd, pd) = self.den.primitive_part();
        let ratio = cn / cd;
        let num = pn.scale(&BigRational::from_integer(ratio.numer().clone()));
        let den = pd.scale(&BigRational::from_integer(ratio.denom().clone()));
        let num = if num.len() > 1 {
            format!("({num})")
        } else {
            num.to_string()
        };
        if den.len() == 1 && den.lead().is_some_and(|(m, c)| m.is_one() || c.is_one()) {
            write!(f, "{num}/{den}")
        } else {
            write!(f, "{num}/({den})")
        }
    }
}

impl fmt::Debug for ParamExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Serialize for ParamExpr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl From<i64> for ParamExpr {
    fn from(n: i64) -> Self {
        ParamExpr::from_int(n)
    }
}

impl From<BigRational> for ParamExpr {
    fn from(q: BigRational) -> Self {
        ParamExpr::from_rational(q)
    }
}

/// Convenience for monomials over parameters.
pub fn param_monomial(name: &str, exp: u32) -> ParamExpr {
    ParamExpr::from_poly(MPoly::term(Monomial::var_pow(name, exp), BigRational::one()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> ParamExpr {
        ParamExpr::param(s)
    }
    fn r(n: i64, d: i64) -> ParamExpr {
        ParamExpr::from_ratio(n, d)
    }

    #[test]
    fn halving_sum() {
        let e = &(&p("p") + &p("p").pow(2)) * &r(1, 2);
        assert_eq!(e.to_string(), "1/2*p^2 + 1/2*p");
    }

    #[test]
    fn self_division_is_one() {
        let a = &(&p("a") + &r(3, 1)) * &p("b");
        assert!(a.checked_div(&a).unwrap().is_one());
        assert!(a.checked_div(&ParamExpr::zero()).is_err());
    }

    #[test]
    fn ring_identity_cancels() {
        let d = p("d");
        let vp = p("vp");
        let lhs = &d - &(&d * &vp);
        let rhs = &d * &(&ParamExpr::one() - &vp);
        assert!((&lhs - &rhs).is_zero());
    }

    #[test]
    fn derivatives() {
        let e = &(&p("p") + &p("p").pow(2)) * &r(1, 2);
        let expect = &(&ParamExpr::one() + &(&r(2, 1) * &p("p"))) * &r(1, 2);
        assert_eq!(e.diff("p"), expect);
        assert!(p("c").diff("p").is_zero());
        let inv = p("p").recip().unwrap();
        assert_eq!(inv.diff("p"), -&p("p").pow(2).recip().unwrap());
    }

    #[test]
    fn canonical_fraction() {
        let x = p("x");
        let a = (&(&x * &x) - &ParamExpr::one())
            .checked_div(&(&x - &ParamExpr::one()))
            .unwrap();
        assert_eq!(a, &x + &ParamExpr::one());
        let b = ParamExpr::one().checked_div(&(&r(2, 1) * &x)).unwrap();
        assert_eq!(b.to_string(), "1/(2*x)");
    }

    #[test]
    fn singular_evaluation() {
        let e = ParamExpr::one().checked_div(&(&p("x") - &r(1, 1))).unwrap();
        let mut env = ParamValues::new();
        env.insert("x".into(), BigRational::one());
        assert!(matches!(e.eval(&env), Err(SymbolicError::SingularAssignment { .. })));
    }
}
