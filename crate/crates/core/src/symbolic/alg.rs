use std::fmt;
use std::ops::{Add, Mul};

use num_traits::{One, Zero};

use super::param::ParamExpr;
use super::poly::Coeff;
use super::SymbolicError;

/// Coefficient field with inverses.
pub trait Field: Coeff {
    fn inv(&self) -> Result<Self, SymbolicError>;
}

impl Field for ParamExpr {
    fn inv(&self) -> Result<Self, SymbolicError> {
        self.recip()
    }
}

/// Element `rat + irr·√D` of a quadratic extension of the parameter field.
///
/// Elements with `irr = 0` carry no radicand and mix freely with any
/// extension. Two elements with irrational parts must share the radicand.
#[derive(Clone)]
pub struct AlgElem {
    pub rat: ParamExpr,
    pub irr: ParamExpr,
    radicand: Option<ParamExpr>,
}

impl AlgElem {
    pub fn from_rat(rat: ParamExpr) -> Self {
        Self {
            rat,
            irr: ParamExpr::zero(),
            radicand: None,
        }
    }

    pub fn new(rat: ParamExpr, irr: ParamExpr, radicand: &ParamExpr) -> Self {
        if irr.is_zero() {
            return Self::from_rat(rat);
        }
        Self {
            rat,
            irr,
            radicand: Some(radicand.clone()),
        }
    }

    pub fn radicand(&self) -> Option<&ParamExpr> {
        self.radicand.as_ref()
    }

    pub fn is_rational(&self) -> bool {
        self.irr.is_zero()
    }

    fn join(&self, other: &Self) -> Option<ParamExpr> {
        match (&self.radicand, &other.radicand) {
            (Some(a), Some(b)) => {
                assert_eq!(a, b, "mixed quadratic extensions");
                Some(a.clone())
            }
            (Some(a), None) | (None, Some(a)) => Some(a.clone()),
            (None, None) => None,
        }
    }

    fn build(rat: ParamExpr, irr: ParamExpr, d: Option<ParamExpr>) -> Self {
        match d {
            Some(d) if !irr.is_zero() => Self {
                rat,
                irr,
                radicand: Some(d),
            },
            _ => Self::from_rat(rat),
        }
    }

    pub fn conj(&self) -> Self {
        Self::build(self.rat.clone(), -&self.irr, self.radicand.clone())
    }

    /// `rat² − irr²·D`.
    pub fn norm(&self) -> ParamExpr {
        match &self.radicand {
            None => &self.rat * &self.rat,
            Some(d) => &(&self.rat * &self.rat) - &(&(&self.irr * &self.irr) * d),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut result = Self::from_rat(ParamExpr::one());
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul_ref(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul_ref(&base);
            }
        }
        result
    }

    /// Partial derivative, treating `√D` as `√D(p)`.
    pub fn diff(&self, p: &str) -> Self {
        match &self.radicand {
            None => Self::from_rat(self.rat.diff(p)),
            Some(d) => {
                // ∂(b√D) = ∂b·√D + b·∂D/(2D)·√D
                let dd = d.diff(p);
                let extra = if dd.is_zero() {
                    ParamExpr::zero()
                } else {
                    let two_d = d * &ParamExpr::from_int(2);
                    &(&self.irr * &dd) * &two_d.recip().expect("radicand is nonzero")
                };
                Self::build(self.rat.diff(p), &self.irr.diff(p) + &extra, Some(d.clone()))
            }
        }
    }
}

impl PartialEq for AlgElem {
    fn eq(&self, other: &Self) -> bool {
        self.rat == other.rat && self.irr == other.irr
    }
}

impl fmt::Debug for AlgElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.radicand {
            None => write!(f, "{}", self.rat),
            Some(d) => write!(f, "{} + {}*sqrt({})", self.rat, self.irr.parenthesized(), d),
        }
    }
}

impl Zero for AlgElem {
    fn zero() -> Self {
        Self::from_rat(ParamExpr::zero())
    }
    fn is_zero(&self) -> bool {
        self.rat.is_zero() && self.irr.is_zero()
    }
}

impl One for AlgElem {
    fn one() -> Self {
        Self::from_rat(ParamExpr::one())
    }
}

impl Add for AlgElem {
    type Output = AlgElem;
    fn add(self, rhs: AlgElem) -> AlgElem {
        self.add_ref(&rhs)
    }
}

impl Mul for AlgElem {
    type Output = AlgElem;
    fn mul(self, rhs: AlgElem) -> AlgElem {
        self.mul_ref(&rhs)
    }
}

impl Coeff for AlgElem {
    fn add_ref(&self, other: &Self) -> Self {
        Self::build(&self.rat + &other.rat, &self.irr + &other.irr, self.join(other))
    }
    fn sub_ref(&self, other: &Self) -> Self {
        Self::build(&self.rat - &other.rat, &self.irr - &other.irr, self.join(other))
    }
    fn mul_ref(&self, other: &Self) -> Self {
        let d = self.join(other);
        let mut rat = &self.rat * &other.rat;
        if let Some(d) = &d {
            if !self.irr.is_zero() && !other.irr.is_zero() {
                rat = &rat + &(&(&self.irr * &other.irr) * d);
            }
        }
        let irr = &(&self.rat * &other.irr) + &(&self.irr * &other.rat);
        Self::build(rat, irr, d)
    }
    fn neg_ref(&self) -> Self {
        Self::build(-&self.rat, -&self.irr, self.radicand.clone())
    }
    fn from_int(n: i64) -> Self {
        Self::from_rat(ParamExpr::from_int(n))
    }
}

impl Field for AlgElem {
    fn inv(&self) -> Result<Self, SymbolicError> {
        let n = self.norm().recip()?;
        let c = self.conj();
        Ok(Self::build(&c.rat * &n, &c.irr * &n, c.radicand))
    }
}

/// Solves `m·x = rhs` by Gaussian elimination; fails if `m` is singular.
pub fn solve_linear<F: Field>(m: Vec<Vec<F>>, rhs: Vec<F>) -> Result<Vec<F>, SymbolicError> {
    let cols = rhs.into_iter().map(|r| vec![r]).collect();
    Ok(solve_linear_multi(m, cols)?.into_iter().map(|mut r| r.remove(0)).collect())
}

/// Solves `m·X = B` for several right-hand sides at once; row `i` of `b`
/// holds the `i`-th entry of every right-hand side.
pub fn solve_linear_multi<F: Field>(mut m: Vec<Vec<F>>, mut b: Vec<Vec<F>>) -> Result<Vec<Vec<F>>, SymbolicError> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .find(|&r| !m[r][col].is_zero())
            .ok_or(SymbolicError::SingularSystem)?;
        m.swap(col, piv);
        b.swap(col, piv);
        let inv = m[col][col].inv()?;
        for c in col..n {
            m[col][c] = m[col][c].mul_ref(&inv);
        }
        for v in b[col].iter_mut() {
            *v = v.mul_ref(&inv);
        }
        for r in 0..n {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let f = m[r][col].clone();
            for c in col..n {
                let t = f.mul_ref(&m[col][c]);
                m[r][c] = m[r][c].sub_ref(&t);
            }
            for k in 0..b[r].len() {
                let t = f.mul_ref(&b[col][k]);
                b[r][k] = b[r][k].sub_ref(&t);
            }
        }
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt2_arithmetic() {
        let two = ParamExpr::from_int(2);
        let s = AlgElem::new(ParamExpr::zero(), ParamExpr::one(), &two);
        let sq = s.mul_ref(&s);
        assert!(sq.is_rational());
        assert_eq!(sq.rat, two);
        let a = AlgElem::new(ParamExpr::one(), ParamExpr::one(), &two);
        let prod = a.mul_ref(&a.inv().unwrap());
        assert!(prod == AlgElem::one());
    }

    #[test]
    fn small_linear_system() {
        let c = |n| ParamExpr::from_int(n);
        let m = vec![vec![c(2), c(1)], vec![c(1), c(3)]];
        let x = solve_linear(m, vec![c(5), c(10)]).unwrap();
        assert_eq!(x, vec![c(1), c(3)]);
    }
}
