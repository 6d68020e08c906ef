use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::monomial::{Monomial, Sym};

/// Coefficient ring operations needed by [`Poly`].
pub trait Coeff: Clone + PartialEq + fmt::Debug + Zero + One {
    fn add_ref(&self, other: &Self) -> Self;
    fn sub_ref(&self, other: &Self) -> Self;
    fn mul_ref(&self, other: &Self) -> Self;
    fn neg_ref(&self) -> Self;
    fn from_int(n: i64) -> Self;
}

impl Coeff for BigRational {
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
        BigRational::from_integer(n.into())
    }
}

/// Sparse multivariate polynomial keyed by deg-lex ordered monomials.
/// No stored coefficient is zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Poly<C> {
    terms: BTreeMap<Monomial, C>,
}

impl<C: Coeff> Default for Poly<C> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<C: Coeff> Poly<C> {
    pub fn zero() -> Self {
        Self {
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        Self::constant(C::one())
    }

    pub fn constant(c: C) -> Self {
        Self::term(Monomial::one(), c)
    }

    pub fn term(m: Monomial, c: C) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Self { terms }
    }

    pub fn var(name: &str) -> Self {
        Self::term(Monomial::var(name), C::one())
    }

    pub fn from_terms(iter: impl IntoIterator<Item = (Monomial, C)>) -> Self {
        let mut p = Self::zero();
        for (m, c) in iter {
            p.add_term(m, c);
        }
        p
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

    /// Coefficient of the constant monomial if the polynomial is constant.
    pub fn as_constant(&self) -> Option<C> {
        match self.terms.len() {
            0 => Some(C::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &C)> + ExactSizeIterator {
        self.terms.iter()
    }

    pub fn into_terms(self) -> impl Iterator<Item = (Monomial, C)> {
        self.terms.into_iter()
    }

    pub fn coeff(&self, m: &Monomial) -> C {
        self.terms.get(m).cloned().unwrap_or_else(C::zero)
    }

    /// Greatest term in deg-lex order.
    pub fn lead(&self) -> Option<(&Monomial, &C)> {
        self.terms.iter().next_back()
    }

    pub fn add_term(&mut self, m: Monomial, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get().add_ref(&c);
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &Self, scale: &C, shift: &Monomial) {
        for (m, c) in &other.terms {
            self.add_term(m.mul(shift), c.mul_ref(scale));
        }
    }

    pub fn scale(&self, c: &C) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self
                .terms
                .iter()
                .map(|(m, a)| (m.clone(), a.mul_ref(c)))
                .filter(|(_, a)| !a.is_zero())
                .collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Self {
        Self {
            terms: self.terms.iter().map(|(k, c)| (k.mul(m), c.clone())).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut result = Self::one();
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = &result * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        result
    }

    pub fn vars(&self) -> BTreeSet<Sym> {
        let mut out = BTreeSet::new();
        for m in self.terms.keys() {
            for (s, _) in m.factors() {
                out.insert(s.clone());
            }
        }
        out
    }

    pub fn contains_var(&self, name: &str) -> bool {
        self.terms.keys().any(|m| m.contains(name))
    }

    pub fn degree_in(&self, name: &str) -> u32 {
        self.terms.keys().map(|m| m.exp(name)).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    /// Coefficients with respect to `name`: exponent → polynomial free of `name`.
    pub fn coeffs_in(&self, name: &str) -> BTreeMap<u32, Self> {
        let mut out: BTreeMap<u32, Self> = BTreeMap::new();
        for (m, c) in &self.terms {
            let (rest, k) = m.split(name);
            out.entry(k).or_default().add_term(rest, c.clone());
        }
        out
    }

    pub fn derivative(&self, name: &str) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let (rest, k) = m.split(name);
            if k > 0 {
                let m2 = rest.mul(&Monomial::var_pow(name, k - 1));
                out.add_term(m2, c.mul_ref(&C::from_int(k as i64)));
            }
        }
        out
    }

    /// Replaces each variable for which `f` returns a polynomial; other
    /// variables are kept.
    pub fn substitute(&self, f: &dyn Fn(&str) -> Option<Self>) -> Self {
        let mut cache: BTreeMap<(Sym, u32), Self> = BTreeMap::new();
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let mut acc = Self::constant(c.clone());
            let mut kept = Monomial::one();
            for (s, e) in m.factors() {
                match f(s) {
                    Some(r) => {
                        let key = (s.clone(), *e);
                        let pw = cache.entry(key).or_insert_with(|| r.pow(*e)).clone();
                        acc = &acc * &pw;
                    }
                    None => kept = kept.mul(&Monomial::var_pow(s, *e)),
                }
            }
            for (m2, c2) in acc.terms {
                out.add_term(m2.mul(&kept), c2);
            }
        }
        out
    }

    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> Poly<D> {
        Poly::from_terms(self.terms.iter().map(|(m, c)| (m.clone(), f(c))))
    }
}

impl<C: Coeff> Add for &Poly<C> {
    type Output = Poly<C>;
    fn add(self, rhs: &Poly<C>) -> Poly<C> {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl<C: Coeff> Sub for &Poly<C> {
    type Output = Poly<C>;
    fn sub(self, rhs: &Poly<C>) -> Poly<C> {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.neg_ref());
        }
        out
    }
}

impl<C: Coeff> Neg for &Poly<C> {
    type Output = Poly<C>;
    fn neg(self) -> Poly<C> {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c.neg_ref())).collect(),
        }
    }
}

impl<C: Coeff> Mul for &Poly<C> {
    type Output = Poly<C>;
    fn mul(self, rhs: &Poly<C>) -> Poly<C> {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.add_term(m1.mul(m2), c1.mul_ref(c2));
            }
        }
        out
    }
}

impl<C: Coeff> fmt::Debug for Poly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.terms.iter()).finish()
    }
}

/// Polynomial with exact rational coefficients (used for parameter
/// numerators and denominators).
pub type MPoly = Poly<BigRational>;

impl MPoly {
    pub fn from_rational(q: BigRational) -> Self {
        Self::constant(q)
    }

    pub fn from_int(n: i64) -> Self {
        Self::constant(BigRational::from_integer(n.into()))
    }

    /// Evaluates at a full assignment; `None` if a variable is unassigned.
    pub fn eval(&self, env: &dyn Fn(&str) -> Option<BigRational>) -> Option<BigRational> {
        let mut total = BigRational::zero();
        let mut cache: BTreeMap<&str, BigRational> = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (s, e) in m.factors() {
                let v = match cache.get(s.as_ref()) {
                    Some(v) => v.clone(),
                    None => {
                        let v = env(s)?;
                        cache.insert(s.as_ref(), v.clone());
                        v
                    }
                };
                t *= pow_rat(&v, *e);
            }
            total += t;
        }
        Some(total)
    }

    /// Returns (c, p) with self = c·p, p having integer coprime coefficients
    /// and a positive leading coefficient. Zero maps to (0, 0).
    pub fn primitive_part(&self) -> (BigRational, MPoly) {
        if self.is_zero() {
            return (BigRational::zero(), MPoly::zero());
        }
        let mut lcm_den = BigInt::one();
        for c in self.terms.values() {
            lcm_den = lcm_den.lcm(c.denom());
        }
        let mut g = BigInt::zero();
        for c in self.terms.values() {
            let n = c.numer() * (&lcm_den / c.denom());
            g = g.gcd(&n);
        }
        let lead_neg = self.lead().map(|(_, c)| c.is_negative()).unwrap_or(false);
        if lead_neg {
            g = -g;
        }
        let content = BigRational::new(g.clone(), lcm_den.clone());
        let scale = BigRational::new(lcm_den, g);
        (content, self.scale(&scale))
    }

    /// Divides by the leading coefficient.
    pub fn monic(&self) -> (BigRational, MPoly) {
        match self.lead() {
            None => (BigRational::zero(), MPoly::zero()),
            Some((_, c)) => {
                let c = c.clone();
                let inv = c.recip();
                (c, self.scale(&inv))
            }
        }
    }

    /// Exact division; `None` when `d` does not divide `self`.
    pub fn div_exact(&self, d: &MPoly) -> Option<MPoly> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(MPoly::zero());
        }
        let (dm, dc) = d.lead().map(|(m, c)| (m.clone(), c.clone()))?;
        if let Some(c) = d.as_constant() {
            return Some(self.scale(&c.recip()));
        }
        let inv = dc.recip();
        let mut rem = self.clone();
        let mut quot = MPoly::zero();
        while let Some((rm, rc)) = rem.lead().map(|(m, c)| (m.clone(), c.clone())) {
            let qm = rm.div(&dm)?;
            let qc = &rc * &inv;
            rem.add_scaled(d, &(-qc.clone()), &qm);
            quot.add_term(qm, qc);
        }
        Some(quot)
    }

    fn main_var(&self, other: &MPoly) -> Option<Sym> {
        let a = self.vars();
        let b = other.vars();
        a.intersection(&b).next().cloned().or_else(|| a.union(&b).next().cloned())
    }

    /// Greatest common divisor, normalized to a primitive integer polynomial
    /// with positive leading coefficient. gcd(0, 0) = 0.
    pub fn gcd(&self, other: &MPoly) -> MPoly {
        if self.is_zero() {
            return other.primitive_part().1;
        }
        if other.is_zero() {
            return self.primitive_part().1;
        }
        if self.as_constant().is_some() || other.as_constant().is_some() {
            return MPoly::one();
        }
        let (_, a) = self.primitive_part();
        let (_, b) = other.primitive_part();
        if a == b {
            return a;
        }
        let Some(v) = a.main_var(&b) else {
            return MPoly::one();
        };
        if !a.contains_var(&v) {
            return content_gcd_with(&b, &v, &a);
        }
        if !b.contains_var(&v) {
            return content_gcd_with(&a, &v, &b);
        }
        let ca = content_in(&a, &v);
        let cb = content_in(&b, &v);
        let pa = a.div_exact(&ca).expect("content divides");
        let pb = b.div_exact(&cb).expect("content divides");
        let c = ca.gcd(&cb);
        let g = prs_gcd(&pa, &pb, &v);
        let g = content_free(&g, &v);
        (&c * &g).primitive_part().1
    }

    /// True if no variable other than `name` occurs.
    pub fn is_univariate_in(&self, name: &str) -> bool {
        self.terms.keys().all(|m| m.vars().all(|v| v == name))
    }
}

/// gcd of `p`'s coefficients in `v` together with `q` (which is free of `v`).
fn content_gcd_with(p: &MPoly, v: &str, q: &MPoly) -> MPoly {
    let mut g = q.clone();
    for c in p.coeffs_in(v).values() {
        g = g.gcd(c);
        if g.as_constant().is_some() {
            return MPoly::one();
        }
    }
    g
}

fn content_in(p: &MPoly, v: &str) -> MPoly {
    let mut g = MPoly::zero();
    for c in p.coeffs_in(v).values() {
        g = g.gcd(c);
        if g.as_constant().is_some() {
            return MPoly::one();
        }
    }
    g
}

fn content_free(p: &MPoly, v: &str) -> MPoly {
    let c = content_in(p, v);
    if c.as_constant().is_some() {
        return p.primitive_part().1;
    }
    p.div_exact(&c).expect("content divides").primitive_part().1
}

/// Pseudo-remainder of `a` by `b` with respect to `v`.
fn prem(a: &MPoly, b: &MPoly, v: &str) -> MPoly {
    let db = b.degree_in(v);
    let lb = b.coeffs_in(v).remove(&db).unwrap_or_default();
    let mut r = a.clone();
    while !r.is_zero() && r.degree_in(v) >= db {
        let dr = r.degree_in(v);
        let lr = r.coeffs_in(v).remove(&dr).unwrap_or_default();
        let shift = Monomial::var_pow(v, dr - db);
        r = &(&r * &lb) - &(&lr * &b.mul_monomial(&shift));
    }
    r
}

/// Primitive polynomial remainder sequence gcd in the main variable `v`.
fn prs_gcd(a: &MPoly, b: &MPoly, v: &str) -> MPoly {
    let (mut r0, mut r1) = if a.degree_in(v) >= b.degree_in(v) {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    };
    loop {
        if r1.is_zero() {
            return r0;
        }
        if r1.degree_in(v) == 0 {
            return MPoly::one();
        }
        let r = prem(&r0, &r1, v);
        r0 = r1;
        r1 = if r.is_zero() { r } else { content_free(&r, v) };
    }
}

pub fn pow_rat(q: &BigRational, e: u32) -> BigRational {
    let mut result = BigRational::one();
    let mut base = q.clone();
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            result *= &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Formats a rational as `n` or `n/d`.
pub fn fmt_rat(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

impl fmt::Display for MPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if m.is_one() {
                write!(f, "{}", fmt_rat(&a))?;
            } else if a.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{}*{m}", fmt_rat(&a))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> MPoly {
        MPoly::var(s)
    }
    fn c(n: i64) -> MPoly {
        MPoly::from_int(n)
    }

    #[test]
    fn arithmetic_and_display() {
        let p = &(&v("x") + &c(1)) * &(&v("x") - &c(1));
        assert_eq!(p.to_string(), "x^2 - 1");
        let q = &v("d") - &(&v("d") * &v("vp"));
        assert_eq!(q.to_string(), "-d*vp + d");
    }

    #[test]
    fn exact_division() {
        let a = &v("x") + &v("y");
        let b = &v("x") - &v("y");
        let p = &a * &b;
        assert_eq!(p.div_exact(&a), Some(b.clone()));
        assert_eq!(p.div_exact(&(&v("x") + &c(2))), None);
    }

    #[test]
    fn gcd_multivariate() {
        let a = &v("x") + &v("y");
        let b = &(&v("x") * &v("z")) - &c(3);
        let g = &a * &c(2);
        let p = &(&g * &b) * &v("y");
        let q = &g * &(&v("z") + &c(1));
        assert_eq!(p.gcd(&q), a);
        assert_eq!(v("x").gcd(&v("y")), MPoly::one());
    }

    #[test]
    fn gcd_univariate_repeated() {
        let a = (&v("x") - &c(1)).pow(2);
        let b = &(&v("x") - &c(1)) * &(&v("x") + &c(3));
        assert_eq!(a.gcd(&b), &v("x") - &c(1));
    }
}
