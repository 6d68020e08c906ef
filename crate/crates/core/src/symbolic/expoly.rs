use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;
use serde_json::{json, Value};

use super::alg::{AlgElem, Field};
use super::param::{ParamExpr, ParamValues};
use super::poly::Coeff;
use super::upoly::CounterPoly;
use super::SymbolicError;

/// Base of an exponential term.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum EigenValue {
    Rational(ParamExpr),
    /// Root of the irreducible `x² + b·x + c`; index 0 is `(−b + √D)/2`,
    /// index 1 is `(−b − √D)/2` with `D = b² − 4c`.
    QuadraticRoot { b: ParamExpr, c: ParamExpr, index: u8 },
}

impl EigenValue {
    pub fn one() -> Self {
        EigenValue::Rational(ParamExpr::one())
    }

    pub fn radicand(&self) -> Option<ParamExpr> {
        match self {
            EigenValue::Rational(_) => None,
            EigenValue::QuadraticRoot { b, c, .. } => Some(&(b * b) - &(c * &ParamExpr::from_int(4))),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, EigenValue::Rational(r) if r.is_zero())
    }

    /// The eigenvalue as an element of its quadratic extension.
    pub fn as_alg(&self) -> AlgElem {
        match self {
            EigenValue::Rational(r) => AlgElem::from_rat(r.clone()),
            EigenValue::QuadraticRoot { b, index, .. } => {
                let half = ParamExpr::from_ratio(1, 2);
                let irr = if *index == 0 { half.clone() } else { -&half };
                AlgElem::new(-&(b * &half), irr, &self.radicand().expect("quadratic"))
            }
        }
    }

    pub fn conjugate(&self) -> Self {
        match self {
            EigenValue::Rational(_) => self.clone(),
            EigenValue::QuadraticRoot { b, c, index } => EigenValue::QuadraticRoot {
                b: b.clone(),
                c: c.clone(),
                index: 1 - index,
            },
        }
    }

    pub fn render(&self) -> String {
        match self {
            EigenValue::Rational(r) => r.to_string(),
            EigenValue::QuadraticRoot { b, .. } => {
                let d = self.radicand().expect("quadratic");
                let sign = if self.as_alg().irr.is_negative_const() { "-" } else { "+" };
                let half_b = -&(b * &ParamExpr::from_ratio(1, 2));
                format!("{} {sign} 1/2*sqrt({d})", half_b.parenthesized())
            }
        }
    }

    fn sort_key(&self) -> (u8, String) {
        match self {
            EigenValue::Rational(r) => (0, r.to_string()),
            EigenValue::QuadraticRoot { .. } => (1, self.render()),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            EigenValue::Rational(r) => json!({"kind": "rational", "value": r.to_string()}),
            EigenValue::QuadraticRoot { b, c, index } => json!({
                "kind": "quadratic_root",
                "b": b.to_string(),
                "c": c.to_string(),
                "index": index,
                "radicand": self.radicand().map(|d| d.to_string()),
            }),
        }
    }
}

trait NegConst {
    fn is_negative_const(&self) -> bool;
}

impl NegConst for ParamExpr {
    fn is_negative_const(&self) -> bool {
        self.as_rational().is_some_and(|q| q.is_negative())
    }
}

/// One summand `(coeff(n) + surd(n)·√D)·base^n`; `surd` is zero unless the
/// base is a quadratic root with radicand `D`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct ExpTerm {
    pub base: EigenValue,
    pub coeff: CounterPoly,
    pub surd: CounterPoly,
}

impl ExpTerm {
    pub fn rational(base: ParamExpr, coeff: CounterPoly) -> Self {
        Self {
            base: EigenValue::Rational(base),
            coeff,
            surd: CounterPoly::zero(),
        }
    }

    fn is_zero(&self) -> bool {
        self.coeff.is_zero() && self.surd.is_zero()
    }

    /// Coefficient at counter value `n` as an extension element.
    fn coeff_at(&self, n: i64) -> AlgElem {
        match self.base.radicand() {
            None => AlgElem::from_rat(self.coeff.eval_int(n)),
            Some(d) => AlgElem::new(self.coeff.eval_int(n), self.surd.eval_int(n), &d),
        }
    }

    fn value_at(&self, n: usize) -> AlgElem {
        self.coeff_at(n as i64).mul_ref(&self.base.as_alg().pow(n as u32))
    }

    fn render_coeff(&self) -> String {
        if self.surd.is_zero() {
            return format!("({})", self.coeff);
        }
        let d = self.base.radicand().expect("surd term has a radicand");
        format!("({} + ({})*sqrt({d}))", self.coeff, self.surd)
    }
}

/// Exact value of a closed form at a numeric point: `rational + Σ c·√d`.
#[derive(Clone, PartialEq, Debug)]
pub struct EvalValue {
    pub rational: BigRational,
    pub surds: Vec<(BigRational, BigRational)>,
}

impl EvalValue {
    pub fn exact(q: BigRational) -> Self {
        Self {
            rational: q,
            surds: Vec::new(),
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        self.surds.is_empty().then_some(&self.rational)
    }

    pub fn to_f64(&self) -> f64 {
        let mut v = rat_to_f64(&self.rational);
        for (c, d) in &self.surds {
            v += rat_to_f64(c) * rat_to_f64(d).sqrt();
        }
        v
    }
}

impl fmt::Display for EvalValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", super::poly::fmt_rat(&self.rational))?;
        for (c, d) in &self.surds {
            write!(f, " + {}*sqrt({})", super::poly::fmt_rat(c), super::poly::fmt_rat(d))?;
        }
        Ok(())
    }
}

pub fn rat_to_f64(q: &BigRational) -> f64 {
    // scale to keep precision for huge numerators/denominators
    let n = q.numer();
    let d = q.denom();
    match (n.to_f64(), d.to_f64()) {
        (Some(a), Some(b)) if a.is_finite() && b.is_finite() && b != 0.0 => a / b,
        _ => {
            let shift = (n.bits() as i64 - d.bits() as i64) - 60;
            let scaled = if shift > 0 {
                BigRational::new(n.clone(), d.clone() << (shift as usize))
            } else {
                BigRational::new(n.clone() << ((-shift) as usize), d.clone())
            };
            let base = scaled.to_integer().to_f64().unwrap_or(f64::NAN);
            base * 2f64.powi(shift as i32)
        }
    }
}

/// Rational square root if `q` is a perfect square.
pub fn rational_sqrt(q: &BigRational) -> Option<BigRational> {
    if q.is_negative() {
        return None;
    }
    let sn = q.numer().sqrt();
    let sd = q.denom().sqrt();
    (&sn * &sn == *q.numer() && &sd * &sd == *q.denom()).then(|| BigRational::new(sn, sd))
}

/// Closed form `Σ P_k(n)·λ_k^n` valid for `n ≥ prefix.len()`, with explicit
/// values below that threshold.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct ExpPolynomial {
    prefix: Vec<ParamExpr>,
    terms: Vec<ExpTerm>,
}

impl ExpPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: ParamExpr) -> Self {
        Self::new(Vec::new(), vec![ExpTerm::rational(ParamExpr::one(), CounterPoly::constant(c))])
    }

    /// Builds a canonical closed form: equal bases merged, zero terms and
    /// zero eigenvalues dropped, sorted, and the prefix trimmed where the
    /// formula already agrees.
    pub fn new(prefix: Vec<ParamExpr>, terms: Vec<ExpTerm>) -> Self {
        let mut merged: Vec<ExpTerm> = Vec::new();
        for t in terms {
            if t.base.is_zero() {
                continue;
            }
            if let Some(m) = merged.iter_mut().find(|m| m.base == t.base) {
                m.coeff = &m.coeff + &t.coeff;
                m.surd = &m.surd + &t.surd;
            } else {
                merged.push(t);
            }
        }
        merged.retain(|t| !t.is_zero());
        merged.sort_by_cached_key(|t| t.base.sort_key());
        let mut out = Self {
            prefix,
            terms: merged,
        };
        while let Some(last) = out.prefix.last() {
            let n = out.prefix.len() - 1;
            let v = out.formula_at(n);
            if v.is_rational() && v.rat == *last {
                out.prefix.pop();
            } else {
                break;
            }
        }
        out
    }

    pub fn prefix(&self) -> &[ParamExpr] {
        &self.prefix
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    /// Validity threshold `n₀` of the formula part.
    pub fn threshold(&self) -> usize {
        self.prefix.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.prefix.is_empty()
    }

    /// Value of the formula part (ignores the prefix).
    pub fn formula_at(&self, n: usize) -> AlgElem {
        let mut by_radicand: Vec<AlgElem> = Vec::new();
        let mut rational = ParamExpr::zero();
        for t in &self.terms {
            let v = t.value_at(n);
            match v.radicand() {
                None => rational = &rational + &v.rat,
                Some(d) => {
                    rational = &rational + &v.rat;
                    let irr = AlgElem::new(ParamExpr::zero(), v.irr.clone(), d);
                    match by_radicand.iter_mut().find(|g| g.radicand() == Some(d)) {
                        Some(g) => *g = g.add_ref(&irr),
                        None => by_radicand.push(irr),
                    }
                }
            }
        }
        by_radicand.retain(|g| !g.is_zero());
        match by_radicand.first() {
            None => AlgElem::from_rat(rational),
            // independent surds never cancel each other, so one is enough to
            // mark the value as irrational
            Some(g) => AlgElem::new(rational, g.irr.clone(), g.radicand().expect("irrational group")),
        }
    }

    /// Exact symbolic value at `n`.
    pub fn value_at(&self, n: usize) -> Result<ParamExpr, SymbolicError> {
        if n < self.prefix.len() {
            return Ok(self.prefix[n].clone());
        }
        let v = self.formula_at(n);
        if v.is_rational() {
            Ok(v.rat)
        } else {
            Err(SymbolicError::NonRealValue)
        }
    }

    pub fn scale(&self, c: &ParamExpr) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self::new(
            self.prefix.iter().map(|v| v * c).collect(),
            self.terms
                .iter()
                .map(|t| ExpTerm {
                    base: t.base.clone(),
                    coeff: t.coeff.scale(c),
                    surd: t.surd.scale(c),
                })
                .collect(),
        )
    }

    /// Sum of two closed forms; the prefix covers the larger threshold.
    pub fn add(&self, other: &Self) -> Result<Self, SymbolicError> {
        let n0 = self.threshold().max(other.threshold());
        let mut prefix = Vec::with_capacity(n0);
        for n in 0..n0 {
            prefix.push(&self.value_at(n)? + &other.value_at(n)?);
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Self::new(prefix, terms))
    }

    /// Partial derivative with respect to parameter `p`.
    pub fn diff(&self, p: &str) -> Self {
        let prefix = self.prefix.iter().map(|v| v.diff(p)).collect();
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let lam = t.base.as_alg();
            let dlam = lam.diff(p);
            let radicand = t.base.radicand();
            // ∂(c)·λ^n  with ∂√D = ∂D/(2D)·√D
            let mut coeff = t.coeff.diff_param(p);
            let mut surd = t.surd.diff_param(p);
            if let Some(d) = &radicand {
                let dd = d.diff(p);
                if !dd.is_zero() && !t.surd.is_zero() {
                    let f = &dd * &(d * &ParamExpr::from_int(2)).recip().expect("radicand nonzero");
                    surd = &surd + &t.surd.scale(&f);
                }
            }
            if !dlam.is_zero() {
                // n·c·(∂λ/λ)
                let g = dlam.mul_ref(&lam.inv().expect("eigenvalues in terms are nonzero"));
                let n = CounterPoly::x();
                let cn = &t.coeff * &n;
                let sn = &t.surd * &n;
                coeff = &coeff + &cn.scale(&g.rat);
                surd = &surd + &cn.scale(&g.irr);
                if let Some(d) = &radicand {
                    coeff = &coeff + &sn.scale(&(&g.irr * d));
                    surd = &surd + &sn.scale(&g.rat);
                }
            }
            terms.push(ExpTerm {
                base: t.base.clone(),
                coeff,
                surd,
            });
        }
        Self::new(prefix, terms)
    }

    /// Substitutes numeric values for some parameters.
    pub fn partial_eval(&self, env: &ParamValues) -> Result<Self, SymbolicError> {
        let pe = |c: &ParamExpr| c.partial_eval(env);
        let pp = |q: &CounterPoly| -> Result<CounterPoly, SymbolicError> {
            Ok(CounterPoly::from_coeffs(q.coeffs().iter().map(pe).collect::<Result<_, _>>()?))
        };
        let prefix = self.prefix.iter().map(pe).collect::<Result<Vec<_>, _>>()?;
        let mut terms = Vec::new();
        for t in &self.terms {
            let base = match &t.base {
                EigenValue::Rational(r) => EigenValue::Rational(pe(r)?),
                EigenValue::QuadraticRoot { b, c, index } => EigenValue::QuadraticRoot {
                    b: pe(b)?,
                    c: pe(c)?,
                    index: *index,
                },
            };
            terms.push(ExpTerm {
                base,
                coeff: pp(&t.coeff)?,
                surd: pp(&t.surd)?,
            });
        }
        Ok(Self::new(prefix, terms))
    }

    /// Exact numeric value at counter `n` under `env`.
    pub fn eval(&self, n: usize, env: &ParamValues) -> Result<EvalValue, SymbolicError> {
        if n < self.prefix.len() {
            return Ok(EvalValue::exact(self.prefix[n].eval(env)?));
        }
        let numeric = self.partial_eval(env)?;
        let mut rational = BigRational::zero();
        let mut surds: BTreeMap<BigRational, BigRational> = BTreeMap::new();
        for t in &numeric.terms {
            if let EigenValue::Rational(r) = &t.base {
                if r.as_rational().is_none() {
                    return Err(SymbolicError::UnassignedParameter(
                        r.params().iter().next().map(|s| s.to_string()).unwrap_or_default(),
                    ));
                }
            }
            let v = t.value_at(n);
            rational += v.rat.eval(env)?;
            if let Some(d) = v.radicand() {
                let d = d.eval(env)?;
                let c = v.irr.eval(env)?;
                match rational_sqrt(&d) {
                    Some(s) => rational += c * s,
                    None => *surds.entry(d).or_insert_with(BigRational::zero) += c,
                }
            }
        }
        Ok(EvalValue {
            rational,
            surds: surds.into_iter().filter(|(_, c)| !c.is_zero()).map(|(d, c)| (c, d)).collect(),
        })
    }

    pub fn render(&self) -> String {
        let prefix: Vec<String> = self.prefix.iter().map(|v| v.to_string()).collect();
        let body = if self.terms.is_empty() {
            "0".to_string()
        } else {
            self.terms
                .iter()
                .map(|t| format!("{}*({})^n", t.render_coeff(), t.base.render()))
                .collect::<Vec<_>>()
                .join(" + ")
        };
        format!("prefix: [{}]; n>={}: {}", prefix.join(", "), self.threshold(), body)
    }

    pub fn to_json(&self) -> Value {
        let poly = |q: &CounterPoly| -> Vec<String> { q.coeffs().iter().map(|c| c.to_string()).collect() };
        json!({
            "prefix": self.prefix.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            "n0": self.threshold(),
            "terms": self.terms.iter().map(|t| json!({
                "eigenvalue": t.base.to_json(),
                "poly": poly(&t.coeff),
                "surd_poly": poly(&t.surd),
            })).collect::<Vec<_>>(),
        })
    }
}

impl fmt::Display for ExpPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

impl Serialize for ExpPolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

/// Free-function alias of [`ExpPolynomial::eval`].
pub fn ep_eval(f: &ExpPolynomial, n: usize, env: &ParamValues) -> Result<EvalValue, SymbolicError> {
    f.eval(n, env)
}

/// Free-function alias of [`ExpPolynomial::diff`].
pub fn ep_diff(f: &ExpPolynomial, p: &str) -> ExpPolynomial {
    f.diff(p)
}

/// Exact integer-or-rational parse helper used by tests and the CLI.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.trim().parse().ok()?;
        let b: BigInt = b.trim().parse().ok()?;
        if b.is_zero() {
            return None;
        }
        return Some(BigRational::new(a, b));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let n: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let d = num_traits::pow(BigInt::from(10), frac.len());
    let q = BigRational::new(n, d);
    Some(if neg { -q } else { q })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn c(n: i64) -> ParamExpr {
        ParamExpr::from_int(n)
    }

    #[test]
    fn diff_of_constant_geometric() {
        let f = ExpPolynomial::new(vec![], vec![ExpTerm::rational(c(3), CounterPoly::constant(ParamExpr::param("c")))]);
        assert!(f.diff("p").is_zero());
        let p = ParamExpr::param("p");
        let g = ExpPolynomial::new(vec![], vec![ExpTerm::rational(c(2), CounterPoly::constant(p.pow(2)))]);
        let expect = ExpPolynomial::new(vec![], vec![ExpTerm::rational(c(2), CounterPoly::constant(&c(2) * &p))]);
        assert_eq!(g.diff("p"), expect);
    }

    #[test]
    fn prefix_is_trimmed_when_formula_agrees() {
        let f = ExpPolynomial::new(vec![c(1), c(1)], vec![ExpTerm::rational(c(1), CounterPoly::one())]);
        assert_eq!(f.threshold(), 0);
        let g = ExpPolynomial::new(vec![c(0)], vec![ExpTerm::rational(c(1), CounterPoly::one())]);
        assert_eq!(g.threshold(), 1);
    }

    #[test]
    fn fibonacci_like_quadratic_terms_evaluate_exactly() {
        // Fibonacci: F(n) = (φ^n − ψ^n)/√5 with φ, ψ roots of x² − x − 1
        let b = c(-1);
        let cc = c(-1);
        let fifth = ParamExpr::from_ratio(1, 5);
        let t0 = ExpTerm {
            base: EigenValue::QuadraticRoot { b: b.clone(), c: cc.clone(), index: 0 },
            coeff: CounterPoly::zero(),
            surd: CounterPoly::constant(fifth.clone()),
        };
        let t1 = ExpTerm {
            base: EigenValue::QuadraticRoot { b, c: cc, index: 1 },
            coeff: CounterPoly::zero(),
            surd: CounterPoly::constant(-&fifth),
        };
        let f = ExpPolynomial::new(vec![], vec![t0, t1]);
        let fib = [0, 1, 1, 2, 3, 5, 8, 13, 21];
        for (n, want) in fib.iter().enumerate() {
            assert_eq!(f.value_at(n).unwrap(), c(*want));
            let v = f.eval(n, &ParamValues::new()).unwrap();
            assert_eq!(v, EvalValue::exact(BigRational::from_integer((*want).into())));
        }
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("0.7"), Some(BigRational::new(7.into(), 10.into())));
        assert_eq!(parse_rational("-3/4"), Some(BigRational::new((-3).into(), 4.into())));
        assert_eq!(parse_rational("12"), Some(BigRational::from_integer(12.into())));
        assert_eq!(parse_rational("x"), None);
    }

    #[test]
    fn rat_to_f64_handles_huge_values() {
        let big = BigRational::new(BigInt::from(10).pow(400u32), BigInt::from(10).pow(399u32) * 4);
        assert!((rat_to_f64(&big) - 2.5).abs() < 1e-12);
        assert_eq!(rational_sqrt(&BigRational::new(9.into(), 4.into())), Some(BigRational::new(3.into(), 2.into())));
        let _ = BigRational::one();
    }
}
