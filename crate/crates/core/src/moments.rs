//! Moment recurrences over normalized programs.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Mutex, RwLock};

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::deps::DependencyGraph;
use crate::lang::{AssignRhs, BExpr, CmpOp, DistKind, PolyExpr};
use crate::normalize::{GuardedAssignment, NormalizedProgram};
use crate::symbolic::{Monomial, ParamExpr};

/// Largest product support an Iverson bracket is interpolated over.
pub const IVERSON_POINT_CAP: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MomentError {
    #[error("guard variable {var} is not finite-valued")]
    NonFiniteGuard { var: String },
    #[error("guard variable {var} takes symbolic values; branch conditions need numeric supports")]
    SymbolicGuardSupport { var: String },
    #[error("branch condition mentions parameter {param}; only program variables are supported in guards")]
    GuardParameter { param: String },
    #[error("support of condition `{condition}` exceeds {IVERSON_POINT_CAP} points")]
    SupportTooLarge { condition: String },
}

/// Sequence whose value at iteration `n` a recurrence talks about.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SeqSymbol {
    Moment(Monomial),
    Sensitivity(Monomial, String),
}

impl SeqSymbol {
    pub fn moment_one() -> Self {
        SeqSymbol::Moment(Monomial::one())
    }

    pub fn monomial(&self) -> &Monomial {
        match self {
            SeqSymbol::Moment(m) | SeqSymbol::Sensitivity(m, _) => m,
        }
    }

    pub fn is_moment_one(&self) -> bool {
        matches!(self, SeqSymbol::Moment(m) if m.is_one())
    }

    pub fn is_sensitivity(&self) -> bool {
        matches!(self, SeqSymbol::Sensitivity(..))
    }

    fn kind_rank(&self) -> u8 {
        match self {
            SeqSymbol::Moment(_) => 0,
            SeqSymbol::Sensitivity(..) => 1,
        }
    }

    /// `E(x*y^2 | n)` or `d/dp E(x | n)`.
    pub fn at(&self, index: &str) -> String {
        match self {
            SeqSymbol::Moment(m) => format!("E({m} | {index})"),
            SeqSymbol::Sensitivity(m, p) => format!("d/d{p} E({m} | {index})"),
        }
    }
}

impl Ord for SeqSymbol {
    /// Degree-lexicographic on the monomial; moments before sensitivities.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.monomial()
            .cmp(other.monomial())
            .then(self.kind_rank().cmp(&other.kind_rank()))
            .then_with(|| match (self, other) {
                (SeqSymbol::Sensitivity(_, a), SeqSymbol::Sensitivity(_, b)) => a.cmp(b),
                _ => std::cmp::Ordering::Equal,
            })
    }
}

impl PartialOrd for SeqSymbol {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SeqSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeqSymbol::Moment(m) => write!(f, "E({m})"),
            SeqSymbol::Sensitivity(m, p) => write!(f, "d/d{p} E({m})"),
        }
    }
}

impl Serialize for SeqSymbol {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// `lhs(n+1) = Σ coeff · symbol(n)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Recurrence {
    pub lhs: SeqSymbol,
    pub rhs: Vec<(ParamExpr, SeqSymbol)>,
}

impl Recurrence {
    /// Builds a recurrence, merging repeated symbols and dropping zero
    /// coefficients; terms are kept in symbol order.
    pub fn new(lhs: SeqSymbol, terms: impl IntoIterator<Item = (ParamExpr, SeqSymbol)>) -> Self {
        let mut acc: BTreeMap<SeqSymbol, ParamExpr> = BTreeMap::new();
        for (c, s) in terms {
            let e = acc.entry(s).or_insert_with(ParamExpr::zero);
            *e = &*e + &c;
        }
        Self {
            lhs,
            rhs: acc.into_iter().filter(|(_, c)| !c.is_zero()).map(|(s, c)| (c, s)).collect(),
        }
    }

    pub fn coeff(&self, s: &SeqSymbol) -> ParamExpr {
        self.rhs.iter().find(|(_, t)| t == s).map(|(c, _)| c.clone()).unwrap_or_else(ParamExpr::zero)
    }

    pub fn symbols(&self) -> impl Iterator<Item = &SeqSymbol> {
        self.rhs.iter().map(|(_, s)| s)
    }

    /// `E(x | n+1) = ...` with the largest terms first.
    pub fn render(&self) -> String {
        let mut out = format!("{} =", self.lhs.at("n+1"));
        if self.rhs.is_empty() {
            out.push_str(" 0");
        }
        for (i, (c, s)) in self.rhs.iter().rev().enumerate() {
            let sym = s.at("n");
            let neg = c.as_rational().is_some_and(|q| q < BigRational::zero());
            let mag = if neg { -c } else { c.clone() };
            let body = if mag.is_one() { sym } else { format!("{}*{sym}", mag.parenthesized()) };
            match (i, neg) {
                (0, true) => out.push_str(&format!(" -{body}")),
                (0, false) => out.push_str(&format!(" {body}")),
                (_, true) => out.push_str(&format!(" - {body}")),
                (_, false) => out.push_str(&format!(" + {body}")),
            }
        }
        out
    }
}

impl fmt::Display for Recurrence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

/// Raw moment `E(D^k)` of a distribution with constant arguments.
pub fn dist_moment(kind: DistKind, args: &[ParamExpr], k: u32) -> ParamExpr {
    if k == 0 {
        return ParamExpr::one();
    }
    match kind {
        DistKind::Bernoulli => args[0].clone(),
        DistKind::Uniform => {
            let (a, b) = (&args[0], &args[1]);
            let num = &b.pow(k + 1) - &a.pow(k + 1);
            let den = &ParamExpr::from_int(k as i64 + 1) * &(b - a);
            num.checked_div(&den).expect("uniform bounds differ")
        }
        DistKind::DiscreteUniform => {
            let a = args[0].as_rational().expect("integer bound").to_integer();
            let b = args[1].as_rational().expect("integer bound").to_integer();
            let mut sum = BigRational::zero();
            let mut i = a.clone();
            while i <= b {
                sum += BigRational::from_integer(num_traits::pow(i.clone(), k as usize));
                i += 1;
            }
            let count = BigRational::from_integer(&b - &a + 1);
            ParamExpr::from_rational(sum / count)
        }
        DistKind::Normal => {
            let (mu, var) = (&args[0], &args[1]);
            let mut prev = ParamExpr::one();
            let mut cur = mu.clone();
            for j in 2..=k {
                let next = &(mu * &cur) + &(&(var * &ParamExpr::from_int(j as i64 - 1)) * &prev);
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

type MomentKey = (DistKind, Vec<ParamExpr>, u32);

/// Memoized distribution moments keyed by (kind, arguments, order).
#[derive(Default, Debug)]
pub struct DistMomentTable {
    cache: Mutex<HashMap<MomentKey, ParamExpr>>,
}

impl DistMomentTable {
    pub fn moment(&self, kind: DistKind, args: &[ParamExpr], k: u32) -> ParamExpr {
        let key = (kind, args.to_vec(), k);
        if let Some(v) = self.cache.lock().expect("moment cache").get(&key) {
            return v.clone();
        }
        let v = dist_moment(kind, args, k);
        self.cache.lock().expect("moment cache").insert(key, v.clone());
        v
    }
}

fn eval_numeric(p: &PolyExpr, point: &BTreeMap<&str, &BigRational>) -> BigRational {
    let mut acc = BigRational::zero();
    for (m, c) in p.terms() {
        let mut t = c.as_rational().expect("numeric coefficient");
        for (v, e) in m.factors() {
            t *= crate::symbolic::pow_rat(point[v.as_ref()], *e);
        }
        acc += t;
    }
    acc
}

fn truth(b: &BExpr, point: &BTreeMap<&str, &BigRational>) -> bool {
    match b {
        BExpr::True => true,
        BExpr::False => false,
        BExpr::Cmp(l, op, r) => op.holds(eval_numeric(l, point).cmp(&eval_numeric(r, point))),
        BExpr::Not(x) => !truth(x, point),
        BExpr::And(a, c) => truth(a, point) && truth(c, point),
        BExpr::Or(a, c) => truth(a, point) || truth(c, point),
    }
}

/// Polynomial equal to the indicator of `c` on every point of the product
/// of the given supports (multivariate Lagrange interpolation).
pub fn iverson_polynomial(c: &BExpr, supports: &BTreeMap<String, Vec<BigRational>>) -> Result<PolyExpr, MomentError> {
    match c {
        BExpr::True => return Ok(PolyExpr::one()),
        BExpr::False => return Ok(PolyExpr::zero()),
        _ => {}
    }
    if let Some(p) = c.params().into_iter().next() {
        return Err(MomentError::GuardParameter { param: p });
    }
    let vars: Vec<String> = c.vars().into_iter().collect();
    let mut domains = Vec::new();
    let mut size = 1usize;
    for v in &vars {
        let d = supports.get(v).ok_or_else(|| MomentError::NonFiniteGuard { var: v.clone() })?;
        size = size.saturating_mul(d.len());
        domains.push(d.clone());
    }
    if size > IVERSON_POINT_CAP {
        return Err(MomentError::SupportTooLarge {
            condition: crate::lang::fmt_bexpr(c),
        });
    }
    // per-variable Lagrange basis polynomials
    let basis: Vec<Vec<PolyExpr>> = vars
        .iter()
        .zip(&domains)
        .map(|(v, dom)| {
            dom.iter()
                .map(|a| {
                    let mut l = PolyExpr::one();
                    for b in dom.iter().filter(|b| *b != a) {
                        let inv = ParamExpr::from_rational(BigRational::one() / (a - b));
                        let factor = &PolyExpr::var(v) - &PolyExpr::constant(ParamExpr::from_rational(b.clone()));
                        l = &l * &factor.scale(&inv);
                    }
                    l
                })
                .collect()
        })
        .collect();
    let mut out = PolyExpr::zero();
    let mut idx = vec![0usize; vars.len()];
    if size == 0 {
        return Ok(out);
    }
    loop {
        let point: BTreeMap<&str, &BigRational> =
            vars.iter().enumerate().map(|(i, v)| (v.as_str(), &domains[i][idx[i]])).collect();
        if truth(c, &point) {
            let mut term = PolyExpr::one();
            for (i, b) in basis.iter().enumerate() {
                term = &term * &b[idx[i]];
            }
            out = &out + &term;
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return Ok(out);
            }
            idx[k] += 1;
            if idx[k] < domains[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Rewrites `v^k` with `k ≥ |S|` using the vanishing polynomial of the
/// finite numeric support `S` of `v`.
#[derive(Clone, Debug)]
struct PowerReducer {
    /// `v^s = Σ_j tail[j]·v^j`
    tail: Vec<BigRational>,
    /// `v^(s+i)` as coefficients of `1, v, …, v^(s-1)`
    table: Vec<Vec<BigRational>>,
}

impl PowerReducer {
    fn new(support: &[BigRational]) -> Self {
        // Π (v - a) = v^s + Σ c_j v^j, so v^s = -Σ c_j v^j
        let mut poly = vec![BigRational::one()];
        for a in support {
            let mut next = vec![BigRational::zero(); poly.len() + 1];
            for (j, c) in poly.iter().enumerate() {
                next[j + 1] += c;
                next[j] -= c * a;
            }
            poly = next;
        }
        let s = support.len();
        let tail: Vec<BigRational> = poly[..s].iter().map(|c| -c).collect();
        Self {
            table: vec![tail.clone()],
            tail,
        }
    }

    fn size(&self) -> u32 {
        self.tail.len() as u32
    }

    fn reduce(&mut self, k: u32) -> &[BigRational] {
        let s = self.size();
        let i = (k - s) as usize;
        while self.table.len() <= i {
            let last = self.table.last().expect("seeded");
            let top = last[s as usize - 1].clone();
            let mut next = vec![BigRational::zero(); s as usize];
            next[1..].clone_from_slice(&last[..s as usize - 1]);
            for (j, t) in self.tail.iter().enumerate() {
                next[j] += &top * t;
            }
            self.table.push(next);
        }
        &self.table[i]
    }
}

/// Builds moment recurrences and initial moments for one normalized program.
pub struct MomentEngine<'a> {
    np: &'a NormalizedProgram,
    reducers: RwLock<BTreeMap<String, PowerReducer>>,
    guards: Vec<PolyExpr>,
    init_guards: Vec<PolyExpr>,
    dists: DistMomentTable,
    memo: RwLock<HashMap<Monomial, Recurrence>>,
}

impl<'a> MomentEngine<'a> {
    /// Fails if a branch condition reads a variable without a finite numeric
    /// support or mentions a parameter.
    pub fn new(np: &'a NormalizedProgram, graph: &DependencyGraph) -> Result<Self, MomentError> {
        let mut supports = BTreeMap::new();
        for v in graph.vars() {
            if let Some(s) = graph.numeric_support(v) {
                if !s.is_empty() {
                    supports.insert(v.clone(), s);
                }
            }
        }
        let check = |g: &GuardedAssignment| -> Result<PolyExpr, MomentError> {
            for v in g.guard.vars() {
                if !supports.contains_key(&v) {
                    return Err(if graph.is_finite(&v) {
                        MomentError::SymbolicGuardSupport { var: v }
                    } else {
                        MomentError::NonFiniteGuard { var: v }
                    });
                }
            }
            iverson_polynomial(&g.guard, &supports)
        };
        let guards = np.body.iter().map(check).collect::<Result<Vec<_>, _>>()?;
        let init_guards = np.init.iter().map(check).collect::<Result<Vec<_>, _>>()?;
        let reducers = supports.iter().map(|(v, s)| (v.clone(), PowerReducer::new(s))).collect();
        Ok(Self {
            np,
            reducers: RwLock::new(reducers),
            guards,
            init_guards,
            dists: DistMomentTable::default(),
            memo: RwLock::new(HashMap::new()),
        })
    }

    pub fn program(&self) -> &NormalizedProgram {
        self.np
    }

    /// Reduces powers of finite-support variables below their support size.
    fn reduce(&self, p: &PolyExpr) -> PolyExpr {
        let needs = p.terms().any(|(m, _)| {
            let r = self.reducers.read().expect("reducers");
            m.factors().iter().any(|(v, e)| r.get(v.as_ref()).is_some_and(|red| *e >= red.size()))
        });
        if !needs {
            return p.clone();
        }
        let mut reducers = self.reducers.write().expect("reducers");
        let mut out = PolyExpr::zero();
        for (m, c) in p.terms() {
            let mut acc = PolyExpr::term(Monomial::one(), c.clone());
            for (v, e) in m.factors() {
                let factor = match reducers.get_mut(v.as_ref()) {
                    Some(red) if *e >= red.size() => {
                        let coeffs = red.reduce(*e).to_vec();
                        PolyExpr::from_terms(coeffs.into_iter().enumerate().filter(|(_, c)| !c.is_zero()).map(
                            |(j, c)| (Monomial::var_pow(v, j as u32), ParamExpr::from_rational(c)),
                        ))
                    }
                    _ => PolyExpr::term(Monomial::var_pow(v, *e), ParamExpr::one()),
                };
                acc = &acc * &factor;
            }
            out = &out + &acc;
        }
        out
    }

    /// Replaces `x^k` in `w` by the expectation of the assignment's value.
    fn substitute(&self, w: &PolyExpr, g: &GuardedAssignment, guard: &PolyExpr, reduce: bool) -> PolyExpr {
        let x = g.target.as_str();
        if !w.contains_var(x) {
            return w.clone();
        }
        let by_power = w.coeffs_in(x);
        let not_guard = &PolyExpr::one() - guard;
        let mut out = PolyExpr::zero();
        for (k, rest) in by_power {
            if k == 0 {
                out = &out + &rest;
                continue;
            }
            let taken = match &g.rhs {
                AssignRhs::Categorical(_) => {
                    let mut acc = PolyExpr::zero();
                    for (a, p) in g.rhs.branches() {
                        acc = &acc + &a.pow(k).scale(&p);
                    }
                    acc
                }
                AssignRhs::Dist(kind, args) => PolyExpr::constant(self.dists.moment(*kind, args, k)),
            };
            let value = if guard.is_zero() {
                PolyExpr::var(&g.else_src).pow(k)
            } else if not_guard.is_zero() {
                taken
            } else {
                let kept = PolyExpr::var(&g.else_src).pow(k);
                &(guard * &taken) + &(&not_guard * &kept)
            };
            let value = if reduce { self.reduce(&value) } else { value };
            let term = &rest * &value;
            out = &out + &if reduce { self.reduce(&term) } else { term };
        }
        out
    }

    /// Expected value at iteration `n+1` as a polynomial over iteration `n`.
    pub fn moment_polynomial(&self, m: &Monomial) -> PolyExpr {
        let mut w = PolyExpr::term(m.clone(), ParamExpr::one());
        for (g, guard) in self.np.body.iter().zip(&self.guards).rev() {
            w = self.substitute(&w, g, guard, true);
        }
        self.reduce(&w)
    }

    /// `E(M | n+1) = Σ c_i E(W_i | n)`.
    pub fn moment_recurrence(&self, m: &Monomial) -> Recurrence {
        if let Some(r) = self.memo.read().expect("memo").get(m) {
            return r.clone();
        }
        let w = self.moment_polynomial(m);
        let rec = Recurrence::new(
            SeqSymbol::Moment(m.clone()),
            w.into_terms().map(|(mono, c)| (c, SeqSymbol::Moment(mono))),
        );
        self.memo.write().expect("memo").entry(m.clone()).or_insert_with(|| rec.clone());
        rec
    }

    /// `E(M_0)` from the initialization block.
    pub fn initial_moment(&self, m: &Monomial) -> ParamExpr {
        let mut w = PolyExpr::term(m.clone(), ParamExpr::one());
        for (g, guard) in self.np.init.iter().zip(&self.init_guards).rev() {
            w = self.substitute(&w, g, guard, false);
        }
        // names never assigned before their read hold the implicit zero
        let w = w.substitute(&|_| Some(PolyExpr::zero()));
        w.as_constant().unwrap_or_else(ParamExpr::zero)
    }
}

/// One-off moment recurrence (builds a fresh engine).
pub fn moment_recurrence(np: &NormalizedProgram, graph: &DependencyGraph, m: &Monomial) -> Result<Recurrence, MomentError> {
    Ok(MomentEngine::new(np, graph)?.moment_recurrence(m))
}

/// One-off initial moment (builds a fresh engine).
pub fn initial_moment(np: &NormalizedProgram, graph: &DependencyGraph, m: &Monomial) -> Result<ParamExpr, MomentError> {
    Ok(MomentEngine::new(np, graph)?.initial_moment(m))
}

/// `(coefficient, comparison)` convenience for tests and callers that need
/// single-variable indicator checks.
pub fn indicator(var: &str, op: CmpOp, value: i64) -> BExpr {
    BExpr::Cmp(PolyExpr::var(var), op, PolyExpr::constant(ParamExpr::from_int(value)))
}
