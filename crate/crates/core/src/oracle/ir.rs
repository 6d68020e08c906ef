//! Numeric form of a program with parameters substituted.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::OracleError;
use crate::lang::{AssignRhs, BExpr, CmpOp, DistKind, PolyExpr, Program, Stmt};
use crate::normalize::{GuardedAssignment, NormalizedProgram};
use crate::symbolic::{pow_rat, rat_to_f64, ParamExpr, ParamValues};

pub(crate) type CTerm = (BigRational, f64, Vec<(usize, u32)>);

#[derive(Clone, Debug)]
pub(crate) struct CPoly {
    /// Exact coefficient, its float image, and `(slot, exponent)` factors.
    pub terms: Vec<CTerm>,
}

impl CPoly {
    pub fn exact(&self, s: &[BigRational]) -> BigRational {
        let mut acc = BigRational::zero();
        for (c, _, fs) in &self.terms {
            let mut t = c.clone();
            for (v, e) in fs {
                t *= pow_rat(&s[*v], *e);
            }
            acc += t;
        }
        acc
    }

    pub fn float(&self, s: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(_, c, fs)| fs.iter().fold(*c, |t, (v, e)| t * s[*v].powi(*e as i32)))
            .sum()
    }
}

#[derive(Clone, Debug)]
pub(crate) enum CBool {
    Const(bool),
    Cmp(CPoly, CmpOp, CPoly),
    Not(Box<CBool>),
    And(Box<CBool>, Box<CBool>),
    Or(Box<CBool>, Box<CBool>),
}

impl CBool {
    pub fn exact(&self, s: &[BigRational]) -> bool {
        match self {
            CBool::Const(b) => *b,
            CBool::Cmp(l, op, r) => op.holds(l.exact(s).cmp(&r.exact(s))),
            CBool::Not(x) => !x.exact(s),
            CBool::And(a, b) => a.exact(s) && b.exact(s),
            CBool::Or(a, b) => a.exact(s) || b.exact(s),
        }
    }

    pub fn float(&self, s: &[f64]) -> bool {
        match self {
            CBool::Const(b) => *b,
            CBool::Cmp(l, op, r) => {
                let (a, b) = (l.float(s), r.float(s));
                op.holds(a.partial_cmp(&b).unwrap_or(std::cmp::Ordering::Equal))
            }
            CBool::Not(x) => !x.float(s),
            CBool::And(a, b) => a.float(s) && b.float(s),
            CBool::Or(a, b) => a.float(s) || b.float(s),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) enum CRhs {
    /// Branch values with their probabilities (exact, float).
    Choice(Vec<(CPoly, BigRational, f64)>),
    Bernoulli(BigRational),
    DiscreteUniform(i64, i64),
    Uniform(f64, f64),
    Normal(f64, f64),
}

#[derive(Clone, Debug)]
pub(crate) enum Op {
    Assign(Vec<(usize, CRhs)>),
    If(Vec<(CBool, Vec<Op>)>, Vec<Op>),
}

pub(crate) struct Compiler<'a> {
    pub index: BTreeMap<String, usize>,
    env: &'a ParamValues,
}

fn value(c: &ParamExpr, env: &ParamValues) -> Result<BigRational, OracleError> {
    c.eval(env).map_err(OracleError::Parameter)
}

fn probability(q: BigRational) -> Result<BigRational, OracleError> {
    if q.is_negative() || q > BigRational::one() {
        return Err(OracleError::InvalidProbability(crate::symbolic::fmt_rat(&q)));
    }
    Ok(q)
}

impl<'a> Compiler<'a> {
    pub fn new(names: impl IntoIterator<Item = String>, env: &'a ParamValues) -> Self {
        let index = names.into_iter().enumerate().map(|(i, n)| (n, i)).collect();
        Self { index, env }
    }

    fn var(&self, name: &str) -> Result<usize, OracleError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| OracleError::UnknownVariable(name.to_string()))
    }

    pub fn poly(&self, p: &PolyExpr) -> Result<CPoly, OracleError> {
        let mut terms = Vec::new();
        for (m, c) in p.terms() {
            let q = value(c, self.env)?;
            let fs = m
                .factors()
                .iter()
                .map(|(v, e)| Ok((self.var(v)?, *e)))
                .collect::<Result<Vec<_>, OracleError>>()?;
            terms.push((q.clone(), rat_to_f64(&q), fs));
        }
        Ok(CPoly { terms })
    }

    pub fn cond(&self, b: &BExpr) -> Result<CBool, OracleError> {
        Ok(match b {
            BExpr::True => CBool::Const(true),
            BExpr::False => CBool::Const(false),
            BExpr::Cmp(l, op, r) => CBool::Cmp(self.poly(l)?, *op, self.poly(r)?),
            BExpr::Not(x) => CBool::Not(Box::new(self.cond(x)?)),
            BExpr::And(a, c) => CBool::And(Box::new(self.cond(a)?), Box::new(self.cond(c)?)),
            BExpr::Or(a, c) => CBool::Or(Box::new(self.cond(a)?), Box::new(self.cond(c)?)),
        })
    }

    pub fn rhs(&self, r: &AssignRhs) -> Result<CRhs, OracleError> {
        match r {
            AssignRhs::Categorical(_) => {
                let mut out = Vec::new();
                for (e, p) in r.branches() {
                    let q = probability(value(&p, self.env)?)?;
                    let f = rat_to_f64(&q);
                    out.push((self.poly(&e)?, q, f));
                }
                Ok(CRhs::Choice(out))
            }
            AssignRhs::Dist(kind, args) => {
                let a: Vec<BigRational> = args.iter().map(|x| value(x, self.env)).collect::<Result<_, _>>()?;
                match kind {
                    DistKind::Bernoulli => Ok(CRhs::Bernoulli(probability(a[0].clone())?)),
                    DistKind::DiscreteUniform => {
                        let lo = int_arg(&a[0])?;
                        let hi = int_arg(&a[1])?;
                        if lo > hi {
                            return Err(OracleError::InvalidArgument(format!("DiscreteUniform({lo}, {hi})")));
                        }
                        Ok(CRhs::DiscreteUniform(lo, hi))
                    }
                    DistKind::Uniform => Ok(CRhs::Uniform(rat_to_f64(&a[0]), rat_to_f64(&a[1]))),
                    DistKind::Normal => {
                        if a[1].is_negative() {
                            return Err(OracleError::InvalidArgument("negative variance".into()));
                        }
                        Ok(CRhs::Normal(rat_to_f64(&a[0]), rat_to_f64(&a[1])))
                    }
                }
            }
        }
    }

    pub fn stmts(&self, ss: &[Stmt]) -> Result<Vec<Op>, OracleError> {
        ss.iter()
            .map(|s| match s {
                Stmt::Assign(items) => Ok(Op::Assign(
                    items
                        .iter()
                        .map(|(v, r)| Ok((self.var(v)?, self.rhs(r)?)))
                        .collect::<Result<_, OracleError>>()?,
                )),
                Stmt::If { branches, otherwise } => {
                    let bs = branches
                        .iter()
                        .map(|(c, b)| Ok((self.cond(c)?, self.stmts(b)?)))
                        .collect::<Result<_, OracleError>>()?;
                    let other = match otherwise {
                        Some(b) => self.stmts(b)?,
                        None => Vec::new(),
                    };
                    Ok(Op::If(bs, other))
                }
            })
            .collect()
    }

    pub fn guarded(&self, gs: &[GuardedAssignment]) -> Result<Vec<Op>, OracleError> {
        gs.iter()
            .map(|g| {
                let set = Op::Assign(vec![(self.var(&g.target)?, self.rhs(&g.rhs)?)]);
                if g.guard.is_true() {
                    return Ok(set);
                }
                let keep = Op::Assign(vec![(
                    self.var(&g.target)?,
                    self.rhs(&AssignRhs::deterministic(PolyExpr::var(&g.else_src)))?,
                )]);
                Ok(Op::If(vec![(self.cond(&g.guard)?, vec![set])], vec![keep]))
            })
            .collect()
    }
}

fn int_arg(q: &BigRational) -> Result<i64, OracleError> {
    use num_traits::ToPrimitive;
    if !q.is_integer() {
        return Err(OracleError::InvalidArgument(format!("non-integer bound {q}")));
    }
    q.to_integer()
        .to_i64()
        .ok_or_else(|| OracleError::InvalidArgument(format!("bound {q} out of range")))
}

/// Init and body operations plus the variable layout.
pub(crate) struct Compiled {
    pub index: BTreeMap<String, usize>,
    pub init: Vec<Op>,
    pub body: Vec<Op>,
}

pub(crate) fn compile_program(prog: &Program, env: &ParamValues) -> Result<Compiled, OracleError> {
    let c = Compiler::new(prog.vars.iter().cloned(), env);
    Ok(Compiled {
        init: c.stmts(&prog.init)?,
        body: c.stmts(&prog.body)?,
        index: c.index,
    })
}

pub(crate) fn compile_normalized(np: &NormalizedProgram, env: &ParamValues) -> Result<Compiled, OracleError> {
    let c = Compiler::new(np.all_vars(), env);
    Ok(Compiled {
        init: c.guarded(&np.init)?,
        body: c.guarded(&np.body)?,
        index: c.index,
    })
}
