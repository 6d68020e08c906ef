use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::symbolic::{Monomial, ParamExpr, Poly};

/// Monomial over program variables.
pub type VarMonomial = Monomial;

/// Polynomial over program variables with parameter-field coefficients.
pub type PolyExpr = Poly<ParamExpr>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
}

impl CmpOp {
    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Eq => ord == Equal,
            CmpOp::Ne => ord != Equal,
            CmpOp::Lt => ord == Less,
            CmpOp::Gt => ord == Greater,
            CmpOp::Le => ord != Greater,
            CmpOp::Ge => ord != Less,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BExpr {
    True,
    False,
    Cmp(PolyExpr, CmpOp, PolyExpr),
    Not(Box<BExpr>),
    And(Box<BExpr>, Box<BExpr>),
    Or(Box<BExpr>, Box<BExpr>),
}

impl BExpr {
    /// Negation with constant folding.
    pub fn negate(b: BExpr) -> BExpr {
        match b {
            BExpr::True => BExpr::False,
            BExpr::False => BExpr::True,
            BExpr::Not(inner) => *inner,
            other => BExpr::Not(Box::new(other)),
        }
    }

    /// Conjunction with constant folding.
    pub fn and(a: BExpr, b: BExpr) -> BExpr {
        match (a, b) {
            (BExpr::True, x) | (x, BExpr::True) => x,
            (BExpr::False, _) | (_, BExpr::False) => BExpr::False,
            (x, y) => BExpr::And(Box::new(x), Box::new(y)),
        }
    }

    pub fn or(a: BExpr, b: BExpr) -> BExpr {
        match (a, b) {
            (BExpr::False, x) | (x, BExpr::False) => x,
            (BExpr::True, _) | (_, BExpr::True) => BExpr::True,
            (x, y) => BExpr::Or(Box::new(x), Box::new(y)),
        }
    }

    pub fn is_true(&self) -> bool {
        matches!(self, BExpr::True)
    }

    /// Program variables mentioned by the condition.
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_polys(&mut |p| {
            out.extend(p.vars().iter().map(|s| s.to_string()));
        });
        out
    }

    /// Parameters mentioned by the condition's coefficients.
    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_polys(&mut |p| {
            for (_, c) in p.terms() {
                out.extend(c.params().iter().map(|s| s.to_string()));
            }
        });
        out
    }

    pub fn visit_polys(&self, f: &mut dyn FnMut(&PolyExpr)) {
        match self {
            BExpr::True | BExpr::False => {}
            BExpr::Cmp(a, _, b) => {
                f(a);
                f(b);
            }
            BExpr::Not(x) => x.visit_polys(f),
            BExpr::And(a, b) | BExpr::Or(a, b) => {
                a.visit_polys(f);
                b.visit_polys(f);
            }
        }
    }

    pub fn map_polys(&self, f: &dyn Fn(&PolyExpr) -> PolyExpr) -> BExpr {
        match self {
            BExpr::True => BExpr::True,
            BExpr::False => BExpr::False,
            BExpr::Cmp(a, op, b) => BExpr::Cmp(f(a), *op, f(b)),
            BExpr::Not(x) => BExpr::Not(Box::new(x.map_polys(f))),
            BExpr::And(a, b) => BExpr::And(Box::new(a.map_polys(f)), Box::new(b.map_polys(f))),
            BExpr::Or(a, b) => BExpr::Or(Box::new(a.map_polys(f)), Box::new(b.map_polys(f))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum DistKind {
    Bernoulli,
    Normal,
    Uniform,
    DiscreteUniform,
}

impl DistKind {
    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "Bernoulli" => Some(DistKind::Bernoulli),
            "Normal" => Some(DistKind::Normal),
            "Uniform" => Some(DistKind::Uniform),
            "DiscreteUniform" => Some(DistKind::DiscreteUniform),
            _ => None,
        }
    }

    pub fn arity(self) -> usize {
        match self {
            DistKind::Bernoulli => 1,
            _ => 2,
        }
    }

    /// Finitely supported distributions (enumerable, finite value sets).
    pub fn is_finite(self) -> bool {
        matches!(self, DistKind::Bernoulli | DistKind::DiscreteUniform)
    }
}

impl fmt::Display for DistKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Right-hand side of an assignment.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum AssignRhs {
    /// Probabilistic choice among polynomials; at most one probability is
    /// omitted and stands for the remaining mass. A single branch with no
    /// probability is a deterministic assignment.
    Categorical(Vec<(PolyExpr, Option<ParamExpr>)>),
    /// Fresh draw from a distribution with constant arguments.
    Dist(DistKind, Vec<ParamExpr>),
}

impl AssignRhs {
    pub fn deterministic(p: PolyExpr) -> Self {
        AssignRhs::Categorical(vec![(p, None)])
    }

    /// Branches with explicit probabilities (the omitted one is completed).
    pub fn branches(&self) -> Vec<(PolyExpr, ParamExpr)> {
        match self {
            AssignRhs::Categorical(items) => {
                let explicit: ParamExpr = items
                    .iter()
                    .filter_map(|(_, p)| p.clone())
                    .fold(ParamExpr::zero(), |a, b| &a + &b);
                let rest = &ParamExpr::one() - &explicit;
                items
                    .iter()
                    .map(|(e, p)| (e.clone(), p.clone().unwrap_or_else(|| rest.clone())))
                    .collect()
            }
            AssignRhs::Dist(..) => Vec::new(),
        }
    }

    /// Program variables read by the right-hand side.
    pub fn vars(&self) -> BTreeSet<String> {
        match self {
            AssignRhs::Categorical(items) => items
                .iter()
                .flat_map(|(e, _)| e.vars().into_iter().map(|s| s.to_string()))
                .collect(),
            AssignRhs::Dist(..) => BTreeSet::new(),
        }
    }

    /// Parameters mentioned anywhere in the right-hand side.
    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        match self {
            AssignRhs::Categorical(items) => {
                for (e, p) in items {
                    for (_, c) in e.terms() {
                        out.extend(c.params().iter().map(|s| s.to_string()));
                    }
                    if let Some(p) = p {
                        out.extend(p.params().iter().map(|s| s.to_string()));
                    }
                }
            }
            AssignRhs::Dist(_, args) => {
                for a in args {
                    out.extend(a.params().iter().map(|s| s.to_string()));
                }
            }
        }
        out
    }

    pub fn map_polys(&self, f: &dyn Fn(&PolyExpr) -> PolyExpr) -> AssignRhs {
        match self {
            AssignRhs::Categorical(items) => {
                AssignRhs::Categorical(items.iter().map(|(e, p)| (f(e), p.clone())).collect())
            }
            d @ AssignRhs::Dist(..) => d.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Stmt {
    /// Simultaneous assignment; all right-hand sides read pre-state values.
    Assign(Vec<(String, AssignRhs)>),
    If {
        branches: Vec<(BExpr, Vec<Stmt>)>,
        otherwise: Option<Vec<Stmt>>,
    },
}

impl Stmt {
    /// Variables assigned anywhere inside the statement.
    pub fn assigned(&self, out: &mut BTreeSet<String>) {
        match self {
            Stmt::Assign(items) => out.extend(items.iter().map(|(v, _)| v.clone())),
            Stmt::If { branches, otherwise } => {
                for (_, body) in branches {
                    body.iter().for_each(|s| s.assigned(out));
                }
                if let Some(body) = otherwise {
                    body.iter().for_each(|s| s.assigned(out));
                }
            }
        }
    }
}

/// A parsed probabilistic loop: initialization, then `while guard: body`.
///
/// Guarded loops are desugared while parsing, so `guard` is always `true`
/// and the original condition wraps the body as an if-statement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub params: BTreeSet<String>,
    pub vars: BTreeSet<String>,
    pub init: Vec<Stmt>,
    pub guard: BExpr,
    pub body: Vec<Stmt>,
}

impl Program {
    /// Number of top-level body statements that are plain assignments.
    pub fn body_assignment_count(&self) -> usize {
        self.body
            .iter()
            .map(|s| match s {
                Stmt::Assign(items) => items.len(),
                Stmt::If { .. } => 0,
            })
            .sum()
    }
}
