use std::collections::BTreeSet;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use super::ast::{AssignRhs, BExpr, DistKind, Program, Stmt};
use crate::symbolic::{fmt_rat, ParamExpr};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    fn error(message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            message: message.into(),
        }
    }

    fn warning(message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

/// True when no diagnostic is an error.
pub fn is_valid(diags: &[Diagnostic]) -> bool {
    diags.iter().all(|d| d.severity != Severity::Error)
}

/// Checks program invariants and probability annotations.
pub fn validate(prog: &Program) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if !prog.guard.is_true() {
        check_guard_reads(&prog.guard, &BTreeSet::new(), prog, &mut out);
    }
    let init = walk(&prog.init, prog, BTreeSet::new(), &mut out);
    walk(&prog.body, prog, init, &mut out);
    out
}

fn check_guard_reads(b: &BExpr, assigned: &BTreeSet<String>, prog: &Program, out: &mut Vec<Diagnostic>) {
    for v in b.vars() {
        if prog.vars.contains(&v) && !assigned.contains(&v) {
            out.push(Diagnostic::error(format!("variable `{v}` is read before it is assigned")));
        }
    }
}

fn walk(ss: &[Stmt], prog: &Program, mut assigned: BTreeSet<String>, out: &mut Vec<Diagnostic>) -> BTreeSet<String> {
    for s in ss {
        match s {
            Stmt::Assign(items) => {
                for (target, rhs) in items {
                    for v in rhs.vars() {
                        if !assigned.contains(&v) {
                            out.push(Diagnostic::error(format!("variable `{v}` is read before it is assigned")));
                        }
                    }
                    check_rhs(target, rhs, out);
                }
                assigned.extend(items.iter().map(|(v, _)| v.clone()));
            }
            Stmt::If { branches, otherwise } => {
                for (c, _) in branches {
                    check_guard_reads(c, &assigned, prog, out);
                }
                let mut common: Option<BTreeSet<String>> = None;
                for (_, body) in branches {
                    let after = walk(body, prog, assigned.clone(), out);
                    common = Some(match common {
                        None => after,
                        Some(c) => c.intersection(&after).cloned().collect(),
                    });
                }
                if let Some(body) = otherwise {
                    let after = walk(body, prog, assigned.clone(), out);
                    assigned = common.unwrap_or_default().intersection(&after).cloned().collect();
                }
            }
        }
    }
    assigned
}

fn in_unit_interval(q: &BigRational) -> bool {
    *q >= BigRational::zero() && *q <= BigRational::one()
}

fn check_rhs(target: &str, rhs: &AssignRhs, out: &mut Vec<Diagnostic>) {
    match rhs {
        AssignRhs::Categorical(items) => {
            if items.len() == 1 && items[0].1.is_none() {
                return;
            }
            let explicit: Vec<&ParamExpr> = items.iter().filter_map(|(_, p)| p.as_ref()).collect();
            let omitted = items.len() - explicit.len();
            let sum = explicit.iter().fold(ParamExpr::zero(), |a, b| &a + b);
            let mut symbolic = false;
            for p in &explicit {
                match p.as_rational() {
                    Some(q) if !in_unit_interval(&q) => out.push(Diagnostic::error(format!(
                        "assignment of `{target}`: probability {} is outside [0,1]",
                        fmt_rat(&q)
                    ))),
                    Some(_) => {}
                    None => {
                        symbolic = true;
                        let names: Vec<String> = p.params().iter().map(|s| s.to_string()).collect();
                        out.push(Diagnostic::warning(format!(
                            "assignment of `{target}`: symbolic probability; validity assumed for {} ∈ [0,1]",
                            names.join(", ")
                        )));
                    }
                }
            }
            match sum.as_rational() {
                Some(q) => {
                    if omitted == 0 && !q.is_one() {
                        out.push(Diagnostic::error(format!(
                            "assignment of `{target}`: probabilities sum to {}, expected 1",
                            fmt_rat(&q)
                        )));
                    } else if omitted == 1 && q > BigRational::one() {
                        out.push(Diagnostic::error(format!(
                            "assignment of `{target}`: probabilities sum to {} > 1",
                            fmt_rat(&q)
                        )));
                    }
                }
                None => {
                    if omitted == 0 && !symbolic {
                        unreachable!("non-rational sum of rational probabilities");
                    }
                    if omitted == 0 && !sum.is_one() {
                        out.push(Diagnostic::warning(format!(
                            "assignment of `{target}`: probabilities sum to {sum}; assumed to equal 1"
                        )));
                    }
                }
            }
        }
        AssignRhs::Dist(kind, args) => {
            let nums: Vec<Option<BigRational>> = args.iter().map(|a| a.as_rational()).collect();
            match (kind, nums.as_slice()) {
                (DistKind::Bernoulli, [Some(q)]) if !in_unit_interval(q) => out.push(Diagnostic::error(format!(
                    "assignment of `{target}`: Bernoulli parameter {} is outside [0,1]",
                    fmt_rat(q)
                ))),
                (DistKind::Uniform, [Some(a), Some(b)]) if a >= b => out.push(Diagnostic::error(format!(
                    "assignment of `{target}`: Uniform bounds must satisfy a < b"
                ))),
                (DistKind::Normal, [_, Some(v)]) if *v < BigRational::zero() => out.push(Diagnostic::error(
                    format!("assignment of `{target}`: Normal variance must be nonnegative"),
                )),
                _ => {}
            }
        }
    }
}
