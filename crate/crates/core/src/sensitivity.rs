//! Sensitivity recurrences and the worklist that closes them into a
//! C-finite system.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::deps::{classify, Classification, DependencyGraph};
use crate::moments::{MomentEngine, MomentError, Recurrence, SeqSymbol};
use crate::symbolic::{Monomial, ParamExpr};

/// Default bound on the number of equations before a run is declared
/// non-terminating.
pub const DEFAULT_EQUATION_CAP: usize = 500;

/// Monomials above this total degree stop the closure; a body that squares
/// a variable doubles the degree on every round and never trips the
/// equation cap in reasonable time.
pub const MAX_MONOMIAL_DEGREE: u32 = 32;

/// Environment variable overriding [`DEFAULT_EQUATION_CAP`].
pub const EQUATION_CAP_ENV: &str = "PROBSENS_EQ_CAP";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SensitivityError {
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("sensitivities w.r.t. {param} are not guaranteed computable: {}", witnesses.join("; "))]
    Precondition { param: String, witnesses: Vec<String> },
    #[error("program is not admissible: {}", witnesses.join("; "))]
    NotAdmissible { witnesses: Vec<String> },
    #[error("recurrence system exceeded {cap} equations; the closure does not appear to terminate")]
    EquationCap { cap: usize },
    #[error("closure reached E({monomial}) of degree above {max}; the closure does not appear to terminate")]
    DegreeCap { monomial: String, max: u32 },
    #[error(transparent)]
    Moment(#[from] MomentError),
}

/// Which worklist an equation came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Sens,
    Mom,
    Identity,
}

#[derive(Clone, Debug, Serialize)]
pub struct RecurrenceSystem {
    pub equations: BTreeMap<SeqSymbol, Recurrence>,
    pub initial: BTreeMap<SeqSymbol, ParamExpr>,
    pub provenance: BTreeMap<SeqSymbol, Provenance>,
    pub target: SeqSymbol,
}

impl RecurrenceSystem {
    fn empty(target: SeqSymbol) -> Self {
        Self {
            equations: BTreeMap::new(),
            initial: BTreeMap::new(),
            provenance: BTreeMap::new(),
            target,
        }
    }

    /// Assembles a system from explicit equations (initial values default
    /// to zero).
    pub fn from_parts(
        equations: impl IntoIterator<Item = Recurrence>,
        initial: BTreeMap<SeqSymbol, ParamExpr>,
        target: SeqSymbol,
    ) -> Self {
        let mut sys = Self::empty(target);
        for rec in equations {
            let init = initial.get(&rec.lhs).cloned().unwrap_or_else(ParamExpr::zero);
            sys.insert(rec, init, Provenance::Mom);
        }
        sys
    }

    /// The target is known to be identically zero; no equations.
    pub fn is_zero_target(&self) -> bool {
        self.equations.is_empty()
    }

    /// Number of equations, not counting the constant `E(1)`.
    pub fn rec_count(&self) -> usize {
        self.equations.keys().filter(|s| !s.is_moment_one()).count()
    }

    fn insert(&mut self, rec: Recurrence, init: ParamExpr, prov: Provenance) {
        self.initial.insert(rec.lhs.clone(), init);
        self.provenance.insert(rec.lhs.clone(), prov);
        self.equations.insert(rec.lhs.clone(), rec);
    }

    fn close_with_one(&mut self) {
        let one = SeqSymbol::moment_one();
        let used = self.equations.values().any(|r| r.symbols().any(|s| s == &one)) || self.target == one;
        if used && !self.equations.contains_key(&one) {
            let rec = Recurrence::new(one.clone(), [(ParamExpr::one(), one.clone())]);
            self.insert(rec, ParamExpr::one(), Provenance::Identity);
        }
    }

    /// Every rhs symbol has its own equation.
    pub fn is_closed(&self) -> bool {
        self.equations.values().all(|r| r.symbols().all(|s| self.equations.contains_key(s)))
    }

    /// Equations in symbol order, one per line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (s, r) in &self.equations {
            if s.is_moment_one() {
                continue;
            }
            out.push_str(&r.render());
            out.push_str(&format!("    [{} = {}]\n", s.at("0"), self.initial[s]));
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct SensitivityOptions {
    pub cap: usize,
    /// Keep every term (no zero replacements); for cross-checking only.
    pub debug: bool,
}

impl Default for SensitivityOptions {
    fn default() -> Self {
        let cap = std::env::var(EQUATION_CAP_ENV)
            .ok()
            .and_then(|s| s.trim().parse().ok())
            .unwrap_or(DEFAULT_EQUATION_CAP);
        Self { cap, debug: false }
    }
}

/// `∂p E(M | n+1) = Σ ∂p(c_i)·E(W_i | n) + c_i·∂p E(W_i | n)`.
///
/// Sensitivity terms of parameter-independent monomials are dropped unless
/// `debug` is set, and so are zero derivative coefficients.
pub fn sensitivity_recurrence(
    engine: &MomentEngine<'_>,
    graph: &DependencyGraph,
    m: &Monomial,
    p: &str,
    debug: bool,
) -> Recurrence {
    let mom = engine.moment_recurrence(m);
    let mut terms = Vec::new();
    for (c, s) in &mom.rhs {
        let w = s.monomial();
        let dc = c.diff(p);
        if !dc.is_zero() {
            terms.push((dc, SeqSymbol::Moment(w.clone())));
        }
        if !w.is_one() && (debug || graph.monomial_p_dependent(p, w)) {
            terms.push((c.clone(), SeqSymbol::Sensitivity(w.clone(), p.to_string())));
        }
    }
    Recurrence::new(SeqSymbol::Sensitivity(m.clone(), p.to_string()), terms)
}

fn check_degree(w: &Monomial) -> Result<(), SensitivityError> {
    if w.degree() > MAX_MONOMIAL_DEGREE {
        return Err(SensitivityError::DegreeCap {
            monomial: w.to_string(),
            max: MAX_MONOMIAL_DEGREE,
        });
    }
    Ok(())
}

fn check_param(engine: &MomentEngine<'_>, p: &str) -> Result<(), SensitivityError> {
    if engine.program().params.contains(p) {
        Ok(())
    } else {
        Err(SensitivityError::UnknownParameter(p.to_string()))
    }
}

/// Closes the moment recurrences reachable from `pending` into `sys`.
fn close_moments(
    engine: &MomentEngine<'_>,
    sys: &mut RecurrenceSystem,
    mut pending: BTreeSet<Monomial>,
    cap: usize,
) -> Result<(), SensitivityError> {
    while let Some(w) = pending.pop_first() {
        let sym = SeqSymbol::Moment(w.clone());
        if w.is_one() || sys.equations.contains_key(&sym) {
            continue;
        }
        check_degree(&w)?;
        let rec = engine.moment_recurrence(&w);
        for s in rec.symbols() {
            if !s.is_moment_one() && !sys.equations.contains_key(s) {
                pending.insert(s.monomial().clone());
            }
        }
        sys.insert(rec, engine.initial_moment(&w), Provenance::Mom);
        if sys.rec_count() > cap {
            return Err(SensitivityError::EquationCap { cap });
        }
    }
    Ok(())
}

/// Assembles the system for `∂p E(M)`.
///
/// A parameter-independent `M` yields the empty zero-target system without
/// looking at the program's classification.
pub fn sensitivity_system(
    engine: &MomentEngine<'_>,
    graph: &DependencyGraph,
    m: &Monomial,
    p: &str,
    opts: &SensitivityOptions,
) -> Result<RecurrenceSystem, SensitivityError> {
    check_param(engine, p)?;
    let target = SeqSymbol::Sensitivity(m.clone(), p.to_string());
    if !graph.monomial_p_dependent(p, m) {
        return Ok(RecurrenceSystem::empty(target));
    }
    let class: Classification = classify(graph, p);
    if !class.sensitivity_computable && !class.admissible {
        return Err(SensitivityError::Precondition {
            param: p.to_string(),
            witnesses: class.witnesses(),
        });
    }

    let mut sys = RecurrenceSystem::empty(target);
    let mut sens = BTreeSet::from([m.clone()]);
    let mut mom = BTreeSet::new();
    while let Some(w) = sens.pop_first() {
        let sym = SeqSymbol::Sensitivity(w.clone(), p.to_string());
        if sys.equations.contains_key(&sym) {
            continue;
        }
        check_degree(&w)?;
        let rec = sensitivity_recurrence(engine, graph, &w, p, opts.debug);
        for s in rec.symbols() {
            match s {
                SeqSymbol::Sensitivity(v, _) if !sys.equations.contains_key(s) => {
                    sens.insert(v.clone());
                }
                SeqSymbol::Moment(v) if !v.is_one() => {
                    mom.insert(v.clone());
                }
                _ => {}
            }
        }
        let init = engine.initial_moment(&w).diff(p);
        sys.insert(rec, init, Provenance::Sens);
        if sys.rec_count() > opts.cap {
            return Err(SensitivityError::EquationCap { cap: opts.cap });
        }
    }
    close_moments(engine, &mut sys, mom, opts.cap)?;
    sys.close_with_one();
    Ok(sys)
}

/// Closed system of moment recurrences for `E(M)`.
pub fn moment_system(engine: &MomentEngine<'_>, m: &Monomial, cap: usize) -> Result<RecurrenceSystem, SensitivityError> {
    let target = SeqSymbol::Moment(m.clone());
    let mut sys = RecurrenceSystem::empty(target);
    close_moments(engine, &mut sys, BTreeSet::from([m.clone()]), cap)?;
    sys.close_with_one();
    Ok(sys)
}
