//! Syntactic dependency relations, finite-valuedness and loop classification.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_rational::BigRational;
use serde::Serialize;

use crate::lang::{AssignRhs, DistKind, PolyExpr};
use crate::normalize::{GuardedAssignment, NormalizedProgram};
use crate::symbolic::{Monomial, ParamExpr};

/// Maximum number of distinct values tracked per variable.
pub const VALUE_SET_CAP: usize = 64;
/// Maximum number of value combinations evaluated for one right-hand side.
const PRODUCT_CAP: usize = 4096;
/// Values past this many coefficient bits or this total degree widen to
/// top; repeated squaring otherwise builds huge numbers before the set
/// cap is reached.
const VALUE_BITS_CAP: u64 = 256;
const VALUE_DEGREE_CAP: u32 = 32;

fn oversized(v: &ParamExpr) -> bool {
    [v.numer(), v.denom()].into_iter().any(|p| {
        p.total_degree() > VALUE_DEGREE_CAP
            || p.terms().any(|(_, c)| c.numer().bits() > VALUE_BITS_CAP || c.denom().bits() > VALUE_BITS_CAP)
    })
}

/// Abstract value set of a variable.
#[derive(Clone, Debug, PartialEq)]
pub enum ValueSet {
    Finite(Vec<ParamExpr>),
    Top,
}

impl ValueSet {
    fn empty() -> Self {
        ValueSet::Finite(Vec::new())
    }

    fn join(&mut self, other: &ValueSet) -> bool {
        match (&mut *self, other) {
            (ValueSet::Top, _) => false,
            (s, ValueSet::Top) => {
                *s = ValueSet::Top;
                true
            }
            (ValueSet::Finite(a), ValueSet::Finite(b)) => {
                let mut changed = false;
                for v in b {
                    if !a.contains(v) {
                        a.push(v.clone());
                        changed = true;
                    }
                }
                if a.len() > VALUE_SET_CAP {
                    *self = ValueSet::Top;
                }
                changed
            }
        }
    }

    pub fn values(&self) -> Option<&[ParamExpr]> {
        match self {
            ValueSet::Finite(v) => Some(v),
            ValueSet::Top => None,
        }
    }
}

fn eval_over_sets(p: &PolyExpr, sets: &BTreeMap<String, ValueSet>) -> ValueSet {
    let vars: Vec<String> = p.vars().iter().map(|s| s.to_string()).collect();
    let mut domains = Vec::new();
    let mut size = 1usize;
    for v in &vars {
        match sets.get(v) {
            Some(ValueSet::Finite(vals)) => {
                size = size.saturating_mul(vals.len());
                domains.push(vals.clone());
            }
            _ => return ValueSet::Top,
        }
    }
    if size > PRODUCT_CAP {
        return ValueSet::Top;
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; vars.len()];
    if size == 0 {
        return ValueSet::empty();
    }
    loop {
        let val = p.substitute(&|v| {
            vars.iter()
                .position(|w| w == v)
                .map(|i| PolyExpr::constant(domains[i][idx[i]].clone()))
        });
        let c = val.as_constant().expect("all variables substituted");
        if oversized(&c) {
            return ValueSet::Top;
        }
        if !out.contains(&c) {
            out.push(c);
        }
        if out.len() > VALUE_SET_CAP {
            return ValueSet::Top;
        }
        // odometer increment
        let mut k = 0;
        loop {
            if k == idx.len() {
                return ValueSet::Finite(out);
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

fn rhs_values(g: &GuardedAssignment, sets: &BTreeMap<String, ValueSet>) -> ValueSet {
    let mut out = match &g.rhs {
        AssignRhs::Categorical(items) => {
            let mut acc = ValueSet::empty();
            for (e, _) in items {
                acc.join(&eval_over_sets(e, sets));
            }
            acc
        }
        AssignRhs::Dist(DistKind::Bernoulli, _) => ValueSet::Finite(vec![ParamExpr::zero(), ParamExpr::one()]),
        AssignRhs::Dist(DistKind::DiscreteUniform, args) => {
            match (args[0].as_rational(), args[1].as_rational()) {
                (Some(a), Some(b)) if a.is_integer() && b.is_integer() => {
                    let a = a.to_integer();
                    let b = b.to_integer();
                    let count = &b - &a + 1;
                    if count > num_bigint::BigInt::from(VALUE_SET_CAP) {
                        ValueSet::Top
                    } else {
                        let mut v = Vec::new();
                        let mut i = a;
                        while i <= b {
                            v.push(ParamExpr::from_rational(BigRational::from_integer(i.clone())));
                            i += 1;
                        }
                        ValueSet::Finite(v)
                    }
                }
                _ => ValueSet::Top,
            }
        }
        AssignRhs::Dist(..) => ValueSet::Top,
    };
    if !g.guard.is_true() {
        out.join(sets.get(&g.else_src).unwrap_or(&ValueSet::Top));
    }
    out
}

/// Value-set abstract interpretation: variables whose reachable values form
/// a set of at most [`VALUE_SET_CAP`] elements, with those sets.
pub fn finite_valued(np: &NormalizedProgram) -> BTreeMap<String, ValueSet> {
    let mut sets: BTreeMap<String, ValueSet> = np.all_vars().into_iter().map(|v| (v, ValueSet::empty())).collect();
    for g in &np.init {
        // sequential: a later init assignment overwrites the earlier one
        let v = rhs_values(g, &sets);
        sets.insert(g.target.clone(), v);
    }
    loop {
        let mut changed = false;
        for g in &np.body {
            let v = rhs_values(g, &sets);
            changed |= sets.get_mut(&g.target).expect("known variable").join(&v);
        }
        if !changed {
            break;
        }
    }
    sets
}

/// Dense boolean relation over variable indices.
#[derive(Clone, Debug)]
struct Relation {
    n: usize,
    bits: Vec<bool>,
}

impl Relation {
    fn new(n: usize) -> Self {
        Self {
            n,
            bits: vec![false; n * n],
        }
    }

    fn get(&self, a: usize, b: usize) -> bool {
        self.bits[a * self.n + b]
    }

    fn set(&mut self, a: usize, b: usize) {
        self.bits[a * self.n + b] = true;
    }

    fn transitive_closure(&self) -> Relation {
        let mut out = self.clone();
        for k in 0..self.n {
            for i in 0..self.n {
                if out.get(i, k) {
                    for j in 0..self.n {
                        if out.get(k, j) {
                            out.set(i, j);
                        }
                    }
                }
            }
        }
        out
    }

    /// `{(x, y) | x ->* a, (a, b) ∈ seeds, b ->* y}` where `->*` is the
    /// reflexive version of `closure`.
    fn sandwich(seeds: &Relation, closure: &Relation) -> Relation {
        let n = seeds.n;
        let mut out = Relation::new(n);
        for a in 0..n {
            for b in 0..n {
                if !seeds.get(a, b) {
                    continue;
                }
                for x in 0..n {
                    if x != a && !closure.get(x, a) {
                        continue;
                    }
                    for y in 0..n {
                        if y == b || closure.get(b, y) {
                            out.set(x, y);
                        }
                    }
                }
            }
        }
        out
    }
}

/// Direct and transitive dependencies of a normalized program, with
/// per-parameter dependence and influence flags.
#[derive(Clone, Debug)]
pub struct DependencyGraph {
    names: Vec<String>,
    index: BTreeMap<String, usize>,
    origin: BTreeMap<String, String>,
    direct: Relation,
    direct_nonlinear: Relation,
    closure: Relation,
    nonlinear_closure: Relation,
    p_direct: BTreeMap<String, Relation>,
    p_closure: BTreeMap<String, Relation>,
    p_dependent: BTreeMap<String, BTreeSet<String>>,
    values: BTreeMap<String, ValueSet>,
    guard_vars: BTreeSet<String>,
}

fn assignment_params(g: &GuardedAssignment) -> BTreeSet<String> {
    g.rhs.params()
}

fn contained_vars(g: &GuardedAssignment) -> BTreeSet<String> {
    let mut out = g.rhs.vars();
    if !g.guard.is_true() {
        out.insert(g.else_src.clone());
    }
    out
}

fn rhs_polys(rhs: &AssignRhs) -> Vec<&PolyExpr> {
    match rhs {
        AssignRhs::Categorical(items) => items.iter().map(|(e, _)| e).collect(),
        AssignRhs::Dist(..) => Vec::new(),
    }
}

/// Builds all dependency relations of a normalized program. Initialization
/// and body assignments both count as assignments of their target.
pub fn build_graph(np: &NormalizedProgram) -> DependencyGraph {
    let names: Vec<String> = np.all_vars().into_iter().collect();
    let index: BTreeMap<String, usize> = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
    let n = names.len();
    let all: Vec<&GuardedAssignment> = np.init.iter().chain(np.body.iter()).collect();

    let mut direct = Relation::new(n);
    let mut direct_nonlinear = Relation::new(n);
    for g in &all {
        let x = index[&g.target];
        for y in contained_vars(g).iter().chain(g.guard.vars().iter()) {
            direct.set(x, index[y]);
        }
        for e in rhs_polys(&g.rhs) {
            for (m, _) in e.terms() {
                if m.degree() >= 2 {
                    for v in m.vars() {
                        direct_nonlinear.set(x, index[v]);
                    }
                }
            }
        }
    }
    let closure = direct.transitive_closure();
    let nonlinear_closure = Relation::sandwich(&direct_nonlinear, &closure);

    let mut p_dependent = BTreeMap::new();
    let mut p_direct = BTreeMap::new();
    let mut p_closure = BTreeMap::new();
    for p in &np.params {
        let mut dep = vec![false; n];
        for g in &all {
            if assignment_params(g).contains(p) || g.guard.params().contains(p) {
                dep[index[&g.target]] = true;
            }
        }
        let seeds = dep.clone();
        for x in 0..n {
            if (0..n).any(|y| seeds[y] && closure.get(x, y)) {
                dep[x] = true;
            }
        }
        let dep_names: BTreeSet<String> = (0..n).filter(|&i| dep[i]).map(|i| names[i].clone()).collect();

        let mut rel = Relation::new(n);
        for g in &all {
            let x = index[&g.target];
            let guard_hit = g.guard.params().contains(p) || g.guard.vars().iter().any(|v| dep_names.contains(v));
            let prob_hit = match &g.rhs {
                AssignRhs::Categorical(items) => items.iter().any(|(_, q)| q.as_ref().is_some_and(|q| q.contains_param(p))),
                AssignRhs::Dist(..) => false,
            };
            if guard_hit || prob_hit {
                for y in contained_vars(g) {
                    rel.set(x, index[&y]);
                }
            }
            for e in rhs_polys(&g.rhs) {
                for (m, c) in e.terms() {
                    for y in m.vars() {
                        let (rest, k) = m.split(y);
                        let rest = rest.mul(&Monomial::var_pow(y, k - 1));
                        if c.contains_param(p) || rest.vars().any(|v| dep_names.contains(v)) {
                            rel.set(x, index[y]);
                        }
                    }
                }
            }
        }
        p_closure.insert(p.clone(), Relation::sandwich(&rel, &closure));
        p_direct.insert(p.clone(), rel);
        p_dependent.insert(p.clone(), dep_names);
    }

    let mut guard_vars = BTreeSet::new();
    for g in &np.body {
        guard_vars.extend(g.guard.vars());
    }

    DependencyGraph {
        names,
        index,
        origin: np.temporaries.clone(),
        direct,
        direct_nonlinear,
        closure,
        nonlinear_closure,
        p_direct,
        p_closure,
        p_dependent,
        values: finite_valued(np),
        guard_vars,
    }
}

impl DependencyGraph {
    fn idx(&self, v: &str) -> usize {
        *self.index.get(v).unwrap_or_else(|| panic!("unknown variable {v}"))
    }

    pub fn vars(&self) -> &[String] {
        &self.names
    }

    pub fn contains(&self, v: &str) -> bool {
        self.index.contains_key(v)
    }

    /// `x ->d y`
    pub fn directly_depends(&self, x: &str, y: &str) -> bool {
        self.direct.get(self.idx(x), self.idx(y))
    }

    /// `x ->dN y`
    pub fn directly_depends_nonlinear(&self, x: &str, y: &str) -> bool {
        self.direct_nonlinear.get(self.idx(x), self.idx(y))
    }

    /// `x ->+ y`
    pub fn depends(&self, x: &str, y: &str) -> bool {
        self.closure.get(self.idx(x), self.idx(y))
    }

    /// `x ->N+ y`
    pub fn depends_nonlinear(&self, x: &str, y: &str) -> bool {
        self.nonlinear_closure.get(self.idx(x), self.idx(y))
    }

    /// `x ->d_p y`
    pub fn directly_p_influenced(&self, p: &str, x: &str, y: &str) -> bool {
        self.p_direct.get(p).is_some_and(|r| r.get(self.idx(x), self.idx(y)))
    }

    /// `x ->+_p y`
    pub fn p_influenced(&self, p: &str, x: &str, y: &str) -> bool {
        self.p_closure.get(p).is_some_and(|r| r.get(self.idx(x), self.idx(y)))
    }

    pub fn is_p_dependent(&self, p: &str, x: &str) -> bool {
        self.p_dependent.get(p).is_some_and(|s| s.contains(x))
    }

    pub fn p_dependent(&self, p: &str) -> BTreeSet<String> {
        self.p_dependent.get(p).cloned().unwrap_or_default()
    }

    /// A monomial is p-dependent if one of its variables is.
    pub fn monomial_p_dependent(&self, p: &str, m: &Monomial) -> bool {
        m.vars().any(|v| self.is_p_dependent(p, v))
    }

    pub fn is_defective(&self, x: &str) -> bool {
        self.depends_nonlinear(x, x)
    }

    pub fn defective(&self) -> BTreeSet<String> {
        self.names.iter().filter(|v| self.is_defective(v)).cloned().collect()
    }

    pub fn value_set(&self, x: &str) -> &ValueSet {
        self.values.get(x).unwrap_or(&ValueSet::Top)
    }

    pub fn is_finite(&self, x: &str) -> bool {
        matches!(self.value_set(x), ValueSet::Finite(_))
    }

    /// Values of a finite variable when all of them are numeric.
    pub fn numeric_support(&self, x: &str) -> Option<Vec<BigRational>> {
        self.value_set(x).values()?.iter().map(|v| v.as_rational()).collect()
    }

    pub fn guard_vars(&self) -> &BTreeSet<String> {
        &self.guard_vars
    }

    /// Display name: temporaries show the variable they stand for.
    pub fn display(&self, v: &str) -> String {
        match self.origin.get(v) {
            Some(o) => format!("{v}[{o}]"),
            None => v.to_string(),
        }
    }

    fn path(&self, from: usize, to: usize, need_nonlinear: bool, p: Option<&str>) -> Option<Vec<(usize, bool)>> {
        // BFS over (node, flag) where flag records that the required edge kind was used
        let n = self.names.len();
        let special = |a: usize, b: usize| match p {
            None => self.direct_nonlinear.get(a, b),
            Some(p) => self.p_direct.get(p).is_some_and(|r| r.get(a, b)),
        };
        let need = need_nonlinear || p.is_some();
        let mut prev: BTreeMap<(usize, bool), (usize, bool)> = BTreeMap::new();
        let mut queue = VecDeque::new();
        let mut seen = BTreeSet::new();
        queue.push_back((from, false));
        seen.insert((from, false));
        while let Some((a, f)) = queue.pop_front() {
            for b in 0..n {
                if !self.direct.get(a, b) {
                    continue;
                }
                let nf = f || special(a, b);
                let state = (b, nf);
                if seen.insert(state) {
                    prev.insert(state, (a, f));
                    if b == to && (nf || !need) {
                        let mut out = vec![state];
                        let mut cur = state;
                        while let Some(&pv) = prev.get(&cur) {
                            out.push(pv);
                            cur = pv;
                        }
                        out.reverse();
                        return Some(out.into_iter().map(|(i, _)| (i, false)).collect());
                    }
                    queue.push_back(state);
                }
            }
        }
        None
    }

    fn render_path(&self, path: &[(usize, bool)], p: Option<&str>) -> String {
        let mut out = self.display(&self.names[path[0].0]);
        for w in path.windows(2) {
            let (a, b) = (w[0].0, w[1].0);
            let arrow = match p {
                Some(p) if self.p_direct.get(p).is_some_and(|r| r.get(a, b)) => format!("={p}=>"),
                _ if self.direct_nonlinear.get(a, b) => "=N=>".to_string(),
                _ => "=>".to_string(),
            };
            out.push_str(&format!(" {arrow} {}", self.display(&self.names[b])));
        }
        out
    }

    /// Witness path for `x ->N+ x`, rendered like `x =N=> w => x`.
    pub fn defect_path(&self, x: &str) -> Option<String> {
        let i = self.idx(x);
        self.path(i, i, true, None).map(|p| self.render_path(&p, None))
    }

    /// Witness path for `x ->+_p y`.
    pub fn p_influence_path(&self, p: &str, x: &str, y: &str) -> Option<String> {
        self.path(self.idx(x), self.idx(y), false, Some(p))
            .map(|path| self.render_path(&path, Some(p)))
    }

    /// Multi-line explanation of a variable's classification.
    pub fn explain(&self, x: &str) -> String {
        let mut lines = Vec::new();
        match self.defect_path(x) {
            Some(path) => lines.push(format!("{path} : defective")),
            None => lines.push(format!("{x} : effective")),
        }
        match self.value_set(x) {
            ValueSet::Finite(v) => {
                let vals: Vec<String> = v.iter().map(|c| c.to_string()).collect();
                lines.push(format!("{x} : finite {{{}}}", vals.join(", ")));
            }
            ValueSet::Top => lines.push(format!("{x} : not finite")),
        }
        for (p, deps) in &self.p_dependent {
            let tag = if deps.contains(x) { "dependent" } else { "independent" };
            lines.push(format!("{x} : {p}-{tag}"));
        }
        let deps: Vec<String> = self
            .names
            .iter()
            .filter(|y| self.depends(x, y))
            .map(|y| self.display(y))
            .collect();
        lines.push(format!("{x} depends on {{{}}}", deps.join(", ")));
        lines.join("\n")
    }
}

/// Outcome of the admissibility and sensitivity-computability checks for
/// one parameter.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Classification {
    pub param: String,
    /// Guard variables are finite and no variable is defective.
    pub admissible: bool,
    /// All three sensitivity-computability conditions hold.
    pub sensitivity_computable: bool,
    pub non_finite_guard_vars: Vec<String>,
    pub defective: Vec<String>,
    /// Defective variables that depend on the parameter.
    pub p_dependent_defective: Vec<String>,
    /// Parameter-influenced dependencies on defective variables.
    pub p_influenced_defective: Vec<String>,
}

impl Classification {
    /// Human-readable list of everything that blocks the checks.
    pub fn witnesses(&self) -> Vec<String> {
        let mut out = Vec::new();
        for v in &self.non_finite_guard_vars {
            out.push(format!("guard variable {v} is not finite-valued"));
        }
        for v in &self.p_dependent_defective {
            out.push(format!("defective variable {v} is {}-dependent", self.param));
        }
        for e in &self.p_influenced_defective {
            out.push(format!("{e} reaches a defective variable"));
        }
        out
    }
}

pub fn classify(graph: &DependencyGraph, p: &str) -> Classification {
    let non_finite: Vec<String> = graph.guard_vars().iter().filter(|v| !graph.is_finite(v)).cloned().collect();
    let defective: Vec<String> = graph.defective().into_iter().collect();
    let p_dep_def: Vec<String> = defective.iter().filter(|v| graph.is_p_dependent(p, v)).cloned().collect();

    // direct p-influenced edges first, then longer paths
    let mut direct_hits = Vec::new();
    let mut path_hits = Vec::new();
    for x in graph.vars() {
        for y in &defective {
            if graph.depends(x, y) && graph.p_influenced(p, x, y) {
                let label = if graph.directly_p_influenced(p, x, y) {
                    format!("{} ->{p} {}", graph.display(x), graph.display(y))
                } else {
                    graph
                        .p_influence_path(p, x, y)
                        .unwrap_or_else(|| format!("{} ->+{p} {}", graph.display(x), graph.display(y)))
                };
                if graph.directly_p_influenced(p, x, y) {
                    direct_hits.push(label);
                } else {
                    path_hits.push(label);
                }
            }
        }
    }
    direct_hits.extend(path_hits);

    Classification {
        param: p.to_string(),
        admissible: non_finite.is_empty() && defective.is_empty(),
        sensitivity_computable: non_finite.is_empty() && p_dep_def.is_empty() && direct_hits.is_empty(),
        non_finite_guard_vars: non_finite,
        defective,
        p_dependent_defective: p_dep_def,
        p_influenced_defective: direct_hits,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::lang::parse;
    use crate::normalize::normalize;

    fn graph(src: &str) -> DependencyGraph {
        build_graph(&normalize(&parse(src).unwrap()))
    }

    #[test]
    fn non_admissible_relations() {
        let g = graph(corpus::NON_ADMISSIBLE);
        assert!(g.directly_depends("y", "z"));
        assert!(g.directly_depends_nonlinear("w", "x"));
        assert!(g.depends_nonlinear("u", "w"));
        assert_eq!(g.defective().into_iter().collect::<Vec<_>>(), ["w", "x"]);
        assert_eq!(g.p_dependent("p").into_iter().collect::<Vec<_>>(), ["u", "y", "z"]);
        let c = classify(&g, "p");
        assert!(!c.admissible);
        assert!(c.sensitivity_computable);
    }

    #[test]
    fn vaccination_relations() {
        let g = graph(corpus::VACCINATION);
        assert!(g.depends("efficiency", "vax"));
        assert!(g.depends("infected_prob", "vax"));
        let c = classify(&g, "vax_param");
        assert!(c.admissible && c.sensitivity_computable, "{c:?}");
    }

    #[test]
    fn counter_is_linear_and_unbounded() {
        let g = graph("x = 0\nwhile true:\n  x = x + 1\nend\n");
        assert!(g.directly_depends("x", "x"));
        assert!(!g.directly_depends_nonlinear("x", "x"));
        assert!(!g.is_defective("x"));
        assert!(!g.is_finite("x"));
    }

    #[test]
    fn value_sets() {
        let g = graph("b, c = 0, 0\nwhile true:\n  b = Bernoulli(p)\n  c = 1 - b\n  vax = 1 {vp} 0\nend\n");
        for v in ["b", "c", "vax"] {
            let mut vals: Vec<_> = g.numeric_support(v).unwrap();
            vals.sort();
            assert_eq!(vals, vec![BigRational::from_integer(0.into()), BigRational::from_integer(1.into())]);
        }
    }

    #[test]
    fn p_influenced_defect_is_reported() {
        let g = graph(corpus::NON_ADMISSIBLE_P_INFLUENCED);
        let c = classify(&g, "p");
        assert!(!c.sensitivity_computable);
        assert_eq!(c.p_influenced_defective[0], "v ->p x");
    }

    #[test]
    fn defect_path_rendering() {
        let g = graph(corpus::NON_ADMISSIBLE);
        let path = g.defect_path("x").unwrap();
        assert!(path.starts_with("x ") && path.ends_with(" x") && path.contains("=N=>"), "{path}");
    }
}
