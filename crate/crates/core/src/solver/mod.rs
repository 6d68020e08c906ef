//! Closed forms for systems of C-finite recurrences.
//!
//! Blocks of mutually dependent sequences are solved in dependency order.
//! Each block's solution is an exponential polynomial whose bases are the
//! roots of the block's characteristic polynomial together with the bases
//! of its already solved inputs; the unknown coefficients are fitted to
//! exact seed values from forward iteration.

mod factor;

use std::collections::BTreeMap;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use thiserror::Error;

use crate::moments::SeqSymbol;
use crate::sensitivity::RecurrenceSystem;
use crate::symbolic::{
    Coeff,
    solve_linear_multi, AlgElem, CounterPoly, EigenValue, ExpPolynomial, ExpTerm, ParamExpr, SymbolicError,
};

pub use factor::{charpoly, factor_charpoly, linear_root, mpoly_sqrt, param_sqrt};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("characteristic factor of degree {degree} is not supported: {factor}")]
    UnsupportedFactor { factor: String, degree: usize },
    #[error("a block needs square roots of two different radicands ({first} and {second})")]
    MixedRadicands { first: String, second: String },
    #[error("recurrence system is not closed: no equation for {0}")]
    NotClosed(String),
    #[error("seed system of the block containing {0} is singular")]
    SingularSeeds(String),
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
}

/// Exact values of every sequence for `n = 0, 1, …`, extended on demand.
struct Seeds {
    eqs: Vec<Vec<(ParamExpr, usize)>>,
    rows: Vec<Vec<ParamExpr>>,
}

impl Seeds {
    fn get(&mut self, n: usize, i: usize) -> ParamExpr {
        while self.rows.len() <= n {
            let prev = self.rows.last().expect("initial row");
            let next = self
                .eqs
                .iter()
                .map(|terms| {
                    terms
                        .iter()
                        .fold(ParamExpr::zero(), |acc, (c, j)| &acc + &(c * &prev[*j]))
                })
                .collect();
            self.rows.push(next);
        }
        self.rows[n][i].clone()
    }
}

fn add_root(eig: &mut Vec<(EigenValue, usize)>, base: EigenValue, k: usize) {
    match eig.iter_mut().find(|(b, _)| *b == base) {
        Some((_, m)) => *m += k,
        None => eig.push((base, k)),
    }
}

/// Solves every sequence of a closed system.
pub fn solve_system(sys: &RecurrenceSystem) -> Result<BTreeMap<SeqSymbol, ExpPolynomial>, SolverError> {
    let syms: Vec<SeqSymbol> = sys.equations.keys().cloned().collect();
    let index: BTreeMap<&SeqSymbol, usize> = syms.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let mut eqs = Vec::with_capacity(syms.len());
    for s in &syms {
        let rec = &sys.equations[s];
        let mut terms = Vec::new();
        for (c, t) in &rec.rhs {
            let j = *index.get(t).ok_or_else(|| SolverError::NotClosed(t.to_string()))?;
            terms.push((c.clone(), j));
        }
        eqs.push(terms);
    }
    let mut graph = DiGraph::<usize, ()>::new();
    let nodes: Vec<_> = (0..syms.len()).map(|i| graph.add_node(i)).collect();
    for (i, terms) in eqs.iter().enumerate() {
        for (_, j) in terms {
            graph.add_edge(nodes[i], nodes[*j], ());
        }
    }
    let initial: Vec<ParamExpr> = syms
        .iter()
        .map(|s| sys.initial.get(s).cloned().unwrap_or_else(ParamExpr::zero))
        .collect();
    let mut seeds = Seeds {
        eqs: eqs.clone(),
        rows: vec![initial],
    };
    let mut solved: Vec<Option<ExpPolynomial>> = vec![None; syms.len()];
    // tarjan_scc yields components with their dependencies first
    for comp in tarjan_scc(&graph) {
        let mut block: Vec<usize> = comp.iter().map(|n| graph[*n]).collect();
        block.sort_unstable();
        let forms = solve_block(&block, &eqs, &solved, &mut seeds, &syms)?;
        for (i, f) in block.iter().zip(forms) {
            solved[*i] = Some(f);
        }
    }
    Ok(syms
        .into_iter()
        .zip(solved)
        .map(|(s, f)| (s, f.expect("every block solved")))
        .collect())
}

/// Closed form of the system's target; the zero-target system gives zero.
pub fn solve_target(sys: &RecurrenceSystem) -> Result<ExpPolynomial, SolverError> {
    if sys.is_zero_target() {
        return Ok(ExpPolynomial::zero());
    }
    let mut all = solve_system(sys)?;
    Ok(all.remove(&sys.target).expect("target has an equation"))
}

fn solve_block(
    block: &[usize],
    eqs: &[Vec<(ParamExpr, usize)>],
    solved: &[Option<ExpPolynomial>],
    seeds: &mut Seeds,
    syms: &[SeqSymbol],
) -> Result<Vec<ExpPolynomial>, SolverError> {
    let m = block.len();
    let pos: BTreeMap<usize, usize> = block.iter().enumerate().map(|(k, i)| (*i, k)).collect();
    let mut a = vec![vec![ParamExpr::zero(); m]; m];
    // forcing base -> largest polynomial degree + 1
    let mut forcing: Vec<(EigenValue, usize)> = Vec::new();
    let mut n_forcing = 0usize;
    for (r, i) in block.iter().enumerate() {
        for (c, j) in &eqs[*i] {
            match pos.get(j) {
                Some(k) => a[r][*k] = &a[r][*k] + c,
                None => {
                    let f = solved[*j].as_ref().expect("dependencies solved first");
                    n_forcing = n_forcing.max(f.threshold());
                    for t in f.terms() {
                        let deg = t.coeff.degree().unwrap_or(0).max(t.surd.degree().unwrap_or(0));
                        match forcing.iter_mut().find(|(b, _)| *b == t.base) {
                            Some((_, d)) => *d = (*d).max(deg + 1),
                            None => forcing.push((t.base.clone(), deg + 1)),
                        }
                    }
                }
            }
        }
    }

    let chi = charpoly(&a);
    let mut hints: Vec<ParamExpr> = (0..m).map(|k| a[k][k].clone()).collect();
    hints.extend(forcing.iter().filter_map(|(b, _)| match b {
        EigenValue::Rational(r) => Some(r.clone()),
        EigenValue::QuadraticRoot { .. } => None,
    }));
    let mut z0 = 0;
    let mut eig: Vec<(EigenValue, usize)> = Vec::new();
    for (f, k) in factor_charpoly(&chi, &hints) {
        match f.degree() {
            Some(1) if f.coeff(0).is_zero() => z0 += k,
            Some(1) => add_root(&mut eig, EigenValue::Rational(linear_root(&f)), k),
            Some(2) => {
                let (b, c) = (f.coeff(1), f.coeff(0));
                for index in 0..2 {
                    add_root(&mut eig, EigenValue::QuadraticRoot { b: b.clone(), c: c.clone(), index }, k);
                }
            }
            Some(d) => {
                return Err(SolverError::UnsupportedFactor {
                    factor: f.render("x"),
                    degree: d,
                })
            }
            None => {}
        }
    }
    for (b, k) in forcing {
        add_root(&mut eig, b, k);
    }
    let mut radicand: Option<ParamExpr> = None;
    for (b, _) in &eig {
        if let Some(d) = b.radicand() {
            match &radicand {
                Some(r) if *r != d => {
                    return Err(SolverError::MixedRadicands {
                        first: r.to_string(),
                        second: d.to_string(),
                    })
                }
                _ => radicand = Some(d),
            }
        }
    }

    let n0 = n_forcing + z0;
    let unknowns: usize = eig.iter().map(|(_, k)| k).sum();
    let prefixes: Vec<Vec<ParamExpr>> = block.iter().map(|i| (0..n0).map(|n| seeds.get(n, *i)).collect()).collect();
    if unknowns == 0 {
        return Ok(prefixes.into_iter().map(|p| ExpPolynomial::new(p, Vec::new())).collect());
    }

    let columns: Vec<(AlgElem, usize)> = eig
        .iter()
        .flat_map(|(b, k)| {
            let base = b.as_alg();
            (0..*k).map(move |j| (base.clone(), j))
        })
        .collect();
    let matrix: Vec<Vec<AlgElem>> = (n0..n0 + unknowns)
        .map(|n| {
            columns
                .iter()
                .map(|(base, j)| {
                    let nj = ParamExpr::from_int((n as i64).pow(*j as u32));
                    base.pow(n as u32).mul_ref(&AlgElem::from_rat(nj))
                })
                .collect()
        })
        .collect();
    let rhs: Vec<Vec<AlgElem>> = (n0..n0 + unknowns)
        .map(|n| block.iter().map(|i| AlgElem::from_rat(seeds.get(n, *i))).collect())
        .collect();
    let sol = solve_linear_multi(matrix, rhs).map_err(|e| match e {
        SymbolicError::SingularSystem => SolverError::SingularSeeds(syms[block[0]].to_string()),
        other => SolverError::Symbolic(other),
    })?;

    let mut out = Vec::with_capacity(m);
    for (k, prefix) in prefixes.into_iter().enumerate() {
        let mut terms = Vec::new();
        let mut col = 0;
        for (b, mult) in &eig {
            let coeffs: Vec<&AlgElem> = (0..*mult).map(|j| &sol[col + j][k]).collect();
            col += mult;
            let rat = CounterPoly::from_coeffs(coeffs.iter().map(|c| c.rat.clone()).collect());
            let irr = CounterPoly::from_coeffs(coeffs.iter().map(|c| c.irr.clone()).collect());
            match b {
                EigenValue::Rational(r) => {
                    debug_assert!(irr.is_zero(), "irrational coefficient on a rational base");
                    terms.push(ExpTerm::rational(r.clone(), rat));
                }
                EigenValue::QuadraticRoot { .. } => terms.push(ExpTerm {
                    base: b.clone(),
                    coeff: rat,
                    surd: irr,
                }),
            }
        }
        out.push(ExpPolynomial::new(prefix, terms));
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
