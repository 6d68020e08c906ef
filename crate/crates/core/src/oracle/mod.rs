//! Ground truth by running programs: exact path enumeration when every
//! choice is finite, Monte Carlo otherwise.

mod ir;

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::lang::Program;
use crate::normalize::NormalizedProgram;
use crate::symbolic::{rat_to_f64, Monomial, ParamValues, SymbolicError};
use ir::{CRhs, Compiled, Op};

/// Largest number of distinct states exact enumeration keeps at once.
pub const DEFAULT_STATE_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("exact enumeration is impossible: the program draws from a continuous distribution")]
    Continuous,
    #[error("exact enumeration exceeded {0} states")]
    Budget(usize),
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(String),
    #[error("invalid distribution argument: {0}")]
    InvalidArgument(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error(transparent)]
    Parameter(SymbolicError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    Exact,
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleEstimate {
    pub value: f64,
    /// Present in exact mode.
    #[serde(serialize_with = "ser_opt_rat")]
    pub exact: Option<BigRational>,
    pub std_error: f64,
    pub trials: usize,
    pub mode: OracleMode,
}

fn ser_opt_rat<S: serde::Serializer>(v: &Option<BigRational>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(q) => s.serialize_str(&crate::symbolic::fmt_rat(q)),
        None => s.serialize_none(),
    }
}

impl OracleEstimate {
    fn exact(q: BigRational) -> Self {
        Self {
            value: rat_to_f64(&q),
            exact: Some(q),
            std_error: 0.0,
            trials: 0,
            mode: OracleMode::Exact,
        }
    }

    fn sampled(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            value: mean,
            exact: None,
            std_error: (var / n).sqrt(),
            trials: xs.len(),
            mode: OracleMode::Sampled,
        }
    }
}

type Dist = HashMap<Vec<BigRational>, BigRational>;

/// A program compiled at one parameter point.
pub struct Oracle {
    code: Compiled,
    budget: usize,
}

fn push(out: &mut Dist, s: Vec<BigRational>, p: BigRational) {
    if p.is_zero() {
        return;
    }
    *out.entry(s).or_insert_with(BigRational::zero) += p;
}

fn outcomes(r: &CRhs, s: &[BigRational]) -> Result<Vec<(BigRational, BigRational)>, OracleError> {
    Ok(match r {
        CRhs::Choice(bs) => bs.iter().map(|(e, q, _)| (e.exact(s), q.clone())).collect(),
        CRhs::Bernoulli(q) => vec![(BigRational::one(), q.clone()), (BigRational::zero(), BigRational::one() - q)],
        CRhs::DiscreteUniform(lo, hi) => {
            let w = BigRational::new(BigInt::one(), BigInt::from(hi - lo + 1));
            (*lo..=*hi).map(|i| (BigRational::from_integer(BigInt::from(i)), w.clone())).collect()
        }
        CRhs::Uniform(..) | CRhs::Normal(..) => return Err(OracleError::Continuous),
    })
}

fn sample(r: &CRhs, s: &[f64], rng: &mut ChaCha8Rng) -> f64 {
    match r {
        CRhs::Choice(bs) => {
            if bs.len() == 1 {
                return bs[0].0.float(s);
            }
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (e, _, q) in bs {
                acc += q;
                if u < acc {
                    return e.float(s);
                }
            }
            bs.last().expect("nonempty choice").0.float(s)
        }
        CRhs::Bernoulli(q) => {
            if rng.random::<f64>() < rat_to_f64(q) {
                1.0
            } else {
                0.0
            }
        }
        CRhs::DiscreteUniform(lo, hi) => rng.random_range(*lo..=*hi) as f64,
        CRhs::Uniform(a, b) => a + (b - a) * rng.random::<f64>(),
        CRhs::Normal(mu, var) => {
            // Box–Muller
            let u1: f64 = 1.0 - rng.random::<f64>();
            let u2: f64 = rng.random();
            mu + var.sqrt() * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        }
    }
}

impl Oracle {
    /// Compiles the source program (structured branches, simultaneous
    /// assignments) at the given parameter values.
    pub fn from_program(prog: &Program, env: &ParamValues) -> Result<Self, OracleError> {
        check_params(prog.params.iter(), env)?;
        Ok(Self {
            code: ir::compile_program(prog, env)?,
            budget: DEFAULT_STATE_BUDGET,
        })
    }

    /// Compiles a normalized program; used to cross-check normalization.
    pub fn from_normalized(np: &NormalizedProgram, env: &ParamValues) -> Result<Self, OracleError> {
        check_params(np.params.iter(), env)?;
        Ok(Self {
            code: ir::compile_normalized(np, env)?,
            budget: DEFAULT_STATE_BUDGET,
        })
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    fn layout(&self, m: &Monomial) -> Result<Vec<(usize, u32)>, OracleError> {
        m.factors()
            .iter()
            .map(|(v, e)| {
                self.code
                    .index
                    .get(v.as_ref())
                    .map(|i| (*i, *e))
                    .ok_or_else(|| OracleError::UnknownVariable(v.to_string()))
            })
            .collect()
    }

    fn exec_exact(&self, ops: &[Op], dist: Dist) -> Result<Dist, OracleError> {
        let mut dist = dist;
        for op in ops {
            dist = match op {
                Op::Assign(items) => {
                    let mut out = Dist::with_capacity(dist.len());
                    for (s, p) in dist {
                        // simultaneous: every rhs reads `s`
                        let mut partial: Vec<(Vec<BigRational>, BigRational)> = vec![(s.clone(), p)];
                        for (v, r) in items {
                            let outs = outcomes(r, &s)?;
                            let mut next = Vec::with_capacity(partial.len() * outs.len());
                            for (t, q) in &partial {
                                for (val, w) in &outs {
                                    let mut t2 = t.clone();
                                    t2[*v] = val.clone();
                                    next.push((t2, q * w));
                                }
                            }
                            partial = next;
                        }
                        for (t, q) in partial {
                            push(&mut out, t, q);
                        }
                        if out.len() > self.budget {
                            return Err(OracleError::Budget(self.budget));
                        }
                    }
                    out
                }
                Op::If(branches, otherwise) => {
                    let mut parts: Vec<Dist> = vec![Dist::new(); branches.len() + 1];
                    for (s, p) in dist {
                        let k = branches.iter().position(|(c, _)| c.exact(&s)).unwrap_or(branches.len());
                        parts[k].insert(s, p);
                    }
                    let mut out = Dist::new();
                    for (k, part) in parts.into_iter().enumerate() {
                        if part.is_empty() {
                            continue;
                        }
                        let body = if k < branches.len() { &branches[k].1 } else { otherwise };
                        for (s, p) in self.exec_exact(body, part)? {
                            push(&mut out, s, p);
                        }
                    }
                    out
                }
            };
        }
        Ok(dist)
    }

    fn exec_float(ops: &[Op], s: &mut Vec<f64>, rng: &mut ChaCha8Rng) {
        for op in ops {
            match op {
                Op::Assign(items) => {
                    let vals: Vec<f64> = items.iter().map(|(_, r)| sample(r, s, rng)).collect();
                    for ((v, _), x) in items.iter().zip(vals) {
                        s[*v] = x;
                    }
                }
                Op::If(branches, otherwise) => {
                    let body = branches
                        .iter()
                        .find(|(c, _)| c.float(s))
                        .map(|(_, b)| b)
                        .unwrap_or(otherwise);
                    Self::exec_float(body, s, rng);
                }
            }
        }
    }

    fn start(&self) -> Result<Dist, OracleError> {
        let zero = vec![BigRational::zero(); self.code.index.len()];
        self.exec_exact(&self.code.init, Dist::from([(zero, BigRational::one())]))
    }

    /// Exact `E(M)` after `n` iterations for every `n` in `0..=n_max`.
    pub fn exact_series(&self, m: &Monomial, n_max: usize) -> Result<Vec<BigRational>, OracleError> {
        let layout = self.layout(m)?;
        let moment = |d: &Dist| -> BigRational {
            d.iter()
                .map(|(s, p)| {
                    layout
                        .iter()
                        .fold(p.clone(), |acc, (v, e)| acc * crate::symbolic::pow_rat(&s[*v], *e))
                })
                .sum()
        };
        let mut dist = self.start()?;
        let mut out = vec![moment(&dist)];
        for _ in 0..n_max {
            dist = self.exec_exact(&self.code.body, dist)?;
            out.push(moment(&dist));
        }
        Ok(out)
    }

    pub fn exact_moment(&self, m: &Monomial, n: usize) -> Result<OracleEstimate, OracleError> {
        let series = self.exact_series(m, n)?;
        Ok(OracleEstimate::exact(series[n].clone()))
    }

    /// Per-trial values of `M` after `n` iterations; trial `t` uses stream
    /// `t` of the seeded generator, so results do not depend on threading.
    fn trial_values(&self, m: &Monomial, n: usize, trials: usize, seed: u64) -> Result<Vec<f64>, OracleError> {
        let layout = self.layout(m)?;
        let width = self.code.index.len();
        Ok((0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(t as u64);
                let mut s = vec![0.0; width];
                Self::exec_float(&self.code.init, &mut s, &mut rng);
                for _ in 0..n {
                    Self::exec_float(&self.code.body, &mut s, &mut rng);
                }
                layout.iter().fold(1.0, |acc, (v, e)| acc * s[*v].powi(*e as i32))
            })
            .collect())
    }

    pub fn sampled_moment(&self, m: &Monomial, n: usize, trials: usize, seed: u64) -> Result<OracleEstimate, OracleError> {
        Ok(OracleEstimate::sampled(&self.trial_values(m, n, trials, seed)?))
    }
}

fn check_params<'a>(declared: impl Iterator<Item = &'a String>, env: &ParamValues) -> Result<(), OracleError> {
    for p in declared {
        if !env.contains_key(p) {
            return Err(OracleError::UnknownParameter(p.clone()));
        }
    }
    Ok(())
}

/// Exact `E(M_n)` by enumerating every execution path.
pub fn enumerate_moment(prog: &Program, m: &Monomial, n: usize, env: &ParamValues) -> Result<OracleEstimate, OracleError> {
    Oracle::from_program(prog, env)?.exact_moment(m, n)
}

/// Monte Carlo estimate of `E(M_n)`.
pub fn sample_moment(
    prog: &Program,
    m: &Monomial,
    n: usize,
    env: &ParamValues,
    trials: usize,
    seed: u64,
) -> Result<OracleEstimate, OracleError> {
    Oracle::from_program(prog, env)?.sampled_moment(m, n, trials, seed)
}

/// Exact enumeration when possible, sampling otherwise.
pub fn estimate_moment(
    prog: &Program,
    m: &Monomial,
    n: usize,
    env: &ParamValues,
    trials: usize,
    seed: u64,
) -> Result<OracleEstimate, OracleError> {
    let oracle = Oracle::from_program(prog, env)?;
    match oracle.exact_moment(m, n) {
        Err(OracleError::Continuous) | Err(OracleError::Budget(_)) => oracle.sampled_moment(m, n, trials, seed),
        other => other,
    }
}

/// How [`fd_sensitivity`] evaluates the moment at the shifted points.
#[derive(Clone, Copy, Debug)]
pub enum FdMethod {
    Exact,
    Sampled { trials: usize, seed: u64 },
}

/// Central difference `(E_{p+ε}(M_n) − E_{p−ε}(M_n)) / 2ε`. Sampled
/// differences use common random numbers at both points.
pub fn fd_sensitivity(
    prog: &Program,
    m: &Monomial,
    p: &str,
    n: usize,
    env: &ParamValues,
    eps: &BigRational,
    method: FdMethod,
) -> Result<OracleEstimate, OracleError> {
    let base = env.get(p).ok_or_else(|| OracleError::UnknownParameter(p.to_string()))?;
    let mut hi = env.clone();
    hi.insert(p.to_string(), base + eps);
    let mut lo = env.clone();
    lo.insert(p.to_string(), base - eps);
    let two_eps = eps * BigRational::from_integer(BigInt::from(2));
    match method {
        FdMethod::Exact => {
            let a = Oracle::from_program(prog, &hi)?.exact_moment(m, n)?;
            let b = Oracle::from_program(prog, &lo)?.exact_moment(m, n)?;
            let d = (a.exact.expect("exact") - b.exact.expect("exact")) / two_eps;
            Ok(OracleEstimate::exact(d))
        }
        FdMethod::Sampled { trials, seed } => {
            let a = Oracle::from_program(prog, &hi)?.trial_values(m, n, trials, seed)?;
            let b = Oracle::from_program(prog, &lo)?.trial_values(m, n, trials, seed)?;
            let h = two_eps.to_f64().unwrap_or_else(|| rat_to_f64(&two_eps));
            let diffs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x - y) / h).collect();
            Ok(OracleEstimate::sampled(&diffs))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::lang::{parse, parse_monomial};
    use crate::normalize::normalize;
    use crate::symbolic::parse_rational;

    fn env(pairs: &[(&str, &str)]) -> ParamValues {
        pairs.iter().map(|(k, v)| (k.to_string(), parse_rational(v).unwrap())).collect()
    }

    fn mono(prog: &Program, s: &str) -> Monomial {
        parse_monomial(s, &prog.vars).unwrap()
    }

    #[test]
    fn fair_walk_second_moment_is_n() {
        let prog = parse("x = 0\nwhile true:\n  x = x + 1 {1/2} x - 1\nend\n").unwrap();
        let o = Oracle::from_program(&prog, &ParamValues::new()).unwrap();
        let s = o.exact_series(&mono(&prog, "x^2"), 6).unwrap();
        let expect: Vec<BigRational> = (0..=6).map(|n| BigRational::from_integer(BigInt::from(n))).collect();
        assert_eq!(s, expect);
    }

    #[test]
    fn non_admissible_u_first_steps() {
        let prog = parse(corpus::NON_ADMISSIBLE).unwrap();
        let e = env(&[("p", "3/10")]);
        let m = mono(&prog, "w");
        // w is deterministic: w1 = 5·1 + 2² = 9
        let v = enumerate_moment(&prog, &m, 1, &e).unwrap();
        assert_eq!(v.exact, Some(BigRational::from_integer(BigInt::from(9))));
    }

    #[test]
    fn normalization_preserves_moments() {
        let e = env(&[("contact_param", "7/10"), ("decline", "9/10"), ("vax_param", "1/10")]);
        let prog = parse(corpus::VACCINATION).unwrap();
        let np = normalize(&prog);
        let m = mono(&prog, "infected_prob");
        let a = Oracle::from_program(&prog, &e).unwrap().exact_series(&m, 6).unwrap();
        let b = Oracle::from_normalized(&np, &e).unwrap().exact_series(&m, 6).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_is_reproducible_and_close() {
        let prog = parse(corpus::BIMODAL).unwrap();
        let vars: Vec<&String> = prog.vars.iter().collect();
        let m = Monomial::var(vars[0]);
        let mut e = ParamValues::new();
        for p in &prog.params {
            e.insert(p.clone(), BigRational::new(BigInt::from(1), BigInt::from(3)));
        }
        let a = sample_moment(&prog, &m, 3, &e, 2000, 7).unwrap();
        let b = sample_moment(&prog, &m, 3, &e, 2000, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.mode, OracleMode::Sampled);
    }

    #[test]
    fn central_difference_of_coin() {
        let prog = parse("x = 0\nwhile true:\n  x = x + 1 {p} x\nend\n").unwrap();
        let e = env(&[("p", "1/4")]);
        let eps = parse_rational("1/1000").unwrap();
        let d = fd_sensitivity(&prog, &mono(&prog, "x"), "p", 5, &e, &eps, FdMethod::Exact).unwrap();
        // E(x_n) = n·p is linear, so the difference quotient is exact
        assert_eq!(d.exact, Some(BigRational::from_integer(BigInt::from(5))));
        let s = fd_sensitivity(&prog, &mono(&prog, "x"), "p", 5, &e, &eps, FdMethod::Sampled { trials: 4000, seed: 1 })
            .unwrap();
        assert!((s.value - 5.0).abs() < 4.0 * s.std_error + 0.5, "{s:?}");
    }
}
