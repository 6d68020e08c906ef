//! End-to-end analysis: parse, normalize, classify, build and solve the
//! recurrence system, evaluate.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::deps::{build_graph, classify, Classification, DependencyGraph};
use crate::lang::{parse, parse_monomial, validate, LangError, Program, Severity};
use crate::moments::{MomentEngine, MomentError, SeqSymbol};
use crate::normalize::{normalize, NormalizedProgram};
use crate::sensitivity::{sensitivity_system, moment_system, SensitivityOptions, RecurrenceSystem, SensitivityError};
use crate::solver::{solve_target, SolverError};
use crate::symbolic::{ep_diff, ExpPolynomial, Monomial, ParamValues, SymbolicError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("parse error: {0}")]
    Parse(#[from] LangError),
    #[error("invalid program: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("invalid argument: {0}")]
    Target(String),
    #[error("classification: {0}")]
    Classification(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("{0}")]
    Cap(String),
    #[error("singular evaluation: {0}")]
    Singular(SymbolicError),
    #[error("{0}")]
    Other(String),
}

impl AnalysisError {
    /// Process exit status for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            AnalysisError::Parse(_) | AnalysisError::Invalid(_) | AnalysisError::Target(_) => 2,
            AnalysisError::Classification(_) => 3,
            AnalysisError::Unsupported(_) => 4,
            AnalysisError::Cap(_) => 5,
            AnalysisError::Singular(_) => 6,
            AnalysisError::Other(_) => 1,
        }
    }
}

impl From<MomentError> for AnalysisError {
    fn from(e: MomentError) -> Self {
        AnalysisError::Classification(e.to_string())
    }
}

impl From<SensitivityError> for AnalysisError {
    fn from(e: SensitivityError) -> Self {
        match e {
            SensitivityError::EquationCap { .. } | SensitivityError::DegreeCap { .. } => AnalysisError::Cap(e.to_string()),
            SensitivityError::Precondition { .. } | SensitivityError::NotAdmissible { .. } => {
                AnalysisError::Classification(e.to_string())
            }
            SensitivityError::Moment(m) => m.into(),
            SensitivityError::UnknownParameter(_) => AnalysisError::Target(e.to_string()),
        }
    }
}

impl From<SolverError> for AnalysisError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::UnsupportedFactor { .. } | SolverError::MixedRadicands { .. } => {
                AnalysisError::Unsupported(e.to_string())
            }
            other => AnalysisError::Other(other.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Auto,
    Diff,
    Sensrec,
    /// Plain moment closed form (no parameter).
    Moment,
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto" => Ok(Method::Auto),
            "diff" => Ok(Method::Diff),
            "sensrec" => Ok(Method::Sensrec),
            other => Err(format!("unknown method `{other}` (expected auto, diff or sensrec)")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct AnalysisRequest {
    pub program_id: String,
    pub source: String,
    /// Monomial over program variables, e.g. `x*y^2`.
    pub target: String,
    pub wrt: Option<String>,
    pub method: Method,
    pub eval: Option<ParamValues>,
    pub at_n: Vec<usize>,
    pub options: SensitivityOptions,
}

impl AnalysisRequest {
    pub fn new(program_id: &str, source: &str, target: &str) -> Self {
        Self {
            program_id: program_id.to_string(),
            source: source.to_string(),
            target: target.to_string(),
            wrt: None,
            method: Method::Auto,
            eval: None,
            at_n: Vec::new(),
            options: SensitivityOptions::default(),
        }
    }

    pub fn wrt(mut self, p: &str) -> Self {
        self.wrt = Some(p.to_string());
        self
    }

    pub fn method(mut self, m: Method) -> Self {
        self.method = m;
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Evaluation {
    pub n: usize,
    /// Exact value (rational plus square-root terms).
    pub value: String,
    pub approx: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub program: String,
    pub target: String,
    pub parameter: Option<String>,
    pub method: Method,
    pub classification: Classification,
    pub rec: usize,
    pub closed_form: String,
    #[serde(skip)]
    pub closed_form_value: ExpPolynomial,
    pub closed_form_json: Value,
    pub evaluations: Vec<Evaluation>,
    pub elapsed_ms: f64,
}

impl AnalysisReport {
    pub fn render_text(&self) -> String {
        let c = &self.classification;
        let mut out = format!(
            "program: {}\ntarget: {}\nmethod: {}\nadmissible: {}\n",
            self.program,
            self.target,
            serde_json::to_value(self.method).expect("method").as_str().unwrap_or(""),
            c.admissible
        );
        if let Some(p) = &self.parameter {
            out.push_str(&format!("sensitivity computable w.r.t. {p}: {}\n", c.sensitivity_computable));
        }
        out.push_str(&format!("Rec: {}\nclosed form: {}\n", self.rec, self.closed_form));
        for e in &self.evaluations {
            out.push_str(&format!("n = {}: {} (~ {})\n", e.n, e.value, e.approx));
        }
        out.push_str(&format!("time: {:.1} ms\n", self.elapsed_ms));
        out
    }
}

/// A parsed, normalized and analyzed program.
pub struct Prepared {
    pub program: Program,
    pub normalized: NormalizedProgram,
    pub graph: DependencyGraph,
}

pub fn prepare(source: &str) -> Result<Prepared, AnalysisError> {
    let program = parse(source)?;
    let errors: Vec<String> = validate(&program)
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .map(|d| d.message)
        .collect();
    if !errors.is_empty() {
        return Err(AnalysisError::Invalid(errors));
    }
    let normalized = normalize(&program);
    let graph = build_graph(&normalized);
    Ok(Prepared {
        program,
        normalized,
        graph,
    })
}

impl Prepared {
    pub fn monomial(&self, text: &str) -> Result<Monomial, AnalysisError> {
        parse_monomial(text, &self.program.vars).map_err(|e| AnalysisError::Target(e.to_string()))
    }

    pub fn classification(&self, p: Option<&str>) -> Classification {
        classify(&self.graph, p.unwrap_or(""))
    }

    /// Builds the recurrence system the request would solve, plus the method
    /// actually used.
    pub fn system(
        &self,
        m: &Monomial,
        wrt: Option<&str>,
        method: Method,
        opts: &SensitivityOptions,
    ) -> Result<(RecurrenceSystem, Method), AnalysisError> {
        let engine = MomentEngine::new(&self.normalized, &self.graph)?;
        let Some(p) = wrt else {
            return Ok((moment_system(&engine, m, opts.cap)?, Method::Moment));
        };
        if !self.program.params.contains(p) {
            return Err(AnalysisError::Target(format!("`{p}` is not a parameter of the program")));
        }
        let class = classify(&self.graph, p);
        let method = match method {
            Method::Auto | Method::Moment if class.admissible => Method::Diff,
            Method::Auto | Method::Moment => Method::Sensrec,
            m => m,
        };
        match method {
            Method::Diff => {
                if !self.graph.monomial_p_dependent(p, m) {
                    return Ok((sensitivity_system(&engine, &self.graph, m, p, opts)?, method));
                }
                if !class.admissible {
                    return Err(SensitivityError::NotAdmissible {
                        witnesses: class.witnesses(),
                    }
                    .into());
                }
                Ok((moment_system(&engine, m, opts.cap)?, method))
            }
            _ => Ok((sensitivity_system(&engine, &self.graph, m, p, opts)?, method)),
        }
    }
}

/// Closed form of the requested quantity from a built system.
pub fn closed_form(sys: &RecurrenceSystem, wrt: Option<&str>) -> Result<ExpPolynomial, AnalysisError> {
    let f = solve_target(sys)?;
    Ok(match (&sys.target, wrt) {
        (SeqSymbol::Moment(_), Some(p)) if !sys.is_zero_target() => ep_diff(&f, p),
        _ => f,
    })
}

pub fn evaluate(f: &ExpPolynomial, env: &ParamValues, ns: &[usize]) -> Result<Vec<Evaluation>, AnalysisError> {
    ns.iter()
        .map(|&n| {
            let v = f.eval(n, env).map_err(|e| match e {
                SymbolicError::UnassignedParameter(_) => AnalysisError::Target(e.to_string()),
                other => AnalysisError::Singular(other),
            })?;
            Ok(Evaluation {
                n,
                value: v.to_string(),
                approx: v.to_f64(),
            })
        })
        .collect()
}

/// Runs the whole pipeline for one request.
pub fn analyze(req: &AnalysisRequest) -> Result<AnalysisReport, AnalysisError> {
    let start = Instant::now();
    let prep = prepare(&req.source)?;
    let m = prep.monomial(&req.target)?;
    let wrt = req.wrt.as_deref();
    let (sys, method) = prep.system(&m, wrt, req.method, &req.options)?;
    let f = closed_form(&sys, wrt)?;
    let evaluations = match &req.eval {
        Some(env) => {
            let ns = if req.at_n.is_empty() { vec![10] } else { req.at_n.clone() };
            evaluate(&f, env, &ns)?
        }
        None => Vec::new(),
    };
    let target = match wrt {
        Some(p) => SeqSymbol::Sensitivity(m, p.to_string()).to_string(),
        None => SeqSymbol::Moment(m).to_string(),
    };
    Ok(AnalysisReport {
        schema_version: SCHEMA_VERSION,
        program: req.program_id.clone(),
        target,
        parameter: req.wrt.clone(),
        method,
        classification: prep.classification(wrt),
        rec: sys.rec_count(),
        closed_form: f.render(),
        closed_form_json: f.to_json(),
        closed_form_value: f,
        evaluations,
        elapsed_ms: start.elapsed().as_secs_f64() * 1000.0,
    })
}

/// Parses `a=0.7,b=1/10` into parameter values.
pub fn parse_assignments(s: &str) -> Result<ParamValues, String> {
    let mut out = BTreeMap::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| format!("expected name=value, got `{part}`"))?;
        let q = crate::symbolic::parse_rational(v.trim()).ok_or_else(|| format!("not a number: `{v}`"))?;
        out.insert(k.trim().to_string(), q);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn non_admissible_sensrec_report() {
        let req = AnalysisRequest::new("non_admissible", corpus::NON_ADMISSIBLE, "u").wrt("p").method(Method::Sensrec);
        let r = analyze(&req).unwrap();
        assert_eq!(r.rec, 9);
        assert_eq!(r.method, Method::Sensrec);
    }

    #[test]
    fn independent_target_is_zero() {
        let r = analyze(&AnalysisRequest::new("non_admissible", corpus::NON_ADMISSIBLE, "w").wrt("p")).unwrap();
        assert_eq!(r.rec, 0);
        assert!(r.closed_form_value.is_zero());
    }

    #[test]
    fn moment_path_hits_cap() {
        let mut req = AnalysisRequest::new("non_admissible", corpus::NON_ADMISSIBLE, "w");
        req.options.cap = 60;
        let err = analyze(&req).unwrap_err();
        assert_eq!(err.exit_code(), 5);
    }

    #[test]
    fn caption_value() {
        let mut req = AnalysisRequest::new("vaccination", corpus::VACCINATION, "infected_prob")
            .wrt("vax_param")
            .method(Method::Diff);
        req.eval = Some(parse_assignments("contact_param=0.7,vax_param=0.1,decline=0.9").unwrap());
        req.at_n = vec![11];
        let r = analyze(&req).unwrap();
        assert_eq!(r.rec, 2);
        assert!((r.evaluations[0].approx + 1.7).abs() < 0.05, "{:?}", r.evaluations);
    }

    #[test]
    fn parse_errors_map_to_two() {
        let err = analyze(&AnalysisRequest::new("bad", "x = \nwhile true:\nend\n", "x")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
