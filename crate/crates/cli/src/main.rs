use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

use probsens_core::corpus;
use probsens_core::oracle::{fd_sensitivity, FdMethod, Oracle, OracleError, OracleEstimate, DEFAULT_STATE_BUDGET};
use probsens_core::pipeline::{
    analyze, parse_assignments, prepare, AnalysisError, AnalysisRequest, Method, Prepared,
};
use probsens_core::sensitivity::SensitivityOptions;
use probsens_core::symbolic::{parse_rational, ParamValues};

mod bench;

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("oracle: {0}")]
    Oracle(#[from] OracleError),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
    #[error("{0} benchmark rows did not match")]
    BenchFailed(usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Analysis(e) => e.exit_code() as u8,
            CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::Oracle(_) | CliError::BenchFailed(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "probsens", version, about = "Exact parameter sensitivities of probabilistic loops")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed form of a moment or of its sensitivity to a parameter.
    Analyze(AnalyzeArgs),
    /// Admissibility and sensitivity-computability checks.
    Classify(ClassifyArgs),
    /// Print the recurrence system without solving it.
    DumpRecurrences(AnalyzeArgs),
    /// Moments and finite-difference sensitivities by simulation.
    Simulate(SimulateArgs),
    /// Run a benchmark manifest and print a Rec-count table.
    Bench(bench::BenchArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub(crate) enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Program file, or `corpus:<id>` for a bundled program.
    program: String,
    /// Monomial over program variables, e.g. `x*y^2`.
    #[arg(long)]
    target: String,
    /// Parameter to differentiate by; omit for the plain moment.
    #[arg(long)]
    wrt: Option<String>,
    #[arg(long, default_value = "auto")]
    method: Method,
    /// Parameter point, e.g. `a=0.7,b=1/10`.
    #[arg(long)]
    eval: Option<String>,
    /// Iterations to evaluate at (comma separated).
    #[arg(long, value_delimiter = ',')]
    at_n: Vec<usize>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    /// Also print the normalized program.
    #[arg(long)]
    dump_normalized: bool,
    /// Also print the dependency analysis behind the classification.
    #[arg(long)]
    explain: bool,
    /// Equation cap (defaults to PROBSENS_EQ_CAP or 500).
    #[arg(long)]
    cap: Option<usize>,
}

#[derive(Args)]
struct ClassifyArgs {
    program: String,
    #[arg(long)]
    wrt: Option<String>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    #[arg(long)]
    explain: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SimMode {
    /// Exact enumeration, falling back to sampling.
    Auto,
    Exact,
    Sampled,
}

#[derive(Args)]
struct SimulateArgs {
    /// Program file, or `corpus:<id>` for a bundled program.
    program: String,
    /// Monomial whose expectation is estimated.
    #[arg(long)]
    target: String,
    /// Parameter point; every parameter needs a value.
    #[arg(long, default_value = "")]
    eval: String,
    /// Iterations to estimate at (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "10")]
    at_n: Vec<usize>,
    /// Central-difference sensitivity w.r.t. this parameter.
    #[arg(long)]
    wrt: Option<String>,
    #[arg(long, default_value = "1/10000")]
    eps: String,
    #[arg(long, value_enum, default_value = "auto")]
    mode: SimMode,
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_STATE_BUDGET)]
    budget: usize,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

struct Source {
    id: String,
    text: String,
}

fn load(spec: &str) -> Result<Source, CliError> {
    if let Some(id) = spec.strip_prefix("corpus:") {
        let (_, text) = corpus::ALL
            .iter()
            .find(|(name, _)| *name == id)
            .ok_or_else(|| CliError::Usage(format!("no bundled program `{id}`")))?;
        return Ok(Source {
            id: id.to_string(),
            text: text.to_string(),
        });
    }
    let path = PathBuf::from(spec);
    let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io {
        path: spec.to_string(),
        source,
    })?;
    let id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or(spec)
        .to_string();
    Ok(Source { id, text })
}

fn env_of(s: &str) -> Result<ParamValues, CliError> {
    parse_assignments(s).map_err(CliError::Usage)
}

/// Writes to stdout; a closed pipe (`| head`) ends the process quietly.
pub(crate) fn write_out(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: writing output: {e}");
        std::process::exit(1);
    }
}

fn emit(format: Format, text: String, value: Value) {
    match format {
        Format::Text => write_out(&text),
        Format::Json => write_out(&(serde_json::to_string_pretty(&value).expect("json") + "\n")),
    }
}

fn explain_lines(prep: &Prepared, wrt: Option<&str>) -> Vec<String> {
    let mut lines: Vec<String> = prep
        .program
        .vars
        .iter()
        .flat_map(|v| prep.graph.explain(v).lines().map(str::to_string).collect::<Vec<_>>())
        .collect();
    if wrt.is_some() {
        lines.extend(prep.classification(wrt).witnesses());
    }
    lines
}

fn run_analyze(a: &AnalyzeArgs) -> Result<(), CliError> {
    let src = load(&a.program)?;
    let mut req = AnalysisRequest::new(&src.id, &src.text, &a.target).method(a.method);
    req.wrt = a.wrt.clone();
    req.eval = a.eval.as_deref().map(env_of).transpose()?;
    req.at_n = a.at_n.clone();
    if let Some(cap) = a.cap {
        req.options.cap = cap;
    }
    let prep = prepare(&src.text)?;
    let mut text = String::new();
    let mut extra = serde_json::Map::new();
    if a.dump_normalized {
        let np = prep.normalized.render();
        text.push_str(&format!("normalized:\n{np}\n"));
        extra.insert("normalized".into(), json!(np));
    }
    if a.explain {
        let lines = explain_lines(&prep, a.wrt.as_deref());
        text.push_str(&format!("explain:\n{}\n\n", lines.join("\n")));
        extra.insert("explain".into(), json!(lines));
    }
    // diagnostics go out before a failure so --explain shows why
    let report = match analyze(&req) {
        Ok(r) => r,
        Err(e) => {
            if a.format == Format::Text {
                write_out(&text);
            }
            return Err(e.into());
        }
    };
    text.push_str(&report.render_text());
    let mut value = serde_json::to_value(&report).expect("report");
    if let Value::Object(m) = &mut value {
        m.extend(extra);
    }
    emit(a.format, text, value);
    Ok(())
}

fn run_dump(a: &AnalyzeArgs) -> Result<(), CliError> {
    let src = load(&a.program)?;
    let prep = prepare(&src.text)?;
    let m = prep.monomial(&a.target)?;
    let mut opts = SensitivityOptions::default();
    if let Some(cap) = a.cap {
        opts.cap = cap;
    }
    let (sys, method) = prep.system(&m, a.wrt.as_deref(), a.method, &opts)?;
    let method_name = serde_json::to_value(method).expect("method");
    let mut text = String::new();
    if a.dump_normalized {
        text.push_str(&format!("normalized:\n{}\n", prep.normalized.render()));
    }
    text.push_str(&format!(
        "target: {}\nmethod: {}\nRec: {}\n{}",
        sys.target,
        method_name.as_str().unwrap_or(""),
        sys.rec_count(),
        sys.render()
    ));
    let value = json!({
        "schema_version": probsens_core::pipeline::SCHEMA_VERSION,
        "program": src.id,
        "method": method_name,
        "rec": sys.rec_count(),
        "system": sys,
    });
    emit(a.format, text, value);
    Ok(())
}

fn run_classify(a: &ClassifyArgs) -> Result<(), CliError> {
    let src = load(&a.program)?;
    let prep = prepare(&src.text)?;
    if let Some(p) = &a.wrt {
        if !prep.program.params.contains(p) {
            return Err(AnalysisError::Target(format!("`{p}` is not a parameter of the program")).into());
        }
    }
    let params: Vec<String> = match &a.wrt {
        Some(p) => vec![p.clone()],
        None => prep.program.params.iter().cloned().collect(),
    };
    let base = prep.classification(None);
    let mut text = format!(
        "program: {}\nadmissible: {}\ndefective: {{{}}}\nnon-finite guard variables: {{{}}}\n",
        src.id,
        base.admissible,
        base.defective.join(", "),
        base.non_finite_guard_vars.join(", ")
    );
    let mut per_param = Vec::new();
    for p in &params {
        let c = prep.classification(Some(p));
        text.push_str(&format!("sensitivity computable w.r.t. {p}: {}\n", c.sensitivity_computable));
        for w in c.witnesses() {
            text.push_str(&format!("  {w}\n"));
        }
        per_param.push(c);
    }
    let mut value = json!({
        "schema_version": probsens_core::pipeline::SCHEMA_VERSION,
        "program": src.id,
        "admissible": base.admissible,
        "defective": base.defective,
        "non_finite_guard_vars": base.non_finite_guard_vars,
        "parameters": per_param,
    });
    if a.explain {
        let lines = explain_lines(&prep, None);
        text.push_str(&format!("explain:\n{}\n", lines.join("\n")));
        value["explain"] = json!(lines);
    }
    emit(a.format, text, value);
    Ok(())
}

fn run_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let src = load(&a.program)?;
    let prep = prepare(&src.text)?;
    let m = prep.monomial(&a.target)?;
    let env = env_of(&a.eval)?;
    if let Some(missing) = prep.program.params.iter().find(|p| !env.contains_key(*p)) {
        return Err(CliError::Usage(format!("--eval has no value for parameter `{missing}`")));
    }
    let eps = parse_rational(&a.eps).ok_or_else(|| CliError::Usage(format!("not a number: `{}`", a.eps)))?;
    let mut rows = Vec::new();
    let mut text = String::new();
    for &n in &a.at_n {
        let est = match &a.wrt {
            Some(p) => simulate_fd(&prep, a, &m, p, n, &env, &eps)?,
            None => simulate_moment(&prep, a, &m, n, &env)?,
        };
        let exact = est.exact.as_ref().map(probsens_core::symbolic::fmt_rat);
        match &exact {
            Some(q) => text.push_str(&format!("n = {n}: {q} (~ {})\n", est.value)),
            None => text.push_str(&format!(
                "n = {n}: {} +- {} ({} trials)\n",
                est.value, est.std_error, est.trials
            )),
        }
        rows.push(json!({ "n": n, "estimate": est }));
    }
    let quantity = match &a.wrt {
        Some(p) => format!("d/d{p} E({m})"),
        None => format!("E({m})"),
    };
    let value = json!({
        "schema_version": probsens_core::pipeline::SCHEMA_VERSION,
        "program": src.id,
        "quantity": quantity,
        "results": rows,
    });
    emit(a.format, format!("{quantity}\n{text}"), value);
    Ok(())
}

fn simulate_moment(
    prep: &Prepared,
    a: &SimulateArgs,
    m: &probsens_core::symbolic::Monomial,
    n: usize,
    env: &ParamValues,
) -> Result<OracleEstimate, CliError> {
    let oracle = Oracle::from_program(&prep.program, env)?.with_budget(a.budget);
    let est = match a.mode {
        SimMode::Exact => oracle.exact_moment(m, n)?,
        SimMode::Sampled => oracle.sampled_moment(m, n, a.trials, a.seed)?,
        SimMode::Auto => match oracle.exact_moment(m, n) {
            Err(OracleError::Continuous) | Err(OracleError::Budget(_)) => {
                oracle.sampled_moment(m, n, a.trials, a.seed)?
            }
            other => other?,
        },
    };
    Ok(est)
}

fn simulate_fd(
    prep: &Prepared,
    a: &SimulateArgs,
    m: &probsens_core::symbolic::Monomial,
    p: &str,
    n: usize,
    env: &ParamValues,
    eps: &num_rational::BigRational,
) -> Result<OracleEstimate, CliError> {
    let sampled = FdMethod::Sampled {
        trials: a.trials,
        seed: a.seed,
    };
    let est = match a.mode {
        SimMode::Exact => fd_sensitivity(&prep.program, m, p, n, env, eps, FdMethod::Exact)?,
        SimMode::Sampled => fd_sensitivity(&prep.program, m, p, n, env, eps, sampled)?,
        SimMode::Auto => match fd_sensitivity(&prep.program, m, p, n, env, eps, FdMethod::Exact) {
            Err(OracleError::Continuous) | Err(OracleError::Budget(_)) => {
                fd_sensitivity(&prep.program, m, p, n, env, eps, sampled)?
            }
            other => other?,
        },
    };
    Ok(est)
}

pub(crate) fn program_path(manifest_dir: &Path, program: &str) -> String {
    if program.starts_with("corpus:") || Path::new(program).is_absolute() {
        program.to_string()
    } else {
        manifest_dir.join(program).to_string_lossy().into_owned()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze(a) => run_analyze(a),
        Command::Classify(a) => run_classify(a),
        Command::DumpRecurrences(a) => run_dump(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Bench(a) => bench::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
