//! Manifest-driven benchmark runs, one child process per row.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{program_path, write_out, CliError, Format};

const DEFAULT_MANIFEST: &str = include_str!("../benchmarks/manifest.toml");

#[derive(Args)]
pub(crate) struct BenchArgs {
    /// Manifest file; the bundled benchmark suite when omitted.
    manifest: Option<PathBuf>,
    /// Per-row timeout in seconds (overrides the manifest).
    #[arg(long)]
    timeout: Option<u64>,
    /// Rows run in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Only rows whose benchmark name contains this string.
    #[arg(long)]
    filter: Option<String>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    /// Exit with status 1 when a non-soft row does not match.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Deserialize)]
pub(crate) struct Manifest {
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(rename = "row")]
    pub rows: Vec<Row>,
}

fn default_timeout() -> u64 {
    120
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub(crate) struct Row {
    pub benchmark: String,
    pub program: String,
    pub target: String,
    pub wrt: String,
    pub method: String,
    /// Reference Rec count.
    #[serde(default)]
    pub expected_rec: Option<usize>,
    /// The reference run timed out on this row.
    #[serde(default)]
    pub expected_timeout: bool,
    /// Re-authored program: the expectation is reported, not asserted.
    #[serde(default)]
    pub soft: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub(crate) enum Outcome {
    Match,
    Mismatch,
    /// Completed without a reference count.
    Observed,
    Timeout,
    Error,
}

#[derive(Clone, Debug, Serialize)]
pub(crate) struct RowResult {
    #[serde(flatten)]
    pub row: Row,
    pub observed_rec: Option<usize>,
    pub outcome: Outcome,
    pub exit_code: Option<i32>,
    pub message: Option<String>,
    pub seconds: f64,
}

impl RowResult {
    /// Whether the row counts against `--strict`.
    fn is_failure(&self) -> bool {
        if self.row.soft {
            return false;
        }
        match self.outcome {
            Outcome::Match | Outcome::Observed => false,
            Outcome::Timeout => !self.row.expected_timeout,
            Outcome::Mismatch | Outcome::Error => true,
        }
    }
}

fn run_row(exe: &Path, dir: &Path, row: &Row, timeout: Duration) -> RowResult {
    let start = Instant::now();
    let spawned = Command::new(exe)
        .arg("analyze")
        .arg(program_path(dir, &row.program))
        .args(["--target", &row.target, "--wrt", &row.wrt, "--method", &row.method, "--format", "json"])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn();
    let mut child = match spawned {
        Ok(c) => c,
        Err(e) => return finished(row, None, Outcome::Error, None, Some(e.to_string()), start),
    };
    let mut out = child.stdout.take().expect("piped stdout");
    let mut err = child.stderr.take().expect("piped stderr");
    // drain both pipes so a large closed form cannot block the child
    let out_reader = thread::spawn(move || {
        let mut s = String::new();
        let _ = out.read_to_string(&mut s);
        s
    });
    let err_reader = thread::spawn(move || {
        let mut s = String::new();
        let _ = err.read_to_string(&mut s);
        s
    });
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break Some(status),
            Ok(None) if start.elapsed() >= timeout => {
                let _ = child.kill();
                let _ = child.wait();
                break None;
            }
            Ok(None) => thread::sleep(Duration::from_millis(20)),
            Err(e) => return finished(row, None, Outcome::Error, None, Some(e.to_string()), start),
        }
    };
    let stdout = out_reader.join().unwrap_or_default();
    let stderr = err_reader.join().unwrap_or_default();
    let Some(status) = status else {
        return finished(row, None, Outcome::Timeout, None, None, start);
    };
    let code = status.code();
    if !status.success() {
        let msg = stderr.trim().trim_start_matches("error: ").to_string();
        return finished(row, None, Outcome::Error, code, Some(msg), start);
    }
    let rec = serde_json::from_str::<Value>(&stdout)
        .ok()
        .and_then(|v| v["rec"].as_u64())
        .map(|r| r as usize);
    let Some(rec) = rec else {
        return finished(row, None, Outcome::Error, code, Some("unreadable report".into()), start);
    };
    let outcome = match row.expected_rec {
        Some(e) if e == rec => Outcome::Match,
        Some(_) => Outcome::Mismatch,
        None => Outcome::Observed,
    };
    finished(row, Some(rec), outcome, code, None, start)
}

fn finished(
    row: &Row,
    observed_rec: Option<usize>,
    outcome: Outcome,
    exit_code: Option<i32>,
    message: Option<String>,
    start: Instant,
) -> RowResult {
    RowResult {
        row: row.clone(),
        observed_rec,
        outcome,
        exit_code,
        message,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub(crate) fn run_manifest(exe: &Path, dir: &Path, rows: &[Row], timeout: Duration, jobs: usize) -> Vec<RowResult> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<RowResult>>> = Mutex::new(vec![None; rows.len()]);
    thread::scope(|s| {
        for _ in 0..jobs.max(1) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(row) = rows.get(i) else { break };
                let r = run_row(exe, dir, row, timeout);
                results.lock().expect("results lock")[i] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .expect("results lock")
        .into_iter()
        .map(|r| r.expect("every row ran"))
        .collect()
}

fn render_table(results: &[RowResult]) -> String {
    let header = ["benchmark", "sensitivity", "method", "expected", "observed", "time (s)", "status"];
    let cells: Vec<[String; 7]> = results
        .iter()
        .map(|r| {
            let expected = match (r.row.expected_rec, r.row.expected_timeout) {
                (Some(e), _) => e.to_string(),
                (None, true) => "TO".into(),
                _ => "-".into(),
            };
            let observed = match (&r.outcome, r.observed_rec) {
                (Outcome::Timeout, _) => "TO".into(),
                (_, Some(k)) => k.to_string(),
                _ => format!("exit {}", r.exit_code.map_or("?".into(), |c| c.to_string())),
            };
            let mut status = match r.outcome {
                Outcome::Match => "match",
                Outcome::Mismatch => "MISMATCH",
                Outcome::Observed => "observed",
                Outcome::Timeout if r.row.expected_timeout => "timeout (as expected)",
                Outcome::Timeout => "TIMEOUT",
                Outcome::Error => "ERROR",
            }
            .to_string();
            if r.row.soft && matches!(r.outcome, Outcome::Mismatch | Outcome::Error | Outcome::Timeout) {
                status = format!("{} (soft)", status.to_lowercase());
            }
            [
                r.row.benchmark.clone(),
                format!("d/d{} E({})", r.row.wrt, r.row.target),
                r.row.method.clone(),
                expected,
                observed,
                format!("{:.2}", r.seconds),
                status,
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cols: Vec<&str>| -> String {
        let padded: Vec<String> = cols.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    out.push_str(&line(widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(String::as_str).collect()));
    for row in &cells {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    for r in results.iter().filter(|r| r.message.is_some()) {
        out.push_str(&format!(
            "\n{} d/d{} E({}) [{}]: {}",
            r.row.benchmark,
            r.row.wrt,
            r.row.target,
            r.row.method,
            r.message.as_deref().unwrap_or("")
        ));
    }
    if results.iter().any(|r| r.message.is_some()) {
        out.push('\n');
    }
    out
}

pub(crate) fn parse_manifest(text: &str) -> Result<Manifest, CliError> {
    toml::from_str(text).map_err(|e| CliError::Usage(format!("bad manifest: {e}")))
}

pub(crate) fn run(a: &BenchArgs) -> Result<(), CliError> {
    let (text, dir) = match &a.manifest {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| CliError::Io {
                path: p.display().to_string(),
                source,
            })?;
            let dir = p.parent().map(Path::to_path_buf).unwrap_or_default();
            (text, dir)
        }
        None => (DEFAULT_MANIFEST.to_string(), PathBuf::from(".")),
    };
    let manifest = parse_manifest(&text)?;
    let rows: Vec<Row> = manifest
        .rows
        .into_iter()
        .filter(|r| a.filter.as_deref().is_none_or(|f| r.benchmark.contains(f)))
        .collect();
    let exe = std::env::current_exe().map_err(|e| CliError::Usage(format!("cannot locate executable: {e}")))?;
    let timeout = Duration::from_secs(a.timeout.unwrap_or(manifest.timeout_secs));
    let results = run_manifest(&exe, &dir, &rows, timeout, a.jobs);
    let failures = results.iter().filter(|r| r.is_failure()).count();
    match a.format {
        Format::Text => write_out(&render_table(&results)),
        Format::Json => {
            let v = serde_json::json!({
                "schema_version": probsens_core::pipeline::SCHEMA_VERSION,
                "timeout_secs": timeout.as_secs(),
                "rows": results,
                "failures": failures,
            });
            write_out(&(serde_json::to_string_pretty(&v).expect("json") + "\n"));
        }
    }
    if a.strict && failures > 0 {
        return Err(CliError::BenchFailed(failures));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_manifest_parses() {
        let m = parse_manifest(DEFAULT_MANIFEST).unwrap();
        assert_eq!(m.timeout_secs, 120);
        assert!(m.rows.iter().any(|r| r.benchmark == "Non-Admissible" && r.expected_rec == Some(9)));
        for r in &m.rows {
            assert!(r.expected_rec.is_none() || !r.expected_timeout, "{}", r.benchmark);
        }
    }

    #[test]
    fn soft_rows_never_fail() {
        let row = Row {
            benchmark: "x".into(),
            program: "corpus:bimodal".into(),
            target: "x".into(),
            wrt: "p".into(),
            method: "diff".into(),
            expected_rec: Some(3),
            expected_timeout: false,
            soft: true,
        };
        let mut r = finished(&row, Some(1), Outcome::Mismatch, Some(0), None, Instant::now());
        assert!(!r.is_failure());
        r.row.soft = false;
        assert!(r.is_failure());
        r.outcome = Outcome::Timeout;
        r.row.expected_timeout = true;
        assert!(!r.is_failure());
    }
}
