//! Acceptance criteria, one PASS/FAIL line each. Reference values are
//! computed here from independent formulas, exact enumeration or plain
//! iteration, never from the library's own solver output.

use std::collections::{BTreeMap, BTreeSet};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use probsens_core::corpus;
use probsens_core::lang::parse_poly;
use probsens_core::moments::{MomentEngine, Recurrence, SeqSymbol};
use probsens_core::oracle::{fd_sensitivity, FdMethod, Oracle};
use probsens_core::pipeline::{analyze, closed_form, prepare, AnalysisRequest, Method, Prepared};
use probsens_core::sensitivity::{moment_system, sensitivity_system, RecurrenceSystem, SensitivityOptions};
use probsens_core::solver::{solve_system, solve_target};
use probsens_core::symbolic::{ep_diff, pow_rat, ExpPolynomial, Monomial, ParamExpr, ParamValues};

type Outcome = Result<String, String>;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn pe(s: &str) -> ParamExpr {
    parse_poly(s, &BTreeSet::new())
        .expect("parameter expression")
        .as_constant()
        .expect("no program variables")
}

fn opts() -> SensitivityOptions {
    SensitivityOptions {
        cap: 500,
        debug: false,
    }
}

fn within(limit: Duration, start: Instant, detail: String) -> Outcome {
    let took = start.elapsed();
    if took > limit {
        Err(format!("{detail}; took {took:.2?}, limit {limit:?}"))
    } else {
        Ok(format!("{detail} ({took:.2?})"))
    }
}

/// Random point with every coordinate in (0, 1).
fn unit_probe(rng: &mut ChaCha8Rng, names: &[&str]) -> ParamValues {
    names
        .iter()
        .map(|p| {
            let d = rng.random_range(5..60);
            (p.to_string(), q(rng.random_range(1..d), d))
        })
        .collect()
}

fn vaccination() -> (Prepared, ExpPolynomial, RecurrenceSystem) {
    let prep = prepare(corpus::VACCINATION).expect("vaccination parses");
    let engine = MomentEngine::new(&prep.normalized, &prep.graph).expect("engine");
    let m = prep.monomial("infected_prob").expect("monomial");
    let sys = moment_system(&engine, &m, 500).expect("moment system");
    let f = solve_target(&sys).expect("solvable");
    (prep, f, sys)
}

const VAX_PARAMS: [&str; 3] = ["contact_param", "decline", "vax_param"];

/// `cp + 3·vp·cp·((d − d·vp)^(n−1) − 1) / (4(d·vp − d + 1))` for n ≥ 1.
fn infected_reference(n: usize, env: &ParamValues) -> BigRational {
    let (cp, d, vp) = (&env["contact_param"], &env["decline"], &env["vax_param"]);
    let base = d - d * vp;
    let num = q(3, 1) * vp * cp * (pow_rat(&base, n as u32 - 1) - BigRational::one());
    cp + num / (q(4, 1) * (d * vp - d + BigRational::one()))
}

/// Derivative of [`infected_reference`] by `vp`; `printed` selects the
/// variant with `d(1+vp)` in the numerator.
fn infected_sensitivity_reference(n: usize, env: &ParamValues, printed: bool) -> BigRational {
    let (cp, d, vp) = (&env["contact_param"], &env["decline"], &env["vax_param"]);
    let one = BigRational::one();
    let nn = BigRational::from_integer(BigInt::from(n));
    let factor = if printed { &one + vp } else { &one - vp };
    let inner = &one - vp * &nn + d * factor * (&nn * vp - vp - &one);
    let s = &one + d * vp - d;
    let first = q(3, 1) * cp * inner * pow_rat(&(d * (&one - vp)), n as u32)
        / (q(4, 1) * (vp - &one) * (vp - &one) * d * &s * &s);
    let second = q(3, 1) * cp * (d - &one) / (q(4, 1) * &s * &s);
    first + second
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (_, f, sys) = vaccination();
    let ip = SeqSymbol::Moment(Monomial::var("infected_prob"));
    let eff = SeqSymbol::Moment(Monomial::var("efficiency"));
    let one = SeqSymbol::moment_one();
    let expected = [
        Recurrence::new(ip.clone(), [(pe("contact_param"), one.clone()), (pe("-contact_param"), eff.clone())]),
        Recurrence::new(
            eff.clone(),
            [(pe("decline - decline*vax_param"), eff.clone()), (pe("3/4*vax_param"), one.clone())],
        ),
    ];
    let got: Vec<&Recurrence> = sys.equations.iter().filter(|(s, _)| !s.is_moment_one()).map(|(_, r)| r).collect();
    if got.len() != 2 {
        return Err(format!("expected 2 equations, got {}:\n{}", got.len(), sys.render()));
    }
    for e in &expected {
        if sys.equations.get(&e.lhs) != Some(e) {
            return Err(format!("equation for {} differs:\n{}", e.lhs, sys.render()));
        }
        if !sys.initial[&e.lhs].is_zero() {
            return Err(format!("initial value of {} is {}", e.lhs, sys.initial[&e.lhs]));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let env = unit_probe(&mut rng, &VAX_PARAMS);
        for n in 1..=12 {
            let got = f.eval(n, &env).map_err(|e| e.to_string())?;
            let want = infected_reference(n, &env);
            if got.as_rational() != Some(&want) {
                return Err(format!("n = {n} at {env:?}: got {got}, want {want}"));
            }
        }
    }
    within(Duration::from_secs(5), start, "2 equations, zero initial values, 240 exact matches".into())
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let (_, f, _) = vaccination();
    let df = ep_diff(&f, "vax_param");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut printed_mismatch = 0;
    for _ in 0..20 {
        let env = unit_probe(&mut rng, &VAX_PARAMS);
        for n in 1..=12 {
            let got = df.eval(n, &env).map_err(|e| e.to_string())?;
            let want = infected_sensitivity_reference(n, &env, false);
            if got.as_rational() != Some(&want) {
                return Err(format!("n = {n} at {env:?}: got {got}, want {want}"));
            }
            if got.as_rational() != Some(&infected_sensitivity_reference(n, &env, true)) {
                printed_mismatch += 1;
            }
        }
    }
    within(
        Duration::from_secs(5),
        start,
        format!(
            "240 exact matches with the d(1-vp) form; the d(1+vp) variant differs at {printed_mismatch}/240 probes"
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut req = AnalysisRequest::new("vaccination", corpus::VACCINATION, "infected_prob")
        .wrt("vax_param")
        .method(Method::Diff);
    req.eval = Some(
        [("decline", q(9, 10)), ("contact_param", q(7, 10)), ("vax_param", q(1, 10))]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
    );
    req.at_n = vec![11];
    let r = analyze(&req).map_err(|e| e.to_string())?;
    let v = r.evaluations[0].approx;
    if (v + 1.7).abs() <= 0.05 {
        Ok(format!("value {v:.5} = {}", r.evaluations[0].value))
    } else {
        Err(format!("value {v} outside -1.7 +- 0.05"))
    }
}

fn names(sys: &RecurrenceSystem) -> BTreeSet<String> {
    sys.equations.keys().filter(|s| !s.is_moment_one()).map(|s| s.to_string()).collect()
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let prep = prepare(corpus::NON_ADMISSIBLE).map_err(|e| e.to_string())?;
    let engine = MomentEngine::new(&prep.normalized, &prep.graph).map_err(|e| e.to_string())?;
    let m = prep.monomial("u").map_err(|e| e.to_string())?;
    let sys = sensitivity_system(&engine, &prep.graph, &m, "p", &opts()).map_err(|e| e.to_string())?;
    let mono = |s: &str| prep.monomial(s).expect("monomial");
    let mut expected = BTreeSet::new();
    for s in ["z", "y", "u", "y*z", "z^2"] {
        expected.insert(SeqSymbol::Sensitivity(mono(s), "p".into()).to_string());
    }
    for s in ["z", "y", "y*z", "z^2"] {
        expected.insert(SeqSymbol::Moment(mono(s)).to_string());
    }
    let got = names(&sys);
    if got != expected || sys.rec_count() != 9 {
        return Err(format!(
            "Rec {}; missing {:?}; unexpected {:?}",
            sys.rec_count(),
            expected.difference(&got).collect::<Vec<_>>(),
            got.difference(&expected).collect::<Vec<_>>()
        ));
    }
    within(Duration::from_secs(10), start, "Rec = 9 with the expected equations".into())
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let rows = [
        ("vaccination", corpus::VACCINATION, "infected_prob", "vax_param", Method::Diff, 2),
        ("vaccination", corpus::VACCINATION, "infected_prob^2", "vax_param", Method::Diff, 2),
        ("non_admissible", corpus::NON_ADMISSIBLE, "u", "p", Method::Sensrec, 9),
        ("non_admissible", corpus::NON_ADMISSIBLE, "y^2", "p", Method::Sensrec, 9),
        ("non_admissible_2", corpus::NON_ADMISSIBLE_2, "y", "par", Method::Sensrec, 5),
        ("non_admissible_2", corpus::NON_ADMISSIBLE_2, "x*z", "par", Method::Sensrec, 4),
        ("non_admissible_3", corpus::NON_ADMISSIBLE_3, "total", "p", Method::Sensrec, 6),
        ("non_admissible_3", corpus::NON_ADMISSIBLE_3, "z1^2", "p", Method::Sensrec, 12),
        ("non_admissible_4", corpus::NON_ADMISSIBLE_4, "z", "p1", Method::Sensrec, 4),
        ("non_admissible_4", corpus::NON_ADMISSIBLE_4, "cnt^2", "p1", Method::Sensrec, 3),
    ];
    let mut failures = Vec::new();
    let mut counts = Vec::new();
    for (id, src, target, p, method, want) in rows {
        let prep = prepare(src).map_err(|e| e.to_string())?;
        let m = prep.monomial(target).map_err(|e| e.to_string())?;
        match prep.system(&m, Some(p), method, &opts()) {
            Ok((sys, _)) => {
                counts.push(sys.rec_count().to_string());
                if sys.rec_count() != want {
                    failures.push(format!(
                        "{id} d/d{p} E({target}): Rec {} != {want}; worklist {:?}",
                        sys.rec_count(),
                        names(&sys)
                    ));
                }
            }
            Err(e) => failures.push(format!("{id} d/d{p} E({target}): {e}")),
        }
    }
    if !failures.is_empty() {
        return Err(failures.join("\n    "));
    }
    within(Duration::from_secs(120), start, format!("Rec counts {}", counts.join(", ")))
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1e-12)
}

fn fd_check(src: &str, target: &str, p: &str, env: &ParamValues, ns: std::ops::RangeInclusive<usize>) -> Outcome {
    let prep = prepare(src).map_err(|e| e.to_string())?;
    let m = prep.monomial(target).map_err(|e| e.to_string())?;
    let (sys, _) = prep.system(&m, Some(p), Method::Sensrec, &opts()).map_err(|e| e.to_string())?;
    let f = closed_form(&sys, Some(p)).map_err(|e| e.to_string())?;
    let eps = q(1, 10_000);
    let mut worst: f64 = 0.0;
    for n in ns {
        let exact = f.eval(n, env).map_err(|e| e.to_string())?.to_f64();
        let fd = fd_sensitivity(&prep.program, &m, p, n, env, &eps, FdMethod::Exact)
            .map_err(|e| e.to_string())?
            .value;
        if !rel_close(exact, fd, 1e-3) {
            return Err(format!("d/d{p} E({target}) at n = {n}: closed form {exact}, central difference {fd}"));
        }
        worst = worst.max((exact - fd).abs() / fd.abs().max(1e-12));
    }
    Ok(format!("{worst:.1e}"))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let env2: ParamValues = [("p".to_string(), q(3, 10))].into_iter().collect();
    let a = fd_check(corpus::NON_ADMISSIBLE, "u", "p", &env2, 1..=8)?;
    let env1: ParamValues = [("decline", q(9, 10)), ("contact_param", q(7, 10)), ("vax_param", q(1, 10))]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    let b = fd_check(corpus::VACCINATION, "infected_prob", "vax_param", &env1, 1..=8)?;
    within(
        Duration::from_secs(60),
        start,
        format!("worst relative error {a} (non_admissible u), {b} (vaccination)"),
    )
}

fn targets(prep: &Prepared, id: &str) -> Vec<String> {
    prep.program
        .vars
        .iter()
        .filter(|v| id != "coin_flips_50" || *v == "c1" || *v == "total")
        .flat_map(|v| [v.clone(), format!("{v}^2")])
        .collect()
}

fn same_value(a: &ExpPolynomial, b: &ExpPolynomial, n: usize, env: &ParamValues) -> Result<bool, String> {
    let (x, y) = match (a.eval(n, env), b.eval(n, env)) {
        (Ok(x), Ok(y)) => (x, y),
        // singular probe for this form; skip it
        _ => return Ok(true),
    };
    Ok(match (x.as_rational(), y.as_rational()) {
        (Some(r), Some(s)) => r == s,
        _ => rel_close(x.to_f64(), y.to_f64(), 1e-9),
    })
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut compared = 0;
    let mut programs = BTreeSet::new();
    let mut capped = Vec::new();
    for (id, src) in corpus::ALL {
        let prep = prepare(src).map_err(|e| e.to_string())?;
        let params: Vec<String> = prep.program.params.iter().cloned().collect();
        let names: Vec<&str> = params.iter().map(String::as_str).collect();
        for p in &params {
            if !prep.classification(Some(p)).admissible {
                continue;
            }
            programs.insert(*id);
            for t in targets(&prep, id) {
                let m = prep.monomial(&t).map_err(|e| e.to_string())?;
                let built: Vec<_> = [Method::Diff, Method::Sensrec]
                    .into_iter()
                    .map(|method| prep.system(&m, Some(p), method, &opts()))
                    .collect();
                // both closures diverging is a timeout row, not a disagreement
                if built.iter().all(|r| matches!(r, Err(e) if e.exit_code() == 5)) {
                    capped.push(format!("{id} E({t})"));
                    continue;
                }
                let forms: Vec<ExpPolynomial> = built
                    .into_iter()
                    .map(|r| {
                        let (sys, _) = r.map_err(|e| format!("{id} {t}: {e}"))?;
                        closed_form(&sys, Some(p)).map_err(|e| format!("{id} {t}: {e}"))
                    })
                    .collect::<Result<_, String>>()?;
                for _ in 0..20 {
                    let env = unit_probe(&mut rng, &names);
                    let n = rng.random_range(0..16);
                    if !same_value(&forms[0], &forms[1], n, &env)? {
                        return Err(format!("{id} d/d{p} E({t}) at n = {n}, {env:?}"));
                    }
                }
                compared += 1;
            }
        }
    }
    let mut detail = format!("{compared} targets over {} admissible programs, 20 probes each", programs.len());
    if !capped.is_empty() {
        detail.push_str(&format!("; both methods hit the equation cap on {}", capped.join(", ")));
    }
    Ok(detail)
}

/// Monomials of degree at most two over the program variables.
fn small_monomials(prep: &Prepared) -> Vec<Monomial> {
    let vars: Vec<&String> = prep.program.vars.iter().collect();
    let mut out = Vec::new();
    for (i, a) in vars.iter().enumerate() {
        out.push(prep.monomial(a).expect("variable"));
        for b in &vars[i..] {
            out.push(prep.monomial(&format!("{a}*{b}")).expect("product"));
        }
    }
    out
}

/// `E(M_n)` is unchanged when `p` moves, at a few points and steps where
/// exact enumeration is cheap. `None` when the program cannot be enumerated.
fn moment_ignores(prep: &Prepared, m: &Monomial, p: &str) -> Option<bool> {
    let base: ParamValues = prep.program.params.iter().map(|k| (k.clone(), q(1, 2))).collect();
    let mut values = Vec::new();
    for v in [q(1, 5), q(2, 3)] {
        let mut env = base.clone();
        env.insert(p.to_string(), v);
        let oracle = Oracle::from_program(&prep.program, &env).ok()?.with_budget(20_000);
        match oracle.exact_series(m, 4) {
            Ok(s) => values.push(s),
            // continuous draws, state blow-up or a point outside the valid range
            Err(_) => return None,
        }
    }
    Some(values[0] == values[1])
}

fn criterion_8() -> Outcome {
    let mut checked = 0;
    let mut oracle_checked = 0;
    for (id, src) in corpus::ALL {
        let prep = prepare(src).map_err(|e| e.to_string())?;
        for p in &prep.program.params {
            for m in small_monomials(&prep) {
                if prep.graph.monomial_p_dependent(p, &m) {
                    continue;
                }
                let (sys, _) = prep
                    .system(&m, Some(p), Method::Sensrec, &opts())
                    .map_err(|e| format!("{id} d/d{p} E({m}): {e}"))?;
                let f = closed_form(&sys, Some(p)).map_err(|e| e.to_string())?;
                if !f.is_zero() || sys.rec_count() != 0 {
                    return Err(format!("{id} d/d{p} E({m}) = {}", f.render()));
                }
                match moment_ignores(&prep, &m, p) {
                    Some(true) => oracle_checked += 1,
                    Some(false) => return Err(format!("{id}: enumeration shows E({m}) moves with {p}")),
                    None => {}
                }
                checked += 1;
            }
        }
    }
    if oracle_checked == 0 {
        return Err("no monomial could be cross-checked by enumeration".into());
    }
    Ok(format!(
        "{checked} parameter-independent monomials report zero; {oracle_checked} confirmed by enumeration"
    ))
}

fn run_cli(args: &[&str]) -> Result<(i32, String), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_probsens"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    Ok((out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned()))
}

fn criterion_9() -> Outcome {
    let (code, err) = run_cli(&["analyze", "corpus:non_admissible", "--target", "w"])?;
    if code != 5 {
        return Err(format!("moment path for E(w): exit {code}, expected 5 ({})", err.trim()));
    }
    let (code2, err2) = run_cli(&[
        "analyze",
        "corpus:non_admissible_pinfluenced",
        "--target",
        "v",
        "--wrt",
        "p",
        "--method",
        "sensrec",
    ])?;
    if code2 != 3 {
        return Err(format!("influenced program: exit {code2}, expected 3 ({})", err2.trim()));
    }
    if !err2.contains("v ->p x") {
        return Err(format!("witness edge `v ->p x` missing from: {}", err2.trim()));
    }
    Ok("E(w) exits 5; influenced program exits 3 naming v ->p x".into())
}

fn mat_mul(a: &[Vec<BigRational>], b: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| &a[i][k] * &b[k][j]).sum()).collect())
        .collect()
}

/// Gauss-Jordan inverse; `None` when singular.
fn inverse(s: &[Vec<BigRational>]) -> Option<Vec<Vec<BigRational>>> {
    let n = s.len();
    let mut a: Vec<Vec<BigRational>> = s
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }));
            r
        })
        .collect();
    for c in 0..n {
        let piv = (c..n).find(|&r| !a[r][c].is_zero())?;
        a.swap(c, piv);
        let inv = a[c][c].recip();
        for x in a[c].iter_mut() {
            *x = &*x * &inv;
        }
        for r in 0..n {
            if r != c && !a[r][c].is_zero() {
                let f = a[r][c].clone();
                for k in 0..2 * n {
                    let t = &f * &a[c][k];
                    a[r][k] -= t;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// `S·J·S⁻¹` with rational eigenvalues (repeats and Jordan chains allowed)
/// plus at most one irrational quadratic block.
fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<BigRational>> {
    let pool = [q(0, 1), q(1, 1), q(-1, 1), q(1, 2), q(-2, 3), q(2, 1), q(3, 4), q(1, 3)];
    let mut j = vec![vec![BigRational::zero(); n]; n];
    let mut i = 0;
    let mut quadratic = false;
    while i < n {
        if !quadratic && i + 1 < n && rng.random_bool(0.3) {
            // companion of x^2 - x - 1, x^2 + x + 1 or x^2 - 2
            let (b, c) = match rng.random_range(0..3) {
                0 => (q(-1, 1), q(-1, 1)),
                1 => (q(1, 1), q(1, 1)),
                _ => (q(0, 1), q(-2, 1)),
            };
            j[i][i + 1] = -c;
            j[i + 1][i] = BigRational::one();
            j[i + 1][i + 1] = -b;
            quadratic = true;
            i += 2;
            continue;
        }
        j[i][i] = pool[rng.random_range(0..pool.len())].clone();
        if i > 0 && j[i - 1][i - 1] == j[i][i] && j[i - 1][i].is_zero() && rng.random_bool(0.5) {
            j[i - 1][i] = BigRational::one();
        }
        i += 1;
    }
    loop {
        let s: Vec<Vec<BigRational>> = (0..n).map(|_| (0..n).map(|_| q(rng.random_range(-3..=3), 1)).collect()).collect();
        if let Some(si) = inverse(&s) {
            return mat_mul(&mat_mul(&s, &j), &si);
        }
    }
}

fn seq(i: usize) -> SeqSymbol {
    SeqSymbol::Moment(Monomial::var(&format!("s{i}")))
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let one = SeqSymbol::moment_one();
    for case in 0..100 {
        let n = rng.random_range(1..=5);
        let a = random_matrix(&mut rng, n);
        let forcing: Vec<BigRational> = (0..n)
            .map(|_| if rng.random_bool(0.5) { q(rng.random_range(-4..=4), 1) } else { BigRational::zero() })
            .collect();
        let init: Vec<BigRational> = (0..n).map(|_| q(rng.random_range(-5..=5), rng.random_range(1..=3))).collect();
        let mut eqs: Vec<Recurrence> = (0..n)
            .map(|i| {
                let mut terms: Vec<(ParamExpr, SeqSymbol)> =
                    (0..n).map(|k| (ParamExpr::from_rational(a[i][k].clone()), seq(k))).collect();
                terms.push((ParamExpr::from_rational(forcing[i].clone()), one.clone()));
                Recurrence::new(seq(i), terms)
            })
            .collect();
        eqs.push(Recurrence::new(one.clone(), [(ParamExpr::one(), one.clone())]));
        let mut initial: BTreeMap<SeqSymbol, ParamExpr> =
            (0..n).map(|i| (seq(i), ParamExpr::from_rational(init[i].clone()))).collect();
        initial.insert(one.clone(), ParamExpr::one());
        let sys = RecurrenceSystem::from_parts(eqs, initial, seq(0));
        let forms = solve_system(&sys).map_err(|e| format!("case {case}: {e}"))?;
        let empty = ParamValues::new();
        let value = |s: &SeqSymbol, k: usize| -> Result<BigRational, String> {
            let v = forms[s].eval(k, &empty).map_err(|e| format!("case {case}: {e}"))?;
            v.as_rational().cloned().ok_or_else(|| format!("case {case}: {s} at {k} is irrational: {v}"))
        };
        // defining-recurrence identity
        for (s, rec) in &sys.equations {
            if value(s, 0)? != sys.initial[s].as_rational().expect("rational") {
                return Err(format!("case {case}: {s} misses its initial value"));
            }
            for k in 0..30 {
                let rhs: BigRational = rec
                    .rhs
                    .iter()
                    .map(|(c, t)| Ok(c.as_rational().expect("rational") * value(t, k)?))
                    .sum::<Result<BigRational, String>>()?;
                if value(s, k + 1)? != rhs {
                    return Err(format!("case {case}: {s} violates its recurrence at n = {k}"));
                }
            }
        }
        // brute-force iteration
        let mut x = init.clone();
        for k in 0..=30 {
            for (i, xi) in x.iter().enumerate() {
                if &value(&seq(i), k)? != xi {
                    return Err(format!("case {case}: s{i} at n = {k} differs from iteration"));
                }
            }
            x = (0..n)
                .map(|i| (0..n).map(|c| &a[i][c] * &x[c]).sum::<BigRational>() + &forcing[i])
                .collect();
        }
    }
    Ok("100 random systems, identity and iteration agree for n <= 30".into())
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("vaccination first moments and closed form", criterion_1),
        ("vaccination sensitivity by differentiation", criterion_2),
        ("vaccination sensitivity at n = 11", criterion_3),
        ("non_admissible sensitivity system for u", criterion_4),
        ("Rec counts for the printed programs", criterion_5),
        ("closed forms against central differences", criterion_6),
        ("diff and sensrec agree on admissible programs", criterion_7),
        ("parameter-independent monomials have zero sensitivity", criterion_8),
        ("negative controls", criterion_9),
        ("solver on random C-finite systems", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{:.1?}]", i + 1, start.elapsed()),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{:.1?}]", i + 1, start.elapsed());
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
