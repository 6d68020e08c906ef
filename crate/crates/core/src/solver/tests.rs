use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::corpus;
use crate::deps::build_graph;
use crate::lang::{parse, parse_monomial};
use crate::moments::{MomentEngine, Recurrence};
use crate::normalize::normalize;
use crate::sensitivity::{sensitivity_system, moment_system, SensitivityOptions};
use crate::symbolic::{Monomial, ParamValues};

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn sym(i: usize) -> SeqSymbol {
    SeqSymbol::Moment(Monomial::var(&format!("a{i}")))
}

#[test]
fn arithmetic_sequence() {
    let c = ParamExpr::param("c");
    let u = sym(0);
    let one = SeqSymbol::moment_one();
    let sys = RecurrenceSystem::from_parts(
        [
            Recurrence::new(u.clone(), [(ParamExpr::one(), u.clone()), (c.clone(), one.clone())]),
            Recurrence::new(one.clone(), [(ParamExpr::one(), one.clone())]),
        ],
        BTreeMap::from([(one.clone(), ParamExpr::one())]),
        u.clone(),
    );
    let f = solve_target(&sys).unwrap();
    assert_eq!(f.render(), "prefix: []; n>=0: (c*n)*(1)^n");
    assert_eq!(f.value_at(7).unwrap(), &c * &ParamExpr::from_int(7));
}

fn vaccination_value(n: usize, env: &ParamValues) -> BigRational {
    let (d, vp, cp) = (&env["decline"], &env["vax_param"], &env["contact_param"]);
    if n == 0 {
        return BigRational::zero();
    }
    let base = d - d * vp;
    let pow = crate::symbolic::pow_rat(&base, n as u32 - 1);
    cp + q(3, 1) * vp * cp * (pow - BigRational::one()) / (q(4, 1) * (d * vp - d + BigRational::one()))
}

#[test]
fn vaccination_first_moment_matches_closed_form() {
    let np = normalize(&parse(corpus::VACCINATION).unwrap());
    let g = build_graph(&np);
    let eng = MomentEngine::new(&np, &g).unwrap();
    let m = parse_monomial("infected_prob", &np.all_vars()).unwrap();
    let sys = moment_system(&eng, &m, 500).unwrap();
    assert_eq!(sys.rec_count(), 2);
    let f = solve_target(&sys).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let env: ParamValues = ["decline", "vax_param", "contact_param"]
            .iter()
            .map(|p| (p.to_string(), q(rng.random_range(1..20), 20)))
            .collect();
        for n in 0..=10 {
            let got = f.eval(n, &env).unwrap();
            assert_eq!(got.as_rational(), Some(&vaccination_value(n, &env)), "n = {n}");
        }
    }
}

#[test]
fn non_admissible_closed_forms_satisfy_their_recurrences() {
    let np = normalize(&parse(corpus::NON_ADMISSIBLE).unwrap());
    let g = build_graph(&np);
    let eng = MomentEngine::new(&np, &g).unwrap();
    let m = parse_monomial("u", &np.all_vars()).unwrap();
    let sys = sensitivity_system(&eng, &g, &m, "p", &SensitivityOptions { cap: 500, debug: false }).unwrap();
    let forms = solve_system(&sys).unwrap();
    for (s, rec) in &sys.equations {
        assert_eq!(forms[s].value_at(0).unwrap(), sys.initial[s], "{s}");
        for n in 0..8 {
            let lhs = forms[s].value_at(n + 1).unwrap();
            let rhs = rec
                .rhs
                .iter()
                .fold(ParamExpr::zero(), |acc, (c, t)| &acc + &(c * &forms[t].value_at(n).unwrap()));
            assert_eq!(lhs, rhs, "{s} at n = {n}");
        }
    }
}

fn mat_mul(a: &[Vec<BigRational>], b: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| &a[i][k] * &b[k][j]).sum()).collect())
        .collect()
}

fn inverse(s: &[Vec<BigRational>]) -> Option<Vec<Vec<BigRational>>> {
    let n = s.len();
    let m: Vec<Vec<ParamExpr>> = s.iter().map(|r| r.iter().cloned().map(ParamExpr::from_rational).collect()).collect();
    let id: Vec<Vec<ParamExpr>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { ParamExpr::one() } else { ParamExpr::zero() }).collect())
        .collect();
    let inv = solve_linear_multi(m, id).ok()?;
    Some(inv.into_iter().map(|r| r.into_iter().map(|c| c.as_rational().unwrap()).collect()).collect())
}

/// Random `S·J·S⁻¹` with rational eigenvalues (possibly repeated, with
/// Jordan chains) and at most one irreducible quadratic block.
fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<BigRational>> {
    let pool = [q(0, 1), q(1, 1), q(-1, 1), q(1, 2), q(-2, 3), q(2, 1), q(3, 2), q(1, 3)];
    let mut j = vec![vec![BigRational::zero(); n]; n];
    let mut i = 0;
    let mut used_quadratic = false;
    while i < n {
        if !used_quadratic && i + 1 < n && rng.random_bool(0.3) {
            // companion of x² − x − 1 or x² + x + 1
            let (b, c) = if rng.random_bool(0.5) { (q(-1, 1), q(-1, 1)) } else { (q(1, 1), q(1, 1)) };
            j[i][i + 1] = -c;
            j[i + 1][i] = BigRational::one();
            j[i + 1][i + 1] = -b;
            used_quadratic = true;
            i += 2;
            continue;
        }
        j[i][i] = pool[rng.random_range(0..pool.len())].clone();
        if i > 0 && j[i - 1][i - 1] == j[i][i] && rng.random_bool(0.5) && j[i - 1][i].is_zero() {
            j[i - 1][i] = BigRational::one();
        }
        i += 1;
    }
    loop {
        let s: Vec<Vec<BigRational>> =
            (0..n).map(|_| (0..n).map(|_| q(rng.random_range(-3..=3), 1)).collect()).collect();
        if let Some(si) = inverse(&s) {
            return mat_mul(&mat_mul(&s, &j), &si);
        }
    }
}

#[test]
fn random_systems_match_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..100 {
        let n = rng.random_range(1..=4);
        let a = random_matrix(&mut rng, n);
        let forcing: Vec<BigRational> = (0..n)
            .map(|_| if rng.random_bool(0.5) { q(rng.random_range(-4..=4), 1) } else { BigRational::zero() })
            .collect();
        let init: Vec<BigRational> = (0..n).map(|_| q(rng.random_range(-5..=5), rng.random_range(1..=3))).collect();
        let one = SeqSymbol::moment_one();
        let mut eqs: Vec<Recurrence> = (0..n)
            .map(|i| {
                let mut terms: Vec<(ParamExpr, SeqSymbol)> =
                    (0..n).map(|k| (ParamExpr::from_rational(a[i][k].clone()), sym(k))).collect();
                terms.push((ParamExpr::from_rational(forcing[i].clone()), one.clone()));
                Recurrence::new(sym(i), terms)
            })
            .collect();
        eqs.push(Recurrence::new(one.clone(), [(ParamExpr::one(), one.clone())]));
        let mut initial: BTreeMap<SeqSymbol, ParamExpr> =
            (0..n).map(|i| (sym(i), ParamExpr::from_rational(init[i].clone()))).collect();
        initial.insert(one.clone(), ParamExpr::one());
        let sys = RecurrenceSystem::from_parts(eqs, initial, sym(0));
        let forms = solve_system(&sys).unwrap_or_else(|e| panic!("case {case}: {e}"));

        let mut x = init.clone();
        for step in 0..=30 {
            for i in 0..n {
                let got = forms[&sym(i)].value_at(step).unwrap().as_rational().unwrap();
                assert_eq!(got, x[i], "case {case}, a{i} at n = {step}");
            }
            x = (0..n)
                .map(|i| (0..n).map(|k| &a[i][k] * &x[k]).sum::<BigRational>() + &forcing[i])
                .collect();
        }
    }
}
