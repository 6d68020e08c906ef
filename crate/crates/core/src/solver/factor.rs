//! Characteristic polynomials and their factorization over the parameter
//! field, restricted to linear and quadratic factors.

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};

use crate::symbolic::{rational_sqrt, MPoly, Monomial, ParamExpr, UPoly};

/// `det(x·I − A)` by Faddeev–LeVerrier.
pub fn charpoly(a: &[Vec<ParamExpr>]) -> UPoly {
    let m = a.len();
    let mut c = vec![ParamExpr::zero(); m + 1];
    c[m] = ParamExpr::one();
    let mut mk: Vec<Vec<ParamExpr>> = vec![vec![ParamExpr::zero(); m]; m];
    for k in 1..=m {
        // M_k = A·M_{k-1} + c_{m-k+1}·I
        let mut next = mat_mul(a, &mk);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] = &row[i] + &c[m - k + 1];
        }
        mk = next;
        let am = mat_mul(a, &mk);
        let mut tr = ParamExpr::zero();
        for (i, row) in am.iter().enumerate() {
            tr = &tr + &row[i];
        }
        c[m - k] = -&(&tr * &ParamExpr::from_ratio(1, k as i64));
    }
    UPoly::from_coeffs(c)
}

fn mat_mul(a: &[Vec<ParamExpr>], b: &[Vec<ParamExpr>]) -> Vec<Vec<ParamExpr>> {
    let m = a.len();
    let mut out = vec![vec![ParamExpr::zero(); m]; m];
    for i in 0..m {
        for (k, aik) in a[i].iter().enumerate() {
            if aik.is_zero() {
                continue;
            }
            for j in 0..m {
                if !b[k][j].is_zero() {
                    out[i][j] = &out[i][j] + &(aik * &b[k][j]);
                }
            }
        }
    }
    out
}

/// Square root of a polynomial that is a perfect square over Q.
pub fn mpoly_sqrt(p: &MPoly) -> Option<MPoly> {
    if p.is_zero() {
        return Some(MPoly::zero());
    }
    let (lm, lc) = p.lead().map(|(m, c)| (m.clone(), c.clone()))?;
    let root_c = rational_sqrt(&lc)?;
    if lm.factors().iter().any(|(_, e)| e % 2 == 1) {
        return None;
    }
    let root_m = Monomial::from_pairs(lm.factors().iter().map(|(v, e)| (v.as_ref(), e / 2)));
    let min_deg = p.terms().map(|(m, _)| m.degree()).min().unwrap_or(0);
    let two_c = &root_c * BigRational::from_integer(BigInt::from(2));
    let mut r = MPoly::term(root_m.clone(), root_c);
    loop {
        let rem = p - &(&r * &r);
        let Some((rm, rc)) = rem.lead() else {
            return Some(r);
        };
        let tm = rm.div(&root_m)?;
        if 2 * tm.degree() < min_deg {
            return None;
        }
        let tc = rc / &two_c;
        r.add_term(tm, tc);
    }
}

/// `sqrt(q)` inside the parameter field, if it exists there.
pub fn param_sqrt(q: &ParamExpr) -> Option<ParamExpr> {
    if let Some(r) = q.as_rational() {
        return rational_sqrt(&r).map(ParamExpr::from_rational);
    }
    // sqrt(N/D) = sqrt(N·D)/D
    let nd = q.numer() * q.denom();
    let s = mpoly_sqrt(&nd)?;
    ParamExpr::new(s, q.denom().clone()).ok()
}

/// Divisors of `|n|` for moderately sized `n`.
fn small_divisors(n: &BigInt) -> Option<Vec<BigInt>> {
    let n = n.abs().to_u64()?;
    if n == 0 || n > 1 << 40 {
        return None;
    }
    let mut out = Vec::new();
    let r = n.sqrt();
    for d in 1..=r {
        if n % d == 0 {
            out.push(BigInt::from(d));
            if d != n / d {
                out.push(BigInt::from(n / d));
            }
        }
    }
    Some(out)
}

/// Rational root candidates of a numeric polynomial with nonzero constant
/// term (rational root theorem).
fn rational_root_candidates(q: &UPoly) -> Vec<ParamExpr> {
    let coeffs: Vec<BigRational> = q.coeffs().iter().filter_map(|c| c.as_rational()).collect();
    if coeffs.len() != q.coeffs().len() || coeffs.is_empty() {
        return Vec::new();
    }
    let lcm = coeffs.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let ints: Vec<BigInt> = coeffs.iter().map(|c| (c * BigRational::from_integer(lcm.clone())).to_integer()).collect();
    let (Some(us), Some(vs)) = (
        small_divisors(&ints[0]),
        small_divisors(ints.last().expect("nonempty")),
    ) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for u in &us {
        for v in &vs {
            let r = BigRational::new(u.clone(), v.clone());
            out.push(ParamExpr::from_rational(r.clone()));
            out.push(ParamExpr::from_rational(-r));
        }
    }
    out
}

/// Monic linear factor `x − r`.
fn linear(r: &ParamExpr) -> UPoly {
    UPoly::from_coeffs(vec![-r, ParamExpr::one()])
}

fn monic(q: &UPoly) -> UPoly {
    match q.lead() {
        Some(l) if !l.is_one() => q.scale(&l.recip().expect("nonzero lead")),
        _ => q.clone(),
    }
}

/// Root of a monic linear factor.
pub fn linear_root(f: &UPoly) -> ParamExpr {
    -&f.coeff(0)
}

/// Factors `q` into monic linear factors, quadratics without a root in the
/// parameter field, and at most one leftover of degree ≥ 3. The product of
/// the factors (times the leading coefficient) equals `q`. `hints` are
/// candidate roots tried before the generic ones.
pub fn factor_charpoly(q: &UPoly, hints: &[ParamExpr]) -> Vec<(UPoly, usize)> {
    let mut out: Vec<(UPoly, usize)> = Vec::new();
    let mut rest = monic(q);
    let z0 = rest.coeffs().iter().take_while(|c| c.is_zero()).count();
    if z0 > 0 {
        out.push((UPoly::x(), z0));
        rest = UPoly::from_coeffs(rest.coeffs()[z0..].to_vec());
    }
    let mut candidates: Vec<ParamExpr> = hints.to_vec();
    candidates.push(ParamExpr::one());
    candidates.push(-&ParamExpr::one());
    if rest.is_numeric() {
        candidates.extend(rational_root_candidates(&rest));
    }
    let mut tried = std::collections::HashSet::new();
    for r in candidates {
        if rest.degree().unwrap_or(0) == 0 {
            break;
        }
        if r.is_zero() || !tried.insert(r.clone()) || !rest.eval(&r).is_zero() {
            continue;
        }
        let f = linear(&r);
        let mut k = 0;
        loop {
            let (quot, rem) = rest.div_rem(&f).expect("monic divisor");
            if !rem.is_zero() {
                break;
            }
            rest = quot;
            k += 1;
        }
        out.push((f, k));
    }
    match rest.degree().unwrap_or(0) {
        0 => {}
        1 => push_merged(&mut out, monic(&rest), 1),
        2 => {
            let rest = monic(&rest);
            let b = rest.coeff(1);
            let c = rest.coeff(0);
            // roots −b/2 ± sqrt(b²/4 − c)
            let half_b = &b * &ParamExpr::from_ratio(1, 2);
            let disc = &(&half_b * &half_b) - &c;
            match param_sqrt(&disc) {
                Some(s) if s.is_zero() => push_merged(&mut out, linear(&-&half_b), 2),
                Some(s) => {
                    push_merged(&mut out, linear(&(&-&half_b + &s)), 1);
                    push_merged(&mut out, linear(&(&-&half_b - &s)), 1);
                }
                None => out.push((rest, 1)),
            }
        }
        _ => out.push((monic(&rest), 1)),
    }
    out
}

fn push_merged(out: &mut Vec<(UPoly, usize)>, f: UPoly, k: usize) {
    match out.iter_mut().find(|(g, _)| *g == f) {
        Some((_, m)) => *m += k,
        None => out.push((f, k)),
    }
}
