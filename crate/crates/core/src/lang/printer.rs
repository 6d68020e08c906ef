use std::fmt::Write;

use num_traits::{One, Signed};

use super::ast::{AssignRhs, BExpr, PolyExpr, Program, Stmt};

/// Renders a polynomial in re-parseable syntax, highest term first.
pub fn fmt_poly(p: &PolyExpr) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let mut out = String::new();
    for (i, (m, c)) in p.terms().rev().enumerate() {
        let (neg, body) = match c.as_rational() {
            Some(q) => {
                let a = q.abs();
                let s = if m.is_one() {
                    crate::symbolic::fmt_rat(&a)
                } else if a.is_one() {
                    m.to_string()
                } else {
                    format!("{}*{m}", crate::symbolic::fmt_rat(&a))
                };
                (q.is_negative(), s)
            }
            None => {
                let s = if m.is_one() {
                    c.parenthesized()
                } else {
                    format!("{}*{m}", c.parenthesized())
                };
                (false, s)
            }
        };
        match (i, neg) {
            (0, true) => write!(out, "-{body}"),
            (0, false) => write!(out, "{body}"),
            (_, true) => write!(out, " - {body}"),
            (_, false) => write!(out, " + {body}"),
        }
        .expect("string write");
    }
    out
}

fn wrap(b: &BExpr) -> String {
    match b {
        BExpr::True | BExpr::False | BExpr::Cmp(..) => fmt_bexpr(b),
        _ => format!("({})", fmt_bexpr(b)),
    }
}

pub fn fmt_bexpr(b: &BExpr) -> String {
    match b {
        BExpr::True => "true".into(),
        BExpr::False => "false".into(),
        BExpr::Cmp(a, op, c) => format!("{} {} {}", fmt_poly(a), op.symbol(), fmt_poly(c)),
        BExpr::Not(x) => format!("not {}", wrap(x)),
        BExpr::And(a, c) => format!("{} and {}", wrap(a), wrap(c)),
        BExpr::Or(a, c) => format!("{} or {}", wrap(a), wrap(c)),
    }
}

pub fn fmt_rhs(r: &AssignRhs) -> String {
    match r {
        AssignRhs::Categorical(items) => {
            let mut out = String::new();
            for (i, (e, p)) in items.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                out.push_str(&fmt_poly(e));
                if let Some(p) = p {
                    write!(out, " {{{p}}}").expect("string write");
                }
            }
            out
        }
        AssignRhs::Dist(kind, args) => {
            let args: Vec<String> = args.iter().map(|a| a.to_string()).collect();
            format!("{kind}({})", args.join(", "))
        }
    }
}

fn fmt_stmts(ss: &[Stmt], indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    for s in ss {
        match s {
            Stmt::Assign(items) => {
                let targets: Vec<&str> = items.iter().map(|(v, _)| v.as_str()).collect();
                let rhss: Vec<String> = items.iter().map(|(_, r)| fmt_rhs(r)).collect();
                writeln!(out, "{pad}{} = {}", targets.join(", "), rhss.join(", ")).expect("string write");
            }
            Stmt::If { branches, otherwise } => {
                for (i, (c, body)) in branches.iter().enumerate() {
                    let kw = if i == 0 { "if" } else { "else if" };
                    writeln!(out, "{pad}{kw} {}:", fmt_bexpr(c)).expect("string write");
                    fmt_stmts(body, indent + 1, out);
                }
                if let Some(body) = otherwise {
                    writeln!(out, "{pad}else:").expect("string write");
                    fmt_stmts(body, indent + 1, out);
                }
                writeln!(out, "{pad}end").expect("string write");
            }
        }
    }
}

/// Pretty-prints a program; the output parses back to an equal program.
pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    fmt_stmts(&p.init, 0, &mut out);
    writeln!(out, "while {}:", fmt_bexpr(&p.guard)).expect("string write");
    fmt_stmts(&p.body, 1, &mut out);
    out.push_str("end\n");
    out
}
