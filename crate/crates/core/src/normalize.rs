//! Normalization into a flat sequence of guarded single assignments.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use crate::lang::{fmt_bexpr, fmt_rhs, AssignRhs, BExpr, PolyExpr, Program, Stmt};

/// `target := rhs` if `guard` holds, otherwise `target := else_src`.
#[derive(Clone, Debug, PartialEq)]
pub struct GuardedAssignment {
    pub target: String,
    pub rhs: AssignRhs,
    pub guard: BExpr,
    pub else_src: String,
}

impl GuardedAssignment {
    fn plain(target: String, rhs: AssignRhs) -> Self {
        Self {
            else_src: target.clone(),
            target,
            rhs,
            guard: BExpr::True,
        }
    }

    /// Program variables read by the assignment (rhs, guard and else-source).
    pub fn reads(&self) -> BTreeSet<String> {
        let mut out = self.rhs.vars();
        out.extend(self.guard.vars());
        if !self.guard.is_true() {
            out.insert(self.else_src.clone());
        }
        out
    }

    pub fn render(&self) -> String {
        if self.guard.is_true() {
            format!("{} = {}", self.target, fmt_rhs(&self.rhs))
        } else {
            format!(
                "{} = {} [{}] else {}",
                self.target,
                fmt_rhs(&self.rhs),
                fmt_bexpr(&self.guard),
                self.else_src
            )
        }
    }
}

/// Loop in normal form: every body variable is assigned exactly once.
///
/// The last assignment of an original variable keeps its name; earlier
/// versions and snapshots become temporaries `_t<k>` numbered in creation
/// order. Variables assigned only inside the body get an explicit `= 0`
/// initialization; that value is never observed by the program.
#[derive(Clone, Debug)]
pub struct NormalizedProgram {
    pub params: BTreeSet<String>,
    /// Variables of the source program.
    pub vars: BTreeSet<String>,
    pub init: Vec<GuardedAssignment>,
    pub body: Vec<GuardedAssignment>,
    /// Temporary name -> original variable it stands for.
    pub temporaries: BTreeMap<String, String>,
}

impl NormalizedProgram {
    /// Original variables plus temporaries.
    pub fn all_vars(&self) -> BTreeSet<String> {
        let mut out = self.vars.clone();
        out.extend(self.temporaries.keys().cloned());
        out
    }

    /// The assignment defining `name` in the body, if any.
    pub fn assignment_of(&self, name: &str) -> Option<&GuardedAssignment> {
        self.body.iter().find(|g| g.target == name)
    }

    /// Appends `w := v^k` to the initialization and the body, returning the
    /// new variable's name. Used for higher moments that are not descendants
    /// of any variable.
    pub fn with_power_variable(&self, v: &str, k: u32) -> (NormalizedProgram, String) {
        let mut name = format!("{v}_pow{k}");
        while self.all_vars().contains(&name) || self.params.contains(&name) {
            name.push('_');
        }
        let rhs = AssignRhs::deterministic(PolyExpr::var(v).pow(k));
        let mut out = self.clone();
        out.init.push(GuardedAssignment::plain(name.clone(), rhs.clone()));
        out.body.push(GuardedAssignment::plain(name.clone(), rhs));
        out.vars.insert(name.clone());
        (out, name)
    }

    /// Prints the normalized program in the input syntax extended with
    /// `[C] else v` guards.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for g in &self.init {
            writeln!(out, "{}", g.render()).expect("string write");
        }
        out.push_str("while true:\n");
        for g in &self.body {
            writeln!(out, "  {}", g.render()).expect("string write");
        }
        out.push_str("end\n");
        out
    }
}

struct Flattener {
    prefix: &'static str,
    counter: usize,
    remaining: BTreeMap<String, usize>,
    cur: BTreeMap<String, String>,
    out: Vec<GuardedAssignment>,
    temps: BTreeMap<String, String>,
}

fn count_assignments(ss: &[Stmt], out: &mut BTreeMap<String, usize>) {
    for s in ss {
        match s {
            Stmt::Assign(items) => {
                for (v, _) in items {
                    *out.entry(v.clone()).or_default() += 1;
                }
            }
            Stmt::If { branches, otherwise } => {
                for (_, b) in branches {
                    count_assignments(b, out);
                }
                if let Some(b) = otherwise {
                    count_assignments(b, out);
                }
            }
        }
    }
}

fn rename_poly(p: &PolyExpr, map: &BTreeMap<String, String>) -> PolyExpr {
    p.substitute(&|v| map.get(v).filter(|n| n.as_str() != v).map(|n| PolyExpr::var(n)))
}

impl Flattener {
    fn new(prefix: &'static str, ss: &[Stmt]) -> Self {
        let mut remaining = BTreeMap::new();
        count_assignments(ss, &mut remaining);
        Self {
            prefix,
            counter: 0,
            remaining,
            cur: BTreeMap::new(),
            out: Vec::new(),
            temps: BTreeMap::new(),
        }
    }

    fn current(&self, v: &str) -> String {
        self.cur.get(v).cloned().unwrap_or_else(|| v.to_string())
    }

    fn fresh(&mut self, origin: &str) -> String {
        let name = format!("{}{}", self.prefix, self.counter);
        self.counter += 1;
        self.temps.insert(name.clone(), origin.to_string());
        name
    }

    fn cur_map(&self) -> BTreeMap<String, String> {
        self.cur.clone()
    }

    /// Name for the next version of `v`: the original name for the last
    /// assignment, a temporary otherwise.
    fn next_version(&mut self, v: &str) -> String {
        let left = self.remaining.get_mut(v).expect("counted assignment");
        *left -= 1;
        if *left == 0 {
            v.to_string()
        } else {
            self.fresh(v)
        }
    }

    fn snapshot(&mut self, v: &str) -> String {
        let src = self.current(v);
        let t = self.fresh(v);
        self.out.push(GuardedAssignment::plain(
            t.clone(),
            AssignRhs::deterministic(PolyExpr::var(&src)),
        ));
        t
    }

    fn stmts(&mut self, ss: &[Stmt], path: &BExpr) {
        for s in ss {
            match s {
                Stmt::Assign(items) => self.assign(items, path),
                Stmt::If { branches, otherwise } => {
                    let mut inside = BTreeSet::new();
                    s.assigned(&mut inside);
                    let mut cond_vars = BTreeSet::new();
                    for (c, _) in branches {
                        cond_vars.extend(c.vars());
                    }
                    let mut guard_map = self.cur_map();
                    for g in cond_vars.intersection(&inside) {
                        let t = self.snapshot(g);
                        guard_map.insert(g.clone(), t);
                    }
                    let mut none_before = BExpr::True;
                    for (c, body) in branches {
                        let c = c.map_polys(&|p| rename_poly(p, &guard_map));
                        let here = BExpr::and(path.clone(), BExpr::and(none_before.clone(), c.clone()));
                        self.stmts(body, &here);
                        none_before = BExpr::and(none_before, BExpr::negate(c));
                    }
                    if let Some(body) = otherwise {
                        let here = BExpr::and(path.clone(), none_before);
                        self.stmts(body, &here);
                    }
                }
            }
        }
    }

    fn assign(&mut self, items: &[(String, AssignRhs)], path: &BExpr) {
        // all right-hand sides read the pre-state
        let pre = self.cur_map();
        let mut rhss: Vec<AssignRhs> = items.iter().map(|(_, r)| r.map_polys(&|p| rename_poly(p, &pre))).collect();
        for (i, (v, _)) in items.iter().enumerate() {
            let old = self.current(v);
            let new = self.next_version(v);
            if new == old && rhss[i + 1..].iter().any(|r| r.vars().contains(&old)) {
                let t = self.snapshot(v);
                let m = BTreeMap::from([(old.clone(), t)]);
                for r in &mut rhss[i + 1..] {
                    *r = r.map_polys(&|p| rename_poly(p, &m));
                }
            }
            self.out.push(GuardedAssignment {
                target: new.clone(),
                rhs: rhss[i].clone(),
                guard: path.clone(),
                else_src: old,
            });
            self.cur.insert(v.clone(), new);
        }
    }
}

/// Flattens if-statements into path-guarded assignments and renames
/// repeated assignments so that each variable is assigned once per body.
pub fn normalize(prog: &Program) -> NormalizedProgram {
    let mut body_f = Flattener::new("_t", &prog.body);
    body_f.stmts(&prog.body, &BExpr::True);

    let mut init_f = Flattener::new("_s", &prog.init);
    init_f.stmts(&prog.init, &BExpr::True);
    let mut init_assigned = BTreeSet::new();
    prog.init.iter().for_each(|s| s.assigned(&mut init_assigned));
    let mut init: Vec<GuardedAssignment> = prog
        .vars
        .iter()
        .filter(|v| !init_assigned.contains(*v))
        .map(|v| GuardedAssignment::plain(v.clone(), AssignRhs::deterministic(PolyExpr::zero())))
        .collect();
    init.extend(init_f.out);

    let mut temporaries = body_f.temps;
    temporaries.extend(init_f.temps);
    NormalizedProgram {
        params: prog.params.clone(),
        vars: prog.vars.clone(),
        init,
        body: body_f.out,
        temporaries,
    }
}
