use std::collections::BTreeSet;

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::ast::{AssignRhs, BExpr, CmpOp, DistKind, PolyExpr, Program, Stmt};
use super::lexer::{tokenize, Pos, Tok, Token};
use super::LangError;
use crate::symbolic::{Monomial, ParamExpr};

const KEYWORDS: &[&str] = &["while", "if", "else", "end", "true", "false", "not", "and", "or"];

#[derive(Clone, Debug)]
enum Raw {
    Num(BigRational),
    Ident(String, Pos),
    Add(Box<Raw>, Box<Raw>),
    Sub(Box<Raw>, Box<Raw>),
    Mul(Box<Raw>, Box<Raw>),
    Div(Box<Raw>, Box<Raw>, Pos),
    Neg(Box<Raw>),
    Pow(Box<Raw>, u32),
}

#[derive(Clone, Debug)]
enum RawB {
    True,
    False,
    Cmp(Raw, CmpOp, Raw),
    Not(Box<RawB>),
    And(Box<RawB>, Box<RawB>),
    Or(Box<RawB>, Box<RawB>),
}

#[derive(Clone, Debug)]
enum RawRhs {
    Cat(Vec<(Raw, Option<Raw>)>, Pos),
    Dist(DistKind, Vec<Raw>, Pos),
}

#[derive(Clone, Debug)]
enum RawStmt {
    Assign(Vec<(String, RawRhs)>),
    If {
        branches: Vec<(RawB, Vec<RawStmt>)>,
        otherwise: Option<Vec<RawStmt>>,
    },
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
}

type PResult<T> = Result<T, LangError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.i + k).min(self.toks.len() - 1)].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> PResult<T> {
        let p = self.pos();
        Err(LangError::Syntax {
            line: p.line,
            col: p.col,
            message: message.into(),
        })
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(q) => format!("number {q}"),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
            t => format!("{t:?}"),
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> PResult<()> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected {what}, found {}", self.describe()))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn skip_newlines(&mut self) {
        while *self.peek() == Tok::Newline {
            self.bump();
        }
    }

    fn end_of_line(&mut self) -> PResult<()> {
        match self.peek() {
            Tok::Newline => {
                self.skip_newlines();
                Ok(())
            }
            Tok::Eof => Ok(()),
            _ => self.err(format!("expected end of line, found {}", self.describe())),
        }
    }

    fn program(&mut self) -> PResult<(Vec<RawStmt>, RawB, Vec<RawStmt>)> {
        self.skip_newlines();
        let mut init = Vec::new();
        while !self.is_kw("while") {
            if *self.peek() == Tok::Eof {
                return self.err("expected `while` loop");
            }
            init.push(self.stmt()?);
        }
        self.bump();
        let guard = self.bexpr()?;
        self.expect(Tok::Colon, "`:`")?;
        self.end_of_line()?;
        let body = self.stmts()?;
        if body.is_empty() {
            return self.err("loop body is empty");
        }
        if !self.is_kw("end") {
            return self.err(format!("expected `end`, found {}", self.describe()));
        }
        self.bump();
        self.end_of_line()?;
        if *self.peek() != Tok::Eof {
            if self.is_kw("while") {
                return self.err("only a single, non-nested loop is supported");
            }
            return self.err(format!("unexpected {} after loop", self.describe()));
        }
        Ok((init, guard, body))
    }

    fn stmts(&mut self) -> PResult<Vec<RawStmt>> {
        let mut out = Vec::new();
        loop {
            match self.peek() {
                Tok::Eof => break,
                Tok::Ident(s) if s == "end" || s == "else" => break,
                Tok::Ident(s) if s == "while" => return self.err("nested loops are not supported"),
                _ => out.push(self.stmt()?),
            }
        }
        Ok(out)
    }

    fn stmt(&mut self) -> PResult<RawStmt> {
        if self.is_kw("if") {
            return self.if_stmt();
        }
        self.assign()
    }

    fn if_stmt(&mut self) -> PResult<RawStmt> {
        self.bump();
        let mut branches = Vec::new();
        let cond = self.bexpr()?;
        self.expect(Tok::Colon, "`:`")?;
        self.end_of_line()?;
        let body = self.block()?;
        branches.push((cond, body));
        let mut otherwise = None;
        while self.is_kw("else") {
            self.bump();
            if self.is_kw("if") {
                self.bump();
                let cond = self.bexpr()?;
                self.expect(Tok::Colon, "`:`")?;
                self.end_of_line()?;
                let body = self.block()?;
                branches.push((cond, body));
            } else {
                self.expect(Tok::Colon, "`:` after `else`")?;
                self.end_of_line()?;
                otherwise = Some(self.block()?);
                break;
            }
        }
        if !self.is_kw("end") {
            return self.err(format!("expected `end`, found {}", self.describe()));
        }
        self.bump();
        self.end_of_line()?;
        Ok(RawStmt::If { branches, otherwise })
    }

    fn block(&mut self) -> PResult<Vec<RawStmt>> {
        let body = self.stmts()?;
        if body.is_empty() {
            return self.err("empty block");
        }
        Ok(body)
    }

    fn ident(&mut self) -> PResult<(String, Pos)> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok((s, pos))
            }
            _ => self.err(format!("expected a variable name, found {}", self.describe())),
        }
    }

    fn assign(&mut self) -> PResult<RawStmt> {
        let mut targets = vec![self.ident()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            targets.push(self.ident()?);
        }
        self.expect(Tok::Assign, "`=`")?;
        let mut rhss = vec![self.rhs()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            rhss.push(self.rhs()?);
        }
        if rhss.len() != targets.len() {
            return Err(LangError::Syntax {
                line: targets[0].1.line,
                col: targets[0].1.col,
                message: format!("{} targets but {} right-hand sides", targets.len(), rhss.len()),
            });
        }
        let mut seen = BTreeSet::new();
        for (t, p) in &targets {
            if !seen.insert(t.clone()) {
                return Err(LangError::Syntax {
                    line: p.line,
                    col: p.col,
                    message: format!("`{t}` assigned twice in one statement"),
                });
            }
        }
        self.end_of_line()?;
        Ok(RawStmt::Assign(targets.into_iter().map(|(t, _)| t).zip(rhss).collect()))
    }

    fn rhs(&mut self) -> PResult<RawRhs> {
        let pos = self.pos();
        if let (Tok::Ident(name), Tok::LParen) = (self.peek().clone(), self.peek_at(1).clone()) {
            let Some(kind) = DistKind::from_name(&name) else {
                return self.err(format!("unknown distribution `{name}`"));
            };
            self.bump();
            self.bump();
            let mut args = Vec::new();
            if *self.peek() != Tok::RParen {
                args.push(self.poly()?);
                while *self.peek() == Tok::Comma {
                    self.bump();
                    args.push(self.poly()?);
                }
            }
            self.expect(Tok::RParen, "`)`")?;
            if args.len() != kind.arity() {
                return Err(LangError::Syntax {
                    line: pos.line,
                    col: pos.col,
                    message: format!("{kind} takes {} argument(s), got {}", kind.arity(), args.len()),
                });
            }
            return Ok(RawRhs::Dist(kind, args, pos));
        }
        let mut items = Vec::new();
        loop {
            let e = self.poly()?;
            if *self.peek() == Tok::LBrace {
                self.bump();
                let p = self.poly()?;
                self.expect(Tok::RBrace, "`}`")?;
                items.push((e, Some(p)));
                if self.starts_poly() {
                    continue;
                }
            } else {
                items.push((e, None));
            }
            break;
        }
        Ok(RawRhs::Cat(items, pos))
    }

    fn starts_poly(&self) -> bool {
        match self.peek() {
            Tok::Num(_) | Tok::LParen | Tok::Minus => true,
            Tok::Ident(s) => !KEYWORDS.contains(&s.as_str()),
            _ => false,
        }
    }

    fn bexpr(&mut self) -> PResult<RawB> {
        let mut lhs = self.band()?;
        while self.is_kw("or") {
            self.bump();
            let rhs = self.band()?;
            lhs = RawB::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn band(&mut self) -> PResult<RawB> {
        let mut lhs = self.bnot()?;
        while self.is_kw("and") {
            self.bump();
            let rhs = self.bnot()?;
            lhs = RawB::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn bnot(&mut self) -> PResult<RawB> {
        if self.is_kw("not") {
            self.bump();
            return Ok(RawB::Not(Box::new(self.bnot()?)));
        }
        self.batom()
    }

    fn batom(&mut self) -> PResult<RawB> {
        match self.peek() {
            Tok::Ident(s) if s == "true" => {
                self.bump();
                return Ok(RawB::True);
            }
            Tok::Ident(s) if s == "false" => {
                self.bump();
                return Ok(RawB::False);
            }
            Tok::Forever => {
                self.bump();
                return Ok(RawB::True);
            }
            Tok::Star if *self.peek_at(1) == Tok::Colon => {
                self.bump();
                return Ok(RawB::True);
            }
            Tok::LParen => {
                let save = self.i;
                self.bump();
                if let Ok(b) = self.bexpr() {
                    if *self.peek() == Tok::RParen {
                        self.bump();
                        return Ok(b);
                    }
                }
                self.i = save;
            }
            _ => {}
        }
        let a = self.poly()?;
        let op = match self.peek() {
            Tok::Assign | Tok::EqEq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Gt => CmpOp::Gt,
            Tok::Le => CmpOp::Le,
            Tok::Ge => CmpOp::Ge,
            _ => return self.err(format!("expected a comparison operator, found {}", self.describe())),
        };
        self.bump();
        let b = self.poly()?;
        Ok(RawB::Cmp(a, op, b))
    }

    fn poly(&mut self) -> PResult<Raw> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Raw::Add(Box::new(lhs), Box::new(rhs));
                }
                Tok::Minus => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Raw::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> PResult<Raw> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = Raw::Mul(Box::new(lhs), Box::new(rhs));
                }
                Tok::Slash => {
                    let pos = self.pos();
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = Raw::Div(Box::new(lhs), Box::new(rhs), pos);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> PResult<Raw> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Raw::Neg(Box::new(self.unary()?)));
        }
        if *self.peek() == Tok::Plus {
            self.bump();
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> PResult<Raw> {
        let base = self.atom()?;
        if *self.peek() == Tok::Pow {
            self.bump();
            let q = match self.peek().clone() {
                Tok::Num(q) => q,
                _ => return self.err("exponent must be a natural-number literal"),
            };
            if !q.is_integer() || q < BigRational::zero() || q > BigRational::from_integer(64.into()) {
                return self.err("exponent must be a natural-number literal at most 64");
            }
            self.bump();
            let e: u32 = q.to_integer().try_into().expect("bounded exponent");
            return Ok(Raw::Pow(Box::new(base), e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> PResult<Raw> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Num(q) => {
                self.bump();
                Ok(Raw::Num(q))
            }
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(Raw::Ident(s, pos))
            }
            Tok::LParen => {
                self.bump();
                let e = self.poly()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            _ => self.err(format!("expected an expression, found {}", self.describe())),
        }
    }
}

/// Resolves raw syntax into typed AST once the variable set is known.
struct Resolver<'a> {
    vars: &'a BTreeSet<String>,
}

impl Resolver<'_> {
    fn poly(&self, r: &Raw) -> PResult<PolyExpr> {
        Ok(match r {
            Raw::Num(q) => PolyExpr::constant(ParamExpr::from_rational(q.clone())),
            Raw::Ident(s, _) => {
                if self.vars.contains(s) {
                    PolyExpr::var(s)
                } else {
                    PolyExpr::constant(ParamExpr::param(s))
                }
            }
            Raw::Add(a, b) => &self.poly(a)? + &self.poly(b)?,
            Raw::Sub(a, b) => &self.poly(a)? - &self.poly(b)?,
            Raw::Mul(a, b) => &self.poly(a)? * &self.poly(b)?,
            Raw::Neg(a) => -&self.poly(a)?,
            Raw::Pow(a, e) => self.poly(a)?.pow(*e),
            Raw::Div(a, b, pos) => {
                let d = self.poly(b)?;
                let Some(c) = d.as_constant() else {
                    return Err(LangError::Syntax {
                        line: pos.line,
                        col: pos.col,
                        message: "division by an expression containing program variables".into(),
                    });
                };
                let inv = c.recip().map_err(|_| LangError::Syntax {
                    line: pos.line,
                    col: pos.col,
                    message: "division by zero".into(),
                })?;
                self.poly(a)?.scale(&inv)
            }
        })
    }

    fn constant(&self, r: &Raw, what: &str, pos: Pos) -> PResult<ParamExpr> {
        let p = self.poly(r)?;
        p.as_constant().ok_or_else(|| LangError::NonConstant {
            line: pos.line,
            col: pos.col,
            what: what.to_string(),
        })
    }

    fn bexpr(&self, b: &RawB) -> PResult<BExpr> {
        Ok(match b {
            RawB::True => BExpr::True,
            RawB::False => BExpr::False,
            RawB::Cmp(a, op, c) => BExpr::Cmp(self.poly(a)?, *op, self.poly(c)?),
            RawB::Not(x) => BExpr::Not(Box::new(self.bexpr(x)?)),
            RawB::And(a, c) => BExpr::And(Box::new(self.bexpr(a)?), Box::new(self.bexpr(c)?)),
            RawB::Or(a, c) => BExpr::Or(Box::new(self.bexpr(a)?), Box::new(self.bexpr(c)?)),
        })
    }

    fn rhs(&self, r: &RawRhs) -> PResult<AssignRhs> {
        match r {
            RawRhs::Cat(items, pos) => {
                let omitted = items.iter().filter(|(_, p)| p.is_none()).count();
                if omitted > 1 {
                    return Err(LangError::MalformedProbabilities {
                        line: pos.line,
                        col: pos.col,
                        message: "more than one omitted probability".into(),
                    });
                }
                let mut out = Vec::new();
                for (e, p) in items {
                    let p = match p {
                        Some(p) => Some(self.constant(p, "probability", *pos)?),
                        None => None,
                    };
                    out.push((self.poly(e)?, p));
                }
                Ok(AssignRhs::Categorical(out))
            }
            RawRhs::Dist(kind, args, pos) => {
                let args = args
                    .iter()
                    .map(|a| self.constant(a, "distribution argument", *pos))
                    .collect::<PResult<Vec<_>>>()?;
                if *kind == DistKind::DiscreteUniform {
                    let ok = args.iter().all(|a| a.as_rational().is_some_and(|q| q.is_integer()))
                        && args[0].as_rational() <= args[1].as_rational();
                    if !ok {
                        return Err(LangError::Syntax {
                            line: pos.line,
                            col: pos.col,
                            message: "DiscreteUniform needs integer literal bounds a <= b".into(),
                        });
                    }
                }
                Ok(AssignRhs::Dist(*kind, args))
            }
        }
    }

    fn stmt(&self, s: &RawStmt) -> PResult<Stmt> {
        Ok(match s {
            RawStmt::Assign(items) => Stmt::Assign(
                items
                    .iter()
                    .map(|(v, r)| Ok((v.clone(), self.rhs(r)?)))
                    .collect::<PResult<Vec<_>>>()?,
            ),
            RawStmt::If { branches, otherwise } => Stmt::If {
                branches: branches
                    .iter()
                    .map(|(c, b)| Ok((self.bexpr(c)?, self.stmts(b)?)))
                    .collect::<PResult<Vec<_>>>()?,
                otherwise: match otherwise {
                    Some(b) => Some(self.stmts(b)?),
                    None => None,
                },
            },
        })
    }

    fn stmts(&self, ss: &[RawStmt]) -> PResult<Vec<Stmt>> {
        ss.iter().map(|s| self.stmt(s)).collect()
    }
}

fn collect_assigned(ss: &[RawStmt], out: &mut BTreeSet<String>) {
    for s in ss {
        match s {
            RawStmt::Assign(items) => out.extend(items.iter().map(|(v, _)| v.clone())),
            RawStmt::If { branches, otherwise } => {
                for (_, b) in branches {
                    collect_assigned(b, out);
                }
                if let Some(b) = otherwise {
                    collect_assigned(b, out);
                }
            }
        }
    }
}

fn raw_idents(r: &Raw, out: &mut Vec<(String, Pos)>) {
    match r {
        Raw::Num(_) => {}
        Raw::Ident(s, p) => out.push((s.clone(), *p)),
        Raw::Add(a, b) | Raw::Sub(a, b) | Raw::Mul(a, b) | Raw::Div(a, b, _) => {
            raw_idents(a, out);
            raw_idents(b, out);
        }
        Raw::Neg(a) | Raw::Pow(a, _) => raw_idents(a, out),
    }
}

fn rawb_idents(b: &RawB, out: &mut Vec<(String, Pos)>) {
    match b {
        RawB::True | RawB::False => {}
        RawB::Cmp(a, _, c) => {
            raw_idents(a, out);
            raw_idents(c, out);
        }
        RawB::Not(x) => rawb_idents(x, out),
        RawB::And(a, c) | RawB::Or(a, c) => {
            rawb_idents(a, out);
            rawb_idents(c, out);
        }
    }
}

fn rhs_idents(r: &RawRhs, out: &mut Vec<(String, Pos)>) {
    match r {
        RawRhs::Cat(items, _) => {
            for (e, p) in items {
                raw_idents(e, out);
                if let Some(p) = p {
                    raw_idents(p, out);
                }
            }
        }
        RawRhs::Dist(_, args, _) => args.iter().for_each(|a| raw_idents(a, out)),
    }
}

/// Definite-assignment check: every program variable must be assigned
/// before it is read. Returns the set assigned on every path.
fn check_reads(
    ss: &[RawStmt],
    vars: &BTreeSet<String>,
    mut assigned: BTreeSet<String>,
) -> PResult<BTreeSet<String>> {
    let check = |ids: Vec<(String, Pos)>, assigned: &BTreeSet<String>| -> PResult<()> {
        for (name, pos) in ids {
            if vars.contains(&name) && !assigned.contains(&name) {
                return Err(LangError::UndeclaredVariable {
                    name,
                    line: pos.line,
                    col: pos.col,
                });
            }
        }
        Ok(())
    };
    for s in ss {
        match s {
            RawStmt::Assign(items) => {
                let mut ids = Vec::new();
                for (_, r) in items {
                    rhs_idents(r, &mut ids);
                }
                check(ids, &assigned)?;
                assigned.extend(items.iter().map(|(v, _)| v.clone()));
            }
            RawStmt::If { branches, otherwise } => {
                let mut ids = Vec::new();
                for (c, _) in branches {
                    rawb_idents(c, &mut ids);
                }
                check(ids, &assigned)?;
                let mut common: Option<BTreeSet<String>> = None;
                for (_, b) in branches {
                    let after = check_reads(b, vars, assigned.clone())?;
                    common = Some(match common {
                        None => after,
                        Some(c) => c.intersection(&after).cloned().collect(),
                    });
                }
                if let Some(b) = otherwise {
                    let after = check_reads(b, vars, assigned.clone())?;
                    let c = common.unwrap_or_default();
                    assigned = c.intersection(&after).cloned().collect();
                }
            }
        }
    }
    Ok(assigned)
}

/// Parses a program in the loop language.
pub fn parse(source: &str) -> Result<Program, LangError> {
    let toks = tokenize(source)?;
    let mut p = Parser { toks, i: 0 };
    let (init, guard, body) = p.program()?;

    let mut vars = BTreeSet::new();
    collect_assigned(&init, &mut vars);
    collect_assigned(&body, &mut vars);

    let mut ids = Vec::new();
    rawb_idents(&guard, &mut ids);
    let initialized = check_reads(&init, &vars, BTreeSet::new())?;
    for (name, pos) in ids {
        if vars.contains(&name) && !initialized.contains(&name) {
            return Err(LangError::UndeclaredVariable {
                name,
                line: pos.line,
                col: pos.col,
            });
        }
    }
    check_reads(&body, &vars, initialized)?;

    let mut all = Vec::new();
    let mut visit = |ss: &[RawStmt]| {
        fn walk(ss: &[RawStmt], out: &mut Vec<(String, Pos)>) {
            for s in ss {
                match s {
                    RawStmt::Assign(items) => items.iter().for_each(|(_, r)| rhs_idents(r, out)),
                    RawStmt::If { branches, otherwise } => {
                        for (c, b) in branches {
                            rawb_idents(c, out);
                            walk(b, out);
                        }
                        if let Some(b) = otherwise {
                            walk(b, out);
                        }
                    }
                }
            }
        }
        walk(ss, &mut all);
    };
    visit(&init);
    visit(&body);
    rawb_idents(&guard, &mut all);
    let params: BTreeSet<String> = all.into_iter().map(|(s, _)| s).filter(|s| !vars.contains(s)).collect();

    let res = Resolver { vars: &vars };
    let init = res.stmts(&init)?;
    let guard = res.bexpr(&guard)?;
    let mut body = res.stmts(&body)?;
    if !guard.is_true() {
        body = vec![Stmt::If {
            branches: vec![(guard, body)],
            otherwise: None,
        }];
    }
    Ok(Program {
        params,
        vars,
        init,
        guard: BExpr::True,
        body,
    })
}

/// Parses a polynomial over the given program variables (other identifiers
/// become parameters).
pub fn parse_poly(source: &str, vars: &BTreeSet<String>) -> Result<PolyExpr, LangError> {
    let toks = tokenize(source)?;
    let mut p = Parser { toks, i: 0 };
    let raw = p.poly()?;
    if !matches!(p.peek(), Tok::Eof | Tok::Newline) {
        return p.err(format!("unexpected {}", p.describe()));
    }
    Resolver { vars }.poly(&raw)
}

/// Parses a monomial such as `x*y^2` or `1`.
pub fn parse_monomial(source: &str, vars: &BTreeSet<String>) -> Result<Monomial, LangError> {
    let p = parse_poly(source, vars)?;
    let bad = || LangError::Syntax {
        line: 1,
        col: 1,
        message: format!("`{source}` is not a monomial over program variables"),
    };
    if p.len() != 1 {
        return Err(bad());
    }
    let (m, c) = p.terms().next().expect("one term");
    if !c.as_rational().is_some_and(|q| q.is_one()) {
        return Err(bad());
    }
    Ok(m.clone())
}
