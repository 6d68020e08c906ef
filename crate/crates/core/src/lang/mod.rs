//! Loop language: lexer, parser, AST, pretty-printer and validation.

mod ast;
mod lexer;
mod parser;
mod printer;
mod validate;

pub use ast::{AssignRhs, BExpr, CmpOp, DistKind, PolyExpr, Program, Stmt, VarMonomial};
pub use parser::{parse, parse_monomial, parse_poly};
pub use printer::{fmt_bexpr, fmt_poly, fmt_rhs, print_program};
pub use validate::{is_valid, validate, Diagnostic, Severity};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("undeclared variable `{name}` at {line}:{col}: read before any assignment")]
    UndeclaredVariable { name: String, line: usize, col: usize },
    #[error("malformed probability list at {line}:{col}: {message}")]
    MalformedProbabilities { line: usize, col: usize, message: String },
    #[error("{what} at {line}:{col} must not mention program variables")]
    NonConstant { line: usize, col: usize, what: String },
}
