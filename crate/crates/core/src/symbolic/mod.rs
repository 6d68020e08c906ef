//! Exact symbolic arithmetic: rational functions of parameters, counter
//! polynomials, quadratic extensions and exponential-polynomial closed forms.

mod alg;
mod expoly;
mod monomial;
mod param;
mod poly;
mod upoly;

pub use alg::{solve_linear, solve_linear_multi, AlgElem, Field};
pub use expoly::{
    ep_diff, ep_eval, parse_rational, rat_to_f64, rational_sqrt, EigenValue, EvalValue, ExpPolynomial, ExpTerm,
};
pub use monomial::{Monomial, Sym};
pub use param::{param_monomial, ParamExpr, ParamValues};
pub use poly::{fmt_rat, pow_rat, Coeff, MPoly, Poly};
pub use upoly::{CounterPoly, UPoly};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymbolicError {
    #[error("division by the zero rational function")]
    DivisionByZero,
    #[error("parameter assignment makes denominator {denominator} vanish")]
    SingularAssignment { denominator: String },
    #[error("no value given for parameter {0}")]
    UnassignedParameter(String),
    #[error("singular linear system")]
    SingularSystem,
    #[error("closed form does not evaluate to a parameter-field value")]
    NonRealValue,
}
