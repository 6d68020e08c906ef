//! Timing workloads for the analysis pipeline.

use probsens_core::corpus;
use probsens_core::pipeline::{AnalysisError, Method};

/// One benchmarked analysis: a corpus program, a target monomial and an
/// optional parameter.
#[derive(Clone, Copy, Debug)]
pub struct Case {
    pub program: &'static str,
    pub target: &'static str,
    pub wrt: Option<&'static str>,
    pub method: Method,
}

impl Case {
    pub fn source(&self) -> &'static str {
        corpus::get(self.program).expect("corpus program")
    }

    pub fn label(&self) -> String {
        match self.wrt {
            Some(p) => format!("{}/d{p} E({}) {}", self.program, self.target, format!("{:?}", self.method).to_lowercase()),
            None => format!("{}/E({})", self.program, self.target),
        }
    }
}

const fn case(program: &'static str, target: &'static str, wrt: Option<&'static str>, method: Method) -> Case {
    Case {
        program,
        target,
        wrt,
        method,
    }
}

pub const CASES: &[Case] = &[
    case("vaccination", "infected_prob", Some("vax_param"), Method::Diff),
    case("vaccination", "infected_prob", Some("vax_param"), Method::Sensrec),
    case("non_admissible", "u", Some("p"), Method::Sensrec),
    case("non_admissible_3", "z1^2", Some("p"), Method::Sensrec),
    case("coin_flips_50", "total", Some("p"), Method::Diff),
    case("las_vegas_search", "attempts^2", Some("p"), Method::Sensrec),
    case("random_walk_2d", "x^2", None, Method::Auto),
];

/// Builds and solves the system for `c`, returning its equation count.
pub fn run(c: &Case) -> Result<usize, AnalysisError> {
    let prep = probsens_core::pipeline::prepare(c.source())?;
    let m = prep.monomial(c.target)?;
    let (sys, _) = prep.system(&m, c.wrt, c.method, &Default::default())?;
    probsens_core::pipeline::closed_form(&sys, c.wrt)?;
    Ok(sys.rec_count())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_case_completes() {
        for c in CASES {
            let rec = run(c).unwrap_or_else(|e| panic!("{}: {e}", c.label()));
            assert!(rec > 0, "{}", c.label());
        }
    }
}
