//! The surgery algebra 𝒦, its Koszul dual 𝒦^!, and the type D / DA / DD
//! machinery built on them: the trace and cotrace bimodules, box tensor
//! products, homological perturbation and gradings.

pub mod algebra_k;
pub mod boxtensor;
pub mod duality;
pub mod examples;
pub mod f2;
pub mod gradings;
pub mod idem;
pub mod kdual;
pub mod perturbation;
pub mod report;
pub mod structures;
pub mod suites;

pub use algebra_k::{KElt, KMono};
pub use f2::F2Sum;
pub use idem::Idem;
pub use kdual::{DualElt, DualMono};

/// Failure to parse an algebra element or structure file.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse `{input}`: {msg}")]
pub struct ParseError {
    pub input: String,
    pub msg: String,
}

impl ParseError {
    pub fn new(input: &str, msg: &str) -> Self {
        ParseError { input: input.to_string(), msg: msg.to_string() }
    }
}
