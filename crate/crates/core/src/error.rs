use thiserror::Error;

use crate::vtree::Var;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("variable {0} is not assigned")]
    Unassigned(Var),

    #[error("variable {0} assigned twice")]
    DuplicateAssignment(Var),

    #[error("variable {0} is not part of the vtree")]
    UnknownVariable(Var),

    #[error("determinism violated at OR gate {gate}: children {first} and {second} are both satisfied")]
    NotDeterministic {
        gate: usize,
        first: usize,
        second: usize,
    },

    #[error("circuits do not share a vtree: {0}")]
    VtreeMismatch(String),

    #[error("circuit is not in alternating OR/AND form: {0}")]
    NotAlternating(String),

    #[error("expected a {expected} circuit")]
    WrongRole { expected: &'static str },

    #[error("moment order {0} exceeds the supported maximum of {max}", max = crate::numeric::MAX_ORDER)]
    OrderTooLarge(usize),

    #[error("evidence has (near-)zero probability ({0:e})")]
    ZeroProbabilityEvidence(f64),

    #[error("inconsistent evidence: no completion has non-zero probability")]
    InconsistentEvidence,

    #[error("too many variables for exhaustive enumeration: {0} > {max}", max = crate::oracle::MAX_ENUM_VARS)]
    TooManyVariables(usize),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("singular system; try a positive regularization strength")]
    Singular,

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid experiment configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
