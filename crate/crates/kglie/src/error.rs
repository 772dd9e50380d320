use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("function {name} called with {got} arguments, expected {expected}")]
    Arity { name: String, expected: usize, got: usize },

    #[error("unbound variable {0}")]
    UnboundVar(String),

    #[error("singular evaluation: {0}")]
    Singular(String),

    #[error("sampling domain exhausted: {0}")]
    DomainExhausted(String),

    #[error("rank unstable across resamples")]
    RankUnstable,

    #[error("no rational certificate for sampled dependency")]
    NonRationalDependency,

    #[error("{component} may only depend on {allowed}, found {var}")]
    VariableLeak { component: String, allowed: String, var: String },

    #[error("missing inverse for {0}")]
    MissingInverse(String),

    #[error("map not invertible on sampled domain: {0}")]
    NotInvertible(String),

    #[error("abstract function {0} evaluated without an oracle")]
    OracleNeeded(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 for usage and parse problems, 3 for
    /// sampling or numeric environment failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Syntax { .. }
            | Error::Arity { .. }
            | Error::UnboundVar(_)
            | Error::VariableLeak { .. }
            | Error::MissingInverse(_)
            | Error::Invalid(_)
            | Error::Io(_) => 2,
            Error::Singular(_)
            | Error::DomainExhausted(_)
            | Error::RankUnstable
            | Error::NonRationalDependency
            | Error::NotInvertible(_)
            | Error::OracleNeeded(_) => 3,
        }
    }
}
