use thiserror::Error;

/// Crate-wide error type. Each variant maps to a distinct CLI exit code
/// (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration: {0}")]
    Config(String),

    #[error("invalid parameters: {}", .0.join("; "))]
    InvalidParams(Vec<String>),

    #[error("kernel: {0}")]
    Kernel(String),

    #[error("eigenvalue root selection failed: {0}")]
    RootSelection(String),

    #[error("zero-level condition has a vanishing denominator")]
    DegenerateDenominator,

    #[error("iteration did not converge: {0}")]
    NonConvergence(String),

    #[error("time step {dt} exceeds the positivity bound {bound}")]
    DtTooLarge { dt: f64, bound: f64 },

    #[error("kernel mismatch: {0}")]
    KernelMismatch(String),

    #[error("bisection bracket invalid: {0}")]
    Bracket(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::InvalidParams(_) => 3,
            Error::Kernel(_) => 4,
            Error::RootSelection(_) => 5,
            Error::DegenerateDenominator => 6,
            Error::NonConvergence(_) => 7,
            Error::DtTooLarge { .. } => 8,
            Error::KernelMismatch(_) => 9,
            Error::Bracket(_) => 10,
            Error::Io(_) => 11,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
