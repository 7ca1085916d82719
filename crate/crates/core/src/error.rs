use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("pauli words have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("invalid pauli word `{0}`")]
    InvalidWord(String),

    #[error("qubit count {n} outside the supported range 1..={ceiling}")]
    QubitCount { n: usize, ceiling: usize },

    #[error("matrix dimension {got} does not match the expected {expected}")]
    Dimension { expected: usize, got: usize },

    #[error("matrix is not Hermitian (residual {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not traceless (identity coefficient {0:.3e})")]
    NotTraceless(f64),

    #[error("matrix is not unitary (residual {0:.3e})")]
    NotUnitary(f64),

    #[error("unitary has determinant phase {0:.6}, no traceless logarithm exists")]
    DeterminantPhase(f64),

    #[error("the identity word cannot carry a coefficient")]
    IdentityTerm,

    #[error("term `{0}` has weight above two")]
    NotTwoLocal(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("minimal allowed cost c_A is zero, the time bound is vacuous")]
    VacuousBound,

    #[error("first-order product formula would need {0} repetitions")]
    TooManySteps(u64),

    #[error("no bracket-generating drift Hamiltonian found after {0} seeds")]
    NotBracketGenerating(usize),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
