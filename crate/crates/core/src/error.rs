use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("index {index} lies outside the declared horizon [-{horizon}, {horizon}]")]
    HorizonExceeded { index: i64, horizon: u64 },

    #[error("determinant modulus {modulus} deviates from 1 beyond tolerance")]
    NearSingular { modulus: f64 },

    #[error("matrix is not in SU(1,1) within {tol:e}")]
    NotInGroup { tol: f64 },

    #[error("word `{word}` has no table entry and the map has no default")]
    UnmappedWord { word: String },

    #[error("coefficients cover [{have_lo}, {have_hi}] but [{need_lo}, {need_hi}] is required")]
    InsufficientCoefficients {
        have_lo: i64,
        have_hi: i64,
        need_lo: i64,
        need_hi: i64,
    },

    #[error("eigensolver failed: {0}")]
    EigensolveFailure(String),

    #[error("discriminant is not real on {bad} of {total} grid points; input is not periodic with the given period")]
    NonRealDiscriminant { bad: usize, total: usize },

    #[error("singular value ratio {ratio:.4} is below 2; no exponential dichotomy at this resolution")]
    DegenerateSplit { ratio: f64 },

    #[error("continued fraction expansion is unreliable beyond depth {depth}")]
    DepthUnreliable { depth: usize },

    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
