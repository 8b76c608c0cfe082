use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A model or matrix violates one of its construction invariants.
    #[error("validation error: {0}")]
    Validation(String),

    /// An argument lies outside the domain of a scalar function.
    #[error("domain error: {0}")]
    Domain(String),

    /// The generator does not have the structure of a connected rate matrix.
    #[error("internal consistency error: {0}")]
    InternalConsistency(String),

    /// The closed-form noise expression needs `a_{N-1}(s)` and `a_{N-2}(s)`
    /// to be constant in the counting variable.
    #[error(
        "noise-formula-inapplicable: coefficient a_{index}(s) varies with the counting field \
         (relative deviation {deviation:.3e} at s = {s})"
    )]
    NoiseFormulaInapplicable { index: usize, deviation: f64, s: f64 },

    #[error("continuation error: {0}")]
    Continuation(String),

    /// The rate matrix has a kernel of dimension greater than one.
    #[error("degeneracy error: {0}")]
    Degeneracy(String),

    /// The requested analysis does not apply to this model topology.
    #[error("inapplicable: {0}")]
    Inapplicable(String),

    #[error("COP undefined: {0}")]
    CopUndefined(String),

    #[error("at grid point (E21 = {e21}, betaH = {beta_h}): {source}")]
    AtGridPoint {
        e21: f64,
        beta_h: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("model file error: {0}")]
    ModelFile(String),
}

impl Error {
    /// Stable machine-readable identifier for the error class.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Validation(_) => "validation",
            Error::Domain(_) => "domain",
            Error::InternalConsistency(_) => "internal-consistency",
            Error::NoiseFormulaInapplicable { .. } => "noise-formula-inapplicable",
            Error::Continuation(_) => "continuation",
            Error::Degeneracy(_) => "degeneracy",
            Error::Inapplicable(_) => "inapplicable",
            Error::CopUndefined(_) => "cop-undefined",
            Error::AtGridPoint { source, .. } => source.code(),
            Error::ModelFile(_) => "model-file",
        }
    }
}
