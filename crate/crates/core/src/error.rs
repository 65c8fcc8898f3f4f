use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid scheme: {0}")]
    InvalidScheme(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is not anti-Hermitian (max deviation {0:e})")]
    NotAntiHermitian(f64),

    #[error("invalid pair element: {0}")]
    InvalidPair(String),

    #[error("point outside domain: {0}")]
    Domain(String),

    #[error("scheme does not match the requested ansatz: {0}")]
    CaseMismatch(String),

    #[error("inadmissible representation: {0}")]
    Inadmissible(String),

    #[error("Fock space dimension {dim} exceeds the guard {guard}")]
    DimensionGuard { dim: usize, guard: usize },
}
