use thiserror::Error;

/// Unified error type for the library surface.
#[derive(Debug, Error)]
pub enum Error {
    #[error("network must contain at least one mode")]
    EmptyNetwork,
    #[error("boson cutoff must be at least 1")]
    ZeroCutoff,
    #[error("site {site} out of range for a {n_modes}-mode network")]
    SiteOutOfRange { site: usize, n_modes: usize },
    #[error("site {site} is bosonic; the operation needs a fermionic mode")]
    NotFermionic { site: usize },
    #[error("site {site} is fermionic; the operation needs a bosonic mode")]
    NotBosonic { site: usize },
    #[error("occupation {occ} at site {site} exceeds the local dimension")]
    OccupationOutOfRange { site: usize, occ: u32 },
    #[error("expected dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not Hermitian (max deviation {max_dev:.3e}, tolerance {tol:.1e})")]
    NotHermitian { max_dev: f64, tol: f64 },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("state norm {norm:.6e} is not 1 within tolerance")]
    NotNormalized { norm: f64 },
    #[error("density matrix trace deviates from 1 by {dev:.3e}")]
    TraceNotOne { dev: f64 },
    #[error("density matrix has negative eigenvalue {value:.3e}")]
    NegativeEigenvalue { value: f64 },
    #[error("invalid operator expression: {0}")]
    InvalidExpression(String),
    #[error("sites {0:?} must be distinct")]
    DuplicateSites(Vec<usize>),
    #[error("coupling weight {detail} must be real for Hermitian spin-product links")]
    ComplexSpinWeight { detail: String },
    #[error("time grid must be non-empty, non-negative, and strictly ascending")]
    BadTimeGrid,
    #[error("dense dimension {dim} exceeds the guard {guard}; set SUSY_DFS_DENSE_GUARD to raise it")]
    DenseGuardExceeded { dim: usize, guard: usize },
    #[error(
        "sector carries {excitations} excitations; pass allow_multi_excitation to expand transforms beyond 2"
    )]
    UnsupportedExcitationCount { excitations: u32 },
    #[error("subsystem selection must be non-empty, ascending, and in range")]
    BadKeepSet,
    #[error("component amplitude is below 1e-12; the requested ket pair does not span the state")]
    VanishingComponent,
    #[error("eigendecomposition failed: {0}")]
    Linalg(String),
    #[error("{path}: {message}")]
    Scenario { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn scenario(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Scenario {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
