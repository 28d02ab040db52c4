use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported qubit count {0} (supported: 1, 2)")]
    UnsupportedQubits(usize),

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("trace is not 1 (got {0:.12})")]
    TraceNotUnit(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("{name} = {value} is out of range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("delta grid is empty")]
    EmptyGrid,

    #[error("every delta on the grid leaves the noised process rank-deficient")]
    AllRankDeficient,

    #[error("tomography design matrix is rank-deficient (rank {rank} of {needed})")]
    RankDeficientDesign { rank: usize, needed: usize },

    #[error("degenerate tomography data: {0}")]
    DegenerateCounts(String),

    #[error("photon-number cutoff exceeded: {photons} photons > {cutoff}")]
    CutoffOverflow { photons: usize, cutoff: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
