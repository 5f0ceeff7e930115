use thiserror::Error;

/// Everything that can go wrong inside the laboratory.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("grid resolution {0} is not a power of two >= 8")]
    BadResolution(usize),
    #[error("grid dimension {0} is not 2 or 3")]
    BadDimension(usize),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("rank mismatch: expected {expected}, found {found}")]
    RankMismatch { expected: usize, found: usize },
    #[error("expected {expected} components, found {found}")]
    ComponentCount { expected: usize, found: usize },
    #[error("field is not divergence free (relative divergence {0:e})")]
    NotDivergenceFree(f64),
    #[error("field is not mean zero (mean magnitude {0:e})")]
    NotMeanZero(f64),
    #[error("stress of size {norm:e} lies outside the admissible ball of radius {epsilon:e}")]
    OutsideBall { norm: f64, epsilon: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid does not resolve the requested concentration: {0}")]
    Unresolved(String),
    #[error("flow map gradient deviates from the identity by {0:e}")]
    FlowTooDeformed(f64),
    #[error("parameter condition violated: {0}")]
    ParameterCondition(String),
    #[error("directions are parallel")]
    ParallelDirections,
    #[error("spectral tail blew up at t = {t}: tail fraction {fraction:e}")]
    BlowUp { t: f64, fraction: f64 },
    #[error("reassembly failed: relative residual {0:e}")]
    Reassembly(f64),
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
