use thiserror::Error;

/// Errors raised by the estimation, guidance and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TmaError {
    #[error("control input norm {norm} exceeds the observer bound {bound}")]
    Saturation { norm: f64, bound: f64 },

    #[error("target and observer positions coincide; bearing is undefined")]
    DegenerateGeometry,

    #[error("pivot {value:e} is below tolerance {tol:e}; estimate held")]
    PivotDegenerate { value: f64, tol: f64 },

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("smallest singular value is not unique (ratio {ratio:e})")]
    NonUniqueSolution { ratio: f64 },

    #[error("regressor matrix is rank deficient (rank {rank} < {needed})")]
    RankDeficient { rank: usize, needed: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, TmaError>;
