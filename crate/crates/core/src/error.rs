use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vector has zero length")]
    ZeroVector,

    #[error("empty sample")]
    EmptySample,

    #[error("degenerate variance divisor")]
    DegenerateVarianceDivisor,

    #[error("degenerate sample mean: |E| = 1 has no finite sample-size solution")]
    DegenerateSampleMean,

    #[error("orthogonality required by derivation (planes meet at {angle_deg:.3} deg)")]
    OrthogonalityRequired { angle_deg: f64 },

    #[error("closed form needs the uniform singular source, got {0}")]
    NonUniformSource(String),

    #[error("settings are not coplanar with the {0} plane")]
    NotCoplanar(String),

    #[error("model has no exact correlation; use the Monte Carlo method")]
    NoExactCorrelation,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
