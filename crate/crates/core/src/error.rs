use thiserror::Error;

/// Errors raised while building or manipulating lab objects.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("measure space must have at least one point")]
    EmptySpace,

    #[error("weight {value} at point {index} is not a positive finite number")]
    NonpositiveWeight { index: usize, value: f64 },

    #[error("not a partition: {0}")]
    NotAPartition(String),

    #[error("objects live on different measure spaces")]
    SpaceMismatch,

    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("value at point {index} is not finite")]
    NonFinite { index: usize },

    #[error("invalid labels: {0}")]
    InvalidLabels(String),

    #[error("point map image {image} at point {index} is out of range")]
    ImageOutOfRange { index: usize, image: usize },

    #[error("operator is not self-adjoint (relative deviation {deviation:e})")]
    NotSelfAdjoint { deviation: f64 },

    #[error("operator is not positive (eigenvalue {eigenvalue:e})")]
    NotPositive { eigenvalue: f64 },

    #[error("operator is not normal: multiplier is not measurable for the partition")]
    NotNormal,

    #[error("function is not measurable with respect to the partition")]
    NotMeasurable,

    #[error("function is not measurable with respect to the fibers of the point map")]
    NotFiberMeasurable,

    #[error("invalid generator config: {0}")]
    ConfigInvalid(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
