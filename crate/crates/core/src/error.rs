use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("coordinate {0} lies outside [0, 1]")]
    OutsideUnitInterval(f64),
    #[error("interval endpoints out of order: [{0}, {1}]")]
    ReversedInterval(f64, f64),
    #[error("invalid Cantor recipe: {0}")]
    InvalidCantor(&'static str),
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("scale {scale} is below the model resolution {floor}")]
    BelowResolution { scale: f64, floor: f64 },
    #[error("{0} must be sorted in increasing order")]
    Unsorted(&'static str),
    #[error("the set is empty")]
    EmptySet,
    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
