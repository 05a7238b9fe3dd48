use thiserror::Error;

/// Errors raised by the geometric operations of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("ambiguous geodesic: endpoints are antipodal and 0 < s < pi (s = {s})")]
    AmbiguousGeodesic { s: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("point is {distance} rad from the nearest grid node (allowed {allowed})")]
    OffGrid { distance: f64, allowed: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
