use core::fmt;

/// Error type shared by all core modules.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// Precondition on an argument violated.
    InvalidArgument(&'static str),
    /// Requested quantity lies outside the attainable range (e.g. quantile
    /// beyond total mass).
    OutOfRange(&'static str),
    /// A search hit the end of the sampled grid before the sought event
    /// (crossing time, unit-mass radius) occurred.
    RangeExhausted(&'static str),
    /// A numerical routine failed (covariance factorization, Newton solve).
    NumericFailure(&'static str),
    /// Forward Loewner map evaluated at a point inside the hull.
    SwallowedPoint,
    /// Curve handed to the driving extractor is not simple / not in the open
    /// upper half-plane.
    InvalidCurve(&'static str),
    /// Welding pair collapsed below numerical resolution.
    DegenerateCorrespondence,
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::InvalidArgument(m) => write!(f, "invalid argument: {m}"),
            CoreError::OutOfRange(m) => write!(f, "out of range: {m}"),
            CoreError::RangeExhausted(m) => write!(f, "range exhausted: {m}"),
            CoreError::NumericFailure(m) => write!(f, "numeric failure: {m}"),
            CoreError::SwallowedPoint => write!(f, "point already swallowed by the hull"),
            CoreError::InvalidCurve(m) => write!(f, "invalid curve: {m}"),
            CoreError::DegenerateCorrespondence => {
                write!(f, "degenerate correspondence: welding pair below resolution")
            }
        }
    }
}

pub type Result<T> = core::result::Result<T, CoreError>;
