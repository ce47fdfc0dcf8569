use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("conductivity of layer {layer} must be positive and finite, got {value}")]
    NonPositiveConductivity { layer: usize, value: f64 },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(&'static str),

    #[error("mode index must be at least 1")]
    InvalidMode,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("invalid box: {0}")]
    InvalidBox(&'static str),

    #[error("invalid option: {0}")]
    InvalidOption(&'static str),

    #[error("sample set of {count} points exceeds the cap of {cap}")]
    TooManySamples { count: u128, cap: usize },

    /// The localized-potential definiteness test failed for a layer: either
    /// the number of measurements is too small or the margin is too large.
    #[error("no definiteness at layer {layer} (margin {margin:e}): m too small or epsilon too large")]
    NoDefiniteness { layer: usize, margin: f64 },

    #[error("upper corner is infeasible: lambda_max(F(b) - Y - tau I) = {residual:e}")]
    InfeasibleStart { residual: f64 },
}
