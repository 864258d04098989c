//! Error type shared by all modules of the crate.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Domain and validation failures.
///
/// Every constructor and operation in this crate validates its inputs up
/// front and reports failures through this enum; no routine silently clamps
/// an out-of-domain argument.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A value that must be finite was NaN or infinite.
    #[error("{name} must be finite, got {value}")]
    NotFinite { name: &'static str, value: f64 },

    /// Elevation angles live on the backscattering hemisphere.
    #[error("elevation angle must lie in [0, pi/2] rad, got {0}")]
    ElevationOutOfRange(f64),

    /// A strictly positive quantity (distance, area, power) was not.
    #[error("{name} must be strictly positive, got {value}")]
    NotPositive { name: &'static str, value: f64 },

    /// A bounded parameter fell outside its closed interval.
    #[error("{name} must lie in [{lo}, {hi}], got {value}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// The legacy model's closed-form normalization only exists for
    /// integer lobe exponents.
    #[error("lobe exponent must be a non-negative integer for this model, got {0}")]
    NonIntegerExponent(f64),

    /// The power-balance normalization integral diverges from its closed
    /// form at grazing incidence.
    #[error("normalization is undefined at grazing incidence (theta_i = pi/2)")]
    GrazingIncidence,

    /// Binomial coefficient with k > n.
    #[error("binomial coefficient requires k <= n, got n = {n}, k = {k}")]
    BinomialDomain { n: u32, k: u32 },

    /// Beta function outside its real positive domain.
    #[error("beta function requires positive arguments, got ({x}, {y})")]
    BetaDomain { x: f64, y: f64 },

    /// Fresnel coefficients are only implemented for dense lossless media.
    #[error("relative permittivity must be >= 1, got {0}")]
    PermittivityRange(f64),

    /// A fit was attempted with fewer samples than free parameters allow.
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    /// Paired sequences of different lengths.
    #[error("sequences must have equal nonzero length, got {0} and {1}")]
    LengthMismatch(usize, usize),

    /// An operation received an empty input where at least one element is
    /// required.
    #[error("input must not be empty")]
    Empty,
}
