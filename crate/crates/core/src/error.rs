use thiserror::Error;

/// Errors raised by the physical models, fitters and file front end.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unknown material regime: no parameter set registered for T = {temperature} K")]
    UnknownMaterialRegime { temperature: f64 },

    #[error("angular mode number evaluates to 0 (radius too small for the wavelength)")]
    ZeroModeNumber,

    #[error("model undefined at Fourier frequency {omega} rad/s: {reason}")]
    Domain { omega: f64, reason: &'static str },

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("calibration marker not found near {omega} rad/s")]
    MarkerNotFound { omega: f64 },

    #[error("degenerate calibration marker: integrated power is {power}")]
    DegenerateMarker { power: f64 },

    #[error("insufficient data: {usable} usable bins, at least {required} required")]
    InsufficientData { usable: usize, required: usize },

    #[error("lorentzian window [{lo}, {hi}] rad/s: {reason}")]
    Window { lo: f64, hi: f64, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite and > 0, got {value}"),
        })
    }
}
