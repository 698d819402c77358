//! Synthetic averaged-periodogram spectra drawn from the forward models.
//!
//! Each bin of an `n_avg`-fold averaged periodogram of Gaussian noise is the
//! true PSD times a Gamma(n_avg, 1/n_avg) variate. Every bin draws from its
//! own ChaCha stream selected by the bin index, so output depends only on the
//! seed and never on evaluation order or thread count.

use std::collections::BTreeSet;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;

use crate::error::{require_positive, Error, Result};
use crate::fit::{calibrate_spectrum, fit_thermorefractive, CalibrationMarker, FitResult};
use crate::spectra::{
    bin_widths_hz, micromech_freq_psd, thermorefractive_psd, validate_grid, BudgetSetup, Channel, Spectrum,
    SpectrumKind,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisConfig {
    /// Angular Fourier frequencies, rad/s.
    pub grid: Vec<f64>,
    pub setup: BudgetSetup,
    pub channels: BTreeSet<Channel>,
    /// Ground-truth semi-axis scales applied to `setup.geometry`.
    pub s_b: f64,
    pub s_d: f64,
    pub marker: Option<CalibrationMarker>,
    pub n_avg: u64,
    pub seed: u64,
    pub kind: SpectrumKind,
    /// Detector gain applied to the emitted values (1 = absolute units).
    pub detector_gain: f64,
}

impl SynthesisConfig {
    pub fn new(setup: BudgetSetup, grid: Vec<f64>, channels: BTreeSet<Channel>) -> Self {
        Self {
            grid,
            setup,
            channels,
            s_b: 1.0,
            s_d: 1.0,
            marker: None,
            n_avg: 1,
            seed: 0,
            kind: SpectrumKind::FrequencyNoise,
            detector_gain: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_grid(&self.grid)?;
        self.setup.validate()?;
        require_positive("synth.s_b", self.s_b)?;
        require_positive("synth.s_d", self.s_d)?;
        require_positive("synth.detector_gain", self.detector_gain)?;
        if self.n_avg == 0 {
            return Err(Error::InvalidParameter {
                name: "synth.n_avg",
                reason: "must be >= 1".into(),
            });
        }
        if self.channels.is_empty() {
            return Err(Error::InvalidParameter {
                name: "channels",
                reason: "at least one channel must be enabled".into(),
            });
        }
        if let Some(m) = &self.marker {
            if m.nearest_bin(&self.grid).is_none() {
                return Err(Error::InvalidParameter {
                    name: "marker.freq_hz",
                    reason: "marker frequency outside the grid".into(),
                });
            }
        }
        Ok(())
    }

    /// Budget setup with the ground-truth geometry applied.
    pub fn true_setup(&self) -> Result<BudgetSetup> {
        let mut setup = self.setup.clone();
        setup.geometry = setup.geometry.scaled(self.s_b, self.s_d, &setup.material)?;
        Ok(setup)
    }

    /// Noise-free model PSD per bin, excluding the marker.
    pub fn model(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let setup = self.true_setup()?;
        self.grid
            .par_iter()
            .map(|w| setup.total_psd(&self.channels, self.kind, *w))
            .collect()
    }
}

/// Per-bin random stream: ChaCha8 keyed by the seed, stream id = bin index.
pub(crate) fn bin_rng(seed: u64, bin: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(bin as u64);
    rng
}

/// Draw one averaged-periodogram realisation of the configured spectrum.
///
/// The marker, when present, is a coherent tone: its area divided by the bin
/// width is added to the nearest bin without periodogram scatter.
pub fn synthesize(config: &SynthesisConfig) -> Result<Spectrum> {
    let model = config.model()?;
    let shape = config.n_avg as f64;
    let gamma = Gamma::new(shape, 1.0 / shape).map_err(|e| Error::InvalidParameter {
        name: "synth.n_avg",
        reason: e.to_string(),
    })?;
    let mut values: Vec<f64> = model
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut rng = bin_rng(config.seed, i);
            s * gamma.sample(&mut rng)
        })
        .collect();

    if let Some(marker) = &config.marker {
        let i = marker.nearest_bin(&config.grid).expect("validated");
        let widths = bin_widths_hz(&config.grid);
        let mut tone = marker.area() / widths[i];
        if config.kind == SpectrumKind::Displacement {
            tone /= config.setup.coupling.g().powi(2);
        }
        values[i] += tone;
    }
    for v in &mut values {
        *v *= config.detector_gain;
    }
    Spectrum::new(config.kind, config.grid.clone(), values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundtripReport {
    pub s_b_true: f64,
    pub s_d_true: f64,
    pub fit: FitResult,
    /// Relative recovery errors (fit − truth)/truth.
    pub s_b_error: f64,
    pub s_d_error: f64,
    /// Factor the calibration applied to the raw spectrum.
    pub calibration_scale: f64,
}

/// Synthesize, calibrate against the marker, then fit the thermorefractive
/// semi-axes. The marker bins are excluded from the fit, as is the band
/// around every resonator mode where its Lorentzian exceeds 1% of the
/// nominal thermorefractive level.
pub fn roundtrip_check(config: &SynthesisConfig) -> Result<RoundtripReport> {
    let marker = config.marker.ok_or(Error::InvalidParameter {
        name: "marker",
        reason: "round-trip check needs a calibration marker".into(),
    })?;
    if !config.channels.contains(&Channel::Thermorefractive) {
        return Err(Error::InvalidParameter {
            name: "channels",
            reason: "round-trip check needs the thermorefractive channel".into(),
        });
    }
    let mut cfg = config.clone();
    cfg.kind = SpectrumKind::FrequencyNoise;
    let raw = synthesize(&cfg)?;
    let cal = calibrate_spectrum(&raw, &marker)?;
    let mut exclude = vec![cal.marker_window];
    if cfg.channels.contains(&Channel::MicroMech) {
        let s = &cfg.setup;
        for m in &s.micro_modes {
            let peak = micromech_freq_psd(std::slice::from_ref(m), &s.cavity, m.omega_i());
            let floor = thermorefractive_psd(&s.material, &s.geometry, &s.cavity, s.temperature, m.omega_i())?;
            let half = (0.5 * m.gamma_i() * (peak / (0.01 * floor)).sqrt()).max(20.0 * m.gamma_i());
            exclude.push((m.omega_i() - half, m.omega_i() + half));
        }
    }
    let s = &cfg.setup;
    let fit = fit_thermorefractive(&cal.spectrum, &s.geometry, &s.material, &s.cavity, s.temperature, &exclude)?;
    Ok(RoundtripReport {
        s_b_true: cfg.s_b,
        s_d_true: cfg.s_d,
        s_b_error: (fit.s_b - cfg.s_b) / cfg.s_b,
        s_d_error: (fit.s_d - cfg.s_d) / cfg.s_d,
        calibration_scale: cal.scale,
        fit,
    })
}
