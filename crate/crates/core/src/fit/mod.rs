//! Spectrum calibration and model fitting.
//!
//! * [`calibrate_spectrum`] converts a detector-unit spectrum to absolute
//!   frequency noise using a phase-modulation tone of known depth.
//! * [`fit_thermorefractive`] adjusts the two gaussian semi-axes of the mode
//!   so the thermorefractive model matches a measured spectrum.
//! * [`fit_lorentzian_modes`] fits isolated mechanical resonances.
//!
//! All fits minimise squared differences of log-PSD with the damped
//! least-squares solver in [`lm`].

pub mod lm;

use nalgebra::DMatrix;

use crate::error::{require_positive, Error, Result};
use crate::geometry::ModeGeometry;
use crate::params::{Material, OpticalCavity};
use crate::spectra::{bin_widths_hz, thermorefractive_psd, Spectrum, SpectrumKind};

use lm::{minimize, LeastSquares, LmSettings};

/// Semi-axis scale factors are confined to this box.
pub const SCALE_BOUNDS: (f64, f64) = (0.2, 5.0);

/// Minimum number of bins a thermorefractive fit needs after exclusions.
pub const MIN_FIT_BINS: usize = 20;

/// Minimum bins per Lorentzian window.
pub const MIN_WINDOW_BINS: usize = 7;

/// A phase-modulation tone used as an absolute frequency-noise reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationMarker {
    omega_cal: f64,
    depth: f64,
    bin_window: usize,
}

impl CalibrationMarker {
    pub fn new(omega_cal: f64, depth: f64, bin_window: usize) -> Result<Self> {
        require_positive("marker.omega", omega_cal)?;
        require_positive("marker.depth_rad", depth)?;
        if bin_window == 0 || bin_window.is_multiple_of(2) {
            return Err(Error::InvalidParameter {
                name: "marker.bin_window",
                reason: format!("must be odd and >= 1, got {bin_window}"),
            });
        }
        Ok(Self {
            omega_cal,
            depth,
            bin_window,
        })
    }

    pub fn omega_cal(&self) -> f64 {
        self.omega_cal
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn bin_window(&self) -> usize {
        self.bin_window
    }

    /// Frequency-noise power of the tone, β²Ω_cal²/2, in (rad/s)².
    /// This is the area the tone adds under a single-sided PSD in Hz.
    pub fn area(&self) -> f64 {
        0.5 * self.depth * self.depth * self.omega_cal * self.omega_cal
    }

    /// Index of the grid bin closest to the marker frequency.
    pub fn nearest_bin(&self, grid: &[f64]) -> Option<usize> {
        let (first, last) = (*grid.first()?, *grid.last()?);
        if self.omega_cal < first || self.omega_cal > last {
            return None;
        }
        let idx = grid.partition_point(|w| *w < self.omega_cal);
        Some(match idx {
            0 => 0,
            i if i >= grid.len() => grid.len() - 1,
            i if (grid[i] - self.omega_cal) < (self.omega_cal - grid[i - 1]) => i,
            i => i - 1,
        })
    }
}

/// Calibrated spectrum plus the marker bins that downstream fits must skip.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub spectrum: Spectrum,
    /// Factor applied to the raw spectrum.
    pub scale: f64,
    /// Inclusive bin range occupied by the marker.
    pub marker_bins: (usize, usize),
    /// The same range as an interval of angular frequency.
    pub marker_window: (f64, f64),
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Rescale `raw` so the marker's background-subtracted area equals its known
/// frequency-modulation power.
///
/// The local background is the median of the bins flanking the marker window
/// on both sides.
pub fn calibrate_spectrum(raw: &Spectrum, marker: &CalibrationMarker) -> Result<Calibration> {
    let grid = raw.grid();
    let vals = raw.values();
    let n = grid.len();
    let not_found = Error::MarkerNotFound {
        omega: marker.omega_cal(),
    };
    let centre = marker.nearest_bin(grid).ok_or(not_found.clone())?;
    let half = marker.bin_window() / 2;

    let lo = centre.saturating_sub(half);
    let hi = (centre + half).min(n - 1);
    let peak = (lo..=hi)
        .max_by(|a, b| vals[*a].total_cmp(&vals[*b]))
        .ok_or(not_found.clone())?;
    if vals[peak] <= 0.0 {
        return Err(Error::DegenerateMarker { power: 0.0 });
    }
    let left_ok = peak == 0 || vals[peak] > vals[peak - 1];
    let right_ok = peak + 1 == n || vals[peak] > vals[peak + 1];
    if !(left_ok && right_ok) {
        return Err(not_found);
    }

    let w_lo = peak.saturating_sub(half);
    let w_hi = (peak + half).min(n - 1);
    let flank = marker.bin_window().max(8);
    let mut background: Vec<f64> = (w_lo.saturating_sub(flank)..w_lo)
        .chain((w_hi + 1)..(w_hi + 1 + flank).min(n))
        .map(|i| vals[i])
        .collect();
    if background.is_empty() {
        return Err(not_found);
    }
    let bg = median(&mut background);
    let mut spread: Vec<f64> = background.iter().map(|v| (v - bg).abs()).collect();
    let sigma = 1.4826 * median(&mut spread);
    if vals[peak] - bg <= 5.0 * sigma {
        return Err(not_found);
    }

    let widths = bin_widths_hz(grid);
    let power: f64 = (w_lo..=w_hi).map(|i| (vals[i] - bg) * widths[i]).sum();
    if !(power.is_finite() && power > 0.0) {
        return Err(Error::DegenerateMarker { power });
    }
    let scale = marker.area() / power;
    let values = vals.iter().map(|v| v * scale).collect();
    Ok(Calibration {
        spectrum: Spectrum::new(SpectrumKind::FrequencyNoise, grid.to_vec(), values)?,
        scale,
        marker_bins: (w_lo, w_hi),
        marker_window: (grid[w_lo], grid[w_hi]),
    })
}

/// Outcome of one Lorentzian window fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzianFit {
    pub omega_c: f64,
    pub gamma: f64,
    /// Peak PSD above background.
    pub height: f64,
    pub background: f64,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub s_b: f64,
    pub s_d: f64,
    pub lorentzians: Vec<LorentzianFit>,
    /// RMS log-PSD residual.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Covariance of (s_b, s_d).
    pub covariance: DMatrix<f64>,
    /// RMS log residual after each accepted step, starting from the initial guess.
    pub residual_history: Vec<f64>,
    pub bins_used: usize,
}

/// Thermorefractive log-PSD as a function of the semi-axis scale factors.
#[derive(Debug, Clone)]
pub struct ThermorefractiveModel {
    base: ModeGeometry,
    material: Material,
    cavity: OpticalCavity,
    temperature: f64,
}

impl ThermorefractiveModel {
    pub fn new(base: ModeGeometry, material: Material, cavity: OpticalCavity, temperature: f64) -> Result<Self> {
        require_positive("temperature", temperature)?;
        Ok(Self {
            base,
            material,
            cavity,
            temperature,
        })
    }

    pub fn geometry(&self, s_b: f64, s_d: f64) -> Result<ModeGeometry> {
        self.base.scaled(s_b, s_d, &self.material)
    }

    pub fn log_psd(&self, s_b: f64, s_d: f64, omega: f64) -> Result<f64> {
        let geom = self.geometry(s_b, s_d)?;
        Ok(thermorefractive_psd(&self.material, &geom, &self.cavity, self.temperature, omega)?.ln())
    }

    /// Analytic ∂ ln S / ∂(s_b, s_d).
    ///
    /// ln S = const − ln(s_b s_d) + ½ ln τ − ½ ln Ω − 2 ln(1 + (Ωτ)^¾) and
    /// ∂ ln τ / ∂ s_b = 2 b'⁻² / (s_b (b'⁻² + d'⁻²)), likewise for s_d.
    pub fn log_psd_gradient(&self, s_b: f64, s_d: f64, omega: f64) -> Result<[f64; 2]> {
        let geom = self.geometry(s_b, s_d)?;
        let (ib2, id2) = (geom.b().powi(-2), geom.d().powi(-2));
        let x = (omega * geom.tau()).powf(0.75);
        let dlog_tau = 0.5 - 1.5 * x / (1.0 + x);
        Ok([
            -1.0 / s_b + dlog_tau * 2.0 * ib2 / (s_b * (ib2 + id2)),
            -1.0 / s_d + dlog_tau * 2.0 * id2 / (s_d * (ib2 + id2)),
        ])
    }
}

struct ThermoProblem<'a> {
    model: &'a ThermorefractiveModel,
    omega: Vec<f64>,
    log_data: Vec<f64>,
}

impl LeastSquares for ThermoProblem<'_> {
    fn n_params(&self) -> usize {
        2
    }

    fn residuals(&self, p: &[f64]) -> Vec<f64> {
        let Ok(geom) = self.model.geometry(p[0], p[1]) else {
            return vec![f64::INFINITY; self.omega.len()];
        };
        let m = self.model;
        self.omega
            .iter()
            .zip(&self.log_data)
            .map(|(w, y)| {
                thermorefractive_psd(&m.material, &geom, &m.cavity, m.temperature, *w)
                    .map(|s| s.ln() - y)
                    .unwrap_or(f64::INFINITY)
            })
            .collect()
    }

    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(self.omega.len(), 2);
        for (i, w) in self.omega.iter().enumerate() {
            let g = self
                .model
                .log_psd_gradient(p[0], p[1], *w)
                .unwrap_or([f64::NAN, f64::NAN]);
            jac[(i, 0)] = g[0];
            jac[(i, 1)] = g[1];
        }
        jac
    }
}

fn in_any(omega: f64, windows: &[(f64, f64)]) -> bool {
    windows.iter().any(|(lo, hi)| omega >= *lo && omega <= *hi)
}

/// Fit the semi-axis scales (s_b, s_d) of `geom0` to a frequency-noise
/// spectrum, skipping bins inside `exclude_windows` (angular, inclusive).
///
/// Iteration starts from (1, 1). `converged` is false when the iteration cap
/// is hit or a scale ends on the [`SCALE_BOUNDS`] box.
pub fn fit_thermorefractive(
    spec: &Spectrum,
    geom0: &ModeGeometry,
    material: &Material,
    cavity: &OpticalCavity,
    temperature: f64,
    exclude_windows: &[(f64, f64)],
) -> Result<FitResult> {
    spec.expect_kind(SpectrumKind::FrequencyNoise)?;
    let model = ThermorefractiveModel::new(*geom0, *material, cavity.clone(), temperature)?;
    let (omega, log_data): (Vec<f64>, Vec<f64>) = spec
        .grid()
        .iter()
        .zip(spec.values())
        .filter(|(w, v)| **w > 0.0 && **v > 0.0 && !in_any(**w, exclude_windows))
        .map(|(w, v)| (*w, v.ln()))
        .unzip();
    if omega.len() < MIN_FIT_BINS {
        return Err(Error::InsufficientData {
            usable: omega.len(),
            required: MIN_FIT_BINS,
        });
    }
    let problem = ThermoProblem {
        model: &model,
        omega,
        log_data,
    };
    let settings = LmSettings::with_bounds(vec![SCALE_BOUNDS.0; 2], vec![SCALE_BOUNDS.1; 2]);
    let out = minimize(&problem, &[1.0, 1.0], &settings);
    let m = out.n_residuals as f64;
    Ok(FitResult {
        s_b: out.params[0],
        s_d: out.params[1],
        lorentzians: Vec::new(),
        residual_norm: (out.cost / m).sqrt(),
        iterations: out.iterations,
        converged: out.converged,
        covariance: out.covariance,
        residual_history: out.cost_history.iter().map(|c| (c / m).sqrt()).collect(),
        bins_used: out.n_residuals,
    })
}

/// Peak shape H·(ΓΩ_c)² / ((Ω_c² − Ω²)² + Γ²Ω²) on a fixed background.
struct LorentzProblem {
    omega: Vec<f64>,
    log_data: Vec<f64>,
    background: f64,
}

impl LorentzProblem {
    fn shape(wc: f64, gamma: f64, w: f64) -> (f64, f64) {
        let detune = wc * wc - w * w;
        let den = detune * detune + gamma * gamma * w * w;
        (gamma * gamma * wc * wc / den, den)
    }
}

// params: [Ω_c, ln Γ, ln H]
impl LeastSquares for LorentzProblem {
    fn n_params(&self) -> usize {
        3
    }

    fn residuals(&self, p: &[f64]) -> Vec<f64> {
        let (wc, gamma, h) = (p[0], p[1].exp(), p[2].exp());
        self.omega
            .iter()
            .zip(&self.log_data)
            .map(|(w, y)| (self.background + h * Self::shape(wc, gamma, *w).0).ln() - y)
            .collect()
    }

    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let (wc, gamma, h) = (p[0], p[1].exp(), p[2].exp());
        DMatrix::from_fn(self.omega.len(), 3, |i, j| {
            let w = self.omega[i];
            let (l, den) = Self::shape(wc, gamma, w);
            let s = self.background + h * l;
            let detune = wc * wc - w * w;
            match j {
                // ∂L/∂Ω_c = 2L/Ω_c − L·4Ω_c(Ω_c² − Ω²)/den
                0 => h * (2.0 * l / wc - l * 4.0 * wc * detune / den) / s,
                // ∂L/∂lnΓ = 2L − L·2Γ²Ω²/den
                1 => h * (2.0 * l - l * 2.0 * gamma * gamma * w * w / den) / s,
                _ => h * l / s,
            }
        })
    }
}

fn fit_window(spec: &Spectrum, lo: f64, hi: f64) -> Result<LorentzianFit> {
    let fail = |reason: &str| Error::Window {
        lo,
        hi,
        reason: reason.to_string(),
    };
    let idx: Vec<usize> = (0..spec.len())
        .filter(|i| spec.grid()[*i] >= lo && spec.grid()[*i] <= hi)
        .collect();
    if idx.len() < MIN_WINDOW_BINS {
        return Err(fail(&format!("{} bins, at least {MIN_WINDOW_BINS} required", idx.len())));
    }
    let omega: Vec<f64> = idx.iter().map(|i| spec.grid()[*i]).collect();
    let data: Vec<f64> = idx.iter().map(|i| spec.values()[*i]).collect();
    if data.iter().any(|v| *v <= 0.0) {
        return Err(fail("non-positive PSD in window"));
    }
    let k = data.len();
    let peak = (0..k).max_by(|a, b| data[*a].total_cmp(&data[*b])).unwrap_or(0);
    if peak == 0 || peak + 1 == k {
        return Err(fail("no local maximum inside the window"));
    }
    let edge = (k / 5).max(2);
    let mut edges: Vec<f64> = data[..edge].iter().chain(&data[k - edge..]).copied().collect();
    let background = median(&mut edges);
    let h0 = data[peak] - background;
    if h0 <= 0.0 {
        return Err(fail("peak does not rise above the background"));
    }
    let half = background + 0.5 * h0;
    let mut l = peak;
    while l > 0 && data[l - 1] > half {
        l -= 1;
    }
    let mut r = peak;
    while r + 1 < k && data[r + 1] > half {
        r += 1;
    }
    let spacing = (omega[k - 1] - omega[0]) / (k - 1) as f64;
    let gamma0 = (omega[r] - omega[l]).max(spacing);

    let problem = LorentzProblem {
        log_data: data.iter().map(|v| v.ln()).collect(),
        omega,
        background,
    };
    let lower = vec![lo, (spacing / 100.0).ln(), (h0 / 100.0).ln()];
    let upper = vec![hi, (hi - lo).ln(), (h0 * 100.0).ln()];
    let out = minimize(
        &problem,
        &[problem.omega[peak], gamma0.ln(), h0.ln()],
        &LmSettings::with_bounds(lower, upper),
    );
    Ok(LorentzianFit {
        omega_c: out.params[0],
        gamma: out.params[1].exp(),
        height: out.params[2].exp(),
        background,
        converged: out.converged,
        iterations: out.iterations,
    })
}

/// Fit one thermal Lorentzian per window (angular, inclusive). Windows that
/// fail are reported individually.
pub fn fit_lorentzian_modes(spec: &Spectrum, windows: &[(f64, f64)]) -> Vec<Result<LorentzianFit>> {
    windows.iter().map(|(lo, hi)| fit_window(spec, *lo, *hi)).collect()
}
