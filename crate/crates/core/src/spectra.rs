//! Single-sided noise spectral densities and the displacement-equivalent
//! noise budget.
//!
//! Frequency-noise spectra are in (rad/s)²/Hz, displacement spectra in m²/Hz.
//! Fourier frequencies Ω are angular.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{require_positive, Error, Result};
use crate::geometry::ModeGeometry;
use crate::params::{Coupling, Material, MechanicalOscillator, OpticalCavity, HBAR, K_B};
use crate::sql;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpectrumKind {
    FrequencyNoise,
    Displacement,
}

impl SpectrumKind {
    pub fn name(self) -> &'static str {
        match self {
            SpectrumKind::FrequencyNoise => "frequency_noise",
            SpectrumKind::Displacement => "displacement",
        }
    }

    pub fn units(self) -> &'static str {
        match self {
            SpectrumKind::FrequencyNoise => "(rad/s)^2/Hz",
            SpectrumKind::Displacement => "m^2/Hz",
        }
    }
}

impl FromStr for SpectrumKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "frequency_noise" => Ok(SpectrumKind::FrequencyNoise),
            "displacement" => Ok(SpectrumKind::Displacement),
            other => Err(Error::InvalidSpectrum(format!("unknown spectrum kind `{other}`"))),
        }
    }
}

/// A PSD sampled on a strictly increasing grid of angular Fourier frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    kind: SpectrumKind,
    grid: Vec<f64>,
    values: Vec<f64>,
}

pub(crate) fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InvalidSpectrum(format!(
            "grid needs at least 2 bins, got {}",
            grid.len()
        )));
    }
    if grid.iter().any(|w| !w.is_finite()) {
        return Err(Error::InvalidSpectrum("grid contains a non-finite frequency".into()));
    }
    if let Some(i) = grid.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::InvalidSpectrum(format!(
            "grid not strictly increasing at bin {}",
            i + 1
        )));
    }
    Ok(())
}

impl Spectrum {
    pub fn new(kind: SpectrumKind, grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        validate_grid(&grid)?;
        if values.len() != grid.len() {
            return Err(Error::InvalidSpectrum(format!(
                "{} values for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidSpectrum(format!(
                "value at bin {i} is {} (must be finite and >= 0)",
                values[i]
            )));
        }
        Ok(Self { kind, grid, values })
    }

    pub fn kind(&self) -> SpectrumKind {
        self.kind
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Multiply every bin by `factor` (> 0), keeping the kind.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        require_positive("scale factor", factor)?;
        Ok(Self {
            kind: self.kind,
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        })
    }

    /// Frequency noise → displacement through S_xx = S_ωω / g².
    pub fn to_displacement(&self, coupling: &Coupling) -> Result<Self> {
        self.expect_kind(SpectrumKind::FrequencyNoise)?;
        let g2 = coupling.g() * coupling.g();
        Ok(Self {
            kind: SpectrumKind::Displacement,
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v / g2).collect(),
        })
    }

    /// Displacement → frequency noise through S_ωω = g² S_xx.
    pub fn to_frequency_noise(&self, coupling: &Coupling) -> Result<Self> {
        self.expect_kind(SpectrumKind::Displacement)?;
        let g2 = coupling.g() * coupling.g();
        Ok(Self {
            kind: SpectrumKind::FrequencyNoise,
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * g2).collect(),
        })
    }

    pub(crate) fn expect_kind(&self, kind: SpectrumKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::InvalidSpectrum(format!(
                "expected a {} spectrum, got {}",
                kind.name(),
                self.kind.name()
            )))
        }
    }

    /// Width of every bin in Hz, using midpoints between neighbours and
    /// one-sided differences at the ends.
    pub fn bin_widths_hz(&self) -> Vec<f64> {
        bin_widths_hz(&self.grid)
    }
}

pub(crate) fn bin_widths_hz(grid: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let two_pi = 2.0 * std::f64::consts::PI;
    (0..n)
        .map(|i| {
            let lo = if i == 0 { grid[0] - 0.5 * (grid[1] - grid[0]) } else { 0.5 * (grid[i - 1] + grid[i]) };
            let hi = if i + 1 == n { grid[n - 1] + 0.5 * (grid[n - 1] - grid[n - 2]) } else { 0.5 * (grid[i] + grid[i + 1]) };
            (hi - lo) / two_pi
        })
        .collect()
}

/// A mechanical mode of the microresonator itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicroMechMode {
    omega_i: f64,
    gamma_i: f64,
    mass: f64,
    temperature: f64,
}

impl MicroMechMode {
    pub fn new(omega_i: f64, gamma_i: f64, mass: f64, temperature: f64) -> Result<Self> {
        require_positive("micromech.omega", omega_i)?;
        require_positive("micromech.gamma", gamma_i)?;
        require_positive("micromech.mass", mass)?;
        require_positive("micromech.temperature", temperature)?;
        Ok(Self {
            omega_i,
            gamma_i,
            mass,
            temperature,
        })
    }

    pub fn omega_i(&self) -> f64 {
        self.omega_i
    }

    pub fn gamma_i(&self) -> f64 {
        self.gamma_i
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// Brownian displacement PSD of the mode (radial motion of the rim).
    pub fn displacement_psd(&self, omega: f64) -> f64 {
        brownian(self.mass, self.omega_i, self.gamma_i, self.temperature, omega)
    }
}

fn brownian(mass: f64, omega_m: f64, gamma_m: f64, temperature: f64, omega: f64) -> f64 {
    let detune = omega_m * omega_m - omega * omega;
    4.0 * K_B * temperature * gamma_m / (mass * (detune * detune + gamma_m * gamma_m * omega * omega))
}

/// Zero-point PSD on resonance, 2ħ/(mΩ_mΓ_m). Also the SQL imprecision.
pub fn zpf_psd(osc: &MechanicalOscillator) -> f64 {
    2.0 * HBAR / (osc.mass() * osc.omega_m() * osc.gamma_m())
}

/// Brownian displacement PSD of a viscously damped oscillator in a bath at T.
pub fn thermal_psd(osc: &MechanicalOscillator, temperature: f64, omega: f64) -> Result<f64> {
    require_positive("temperature", temperature)?;
    Ok(brownian(osc.mass(), osc.omega_m(), osc.gamma_m(), temperature, omega))
}

/// Shot-noise-equivalent cavity frequency noise of a line-centre lock,
/// (ħω/P)(κ²/8)(1 + 4Ω²/κ²).
pub fn shot_freq_psd(cavity: &OpticalCavity, input_power: f64, omega: f64) -> Result<f64> {
    require_positive("power", input_power)?;
    let kappa = cavity.kappa();
    Ok(HBAR * cavity.omega() / input_power * kappa * kappa / 8.0
        * (1.0 + 4.0 * omega * omega / (kappa * kappa)))
}

/// Thermorefractive frequency noise of a fundamental toroid WGM.
pub fn thermorefractive_psd(
    material: &Material,
    geom: &ModeGeometry,
    cavity: &OpticalCavity,
    temperature: f64,
    omega: f64,
) -> Result<f64> {
    require_positive("temperature", temperature)?;
    if !(omega > 0.0) {
        return Err(Error::Domain {
            omega,
            reason: "thermorefractive noise diverges for Ω <= 0",
        });
    }
    let coeff = cavity.omega() / material.n() * material.dn_dt();
    let tau = geom.tau();
    let level = coeff * coeff * (16.0 * std::f64::consts::PI).cbrt() * K_B * temperature * temperature
        / (geom.volume() * material.rho() * material.heat_capacity());
    let roll = 1.0 + (omega * tau).powf(0.75);
    Ok(level * (tau / omega).sqrt() / (roll * roll))
}

/// Frequency noise from the resonator's own mechanical modes, (ω/R)² Σ S_xx^i.
pub fn micromech_freq_psd(modes: &[MicroMechMode], cavity: &OpticalCavity, omega: f64) -> f64 {
    let conv = cavity.omega() / cavity.major_radius();
    conv * conv * modes.iter().map(|m| m.displacement_psd(omega)).sum::<f64>()
}

/// Quantum-backaction displacement PSD: a white radiation-pressure force
/// filtered by the mechanical susceptibility, normalised so that on
/// resonance it equals (S_zpf/2)·P_in/P_SQL.
pub fn qba_displacement_psd(osc: &MechanicalOscillator, power_ratio: f64, omega: f64) -> Result<f64> {
    require_positive("power ratio", power_ratio)?;
    let (m, wm, gm) = (osc.mass(), osc.omega_m(), osc.gamma_m());
    let force_psd = 0.5 * zpf_psd(osc) * power_ratio * (m * gm * wm).powi(2);
    let detune = wm * wm - omega * omega;
    let chi2 = 1.0 / (m * m * (detune * detune + gm * gm * omega * omega));
    Ok(chi2 * force_psd)
}

/// Noise sources composing the measured displacement spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Channel {
    ThermalNano,
    Shot,
    Thermorefractive,
    MicroMech,
    Qba,
}

impl Channel {
    pub const ALL: [Channel; 5] = [
        Channel::ThermalNano,
        Channel::Shot,
        Channel::Thermorefractive,
        Channel::MicroMech,
        Channel::Qba,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Channel::ThermalNano => "thermal_nano",
            Channel::Shot => "shot",
            Channel::Thermorefractive => "thermorefractive",
            Channel::MicroMech => "micro_mech",
            Channel::Qba => "qba",
        }
    }

    /// Channels that originate as cavity frequency noise.
    pub fn is_frequency_noise(self) -> bool {
        matches!(self, Channel::Shot | Channel::Thermorefractive | Channel::MicroMech)
    }

    /// The background channels; QBA is opt-in.
    pub fn backgrounds() -> BTreeSet<Channel> {
        [
            Channel::ThermalNano,
            Channel::Shot,
            Channel::Thermorefractive,
            Channel::MicroMech,
        ]
        .into_iter()
        .collect()
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Channel::ALL
            .into_iter()
            .find(|c| c.name() == s.trim())
            .ok_or_else(|| Error::InvalidParameter {
                name: "channels",
                reason: format!("unknown channel `{}`", s.trim()),
            })
    }
}

/// How the shot channel is normalised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShotConvention {
    /// Critically coupled line-centre measurement as observed.
    #[default]
    Measured,
    /// Lossless cavity without thermal photons: a quarter of the measured level.
    IdealLossless,
}

impl ShotConvention {
    pub fn factor(self) -> f64 {
        match self {
            ShotConvention::Measured => 1.0,
            ShotConvention::IdealLossless => 0.25,
        }
    }
}

/// Everything a budget evaluation depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetSetup {
    pub oscillator: MechanicalOscillator,
    pub cavity: OpticalCavity,
    pub coupling: Coupling,
    pub geometry: ModeGeometry,
    pub material: Material,
    pub micro_modes: Vec<MicroMechMode>,
    pub temperature: f64,
    pub input_power: f64,
    /// Homodyne detection efficiency in (0, 1]; the shot channel is divided by it.
    pub detection_efficiency: f64,
    pub shot_convention: ShotConvention,
}

impl BudgetSetup {
    pub fn validate(&self) -> Result<()> {
        require_positive("temperature", self.temperature)?;
        require_positive("power", self.input_power)?;
        require_positive("detection_efficiency", self.detection_efficiency)?;
        if self.detection_efficiency > 1.0 {
            return Err(Error::InvalidParameter {
                name: "detection_efficiency",
                reason: format!("must be <= 1, got {}", self.detection_efficiency),
            });
        }
        Ok(())
    }

    /// P_in / P_SQL for the lossless SQL power.
    pub fn power_ratio(&self) -> f64 {
        self.input_power / sql::p_sql(&self.cavity, &self.coupling, &self.oscillator)
    }

    /// One channel at one Fourier frequency, in the requested units.
    pub fn channel_psd(&self, channel: Channel, kind: SpectrumKind, omega: f64) -> Result<f64> {
        let g2 = self.coupling.g() * self.coupling.g();
        let native = match channel {
            Channel::ThermalNano => thermal_psd(&self.oscillator, self.temperature, omega)?,
            Channel::Shot => {
                shot_freq_psd(&self.cavity, self.input_power, omega)? * self.shot_convention.factor()
                    / self.detection_efficiency
            }
            Channel::Thermorefractive => {
                thermorefractive_psd(&self.material, &self.geometry, &self.cavity, self.temperature, omega)?
            }
            Channel::MicroMech => micromech_freq_psd(&self.micro_modes, &self.cavity, omega),
            Channel::Qba => qba_displacement_psd(&self.oscillator, self.power_ratio(), omega)?,
        };
        Ok(match (channel.is_frequency_noise(), kind) {
            (true, SpectrumKind::FrequencyNoise) | (false, SpectrumKind::Displacement) => native,
            (true, SpectrumKind::Displacement) => native / g2,
            (false, SpectrumKind::FrequencyNoise) => native * g2,
        })
    }

    /// Sum of the enabled channels at one frequency, in a fixed channel order.
    pub fn total_psd(&self, channels: &BTreeSet<Channel>, kind: SpectrumKind, omega: f64) -> Result<f64> {
        let mut total = 0.0;
        for ch in channels {
            total += self.channel_psd(*ch, kind, omega)?;
        }
        Ok(total)
    }
}

/// Per-channel displacement spectra and their bin-wise sum.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBudget {
    pub components: BTreeMap<Channel, Spectrum>,
    pub total: Spectrum,
    pub setup: BudgetSetup,
}

impl NoiseBudget {
    pub fn grid(&self) -> &[f64] {
        self.total.grid()
    }
}

/// Evaluate every enabled channel on `grid` (rad/s) and sum them.
///
/// Bins are evaluated in parallel; each bin is a pure function of its
/// frequency, so the result does not depend on the thread count.
pub fn total_budget(setup: &BudgetSetup, grid: &[f64], channels: &BTreeSet<Channel>) -> Result<NoiseBudget> {
    setup.validate()?;
    validate_grid(grid)?;
    let rows: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&omega| {
            channels
                .iter()
                .map(|ch| setup.channel_psd(*ch, SpectrumKind::Displacement, omega))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let mut components = BTreeMap::new();
    for (k, ch) in channels.iter().enumerate() {
        let values = rows.iter().map(|r| r[k]).collect();
        components.insert(*ch, Spectrum::new(SpectrumKind::Displacement, grid.to_vec(), values)?);
    }
    let total = rows
        .iter()
        .map(|r| r.iter().fold(0.0, |acc, v| acc + v))
        .collect();
    Ok(NoiseBudget {
        components,
        total: Spectrum::new(SpectrumKind::Displacement, grid.to_vec(), total)?,
        setup: setup.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{hz_to_angular, silica_at};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn fig3_oscillator() -> MechanicalOscillator {
        MechanicalOscillator::from_hz_q(3.7e-15, 8.3e6, 30_000.0, "string").unwrap()
    }

    fn cavity() -> OpticalCavity {
        OpticalCavity::critically_coupled(850e-9, hz_to_angular(60e6), 18e-6, 2e-6).unwrap()
    }

    fn setup() -> BudgetSetup {
        let material = silica_at(295.0).unwrap();
        let cavity = cavity();
        BudgetSetup {
            oscillator: fig3_oscillator(),
            geometry: ModeGeometry::for_cavity(&cavity, &material).unwrap(),
            cavity,
            coupling: Coupling::dispersive_hz_per_m(17e6 / 1e-9).unwrap(),
            material,
            micro_modes: vec![MicroMechMode::new(hz_to_angular(12e6), hz_to_angular(5e3), 1e-11, 295.0).unwrap()],
            temperature: 295.0,
            input_power: 8e-6,
            detection_efficiency: 1.0,
            shot_convention: ShotConvention::Measured,
        }
    }

    #[test]
    fn zpf_values() {
        // mpmath: 6.28795993226319e-31 m²/Hz = (792.97 am/√Hz)²
        assert_relative_eq!(zpf_psd(&fig3_oscillator()), 6.287_959_932_263_194e-31, max_relative = 1e-12);
        let beam = MechanicalOscillator::from_hz_q(5e-16, 50e6, 50_000.0, "beam").unwrap();
        assert_relative_eq!(zpf_psd(&beam), 2.137_009_294_685_816e-31, max_relative = 1e-12);
        let heavy = MechanicalOscillator::from_hz_q(7.4e-15, 8.3e6, 30_000.0, "").unwrap();
        assert_relative_eq!(zpf_psd(&heavy), 0.5 * zpf_psd(&fig3_oscillator()), max_relative = 1e-15);
    }

    #[test]
    fn thermal_on_resonance_identity() {
        let osc = fig3_oscillator();
        let ratio = thermal_psd(&osc, 295.0, osc.omega_m()).unwrap() / zpf_psd(&osc);
        // mpmath: 2 k_B 295/(ħ 2π 8.3 MHz) = 1481157.2638910598
        assert_relative_eq!(ratio, 1_481_157.263_891_06, max_relative = 1e-12);
        assert_relative_eq!(
            thermal_psd(&osc, 590.0, 1e7).unwrap(),
            2.0 * thermal_psd(&osc, 295.0, 1e7).unwrap(),
            max_relative = 1e-15
        );
        assert!(thermal_psd(&osc, 0.0, 1e7).is_err());
    }

    #[test]
    fn shot_shape() {
        let cav = cavity();
        let p = 8e-6;
        let at0 = shot_freq_psd(&cav, p, 0.0).unwrap();
        let k = cav.kappa();
        assert_relative_eq!(at0, HBAR * cav.omega() * k * k / (8.0 * p), max_relative = 1e-15);
        assert_relative_eq!(shot_freq_psd(&cav, p, k / 2.0).unwrap(), 2.0 * at0, max_relative = 1e-15);
        // mpmath: 558.6914613757995 (rad/s)²/Hz
        assert_relative_eq!(
            shot_freq_psd(&cav, p, hz_to_angular(8.3e6)).unwrap(),
            558.691_461_375_799_5,
            max_relative = 1e-12
        );
        assert!(shot_freq_psd(&cav, 0.0, 1.0).is_err());
    }

    #[test]
    fn thermorefractive_values() {
        let s = setup();
        let w = hz_to_angular(8.5e6);
        let v = thermorefractive_psd(&s.material, &s.geometry, &s.cavity, 295.0, w).unwrap();
        // mpmath: 15431.25071837367 (rad/s)²/Hz
        assert_relative_eq!(v, 15_431.250_718_373_67, max_relative = 1e-10);
        let cold = thermorefractive_psd(&s.material, &s.geometry, &s.cavity, 30.0, w).unwrap();
        assert_relative_eq!(cold / v, (30.0f64 / 295.0).powi(2), max_relative = 1e-12);
        assert!(thermorefractive_psd(&s.material, &s.geometry, &s.cavity, 295.0, 0.0).is_err());
    }

    #[test]
    fn thermorefractive_high_frequency_tail() {
        let s = setup();
        let tau = s.geometry.tau();
        let f = |w: f64| thermorefractive_psd(&s.material, &s.geometry, &s.cavity, 295.0, w).unwrap();
        // local log-log slope across two decades deep in the Ωτ >> 1 regime
        let mut last = 0.0;
        for decade in [1e4, 1e5, 1e6] {
            let w = decade / tau;
            let slope = (f(1.01 * w).ln() - f(w).ln()) / 1.01f64.ln();
            assert!(slope < -1.9 && slope > -2.0, "slope {slope} at Ωτ = {decade}");
            assert!(slope < last);
            last = slope;
        }
        let w = 1e7 / tau;
        let level = s.material.dn_dt() * s.cavity.omega() / s.material.n();
        let asym = level * level * (16.0 * std::f64::consts::PI).cbrt() * K_B * 295.0 * 295.0
            / (s.geometry.volume() * s.material.rho() * s.material.heat_capacity())
            / tau;
        assert_relative_eq!(f(w) * w * w, asym, max_relative = 2e-5);
    }

    #[test]
    fn micromech_modes() {
        let cav = cavity();
        assert_eq!(micromech_freq_psd(&[], &cav, 1e7), 0.0);
        let m = MicroMechMode::new(hz_to_angular(12e6), hz_to_angular(5e3), 1e-11, 295.0).unwrap();
        let peak = micromech_freq_psd(&[m], &cav, m.omega_i());
        let conv = cav.omega() / cav.major_radius();
        let expected = conv * conv * 4.0 * K_B * 295.0 / (m.mass() * m.gamma_i() * m.omega_i().powi(2));
        assert_relative_eq!(peak, expected, max_relative = 1e-12);
        for w in [1e6, m.omega_i(), 9e7] {
            assert_relative_eq!(
                micromech_freq_psd(&[m, m], &cav, w),
                2.0 * micromech_freq_psd(&[m], &cav, w),
                max_relative = 1e-15
            );
        }
    }

    #[test]
    fn qba_calibration() {
        let osc = fig3_oscillator();
        let z = zpf_psd(&osc);
        assert_relative_eq!(qba_displacement_psd(&osc, 1.0, osc.omega_m()).unwrap(), z / 2.0, max_relative = 1e-14);
        assert_relative_eq!(qba_displacement_psd(&osc, 122.0, osc.omega_m()).unwrap(), 61.0 * z, max_relative = 1e-14);
        // ideal shot at P_ratio scales as 1/P_ratio, QBA as P_ratio
        for ratio in [0.1, 1.0, 27.0, 122.0] {
            let shot = z / 2.0 / ratio;
            let qba = qba_displacement_psd(&osc, ratio, osc.omega_m()).unwrap();
            assert_relative_eq!(shot * qba, (z / 2.0).powi(2), max_relative = 1e-14);
        }
        assert!(qba_displacement_psd(&osc, 0.0, 1.0).is_err());
    }

    #[test]
    fn shot_only_budget() {
        let s = setup();
        let grid: Vec<f64> = (1..=50).map(|i| hz_to_angular(1e6 * i as f64)).collect();
        let chans: BTreeSet<_> = [Channel::Shot].into_iter().collect();
        let b = total_budget(&s, &grid, &chans).unwrap();
        let g2 = s.coupling.g().powi(2);
        for (w, v) in grid.iter().zip(b.total.values()) {
            assert_eq!(*v, shot_freq_psd(&s.cavity, s.input_power, *w).unwrap() / g2);
        }
        assert_eq!(b.components.len(), 1);
    }

    #[test]
    fn fig3_shot_imprecision() {
        let s = setup();
        let chans: BTreeSet<_> = [Channel::Shot].into_iter().collect();
        let wm = s.oscillator.omega_m();
        let b = total_budget(&s, &[wm, 1.001 * wm], &chans).unwrap();
        let shot = b.total.values()[0];
        // mpmath: 4.896823543033170e-32 m²/Hz = (221.29 am/√Hz)², ratio 0.07787619
        assert_relative_eq!(shot, 4.896_823_543_033_17e-32, max_relative = 1e-10);
        assert_relative_eq!(shot / zpf_psd(&s.oscillator), 0.077_876_188_712_778_27, max_relative = 1e-10);
    }

    #[test]
    fn doubling_g_quarters_backgrounds() {
        let s = setup();
        let mut s2 = s.clone();
        s2.coupling = Coupling::new(2.0 * s.coupling.g(), 0.0).unwrap();
        let grid: Vec<f64> = (1..=40).map(|i| hz_to_angular(2e6 * i as f64)).collect();
        let b1 = total_budget(&s, &grid, &Channel::backgrounds()).unwrap();
        let b2 = total_budget(&s2, &grid, &Channel::backgrounds()).unwrap();
        for ch in [Channel::Shot, Channel::Thermorefractive, Channel::MicroMech] {
            for (a, c) in b1.components[&ch].values().iter().zip(b2.components[&ch].values()) {
                assert_relative_eq!(*c, a / 4.0, max_relative = 1e-14);
            }
        }
        assert_eq!(b1.components[&Channel::ThermalNano], b2.components[&Channel::ThermalNano]);
    }

    #[test]
    fn domain_error_propagates() {
        let s = setup();
        let chans: BTreeSet<_> = [Channel::Thermorefractive].into_iter().collect();
        assert!(matches!(total_budget(&s, &[0.0, 1e6], &chans), Err(Error::Domain { .. })));
        assert!(total_budget(&s, &[2.0, 1.0], &chans).is_err());
    }

    #[test]
    fn spectrum_validation() {
        assert!(Spectrum::new(SpectrumKind::Displacement, vec![1.0], vec![1.0]).is_err());
        assert!(Spectrum::new(SpectrumKind::Displacement, vec![1.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(Spectrum::new(SpectrumKind::Displacement, vec![1.0, 2.0], vec![1.0, -1.0]).is_err());
        assert!(Spectrum::new(SpectrumKind::Displacement, vec![1.0, 2.0], vec![1.0]).is_err());
        let s = Spectrum::new(SpectrumKind::Displacement, vec![1.0, 2.0], vec![1.0, 2.0]).unwrap();
        let c = Coupling::new(1.0, 0.0).unwrap();
        assert!(s.to_displacement(&c).is_err());
    }

    proptest! {
        #[test]
        fn budget_is_exact_sum_and_non_negative(
            p in 1e-7f64..1e-4, g_hz in 1e15f64..1e17, t in 250.0f64..350.0,
            f0 in 5e5f64..5e6, span in 1e6f64..8e7,
        ) {
            let mut s = setup();
            s.input_power = p;
            s.temperature = t;
            s.coupling = Coupling::dispersive_hz_per_m(g_hz).unwrap();
            let grid: Vec<f64> = (0..64).map(|i| hz_to_angular(f0 + span * i as f64 / 63.0)).collect();
            let chans: BTreeSet<_> = Channel::ALL.into_iter().collect();
            let b = total_budget(&s, &grid, &chans).unwrap();
            for i in 0..grid.len() {
                let mut sum = 0.0;
                for ch in &chans {
                    let v = b.components[ch].values()[i];
                    prop_assert!(v >= 0.0);
                    sum += v;
                }
                prop_assert_eq!(sum, b.total.values()[i]);
            }
        }

        #[test]
        fn unit_round_trip(vals in proptest::collection::vec(1e-40f64..1e6, 2..32), g in 1e10f64..1e20) {
            let grid: Vec<f64> = (0..vals.len()).map(|i| 1.0 + i as f64).collect();
            let s = Spectrum::new(SpectrumKind::FrequencyNoise, grid, vals).unwrap();
            let c = Coupling::new(g, 0.0).unwrap();
            let back = s.to_displacement(&c).unwrap().to_frequency_noise(&c).unwrap();
            prop_assert_eq!(back.kind(), SpectrumKind::FrequencyNoise);
            for (a, b) in s.values().iter().zip(back.values()) {
                prop_assert!((a - b).abs() <= 2.0 * f64::EPSILON * a.abs());
            }
        }
    }
}
