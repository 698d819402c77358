//! Flat `key = value` run configuration.
//!
//! Lines starting with `#` are comments. Keys are fixed (see [`KNOWN_KEYS`]);
//! unknown keys are rejected. Frequencies are given in Hz and converted to
//! angular units when the domain types are built.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use thiserror::Error;

use crate::error::Error as ModelError;
use crate::fit::CalibrationMarker;
use crate::geometry::ModeGeometry;
use crate::params::{hz_to_angular, Coupling, Material, MaterialTable, MechanicalOscillator, OpticalCavity};
use crate::spectra::{BudgetSetup, Channel, MicroMechMode, ShotConvention, SpectrumKind};
use crate::synth::SynthesisConfig;

pub const KNOWN_KEYS: &[&str] = &[
    "oscillator.mass_kg",
    "oscillator.freq_hz",
    "oscillator.q",
    "oscillator.label",
    "cavity.wavelength_m",
    "cavity.kappa_hz",
    "cavity.kappa_ex_hz",
    "cavity.radius_m",
    "cavity.minor_radius_m",
    "coupling.g_hz_per_m",
    "coupling.gamma_hz_per_m",
    "material.n",
    "material.dn_dt",
    "material.rho",
    "material.c",
    "material.d",
    "power_w",
    "temperature_k",
    "detection_efficiency",
    "shot_convention",
    "measured_imprecision_m2_per_hz",
    "grid.start_hz",
    "grid.stop_hz",
    "grid.points",
    "channels",
    "geometry.s_b",
    "geometry.s_d",
    "micromech.freq_hz",
    "micromech.q",
    "micromech.mass_kg",
    "synth.n_avg",
    "synth.seed",
    "synth.kind",
    "synth.detector_gain",
    "marker.freq_hz",
    "marker.depth_rad",
    "marker.bin_window",
    "fit.exclude_hz",
    "fit.lorentz_windows_hz",
];

const OSCILLATOR: &[&str] = &["oscillator.mass_kg", "oscillator.freq_hz", "oscillator.q"];
const CAVITY: &[&str] = &[
    "cavity.wavelength_m",
    "cavity.kappa_hz",
    "cavity.radius_m",
    "cavity.minor_radius_m",
];
const MATERIAL: &[&str] = &["material.n", "material.dn_dt", "material.rho", "material.c", "material.d"];
const GRID: &[&str] = &["grid.start_hz", "grid.stop_hz", "grid.points"];

/// Lowest Fourier frequency accepted without `--allow-low-freq`; the probe
/// laser is only shot-noise limited above it.
pub const LOW_FREQ_FLOOR_HZ: f64 = 500e3;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("unknown keys: {}", .0.join(", "))]
    UnknownKeys(Vec<String>),
    #[error("missing required keys: {}", .0.join(", "))]
    Missing(Vec<String>),
    #[error("key `{key}`: cannot parse `{value}`: {reason}")]
    BadValue { key: String, value: String, reason: String },
    #[error("{0}")]
    Invalid(#[from] ModelError),
    #[error("grid starts at {start_hz} Hz, below the {floor_hz} Hz shot-noise floor (pass --allow-low-freq)")]
    BelowFloor { start_hz: f64, floor_hz: f64 },
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    entries: BTreeMap<String, String>,
}

impl FromStr for RunConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut unknown = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: n + 1,
                    text: raw.to_string(),
                });
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(ConfigError::Syntax {
                    line: n + 1,
                    text: raw.to_string(),
                });
            }
            if !KNOWN_KEYS.contains(&k) {
                unknown.push(k.to_string());
                continue;
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(ConfigError::Duplicate {
                    line: n + 1,
                    key: k.to_string(),
                });
            }
        }
        if !unknown.is_empty() {
            return Err(ConfigError::UnknownKeys(unknown));
        }
        Ok(Self { entries })
    }
}

fn bad(key: &str, value: &str, reason: impl ToString) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

fn parse_pairs(key: &str, value: &str) -> Result<Vec<(f64, f64)>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (a, b) = item.split_once(':').ok_or_else(|| bad(key, value, "expected lo:hi"))?;
            let lo: f64 = a.trim().parse().map_err(|e| bad(key, value, e))?;
            let hi: f64 = b.trim().parse().map_err(|e| bad(key, value, e))?;
            if !(lo < hi) {
                return Err(bad(key, value, "interval must satisfy lo < hi"));
            }
            Ok((hz_to_angular(lo), hz_to_angular(hi)))
        })
        .collect()
}

impl RunConfig {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Report every missing key from `keys` at once.
    pub fn require(&self, keys: &[&str]) -> Result<()> {
        let missing: Vec<String> = keys
            .iter()
            .filter(|k| !self.entries.contains_key(**k))
            .map(|k| k.to_string())
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Missing(missing))
        }
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| bad(key, v, e)))
            .transpose()
    }

    fn number(&self, key: &str) -> Result<f64> {
        self.parsed(key)?.ok_or_else(|| ConfigError::Missing(vec![key.to_string()]))
    }

    fn number_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    fn list(&self, key: &str) -> Result<Vec<f64>> {
        match self.get(key) {
            None => Ok(Vec::new()),
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>().map_err(|e| bad(key, v, e)))
                .collect(),
        }
    }

    pub fn oscillator(&self) -> Result<MechanicalOscillator> {
        self.require(OSCILLATOR)?;
        Ok(MechanicalOscillator::from_hz_q(
            self.number("oscillator.mass_kg")?,
            self.number("oscillator.freq_hz")?,
            self.number("oscillator.q")?,
            self.get("oscillator.label").unwrap_or(""),
        )?)
    }

    /// Critically coupled unless `cavity.kappa_ex_hz` is given.
    pub fn cavity(&self) -> Result<OpticalCavity> {
        self.require(CAVITY)?;
        let kappa = hz_to_angular(self.number("cavity.kappa_hz")?);
        let kappa_ex = match self.parsed::<f64>("cavity.kappa_ex_hz")? {
            Some(v) => hz_to_angular(v),
            None => kappa / 2.0,
        };
        Ok(OpticalCavity::new(
            self.number("cavity.wavelength_m")?,
            kappa,
            kappa_ex,
            self.number("cavity.radius_m")?,
            self.number("cavity.minor_radius_m")?,
        )?)
    }

    pub fn coupling(&self) -> Result<Coupling> {
        self.require(&["coupling.g_hz_per_m"])?;
        Ok(Coupling::new(
            hz_to_angular(self.number("coupling.g_hz_per_m")?),
            hz_to_angular(self.number_or("coupling.gamma_hz_per_m", 0.0)?),
        )?)
    }

    pub fn temperature(&self) -> Result<f64> {
        self.require(&["temperature_k"])?;
        self.number("temperature_k")
    }

    /// Explicit `material.*` set when any of those keys is present, else the
    /// built-in silica table at the configured temperature.
    pub fn material(&self) -> Result<Material> {
        if MATERIAL.iter().any(|k| self.entries.contains_key(*k)) {
            self.require(MATERIAL)?;
            return Ok(Material::new(
                self.number("material.n")?,
                self.number("material.dn_dt")?,
                self.number("material.rho")?,
                self.number("material.c")?,
                self.number("material.d")?,
            )?);
        }
        Ok(MaterialTable::new().silica_at(self.temperature()?)?)
    }

    /// Unscaled geometry of the configured cavity.
    pub fn base_geometry(&self) -> Result<ModeGeometry> {
        Ok(ModeGeometry::for_cavity(&self.cavity()?, &self.material()?)?)
    }

    pub fn geometry_scales(&self) -> Result<(f64, f64)> {
        Ok((self.number_or("geometry.s_b", 1.0)?, self.number_or("geometry.s_d", 1.0)?))
    }

    pub fn power(&self) -> Result<f64> {
        self.require(&["power_w"])?;
        self.number("power_w")
    }

    pub fn shot_convention(&self) -> Result<ShotConvention> {
        match self.get("shot_convention") {
            None | Some("measured") => Ok(ShotConvention::Measured),
            Some("ideal") => Ok(ShotConvention::IdealLossless),
            Some(other) => Err(bad("shot_convention", other, "expected `measured` or `ideal`")),
        }
    }

    pub fn measured_imprecision(&self) -> Result<Option<f64>> {
        self.parsed("measured_imprecision_m2_per_hz")
    }

    pub fn micro_modes(&self) -> Result<Vec<MicroMechMode>> {
        let freqs = self.list("micromech.freq_hz")?;
        let qs = self.list("micromech.q")?;
        let masses = self.list("micromech.mass_kg")?;
        if freqs.len() != qs.len() || freqs.len() != masses.len() {
            return Err(bad(
                "micromech.freq_hz",
                self.get("micromech.freq_hz").unwrap_or(""),
                "micromech.freq_hz, micromech.q and micromech.mass_kg must list the same number of modes",
            ));
        }
        if freqs.is_empty() {
            return Ok(Vec::new());
        }
        let t = self.temperature()?;
        freqs
            .iter()
            .zip(&qs)
            .zip(&masses)
            .map(|((f, q), m)| {
                let w = hz_to_angular(*f);
                Ok(MicroMechMode::new(w, w / q, *m, t)?)
            })
            .collect()
    }

    pub fn channels(&self) -> Result<BTreeSet<Channel>> {
        match self.get("channels") {
            None => Ok(Channel::backgrounds()),
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<Channel>().map_err(|e| bad("channels", v, e)))
                .collect(),
        }
    }

    /// Full budget inputs; the geometry carries the configured scale factors.
    pub fn budget_setup(&self) -> Result<BudgetSetup> {
        let mut keys: Vec<&str> = OSCILLATOR.iter().chain(CAVITY).copied().collect();
        keys.extend(["coupling.g_hz_per_m", "power_w", "temperature_k"]);
        self.require(&keys)?;
        let material = self.material()?;
        let (s_b, s_d) = self.geometry_scales()?;
        let geometry = self.base_geometry()?.scaled(s_b, s_d, &material)?;
        Ok(BudgetSetup {
            oscillator: self.oscillator()?,
            cavity: self.cavity()?,
            coupling: self.coupling()?,
            geometry,
            material,
            micro_modes: self.micro_modes()?,
            temperature: self.temperature()?,
            input_power: self.power()?,
            detection_efficiency: self.number_or("detection_efficiency", 1.0)?,
            shot_convention: self.shot_convention()?,
        })
    }

    /// Linear grid of angular frequencies from the `grid.*` keys (Hz).
    pub fn grid(&self, allow_low_freq: bool) -> Result<Vec<f64>> {
        self.require(GRID)?;
        let start = self.number("grid.start_hz")?;
        let stop = self.number("grid.stop_hz")?;
        let points: usize = self.parsed("grid.points")?.unwrap_or(0);
        if points < 2 {
            return Err(bad("grid.points", self.get("grid.points").unwrap_or(""), "need at least 2 points"));
        }
        if !(start > 0.0 && stop > start) {
            return Err(bad("grid.stop_hz", self.get("grid.stop_hz").unwrap_or(""), "need 0 < start < stop"));
        }
        check_floor(start, allow_low_freq)?;
        let step = (stop - start) / (points - 1) as f64;
        Ok((0..points).map(|i| hz_to_angular(start + step * i as f64)).collect())
    }

    pub fn marker(&self) -> Result<Option<CalibrationMarker>> {
        match (self.get("marker.freq_hz"), self.get("marker.depth_rad")) {
            (None, None) => Ok(None),
            _ => {
                self.require(&["marker.freq_hz", "marker.depth_rad"])?;
                let window: usize = self.parsed("marker.bin_window")?.unwrap_or(3);
                Ok(Some(CalibrationMarker::new(
                    hz_to_angular(self.number("marker.freq_hz")?),
                    self.number("marker.depth_rad")?,
                    window,
                )?))
            }
        }
    }

    pub fn exclude_windows(&self) -> Result<Vec<(f64, f64)>> {
        self.get("fit.exclude_hz")
            .map(|v| parse_pairs("fit.exclude_hz", v))
            .unwrap_or(Ok(Vec::new()))
    }

    pub fn lorentz_windows(&self) -> Result<Vec<(f64, f64)>> {
        self.get("fit.lorentz_windows_hz")
            .map(|v| parse_pairs("fit.lorentz_windows_hz", v))
            .unwrap_or(Ok(Vec::new()))
    }

    /// Synthesis settings; `seed_override` wins over `synth.seed`. The
    /// `geometry.s_b`/`s_d` keys are the ground-truth scales.
    pub fn synthesis(&self, seed_override: Option<u64>, allow_low_freq: bool) -> Result<SynthesisConfig> {
        let mut keys: Vec<&str> = OSCILLATOR.iter().chain(CAVITY).chain(GRID).copied().collect();
        keys.extend(["coupling.g_hz_per_m", "power_w", "temperature_k", "synth.n_avg"]);
        self.require(&keys)?;
        let mut setup = self.budget_setup()?;
        setup.geometry = self.base_geometry()?;
        let (s_b, s_d) = self.geometry_scales()?;
        let mut cfg = SynthesisConfig::new(setup, self.grid(allow_low_freq)?, self.channels()?);
        cfg.s_b = s_b;
        cfg.s_d = s_d;
        cfg.marker = self.marker()?;
        cfg.n_avg = self.parsed("synth.n_avg")?.unwrap_or(1);
        cfg.seed = match seed_override {
            Some(s) => s,
            None => self.parsed("synth.seed")?.unwrap_or(0),
        };
        cfg.kind = self.parsed::<SpectrumKind>("synth.kind")?.unwrap_or(SpectrumKind::FrequencyNoise);
        cfg.detector_gain = self.number_or("synth.detector_gain", 1.0)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn check_floor(start_hz: f64, allow_low_freq: bool) -> Result<()> {
    if !allow_low_freq && start_hz < LOW_FREQ_FLOOR_HZ {
        return Err(ConfigError::BelowFloor {
            start_hz,
            floor_hz: LOW_FREQ_FLOOR_HZ,
        });
    }
    Ok(())
}
