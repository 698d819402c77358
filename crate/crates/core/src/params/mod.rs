//! Physical constants, device parameters and the silica material table.
//!
//! Every frequency stored here is an angular frequency in rad/s. Hz values
//! are accepted only by the `*_hz` convenience constructors.

pub mod silica;

use std::f64::consts::PI;

use crate::error::{require_positive, Error, Result};

/// CODATA 2018 exact/recommended values, SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub k_b: f64,
    pub c: f64,
}

pub const CODATA: PhysicalConstants = PhysicalConstants {
    hbar: 1.054_571_817e-34,
    k_b: 1.380_649e-23,
    c: 299_792_458.0,
};

pub const HBAR: f64 = CODATA.hbar;
pub const K_B: f64 = CODATA.k_b;
pub const C_LIGHT: f64 = CODATA.c;

#[inline]
pub fn hz_to_angular(f_hz: f64) -> f64 {
    2.0 * PI * f_hz
}

#[inline]
pub fn angular_to_hz(omega: f64) -> f64 {
    omega / (2.0 * PI)
}

/// The measured nanomechanical mode.
#[derive(Debug, Clone, PartialEq)]
pub struct MechanicalOscillator {
    mass: f64,
    omega_m: f64,
    gamma_m: f64,
    label: String,
}

impl MechanicalOscillator {
    /// `omega_m` and `gamma_m` are angular (rad/s).
    pub fn new(mass: f64, omega_m: f64, gamma_m: f64, label: impl Into<String>) -> Result<Self> {
        require_positive("oscillator.mass", mass)?;
        require_positive("oscillator.omega_m", omega_m)?;
        require_positive("oscillator.gamma_m", gamma_m)?;
        Ok(Self {
            mass,
            omega_m,
            gamma_m,
            label: label.into(),
        })
    }

    /// Resonance given in Hz together with the mechanical quality factor.
    pub fn from_hz_q(mass: f64, freq_hz: f64, q: f64, label: impl Into<String>) -> Result<Self> {
        require_positive("oscillator.freq_hz", freq_hz)?;
        require_positive("oscillator.q", q)?;
        let omega_m = hz_to_angular(freq_hz);
        Self::new(mass, omega_m, omega_m / q, label)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn omega_m(&self) -> f64 {
        self.omega_m
    }

    pub fn gamma_m(&self) -> f64 {
        self.gamma_m
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn quality_factor(&self) -> f64 {
        self.omega_m / self.gamma_m
    }
}

/// Toroid microresonator and its optical mode.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticalCavity {
    wavelength: f64,
    kappa: f64,
    kappa_ex: f64,
    major_radius: f64,
    minor_radius: f64,
}

impl OpticalCavity {
    pub fn new(
        wavelength: f64,
        kappa: f64,
        kappa_ex: f64,
        major_radius: f64,
        minor_radius: f64,
    ) -> Result<Self> {
        require_positive("cavity.wavelength", wavelength)?;
        require_positive("cavity.kappa", kappa)?;
        require_positive("cavity.kappa_ex", kappa_ex)?;
        require_positive("cavity.radius", major_radius)?;
        require_positive("cavity.minor_radius", minor_radius)?;
        if kappa_ex > kappa {
            return Err(Error::InvalidParameter {
                name: "cavity.kappa_ex",
                reason: format!("external rate {kappa_ex} exceeds total linewidth {kappa}"),
            });
        }
        if minor_radius >= major_radius {
            return Err(Error::InvalidParameter {
                name: "cavity.minor_radius",
                reason: format!("minor radius {minor_radius} must be below major radius {major_radius}"),
            });
        }
        Ok(Self {
            wavelength,
            kappa,
            kappa_ex,
            major_radius,
            minor_radius,
        })
    }

    /// Impedance-matched cavity: half of the linewidth is outcoupling.
    pub fn critically_coupled(
        wavelength: f64,
        kappa: f64,
        major_radius: f64,
        minor_radius: f64,
    ) -> Result<Self> {
        Self::new(wavelength, kappa, kappa / 2.0, major_radius, minor_radius)
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn kappa_ex(&self) -> f64 {
        self.kappa_ex
    }

    pub fn major_radius(&self) -> f64 {
        self.major_radius
    }

    pub fn minor_radius(&self) -> f64 {
        self.minor_radius
    }

    /// Optical angular frequency 2πc/λ.
    pub fn omega(&self) -> f64 {
        2.0 * PI * C_LIGHT / self.wavelength
    }
}

/// Optomechanical coupling to the nanomechanical oscillator.
///
/// `gamma_reactive` (dκ/dx) is carried for completeness but no model in this
/// crate depends on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    g: f64,
    gamma_reactive: f64,
}

impl Coupling {
    pub fn new(g: f64, gamma_reactive: f64) -> Result<Self> {
        require_positive("coupling.g", g)?;
        if !(gamma_reactive.is_finite() && gamma_reactive >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "coupling.gamma_reactive",
                reason: format!("must be finite and >= 0, got {gamma_reactive}"),
            });
        }
        Ok(Self { g, gamma_reactive })
    }

    /// Dispersive coupling only, given as g/2π in Hz per metre.
    pub fn dispersive_hz_per_m(g_hz_per_m: f64) -> Result<Self> {
        Self::new(hz_to_angular(g_hz_per_m), 0.0)
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn gamma_reactive(&self) -> f64 {
        self.gamma_reactive
    }
}

/// Thermal and optical constants of the resonator material.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    n: f64,
    dn_dt: f64,
    rho: f64,
    heat_capacity: f64,
    diffusivity: f64,
}

impl Material {
    pub fn new(n: f64, dn_dt: f64, rho: f64, heat_capacity: f64, diffusivity: f64) -> Result<Self> {
        require_positive("material.n", n)?;
        require_positive("material.dn_dt", dn_dt)?;
        require_positive("material.rho", rho)?;
        require_positive("material.c", heat_capacity)?;
        require_positive("material.d", diffusivity)?;
        Ok(Self {
            n,
            dn_dt,
            rho,
            heat_capacity,
            diffusivity,
        })
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn dn_dt(&self) -> f64 {
        self.dn_dt
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn heat_capacity(&self) -> f64 {
        self.heat_capacity
    }

    pub fn diffusivity(&self) -> f64 {
        self.diffusivity
    }
}

/// Built-in ambient silica plus caller-registered sets for other temperatures.
#[derive(Debug, Clone, Default)]
pub struct MaterialTable {
    overrides: Vec<(f64, f64, Material)>,
}

impl MaterialTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register `material` for bath temperatures in `[t_lo, t_hi]` kelvin.
    /// Overrides are only consulted outside the built-in ambient range.
    pub fn register(&mut self, t_lo: f64, t_hi: f64, material: Material) -> Result<()> {
        require_positive("material.t_lo", t_lo)?;
        if !(t_hi >= t_lo && t_hi.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "material.t_hi",
                reason: format!("range [{t_lo}, {t_hi}] is empty"),
            });
        }
        self.overrides.push((t_lo, t_hi, material));
        Ok(())
    }

    pub fn silica_at(&self, temperature: f64) -> Result<Material> {
        require_positive("temperature", temperature)?;
        let (lo, hi) = silica::AMBIENT_RANGE_K;
        if (lo..=hi).contains(&temperature) {
            return Ok(silica::AMBIENT);
        }
        self.overrides
            .iter()
            .find(|(a, b, _)| (*a..=*b).contains(&temperature))
            .map(|(_, _, m)| *m)
            .ok_or(Error::UnknownMaterialRegime { temperature })
    }
}

/// Ambient fused silica; errors outside the built-in range.
pub fn silica_at(temperature: f64) -> Result<Material> {
    MaterialTable::new().silica_at(temperature)
}
