//! Whispering-gallery mode geometry of a toroid: angular mode number,
//! gaussian semi-axes, effective mode volume and thermal cut-off time.

use std::f64::consts::PI;

use crate::error::{require_positive, Error, Result};
use crate::params::{Material, OpticalCavity};

/// Derived geometry of the fundamental WGM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeGeometry {
    ell: u32,
    major_radius: f64,
    b: f64,
    d: f64,
    volume: f64,
    tau: f64,
}

/// (4/π)^(1/3), the prefactor of the inverse thermal cut-off time.
fn cutoff_prefactor() -> f64 {
    (4.0 / PI).cbrt()
}

impl ModeGeometry {
    /// Closed-form geometry: ℓ from the round-trip optical path, semi-axes
    /// b = 0.77 R/ℓ^(2/3) and d = R^(3/4) r^(1/4)/ℓ^(1/2).
    pub fn for_cavity(cavity: &OpticalCavity, material: &Material) -> Result<Self> {
        let r_major = cavity.major_radius();
        let ell = (2.0 * PI * r_major * material.n() / cavity.wavelength()).round();
        if ell < 1.0 {
            return Err(Error::ZeroModeNumber);
        }
        let ell_f = ell;
        let b = 0.77 * r_major / ell_f.powf(2.0 / 3.0);
        let d = r_major.powf(0.75) * cavity.minor_radius().powf(0.25) / ell_f.sqrt();
        Self::from_semi_axes(ell as u32, r_major, b, d, material)
    }

    /// Assemble a geometry from explicit semi-axes; V and τ follow from them.
    pub fn from_semi_axes(ell: u32, major_radius: f64, b: f64, d: f64, material: &Material) -> Result<Self> {
        if ell == 0 {
            return Err(Error::ZeroModeNumber);
        }
        require_positive("geometry.radius", major_radius)?;
        require_positive("geometry.b", b)?;
        require_positive("geometry.d", d)?;
        let volume = 2.0 * PI * PI * major_radius * b * d;
        let tau = 1.0 / (cutoff_prefactor() * material.diffusivity() * (b.powi(-2) + d.powi(-2)));
        Ok(Self {
            ell,
            major_radius,
            b,
            d,
            volume,
            tau,
        })
    }

    /// Rescale the semi-axes by `s_b`, `s_d`; volume and τ are recomputed.
    pub fn scaled(&self, s_b: f64, s_d: f64, material: &Material) -> Result<Self> {
        require_positive("geometry.s_b", s_b)?;
        require_positive("geometry.s_d", s_d)?;
        Self::from_semi_axes(self.ell, self.major_radius, s_b * self.b, s_d * self.d, material)
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn major_radius(&self) -> f64 {
        self.major_radius
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// Effective mode volume 2π²·R·b·d.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Thermal cut-off time, seconds.
    pub fn tau(&self) -> f64 {
        self.tau
    }
}

pub fn mode_geometry(cavity: &OpticalCavity, material: &Material) -> Result<ModeGeometry> {
    ModeGeometry::for_cavity(cavity, material)
}

pub fn scaled_geometry(base: &ModeGeometry, s_b: f64, s_d: f64, material: &Material) -> Result<ModeGeometry> {
    base.scaled(s_b, s_d, material)
}

/// Length of the nanomechanical string overlapped by the evanescent field,
/// √(λR/2).
pub fn sampled_length(wavelength: f64, major_radius: f64) -> Result<f64> {
    require_positive("wavelength", wavelength)?;
    require_positive("radius", major_radius)?;
    Ok((wavelength * major_radius / 2.0).sqrt())
}
