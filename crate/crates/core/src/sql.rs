//! Standard-quantum-limit figures of merit.

use crate::error::{require_positive, Result};
use crate::params::{Coupling, MechanicalOscillator, OpticalCavity, HBAR};
use crate::spectra::{shot_freq_psd, zpf_psd, ShotConvention};

/// Input power at which a lossless, thermal-photon-free measurement reaches
/// the SQL on resonance:
/// P_SQL = ħω (κ/4)² (1 + 4Ω_m²/κ²) / (g² S_zpf).
pub fn p_sql(cavity: &OpticalCavity, coupling: &Coupling, osc: &MechanicalOscillator) -> f64 {
    let kappa = cavity.kappa();
    let wm = osc.omega_m();
    let g = coupling.g();
    HBAR * cavity.omega() * (kappa / 4.0).powi(2) * (1.0 + 4.0 * wm * wm / (kappa * kappa))
        / (g * g * zpf_psd(osc))
}

/// SQL power of an impedance-matched cavity (κ_0 = κ_ex), √8 × P_SQL.
pub fn p_sql_critical(p_sql: f64) -> Result<f64> {
    require_positive("p_sql", p_sql)?;
    Ok(8f64.sqrt() * p_sql)
}

/// Parametric-instability threshold, (4 + κ²/4Ω_m²) × P_SQL.
pub fn p_threshold(p_sql: f64, cavity: &OpticalCavity, osc: &MechanicalOscillator) -> Result<f64> {
    require_positive("p_sql", p_sql)?;
    Ok(threshold_factor(cavity, osc) * p_sql)
}

pub fn threshold_factor(cavity: &OpticalCavity, osc: &MechanicalOscillator) -> f64 {
    let k = cavity.kappa();
    let wm = osc.omega_m();
    4.0 + k * k / (4.0 * wm * wm)
}

/// Power ratio in decibels, 10·log10(ratio).
pub fn to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeritReport {
    pub s_zpf: f64,
    pub p_sql: f64,
    pub p_sql_cc: f64,
    pub p_th: f64,
    pub p_ratio: f64,
    pub imprecision_ratio: f64,
    pub imprecision_db: f64,
}

/// Aggregate figures of merit. Without a measured imprecision, the ratio is
/// the shot-noise imprecision at Ω = Ω_m under `shot` normalisation.
pub fn merit_report(
    cavity: &OpticalCavity,
    coupling: &Coupling,
    osc: &MechanicalOscillator,
    input_power: f64,
    measured_imprecision: Option<f64>,
    shot: ShotConvention,
) -> Result<MeritReport> {
    require_positive("power", input_power)?;
    let s_zpf = zpf_psd(osc);
    let p = p_sql(cavity, coupling, osc);
    let imprecision = match measured_imprecision {
        Some(v) => {
            require_positive("measured_imprecision", v)?;
            v
        }
        None => {
            shot_freq_psd(cavity, input_power, osc.omega_m())? * shot.factor() / coupling.g().powi(2)
        }
    };
    let imprecision_ratio = imprecision / s_zpf;
    Ok(MeritReport {
        s_zpf,
        p_sql: p,
        p_sql_cc: p_sql_critical(p)?,
        p_th: p_threshold(p, cavity, osc)?,
        p_ratio: input_power / p,
        imprecision_ratio,
        imprecision_db: to_db(imprecision_ratio),
    })
}
