//! wasm-bindgen bindings for the browser demo in `www/`.
//!
//! Each exported function is a thin wrapper around a plain Rust function so the
//! numerics can be tested natively. Results come back as flat `Vec<f64>`
//! (a `Float64Array` on the JS side); layouts are documented per function.

use std::collections::BTreeSet;

use optonoise::fit::fit_thermorefractive;
use optonoise::geometry::ModeGeometry;
use optonoise::params::{angular_to_hz, hz_to_angular, silica_at, Coupling, MechanicalOscillator, OpticalCavity};
use optonoise::spectra::{total_budget, zpf_psd, BudgetSetup, Channel, ShotConvention};
use optonoise::sql::merit_report;
use optonoise::synth::{synthesize, SynthesisConfig};
use wasm_bindgen::prelude::*;

const GRID_START_HZ: f64 = 1e6;
const GRID_STOP_HZ: f64 = 80e6;

/// The 8.3 MHz string read out by an 18 µm toroid, with the slider values.
fn setup(g_mhz_per_nm: f64, power_uw: f64, temperature_k: f64) -> Result<BudgetSetup, String> {
    let e = |err: optonoise::Error| err.to_string();
    let material = silica_at(temperature_k).map_err(e)?;
    let cavity = OpticalCavity::critically_coupled(850e-9, hz_to_angular(60e6), 18e-6, 2e-6).map_err(e)?;
    Ok(BudgetSetup {
        oscillator: MechanicalOscillator::from_hz_q(3.7e-15, 8.3e6, 30_000.0, "string").map_err(e)?,
        geometry: ModeGeometry::for_cavity(&cavity, &material).map_err(e)?,
        cavity,
        coupling: Coupling::dispersive_hz_per_m(g_mhz_per_nm * 1e15).map_err(e)?,
        material,
        micro_modes: Vec::new(),
        temperature: temperature_k,
        input_power: power_uw * 1e-6,
        detection_efficiency: 1.0,
        shot_convention: ShotConvention::Measured,
    })
}

fn log_grid(points: usize) -> Result<Vec<f64>, String> {
    if points < 2 {
        return Err("need at least 2 points".into());
    }
    let (a, b) = (GRID_START_HZ.ln(), GRID_STOP_HZ.ln());
    Ok((0..points)
        .map(|i| hz_to_angular((a + (b - a) * i as f64 / (points - 1) as f64).exp()))
        .collect())
}

/// Layout: `[freq_hz; n] [thermal; n] [shot; n] [thermorefractive; n] [total; n] [s_zpf]`,
/// all displacement PSDs in m²/Hz.
pub fn budget(g_mhz_per_nm: f64, power_uw: f64, temperature_k: f64, points: usize) -> Result<Vec<f64>, String> {
    let s = setup(g_mhz_per_nm, power_uw, temperature_k)?;
    let grid = log_grid(points)?;
    let channels: BTreeSet<Channel> = [Channel::ThermalNano, Channel::Shot, Channel::Thermorefractive].into();
    let b = total_budget(&s, &grid, &channels).map_err(|e| e.to_string())?;
    let mut out: Vec<f64> = grid.iter().map(|w| angular_to_hz(*w)).collect();
    for ch in [Channel::ThermalNano, Channel::Shot, Channel::Thermorefractive] {
        out.extend_from_slice(b.components[&ch].values());
    }
    out.extend_from_slice(b.total.values());
    out.push(zpf_psd(&s.oscillator));
    Ok(out)
}

/// Layout: `[p_sql, p_sql_cc, p_th, p_in/p_sql, imprecision_ratio, imprecision_db]`, powers in W.
pub fn merit(g_mhz_per_nm: f64, power_uw: f64) -> Result<Vec<f64>, String> {
    let s = setup(g_mhz_per_nm, power_uw, 295.0)?;
    let r = merit_report(&s.cavity, &s.coupling, &s.oscillator, s.input_power, None, ShotConvention::Measured)
        .map_err(|e| e.to_string())?;
    Ok(vec![r.p_sql, r.p_sql_cc, r.p_th, r.p_ratio, r.imprecision_ratio, r.imprecision_db])
}

/// Synthesizes a thermorefractive spectrum with the given semi-axis scales and fits it back.
///
/// Layout: `[s_b, s_d, iterations, converged, n, freq_hz; n, data; n, fit; n]`,
/// spectra in (rad/s)²/Hz.
pub fn synth_and_fit(s_b: f64, s_d: f64, n_avg: u32, seed: u32, points: usize) -> Result<Vec<f64>, String> {
    let s = setup(17.0, 8.0, 295.0)?;
    let grid = log_grid(points)?;
    let mut cfg = SynthesisConfig::new(s, grid, [Channel::Thermorefractive].into());
    cfg.s_b = s_b;
    cfg.s_d = s_d;
    cfg.n_avg = u64::from(n_avg);
    cfg.seed = u64::from(seed);
    let e = |err: optonoise::Error| err.to_string();
    let data = synthesize(&cfg).map_err(e)?;
    let s = &cfg.setup;
    let fit = fit_thermorefractive(&data, &s.geometry, &s.material, &s.cavity, s.temperature, &[]).map_err(e)?;

    let mut fitted = cfg.clone();
    fitted.s_b = fit.s_b;
    fitted.s_d = fit.s_d;
    let model = fitted.model().map_err(e)?;

    let n = data.len();
    let mut out = vec![fit.s_b, fit.s_d, fit.iterations as f64, f64::from(u8::from(fit.converged)), n as f64];
    out.extend(data.grid().iter().map(|w| angular_to_hz(*w)));
    out.extend_from_slice(data.values());
    out.extend_from_slice(&model);
    Ok(out)
}

#[wasm_bindgen(js_name = budget)]
pub fn budget_js(g_mhz_per_nm: f64, power_uw: f64, temperature_k: f64, points: usize) -> Result<Vec<f64>, JsValue> {
    budget(g_mhz_per_nm, power_uw, temperature_k, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = merit)]
pub fn merit_js(g_mhz_per_nm: f64, power_uw: f64) -> Result<Vec<f64>, JsValue> {
    merit(g_mhz_per_nm, power_uw).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = synthAndFit)]
pub fn synth_and_fit_js(s_b: f64, s_d: f64, n_avg: u32, seed: u32, points: usize) -> Result<Vec<f64>, JsValue> {
    synth_and_fit(s_b, s_d, n_avg, seed, points).map_err(|e| JsValue::from_str(&e))
}
