#![allow(dead_code)]

use std::collections::BTreeSet;

use optonoise::geometry::ModeGeometry;
use optonoise::params::{hz_to_angular, silica_at, Coupling, MechanicalOscillator, OpticalCavity};
use optonoise::spectra::{BudgetSetup, Channel, MicroMechMode, ShotConvention};
use optonoise::synth::SynthesisConfig;

/// 8.3 MHz SiN string, 18 µm toroid, κ/2π = 60 MHz, g/2π = 17 MHz/nm, 8 µW.
pub fn string_setup() -> BudgetSetup {
    let material = silica_at(295.0).unwrap();
    let cavity = OpticalCavity::critically_coupled(850e-9, hz_to_angular(60e6), 18e-6, 2e-6).unwrap();
    BudgetSetup {
        oscillator: MechanicalOscillator::from_hz_q(3.7e-15, 8.3e6, 30_000.0, "string").unwrap(),
        geometry: ModeGeometry::for_cavity(&cavity, &material).unwrap(),
        cavity,
        coupling: Coupling::dispersive_hz_per_m(17e15).unwrap(),
        material,
        micro_modes: Vec::new(),
        temperature: 295.0,
        input_power: 8e-6,
        detection_efficiency: 1.0,
        shot_convention: ShotConvention::Measured,
    }
}

pub fn linear_grid_hz(start: f64, stop: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| hz_to_angular(start + (stop - start) * i as f64 / (n - 1) as f64))
        .collect()
}

pub fn channels(list: &[Channel]) -> BTreeSet<Channel> {
    list.iter().copied().collect()
}

/// Thermorefractive-only synthesis on 4000 bins over 1–80 MHz.
pub fn thermo_synth(s_b: f64, s_d: f64, n_avg: u64, seed: u64) -> SynthesisConfig {
    let mut cfg = SynthesisConfig::new(
        string_setup(),
        linear_grid_hz(1e6, 80e6, 4000),
        channels(&[Channel::Thermorefractive]),
    );
    cfg.s_b = s_b;
    cfg.s_d = s_d;
    cfg.n_avg = n_avg;
    cfg.seed = seed;
    cfg
}

pub fn micro_mode(freq_hz: f64, width_hz: f64, mass: f64) -> MicroMechMode {
    MicroMechMode::new(hz_to_angular(freq_hz), hz_to_angular(width_hz), mass, 295.0).unwrap()
}
