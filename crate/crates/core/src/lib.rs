//! Noise budget engine for cavity-enhanced near-field readout of
//! nanomechanical motion.
//!
//! The crate models every contribution to the displacement imprecision of a
//! toroid-microresonator transducer (shot noise, thermorefractive noise,
//! intrinsic resonator modes), compares it to the standard quantum limit, and
//! fits measured frequency-noise spectra.

pub mod cli;
pub mod config;
pub mod error;
pub mod fit;
pub mod geometry;
pub mod io;
pub mod params;
pub mod spectra;
pub mod sql;
pub mod synth;

pub use error::{Error, Result};
