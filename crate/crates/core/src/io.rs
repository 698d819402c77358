//! CSV spectrum files.
//!
//! ```text
//! # kind=frequency_noise
//! # units=(rad/s)^2/Hz
//! freq_hz,psd
//! 1.0000000000000000e6,2.5000000000000000e4
//! ```
//!
//! Frequencies are Ω/2π in Hz. Numbers carry 17 significant digits so every
//! f64 survives a write/read cycle unchanged.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::params::{angular_to_hz, hz_to_angular};
use crate::spectra::{NoiseBudget, Spectrum, SpectrumKind};

fn io_err(e: std::io::Error) -> Error {
    Error::InvalidSpectrum(format!("i/o: {e}"))
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_spectrum<W: Write>(out: &mut W, spec: &Spectrum) -> Result<()> {
    let kind = spec.kind();
    writeln!(out, "# kind={}", kind.name()).map_err(io_err)?;
    writeln!(out, "# units={}", kind.units()).map_err(io_err)?;
    writeln!(out, "freq_hz,psd").map_err(io_err)?;
    for (w, v) in spec.grid().iter().zip(spec.values()) {
        writeln!(out, "{},{}", fmt(angular_to_hz(*w)), fmt(*v)).map_err(io_err)?;
    }
    Ok(())
}

/// Per-channel columns followed by `total`, all displacement PSDs.
pub fn write_budget<W: Write>(out: &mut W, budget: &NoiseBudget) -> Result<()> {
    let kind = budget.total.kind();
    writeln!(out, "# kind={}", kind.name()).map_err(io_err)?;
    writeln!(out, "# units={}", kind.units()).map_err(io_err)?;
    let names: Vec<&str> = budget.components.keys().map(|c| c.name()).collect();
    writeln!(out, "freq_hz,{},total", names.join(",")).map_err(io_err)?;
    for (i, w) in budget.grid().iter().enumerate() {
        let mut row = fmt(angular_to_hz(*w));
        for spec in budget.components.values() {
            row.push(',');
            row.push_str(&fmt(spec.values()[i]));
        }
        row.push(',');
        row.push_str(&fmt(budget.total.values()[i]));
        writeln!(out, "{row}").map_err(io_err)?;
    }
    Ok(())
}

/// Parse a two-column spectrum file. The `# kind=` comment is required.
pub fn read_spectrum<R: BufRead>(input: R) -> Result<Spectrum> {
    let mut kind = None;
    let mut header = false;
    let mut grid = Vec::new();
    let mut values = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(io_err)?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(k) = comment.trim().strip_prefix("kind=") {
                kind = Some(k.parse::<SpectrumKind>()?);
            }
            continue;
        }
        if !header {
            if line.replace(' ', "") != "freq_hz,psd" {
                return Err(Error::InvalidSpectrum(format!(
                    "line {}: expected header `freq_hz,psd`, got `{line}`",
                    n + 1
                )));
            }
            header = true;
            continue;
        }
        let bad = || Error::InvalidSpectrum(format!("line {}: cannot parse `{line}`", n + 1));
        let (f, v) = line.split_once(',').ok_or_else(bad)?;
        let f: f64 = f.trim().parse().map_err(|_| bad())?;
        let v: f64 = v.trim().parse().map_err(|_| bad())?;
        grid.push(hz_to_angular(f));
        values.push(v);
    }
    let kind = kind.ok_or_else(|| Error::InvalidSpectrum("missing `# kind=` comment".into()))?;
    Spectrum::new(kind, grid, values)
}
