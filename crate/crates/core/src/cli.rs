//! Command-line front end.
//!
//! Exit codes: 0 success, 1 runtime or fit failure, 2 usage or config error.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::config::{check_floor, ConfigError, RunConfig};
use crate::error::Error as ModelError;
use crate::fit::{calibrate_spectrum, fit_lorentzian_modes, fit_thermorefractive, FitResult};
use crate::geometry::sampled_length;
use crate::io::{read_spectrum, write_budget, write_spectrum};
use crate::params::angular_to_hz;
use crate::spectra::{total_budget, Channel, SpectrumKind};
use crate::sql::{merit_report, to_db, MeritReport};
use crate::synth::synthesize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "optonoise", version, about = "Noise budget and SQL figures of merit for near-field optomechanical transducers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the per-channel displacement noise budget and print figures of merit.
    Budget {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        allow_low_freq: bool,
    },
    /// Print SQL power, threshold power and imprecision ratio.
    Sql {
        #[arg(long)]
        config: PathBuf,
    },
    /// Calibrate a measured spectrum and fit the thermorefractive semi-axes.
    Fit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        spectrum: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        allow_low_freq: bool,
    },
    /// Write a synthetic averaged-periodogram spectrum.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        allow_low_freq: bool,
    },
    /// Print the WGM geometry and the sampled string length.
    Geometry {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    ReadConfig { path: PathBuf, source: std::io::Error },
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Model(#[from] ModelError),
    #[error("cannot read {path}: {source}")]
    ReadInput { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("fit did not converge after {iterations} iterations (report written)")]
    NotConverged { iterations: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ReadConfig { .. } | CliError::Config(_) => EXIT_USAGE,
            _ => EXIT_RUNTIME,
        }
    }
}

fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::ReadConfig {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(text.parse()?)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn amplitude_am(psd: f64) -> f64 {
    psd.sqrt() * 1e18
}

fn format_merit(r: &MeritReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "S_zpf = {:.4e} m^2/Hz ({:.1} am/sqrt(Hz))", r.s_zpf, amplitude_am(r.s_zpf));
    let _ = writeln!(s, "P_SQL = {:.4e} W", r.p_sql);
    let _ = writeln!(s, "P_SQL_cc = {:.4e} W", r.p_sql_cc);
    let _ = writeln!(s, "P_th = {:.4e} W", r.p_th);
    let _ = writeln!(s, "P_in/P_SQL = {:.3}", r.p_ratio);
    let _ = writeln!(
        s,
        "imprecision_ratio = {:.4} ({:.2} dB, {:.1} am/sqrt(Hz))",
        r.imprecision_ratio,
        r.imprecision_db,
        amplitude_am(r.imprecision_ratio * r.s_zpf)
    );
    s
}

fn merit_from_config(cfg: &RunConfig) -> Result<MeritReport, CliError> {
    Ok(merit_report(
        &cfg.cavity()?,
        &cfg.coupling()?,
        &cfg.oscillator()?,
        cfg.power()?,
        cfg.measured_imprecision()?,
        cfg.shot_convention()?,
    )?)
}

fn cmd_budget(config: &Path, out: &Path, allow_low_freq: bool, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let setup = cfg.budget_setup()?;
    let grid = cfg.grid(allow_low_freq)?;
    let channels = cfg.channels()?;
    let merit = merit_from_config(&cfg)?;
    let budget = total_budget(&setup, &grid, &channels)?;

    let background: BTreeSet<Channel> = channels
        .iter()
        .copied()
        .filter(|c| !matches!(c, Channel::ThermalNano | Channel::Qba))
        .collect();
    let wm = setup.oscillator.omega_m();
    let imprecision = setup.total_psd(&background, SpectrumKind::Displacement, wm)? / merit.s_zpf;

    let mut csv = Vec::new();
    write_budget(&mut csv, &budget)?;
    write_file(out, &csv)?;

    let mut text = format!("oscillator: {}\n", setup.oscillator.label());
    text.push_str(&format_merit(&merit));
    let _ = writeln!(
        text,
        "background_imprecision_ratio = {:.4} ({:.2} dB) at {:.4e} Hz",
        imprecision,
        to_db(imprecision),
        angular_to_hz(wm)
    );
    let _ = writeln!(text, "wrote {} bins to {}", grid.len(), out.display());
    let _ = stdout.write_all(text.as_bytes());
    Ok(())
}

fn cmd_sql(config: &Path, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let merit = merit_from_config(&cfg)?;
    let _ = stdout.write_all(format_merit(&merit).as_bytes());
    Ok(())
}

fn cmd_geometry(config: &Path, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let cavity = cfg.cavity()?;
    let material = cfg.material()?;
    let (s_b, s_d) = cfg.geometry_scales()?;
    let geom = cfg.base_geometry()?.scaled(s_b, s_d, &material)?;
    let mut s = String::new();
    let _ = writeln!(s, "ell = {}", geom.ell());
    let _ = writeln!(s, "b_m = {:.6e}", geom.b());
    let _ = writeln!(s, "d_m = {:.6e}", geom.d());
    let _ = writeln!(s, "volume_m3 = {:.6e}", geom.volume());
    let _ = writeln!(s, "tau_s = {:.6e}", geom.tau());
    let _ = writeln!(
        s,
        "sampled_length_m = {:.6e}",
        sampled_length(cavity.wavelength(), cavity.major_radius())?
    );
    let _ = stdout.write_all(s.as_bytes());
    Ok(())
}

fn cmd_synth(
    config: &Path,
    out: &Path,
    seed: Option<u64>,
    allow_low_freq: bool,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let synth = cfg.synthesis(seed, allow_low_freq)?;
    let spectrum = synthesize(&synth)?;
    let mut csv = Vec::new();
    write_spectrum(&mut csv, &spectrum)?;
    write_file(out, &csv)?;
    let _ = writeln!(
        stdout,
        "wrote {} bins ({}, n_avg = {}, seed = {}) to {}",
        spectrum.len(),
        spectrum.kind().name(),
        synth.n_avg,
        synth.seed,
        out.display()
    );
    Ok(())
}

fn fit_report(fit: &FitResult, b: f64, d: f64, scale: Option<f64>, failures: &[String]) -> String {
    let mut s = String::from("# optonoise fit report\n");
    let _ = writeln!(s, "s_b = {:.10}", fit.s_b);
    let _ = writeln!(s, "s_d = {:.10}", fit.s_d);
    let _ = writeln!(s, "b_m = {:.10e}", b);
    let _ = writeln!(s, "d_m = {:.10e}", d);
    let _ = writeln!(s, "residual_norm = {:.10e}", fit.residual_norm);
    let _ = writeln!(s, "iterations = {}", fit.iterations);
    let _ = writeln!(s, "converged = {}", fit.converged);
    let _ = writeln!(s, "bins_used = {}", fit.bins_used);
    let c = &fit.covariance;
    let _ = writeln!(s, "cov_s_b_s_b = {:.10e}", c[(0, 0)]);
    let _ = writeln!(s, "cov_s_b_s_d = {:.10e}", c[(0, 1)]);
    let _ = writeln!(s, "cov_s_d_s_d = {:.10e}", c[(1, 1)]);
    if let Some(scale) = scale {
        let _ = writeln!(s, "calibration_scale = {:.10e}", scale);
    }
    for (i, l) in fit.lorentzians.iter().enumerate() {
        let _ = writeln!(s, "lorentzian.{i}.freq_hz = {:.10e}", angular_to_hz(l.omega_c));
        let _ = writeln!(s, "lorentzian.{i}.width_hz = {:.10e}", angular_to_hz(l.gamma));
        let _ = writeln!(s, "lorentzian.{i}.height = {:.10e}", l.height);
        let _ = writeln!(s, "lorentzian.{i}.background = {:.10e}", l.background);
        let _ = writeln!(s, "lorentzian.{i}.converged = {}", l.converged);
    }
    for f in failures {
        let _ = writeln!(s, "# failed window: {f}");
    }
    s
}

fn cmd_fit(
    config: &Path,
    spectrum_path: &Path,
    out: &Path,
    allow_low_freq: bool,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let cavity = cfg.cavity()?;
    let material = cfg.material()?;
    let temperature = cfg.temperature()?;
    let geom0 = cfg.base_geometry()?;
    let marker = cfg.marker()?;
    let mut exclude = cfg.exclude_windows()?;
    let lorentz_windows = cfg.lorentz_windows()?;

    let file = fs::File::open(spectrum_path).map_err(|source| CliError::ReadInput {
        path: spectrum_path.to_path_buf(),
        source,
    })?;
    let raw = read_spectrum(std::io::BufReader::new(file))?;
    check_floor(angular_to_hz(raw.grid()[0]), allow_low_freq)?;

    let (spectrum, scale) = match marker {
        Some(m) => {
            let cal = calibrate_spectrum(&raw, &m)?;
            exclude.push(cal.marker_window);
            (cal.spectrum, Some(cal.scale))
        }
        None => (raw, None),
    };
    exclude.extend(lorentz_windows.iter().copied());
    let mut fit = fit_thermorefractive(&spectrum, &geom0, &material, &cavity, temperature, &exclude)?;
    let mut failures = Vec::new();
    for r in fit_lorentzian_modes(&spectrum, &lorentz_windows) {
        match r {
            Ok(l) => fit.lorentzians.push(l),
            Err(e) => failures.push(e.to_string()),
        }
    }

    let fitted = geom0.scaled(fit.s_b, fit.s_d, &material)?;
    write_file(out, fit_report(&fit, fitted.b(), fitted.d(), scale, &failures).as_bytes())?;
    let _ = writeln!(
        stdout,
        "s_b = {:.5}, s_d = {:.5}, residual_norm = {:.4e}, iterations = {}, converged = {}",
        fit.s_b, fit.s_d, fit.residual_norm, fit.iterations, fit.converged
    );
    if !fit.converged {
        return Err(CliError::NotConverged {
            iterations: fit.iterations,
        });
    }
    Ok(())
}

pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Budget {
            config,
            out,
            allow_low_freq,
        } => cmd_budget(config, out, *allow_low_freq, stdout),
        Command::Sql { config } => cmd_sql(config, stdout),
        Command::Fit {
            config,
            spectrum,
            out,
            allow_low_freq,
        } => cmd_fit(config, spectrum, out, *allow_low_freq, stdout),
        Command::Synth {
            config,
            out,
            seed,
            allow_low_freq,
        } => cmd_synth(config, out, *seed, *allow_low_freq, stdout),
        Command::Geometry { config } => cmd_geometry(config, stdout),
    }
}

/// Parse `args`, run, report errors to `stderr`, and return the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
