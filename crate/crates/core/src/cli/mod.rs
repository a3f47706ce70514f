//! Command-line front end: `source`, `scan`, `chsh`, `validate`.

pub mod commands;
pub mod config;
pub mod validate;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{parse_angle, ConfigFile, Format, RunConfig};

use crate::error::Result;
use crate::interferometer::NoiseModel;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize (or load) an ensemble and report its Stokes/Schmidt summary.
    Source(SourceArgs),
    /// Correlation curves C(a, b) over an a-grid for a list of b.
    Scan(ScanArgs),
    /// Full CHSH protocol.
    Chsh(ChshArgs),
    /// Self-checks: estimator agreement, bounds, no-signaling.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML configuration file; flags take precedence over its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Named preset (`reference`: n = 1e6, dop = 0.125).
    #[arg(long, global = true)]
    pub preset: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Ensemble size.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Degree of polarization in [0, 1].
    #[arg(long, global = true)]
    pub dop: Option<f64>,
    #[arg(long, global = true)]
    pub intensity: Option<f64>,
    /// Polarizer intensity extinction ratio.
    #[arg(long, global = true)]
    pub noise_extinction: Option<f64>,
    /// Detector noise standard deviation, relative to the source intensity.
    #[arg(long, global = true)]
    pub noise_detector: Option<f64>,
    /// Reference-arm phase jitter standard deviation (radians).
    #[arg(long, global = true)]
    pub noise_phase: Option<f64>,
    /// Output path (a directory for `scan --format csv`); stdout if absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    /// Analyze an existing ensemble (CSV, or binary with a `.bin` extension).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Also write the ensemble (CSV, or binary with a `.bin` extension).
    #[arg(long)]
    pub ensemble_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    /// Fixed b angles (radians, or with a `deg` suffix).
    #[arg(long, num_args = 1.., allow_negative_numbers = true)]
    pub b_list: Option<Vec<String>>,
    #[arg(long, allow_hyphen_values = true)]
    pub a_min: Option<String>,
    /// Exclusive upper end of the a-grid.
    #[arg(long, allow_hyphen_values = true)]
    pub a_max: Option<String>,
    #[arg(long)]
    pub a_step: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ChshArgs {
    /// Explicit settings a a' b b' (radians, or with a `deg` suffix).
    #[arg(long, num_args = 4, allow_negative_numbers = true, conflicts_with = "optimize")]
    pub settings: Option<Vec<String>>,
    /// Search for the maximizing settings (the default).
    #[arg(long)]
    pub optimize: bool,
    /// Bootstrap resamples for `chsh_err`; 0 disables.
    #[arg(long)]
    pub resamples: Option<usize>,
    /// Joint-probability estimator: interferometer, projection or oracle.
    #[arg(long, alias = "path")]
    pub estimator: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    /// Random (dop, a, b) tuples for the estimator-agreement checks.
    #[arg(long)]
    pub tuples: Option<usize>,
    /// Hidden-variable draws per correlation.
    #[arg(long)]
    pub lhv_samples: Option<usize>,
}

#[derive(Debug, Parser)]
#[command(name = "fieldbell", version, about = "Bell tests on classical stochastic optical fields")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

fn angles(v: &[String]) -> Result<Vec<f64>> {
    v.iter().map(|s| parse_angle(s)).collect()
}

/// Resolves defaults, preset, config file and flags into one configuration.
fn resolve(common: &CommonArgs, command: &Command) -> Result<RunConfig> {
    let name = match command {
        Command::Source(_) => "source",
        Command::Scan(_) => "scan",
        Command::Chsh(_) => "chsh",
        Command::Validate(_) => "validate",
    };
    let mut cfg = RunConfig::defaults(name);
    let file = match &common.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    if let Some(p) = common.preset.as_ref().or(file.preset.as_ref()) {
        cfg.apply_preset(p)?;
    }
    cfg.apply_file(&file)?;

    macro_rules! flag {
        ($($src:ident => $dst:ident),*) => {$( if let Some(v) = &common.$src { cfg.$dst = v.clone(); } )*};
    }
    flag!(seed => seed, n => n, dop => dop, intensity => intensity, format => format);
    if common.out.is_some() {
        cfg.out = common.out.clone();
    }
    let noise: &mut NoiseModel = &mut cfg.noise;
    if let Some(v) = common.noise_extinction {
        noise.extinction_ratio = v;
    }
    if let Some(v) = common.noise_detector {
        noise.detector_noise = v;
    }
    if let Some(v) = common.noise_phase {
        noise.phase_jitter = v;
    }

    match command {
        Command::Source(a) => {
            if a.ensemble_out.is_some() {
                cfg.ensemble_out = a.ensemble_out.clone();
            }
        }
        Command::Scan(a) => {
            if let Some(b) = &a.b_list {
                cfg.b_list = angles(b)?;
            }
            if let Some(v) = &a.a_min {
                cfg.a_min = parse_angle(v)?;
            }
            if let Some(v) = &a.a_max {
                cfg.a_max = parse_angle(v)?;
            }
            if let Some(v) = &a.a_step {
                cfg.a_step = parse_angle(v)?;
            }
        }
        Command::Chsh(a) => {
            if let Some(s) = &a.settings {
                cfg.settings = Some(config::settings_from(&angles(s)?)?);
            }
            if a.optimize {
                cfg.settings = None;
            }
            if let Some(r) = a.resamples {
                cfg.resamples = r;
            }
            if let Some(e) = &a.estimator {
                cfg.estimator = e.clone();
            }
        }
        Command::Validate(a) => {
            if let Some(t) = a.tuples {
                cfg.tuples = t;
            }
            if let Some(s) = a.lhv_samples {
                cfg.lhv_samples = s;
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Results go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let parsed = match Cli::try_parse_from(args) {
        Ok(p) => p,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    let cfg = match resolve(&parsed.common, &parsed.command) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "fieldbell: {e}");
            return EXIT_USAGE;
        }
    };
    let result = match &parsed.command {
        Command::Source(a) => commands::source(&cfg, a.input.as_deref(), out),
        Command::Scan(_) => commands::scan(&cfg, out),
        Command::Chsh(_) => commands::chsh(&cfg, out),
        Command::Validate(_) => commands::validate(&cfg, out),
    };
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => {
            let _ = writeln!(err, "fieldbell: validation failed");
            EXIT_VALIDATION
        }
        Err(e) => {
            let _ = writeln!(err, "fieldbell: {e}");
            EXIT_USAGE
        }
    }
}
