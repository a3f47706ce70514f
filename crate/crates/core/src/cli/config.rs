//! Run configuration: defaults, optional TOML file, command-line overrides.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bell::AngleSettings;
use crate::error::{Error, Result};
use crate::interferometer::NoiseModel;

/// Output encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// An angle in a config file: a number (radians) or a string with an
/// optional `rad` / `deg` suffix.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum AngleValue {
    Radians(f64),
    Text(String),
}

impl AngleValue {
    pub fn radians(&self) -> Result<f64> {
        match self {
            AngleValue::Radians(x) => Ok(*x),
            AngleValue::Text(s) => parse_angle(s),
        }
    }
}

/// Parses `0.3`, `0.3rad`, `45deg` or `45°`.
pub fn parse_angle(s: &str) -> Result<f64> {
    let t = s.trim();
    let (number, scale) = if let Some(v) = t.strip_suffix("deg").or_else(|| t.strip_suffix('°')) {
        (v, PI / 180.0)
    } else if let Some(v) = t.strip_suffix("rad") {
        (v, 1.0)
    } else {
        (t, 1.0)
    };
    let x: f64 = number
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse angle `{s}` (radians, or use a `deg` suffix)")))?;
    if !x.is_finite() {
        return Err(Error::Config(format!("angle `{s}` is not finite")));
    }
    Ok(x * scale)
}

/// Keys accepted in a `--config` TOML file. Unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<String>,
    pub dop: Option<f64>,
    pub intensity: Option<f64>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub noise: Option<NoiseModel>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub settings: Option<Vec<AngleValue>>,
    pub optimize: Option<bool>,
    pub b_list: Option<Vec<AngleValue>>,
    pub a_min: Option<AngleValue>,
    pub a_max: Option<AngleValue>,
    pub a_step: Option<AngleValue>,
    pub resamples: Option<usize>,
    pub estimator: Option<String>,
    pub lhv_samples: Option<usize>,
    pub tuples: Option<usize>,
    pub ensemble_out: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Fully resolved configuration, echoed into every output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub preset: Option<String>,
    pub dop: f64,
    pub intensity: f64,
    pub n: usize,
    pub seed: u64,
    pub noise: NoiseModel,
    pub out: Option<PathBuf>,
    pub format: Format,
    /// Explicit CHSH settings; `None` means optimize.
    pub settings: Option<AngleSettings>,
    pub b_list: Vec<f64>,
    pub a_min: f64,
    pub a_max: f64,
    pub a_step: f64,
    pub resamples: usize,
    pub estimator: String,
    pub lhv_samples: usize,
    pub tuples: usize,
    pub ensemble_out: Option<PathBuf>,
}

pub const DEFAULT_N: usize = 100_000;
pub const REFERENCE_N: usize = 1_000_000;
pub const REFERENCE_DOP: f64 = 0.125;

impl RunConfig {
    pub fn defaults(command: &str) -> Self {
        Self {
            command: command.to_string(),
            preset: None,
            dop: REFERENCE_DOP,
            intensity: 1.0,
            n: DEFAULT_N,
            seed: 1,
            noise: NoiseModel::ideal(),
            out: None,
            format: if command == "scan" { Format::Csv } else { Format::Json },
            settings: None,
            b_list: (0..12).map(|k| k as f64 * PI / 12.0).collect(),
            a_min: 0.0,
            a_max: 2.0 * PI,
            a_step: PI / 90.0,
            resamples: 20,
            estimator: "interferometer".into(),
            lhv_samples: 100_000,
            tuples: 20,
            ensemble_out: None,
        }
    }

    pub fn apply_preset(&mut self, preset: &str) -> Result<()> {
        match preset {
            "reference" => {
                self.n = REFERENCE_N;
                self.dop = REFERENCE_DOP;
            }
            "quick" => self.n = DEFAULT_N,
            other => return Err(Error::Config(format!("unknown preset `{other}` (known: reference, quick)"))),
        }
        self.preset = Some(preset.to_string());
        Ok(())
    }

    pub fn apply_file(&mut self, f: &ConfigFile) -> Result<()> {
        macro_rules! take {
            ($($field:ident),*) => {$( if let Some(v) = &f.$field { self.$field = v.clone(); } )*};
        }
        take!(dop, intensity, n, seed, noise, format, resamples, estimator, lhv_samples, tuples);
        if f.out.is_some() {
            self.out = f.out.clone();
        }
        if f.ensemble_out.is_some() {
            self.ensemble_out = f.ensemble_out.clone();
        }
        if let Some(s) = &f.settings {
            self.settings = Some(settings_from(&s.iter().map(AngleValue::radians).collect::<Result<Vec<_>>>()?)?);
        }
        if f.optimize == Some(true) {
            self.settings = None;
        }
        if let Some(b) = &f.b_list {
            self.b_list = b.iter().map(AngleValue::radians).collect::<Result<_>>()?;
        }
        if let Some(v) = &f.a_min {
            self.a_min = v.radians()?;
        }
        if let Some(v) = &f.a_max {
            self.a_max = v.radians()?;
        }
        if let Some(v) = &f.a_step {
            self.a_step = v.radians()?;
        }
        Ok(())
    }

    /// Checks ranges shared by all commands.
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.dop) {
            return Err(Error::Domain(format!("dop must lie in [0, 1], got {}", self.dop)));
        }
        if !(self.intensity > 0.0) || !self.intensity.is_finite() {
            return Err(Error::Domain(format!("intensity must be positive, got {}", self.intensity)));
        }
        if self.n < 2 {
            return Err(Error::Domain(format!("n must be at least 2, got {}", self.n)));
        }
        self.noise.validate()?;
        if !(self.a_step > 0.0) {
            return Err(Error::Config("a_step must be positive".into()));
        }
        if self.a_max < self.a_min {
            return Err(Error::Config("a_max must not be below a_min".into()));
        }
        if self.b_list.is_empty() {
            return Err(Error::Config("b list is empty".into()));
        }
        if self.resamples != 0 && self.resamples < 10 {
            return Err(Error::Config("resamples must be 0 (off) or at least 10".into()));
        }
        if self.tuples == 0 {
            return Err(Error::Config("tuples must be at least 1".into()));
        }
        if self.lhv_samples == 0 {
            return Err(Error::Config("lhv_samples must be at least 1".into()));
        }
        Ok(())
    }

    /// `a_min, a_min + step, ...` strictly below `a_max`; a single point when
    /// `a_min == a_max`.
    pub fn a_grid(&self) -> Vec<f64> {
        if self.a_max == self.a_min {
            return vec![self.a_min];
        }
        let count = ((self.a_max - self.a_min) / self.a_step - 1e-9).ceil().max(1.0) as usize;
        (0..count).map(|i| self.a_min + i as f64 * self.a_step).collect()
    }
}

pub fn settings_from(v: &[f64]) -> Result<AngleSettings> {
    match v {
        [a, ap, b, bp] => Ok(AngleSettings::new(*a, *ap, *b, *bp)),
        _ => Err(Error::Config(format!("settings need exactly 4 angles (a a' b b'), got {}", v.len()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_parsing() {
        assert_eq!(parse_angle("0.5").unwrap(), 0.5);
        assert_eq!(parse_angle("0.5rad").unwrap(), 0.5);
        assert!((parse_angle("45deg").unwrap() - PI / 4.0).abs() < 1e-15);
        assert!((parse_angle("90°").unwrap() - PI / 2.0).abs() < 1e-15);
        assert!(parse_angle("45 degrees").is_err());
        assert!(parse_angle("nan").is_err());
    }

    #[test]
    fn file_rejects_unknown_keys() {
        let err = toml::from_str::<ConfigFile>("dop = 0.1\ncolour = 3\n");
        assert!(err.is_err());
        let err = toml::from_str::<ConfigFile>("[noise]\nextinction = 0.1\n");
        assert!(err.is_err());
    }

    #[test]
    fn file_values_apply() {
        let f: ConfigFile = toml::from_str(
            "dop = 0.3\nn = 500\nsettings = [0, \"45deg\", 0.1, 0.2]\nb_list = [\"15deg\"]\n[noise]\nphase_jitter = 0.2\n",
        )
        .unwrap();
        let mut c = RunConfig::defaults("chsh");
        c.apply_file(&f).unwrap();
        assert_eq!(c.dop, 0.3);
        assert_eq!(c.n, 500);
        assert_eq!(c.noise.phase_jitter, 0.2);
        assert!((c.settings.unwrap().a_prime - PI / 4.0).abs() < 1e-15);
        assert!((c.b_list[0] - PI / 12.0).abs() < 1e-15);
    }

    #[test]
    fn grid_shapes() {
        let mut c = RunConfig::defaults("scan");
        assert_eq!(c.a_grid().len(), 180);
        c.a_max = c.a_min;
        assert_eq!(c.a_grid(), vec![0.0]);
    }

    #[test]
    fn validation_catches_ranges() {
        let mut c = RunConfig::defaults("source");
        c.dop = 2.0;
        assert!(matches!(c.validate(), Err(Error::Domain(_))));
        let mut c = RunConfig::defaults("source");
        c.resamples = 5;
        assert!(c.validate().is_err());
        assert!(RunConfig::defaults("source").apply_preset("bogus").is_err());
    }
}
