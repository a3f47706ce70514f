//! Command implementations. Each returns `Ok(true)` on success and
//! `Ok(false)` when a validation check failed.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use super::config::{Format, RunConfig};
use super::validate::run_validation;
use crate::ensemble::{synthesize_partially_polarized, FieldEnsemble};
use crate::error::{Error, Result};
use crate::interferometer::{
    characterize, run_bell_protocol, scan_correlation, sig12, CorrelationCurve, ProtocolConfig, SettingsChoice,
    CURVE_HEADER,
};
use crate::rng;
use crate::tomography::TomographyReport;

const SCAN_STREAM: u64 = 21;

fn is_binary(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "bin")
}

/// Writes `bytes` to `--out` if given, otherwise to `out`.
fn emit(cfg: &RunConfig, bytes: &[u8], out: &mut dyn Write) -> Result<()> {
    match &cfg.out {
        Some(p) => std::fs::write(p, bytes)?,
        None => out.write_all(bytes)?,
    }
    Ok(())
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

fn config_value(cfg: &RunConfig) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(cfg)?)
}

fn load_ensemble(path: &Path, seed: u64) -> Result<FieldEnsemble> {
    let f = BufReader::new(File::open(path)?);
    if is_binary(path) {
        FieldEnsemble::read_binary(f)
    } else {
        FieldEnsemble::read_csv(f, seed)
    }
}

pub fn source(cfg: &RunConfig, input: Option<&Path>, out: &mut dyn Write) -> Result<bool> {
    let ensemble = match input {
        Some(p) => load_ensemble(p, cfg.seed)?,
        None => synthesize_partially_polarized(cfg.dop, cfg.intensity, cfg.n, cfg.seed)?,
    };
    if let Some(p) = &cfg.ensemble_out {
        let w = BufWriter::new(File::create(p)?);
        if is_binary(p) {
            ensemble.write_binary(w)?;
        } else {
            ensemble.write_csv(w)?;
        }
    }
    match cfg.format {
        Format::Csv => {
            let mut buf = Vec::new();
            ensemble.write_csv(&mut buf)?;
            emit(cfg, &buf, out)?;
        }
        Format::Json => {
            let report = TomographyReport::from_ensemble(&ensemble)?;
            let mut v = serde_json::to_value(report)?;
            v["n"] = json!(ensemble.len());
            v["seed"] = json!(ensemble.seed());
            v["config"] = config_value(cfg)?;
            emit(cfg, &json_bytes(&v)?, out)?;
        }
    }
    Ok(true)
}

pub fn scan(cfg: &RunConfig, out: &mut dyn Write) -> Result<bool> {
    let ensemble = synthesize_partially_polarized(cfg.dop, cfg.intensity, cfg.n, cfg.seed)?;
    let (stokes, frame) = characterize(&ensemble)?;
    if frame.weights.is_separable() {
        return Err(Error::Degenerate(
            "the field is fully polarized (kappa2 = 0); function-space stripping is undefined".into(),
        ));
    }
    let a_grid = cfg.a_grid();
    let curves = cfg
        .b_list
        .iter()
        .enumerate()
        .map(|(j, &b)| {
            let seed = rng::derive_seed(cfg.seed, &[SCAN_STREAM, j as u64]);
            scan_correlation(&ensemble, &frame, b, &a_grid, &cfg.noise, seed)
        })
        .collect::<Result<Vec<CorrelationCurve>>>()?;
    let summary = json!({
        "dop": stokes.dop()?.min(1.0),
        "kappa1": frame.weights.kappa1,
        "kappa2": frame.weights.kappa2,
        "n": ensemble.len(),
        "seed": cfg.seed,
        "config": config_value(cfg)?,
    });

    match (cfg.format, &cfg.out) {
        (Format::Csv, Some(dir)) => {
            std::fs::create_dir_all(dir)?;
            let mut files = Vec::new();
            for (j, curve) in curves.iter().enumerate() {
                let name = format!("curve_b{j:02}.csv");
                curve.write_csv(BufWriter::new(File::create(dir.join(&name))?))?;
                files.push(json!({ "file": name, "b_rad": sig12(curve.b_rad) }));
            }
            let mut meta = summary;
            meta["curves"] = json!(files);
            std::fs::write(dir.join("scan_meta.json"), json_bytes(&meta)?)?;
        }
        (Format::Csv, None) => {
            writeln!(out, "{CURVE_HEADER}")?;
            for c in &curves {
                c.write_csv_rows(&mut *out)?;
            }
        }
        (Format::Json, _) => {
            let mut v = summary;
            v["curves"] = serde_json::to_value(&curves)?;
            emit(cfg, &json_bytes(&v)?, out)?;
        }
    }
    Ok(true)
}

pub fn protocol_config(cfg: &RunConfig) -> ProtocolConfig {
    ProtocolConfig {
        dop: cfg.dop,
        intensity: cfg.intensity,
        n: cfg.n,
        seed: cfg.seed,
        settings: match cfg.settings {
            Some(s) => SettingsChoice::Explicit(s),
            None => SettingsChoice::Optimize,
        },
        noise: cfg.noise,
        resamples: cfg.resamples,
        estimator: cfg.estimator.clone(),
    }
}

pub fn chsh(cfg: &RunConfig, out: &mut dyn Write) -> Result<bool> {
    let mut report = run_bell_protocol(&protocol_config(cfg))?;
    report.config = Some(config_value(cfg)?);
    match cfg.format {
        Format::Json => emit(cfg, &json_bytes(&report)?, out)?,
        Format::Csv => {
            let mut buf = Vec::new();
            writeln!(buf, "a_rad,b_rad,sign,p11,p12,p21,p22,c,c_oracle")?;
            for t in &report.probabilities {
                let row = [t.a, t.b, t.sign, t.p11, t.p12, t.p21, t.p22, t.c, t.c_oracle].map(sig12).join(",");
                writeln!(buf, "{row}")?;
            }
            writeln!(buf, "# chsh={} chsh_err={}", sig12(report.chsh), report.chsh_err.map_or("".into(), sig12))?;
            emit(cfg, &buf, out)?;
        }
    }
    Ok(true)
}

pub fn validate(cfg: &RunConfig, out: &mut dyn Write) -> Result<bool> {
    let mut report = run_validation(cfg)?;
    report.config = Some(config_value(cfg)?);
    match cfg.format {
        Format::Json => emit(cfg, &json_bytes(&report)?, out)?,
        Format::Csv => {
            let mut buf = Vec::new();
            writeln!(buf, "check,value,tolerance,passed")?;
            for c in &report.checks {
                writeln!(buf, "{},{},{},{}", c.name, sig12(c.value), sig12(c.tolerance), c.passed)?;
            }
            emit(cfg, &buf, out)?;
        }
    }
    Ok(report.passed)
}
