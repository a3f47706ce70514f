//! The full CHSH run: synthesize, characterize, measure, assemble.

use serde::{Deserialize, Serialize};

use super::{bootstrap_error, NoiseModel};
use crate::bell::{
    chsh, correlation, correlation_from_probabilities, joint_probabilities, max_chsh, max_chsh_closed_form,
    AngleSettings,
};
use crate::ensemble::{synthesize_partially_polarized, FieldEnsemble};
use crate::error::{Error, Result};
use crate::estimator::{EstimatorRegistry, JointProbabilityEstimator, ProbeContext};
use crate::polarization::{SchmidtWeights, StokesVector};
use crate::rng;
use crate::schmidt::SchmidtFrame;
use crate::tomography::tomography;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SettingsChoice {
    /// Angles maximizing the CHSH value for the measured Schmidt weights.
    Optimize,
    Explicit(AngleSettings),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub dop: f64,
    pub intensity: f64,
    pub n: usize,
    pub seed: u64,
    pub settings: SettingsChoice,
    pub noise: NoiseModel,
    /// Bootstrap resamples for `chsh_err`; 0 skips the bootstrap.
    pub resamples: usize,
    /// Registered estimator used for the joint probabilities.
    pub estimator: String,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            dop: 0.125,
            intensity: 1.0,
            n: 100_000,
            seed: 1,
            settings: SettingsChoice::Optimize,
            noise: NoiseModel::ideal(),
            resamples: 20,
            estimator: "interferometer".into(),
        }
    }
}

/// One CHSH term `(a, b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermReport {
    pub a: f64,
    pub b: f64,
    /// +1 or -1 in the CHSH sum.
    pub sign: f64,
    pub p11: f64,
    pub p12: f64,
    pub p21: f64,
    pub p22: f64,
    pub c: f64,
    /// Closed-form correlation for the measured Schmidt weights.
    pub c_oracle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellReport {
    /// Degree of polarization measured by tomography.
    pub dop: f64,
    pub requested_dop: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub n: usize,
    pub seed: u64,
    pub intensity: f64,
    pub noise: NoiseModel,
    pub settings: AngleSettings,
    pub optimized: bool,
    /// Estimator that produced the probabilities.
    pub estimator: String,
    /// True when the field is separable and the closed form was reported
    /// instead of a measurement.
    pub separable_fallback: bool,
    pub chsh: f64,
    pub chsh_err: Option<f64>,
    pub resamples: usize,
    pub chsh_oracle: f64,
    pub chsh_max: f64,
    pub stokes: StokesVector,
    pub probabilities: Vec<TermReport>,
    /// Effective run configuration, echoed by the command line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

const MEASURE_STREAM: u64 = 11;
const BOOTSTRAP_STREAM: u64 = 12;

/// CHSH value of `ensemble` at fixed settings using the ensemble's own frame.
fn measured_chsh(
    estimator: &dyn JointProbabilityEstimator,
    ensemble: &FieldEnsemble,
    frame: SchmidtFrame,
    settings: &AngleSettings,
    noise: NoiseModel,
    seed: u64,
) -> Result<(f64, Vec<[[f64; 2]; 2]>)> {
    let ctx = ProbeContext::with_frame(ensemble, frame, noise, seed);
    let mut total = 0.0;
    let mut grids = Vec::with_capacity(4);
    for (i, &(a, b, sign)) in settings.terms().iter().enumerate() {
        let p = estimator.joint_probabilities(&ctx, a, b, i as u64)?;
        total += sign * correlation_from_probabilities(&p);
        grids.push(p);
    }
    Ok((total, grids))
}

/// Tomographic Stokes vector and the measurement frame derived from it:
/// Schmidt weights from the degree of polarization, lab axes from the
/// principal axes of the reconstructed coherence matrix.
pub fn characterize(ensemble: &FieldEnsemble) -> Result<(StokesVector, SchmidtFrame)> {
    let stokes = tomography(ensemble);
    let weights = SchmidtWeights::from_dop(stokes.dop()?.min(1.0))?;
    let frame = SchmidtFrame { weights, ..SchmidtFrame::from_coherence(&stokes.to_coherence())? };
    Ok((stokes, frame))
}

/// Runs the complete protocol and returns its report.
///
/// The Schmidt weights come from the tomographic degree of polarization and
/// the lab frame from the principal axes of the tomographic Stokes vector.
/// A separable field (`kappa2 = 0`) cannot be stripped; the report then
/// carries the closed-form values and `separable_fallback = true`.
pub fn run_bell_protocol(config: &ProtocolConfig) -> Result<BellReport> {
    config.noise.validate()?;
    if let SettingsChoice::Explicit(s) = &config.settings {
        if !s.is_finite() {
            return Err(Error::domain("angle settings must be finite"));
        }
    }
    let registry = EstimatorRegistry::with_builtin();
    let estimator = registry.get(&config.estimator)?;

    let ensemble = synthesize_partially_polarized(config.dop, config.intensity, config.n, config.seed)?;
    let (stokes, frame) = characterize(&ensemble)?;
    let dop = stokes.dop()?.min(1.0);
    let weights = frame.weights;

    let (settings, optimized) = match config.settings {
        SettingsChoice::Optimize => (max_chsh(&weights).1, true),
        SettingsChoice::Explicit(s) => (s, false),
    };
    let chsh_oracle = chsh(&weights, &settings);

    let mut report = BellReport {
        dop,
        requested_dop: config.dop,
        kappa1: weights.kappa1,
        kappa2: weights.kappa2,
        n: config.n,
        seed: config.seed,
        intensity: config.intensity,
        noise: config.noise,
        settings,
        optimized,
        estimator: estimator.name().to_string(),
        separable_fallback: false,
        chsh: chsh_oracle,
        chsh_err: None,
        resamples: 0,
        chsh_oracle,
        chsh_max: max_chsh_closed_form(&weights),
        stokes,
        probabilities: Vec::new(),
        config: None,
    };

    let grids: Vec<[[f64; 2]; 2]> = if weights.is_separable() {
        report.separable_fallback = true;
        report.estimator = "oracle".into();
        settings.terms().iter().map(|&(a, b, _)| joint_probabilities(&weights, a, b)).collect()
    } else {
        let seed = rng::derive_seed(config.seed, &[MEASURE_STREAM]);
        let (value, grids) = measured_chsh(estimator, &ensemble, frame, &settings, config.noise, seed)?;
        report.chsh = value;
        if config.resamples > 0 {
            let pipeline = |e: &FieldEnsemble| {
                let f = SchmidtFrame::from_ensemble(e)?;
                measured_chsh(estimator, e, f, &settings, config.noise, seed).map(|(v, _)| v)
            };
            let boot_seed = rng::derive_seed(config.seed, &[BOOTSTRAP_STREAM]);
            report.chsh_err = Some(bootstrap_error(&ensemble, pipeline, config.resamples, boot_seed)?);
            report.resamples = config.resamples;
        }
        grids
    };

    report.probabilities = settings
        .terms()
        .iter()
        .zip(&grids)
        .map(|(&(a, b, sign), p)| TermReport {
            a,
            b,
            sign,
            p11: p[0][0],
            p12: p[0][1],
            p21: p[1][0],
            p22: p[1][1],
            c: correlation_from_probabilities(p),
            c_oracle: correlation(&weights, a, b),
        })
        .collect();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    fn quick(dop: f64) -> ProtocolConfig {
        ProtocolConfig { dop, n: 20_000, resamples: 10, ..ProtocolConfig::default() }
    }

    #[test]
    fn unpolarized_reaches_two_root_two() {
        let r = run_bell_protocol(&quick(0.0)).unwrap();
        assert!((r.chsh - 2.0 * SQRT_2).abs() < 0.01, "{}", r.chsh);
        assert!(r.chsh_err.unwrap() < 0.01);
        assert_eq!(r.probabilities.len(), 4);
    }

    #[test]
    fn separable_field_falls_back_to_oracle() {
        let r = run_bell_protocol(&quick(1.0)).unwrap();
        assert!(r.separable_fallback);
        assert!((r.chsh - 2.0).abs() < 1e-6);
        assert_eq!(r.estimator, "oracle");
    }

    #[test]
    fn equal_angles_give_two() {
        let cfg = ProtocolConfig {
            settings: SettingsChoice::Explicit(AngleSettings::new(0.0, 0.0, 0.0, 0.0)),
            ..quick(0.3)
        };
        let r = run_bell_protocol(&cfg).unwrap();
        assert!((r.chsh - 2.0).abs() < 1e-9, "{}", r.chsh);
    }

    #[test]
    fn report_is_reproducible() {
        let cfg = ProtocolConfig {
            noise: NoiseModel { extinction_ratio: 0.01, detector_noise: 0.001, phase_jitter: 0.1 },
            ..quick(0.2)
        };
        let a = serde_json::to_string(&run_bell_protocol(&cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&run_bell_protocol(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_estimator_is_rejected() {
        let cfg = ProtocolConfig { estimator: "nope".into(), ..quick(0.2) };
        assert!(matches!(run_bell_protocol(&cfg), Err(Error::UnknownStrategy { .. })));
    }

    #[test]
    fn report_json_fields() {
        let v = serde_json::to_value(run_bell_protocol(&quick(0.5)).unwrap()).unwrap();
        for k in ["dop", "kappa1", "kappa2", "n", "seed", "noise", "settings", "chsh", "chsh_err", "probabilities"] {
            assert!(v.get(k).is_some(), "{k}");
        }
        for k in ["a", "a_prime", "b", "b_prime"] {
            assert!(v["settings"].get(k).is_some());
        }
    }
}
