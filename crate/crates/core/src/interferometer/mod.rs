//! The modified Mach-Zehnder measurement.
//!
//! The input beam is split into a test arm (`E/sqrt 2`) and an auxiliary arm
//! (`iE/sqrt 2`). The test arm passes polarizer `a`; the auxiliary arm passes
//! the stripping polarizer `s` and then a second polarizer `a`, rotated
//! together with the first. The arms recombine on a 50:50 splitter into
//! detector D1, `(aux + i test)/sqrt 2`.
//!
//! Three shutter states give an [`IntensityTriple`]: both arms open
//! (`i_total`, the D1 reading), auxiliary arm blocked (`i_test`) and test arm
//! blocked (`i_aux`). The single-arm readings are reported as the arm power
//! arriving at the recombining splitter, i.e. the D1 reading divided by the
//! splitter's 1/2 transmission. With this calibration
//! `2 i_total - i_aux - i_test` is exactly the interference cross term and
//!
//! ```text
//! P = (2 i_total - i_aux - i_test)^2 / (4 I i_aux)
//! ```
//!
//! recovers the joint probability, `I` being the test-arm intensity.

mod bootstrap;
mod protocol;
mod scan;

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::Branch;
use crate::ensemble::{compensated_sum, CompensatedSum, FieldEnsemble, REDUCE_CHUNK};
use crate::error::{Error, Result};
use crate::optics::{stripping_angle, stripping_angle_orthogonal, Jones, LabBasis, Polarizer};
use crate::rng;
use crate::schmidt::SchmidtFrame;
use crate::C64;

pub use bootstrap::bootstrap_error;
pub use protocol::{characterize, run_bell_protocol, BellReport, ProtocolConfig, SettingsChoice, TermReport};
pub use scan::{scan_correlation, sig12, CorrelationCurve, CurvePoint, CURVE_HEADER, SCAN_BATCHES};

/// Probabilities in `(1, 1 + PROBABILITY_SLACK]` are clamped to 1.
pub const PROBABILITY_SLACK: f64 = 1e-6;

/// `i_aux` at or below this fraction of the test-arm intensity counts as
/// extinguished. The cross term amplifies rounding by `sqrt(I / i_aux)`, so
/// dimmer references are routed through the marginal instead.
pub const AUX_FLOOR: f64 = 1e-6;

/// Apparatus imperfections. All zero is the ideal interferometer.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    /// Power fraction leaked by every polarizer along its blocked axis.
    #[serde(default)]
    pub extinction_ratio: f64,
    /// Standard deviation of additive detector noise, relative to the source
    /// intensity.
    #[serde(default)]
    pub detector_noise: f64,
    /// Standard deviation (radians) of the auxiliary-arm phase drift.
    #[serde(default)]
    pub phase_jitter: f64,
}

impl NoiseModel {
    pub fn ideal() -> Self {
        Self::default()
    }

    pub fn is_ideal(&self) -> bool {
        *self == Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("extinction_ratio", self.extinction_ratio),
            ("detector_noise", self.detector_noise),
            ("phase_jitter", self.phase_jitter),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::domain(format!("noise {name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// D1 readings under the three shutter states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityTriple {
    pub i_total: f64,
    pub i_test: f64,
    pub i_aux: f64,
}

/// Composite Jones matrices of the two arms, each including its splitter
/// factor.
fn arm_matrices(basis: &LabBasis, a: f64, s: f64, extinction_ratio: f64) -> Result<(Jones, Jones)> {
    let pol_a = Polarizer::in_basis(basis, a, extinction_ratio)?.jones();
    let pol_s = Polarizer::in_basis(basis, s, extinction_ratio)?.jones();
    let test = pol_a.scale(C64::new(FRAC_1_SQRT_2, 0.0));
    let aux = pol_a.then_after(&pol_s).scale(C64::new(0.0, FRAC_1_SQRT_2));
    Ok((test, aux))
}

const JITTER_STREAM: u64 = 1;
const DETECTOR_STREAM: u64 = 2;
const FALLBACK_STREAM: u64 = 3;

/// Runs the three shutter configurations on `realizations`; also returns the
/// mean source intensity.
///
/// Polarizer angles `a` and `s` are measured in `basis`. Phase jitter draws
/// an independent arm phase for each realization (the drift during one
/// integration), so the cross term is damped by `exp(-jitter^2/2)` on average.
pub(crate) fn measure_realizations(
    realizations: &[[C64; 2]],
    basis: &LabBasis,
    a: f64,
    s: f64,
    noise: &NoiseModel,
    seed: u64,
) -> Result<(IntensityTriple, f64)> {
    noise.validate()?;
    let (test, aux) = arm_matrices(basis, a, s, noise.extinction_ratio)?;
    let jitter_seed = rng::derive_seed(seed, &[JITTER_STREAM]);
    let sums: Vec<[f64; 4]> = realizations
        .par_chunks(REDUCE_CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let mut r = (noise.phase_jitter > 0.0).then(|| rng::stream(jitter_seed, c as u64));
            let mut acc = [CompensatedSum::default(); 4];
            for e in chunk {
                let t = test.apply(e);
                let x = aux.apply(e);
                let phase = match r.as_mut() {
                    Some(r) => {
                        let z: f64 = StandardNormal.sample(r);
                        C64::from_polar(1.0, noise.phase_jitter * z)
                    }
                    None => C64::new(1.0, 0.0),
                };
                let out0 = (x[0] * phase + C64::i() * t[0]) * FRAC_1_SQRT_2;
                let out1 = (x[1] * phase + C64::i() * t[1]) * FRAC_1_SQRT_2;
                acc[0].add(out0.norm_sqr() + out1.norm_sqr());
                acc[1].add(t[0].norm_sqr() + t[1].norm_sqr());
                acc[2].add(x[0].norm_sqr() + x[1].norm_sqr());
                acc[3].add(e[0].norm_sqr() + e[1].norm_sqr());
            }
            acc.map(|a| a.value())
        })
        .collect();
    let n = realizations.len() as f64;
    let [mut i_total, mut i_test, mut i_aux, source] =
        std::array::from_fn(|j| compensated_sum(sums.iter().map(|s| s[j])) / n);
    if noise.detector_noise > 0.0 {
        let mut r = rng::stream(rng::derive_seed(seed, &[DETECTOR_STREAM]), 0);
        let sigma = noise.detector_noise * source;
        for reading in [&mut i_total, &mut i_test, &mut i_aux] {
            let z: f64 = StandardNormal.sample(&mut r);
            *reading = (*reading + sigma * z).max(0.0);
        }
    }
    Ok((IntensityTriple { i_total, i_test, i_aux }, source))
}

/// Shutter-sequenced D1 readings for polarizer angle `a` and stripping angle
/// `s`, both relative to `basis`. Deterministic given `seed`.
pub fn measure_intensities(
    ensemble: &FieldEnsemble,
    basis: &LabBasis,
    a: f64,
    s: f64,
    noise: &NoiseModel,
    seed: u64,
) -> Result<IntensityTriple> {
    measure_realizations(ensemble.realizations(), basis, a, s, noise, seed).map(|(t, _)| t)
}

/// Joint probability from the three readings and the test-arm intensity.
pub fn extract_probability(t: &IntensityTriple, test_intensity: f64) -> Result<f64> {
    if !(test_intensity > 0.0) {
        return Err(Error::domain(format!("test-arm intensity must be positive, got {test_intensity}")));
    }
    if !(t.i_aux > AUX_FLOOR * test_intensity) {
        return Err(Error::AuxExtinguished { i_aux: t.i_aux });
    }
    let cross = 2.0 * t.i_total - t.i_aux - t.i_test;
    let p = cross * cross / (4.0 * test_intensity * t.i_aux);
    if p > 1.0 + PROBABILITY_SLACK {
        return Err(Error::Inconsistent { value: p });
    }
    Ok(p.min(1.0))
}

/// Polarizer angles `(a_k, s_l)` realizing outcome pair `(k, l)`: `a` or
/// `a + pi/2` in the lab space, the stripping angle for `f1^b` or `f2^b` in
/// function space.
pub fn measurement_angles(frame: &SchmidtFrame, a: f64, b: f64, k: Branch, l: Branch) -> Result<(f64, f64)> {
    let (k1, k2) = (frame.weights.kappa1, frame.weights.kappa2);
    let s = match l {
        Branch::One => stripping_angle(k1, k2, b)?,
        Branch::Two => stripping_angle_orthogonal(k1, k2, b)?,
    };
    let a_k = match k {
        Branch::One => a,
        Branch::Two => a + FRAC_PI_2,
    };
    Ok((a_k, s))
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn measure_joint_on(
    realizations: &[[C64; 2]],
    frame: &SchmidtFrame,
    a: f64,
    b: f64,
    k: Branch,
    l: Branch,
    noise: &NoiseModel,
    seed: u64,
) -> Result<f64> {
    let (a_k, s) = measurement_angles(frame, a, b, k, l)?;
    let (triple, source) = measure_realizations(realizations, &frame.basis, a_k, s, noise, seed)?;
    let test_intensity = 0.5 * source;
    match extract_probability(&triple, test_intensity) {
        Err(Error::AuxExtinguished { .. }) => {
            // Polarizer a_k blocks the stripped reference beam. The test-only
            // reading still gives the lab marginal P(u_k^a) = sum_l P_kl, and
            // the other stripping angle is never blocked at the same time.
            let (_, s_other) = measurement_angles(frame, a, b, k, l.other())?;
            let seed_other = rng::derive_seed(seed, &[FALLBACK_STREAM]);
            let (t_other, _) = measure_realizations(realizations, &frame.basis, a_k, s_other, noise, seed_other)?;
            let other = extract_probability(&t_other, test_intensity)?;
            let marginal = triple.i_test / test_intensity;
            Ok((marginal - other).clamp(0.0, 1.0))
        }
        r => r,
    }
}

/// Interferometric estimate of `P_kl(a, b)`.
///
/// When polarizer `a_k` is orthogonal to the stripping polarizer the
/// reference beam is extinguished; `P_kl` is then the measured lab marginal
/// minus the measured `P_kl'` for the other function-space outcome.
///
/// `frame` supplies the Schmidt weights (for the stripping angle) and the lab
/// basis in which all polarizer angles are set.
#[allow(clippy::too_many_arguments)]
pub fn measure_joint_probability(
    ensemble: &FieldEnsemble,
    frame: &SchmidtFrame,
    a: f64,
    b: f64,
    k: Branch,
    l: Branch,
    noise: &NoiseModel,
    seed: u64,
) -> Result<f64> {
    measure_joint_on(ensemble.realizations(), frame, a, b, k, l, noise, seed)
}

/// All four `P_kl(a, b)`; pair `(k, l)` uses seed `derive_seed(seed, [k, l])`.
pub fn measure_joint_probabilities(
    ensemble: &FieldEnsemble,
    frame: &SchmidtFrame,
    a: f64,
    b: f64,
    noise: &NoiseModel,
    seed: u64,
) -> Result<[[f64; 2]; 2]> {
    measure_joint_grid_on(ensemble.realizations(), frame, a, b, noise, seed)
}

pub(crate) fn measure_joint_grid_on(
    realizations: &[[C64; 2]],
    frame: &SchmidtFrame,
    a: f64,
    b: f64,
    noise: &NoiseModel,
    seed: u64,
) -> Result<[[f64; 2]; 2]> {
    let mut p = [[0.0; 2]; 2];
    for k in Branch::BOTH {
        for l in Branch::BOTH {
            let s = rng::derive_seed(seed, &[k.index() as u64, l.index() as u64]);
            p[k.index()][l.index()] = measure_joint_on(realizations, frame, a, b, k, l, noise, s)?;
        }
    }
    Ok(p)
}
