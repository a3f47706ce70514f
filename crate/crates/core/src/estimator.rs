//! Interchangeable joint-probability estimators.
//!
//! Three independent routes compute `P_kl(a, b)`:
//!
//! * `oracle`: the closed form from the Schmidt weights alone;
//! * `projection`: the squared overlap of the sampled field with
//!   `u_k^a (x) f_l^b`, using the empirical amplitude-space modes;
//! * `interferometer`: the shutter-sequenced Mach-Zehnder readings fed
//!   through the intensity-to-probability formula.
//!
//! On an ideal ensemble all three agree; the registry lets callers pick one by
//! name and lets the validation suite run them side by side.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use crate::bell::{correlation_from_probabilities, joint_probability_direct, Branch};
use crate::ensemble::FieldEnsemble;
use crate::error::{Error, Result};
use crate::interferometer::{measure_joint_probability, NoiseModel};
use crate::optics::FunctionBasis;
use crate::rng;
use crate::schmidt::{schmidt_modes, SchmidtFrame};
use crate::C64;

/// Everything an estimator may consult.
pub struct ProbeContext<'a> {
    pub ensemble: &'a FieldEnsemble,
    pub frame: SchmidtFrame,
    pub noise: NoiseModel,
    pub seed: u64,
    modes: OnceLock<FunctionBasis>,
}

impl<'a> ProbeContext<'a> {
    /// Context whose frame is the ensemble's own Schmidt frame.
    pub fn new(ensemble: &'a FieldEnsemble, noise: NoiseModel, seed: u64) -> Result<Self> {
        let frame = SchmidtFrame::from_ensemble(ensemble)?;
        Ok(Self::with_frame(ensemble, frame, noise, seed))
    }

    pub fn with_frame(ensemble: &'a FieldEnsemble, frame: SchmidtFrame, noise: NoiseModel, seed: u64) -> Self {
        Self { ensemble, frame, noise, seed, modes: OnceLock::new() }
    }

    /// Amplitude-space modes `f1, f2` of the ensemble in this frame,
    /// computed on first use.
    pub fn modes(&self) -> &FunctionBasis {
        self.modes.get_or_init(|| schmidt_modes(self.ensemble, &self.frame))
    }

    /// Seed for setting `point`, outcome pair `(k, l)`.
    pub fn seed_for(&self, point: u64, k: Branch, l: Branch) -> u64 {
        rng::derive_seed(self.seed, &[point, k.index() as u64, l.index() as u64])
    }
}

pub trait JointProbabilityEstimator: Send + Sync {
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    /// `P_kl(a, b)`; `point` distinguishes settings for noise streams.
    fn joint_probability(&self, ctx: &ProbeContext, a: f64, b: f64, k: Branch, l: Branch, point: u64)
        -> Result<f64>;

    fn joint_probabilities(&self, ctx: &ProbeContext, a: f64, b: f64, point: u64) -> Result<[[f64; 2]; 2]> {
        let mut p = [[0.0; 2]; 2];
        for k in Branch::BOTH {
            for l in Branch::BOTH {
                p[k.index()][l.index()] = self.joint_probability(ctx, a, b, k, l, point)?;
            }
        }
        Ok(p)
    }

    fn correlation(&self, ctx: &ProbeContext, a: f64, b: f64, point: u64) -> Result<f64> {
        Ok(correlation_from_probabilities(&self.joint_probabilities(ctx, a, b, point)?))
    }
}

pub struct OracleEstimator;

impl JointProbabilityEstimator for OracleEstimator {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn description(&self) -> &'static str {
        "closed-form Schmidt amplitudes"
    }

    fn joint_probability(&self, ctx: &ProbeContext, a: f64, b: f64, k: Branch, l: Branch, _point: u64)
        -> Result<f64> {
        Ok(joint_probability_direct(&ctx.frame.weights, a, b, k, l))
    }
}

pub struct ProjectionEstimator;

impl JointProbabilityEstimator for ProjectionEstimator {
    fn name(&self) -> &'static str {
        "projection"
    }

    fn description(&self) -> &'static str {
        "direct overlap of the sampled field with u_k^a f_l^b"
    }

    fn joint_probability(&self, ctx: &ProbeContext, a: f64, b: f64, k: Branch, l: Branch, _point: u64)
        -> Result<f64> {
        let intensity = ctx.frame.intensity;
        if !(intensity > 0.0) {
            return Err(Error::Degenerate("zero-intensity ensemble".into()));
        }
        let lab = ctx.frame.basis.rotated(a);
        let u = match k {
            Branch::One => lab.v1,
            Branch::Two => lab.v2,
        };
        let (sb, cb) = b.sin_cos();
        // f_l^b = c1 f1 + c2 f2 with real coefficients.
        let (c1, c2) = match l {
            Branch::One => (cb, -sb),
            Branch::Two => (sb, cb),
        };
        let modes = ctx.modes();
        let amp = ctx.ensemble.mean_of_complex(|n, e| {
            let f = modes.g1[n] * c1 + modes.g2[n] * c2;
            f.conj() * (u[0].conj() * e[0] + u[1].conj() * e[1])
        });
        Ok((amp / C64::new(intensity.sqrt(), 0.0)).norm_sqr())
    }
}

pub struct InterferometerEstimator;

impl JointProbabilityEstimator for InterferometerEstimator {
    fn name(&self) -> &'static str {
        "interferometer"
    }

    fn description(&self) -> &'static str {
        "Mach-Zehnder shutter readings with the stripping polarizer"
    }

    fn joint_probability(&self, ctx: &ProbeContext, a: f64, b: f64, k: Branch, l: Branch, point: u64)
        -> Result<f64> {
        measure_joint_probability(ctx.ensemble, &ctx.frame, a, b, k, l, &ctx.noise, ctx.seed_for(point, k, l))
    }
}

pub struct EstimatorRegistry {
    estimators: BTreeMap<&'static str, Box<dyn JointProbabilityEstimator>>,
}

impl Default for EstimatorRegistry {
    fn default() -> Self {
        Self::with_builtin()
    }
}

impl EstimatorRegistry {
    pub fn empty() -> Self {
        Self { estimators: BTreeMap::new() }
    }

    pub fn with_builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(OracleEstimator));
        r.register(Box::new(ProjectionEstimator));
        r.register(Box::new(InterferometerEstimator));
        r
    }

    pub fn register(&mut self, estimator: Box<dyn JointProbabilityEstimator>) {
        self.estimators.insert(estimator.name(), estimator);
    }

    pub fn get(&self, name: &str) -> Result<&dyn JointProbabilityEstimator> {
        self.estimators.get(name).map(|e| e.as_ref()).ok_or_else(|| Error::UnknownStrategy {
            kind: "estimator",
            name: name.to_string(),
            known: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.estimators.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn JointProbabilityEstimator> {
        self.estimators.values().map(|e| e.as_ref())
    }
}
