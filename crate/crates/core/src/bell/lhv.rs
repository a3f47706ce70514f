//! Local hidden variable models.
//!
//! A model supplies bounded responses `A(a, lambda)` and `B(b, lambda)` and a
//! sampler for `lambda`. Any such model obeys `|CHSH| <= 2`; the models here
//! exist to demonstrate that bound next to the Schmidt-form correlations.
//!
//! Models are looked up by name through [`LhvRegistry`].

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, RngCore};

use super::AngleSettings;
use crate::error::{Error, Result};
use crate::rng;

/// Sampled hidden variables. Models use as many slots as they need.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Hidden(pub [f64; 4]);

pub trait LhvModel: Send + Sync {
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    fn sample(&self, rng: &mut dyn RngCore) -> Hidden;

    fn response_a(&self, a: f64, lambda: &Hidden) -> f64;

    fn response_b(&self, b: f64, lambda: &Hidden) -> f64;

    /// Exact correlation, when known.
    fn analytic_correlation(&self, _a: f64, _b: f64) -> Option<f64> {
        None
    }
}

/// Always answers +1 on both sides.
pub struct ConstantModel;

impl LhvModel for ConstantModel {
    fn name(&self) -> &'static str {
        "constant"
    }

    fn description(&self) -> &'static str {
        "A = B = 1 regardless of setting"
    }

    fn sample(&self, _rng: &mut dyn RngCore) -> Hidden {
        Hidden::default()
    }

    fn response_a(&self, _a: f64, _lambda: &Hidden) -> f64 {
        1.0
    }

    fn response_b(&self, _b: f64, _lambda: &Hidden) -> f64 {
        1.0
    }

    fn analytic_correlation(&self, _a: f64, _b: f64) -> Option<f64> {
        Some(1.0)
    }
}

/// Shared random polarization axis, continuous Malus-type responses:
/// `A = cos 2(a - lambda)`, `B = cos 2(b - lambda)`, lambda uniform on `[0, pi)`.
pub struct CosineModel;

impl LhvModel for CosineModel {
    fn name(&self) -> &'static str {
        "cosine"
    }

    fn description(&self) -> &'static str {
        "A = cos 2(a - l), B = cos 2(b - l), l uniform on [0, pi)"
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Hidden {
        Hidden([rng.random::<f64>() * PI, 0.0, 0.0, 0.0])
    }

    fn response_a(&self, a: f64, lambda: &Hidden) -> f64 {
        (2.0 * (a - lambda.0[0])).cos()
    }

    fn response_b(&self, b: f64, lambda: &Hidden) -> f64 {
        (2.0 * (b - lambda.0[0])).cos()
    }

    fn analytic_correlation(&self, a: f64, b: f64) -> Option<f64> {
        Some(0.5 * (2.0 * (a - b)).cos())
    }
}

/// Deterministic +-1 outcomes: `A = sign cos 2(a - lambda)`, same for B.
/// Its correlation is the triangle wave `1 - 4|a - b|/pi`, which reaches
/// CHSH = 2 exactly.
pub struct SignModel;

impl LhvModel for SignModel {
    fn name(&self) -> &'static str {
        "sign"
    }

    fn description(&self) -> &'static str {
        "A = sgn cos 2(a - l), B = sgn cos 2(b - l), l uniform on [0, pi)"
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Hidden {
        Hidden([rng.random::<f64>() * PI, 0.0, 0.0, 0.0])
    }

    fn response_a(&self, a: f64, lambda: &Hidden) -> f64 {
        sgn((2.0 * (a - lambda.0[0])).cos())
    }

    fn response_b(&self, b: f64, lambda: &Hidden) -> f64 {
        sgn((2.0 * (b - lambda.0[0])).cos())
    }

    fn analytic_correlation(&self, a: f64, b: f64) -> Option<f64> {
        let d = (a - b).rem_euclid(PI);
        let d = d.min(PI - d);
        Some(1.0 - 4.0 * d / PI)
    }
}

fn sgn(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Named collection of hidden variable models.
pub struct LhvRegistry {
    models: BTreeMap<&'static str, Box<dyn LhvModel>>,
}

impl Default for LhvRegistry {
    fn default() -> Self {
        Self::with_builtin()
    }
}

impl LhvRegistry {
    pub fn empty() -> Self {
        Self { models: BTreeMap::new() }
    }

    pub fn with_builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(ConstantModel));
        r.register(Box::new(CosineModel));
        r.register(Box::new(SignModel));
        r
    }

    pub fn register(&mut self, model: Box<dyn LhvModel>) {
        self.models.insert(model.name(), model);
    }

    pub fn get(&self, name: &str) -> Result<&dyn LhvModel> {
        self.models.get(name).map(|m| m.as_ref()).ok_or_else(|| Error::UnknownStrategy {
            kind: "hidden variable model",
            name: name.to_string(),
            known: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.models.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn LhvModel> {
        self.models.values().map(|m| m.as_ref())
    }
}

fn checked(model: &dyn LhvModel, v: f64) -> Result<f64> {
    if v.abs() > 1.0 || !v.is_finite() {
        return Err(Error::ModelContract { model: model.name().to_string(), value: v });
    }
    Ok(v)
}

/// Monte-Carlo estimate of `integral A(a,l) B(b,l) rho(l) dl`.
pub fn lhv_correlation(model: &dyn LhvModel, a: f64, b: f64, n_samples: usize, seed: u64) -> Result<f64> {
    if n_samples == 0 {
        return Err(Error::domain("n_samples must be at least 1"));
    }
    let mut r = rng::stream(seed, 0);
    let mut sum = 0.0;
    for _ in 0..n_samples {
        let lambda = model.sample(&mut r);
        sum += checked(model, model.response_a(a, &lambda))? * checked(model, model.response_b(b, &lambda))?;
    }
    Ok(sum / n_samples as f64)
}

/// CHSH value of a model. All four correlations reuse the same hidden
/// variable draws.
pub fn lhv_chsh(model: &dyn LhvModel, settings: &AngleSettings, n_samples: usize, seed: u64) -> Result<f64> {
    settings
        .terms()
        .iter()
        .map(|&(a, b, s)| lhv_correlation(model, a, b, n_samples, seed).map(|c| s * c))
        .sum()
}
