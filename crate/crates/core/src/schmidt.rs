//! Two-term Schmidt decomposition of an ensemble across polarization and
//! amplitude space: `E_n = sqrt(I) (k1 u1 f1[n] + k2 u2 f2[n])`.

use serde::Serialize;

use crate::ensemble::FieldEnsemble;
use crate::error::{Error, Result};
use crate::optics::{function_inner, FunctionBasis, LabBasis};
use crate::polarization::{CoherenceMatrix, SchmidtWeights};
use crate::C64;

/// Polarization half of a decomposition; enough to drive the interferometer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchmidtFrame {
    pub weights: SchmidtWeights,
    pub basis: LabBasis,
    pub intensity: f64,
}

impl SchmidtFrame {
    pub fn from_coherence(j: &CoherenceMatrix) -> Result<Self> {
        let intensity = j.trace();
        if !(intensity > 0.0) {
            return Err(Error::Degenerate("zero-intensity ensemble has no Schmidt form".into()));
        }
        let ax = j.principal_axes();
        let mut kappa2 = (ax.lambda2 / intensity).sqrt();
        if kappa2 <= 1e-12 {
            kappa2 = 0.0;
        }
        let kappa1 = (ax.lambda1 / intensity).sqrt();
        Ok(Self {
            weights: SchmidtWeights { kappa1, kappa2 },
            basis: LabBasis { v1: ax.u1, v2: ax.u2 },
            intensity,
        })
    }

    pub fn from_ensemble(ensemble: &FieldEnsemble) -> Result<Self> {
        Self::from_coherence(&ensemble.coherence_matrix())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtDecomposition {
    pub frame: SchmidtFrame,
    pub modes: FunctionBasis,
}

impl SchmidtDecomposition {
    pub fn kappa1(&self) -> f64 {
        self.frame.weights.kappa1
    }

    pub fn kappa2(&self) -> f64 {
        self.frame.weights.kappa2
    }

    pub fn u1(&self) -> [C64; 2] {
        self.frame.basis.v1
    }

    pub fn u2(&self) -> [C64; 2] {
        self.frame.basis.v2
    }

    pub fn f1(&self) -> &[C64] {
        &self.modes.g1
    }

    pub fn f2(&self) -> &[C64] {
        &self.modes.g2
    }

    pub fn intensity(&self) -> f64 {
        self.frame.intensity
    }

    /// Realization `n` rebuilt from the decomposition.
    pub fn reconstruct(&self, n: usize) -> [C64; 2] {
        let amp = self.intensity().sqrt();
        let a1 = self.modes.g1[n] * (amp * self.kappa1());
        let a2 = self.modes.g2[n] * (amp * self.kappa2());
        let (u1, u2) = (self.u1(), self.u2());
        [u1[0] * a1 + u2[0] * a2, u1[1] * a1 + u2[1] * a2]
    }

    /// Serializable summary (`kappa1, kappa2, u1, u2`; the N-vectors are omitted).
    pub fn summary(&self) -> SchmidtSummary {
        SchmidtSummary {
            kappa1: self.kappa1(),
            kappa2: self.kappa2(),
            u1: complex_pairs(&self.u1()),
            u2: complex_pairs(&self.u2()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchmidtSummary {
    pub kappa1: f64,
    pub kappa2: f64,
    /// `[[re, im], [re, im]]`
    pub u1: [[f64; 2]; 2],
    pub u2: [[f64; 2]; 2],
}

pub(crate) fn complex_pairs(v: &[C64; 2]) -> [[f64; 2]; 2] {
    [[v[0].re, v[0].im], [v[1].re, v[1].im]]
}

/// Computes the Schmidt decomposition.
///
/// `u1, u2` are the principal axes (eigenvalue-descending), `k_i =
/// sqrt(lambda_i / I)` and `f_i[n] = <u_i|E_n> / sqrt(lambda_i)`. The
/// projections on distinct principal axes are uncorrelated over the sample, so
/// `f1` and `f2` are orthogonal to rounding error. If `k2 = 0` there is no
/// second mode and `f2` is an arbitrary unit vector orthogonal to `f1`. If the
/// two eigenvalues coincide (`dop < 1e-12`) the lab basis is x/y.
pub fn schmidt(ensemble: &FieldEnsemble) -> Result<SchmidtDecomposition> {
    let frame = SchmidtFrame::from_ensemble(ensemble)?;
    let modes = schmidt_modes(ensemble, &frame);
    Ok(SchmidtDecomposition { frame, modes })
}

/// Amplitude-space modes `f_i[n] = <u_i|E_n> / (sqrt(I) k_i)` of `ensemble`
/// in a given frame.
pub fn schmidt_modes(ensemble: &FieldEnsemble, frame: &SchmidtFrame) -> FunctionBasis {
    let (u1, u2) = (frame.basis.v1, frame.basis.v2);
    let w = frame.weights;
    let project = |u: &[C64; 2], e: &[C64; 2]| u[0].conj() * e[0] + u[1].conj() * e[1];
    let s1 = 1.0 / (frame.intensity.sqrt() * w.kappa1);
    let f1: Vec<C64> = ensemble.realizations().iter().map(|e| project(&u1, e) * s1).collect();
    let f2 = if w.kappa2 > 0.0 {
        let s2 = 1.0 / (frame.intensity.sqrt() * w.kappa2);
        ensemble.realizations().iter().map(|e| project(&u2, e) * s2).collect()
    } else {
        orthogonal_complement(&f1)
    };
    FunctionBasis { g1: f1, g2: f2 }
}

/// Unit vector orthogonal to `f` (itself of unit norm): Gram-Schmidt on the
/// scaled coordinate vector where `|f|` is smallest.
fn orthogonal_complement(f: &[C64]) -> Vec<C64> {
    let n = f.len();
    let m = f
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut e = vec![C64::new(0.0, 0.0); n];
    e[m] = C64::new((n as f64).sqrt(), 0.0);
    let overlap = function_inner(f, &e);
    let mut g: Vec<C64> = e.iter().zip(f).map(|(x, y)| x - y * overlap).collect();
    let norm = function_inner(&g, &g).re.sqrt();
    g.iter_mut().for_each(|z| *z /= norm);
    g
}
