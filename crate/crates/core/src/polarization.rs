//! Second-order polarization statistics: coherence matrix, Stokes vector,
//! degree of polarization.
//!
//! Conventions: `J_pq = <conj(E_p) E_q>`, `S2 = 2 Re J_xy`, `S3 = 2 Im J_xy`.
//! With these, `(1, i)/sqrt(2)` has `S3 = +1` and is called right-circular.

use serde::{Deserialize, Serialize};

use crate::ensemble::FieldEnsemble;
use crate::error::{Error, Result};
use crate::C64;

/// 2x2 Hermitian positive semidefinite second-moment matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceMatrix {
    pub j: [[C64; 2]; 2],
}

impl CoherenceMatrix {
    pub fn from_ensemble(ensemble: &FieldEnsemble) -> Self {
        let jxx = ensemble.mean_of(|e| e[0].norm_sqr());
        let jyy = ensemble.mean_of(|e| e[1].norm_sqr());
        let jxy = ensemble.mean_of_complex(|_, e| e[0].conj() * e[1]);
        Self::from_parts(jxx, jyy, jxy)
    }

    pub fn from_parts(jxx: f64, jyy: f64, jxy: C64) -> Self {
        Self {
            j: [[C64::new(jxx, 0.0), jxy], [jxy.conj(), C64::new(jyy, 0.0)]],
        }
    }

    pub fn trace(&self) -> f64 {
        self.j[0][0].re + self.j[1][1].re
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (0..2).all(|p| (0..2).all(|q| (self.j[p][q] - self.j[q][p].conj()).norm() <= tol))
    }

    /// Eigenvalues, descending.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let a = self.j[0][0].re;
        let d = self.j[1][1].re;
        let half = 0.5 * (a - d);
        let r = (half * half + self.j[0][1].norm_sqr()).sqrt();
        let m = 0.5 * (a + d);
        (m + r, m - r)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut j = self.j;
        j.iter_mut().flatten().for_each(|z| *z *= factor);
        Self { j }
    }

    /// Principal polarization axes of the field.
    ///
    /// Returns the eigen-decomposition of the lab-space second-moment matrix
    /// `rho = <E E^dagger>`, which is the transpose of `J`. Its eigenvectors
    /// `u` are the directions whose projections `u^dagger E` are mutually
    /// uncorrelated; the eigenvalues equal those of `J`.
    ///
    /// When the two eigenvalues coincide to within `1e-12` of the trace the
    /// basis is arbitrary and `(1, 0), (0, 1)` is returned.
    pub fn principal_axes(&self) -> PrincipalAxes {
        let (l1, l2) = self.eigenvalues();
        let trace = self.trace();
        let a = self.j[0][0].re;
        let d = self.j[1][1].re;
        // rho_xy = <E_x conj(E_y)> = conj(J_xy)
        let c = self.j[0][1].conj();
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        if trace <= 0.0 || (l1 - l2) <= 1e-12 * trace {
            return PrincipalAxes { lambda1: l1, lambda2: l2, u1: [one, zero], u2: [zero, one] };
        }
        let v = if a >= d {
            [C64::new(l1 - d, 0.0), c.conj()]
        } else {
            [c, C64::new(l1 - a, 0.0)]
        };
        let norm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        let mut u1 = [v[0] / norm, v[1] / norm];
        // Fix the global phase: first non-negligible component real positive.
        let pivot = if u1[0].norm() > 1e-15 { u1[0] } else { u1[1] };
        let phase = pivot.conj() / pivot.norm();
        u1 = [u1[0] * phase, u1[1] * phase];
        let u2 = [-u1[1].conj(), u1[0].conj()];
        PrincipalAxes { lambda1: l1, lambda2: l2.max(0.0), u1, u2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrincipalAxes {
    pub lambda1: f64,
    pub lambda2: f64,
    pub u1: [C64; 2],
    pub u2: [C64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StokesVector {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl StokesVector {
    pub fn new(s0: f64, s1: f64, s2: f64, s3: f64) -> Self {
        Self { s0, s1, s2, s3 }
    }

    pub fn from_coherence(j: &CoherenceMatrix) -> Self {
        let jxx = j.j[0][0].re;
        let jyy = j.j[1][1].re;
        let jxy = j.j[0][1];
        Self { s0: jxx + jyy, s1: jxx - jyy, s2: 2.0 * jxy.re, s3: 2.0 * jxy.im }
    }

    pub fn to_coherence(&self) -> CoherenceMatrix {
        CoherenceMatrix::from_parts(
            0.5 * (self.s0 + self.s1),
            0.5 * (self.s0 - self.s1),
            C64::new(0.5 * self.s2, 0.5 * self.s3),
        )
    }

    pub fn polarized_norm(&self) -> f64 {
        (self.s1 * self.s1 + self.s2 * self.s2 + self.s3 * self.s3).sqrt()
    }

    /// Stokes vector scaled to `S0 = 1`.
    pub fn normalized(&self) -> Result<Self> {
        if !(self.s0 > 0.0) {
            return Err(Error::domain("cannot normalize a Stokes vector with S0 <= 0"));
        }
        Ok(Self::new(1.0, self.s1 / self.s0, self.s2 / self.s0, self.s3 / self.s0))
    }

    pub fn dop(&self) -> Result<f64> {
        dop(self)
    }
}

pub fn stokes(j: &CoherenceMatrix) -> StokesVector {
    StokesVector::from_coherence(j)
}

/// Degree of polarization `sqrt(S1^2 + S2^2 + S3^2) / S0`.
pub fn dop(s: &StokesVector) -> Result<f64> {
    if !(s.s0 > 0.0) {
        return Err(Error::domain(format!("degree of polarization needs S0 > 0, got {}", s.s0)));
    }
    Ok(s.polarized_norm() / s.s0)
}

/// Schmidt weights `(sqrt((1 + dop)/2), sqrt((1 - dop)/2))`.
pub fn kappa_from_dop(dop: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&dop) {
        return Err(Error::domain(format!("dop must lie in [0, 1], got {dop}")));
    }
    Ok((((1.0 + dop) / 2.0).sqrt(), ((1.0 - dop) / 2.0).sqrt()))
}

/// The pair `(kappa1, kappa2)` with `kappa1 >= kappa2 >= 0` and unit norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchmidtWeights {
    pub kappa1: f64,
    pub kappa2: f64,
}

impl SchmidtWeights {
    pub fn new(kappa1: f64, kappa2: f64) -> Result<Self> {
        if !(kappa1 >= 0.0 && kappa2 >= 0.0) {
            return Err(Error::domain(format!("Schmidt weights must be >= 0: ({kappa1}, {kappa2})")));
        }
        if ((kappa1 * kappa1 + kappa2 * kappa2) - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!(
                "Schmidt weights must satisfy k1^2 + k2^2 = 1: ({kappa1}, {kappa2})"
            )));
        }
        Ok(Self { kappa1, kappa2 })
    }

    pub fn from_dop(dop: f64) -> Result<Self> {
        let (kappa1, kappa2) = kappa_from_dop(dop)?;
        Ok(Self { kappa1, kappa2 })
    }

    pub fn unpolarized() -> Self {
        Self { kappa1: std::f64::consts::FRAC_1_SQRT_2, kappa2: std::f64::consts::FRAC_1_SQRT_2 }
    }

    pub fn dop(&self) -> f64 {
        self.kappa1 * self.kappa1 - self.kappa2 * self.kappa2
    }

    /// Whether the field factorizes (no second Schmidt term).
    pub fn is_separable(&self) -> bool {
        self.kappa2 <= 1e-12
    }
}
