//! Optical elements acting on field ensembles.
//!
//! Every element is a per-realization linear map. Polarizers and wave plates
//! are 2x2 [`Jones`] matrices; the 50:50 beam splitter transmits with
//! amplitude `1/sqrt 2` and reflects with `i/sqrt 2`.
//!
//! Angles of polarizers used in the Bell measurement are taken relative to a
//! [`LabBasis`] `(v1, v2)`: the polarizer at angle `t` passes
//! `cos t v1 - sin t v2`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use crate::ensemble::{compensated_sum, FieldEnsemble};
use crate::error::{Error, Result};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// 2x2 complex matrix acting on `(E_x, E_y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jones(pub [[C64; 2]; 2]);

impl Jones {
    pub fn identity() -> Self {
        Jones([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn zero() -> Self {
        Jones([[ZERO, ZERO], [ZERO, ZERO]])
    }

    /// Outer product `|a><b|`.
    pub fn outer(a: &[C64; 2], b: &[C64; 2]) -> Self {
        Jones([
            [a[0] * b[0].conj(), a[0] * b[1].conj()],
            [a[1] * b[0].conj(), a[1] * b[1].conj()],
        ])
    }

    #[inline]
    pub fn apply(&self, e: &[C64; 2]) -> [C64; 2] {
        let m = &self.0;
        [m[0][0] * e[0] + m[0][1] * e[1], m[1][0] * e[0] + m[1][1] * e[1]]
    }

    /// Matrix product `self * rhs` (`rhs` acts first).
    pub fn then_after(&self, rhs: &Jones) -> Jones {
        let (a, b) = (&self.0, &rhs.0);
        Jones(std::array::from_fn(|i| {
            std::array::from_fn(|j| a[i][0] * b[0][j] + a[i][1] * b[1][j])
        }))
    }

    pub fn scale(&self, s: C64) -> Jones {
        Jones(self.0.map(|row| row.map(|z| z * s)))
    }

    pub fn add(&self, rhs: &Jones) -> Jones {
        Jones(std::array::from_fn(|i| std::array::from_fn(|j| self.0[i][j] + rhs.0[i][j])))
    }

    pub fn adjoint(&self) -> Jones {
        let m = &self.0;
        Jones([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }
}

pub fn inner2(a: &[C64; 2], b: &[C64; 2]) -> C64 {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

fn norm2(a: &[C64; 2]) -> f64 {
    (a[0].norm_sqr() + a[1].norm_sqr()).sqrt()
}

/// Orthonormal polarization basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabBasis {
    pub v1: [C64; 2],
    pub v2: [C64; 2],
}

impl LabBasis {
    pub fn new(v1: [C64; 2], v2: [C64; 2]) -> Result<Self> {
        if (norm2(&v1) - 1.0).abs() > 1e-10
            || (norm2(&v2) - 1.0).abs() > 1e-10
            || inner2(&v1, &v2).norm() > 1e-10
        {
            return Err(Error::domain("lab basis vectors must be orthonormal"));
        }
        Ok(Self { v1, v2 })
    }

    /// The x/y basis.
    pub fn standard() -> Self {
        Self { v1: [ONE, ZERO], v2: [ZERO, ONE] }
    }

    /// `(cos a v1 - sin a v2, sin a v1 + cos a v2)`.
    pub fn rotated(&self, a: f64) -> Self {
        let (s, c) = a.sin_cos();
        Self {
            v1: [self.v1[0] * c - self.v2[0] * s, self.v1[1] * c - self.v2[1] * s],
            v2: [self.v1[0] * s + self.v2[0] * c, self.v1[1] * s + self.v2[1] * c],
        }
    }

    /// Pass axis of a polarizer at angle `t` in this basis.
    pub fn axis(&self, t: f64) -> [C64; 2] {
        self.rotated(t).v1
    }
}

pub fn rotate_lab_basis(basis: &LabBasis, a: f64) -> LabBasis {
    basis.rotated(a)
}

/// Orthonormal pair of amplitude-space vectors (`1/N` inner product).
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionBasis {
    pub g1: Vec<C64>,
    pub g2: Vec<C64>,
}

/// `<f|g> = (1/N) sum conj(f_n) g_n`.
pub fn function_inner(f: &[C64], g: &[C64]) -> C64 {
    assert_eq!(f.len(), g.len(), "function vectors must have equal length");
    let products: Vec<C64> = f.iter().zip(g).map(|(x, y)| x.conj() * y).collect();
    let re = compensated_sum(products.iter().map(|z| z.re));
    let im = compensated_sum(products.iter().map(|z| z.im));
    C64::new(re, im) / f.len() as f64
}

impl FunctionBasis {
    pub fn new(g1: Vec<C64>, g2: Vec<C64>) -> Result<Self> {
        if g1.len() != g2.len() || g1.len() < 2 {
            return Err(Error::domain("function basis vectors need equal length >= 2"));
        }
        let b = Self { g1, g2 };
        if b.orthonormality_defect() > 1e-10 {
            return Err(Error::domain("function basis vectors must be orthonormal"));
        }
        Ok(b)
    }

    pub fn len(&self) -> usize {
        self.g1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g1.is_empty()
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let n11 = (function_inner(&self.g1, &self.g1).re - 1.0).abs();
        let n22 = (function_inner(&self.g2, &self.g2).re - 1.0).abs();
        let x = function_inner(&self.g1, &self.g2).norm();
        n11.max(n22).max(x)
    }

    pub fn rotated(&self, b: f64) -> Self {
        let (s, c) = b.sin_cos();
        let g1 = self.g1.iter().zip(&self.g2).map(|(x, y)| x * c - y * s).collect();
        let g2 = self.g1.iter().zip(&self.g2).map(|(x, y)| x * s + y * c).collect();
        Self { g1, g2 }
    }
}

pub fn rotate_function_basis(basis: &FunctionBasis, b: f64) -> FunctionBasis {
    basis.rotated(b)
}

/// Reduces an axis angle to `(-pi/2, pi/2]`.
pub fn reduce_axis_angle(t: f64) -> f64 {
    let r = t.rem_euclid(PI);
    if r > FRAC_PI_2 {
        r - PI
    } else {
        r
    }
}

/// Linear polarizer, optionally leaky.
///
/// With extinction ratio `eps` the orthogonal axis is transmitted with
/// amplitude `sqrt(eps)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polarizer {
    axis: [C64; 2],
    extinction_ratio: f64,
}

impl Polarizer {
    pub fn new(axis: [C64; 2]) -> Result<Self> {
        Self::leaky(axis, 0.0)
    }

    pub fn leaky(axis: [C64; 2], extinction_ratio: f64) -> Result<Self> {
        if (norm2(&axis) - 1.0).abs() > 1e-10 {
            return Err(Error::domain(format!("polarizer axis must be a unit vector (|axis| = {})", norm2(&axis))));
        }
        if !(extinction_ratio >= 0.0) || !extinction_ratio.is_finite() {
            return Err(Error::domain("extinction ratio must be finite and >= 0"));
        }
        Ok(Self { axis, extinction_ratio })
    }

    /// Polarizer at angle `t` of `basis`.
    pub fn in_basis(basis: &LabBasis, t: f64, extinction_ratio: f64) -> Result<Self> {
        Self::leaky(basis.axis(t), extinction_ratio)
    }

    pub fn axis(&self) -> [C64; 2] {
        self.axis
    }

    pub fn jones(&self) -> Jones {
        let pass = Jones::outer(&self.axis, &self.axis);
        if self.extinction_ratio == 0.0 {
            return pass;
        }
        let blocked = [-self.axis[1].conj(), self.axis[0].conj()];
        pass.add(&Jones::outer(&blocked, &blocked).scale(C64::new(self.extinction_ratio.sqrt(), 0.0)))
    }

    pub fn apply(&self, ensemble: &FieldEnsemble) -> FieldEnsemble {
        ensemble.map_jones(&self.jones())
    }
}

/// Ideal polarizer: `E -> axis <axis|E>` for every realization.
pub fn apply_polarizer(ensemble: &FieldEnsemble, axis: [C64; 2]) -> Result<FieldEnsemble> {
    Ok(Polarizer::new(axis)?.apply(ensemble))
}

fn require_stripping(kappa1: f64, kappa2: f64) -> Result<()> {
    if !(kappa1 >= 0.0 && kappa2 >= 0.0) {
        return Err(Error::domain("Schmidt weights must be non-negative"));
    }
    if kappa2 <= 1e-12 {
        return Err(Error::Degenerate(
            "kappa2 = 0: the field has no second function-space component to strip".into(),
        ));
    }
    Ok(())
}

/// Polarizer angle that removes the `f2^b` component: `tan s = (k1/k2) tan b`.
pub fn stripping_angle(kappa1: f64, kappa2: f64, b: f64) -> Result<f64> {
    require_stripping(kappa1, kappa2)?;
    Ok(reduce_axis_angle((kappa1 * b.sin()).atan2(kappa2 * b.cos())))
}

/// Polarizer angle that removes the `f1^b` component:
/// `tan s' = -(k1/k2) cot b`.
pub fn stripping_angle_orthogonal(kappa1: f64, kappa2: f64, b: f64) -> Result<f64> {
    require_stripping(kappa1, kappa2)?;
    Ok(reduce_axis_angle((-kappa1 * b.cos()).atan2(kappa2 * b.sin())))
}

/// 50:50 split into `(test, aux) = (E/sqrt 2, iE/sqrt 2)`.
pub fn beamsplitter_split(ensemble: &FieldEnsemble) -> (FieldEnsemble, FieldEnsemble) {
    (
        ensemble.scale(C64::new(FRAC_1_SQRT_2, 0.0)),
        ensemble.scale(I * FRAC_1_SQRT_2),
    )
}

/// 50:50 recombination into the detector port, `(aux + i test)/sqrt 2`.
pub fn beamsplitter_combine(aux: &FieldEnsemble, test: &FieldEnsemble) -> Result<FieldEnsemble> {
    if aux.len() != test.len() {
        return Err(Error::domain(format!(
            "cannot combine ensembles of {} and {} realizations",
            aux.len(),
            test.len()
        )));
    }
    let out = aux
        .realizations()
        .iter()
        .zip(test.realizations())
        .map(|(x, t)| [(x[0] + I * t[0]) * FRAC_1_SQRT_2, (x[1] + I * t[1]) * FRAC_1_SQRT_2])
        .collect();
    FieldEnsemble::new(out, aux.seed())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavePlateKind {
    Half,
    Quarter,
}

impl WavePlateKind {
    pub fn retardance(self) -> f64 {
        match self {
            WavePlateKind::Half => PI,
            WavePlateKind::Quarter => FRAC_PI_2,
        }
    }
}

/// Linear retarder with its fast axis at `fast_axis_angle` from x:
/// `R(t) diag(1, exp(i G)) R(-t)`.
pub fn waveplate_jones(kind: WavePlateKind, fast_axis_angle: f64) -> Jones {
    let (s, c) = fast_axis_angle.sin_cos();
    let fast = [C64::new(c, 0.0), C64::new(s, 0.0)];
    let slow = [C64::new(-s, 0.0), C64::new(c, 0.0)];
    let delay = C64::from_polar(1.0, kind.retardance());
    Jones::outer(&fast, &fast).add(&Jones::outer(&slow, &slow).scale(delay))
}

pub fn waveplate(ensemble: &FieldEnsemble, kind: WavePlateKind, fast_axis_angle: f64) -> FieldEnsemble {
    ensemble.map_jones(&waveplate_jones(kind, fast_axis_angle))
}
