//! Six-setting polarization tomography.
//!
//! The beam is analysed in the H/V, D/A and R/L bases. H/V is measured with a
//! polarizer directly; D/A through a half-wave plate at pi/8 and R/L through a
//! quarter-wave plate at pi/4, each followed by the same H/V polarizer pair.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};

use serde::Serialize;

use crate::ensemble::FieldEnsemble;
use crate::error::Result;
use crate::optics::{waveplate, Polarizer, WavePlateKind};
use crate::polarization::{kappa_from_dop, StokesVector};
use crate::schmidt::{complex_pairs, SchmidtFrame};
use crate::C64;

/// The six analyser readings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectionReadings {
    pub h: f64,
    pub v: f64,
    pub d: f64,
    pub a: f64,
    pub r: f64,
    pub l: f64,
}

impl ProjectionReadings {
    pub fn stokes(&self) -> StokesVector {
        StokesVector::new(self.h + self.v, self.h - self.v, self.d - self.a, self.r - self.l)
    }
}

pub fn measure_projections(ensemble: &FieldEnsemble) -> ProjectionReadings {
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let h_pol = Polarizer::new([one, zero]).expect("unit axis");
    let v_pol = Polarizer::new([zero, one]).expect("unit axis");
    let pair = |e: &FieldEnsemble| (h_pol.apply(e).intensity(), v_pol.apply(e).intensity());
    let (h, v) = pair(ensemble);
    let (d, a) = pair(&waveplate(ensemble, WavePlateKind::Half, FRAC_PI_8));
    let (r, l) = pair(&waveplate(ensemble, WavePlateKind::Quarter, FRAC_PI_4));
    ProjectionReadings { h, v, d, a, r, l }
}

/// Stokes vector estimated from the six projective intensities.
pub fn tomography(ensemble: &FieldEnsemble) -> StokesVector {
    measure_projections(ensemble).stokes()
}

/// Tomography summary written by `fieldbell source`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TomographyReport {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub dop: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    /// Principal polarization axes as `[[re, im], [re, im]]`.
    pub u1: [[f64; 2]; 2],
    pub u2: [[f64; 2]; 2],
}

impl TomographyReport {
    pub fn from_ensemble(ensemble: &FieldEnsemble) -> Result<Self> {
        let s = tomography(ensemble);
        let dop = s.dop()?.min(1.0);
        let (kappa1, kappa2) = kappa_from_dop(dop)?;
        let frame = SchmidtFrame::from_coherence(&s.to_coherence())?;
        Ok(Self {
            s0: s.s0,
            s1: s.s1,
            s2: s.s2,
            s3: s.s3,
            dop,
            kappa1,
            kappa2,
            u1: complex_pairs(&frame.basis.v1),
            u2: complex_pairs(&frame.basis.v2),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::synthesize_partially_polarized;
    use crate::polarization::stokes;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn x_polarized_field() {
        let e = FieldEnsemble::new(vec![[c(2.0, 0.0), c(0.0, 0.0)]; 4], 0).unwrap();
        let s = tomography(&e);
        let expect = [4.0, 4.0, 0.0, 0.0];
        for (got, want) in [s.s0, s.s1, s.s2, s.s3].iter().zip(expect) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn circular_and_diagonal_signs() {
        let r = FieldEnsemble::new(vec![[c(1.0, 0.0), c(0.0, 1.0)]; 2], 0).unwrap();
        assert!((tomography(&r).s3 - 2.0).abs() < 1e-12);
        let d = FieldEnsemble::new(vec![[c(1.0, 0.0), c(1.0, 0.0)]; 2], 0).unwrap();
        assert!((tomography(&d).s2 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn agrees_with_moment_computation() {
        let e = synthesize_partially_polarized(0.45, 1.3, 5000, 3)
            .unwrap()
            .map(|r| [r[0] * c(0.6, 0.2) + r[1] * c(0.1, 0.7), r[1] * c(0.9, -0.1) + r[0] * c(-0.3, 0.4)]);
        let t = tomography(&e);
        let m = stokes(&e.coherence_matrix());
        for (x, y) in [t.s0, t.s1, t.s2, t.s3].iter().zip([m.s0, m.s1, m.s2, m.s3]) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn report_fields() {
        let e = synthesize_partially_polarized(0.125, 1.0, 100_000, 7).unwrap();
        let rep = TomographyReport::from_ensemble(&e).unwrap();
        let json = serde_json::to_value(&rep).unwrap();
        let keys: Vec<&str> = json.as_object().unwrap().keys().map(String::as_str).collect();
        for k in ["s0", "s1", "s2", "s3", "dop", "kappa1", "kappa2", "u1", "u2"] {
            assert!(keys.contains(&k), "{k}");
        }
        assert!((rep.dop - 0.125).abs() < 3.0 / (1e5f64).sqrt());
    }
}
