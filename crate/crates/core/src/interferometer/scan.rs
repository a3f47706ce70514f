//! Correlation curves `C(a, b)` at fixed `b` over a grid of `a`.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::{measure_joint_grid_on, NoiseModel};
use crate::bell::correlation_from_probabilities;
use crate::ensemble::FieldEnsemble;
use crate::error::Result;
use crate::rng;
use crate::schmidt::SchmidtFrame;

/// Contiguous batches used for the standard error of each point.
pub const SCAN_BATCHES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub a_rad: f64,
    pub b_rad: f64,
    pub p11: f64,
    pub p12: f64,
    pub p21: f64,
    pub p22: f64,
    pub c: f64,
    pub c_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationCurve {
    pub b_rad: f64,
    pub points: Vec<CurvePoint>,
}

pub const CURVE_HEADER: &str = "a_rad,b_rad,p11,p12,p21,p22,c,c_err";

impl CorrelationCurve {
    pub fn write_csv_rows<W: Write + ?Sized>(&self, w: &mut W) -> std::io::Result<()> {
        for p in &self.points {
            let cols = [p.a_rad, p.b_rad, p.p11, p.p12, p.p21, p.p22, p.c, p.c_err].map(sig12);
            writeln!(w, "{}", cols.join(","))?;
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{CURVE_HEADER}")?;
        self.write_csv_rows(&mut w)
    }
}

/// Formats with 12 significant digits like C's `%.12g`.
pub fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let trim = |s: String| if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp) as usize;
        trim(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim(mantissa.to_string()))
    }
}

/// Measures `C(a, b)` for each `a` in `a_grid` through the interferometer.
///
/// Each point's error is the batch-means standard error: the ensemble is cut
/// into [`SCAN_BATCHES`] contiguous batches, each batch is measured with the
/// same polarizer settings, and `c_err = std(C_batch) / sqrt(batches)`.
pub fn scan_correlation(
    ensemble: &FieldEnsemble,
    frame: &SchmidtFrame,
    b: f64,
    a_grid: &[f64],
    noise: &NoiseModel,
    seed: u64,
) -> Result<CorrelationCurve> {
    let realizations = ensemble.realizations();
    let batches = SCAN_BATCHES.min(realizations.len() / 2);
    let batch_len = realizations.len() / batches.max(1);
    let points = a_grid
        .par_iter()
        .enumerate()
        .map(|(i, &a)| {
            let point_seed = rng::derive_seed(seed, &[i as u64]);
            let p = measure_joint_grid_on(realizations, frame, a, b, noise, point_seed)?;
            let c = correlation_from_probabilities(&p);
            let c_err = if batches >= 2 {
                let cs = (0..batches)
                    .map(|j| {
                        let end = if j + 1 == batches { realizations.len() } else { (j + 1) * batch_len };
                        let slice = &realizations[j * batch_len..end];
                        let s = rng::derive_seed(point_seed, &[1 + j as u64]);
                        measure_joint_grid_on(slice, frame, a, b, noise, s).map(|p| correlation_from_probabilities(&p))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                let m = cs.iter().sum::<f64>() / batches as f64;
                let var = cs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (batches - 1) as f64;
                (var / batches as f64).sqrt()
            } else {
                0.0
            };
            Ok(CurvePoint {
                a_rad: a,
                b_rad: b,
                p11: p[0][0],
                p12: p[0][1],
                p21: p[1][0],
                p22: p[1][1],
                c,
                c_err,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelationCurve { b_rad: b, points })
}
