use rand::Rng;
use rayon::prelude::*;

use crate::ensemble::FieldEnsemble;
use crate::error::{Error, Result};
use crate::rng;

/// Bootstrap standard error of `pipeline` over realizations.
///
/// Resample `r` draws `n` indices with replacement from stream
/// `derive_seed(seed, [r])`, so the result is independent of scheduling.
/// Returns the sample standard deviation of the `resamples` estimates.
pub fn bootstrap_error<F>(ensemble: &FieldEnsemble, pipeline: F, resamples: usize, seed: u64) -> Result<f64>
where
    F: Fn(&FieldEnsemble) -> Result<f64> + Sync,
{
    if resamples < 10 {
        return Err(Error::domain(format!("bootstrap needs at least 10 resamples, got {resamples}")));
    }
    let n = ensemble.len();
    let estimates = (0..resamples)
        .into_par_iter()
        .map(|r| {
            let mut g = rng::stream(rng::derive_seed(seed, &[r as u64]), 0);
            let idx: Vec<usize> = (0..n).map(|_| g.random_range(0..n)).collect();
            pipeline(&ensemble.select(&idx)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = estimates.iter().sum::<f64>() / resamples as f64;
    let var = estimates.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (resamples - 1) as f64;
    Ok(var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::synthesize_partially_polarized;
    use crate::polarization::{dop, stokes};
    use crate::C64;

    fn dop_of(e: &FieldEnsemble) -> Result<f64> {
        dop(&stokes(&e.coherence_matrix()))
    }

    #[test]
    fn constant_ensemble_has_zero_error() {
        let e = FieldEnsemble::new(vec![[C64::new(1.0, 0.5), C64::new(0.2, 0.0)]; 100], 0).unwrap();
        assert_eq!(bootstrap_error(&e, dop_of, 20, 1).unwrap(), 0.0);
    }

    #[test]
    fn deterministic_and_validated() {
        let e = synthesize_partially_polarized(0.3, 1.0, 2000, 4).unwrap();
        let x = bootstrap_error(&e, dop_of, 16, 7).unwrap();
        let y = bootstrap_error(&e, dop_of, 16, 7).unwrap();
        assert_eq!(x, y);
        assert!(bootstrap_error(&e, dop_of, 9, 7).is_err());
    }

    #[test]
    fn error_scales_as_inverse_sqrt_n() {
        let ns = [1_000usize, 10_000, 100_000];
        let errs: Vec<f64> = ns
            .iter()
            .map(|&n| {
                let e = synthesize_partially_polarized(0.3, 1.0, n, 31).unwrap();
                bootstrap_error(&e, dop_of, 60, 2).unwrap()
            })
            .collect();
        let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
        let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
        let mx = xs.iter().sum::<f64>() / 3.0;
        let my = ys.iter().sum::<f64>() / 3.0;
        let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        assert!((slope + 0.5).abs() < 0.1, "slope {slope}, errors {errs:?}");
    }
}
