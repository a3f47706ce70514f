//! Sampling behaviour of the synthesized source.

use fieldbell::ensemble::synthesize_partially_polarized;
use fieldbell::tomography::tomography;

#[test]
fn dop_estimate_converges_at_root_n() {
    let n = 10_000;
    let tol = 5.0 / (n as f64).sqrt();
    for dop in [0.125, 0.6] {
        let within = (0..100u64)
            .filter(|&seed| {
                let s = tomography(&synthesize_partially_polarized(dop, 1.0, n, seed).unwrap());
                (s.dop().unwrap() - dop).abs() < tol
            })
            .count();
        assert!(within >= 99, "dop {dop}: only {within}/100 seeds within {tol}");
    }
}

#[test]
fn intensity_estimate_converges_at_root_n() {
    let n = 10_000;
    let within = (0..100u64)
        .filter(|&seed| {
            let e = synthesize_partially_polarized(0.3, 2.0, n, seed).unwrap();
            (e.intensity() / 2.0 - 1.0).abs() < 5.0 / (n as f64).sqrt()
        })
        .count();
    assert!(within >= 99, "{within}/100");
}

#[test]
fn error_shrinks_tenfold_over_two_decades() {
    let spread = |n: usize| {
        let v: Vec<f64> = (0..40u64)
            .map(|s| tomography(&synthesize_partially_polarized(0.3, 1.0, n, s).unwrap()).dop().unwrap())
            .collect();
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
    };
    let ratio = spread(1_000) / spread(100_000);
    assert!((5.0..20.0).contains(&ratio), "ratio {ratio}");
}
