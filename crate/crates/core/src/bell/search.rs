//! Maximizing the CHSH value over the four angles.
//!
//! Every correlation is pi-periodic in each angle, so the search covers
//! `[0, pi)^4`: an exhaustive grid of step `pi/GRID_STEPS` followed by
//! coordinate-wise golden-section refinement.

use std::f64::consts::PI;

use super::{chsh, correlation_closed_form, AngleSettings};
use crate::polarization::SchmidtWeights;

pub const GRID_STEPS: usize = 96;

const REFINE_TOL: f64 = 1e-8;
const TIE_EPS: f64 = 1e-12;

/// `2 sqrt(1 + 4 k1^2 k2^2)`, equivalently `2 sqrt(2 - dop^2)`.
pub fn max_chsh_closed_form(w: &SchmidtWeights) -> f64 {
    2.0 * (1.0 + 4.0 * (w.kappa1 * w.kappa2).powi(2)).sqrt()
}

/// Largest CHSH value and angles achieving it.
///
/// The grid maximum is exact over the grid: for each `(b, b')` the `a` and
/// `a'` terms separate. Ties go to the lexicographically smallest
/// `(a, a', b, b')` in grid order.
pub fn max_chsh(w: &SchmidtWeights) -> (f64, AngleSettings) {
    let step = PI / GRID_STEPS as f64;
    let angle = |i: usize| i as f64 * step;
    let table: Vec<Vec<f64>> = (0..GRID_STEPS)
        .map(|i| (0..GRID_STEPS).map(|j| correlation_closed_form(w, angle(i), angle(j))).collect())
        .collect();

    // First index attaining the maximum of f over the grid.
    let argmax = |f: &dyn Fn(usize) -> f64| {
        let mut best = (0, f(0));
        for i in 1..GRID_STEPS {
            let v = f(i);
            if v > best.1 + TIE_EPS {
                best = (i, v);
            }
        }
        best
    };

    let mut best: Option<(f64, [usize; 4])> = None;
    for b in 0..GRID_STEPS {
        for bp in 0..GRID_STEPS {
            let (ia, va) = argmax(&|i| table[i][b] - table[i][bp]);
            let (iap, vap) = argmax(&|i| table[i][b] + table[i][bp]);
            let value = va + vap;
            let idx = [ia, iap, b, bp];
            let better = match best {
                None => true,
                Some((v, prev)) => value > v + TIE_EPS || ((value - v).abs() <= TIE_EPS && idx < prev),
            };
            if better {
                best = Some((value, idx));
            }
        }
    }
    let (_, idx) = best.expect("non-empty grid");
    let mut x = idx.map(angle);
    refine(w, &mut x, step);
    let settings = AngleSettings::new(x[0], x[1], x[2], x[3]);
    (chsh(w, &settings), settings)
}

fn refine(w: &SchmidtWeights, x: &mut [f64; 4], half_width: f64) {
    let objective = |x: &[f64; 4]| chsh(w, &AngleSettings::new(x[0], x[1], x[2], x[3]));
    let mut value = objective(x);
    for _ in 0..100 {
        let start = *x;
        for coord in 0..4 {
            let mut probe = *x;
            let t = golden_max(
                |t| {
                    probe[coord] = t;
                    objective(&probe)
                },
                x[coord] - half_width,
                x[coord] + half_width,
            );
            let mut cand = *x;
            cand[coord] = t;
            let v = objective(&cand);
            if v >= value {
                *x = cand;
                value = v;
            }
        }
        let moved = x.iter().zip(&start).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if moved < REFINE_TOL {
            break;
        }
    }
    for t in x.iter_mut() {
        *t = t.rem_euclid(PI);
    }
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
fn golden_max(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > REFINE_TOL {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}
