//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::f64::consts::{PI, SQRT_2};
use std::time::Instant;

use fieldbell::bell::lhv::{lhv_chsh, LhvRegistry};
use fieldbell::bell::{joint_probabilities, max_chsh, AngleSettings, Branch};
use fieldbell::ensemble::{synthesize_partially_polarized, FieldEnsemble};
use fieldbell::estimator::{EstimatorRegistry, ProbeContext};
use fieldbell::interferometer::{
    characterize, measure_joint_probabilities, run_bell_protocol, NoiseModel, ProtocolConfig,
};
use fieldbell::polarization::{dop, kappa_from_dop, SchmidtWeights, StokesVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn dop_from_stokes() -> Outcome {
    let d = dop(&StokesVector::new(1.0, -0.0827, -0.0920, -0.0158)).map_err(|e| e.to_string())?;
    check((d - 0.125).abs() <= 5e-4, format!("dop = {d:.6} (target 0.125 +/- 0.0005)"))
}

fn schmidt_coefficients() -> Outcome {
    let (k1, k2) = kappa_from_dop(0.125).map_err(|e| e.to_string())?;
    check(
        (k1 - 0.750).abs() <= 1e-3 && (k2 - 0.661).abs() <= 1e-3,
        format!("kappa = ({k1:.5}, {k2:.5}) (target (0.750, 0.661) +/- 0.001)"),
    )
}

fn ideal_chsh(dop: f64, target: f64) -> Outcome {
    let cfg = ProtocolConfig { dop, n: 1_000_000, seed: 2024, resamples: 10, ..ProtocolConfig::default() };
    let r = run_bell_protocol(&cfg).map_err(|e| e.to_string())?;
    check(
        (r.chsh - target).abs() <= 0.01,
        format!(
            "B = {:.5} +/- {:.5} at measured dop {:.5}, n = 1e6 (target {target:.5} +/- 0.01)",
            r.chsh,
            r.chsh_err.unwrap_or(f64::NAN),
            r.dop
        ),
    )
}

/// Least-squares fit of `c0 + c1 cos 2a + s1 sin 2a`.
#[allow(clippy::needless_range_loop)]
fn fit_harmonic(points: &[(f64, f64)]) -> impl Fn(f64) -> f64 {
    let basis = |a: f64| [1.0, (2.0 * a).cos(), (2.0 * a).sin()];
    let mut m = [[0.0; 3]; 3];
    let mut v = [0.0; 3];
    for &(a, c) in points {
        let f = basis(a);
        for i in 0..3 {
            v[i] += f[i] * c;
            for j in 0..3 {
                m[i][j] += f[i] * f[j];
            }
        }
    }
    // Gaussian elimination; the normal matrix is well conditioned on a full period.
    for col in 0..3 {
        for row in col + 1..3 {
            let factor = m[row][col] / m[col][col];
            for j in col..3 {
                m[row][j] -= factor * m[col][j];
            }
            v[row] -= factor * v[col];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        x[i] = (v[i] - (i + 1..3).map(|j| m[i][j] * x[j]).sum::<f64>()) / m[i][i];
    }
    move |a| basis(a).iter().zip(&x).map(|(f, c)| f * c).sum()
}

fn correlation_curves() -> Outcome {
    let n = 100_000usize;
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = fieldbell::cli::run(
        ["fieldbell", "scan", "--dop", "0", "--n", &n.to_string(), "--seed", "5", "--format", "json"],
        &mut out,
        &mut err,
    );
    if code != 0 {
        return Err(format!("scan exited with {code}: {}", String::from_utf8_lossy(&err)));
    }
    let v: serde_json::Value = serde_json::from_slice(&out).map_err(|e| e.to_string())?;
    let curves: Vec<(f64, Vec<(f64, f64)>)> = v["curves"]
        .as_array()
        .ok_or("no curves")?
        .iter()
        .map(|c| {
            let b = c["b_rad"].as_f64().unwrap();
            let pts = c["points"].as_array().unwrap();
            (b, pts.iter().map(|p| (p["a_rad"].as_f64().unwrap(), p["c"].as_f64().unwrap())).collect())
        })
        .collect();
    let tol = 5.0 / (n as f64).sqrt();
    let rms = |r: &mut dyn Iterator<Item = f64>| {
        let (s, k) = r.fold((0.0, 0usize), |(s, k), x| (s + x * x, k + 1));
        (s / k as f64).sqrt()
    };
    let spacing_ok = curves.len() == 12
        && curves.iter().enumerate().all(|(j, (b, _))| (b - j as f64 * PI / 12.0).abs() < 1e-12);
    let fit_rms = curves
        .iter()
        .map(|(b, pts)| rms(&mut pts.iter().map(|&(a, c)| c - (2.0 * (a - b)).cos())))
        .fold(0.0, f64::max);
    let reference = fit_harmonic(&curves[0].1);
    let collapse_rms = curves
        .iter()
        .map(|(b, pts)| rms(&mut pts.iter().map(|&(a, c)| c - reference(a - b))))
        .fold(0.0, f64::max);
    let points = curves.first().map_or(0, |c| c.1.len());
    check(
        spacing_ok && fit_rms < tol && collapse_rms < tol,
        format!(
            "{} curves x {points} points; worst RMS vs cos 2(a-b) = {fit_rms:.2e}, worst collapse RMS = {collapse_rms:.2e} (tolerance {tol:.2e})",
            curves.len()
        ),
    )
}

fn triple_path() -> Outcome {
    let registry = EstimatorRegistry::with_builtin();
    let paths = [registry.get("interferometer").unwrap(), registry.get("projection").unwrap()];
    let mut r = ChaCha8Rng::seed_from_u64(606);
    let n = 100_000;
    let stat_tol = 5.0 / (n as f64).sqrt();
    let (mut analytic, mut sampled) = (0.0f64, 0.0f64);
    let tuples = 24;
    for i in 0..tuples {
        let d: f64 = r.random_range(0.0..0.95);
        let (a, b): (f64, f64) = (r.random_range(0.0..PI), r.random_range(0.0..PI));
        let (k, l) = (Branch::BOTH[r.random_range(0..2)], Branch::BOTH[r.random_range(0..2)]);
        let w = SchmidtWeights::from_dop(d).unwrap();
        let oracle = joint_probabilities(&w, a, b)[k.index()][l.index()];

        let exact = FieldEnsemble::schmidt_form(w.kappa1, w.kappa2, 1.0, 4096).unwrap();
        let ctx = ProbeContext::new(&exact, NoiseModel::ideal(), i).unwrap();
        for p in &paths {
            let v = p.joint_probability(&ctx, a, b, k, l, 0).map_err(|e| e.to_string())?;
            analytic = analytic.max((v - oracle).abs());
        }

        let ens = synthesize_partially_polarized(d, 1.0, n, 1000 + i).unwrap();
        let (_, frame) = characterize(&ens).unwrap();
        let ctx = ProbeContext::with_frame(&ens, frame, NoiseModel::ideal(), i);
        for p in &paths {
            let v = p.joint_probability(&ctx, a, b, k, l, 0).map_err(|e| e.to_string())?;
            sampled = sampled.max((v - oracle).abs());
        }
    }
    check(
        analytic <= 1e-12 && sampled <= stat_tol,
        format!(
            "{tuples} tuples; analytic max deviation {analytic:.2e} (<= 1e-12), sampled max deviation {sampled:.2e} (<= {stat_tol:.2e}, n = 1e5)"
        ),
    )
}

fn bound_suite() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(707);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..50 {
        let w = SchmidtWeights::from_dop(r.random_range(0.0..=1.0)).unwrap();
        worst = worst.max(max_chsh(&w).0.abs());
    }
    let separable = max_chsh(&SchmidtWeights::new(1.0, 0.0).unwrap()).0;
    let samples = 200_000;
    let lhv_tol = 2.0 + 5.0 / (samples as f64).sqrt();
    let mut lhv = Vec::new();
    let mut lhv_ok = true;
    for model in LhvRegistry::with_builtin().iter() {
        let mut m = 0.0f64;
        let mut settings = vec![AngleSettings::new(0.0, PI / 4.0, PI / 8.0, 3.0 * PI / 8.0)];
        settings.extend((0..8).map(|_| {
            AngleSettings::new(r.random_range(0.0..PI), r.random_range(0.0..PI), r.random_range(0.0..PI), r.random_range(0.0..PI))
        }));
        for (i, s) in settings.iter().enumerate() {
            m = m.max(lhv_chsh(model, s, samples, 800 + i as u64).map_err(|e| e.to_string())?.abs());
        }
        lhv_ok &= m <= lhv_tol;
        lhv.push(format!("{}={m:.4}", model.name()));
    }
    check(
        worst <= 2.0 * SQRT_2 + 1e-9 && (separable - 2.0).abs() <= 1e-6 && lhv_ok,
        format!(
            "max |B| over 50 kappa pairs = {worst:.10} (<= 2 sqrt 2 + 1e-9); separable max = {separable:.9}; LHV {} (<= {lhv_tol:.4})",
            lhv.join(", ")
        ),
    )
}

fn spread(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    hi - lo
}

fn no_signaling() -> Outcome {
    let grid: Vec<f64> = (0..20).map(|i| i as f64 * PI / 20.0).collect();
    let marginal_spread = |table: &Vec<Vec<[[f64; 2]; 2]>>| {
        let mut worst = 0.0f64;
        for (i, row) in table.iter().enumerate() {
            for k in 0..2 {
                worst = worst.max(spread(row.iter().map(|p| p[k][0] + p[k][1])));
                worst = worst.max(spread(table.iter().map(|r| r[i][0][k] + r[i][1][k])));
            }
        }
        worst
    };
    let w = SchmidtWeights::from_dop(0.125).unwrap();
    let oracle: Vec<Vec<_>> = grid.iter().map(|&a| grid.iter().map(|&b| joint_probabilities(&w, a, b)).collect()).collect();
    let oracle_spread = marginal_spread(&oracle);

    let n = 100_000;
    let ens = synthesize_partially_polarized(0.125, 1.0, n, 88).unwrap();
    let (_, frame) = characterize(&ens).unwrap();
    let mut measured = Vec::new();
    for (i, &a) in grid.iter().enumerate() {
        let mut row = Vec::new();
        for (j, &b) in grid.iter().enumerate() {
            let seed = (i * 20 + j) as u64;
            row.push(measure_joint_probabilities(&ens, &frame, a, b, &NoiseModel::ideal(), seed).map_err(|e| e.to_string())?);
        }
        measured.push(row);
    }
    let measured_spread = marginal_spread(&measured);
    let tol = 5.0 / (n as f64).sqrt();
    check(
        oracle_spread < 1e-12 && measured_spread < tol,
        format!("20x20 grid; oracle marginal spread {oracle_spread:.2e} (< 1e-12), measured {measured_spread:.2e} (< {tol:.2e})"),
    )
}

pub const EXTINCTION_GRID: [f64; 7] = [0.0, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3, 1e-2];
pub const JITTER_GRID: [f64; 6] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];

fn imperfection_sweep() -> Outcome {
    let run = |noise: NoiseModel| {
        let cfg = ProtocolConfig { dop: 0.125, n: 100_000, seed: 9, resamples: 0, noise, ..ProtocolConfig::default() };
        run_bell_protocol(&cfg).map(|r| r.chsh).map_err(|e| e.to_string())
    };
    let sweep = |values: &[f64], make: &dyn Fn(f64) -> NoiseModel| -> Result<Vec<f64>, String> {
        values.iter().map(|&v| run(make(v))).collect()
    };
    let ext = sweep(&EXTINCTION_GRID, &|e| NoiseModel { extinction_ratio: e, ..NoiseModel::ideal() })?;
    let jit = sweep(&JITTER_GRID, &|j| NoiseModel { phase_jitter: j, ..NoiseModel::ideal() })?;
    let ok = |b: &[f64]| {
        b.windows(2).all(|w| w[1] < w[0])
            && (b[0] - 2.817).abs() <= 0.01
            && b.iter().any(|&x| x > 2.7)
            && b.iter().any(|&x| x < 2.5)
    };
    let show = |b: &[f64]| b.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ");
    check(
        ok(&ext) && ok(&jit),
        format!("extinction {:?} -> B [{}]; phase jitter {:?} -> B [{}]", EXTINCTION_GRID, show(&ext), JITTER_GRID, show(&jit)),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 DOP from measured Stokes values", dop_from_stokes),
        ("2 Schmidt coefficients at DOP 0.125", schmidt_coefficients),
        ("3 ideal CHSH maximum at DOP 0.125", || ideal_chsh(0.125, 2.817)),
        ("4 unpolarized limit", || ideal_chsh(0.0, 2.0 * SQRT_2)),
        ("5 shift-invariant correlation curves", correlation_curves),
        ("6 estimator agreement", triple_path),
        ("7 bound suite", bound_suite),
        ("8 no-signaling marginals", no_signaling),
        ("9 imperfection sweep", imperfection_sweep),
    ];
    let mut failures = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS criterion {name}: {d} [{secs:.1}s]"),
            Err(d) => {
                failures += 1;
                println!("FAIL criterion {name}: {d} [{secs:.1}s]");
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", 9 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
