use std::f64::consts::{PI, SQRT_2};

use fieldbell::bell::{
    chsh, correlation, correlation_closed_form, joint_probabilities, AngleSettings,
};
use fieldbell::ensemble::{synthesize_partially_polarized, FieldEnsemble};
use fieldbell::estimator::{EstimatorRegistry, ProbeContext};
use fieldbell::interferometer::NoiseModel;
use fieldbell::optics::{
    beamsplitter_split, function_inner, stripping_angle, stripping_angle_orthogonal, waveplate_jones, Jones,
    LabBasis, Polarizer, WavePlateKind,
};
use fieldbell::polarization::SchmidtWeights;
use fieldbell::schmidt::schmidt;
use fieldbell::tomography::tomography;
use fieldbell::C64;
use proptest::prelude::*;

fn close(a: &Jones, b: &Jones, tol: f64) -> bool {
    (0..4).all(|i| (a.0[i / 2][i % 2] - b.0[i / 2][i % 2]).norm() < tol)
}

fn unit_vector(re0: f64, im0: f64, re1: f64, im1: f64) -> Option<[C64; 2]> {
    let v = [C64::new(re0, im0), C64::new(re1, im1)];
    let norm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    (norm > 1e-3).then(|| [v[0] / norm, v[1] / norm])
}

fn angle() -> impl Strategy<Value = f64> {
    -2.0 * PI..2.0 * PI
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stripping_leaves_the_rotated_mode(dop in 0.01f64..0.99, b in angle(), seed in 0u64..1000) {
        let ens = synthesize_partially_polarized(dop, 1.0, 512, seed).unwrap();
        let d = schmidt(&ens).unwrap();
        let (k1, k2) = (d.kappa1(), d.kappa2());
        let rotated = d.modes.rotated(b);
        for (s, target) in [
            (stripping_angle(k1, k2, b).unwrap(), &rotated.g1),
            (stripping_angle_orthogonal(k1, k2, b).unwrap(), &rotated.g2),
        ] {
            let axis = d.frame.basis.axis(s);
            let stripped: Vec<C64> = ens.realizations().iter().map(|e| axis[0].conj() * e[0] + axis[1].conj() * e[1]).collect();
            let overlap = function_inner(target, &stripped).norm_sqr();
            let norm = function_inner(&stripped, &stripped).re;
            prop_assert!((overlap / norm - 1.0).abs() < 1e-10, "overlap {}", overlap / norm);
        }
    }

    #[test]
    fn polarizers_are_idempotent_projectors(re0 in -1.0f64..1.0, im0 in -1.0f64..1.0, re1 in -1.0f64..1.0, im1 in -1.0f64..1.0) {
        if let Some(axis) = unit_vector(re0, im0, re1, im1) {
            let p = Polarizer::new(axis).unwrap().jones();
            prop_assert!(close(&p.then_after(&p), &p, 1e-12));
            prop_assert!(close(&p.adjoint(), &p, 1e-12));
        }
    }

    #[test]
    fn waveplates_are_unitary(theta in angle()) {
        for kind in [WavePlateKind::Half, WavePlateKind::Quarter] {
            let w = waveplate_jones(kind, theta);
            prop_assert!(close(&w.adjoint().then_after(&w), &Jones::identity(), 1e-12));
        }
    }

    #[test]
    fn beamsplitter_conserves_power(seed in 0u64..1000, dop in 0.0f64..1.0) {
        let ens = synthesize_partially_polarized(dop, 2.0, 64, seed).unwrap();
        let (test, aux) = beamsplitter_split(&ens);
        for ((e, t), x) in ens.realizations().iter().zip(test.realizations()).zip(aux.realizations()) {
            let p = |v: &[C64; 2]| v[0].norm_sqr() + v[1].norm_sqr();
            prop_assert!((p(t) + p(x) - p(e)).abs() < 1e-12 * p(e).max(1.0));
        }
    }

    #[test]
    fn rotations_compose(a in angle(), b in angle(), n in 2usize..16) {
        let lab = LabBasis::standard();
        let (ab, seq) = (lab.rotated(a + b), lab.rotated(a).rotated(b));
        for i in 0..2 {
            prop_assert!((ab.v1[i] - seq.v1[i]).norm() < 1e-12 && (ab.v2[i] - seq.v2[i]).norm() < 1e-12);
        }
        let ens = synthesize_partially_polarized(0.3, 1.0, n.max(4), 3).unwrap();
        let modes = schmidt(&ens).unwrap().modes;
        let (ab, seq) = (modes.rotated(a + b), modes.rotated(a).rotated(b));
        for (x, y) in ab.g1.iter().zip(&seq.g1).chain(ab.g2.iter().zip(&seq.g2)) {
            prop_assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn chsh_respects_the_quantum_bound(dop in 0.0f64..=1.0, a in angle(), ap in angle(), b in angle(), bp in angle()) {
        let w = SchmidtWeights::from_dop(dop).unwrap();
        let s = AngleSettings::new(a, ap, b, bp);
        prop_assert!(chsh(&w, &s).abs() <= 2.0 * SQRT_2 + 1e-9);
        if dop == 1.0 {
            prop_assert!(chsh(&w, &s).abs() <= 2.0 + 1e-9);
        }
    }

    #[test]
    fn probabilities_are_complete_and_non_signaling(dop in 0.0f64..=1.0, a in angle(), b1 in angle(), b2 in angle()) {
        let w = SchmidtWeights::from_dop(dop).unwrap();
        let (p, q) = (joint_probabilities(&w, a, b1), joint_probabilities(&w, a, b2));
        prop_assert!((p.iter().flatten().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().flatten().all(|&x| (0.0..=1.0 + 1e-15).contains(&x)));
        for k in 0..2 {
            prop_assert!((p[k][0] + p[k][1] - q[k][0] - q[k][1]).abs() < 1e-12);
        }
        let (r, t) = (joint_probabilities(&w, b1, a), joint_probabilities(&w, b2, a));
        for l in 0..2 {
            prop_assert!((r[0][l] + r[1][l] - t[0][l] - t[1][l]).abs() < 1e-12);
        }
    }

    #[test]
    fn measured_paths_match_the_oracle_on_schmidt_form(dop in 0.0f64..0.95, a in angle(), b in angle()) {
        let w = SchmidtWeights::from_dop(dop).unwrap();
        let ens = FieldEnsemble::schmidt_form(w.kappa1, w.kappa2, 1.3, 256).unwrap();
        let ctx = ProbeContext::new(&ens, NoiseModel::ideal(), 0).unwrap();
        let oracle = joint_probabilities(&w, a, b);
        let registry = EstimatorRegistry::with_builtin();
        for est in registry.iter() {
            let p = est.joint_probabilities(&ctx, a, b, 0).unwrap();
            for i in 0..4 {
                prop_assert!((p[i / 2][i % 2] - oracle[i / 2][i % 2]).abs() < 1e-12, "{}", est.name());
            }
        }
    }

    #[test]
    fn tomography_is_physical(dop in 0.0f64..=1.0, seed in 0u64..1000, n in 2usize..64) {
        let s = tomography(&synthesize_partially_polarized(dop, 1.0, n, seed).unwrap());
        prop_assert!(s.s0 > 0.0);
        prop_assert!(s.dop().unwrap() <= 1.0 + 1e-12);
    }

    #[test]
    fn schmidt_decomposition_reconstructs_the_field(dop in 0.0f64..1.0, seed in 0u64..1000) {
        let ens = synthesize_partially_polarized(dop, 1.0, 128, seed).unwrap();
        let d = schmidt(&ens).unwrap();
        prop_assert!(d.modes.orthonormality_defect() < 1e-10);
        for (i, e) in ens.realizations().iter().enumerate() {
            let r = d.reconstruct(i);
            prop_assert!((r[0] - e[0]).norm() < 1e-10 && (r[1] - e[1]).norm() < 1e-10);
        }
    }
}

#[test]
fn closed_form_matches_probability_sum_on_a_grid() {
    for dop in [0.0, 0.125, 0.5, 0.9, 1.0] {
        let w = SchmidtWeights::from_dop(dop).unwrap();
        for i in 0..100 {
            for j in 0..100 {
                let (a, b) = (i as f64 * PI / 100.0, j as f64 * PI / 100.0);
                assert!((correlation(&w, a, b) - correlation_closed_form(&w, a, b)).abs() < 1e-12);
            }
        }
    }
}
