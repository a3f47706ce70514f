//! Closed-form Bell quantities for a field in Schmidt form
//! `k1 u1 f1 + k2 u2 f2`.
//!
//! Rotated bases follow `x1(t) = cos t x1 - sin t x2`, `x2(t) = sin t x1 +
//! cos t x2` in both spaces, which gives real joint amplitudes
//!
//! ```text
//! A11 = k1 cos a cos b + k2 sin a sin b     A12 = k1 cos a sin b - k2 sin a cos b
//! A21 = k1 sin a cos b - k2 cos a sin b     A22 = k1 sin a sin b + k2 cos a cos b
//! ```
//!
//! and `P_kl = A_kl^2`.

pub mod lhv;
mod search;

use serde::{Deserialize, Serialize};

use crate::polarization::SchmidtWeights;

pub use search::{max_chsh, max_chsh_closed_form, GRID_STEPS};

/// Outcome index `k` (lab space) or `l` (function space).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Branch {
    One,
    Two,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::One, Branch::Two];

    /// +1 for the first basis vector, -1 for the second.
    pub fn sign(self) -> f64 {
        match self {
            Branch::One => 1.0,
            Branch::Two => -1.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Branch::One => 0,
            Branch::Two => 1,
        }
    }

    pub fn other(self) -> Branch {
        match self {
            Branch::One => Branch::Two,
            Branch::Two => Branch::One,
        }
    }

    pub fn from_index(i: u8) -> Option<Branch> {
        match i {
            1 => Some(Branch::One),
            2 => Some(Branch::Two),
            _ => None,
        }
    }
}

/// The four CHSH angles, radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleSettings {
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub b_prime: f64,
}

impl AngleSettings {
    pub fn new(a: f64, a_prime: f64, b: f64, b_prime: f64) -> Self {
        Self { a, a_prime, b, b_prime }
    }

    /// The four `(a, b)` pairs with their CHSH signs, in the order
    /// `(a,b), (a,b'), (a',b), (a',b')`.
    pub fn terms(&self) -> [(f64, f64, f64); 4] {
        [
            (self.a, self.b, 1.0),
            (self.a, self.b_prime, -1.0),
            (self.a_prime, self.b, 1.0),
            (self.a_prime, self.b_prime, 1.0),
        ]
    }

    pub fn is_finite(&self) -> bool {
        [self.a, self.a_prime, self.b, self.b_prime].iter().all(|x| x.is_finite())
    }
}

pub fn joint_amplitude(w: &SchmidtWeights, a: f64, b: f64, k: Branch, l: Branch) -> f64 {
    let (sa, ca) = a.sin_cos();
    let (sb, cb) = b.sin_cos();
    let (k1, k2) = (w.kappa1, w.kappa2);
    match (k, l) {
        (Branch::One, Branch::One) => k1 * ca * cb + k2 * sa * sb,
        (Branch::One, Branch::Two) => k1 * ca * sb - k2 * sa * cb,
        (Branch::Two, Branch::One) => k1 * sa * cb - k2 * ca * sb,
        (Branch::Two, Branch::Two) => k1 * sa * sb + k2 * ca * cb,
    }
}

/// `P_kl(a, b) = |<f_l^b; u_k^a | e>|^2`.
pub fn joint_probability_direct(w: &SchmidtWeights, a: f64, b: f64, k: Branch, l: Branch) -> f64 {
    joint_amplitude(w, a, b, k, l).powi(2)
}

/// `[[P11, P12], [P21, P22]]`.
pub fn joint_probabilities(w: &SchmidtWeights, a: f64, b: f64) -> [[f64; 2]; 2] {
    Branch::BOTH.map(|k| Branch::BOTH.map(|l| joint_probability_direct(w, a, b, k, l)))
}

/// `P11 - P12 - P21 + P22`.
pub fn correlation_from_probabilities(p: &[[f64; 2]; 2]) -> f64 {
    p[0][0] - p[0][1] - p[1][0] + p[1][1]
}

pub fn correlation(w: &SchmidtWeights, a: f64, b: f64) -> f64 {
    correlation_from_probabilities(&joint_probabilities(w, a, b))
}

/// `cos 2a cos 2b + 2 k1 k2 sin 2a sin 2b`.
pub fn correlation_closed_form(w: &SchmidtWeights, a: f64, b: f64) -> f64 {
    (2.0 * a).cos() * (2.0 * b).cos() + 2.0 * w.kappa1 * w.kappa2 * (2.0 * a).sin() * (2.0 * b).sin()
}

/// Lab-space outcome `A(a) = P(u1^a) - P(u2^a) = (k1^2 - k2^2) cos 2a`.
pub fn marginal_a(w: &SchmidtWeights, a: f64) -> f64 {
    let p = joint_probabilities(w, a, 0.0);
    (p[0][0] + p[0][1]) - (p[1][0] + p[1][1])
}

/// Function-space outcome `B(b) = P(f1^b) - P(f2^b) = (k1^2 - k2^2) cos 2b`.
pub fn marginal_b(w: &SchmidtWeights, b: f64) -> f64 {
    let p = joint_probabilities(w, 0.0, b);
    (p[0][0] + p[1][0]) - (p[0][1] + p[1][1])
}

/// CHSH combination of an arbitrary correlation function.
pub fn chsh_with(settings: &AngleSettings, mut c: impl FnMut(f64, f64) -> f64) -> f64 {
    settings.terms().iter().map(|&(a, b, s)| s * c(a, b)).sum()
}

/// `C(a,b) - C(a,b') + C(a',b) + C(a',b')`.
pub fn chsh(w: &SchmidtWeights, settings: &AngleSettings) -> f64 {
    chsh_with(settings, |a, b| correlation(w, a, b))
}
