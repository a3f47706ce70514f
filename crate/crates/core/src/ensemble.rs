//! Finite ensembles of a stochastic two-component field.
//!
//! Realization `n` holds the complex pair `(E_x, E_y)`. The amplitude
//! ("function") space is the space of length-`N` sequences with inner product
//! `<f|g> = (1/N) sum conj(f_n) g_n`, and all intensities are ensemble means.

use std::io::{BufRead, Read, Write};

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::polarization::CoherenceMatrix;
use crate::rng;
use crate::C64;

/// Chunk length for deterministic parallel reductions.
pub(crate) const REDUCE_CHUNK: usize = 1 << 14;

/// Neumaier-compensated running sum. Ensembles of identical realizations
/// would otherwise accumulate rounding error linearly in their length.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

pub(crate) fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::default();
    xs.into_iter().for_each(|x| acc.add(x));
    acc.value()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldEnsemble {
    realizations: Vec<[C64; 2]>,
    seed: u64,
}

impl FieldEnsemble {
    pub fn new(realizations: Vec<[C64; 2]>, seed: u64) -> Result<Self> {
        if realizations.len() < 2 {
            return Err(Error::domain(format!(
                "an ensemble needs at least 2 realizations, got {}",
                realizations.len()
            )));
        }
        if realizations.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::domain("non-finite field amplitude"));
        }
        Ok(Self { realizations, seed })
    }

    /// Ensemble in exact Schmidt form `sqrt(I) (k1 x f1 + k2 y f2)` with
    /// `f1 = (1, 1, ..)` and `f2 = (1, -1, ..)`, which are orthonormal under
    /// the `1/N` inner product for even `n`.
    ///
    /// Every second-order quantity of this ensemble is known in closed form,
    /// so it is the reference input for exact (1e-12) comparisons.
    pub fn schmidt_form(kappa1: f64, kappa2: f64, intensity: f64, n: usize) -> Result<Self> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::domain(format!("schmidt_form needs an even n >= 2, got {n}")));
        }
        if kappa1 < 0.0 || kappa2 < 0.0 || ((kappa1 * kappa1 + kappa2 * kappa2) - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("invalid Schmidt weights ({kappa1}, {kappa2})")));
        }
        if !(intensity > 0.0) {
            return Err(Error::domain("intensity must be positive"));
        }
        let amp = intensity.sqrt();
        let realizations = (0..n)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                [C64::new(amp * kappa1, 0.0), C64::new(amp * kappa2 * sign, 0.0)]
            })
            .collect();
        Self::new(realizations, 0)
    }

    pub fn len(&self) -> usize {
        self.realizations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.realizations.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn realizations(&self) -> &[[C64; 2]] {
        &self.realizations
    }

    pub fn into_realizations(self) -> Vec<[C64; 2]> {
        self.realizations
    }

    /// Ensemble-mean power `(1/N) sum |E_x|^2 + |E_y|^2`.
    pub fn intensity(&self) -> f64 {
        self.mean_of(|e| e[0].norm_sqr() + e[1].norm_sqr())
    }

    /// Applies a 2x2 Jones matrix to every realization.
    pub fn map_jones(&self, m: &crate::optics::Jones) -> FieldEnsemble {
        self.map(|e| m.apply(e))
    }

    pub fn map(&self, f: impl Fn(&[C64; 2]) -> [C64; 2] + Sync + Send) -> FieldEnsemble {
        FieldEnsemble {
            realizations: self.realizations.par_iter().map(f).collect(),
            seed: self.seed,
        }
    }

    pub fn scale(&self, factor: C64) -> FieldEnsemble {
        self.map(|e| [e[0] * factor, e[1] * factor])
    }

    /// Deterministic ensemble mean of `f` over realizations: chunk partials
    /// are computed in parallel and summed in index order.
    pub fn mean_of(&self, f: impl Fn(&[C64; 2]) -> f64 + Sync + Send) -> f64 {
        let partials: Vec<f64> = self
            .realizations
            .par_chunks(REDUCE_CHUNK)
            .map(|chunk| compensated_sum(chunk.iter().map(&f)))
            .collect();
        compensated_sum(partials) / self.len() as f64
    }

    /// Complex counterpart of [`mean_of`](Self::mean_of).
    pub fn mean_of_complex(&self, f: impl Fn(usize, &[C64; 2]) -> C64 + Sync + Send) -> C64 {
        let partials: Vec<(f64, f64)> = self
            .realizations
            .par_chunks(REDUCE_CHUNK)
            .enumerate()
            .map(|(c, chunk)| {
                let (mut re, mut im) = (CompensatedSum::default(), CompensatedSum::default());
                for (i, e) in chunk.iter().enumerate() {
                    let z = f(c * REDUCE_CHUNK + i, e);
                    re.add(z.re);
                    im.add(z.im);
                }
                (re.value(), im.value())
            })
            .collect();
        let re = compensated_sum(partials.iter().map(|p| p.0));
        let im = compensated_sum(partials.iter().map(|p| p.1));
        C64::new(re, im) / self.len() as f64
    }

    pub fn coherence_matrix(&self) -> CoherenceMatrix {
        CoherenceMatrix::from_ensemble(self)
    }

    /// Resamples realizations by index (used by the bootstrap).
    pub fn select(&self, indices: &[usize]) -> Result<FieldEnsemble> {
        let realizations = indices.iter().map(|&i| self.realizations[i]).collect();
        FieldEnsemble::new(realizations, self.seed)
    }

    /// Writes `index,re_Ex,im_Ex,re_Ey,im_Ey` CSV.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "index,re_Ex,im_Ex,re_Ey,im_Ey")?;
        for (i, e) in self.realizations.iter().enumerate() {
            writeln!(w, "{i},{:e},{:e},{:e},{:e}", e[0].re, e[0].im, e[1].re, e[1].im)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R, seed: u64) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty CSV".into()))??;
        if header.trim() != "index,re_Ex,im_Ex,re_Ey,im_Ey" {
            return Err(Error::Format(format!("unexpected header `{header}`")));
        }
        let mut realizations = Vec::new();
        for (row, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 5 {
                return Err(Error::Format(format!("row {row}: expected 5 columns")));
            }
            let idx: usize = cols[0]
                .parse()
                .map_err(|_| Error::Format(format!("row {row}: bad index `{}`", cols[0])))?;
            if idx != realizations.len() {
                return Err(Error::Format(format!("row {row}: index {idx} out of order")));
            }
            let mut v = [0.0; 4];
            for (slot, s) in v.iter_mut().zip(&cols[1..]) {
                *slot = s
                    .parse()
                    .map_err(|_| Error::Format(format!("row {row}: bad number `{s}`")))?;
            }
            realizations.push([C64::new(v[0], v[1]), C64::new(v[2], v[3])]);
        }
        Self::new(realizations, seed)
    }

    /// Columnar little-endian binary: magic `FBEN`, version u32, n u64,
    /// seed u64, then the four columns re_Ex, im_Ex, re_Ey, im_Ey as f64.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&BINARY_VERSION.to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        let columns: [fn(&[C64; 2]) -> f64; 4] =
            [|e| e[0].re, |e| e[0].im, |e| e[1].re, |e| e[1].im];
        for col in columns {
            for e in &self.realizations {
                w.write_all(&col(e).to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != BINARY_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let n = usize::try_from(u64::from_le_bytes(b8))
            .map_err(|_| Error::Format("realization count overflows usize".into()))?;
        r.read_exact(&mut b8)?;
        let seed = u64::from_le_bytes(b8);
        let mut columns = vec![vec![0.0f64; n]; 4];
        for col in &mut columns {
            for v in col.iter_mut() {
                r.read_exact(&mut b8)?;
                *v = f64::from_le_bytes(b8);
            }
        }
        let realizations = (0..n)
            .map(|i| {
                [
                    C64::new(columns[0][i], columns[1][i]),
                    C64::new(columns[2][i], columns[3][i]),
                ]
            })
            .collect();
        Self::new(realizations, seed)
    }
}

const BINARY_MAGIC: &[u8; 4] = b"FBEN";
const BINARY_VERSION: u32 = 1;

/// Draws `n` realizations of a partially polarized thermal beam.
///
/// `E_x` and `E_y` are independent circular complex Gaussians with mean
/// powers `intensity (1 + dop) / 2` and `intensity (1 - dop) / 2`, so the
/// expected degree of polarization is `dop` with the excess power along x.
/// Realizations are generated in blocks of [`rng::BLOCK`], block `k` drawing
/// from stream `k`, so the output depends only on `(dop, intensity, n, seed)`.
pub fn synthesize_partially_polarized(
    dop: f64,
    intensity: f64,
    n: usize,
    seed: u64,
) -> Result<FieldEnsemble> {
    if !(0.0..=1.0).contains(&dop) {
        return Err(Error::domain(format!("dop must lie in [0, 1], got {dop}")));
    }
    if !(intensity > 0.0) || !intensity.is_finite() {
        return Err(Error::domain(format!("intensity must be positive, got {intensity}")));
    }
    if n < 2 {
        return Err(Error::domain(format!("n must be at least 2, got {n}")));
    }
    // Each quadrature of a circular Gaussian with mean power p has variance p/2.
    let sx = (intensity * (1.0 + dop) / 4.0).sqrt();
    let sy = (intensity * (1.0 - dop) / 4.0).sqrt();
    let blocks = n.div_ceil(rng::BLOCK);
    let realizations: Vec<[C64; 2]> = (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut r = rng::stream(seed, b as u64);
            let len = rng::BLOCK.min(n - b * rng::BLOCK);
            (0..len)
                .map(|_| {
                    let g: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut r));
                    [C64::new(sx * g[0], sx * g[1]), C64::new(sy * g[2], sy * g[3])]
                })
                .collect::<Vec<_>>()
        })
        .collect();
    FieldEnsemble::new(realizations, seed)
}
