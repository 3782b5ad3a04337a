//! Finite-strength Gaussian pointers.
//!
//! Each observable is coupled to its own pointer with initial wavepacket
//! `φ(q) = (ε/2π)^{1/4} exp(−εq²/4)`; the pointer position variance is `1/ε`.
//! Splitting the observables into rank-1 eigenbranches, the joint reading
//! density is a finite sum of products of shifted Gaussians, and all moments
//! follow in closed form. The weak limit is `ε → 0`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{KrausChannel, MIN_DENOMINATOR};
use crate::correlators::{expect_dim, real, Instant};
use crate::error::{Error, Result};
use crate::matcore::{herm_eig, CMatrix};
use crate::states::{DensityMatrix, Observable};

const MIN_GRID_POINTS: usize = 64;
const MIN_SAMPLES: usize = 1000;
const MASS_TOL: f64 = 1e-6;
const NEGATIVE_TOL: f64 = 1e-9;
const CHUNK: usize = 1 << 16;

/// Pointer strength and sampler grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointerConfig {
    pub epsilon: f64,
    /// Grid margin beyond the eigenvalue range, in pointer standard deviations.
    pub grid_halfwidth_sigmas: f64,
    /// Cells per axis.
    pub grid_points: usize,
    pub seed: u64,
}

impl PointerConfig {
    pub fn new(epsilon: f64) -> Self {
        PointerConfig { epsilon, grid_halfwidth_sigmas: 6.0, grid_points: 512, seed: 0 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_epsilon(self.epsilon)?;
        if self.grid_points < MIN_GRID_POINTS {
            return Err(Error::OutOfRange {
                name: "grid_points",
                value: self.grid_points as f64,
                range: ">= 64",
            });
        }
        if !(self.grid_halfwidth_sigmas.is_finite() && self.grid_halfwidth_sigmas > 0.0) {
            return Err(Error::OutOfRange {
                name: "grid_halfwidth_sigmas",
                value: self.grid_halfwidth_sigmas,
                range: "> 0",
            });
        }
        Ok(())
    }
}

fn check_epsilon(eps: f64) -> Result<()> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::OutOfRange { name: "epsilon", value: eps, range: "> 0" });
    }
    Ok(())
}

/// Branch amplitudes `T_{aa'bb'} = Tr[ρ_fi Q_b (Σ p_z M_z P_a ρ_in P_a' M_z†) Q_b']`
/// over rank-1 eigenprojectors `P_a` of `O_1` and `Q_b` of `O_2`.
#[derive(Debug, Clone)]
struct Branches {
    o: Vec<f64>,
    w: Vec<f64>,
    t: Vec<Complex64>,
}

impl Branches {
    fn build(
        rho_in: &DensityMatrix,
        rho_fi: Option<&DensityMatrix>,
        ch: &KrausChannel,
        o1: &Observable,
        o2: &Observable,
    ) -> Result<Self> {
        expect_dim("ρ_in", rho_in.dim(), ch.d_in())?;
        expect_dim("O_1", o1.dim(), ch.d_in())?;
        expect_dim("O_2", o2.dim(), ch.d_out())?;
        if let Some(fi) = rho_fi {
            expect_dim("ρ_fi", fi.dim(), ch.d_out())?;
        }
        let e1 = herm_eig(o1.matrix())?;
        let e2 = herm_eig(o2.matrix())?;
        let (u, v) = (&e1.vectors, &e2.vectors);
        let (n1, n2) = (ch.d_in(), ch.d_out());
        let rho_u = &(&u.dagger() * rho_in.matrix()) * u;
        let f = match rho_fi {
            Some(fi) => &(&v.dagger() * fi.matrix()) * v,
            None => CMatrix::identity(n2),
        };
        let mut t = vec![Complex64::new(0.0, 0.0); n1 * n1 * n2 * n2];
        for (p, m) in ch.elements() {
            let k = &(&v.dagger() * m) * u;
            for a in 0..n1 {
                for a2 in 0..n1 {
                    let r = rho_u[(a, a2)] * *p;
                    for b in 0..n2 {
                        let left = r * k[(b, a)];
                        for b2 in 0..n2 {
                            t[((a * n1 + a2) * n2 + b) * n2 + b2] += left * k[(b2, a2)].conj() * f[(b2, b)];
                        }
                    }
                }
            }
        }
        Ok(Branches { o: e1.values, w: e2.values, t })
    }

    fn index(&self, a: usize, a2: usize, b: usize, b2: usize) -> usize {
        let (n1, n2) = (self.o.len(), self.w.len());
        ((a * n1 + a2) * n2 + b) * n2 + b2
    }

    /// `Σ T · g(o_a, o_a') · h(w_b, w_b')`.
    fn contract(&self, g: impl Fn(f64, f64) -> f64, h: impl Fn(f64, f64) -> f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, &oa) in self.o.iter().enumerate() {
            for (a2, &oa2) in self.o.iter().enumerate() {
                let ga = g(oa, oa2);
                for (b, &wb) in self.w.iter().enumerate() {
                    for (b2, &wb2) in self.w.iter().enumerate() {
                        acc += self.t[self.index(a, a2, b, b2)] * (ga * h(wb, wb2));
                    }
                }
            }
        }
        acc
    }
}

fn g0(eps: f64) -> impl Fn(f64, f64) -> f64 {
    move |x, y| (-eps * (x - y) * (x - y) / 8.0).exp()
}

fn g1(eps: f64) -> impl Fn(f64, f64) -> f64 {
    move |x, y| 0.5 * (x + y) * (-eps * (x - y) * (x - y) / 8.0).exp()
}

/// Exact first moments of the two pointer readings at finite strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointerMoments {
    /// `E(q1 q2)`.
    pub corr: f64,
    /// `E(q1)`.
    pub first: f64,
    /// `E(q2)`.
    pub second: f64,
}

/// Closed-form pointer moments at strength `eps`, no grids involved.
pub fn finite_eps_moments(
    rho_in: &DensityMatrix,
    rho_fi: Option<&DensityMatrix>,
    ch: &KrausChannel,
    o1: &Observable,
    o2: &Observable,
    eps: f64,
) -> Result<PointerMoments> {
    check_epsilon(eps)?;
    let br = Branches::build(rho_in, rho_fi, ch, o1, o2)?;
    let z = real(br.contract(g0(eps), g0(eps)))?;
    if z <= MIN_DENOMINATOR {
        return Err(Error::IncompatibleBoundary { denominator: z });
    }
    Ok(PointerMoments {
        corr: real(br.contract(g1(eps), g1(eps)) / z)?,
        first: real(br.contract(g1(eps), g0(eps)) / z)?,
        second: real(br.contract(g0(eps), g1(eps)) / z)?,
    })
}

/// `E(q1 q2)` at strength `eps`.
pub fn finite_eps_corr(
    rho_in: &DensityMatrix,
    rho_fi: Option<&DensityMatrix>,
    ch: &KrausChannel,
    o1: &Observable,
    o2: &Observable,
    eps: f64,
) -> Result<f64> {
    Ok(finite_eps_moments(rho_in, rho_fi, ch, o1, o2, eps)?.corr)
}

/// Mean of one pointer reading at strength `eps`. Both observables are needed
/// since each measurement disturbs the other's statistics.
pub fn finite_eps_single(
    rho_in: &DensityMatrix,
    rho_fi: Option<&DensityMatrix>,
    ch: &KrausChannel,
    o1: &Observable,
    o2: &Observable,
    eps: f64,
    which: Instant,
) -> Result<f64> {
    let m = finite_eps_moments(rho_in, rho_fi, ch, o1, o2, eps)?;
    Ok(match which {
        Instant::First => m.first,
        Instant::Second => m.second,
    })
}

struct Axis {
    lo: f64,
    h: f64,
    n: usize,
}

impl Axis {
    fn new(values: &[f64], cfg: &PointerConfig) -> Self {
        let margin = cfg.grid_halfwidth_sigmas / cfg.epsilon.sqrt();
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min) - margin;
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + margin;
        Axis { lo, h: (hi - lo) / cfg.grid_points as f64, n: cfg.grid_points }
    }

    fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.h
    }

    /// `φ(q−x)φ(q−y)` at every cell center, for every branch pair.
    fn overlaps(&self, values: &[f64], eps: f64) -> Vec<Vec<f64>> {
        let norm = (eps / (2.0 * std::f64::consts::PI)).sqrt();
        let mut out = Vec::with_capacity(values.len() * values.len());
        for &x in values {
            for &y in values {
                out.push(
                    (0..self.n)
                        .map(|i| {
                            let q = self.center(i);
                            norm * (-eps * ((q - x) * (q - x) + (q - y) * (q - y)) / 4.0).exp()
                        })
                        .collect(),
                );
            }
        }
        out
    }
}

/// Discretized joint density with marginal and conditional CDFs.
struct PointerGrid {
    ax1: Axis,
    ax2: Axis,
    row_cdf: Vec<f64>,
    cell_cdf: Vec<f64>,
}

impl PointerGrid {
    fn build(br: &Branches, cfg: &PointerConfig) -> Result<Self> {
        let eps = cfg.epsilon;
        let (n1, n2) = (br.o.len(), br.w.len());
        let ax1 = Axis::new(&br.o, cfg);
        let ax2 = Axis::new(&br.w, cfg);
        let f1 = ax1.overlaps(&br.o, eps);
        let f2 = ax2.overlaps(&br.w, eps);
        let n = cfg.grid_points;

        let mut density = vec![0.0; n * n];
        let (mut peak, mut min, mut imag) = (0.0_f64, 0.0_f64, 0.0_f64);
        let mut s = vec![Complex64::new(0.0, 0.0); n2 * n2];
        for i in 0..n {
            s.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
            for a in 0..n1 {
                for a2 in 0..n1 {
                    let w = f1[a * n1 + a2][i];
                    let row = &br.t[(a * n1 + a2) * n2 * n2..][..n2 * n2];
                    for (acc, t) in s.iter_mut().zip(row) {
                        *acc += t * w;
                    }
                }
            }
            for j in 0..n {
                let mut p = Complex64::new(0.0, 0.0);
                for bb in 0..n2 * n2 {
                    p += s[bb] * f2[bb][j];
                }
                density[i * n + j] = p.re;
                peak = peak.max(p.re);
                min = min.min(p.re);
                imag = imag.max(p.im.abs());
            }
        }
        if imag > 1e-10 * peak.max(f64::MIN_POSITIVE) {
            return Err(Error::ImaginaryResidual { residual: imag });
        }
        if min < -NEGATIVE_TOL * peak {
            return Err(Error::NegativeDensity { value: min, peak });
        }

        let z = real(br.contract(g0(eps), g0(eps)))?;
        if z <= MIN_DENOMINATOR {
            return Err(Error::IncompatibleBoundary { denominator: z });
        }
        let mut cell_cdf = vec![0.0; n * n];
        let mut row_cdf = vec![0.0; n];
        let mut total = 0.0;
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += density[i * n + j].max(0.0);
                cell_cdf[i * n + j] = acc;
            }
            total += acc;
            row_cdf[i] = total;
        }
        let mass = total * ax1.h * ax2.h / z;
        if (1.0 - mass).abs() > MASS_TOL {
            return Err(Error::GridTruncation { mass });
        }
        Ok(PointerGrid { ax1, ax2, row_cdf, cell_cdf })
    }

    /// Inverse CDF over one cumulative row, with the leftover of `u` reused as
    /// the position inside the chosen cell.
    fn invert(cdf: &[f64], u: f64) -> (usize, f64) {
        let total = *cdf.last().expect("non-empty");
        let target = u * total;
        let k = cdf.partition_point(|&c| c <= target).min(cdf.len() - 1);
        let prev = if k == 0 { 0.0 } else { cdf[k - 1] };
        let width = cdf[k] - prev;
        let frac = if width > 0.0 { ((target - prev) / width).clamp(0.0, 1.0) } else { 0.5 };
        (k, frac)
    }

    fn draw(&self, u1: f64, u2: f64) -> (f64, f64) {
        let n = self.ax1.n;
        let (i, t1) = Self::invert(&self.row_cdf, u1);
        let (j, t2) = Self::invert(&self.cell_cdf[i * n..(i + 1) * n], u2);
        (
            self.ax1.lo + (i as f64 + t1) * self.ax1.h,
            self.ax2.lo + (j as f64 + t2) * self.ax2.h,
        )
    }
}

/// Monte Carlo estimate of `E(q1 q2)` from simulated pointer readings.
///
/// Returns `(estimate, standard error)`. Sample `k` always consumes the same
/// stretch of the seeded stream, so the result does not depend on the thread
/// count.
pub fn mc_sample_corr(
    rho_in: &DensityMatrix,
    rho_fi: Option<&DensityMatrix>,
    ch: &KrausChannel,
    o1: &Observable,
    o2: &Observable,
    cfg: &PointerConfig,
    n_samples: usize,
) -> Result<(f64, f64)> {
    cfg.validate()?;
    if n_samples < MIN_SAMPLES {
        return Err(Error::OutOfRange { name: "n_samples", value: n_samples as f64, range: ">= 1000" });
    }
    let br = Branches::build(rho_in, rho_fi, ch, o1, o2)?;
    let grid = PointerGrid::build(&br, cfg)?;
    let chunks = n_samples.div_ceil(CHUNK);
    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(n_samples);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            // two f64 draws = four 32-bit words per sample
            rng.set_word_pos(4 * start as u128);
            let (mut sum, mut sq) = (0.0, 0.0);
            for _ in start..end {
                let u1: f64 = rng.random();
                let u2: f64 = rng.random();
                let (q1, q2) = grid.draw(u1, u2);
                let x = q1 * q2;
                sum += x;
                sq += x * x;
            }
            (sum, sq)
        })
        .collect();
    let (sum, sq) = partial.iter().fold((0.0, 0.0), |(s, q), (a, b)| (s + a, q + b));
    let n = n_samples as f64;
    let mean = sum / n;
    let var = ((sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok((mean, (var / n).sqrt()))
}
