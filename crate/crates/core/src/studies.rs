//! Numerical studies: how close typical evolutions are to unitary, how
//! correlations fade under depolarizing noise, and what the `N×N` route saves
//! over the `N²×N²` one.

use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::KrausChannel;
use crate::chronomap::{channel_to_state, pure_to_kraus, spatial_to_temporal};
use crate::correlators::{spatial_corr, temporal_corr, temporal_corr_bundle};
use crate::error::{Error, Result};
use crate::matcore::{herm_eig, CMatrix};
use crate::random;
use crate::states::{haar_random_pure_with, page_mean_entropy, DensityMatrix, Observable};

/// Normalized spectrum of `M†M`, descending.
fn kraus_spectrum(m: &CMatrix) -> Vec<f64> {
    let g = &m.dagger() * m;
    let tr = g.trace().re;
    herm_eig(&g.scale_real(1.0 / tr))
        .expect("Gram matrices are Hermitian")
        .values
        .into_iter()
        .map(|l| l.max(0.0))
        .collect()
}

/// `1 − S(M†M/Tr)/ln N` for a square Kraus operator: 0 iff `M` is
/// proportional to a unitary, 1 for rank one.
pub fn entropy_deficit(m: &CMatrix) -> f64 {
    let n = m.cols();
    if n < 2 {
        return 0.0;
    }
    let s: f64 = kraus_spectrum(m).into_iter().filter(|&l| l > 0.0).map(|l| -l * l.ln()).sum();
    1.0 - s / (n as f64).ln()
}

/// `‖N·M†M/Tr(M†M) − I‖_F / √N`.
pub fn frobenius_deviation(m: &CMatrix) -> f64 {
    let n = m.cols() as f64;
    let g = &m.dagger() * m;
    let scaled = g.scale_real(n / g.trace().re);
    (&scaled - &CMatrix::identity(m.cols())).frobenius_norm() / n.sqrt()
}

/// Mean, 95th percentile and spread of one statistic.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub p95: f64,
    pub std_error: f64,
}

impl Summary {
    fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let k = ((0.95 * n).ceil() as usize).clamp(1, sorted.len()) - 1;
        Summary { mean, p95: sorted[k], std_error: (var / n).sqrt() }
    }
}

/// Haar study for one dimension.
#[derive(Debug, Clone, Serialize)]
pub struct HaarReport {
    pub dim: usize,
    pub samples: usize,
    pub seed: u64,
    /// Entropy deficit of the mapped Kraus operator.
    pub deficit: Summary,
    /// Normalized Frobenius distance of `M†M` from the scaled identity.
    pub frobenius: Summary,
    /// Entanglement entropy of the sampled states, in nats.
    pub entropy: Summary,
    /// Exact Haar mean of the entropy.
    pub entropy_exact: f64,
}

/// Samples Haar-random `N×N` pure states, maps each to its Kraus operator and
/// records how far it is from unitary. Sample `k` uses stream `k` of the seed,
/// so results do not depend on the thread count.
pub fn haar_unitarity_study(n: usize, samples: usize, seed: u64) -> Result<HaarReport> {
    if n < 2 {
        return Err(Error::OutOfRange { name: "N", value: n as f64, range: ">= 2" });
    }
    if samples < 2 {
        return Err(Error::OutOfRange { name: "samples", value: samples as f64, range: ">= 2" });
    }
    let rows: Vec<(f64, f64, f64)> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let psi = haar_random_pure_with(n, n, &mut rng);
            let m = pure_to_kraus(&psi);
            let spectrum = kraus_spectrum(&m);
            let s: f64 = spectrum.iter().filter(|&&l| l > 0.0).map(|l| -l * l.ln()).sum();
            (1.0 - s / (n as f64).ln(), frobenius_deviation(&m), s)
        })
        .collect();
    let col = |f: fn(&(f64, f64, f64)) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    Ok(HaarReport {
        dim: n,
        samples,
        seed,
        deficit: Summary::of(&col(|r| r.0)),
        frobenius: Summary::of(&col(|r| r.1)),
        entropy: Summary::of(&col(|r| r.2)),
        entropy_exact: page_mean_entropy(n, n),
    })
}

/// `X^a Z^b` for `a, b ∈ 0..d`, `a`-major.
pub fn weyl_unitaries(d: usize) -> Vec<CMatrix> {
    let omega = |k: usize| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / d as f64);
    let mut out = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            // X^a Z^b |j⟩ = ω^{bj} |j + a⟩
            out.push(CMatrix::from_fn(d, d, |r, c| {
                if r == (c + a) % d {
                    omega((b * c) % d)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }));
        }
    }
    out
}

/// `(1−λ)·U + λ·(uniform mixture of the d² Weyl unitaries)`.
pub fn depolarized_unitary(u: &CMatrix, lambda: f64) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::OutOfRange { name: "lambda", value: lambda, range: "[0, 1]" });
    }
    let d = u.rows();
    let mut elements = Vec::with_capacity(d * d + 1);
    if lambda < 1.0 {
        elements.push((1.0 - lambda, u.clone()));
    }
    if lambda > 0.0 {
        let w = lambda / (d * d) as f64;
        elements.extend(weyl_unitaries(d).into_iter().map(|m| (w, m)));
    }
    KrausChannel::new(elements)
}

/// Two-time correlation along the depolarizing family, one entry per `λ`.
pub fn decoherence_scan(
    u: &CMatrix,
    lambda_grid: &[f64],
    o1: &Observable,
    o2: &Observable,
    rho_in: Option<&DensityMatrix>,
) -> Result<Vec<(f64, f64)>> {
    let rho = rho_in.cloned().unwrap_or_else(|| DensityMatrix::maximally_mixed(u.cols()));
    lambda_grid
        .iter()
        .map(|&l| Ok((l, temporal_corr(&rho, &depolarized_unitary(u, l)?, o1, o2)?)))
        .collect()
}

/// Timing of the same correlators evaluated on `N×N` and on `N²×N²` matrices.
#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub dim: usize,
    pub n_settings: usize,
    pub kraus_rank: usize,
    pub seed: u64,
    pub repetitions: usize,
    /// Median seconds for all settings, temporal route.
    pub t_temporal: f64,
    /// Median seconds for all settings, spatial route.
    pub t_spatial: f64,
    pub max_abs_deviation: f64,
    pub speedup: f64,
}

impl BenchReport {
    pub fn is_valid(&self) -> bool {
        self.max_abs_deviation < 1e-9
    }
}

pub const BENCH_REPETITIONS: usize = 5;
pub const BENCH_MAX_DIM: usize = 64;

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Random rank-`K` channel on dimension `N`, evaluated on `n_settings` random
/// observable and post-selection tuples both ways. Runs on the calling thread.
pub fn gain_bench(n: usize, n_settings: usize, kraus_rank: usize, seed: u64) -> Result<BenchReport> {
    if !(4..=BENCH_MAX_DIM).contains(&n) {
        return Err(Error::OutOfRange { name: "N", value: n as f64, range: "4..=64" });
    }
    if n_settings == 0 {
        return Err(Error::OutOfRange { name: "n_settings", value: 0.0, range: ">= 1" });
    }
    if kraus_rank == 0 || kraus_rank > n * n {
        return Err(Error::OutOfRange { name: "kraus_rank", value: kraus_rank as f64, range: "1..=N²" });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ch = random::channel(n, n, kraus_rank, &mut rng);
    let settings: Vec<_> = (0..n_settings)
        .map(|_| {
            (
                random::observable(n, &mut rng),
                random::observable(n, &mut rng),
                random::full_rank_density(n, &mut rng),
                random::full_rank_density(n, &mut rng),
            )
        })
        .collect();
    let state = channel_to_state(&ch);

    let mut temporal = Vec::new();
    let mut spatial = Vec::new();
    let (mut t_times, mut s_times) = (Vec::new(), Vec::new());
    for _ in 0..BENCH_REPETITIONS {
        let start = Instant::now();
        temporal = settings
            .iter()
            .map(|(oa, ob, fa, fb)| temporal_corr_bundle(&ch, &spatial_to_temporal(oa, ob, Some(fa), Some(fb))?))
            .collect::<Result<Vec<f64>>>()?;
        t_times.push(start.elapsed().as_secs_f64());

        let start = Instant::now();
        spatial = settings
            .iter()
            .map(|(oa, ob, fa, fb)| spatial_corr(&state, oa, ob, Some(fa), Some(fb)))
            .collect::<Result<Vec<f64>>>()?;
        s_times.push(start.elapsed().as_secs_f64());
    }
    let max_abs_deviation = temporal.iter().zip(&spatial).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let (t_temporal, t_spatial) = (median(t_times), median(s_times));
    Ok(BenchReport {
        dim: n,
        n_settings,
        kraus_rank,
        seed,
        repetitions: BENCH_REPETITIONS,
        t_temporal,
        t_spatial,
        max_abs_deviation,
        speedup: t_spatial / t_temporal.max(f64::MIN_POSITIVE),
    })
}
