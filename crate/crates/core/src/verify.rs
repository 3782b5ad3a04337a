//! Randomized equality suites.
//!
//! Trial `k` draws from stream `k` of the seed, so a report depends only on
//! its configuration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::KrausChannel;
use crate::chronomap::{channel_to_state, spatial_to_temporal, state_to_channel};
use crate::correlators::{
    spatial_corr, spatial_single, temporal_corr_bundle, temporal_corr_post, temporal_single, Instant,
};
use crate::error::{Error, Result};
use crate::matcore::{kron, Party};
use crate::pointer_oracle::finite_eps_corr;
use crate::random;
use crate::states::{BipartiteState, DensityMatrix, Observable};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub trials: usize,
    /// Local dimensions to draw from, independently per party.
    pub dims: Vec<usize>,
    pub seed: u64,
    pub tol: f64,
}

impl SuiteConfig {
    pub fn new(trials: usize, dims: &[usize], seed: u64, tol: f64) -> Self {
        SuiteConfig { trials, dims: dims.to_vec(), seed, tol }
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(Error::Config("dims must be a non-empty list of positive integers".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::Config("tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub trials: usize,
    pub dims: Vec<usize>,
    pub seed: u64,
    pub tol: f64,
    pub max_deviation: f64,
    pub passed: bool,
}

fn run(
    name: &str,
    cfg: &SuiteConfig,
    trial: impl Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
) -> Result<SuiteReport> {
    cfg.validate()?;
    let devs: Vec<f64> = (0..cfg.trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(k as u64);
            trial(&mut rng)
        })
        .collect::<Result<_>>()?;
    let max_deviation = devs.into_iter().fold(0.0, f64::max);
    Ok(SuiteReport {
        suite: name.to_string(),
        trials: cfg.trials,
        dims: cfg.dims.clone(),
        seed: cfg.seed,
        tol: cfg.tol,
        max_deviation,
        passed: max_deviation < cfg.tol,
    })
}

/// One random spatial instance: mixed state of random rank, Hermitian
/// observables, and post-selections that are each left at the default with
/// probability 1/4.
pub struct SpatialInstance {
    pub rho: BipartiteState,
    pub o_a: Observable,
    pub o_b: Observable,
    pub fi_a: Option<DensityMatrix>,
    pub fi_b: Option<DensityMatrix>,
}

impl SpatialInstance {
    pub fn draw(dims: &[usize], rng: &mut ChaCha8Rng) -> Self {
        let da = dims[rng.random_range(0..dims.len())];
        let db = dims[rng.random_range(0..dims.len())];
        let rho = BipartiteState::new(random::density(da * db, rng), (da, db)).expect("dims match");
        let o_a = random::observable(da, rng);
        let o_b = random::observable(db, rng);
        let mut post = |d: usize| if rng.random_bool(0.25) { None } else { Some(random::density(d, rng)) };
        let fi_a = post(da);
        let fi_b = post(db);
        SpatialInstance { rho, o_a, o_b, fi_a, fi_b }
    }
}

/// `|E_temporal − E_spatial|` under the correspondence.
pub fn theorem1(cfg: &SuiteConfig) -> Result<SuiteReport> {
    run("theorem1", cfg, |rng| {
        let x = SpatialInstance::draw(&cfg.dims, rng);
        let spatial = spatial_corr(&x.rho, &x.o_a, &x.o_b, x.fi_a.as_ref(), x.fi_b.as_ref())?;
        let bundle = spatial_to_temporal(&x.o_a, &x.o_b, x.fi_a.as_ref(), x.fi_b.as_ref())?;
        let temporal = temporal_corr_bundle(&state_to_channel(&x.rho), &bundle)?;
        Ok((spatial - temporal).abs())
    })
}

/// Both single-pointer means, spatial against temporal.
pub fn corollary2(cfg: &SuiteConfig) -> Result<SuiteReport> {
    run("corollary2", cfg, |rng| {
        let x = SpatialInstance::draw(&cfg.dims, rng);
        let (fa, fb) = (x.fi_a.as_ref(), x.fi_b.as_ref());
        let b = spatial_to_temporal(&x.o_a, &x.o_b, fa, fb)?;
        let ch = state_to_channel(&x.rho);
        let first = temporal_single(&b.rho_in, Some(&b.rho_fi), &ch, &b.o1, Instant::First)?;
        let second = temporal_single(&b.rho_in, Some(&b.rho_fi), &ch, &b.o2, Instant::Second)?;
        let qa = spatial_single(&x.rho, &x.o_a, Party::A, fa, fb)?;
        let qb = spatial_single(&x.rho, &x.o_b, Party::B, fa, fb)?;
        Ok((first - qa).abs().max((second - qb).abs()))
    })
}

/// Default post-selections against `Tr[(O_A⊗O_B)ρ]`.
pub fn born_reduction(cfg: &SuiteConfig) -> Result<SuiteReport> {
    run("born-reduction", cfg, |rng| {
        let x = SpatialInstance::draw(&cfg.dims, rng);
        let e = spatial_corr(&x.rho, &x.o_a, &x.o_b, None, None)?;
        let born = kron(x.o_a.matrix(), x.o_b.matrix()).trace_product(x.rho.matrix()).re;
        Ok((e - born).abs())
    })
}

/// Frobenius residual of state → channel → state.
pub fn map_roundtrip(cfg: &SuiteConfig) -> Result<SuiteReport> {
    run("map-roundtrip", cfg, |rng| {
        let da = cfg.dims[rng.random_range(0..cfg.dims.len())];
        let db = cfg.dims[rng.random_range(0..cfg.dims.len())];
        let rho = BipartiteState::new(random::density(da * db, rng), (da, db))?;
        let back = channel_to_state(&state_to_channel(&rho));
        Ok(back.matrix().frobenius_diff(rho.matrix()))
    })
}

/// Pointer-oracle instance: full-rank input and post-selection, a rank-2
/// channel, and unit-spectral-radius observables.
pub struct OracleInstance {
    pub rho_in: DensityMatrix,
    pub rho_fi: DensityMatrix,
    pub ch: KrausChannel,
    pub o1: Observable,
    pub o2: Observable,
}

impl OracleInstance {
    pub fn draw(dims: &[usize], rng: &mut ChaCha8Rng) -> Self {
        let d_in = dims[rng.random_range(0..dims.len())];
        let d_out = dims[rng.random_range(0..dims.len())];
        OracleInstance {
            rho_in: random::full_rank_density(d_in, rng),
            rho_fi: random::full_rank_density(d_out, rng),
            ch: random::channel(d_in, d_out, 2, rng),
            o1: random::unit_observable(d_in, rng),
            o2: random::unit_observable(d_out, rng),
        }
    }

    /// `|finite_eps_corr(ε) − temporal_corr_post|`.
    pub fn deviation(&self, eps: f64) -> Result<f64> {
        let exact = temporal_corr_post(&self.rho_in, &self.rho_fi, &self.ch, &self.o1, &self.o2)?;
        let e = finite_eps_corr(&self.rho_in, Some(&self.rho_fi), &self.ch, &self.o1, &self.o2, eps)?;
        Ok((e - exact).abs())
    }
}

/// Finite-strength pointer correlation at `eps` against the closed form.
pub fn oracle_limit(cfg: &SuiteConfig, eps: f64) -> Result<SuiteReport> {
    run("oracle-limit", cfg, |rng| OracleInstance::draw(&cfg.dims, rng).deviation(eps))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    num / lx.iter().map(|a| (a - mx) * (a - mx)).sum::<f64>()
}

/// Per-instance convergence slopes of the oracle deviation over `eps_grid`.
pub fn oracle_slopes(cfg: &SuiteConfig, eps_grid: &[f64]) -> Result<Vec<f64>> {
    cfg.validate()?;
    (0..cfg.trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(k as u64);
            let inst = OracleInstance::draw(&cfg.dims, &mut rng);
            let devs = eps_grid.iter().map(|&e| inst.deviation(e)).collect::<Result<Vec<_>>>()?;
            Ok(loglog_slope(eps_grid, &devs))
        })
        .collect()
}
