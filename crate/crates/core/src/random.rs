//! Seeded random instances: states, observables, unitaries and channels.
//!
//! These feed the randomized equality suites and the studies. All take the
//! RNG explicitly.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channels::KrausChannel;
use crate::matcore::CMatrix;
use crate::states::{DensityMatrix, Observable};

/// `d_r × d_c` matrix of i.i.d. standard complex Gaussians.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * s, im * s)
    })
}

/// Random mixed state `G G† / Tr` with `G` a `d × rank` Ginibre matrix;
/// the rank is drawn uniformly from `1..=d`.
pub fn density<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityMatrix {
    let rank = rng.random_range(1..=d);
    density_of_rank(d, rank, rng)
}

pub fn density_of_rank<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> DensityMatrix {
    let g = ginibre(d, rank, rng);
    let m = &g * &g.dagger();
    let tr = m.trace().re;
    DensityMatrix::from_trusted(m.scale_real(1.0 / tr).hermitian_part())
}

/// Random full-rank mixed state.
pub fn full_rank_density<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityMatrix {
    density_of_rank(d, d, rng)
}

/// Hermitian part of a Ginibre matrix.
pub fn observable<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Observable {
    Observable::from_trusted(ginibre(d, d, rng).hermitian_part())
}

/// Random observable rescaled to unit spectral radius.
pub fn unit_observable<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Observable {
    let o = observable(d, rng);
    let e = crate::matcore::herm_eig(o.matrix()).expect("hermitian");
    let radius = e.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    o.scale(1.0 / radius)
}

/// Qubit observable `n·σ` for a uniformly random unit vector `n`; eigenvalues ±1.
pub fn pauli_direction<R: Rng + ?Sized>(rng: &mut R) -> Observable {
    let v: [f64; 3] = [
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    ];
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let (x, y, z) = (v[0] / n, v[1] / n, v[2] / n);
    Observable::from_trusted(
        CMatrix::new(
            2,
            2,
            vec![
                Complex64::new(z, 0.0),
                Complex64::new(x, -y),
                Complex64::new(x, y),
                Complex64::new(-z, 0.0),
            ],
        )
        .expect("finite"),
    )
}

/// Haar-random unitary: Gram-Schmidt on a Ginibre matrix.
pub fn unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(d, d, rng);
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(d);
    for c in 0..d {
        let mut v = g.column(c);
        for _ in 0..2 {
            for u in &cols {
                let p: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= p * ui;
                }
            }
        }
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= n);
        cols.push(v);
    }
    CMatrix::from_fn(d, d, |r, c| cols[c][r])
}

/// Channel with `rank` Ginibre Kraus matrices and Dirichlet-ish random weights.
pub fn channel<R: Rng + ?Sized>(d_in: usize, d_out: usize, rank: usize, rng: &mut R) -> KrausChannel {
    let elements = (0..rank)
        .map(|_| (rng.random_range(0.05..1.0), ginibre(d_out, d_in, rng)))
        .collect();
    KrausChannel::new(elements).expect("random channel is valid")
}
