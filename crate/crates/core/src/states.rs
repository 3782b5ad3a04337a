//! States and observables: validated density matrices, bipartite states,
//! pure bipartite amplitudes, named families and Haar sampling.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matcore::{herm_eig, kron, partial_trace, CMatrix, Party, TOL};

/// Hermitian, positive semi-definite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
}

impl DensityMatrix {
    /// Validates `m` as a density matrix. Hermiticity, trace and positivity
    /// failures are reported as distinct errors, checked in that order.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Shape(format!("density matrix must be square, got {:?}", m.shape())));
        }
        let deviation = m.hermitian_deviation();
        if deviation > TOL {
            return Err(Error::NotHermitian { deviation });
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TOL || tr.im.abs() > TOL {
            return Err(Error::BadTrace { trace: tr.re });
        }
        let min_eigenvalue = herm_eig(&m)?.values.last().copied().unwrap_or(0.0);
        if min_eigenvalue < -TOL {
            return Err(Error::NotPositive { min_eigenvalue });
        }
        Ok(Self { mat: m })
    }

    /// Wraps a matrix the caller has already constructed as a valid state.
    pub(crate) fn from_trusted(m: CMatrix) -> Self {
        debug_assert!(m.is_square());
        Self { mat: m }
    }

    /// `I/d`.
    pub fn maximally_mixed(d: usize) -> Self {
        Self::from_trusted(CMatrix::identity(d).scale_real(1.0 / d as f64))
    }

    /// `|ψ⟩⟨ψ|` for a normalized copy of `psi`. Panics on a zero vector.
    pub fn pure(psi: &[Complex64]) -> Self {
        let n = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(n > 0.0, "zero state vector");
        let v: Vec<Complex64> = psi.iter().map(|z| z / n).collect();
        Self::from_trusted(CMatrix::outer(&v, &v))
    }

    /// `|k⟩⟨k|` in dimension `d`.
    pub fn basis(d: usize, k: usize) -> Self {
        Self::from_trusted(CMatrix::unit(d, d, k, k))
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    /// Entrywise conjugate in the computational basis.
    pub fn conj(&self) -> Self {
        Self::from_trusted(self.mat.conj())
    }

    pub fn purity(&self) -> f64 {
        self.mat.trace_product(&self.mat).re
    }
}

/// Shorthand for [`DensityMatrix::new`].
pub fn make_density(m: CMatrix) -> Result<DensityMatrix> {
    DensityMatrix::new(m)
}

/// A density matrix on `H_A ⊗ H_B`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteState {
    rho: DensityMatrix,
    dims: (usize, usize),
}

impl BipartiteState {
    pub fn new(rho: DensityMatrix, dims: (usize, usize)) -> Result<Self> {
        if dims.0 == 0 || dims.1 == 0 || rho.dim() != dims.0 * dims.1 {
            return Err(Error::Shape(format!(
                "state of dimension {} does not factor as {} x {}",
                rho.dim(),
                dims.0,
                dims.1
            )));
        }
        Ok(Self { rho, dims })
    }

    pub fn product(a: &DensityMatrix, b: &DensityMatrix) -> Self {
        Self {
            rho: DensityMatrix::from_trusted(kron(a.matrix(), b.matrix())),
            dims: (a.dim(), b.dim()),
        }
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn matrix(&self) -> &CMatrix {
        self.rho.matrix()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    /// Reduced state of `keep`.
    pub fn reduced(&self, keep: Party) -> DensityMatrix {
        let traced = match keep {
            Party::A => Party::B,
            Party::B => Party::A,
        };
        let m = partial_trace(self.rho.matrix(), self.dims, traced).expect("dims validated");
        DensityMatrix::from_trusted(m)
    }

    /// Exchanges the two factors.
    pub fn swap_parties(&self) -> Self {
        let (da, db) = self.dims;
        let m = self.matrix();
        let swapped = CMatrix::from_fn(da * db, da * db, |r, c| {
            let (j, i) = (r / da, r % da);
            let (l, k) = (c / da, c % da);
            m[(i * db + j, k * db + l)]
        });
        Self {
            rho: DensityMatrix::from_trusted(swapped),
            dims: (db, da),
        }
    }
}

/// Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    mat: CMatrix,
}

impl Observable {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Shape(format!("observable must be square, got {:?}", m.shape())));
        }
        let deviation = m.hermitian_deviation();
        if deviation > TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self { mat: m })
    }

    pub(crate) fn from_trusted(m: CMatrix) -> Self {
        Self { mat: m }
    }

    pub fn identity(d: usize) -> Self {
        Self::from_trusted(CMatrix::identity(d))
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn conj(&self) -> Self {
        Self::from_trusted(self.mat.conj())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_trusted(self.mat.scale_real(s))
    }

    /// `Tr[O ρ]`.
    pub fn expectation(&self, rho: &DensityMatrix) -> f64 {
        self.mat.trace_product(rho.matrix()).re
    }
}

/// Linear combination helper for building settings such as `(σz + σx)/√2`.
pub fn combine(terms: &[(f64, &Observable)]) -> Observable {
    let first = terms.first().expect("at least one term");
    let mut m = first.1.matrix().scale_real(first.0);
    for (c, o) in &terms[1..] {
        m = &m + &o.matrix().scale_real(*c);
    }
    Observable::from_trusted(m)
}

/// Pauli observables.
pub mod paulis {
    use super::Observable;
    use crate::matcore::pauli;

    pub fn x() -> Observable {
        Observable::from_trusted(pauli::x())
    }

    pub fn y() -> Observable {
        Observable::from_trusted(pauli::y())
    }

    pub fn z() -> Observable {
        Observable::from_trusted(pauli::z())
    }
}

/// Pure state `Σ α_ij |i⟩⊗|j⟩` stored by its `d_A × d_B` coefficient matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PureBipartite {
    alpha: CMatrix,
}

impl PureBipartite {
    pub fn new(alpha: CMatrix) -> Result<Self> {
        let norm_sqr = alpha.frobenius_norm().powi(2);
        if (norm_sqr - 1.0).abs() > TOL {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(Self { alpha })
    }

    /// Normalizes `alpha` first. Fails on a zero matrix.
    pub fn normalized(alpha: CMatrix) -> Result<Self> {
        let n = alpha.frobenius_norm();
        if n == 0.0 {
            return Err(Error::NotNormalized { norm_sqr: 0.0 });
        }
        Ok(Self {
            alpha: alpha.scale_real(1.0 / n),
        })
    }

    /// Reshapes a state vector on `H_A ⊗ H_B` (A-major) into coefficients.
    pub fn from_vector(v: &[Complex64], dims: (usize, usize)) -> Result<Self> {
        if v.len() != dims.0 * dims.1 {
            return Err(Error::Shape(format!(
                "vector of length {} does not factor as {} x {}",
                v.len(),
                dims.0,
                dims.1
            )));
        }
        Self::new(CMatrix::new(dims.0, dims.1, v.to_vec())?)
    }

    pub fn amplitudes(&self) -> &CMatrix {
        &self.alpha
    }

    pub fn dims(&self) -> (usize, usize) {
        self.alpha.shape()
    }

    /// State vector with index `i * d_B + j`.
    pub fn vector(&self) -> &[Complex64] {
        self.alpha.data()
    }

    pub fn density(&self) -> DensityMatrix {
        let v = self.vector();
        DensityMatrix::from_trusted(CMatrix::outer(v, v))
    }

    pub fn to_bipartite(&self) -> BipartiteState {
        BipartiteState {
            rho: self.density(),
            dims: self.dims(),
        }
    }

    /// Schmidt weights: eigenvalues of `α α†`, descending.
    pub fn schmidt_weights(&self) -> Vec<f64> {
        let gram = &self.alpha * &self.alpha.dagger();
        herm_eig(&gram.hermitian_part())
            .expect("α α† is Hermitian")
            .values
            .into_iter()
            .map(|l| l.max(0.0))
            .collect()
    }
}

/// `α = u/√d`, with `u = I` by default.
pub fn max_entangled(d: usize, u: Option<&CMatrix>) -> Result<PureBipartite> {
    let alpha = match u {
        None => CMatrix::identity(d),
        Some(u) => {
            if u.shape() != (d, d) {
                return Err(Error::Shape(format!("unitary must be {d}x{d}, got {:?}", u.shape())));
            }
            let deviation = (&u.dagger() * u).max_abs_diff(&CMatrix::identity(d));
            if deviation > TOL {
                return Err(Error::NotUnitary { deviation });
            }
            u.clone()
        }
    };
    PureBipartite::new(alpha.scale_real(1.0 / (d as f64).sqrt()))
}

/// `(|01⟩ - |10⟩)/√2`.
pub fn singlet() -> PureBipartite {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    PureBipartite::new(CMatrix::from_real(2, 2, &[0.0, s, -s, 0.0])).expect("normalized")
}

/// `w |ψ⁻⟩⟨ψ⁻| + (1 - w) I/4`.
pub fn werner(w: f64) -> Result<BipartiteState> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::OutOfRange {
            name: "w",
            value: w,
            range: "[0, 1]",
        });
    }
    let psi = singlet().density();
    let m = &psi.matrix().scale_real(w) + &CMatrix::identity(4).scale_real((1.0 - w) / 4.0);
    Ok(BipartiteState {
        rho: DensityMatrix::from_trusted(m),
        dims: (2, 2),
    })
}

/// Normalized vector of `d_A·d_B` i.i.d. standard complex Gaussians.
pub fn haar_random_pure_with<R: Rng + ?Sized>(d_a: usize, d_b: usize, rng: &mut R) -> PureBipartite {
    assert!(d_a > 0 && d_b > 0, "empty dimension");
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let alpha = CMatrix::from_fn(d_a, d_b, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * s, im * s)
    });
    PureBipartite::normalized(alpha).expect("gaussian vector is nonzero")
}

/// Haar-random pure state, reproducible from `seed`.
pub fn haar_random_pure(d_a: usize, d_b: usize, seed: u64) -> PureBipartite {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    haar_random_pure_with(d_a, d_b, &mut rng)
}

/// Von Neumann entropy of the reduced state, in nats.
pub fn entanglement_entropy(psi: &PureBipartite) -> f64 {
    psi.schmidt_weights()
        .into_iter()
        .filter(|&l| l > 0.0)
        .map(|l| -l * l.ln())
        .sum()
}

/// Exact Haar average of the entanglement entropy for dimensions `m ≤ n`:
/// `Σ_{k=n+1}^{mn} 1/k − (m−1)/(2n)`.
pub fn page_mean_entropy(m: usize, n: usize) -> f64 {
    let (m, n) = if m <= n { (m, n) } else { (n, m) };
    let harmonic: f64 = (n + 1..=m * n).map(|k| 1.0 / k as f64).sum();
    harmonic - (m as f64 - 1.0) / (2.0 * n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::pauli;
    use crate::random;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn make_density_accepts_and_rejects() {
        assert!(make_density(CMatrix::identity(2).scale_real(0.5)).is_ok());
        assert!(make_density(CMatrix::diag_real(&[0.7, 0.3])).is_ok());
        assert!(matches!(
            make_density(CMatrix::diag_real(&[1.2, -0.2])),
            Err(Error::NotPositive { .. })
        ));
        assert!(matches!(
            make_density(CMatrix::diag_real(&[0.7, 0.7])),
            Err(Error::BadTrace { .. })
        ));
        assert!(matches!(
            make_density(CMatrix::from_real(2, 2, &[0.5, 0.1, 0.0, 0.5])),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn max_entangled_variants() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let phi = max_entangled(2, None).unwrap();
        let close = |v: &[Complex64], w: &[Complex64]| v.iter().zip(w).all(|(a, b)| (a - b).norm() < 1e-15);
        assert!(close(phi.vector(), &[c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]));
        let psi = max_entangled(2, Some(&pauli::x())).unwrap();
        assert!(close(psi.vector(), &[c(0.0, 0.0), c(s, 0.0), c(s, 0.0), c(0.0, 0.0)]));
        let three = max_entangled(3, None).unwrap().to_bipartite();
        let third = CMatrix::identity(3).scale_real(1.0 / 3.0);
        assert!(three.reduced(Party::A).matrix().max_abs_diff(&third) < 1e-15);
        assert!(three.reduced(Party::B).matrix().max_abs_diff(&third) < 1e-15);
        assert!(matches!(
            max_entangled(2, Some(&CMatrix::diag_real(&[1.0, 2.0]))),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn werner_family() {
        assert!(werner(0.0)
            .unwrap()
            .matrix()
            .max_abs_diff(&CMatrix::identity(4).scale_real(0.25))
            < 1e-15);
        assert!(werner(1.0).unwrap().matrix().max_abs_diff(singlet().density().matrix()) < 1e-15);
        let e = herm_eig(werner(0.5).unwrap().matrix()).unwrap();
        for (got, want) in e.values.iter().zip([0.625, 0.125, 0.125, 0.125]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(matches!(werner(1.5), Err(Error::OutOfRange { .. })));
        for w in [0.0, 0.3, 0.9, 1.0] {
            assert!(DensityMatrix::new(werner(w).unwrap().matrix().clone()).is_ok());
        }
    }

    #[test]
    fn haar_is_reproducible_and_normalized() {
        let a = haar_random_pure(3, 4, 17);
        let b = haar_random_pure(3, 4, 17);
        assert_eq!(a, b);
        assert!((a.amplitudes().frobenius_norm() - 1.0).abs() < 1e-12);
        assert_ne!(a, haar_random_pure(3, 4, 18));
    }

    #[test]
    fn haar_zz_correlator_vanishes_on_average() {
        let zz = kron(&pauli::z(), &pauli::z());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let samples: Vec<f64> = (0..10_000)
            .map(|_| {
                let psi = haar_random_pure_with(2, 2, &mut rng);
                zz.trace_product(psi.density().matrix()).re
            })
            .collect();
        let (mean, se) = mean_and_se(&samples);
        assert!(mean.abs() < 5.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn haar_purity_concentrates_below_two_over_d() {
        // exact Haar mean purity for d_A = d_B = N is 2N/(N²+1)
        let n = 8;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let samples: Vec<f64> = (0..1000)
            .map(|_| haar_random_pure_with(n, n, &mut rng).to_bipartite().reduced(Party::A).purity())
            .collect();
        let (mean, se) = mean_and_se(&samples);
        let exact = 2.0 * n as f64 / ((n * n + 1) as f64);
        assert!((mean - exact).abs() < 5.0 * se);
        assert!(mean < 2.0 / n as f64);
    }

    #[test]
    fn haar_is_basis_covariant() {
        let zz = kron(&pauli::z(), &pauli::x());
        let mut urng = ChaCha8Rng::seed_from_u64(99);
        let u = kron(&random::unitary(2, &mut urng), &random::unitary(2, &mut urng));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (mut plain, mut rotated) = (Vec::new(), Vec::new());
        for _ in 0..10_000 {
            let psi = haar_random_pure_with(2, 2, &mut rng);
            let rho = psi.density();
            plain.push(zz.trace_product(rho.matrix()).re);
            let r = &(&u * rho.matrix()) * &u.dagger();
            rotated.push(zz.trace_product(&r).re);
        }
        let (m1, s1) = mean_and_se(&plain);
        let (m2, s2) = mean_and_se(&rotated);
        assert!((m1 - m2).abs() < 5.0 * (s1 * s1 + s2 * s2).sqrt());
    }

    #[test]
    fn entropy_examples() {
        let product = PureBipartite::new(CMatrix::unit(2, 2, 0, 1)).unwrap();
        assert!(entanglement_entropy(&product).abs() < 1e-15);
        for d in [2, 3, 5] {
            let e = entanglement_entropy(&max_entangled(d, None).unwrap());
            assert!((e - (d as f64).ln()).abs() < 1e-12);
        }
        let t = std::f64::consts::PI / 6.0;
        let psi = PureBipartite::new(CMatrix::diag_real(&[t.cos(), t.sin()])).unwrap();
        let (cw, sw) = (0.75_f64, 0.25_f64);
        let oracle = -(cw * cw.ln() + sw * sw.ln());
        assert!((entanglement_entropy(&psi) - oracle).abs() < 1e-12);
        assert!((oracle - 0.5623).abs() < 1e-4);
    }

    #[test]
    fn page_entropy_matches_monte_carlo() {
        for (n, seed) in [(4, 1u64), (8, 2), (16, 3)] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let samples: Vec<f64> = (0..500)
                .map(|_| entanglement_entropy(&haar_random_pure_with(n, n, &mut rng)))
                .collect();
            let (mean, _) = mean_and_se(&samples);
            assert!((mean - page_mean_entropy(n, n)).abs() < 0.05, "N={n}: {mean}");
        }
        // qubit pair closed form: 1/3 nats
        assert!((page_mean_entropy(2, 2) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn conjugation() {
        let real = DensityMatrix::new(CMatrix::diag_real(&[0.25, 0.75])).unwrap();
        assert_eq!(real.conj(), real);
        assert_eq!(paulis::y().conj().matrix(), &(-paulis::y().matrix()));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random::density(4, &mut rng);
        let e1 = herm_eig(rho.matrix()).unwrap().values;
        let e2 = herm_eig(rho.conj().matrix()).unwrap().values;
        for (a, b) in e1.iter().zip(&e2) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn swap_parties_matches_kron_order() {
        let a = DensityMatrix::new(CMatrix::diag_real(&[0.6, 0.4])).unwrap();
        let b = DensityMatrix::new(CMatrix::diag_real(&[0.1, 0.2, 0.7])).unwrap();
        let ab = BipartiteState::product(&a, &b);
        let ba = BipartiteState::product(&b, &a);
        assert_eq!(ab.swap_parties(), ba);
    }

    fn mean_and_se(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }
}
