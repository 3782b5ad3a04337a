//! The correspondence between bipartite states and evolutions.
//!
//! A pure state with coefficient matrix `α` (`d_A × d_B`) maps to the single
//! Kraus operator `M = α†` (`d_B × d_A`, so `M[j, i] = conj(α[i, j])`).
//! Mixed states map to weighted Kraus sets through their spectral
//! decomposition; the inverse direction rebuilds the state from the Kraus
//! operators. Observables and boundary states map as
//! `O_1 = O_A`, `O_2 = O_B*`, `ρ_in = ρ_A^fi`, `ρ_fi = ρ_B^fi*`.

use num_complex::Complex64;

use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::matcore::{herm_eig, CMatrix};
use crate::states::{BipartiteState, DensityMatrix, Observable, PureBipartite};

/// Spectral weights below this are dropped when decomposing a state.
pub const RANK_CUTOFF: f64 = 1e-12;

pub fn pure_to_kraus(psi: &PureBipartite) -> CMatrix {
    psi.amplitudes().dagger()
}

/// Inverse of [`pure_to_kraus`] up to normalization: `α = M† / ‖M‖_F`.
pub fn kraus_to_pure(m: &CMatrix) -> Result<PureBipartite> {
    PureBipartite::normalized(m.dagger())
}

/// Maps a bipartite state to the channel whose Kraus operators are the images
/// of its eigenvectors, weighted by the eigenvalues.
pub fn state_to_channel(rho_ab: &BipartiteState) -> KrausChannel {
    let dims = rho_ab.dims();
    let eig = herm_eig(rho_ab.matrix()).expect("density matrices are Hermitian");
    let elements: Vec<(f64, CMatrix)> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > RANK_CUTOFF)
        .map(|(k, &l)| {
            let psi = PureBipartite::from_vector(&eig.vector(k), dims).expect("unit eigenvector");
            (l, pure_to_kraus(&psi))
        })
        .collect();
    KrausChannel::new(elements).expect("a unit-trace state has a positive eigenvalue")
}

/// Maps a channel back to the bipartite state on `H_in ⊗ H_out`.
///
/// Each element contributes `|ψ_z⟩ ∝ vec(M_z†)` with weight `∝ p_z ‖M_z‖²_F`.
pub fn channel_to_state(ch: &KrausChannel) -> BipartiteState {
    let dims = (ch.d_in(), ch.d_out());
    let n = dims.0 * dims.1;
    let mut acc = CMatrix::zeros(n, n);
    let mut total = 0.0;
    for (p, m) in ch.elements() {
        let w = p * m.frobenius_norm().powi(2);
        if w == 0.0 {
            continue;
        }
        // row-major data of M† is the A-major state vector
        let v: Vec<Complex64> = m.dagger().into_data();
        acc = &acc + &CMatrix::outer(&v, &v).scale_real(*p);
        total += w;
    }
    let rho = DensityMatrix::from_trusted(acc.scale_real(1.0 / total).hermitian_part());
    BipartiteState::new(rho, dims).expect("dims match by construction")
}

/// Exchanges the roles of input and output: every `M_z` is transposed.
pub fn swap_party_channel(ch: &KrausChannel) -> KrausChannel {
    KrausChannel::new(ch.elements().iter().map(|(p, m)| (*p, m.transpose())).collect())
        .expect("transposition preserves validity")
}

/// Temporal counterparts of spatial observables and boundary states.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceBundle {
    pub o1: Observable,
    pub o2: Observable,
    pub rho_in: DensityMatrix,
    pub rho_fi: DensityMatrix,
}

impl CorrespondenceBundle {
    pub fn dims(&self) -> (usize, usize) {
        (self.o1.dim(), self.o2.dim())
    }
}

/// Maps `(O_A, O_B, ρ_A^fi, ρ_B^fi)` to `(O_1, O_2, ρ_in, ρ_fi)`.
///
/// A missing post-selection means the maximally mixed state of that party.
pub fn spatial_to_temporal(
    o_a: &Observable,
    o_b: &Observable,
    rho_a_fi: Option<&DensityMatrix>,
    rho_b_fi: Option<&DensityMatrix>,
) -> Result<CorrespondenceBundle> {
    let (da, db) = (o_a.dim(), o_b.dim());
    let rho_in = match rho_a_fi {
        Some(r) if r.dim() != da => {
            return Err(Error::Shape(format!("ρ_A^fi has dimension {}, O_A has {da}", r.dim())))
        }
        Some(r) => r.clone(),
        None => DensityMatrix::maximally_mixed(da),
    };
    let rho_fi = match rho_b_fi {
        Some(r) if r.dim() != db => {
            return Err(Error::Shape(format!("ρ_B^fi has dimension {}, O_B has {db}", r.dim())))
        }
        Some(r) => r.conj(),
        None => DensityMatrix::maximally_mixed(db),
    };
    Ok(CorrespondenceBundle {
        o1: o_a.clone(),
        o2: o_b.conj(),
        rho_in,
        rho_fi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{kron, pauli};
    use crate::random;
    use crate::states::{max_entangled, paulis, werner};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pure_to_kraus_examples() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let phi = max_entangled(2, None).unwrap();
        assert!(pure_to_kraus(&phi).max_abs_diff(&CMatrix::identity(2).scale_real(s)) < 1e-15);
        let prod = PureBipartite::new(CMatrix::unit(2, 2, 0, 1)).unwrap();
        assert_eq!(pure_to_kraus(&prod), CMatrix::unit(2, 2, 1, 0));
        let t: f64 = 0.4;
        let psi = PureBipartite::new(CMatrix::diag_real(&[t.cos(), t.sin()])).unwrap();
        assert_eq!(pure_to_kraus(&psi), CMatrix::diag_real(&[t.cos(), t.sin()]));
    }

    #[test]
    fn complex_amplitudes_are_conjugated() {
        let i = Complex64::new(0.0, 1.0);
        let alpha = CMatrix::new(1, 2, vec![Complex64::new(0.6, 0.0), i * 0.8]).unwrap();
        let m = pure_to_kraus(&PureBipartite::new(alpha).unwrap());
        assert_eq!(m.shape(), (2, 1));
        assert_eq!(m[(1, 0)], -i * 0.8);
    }

    #[test]
    fn state_to_channel_examples() {
        let phi = max_entangled(2, None).unwrap().to_bipartite();
        let ch = state_to_channel(&phi);
        assert_eq!(ch.elements().len(), 1);
        assert!(ch.is_unitary());

        let ch = state_to_channel(&werner(0.0).unwrap());
        assert_eq!(ch.elements().len(), 4);
        for (p, m) in ch.elements() {
            assert!((p - 0.25).abs() < 1e-14);
            // canonical degenerate basis is e_0..e_3, so each M is a matrix unit
            assert!((m.frobenius_norm() - 1.0).abs() < 1e-14);
        }
        for (a, (_, ma)) in ch.elements().iter().enumerate() {
            for (b, (_, mb)) in ch.elements().iter().enumerate() {
                let hs = ma.dagger().trace_product(mb);
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((hs.re - want).abs() < 1e-14 && hs.im.abs() < 1e-14);
            }
        }

        let ch = state_to_channel(&werner(1.0).unwrap());
        assert_eq!(ch.elements().len(), 1);
        let m = &ch.elements()[0].1;
        // singlet α is antisymmetric, so M = α† is antisymmetric too
        assert!(m.max_abs_diff(&(-&m.transpose())) < 1e-14);
        assert!(ch.is_unitary());
    }

    #[test]
    fn channel_to_state_examples() {
        let phi = max_entangled(2, None).unwrap().density();
        let back = channel_to_state(&KrausChannel::identity(2));
        assert!(back.matrix().max_abs_diff(phi.matrix()) < 1e-15);

        let flip = KrausChannel::single(CMatrix::unit(2, 2, 1, 0));
        let back = channel_to_state(&flip);
        let expected = kron(&CMatrix::unit(2, 2, 0, 0), &CMatrix::unit(2, 2, 1, 1));
        assert!(back.matrix().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn mapping_of_observables_and_boundaries() {
        let half = DensityMatrix::maximally_mixed(2);
        let b = spatial_to_temporal(&paulis::z(), &paulis::z(), Some(&half), Some(&half)).unwrap();
        assert_eq!(b.o2, paulis::z());
        let b = spatial_to_temporal(&paulis::x(), &paulis::y(), None, None).unwrap();
        assert_eq!(b.o1, paulis::x());
        assert_eq!(b.o2.matrix(), &(-&pauli::y()));
        assert_eq!(b.rho_in, half);
        let b = spatial_to_temporal(&Observable::identity(2), &Observable::identity(3), None, None).unwrap();
        assert_eq!(b.rho_fi, DensityMatrix::maximally_mixed(3));
        assert!(matches!(
            spatial_to_temporal(&paulis::x(), &paulis::x(), Some(&DensityMatrix::maximally_mixed(3)), None),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn swap_examples() {
        let id = KrausChannel::identity(3);
        assert_eq!(swap_party_channel(&id), id);
        let flip = KrausChannel::single(CMatrix::unit(2, 2, 1, 0));
        assert_eq!(
            swap_party_channel(&flip).elements()[0].1,
            CMatrix::unit(2, 2, 0, 1)
        );
    }

    #[test]
    fn maximally_entangled_states_map_to_unitaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for d in 2..5 {
            let u = random::unitary(d, &mut rng);
            let psi = max_entangled(d, Some(&u)).unwrap();
            assert!(state_to_channel(&psi.to_bipartite()).is_unitary());
        }
    }

    #[test]
    fn round_trip_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..200 {
            let da = rand::Rng::random_range(&mut rng, 1..5);
            let db = rand::Rng::random_range(&mut rng, 1..5);
            let rho = BipartiteState::new(random::density(da * db, &mut rng), (da, db)).unwrap();
            let back = channel_to_state(&state_to_channel(&rho));
            assert_eq!(back.dims(), (da, db));
            assert!(back.matrix().frobenius_diff(rho.matrix()) < 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn swap_commutes_with_channel_to_state(seed in any::<u64>(), din in 1usize..4, dout in 1usize..4, rank in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ch = random::channel(din, dout, rank, &mut rng);
            let lhs = channel_to_state(&swap_party_channel(&ch));
            let rhs = channel_to_state(&ch).swap_parties();
            prop_assert_eq!(lhs.dims(), rhs.dims());
            prop_assert!(lhs.matrix().max_abs_diff(rhs.matrix()) < 1e-10);
        }

        #[test]
        fn swap_twice_is_identity(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ch = random::channel(2, 3, 2, &mut rng);
            let back = swap_party_channel(&swap_party_channel(&ch));
            prop_assert_eq!(back.elements(), ch.elements());
        }

        #[test]
        fn purity_correspondence(seed in any::<u64>(), da in 1usize..4, db in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let psi = crate::states::haar_random_pure_with(da, db, &mut rng);
            prop_assert_eq!(state_to_channel(&psi.to_bipartite()).elements().len(), 1);
            let single = KrausChannel::single(random::ginibre(db, da, &mut rng));
            let rho = channel_to_state(&single);
            prop_assert!((rho.rho().purity() - 1.0).abs() < 1e-12);
        }
    }
}
