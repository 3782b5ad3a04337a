//! Closed-form weak-measurement correlations.
//!
//! Temporal correlations are evaluated on `d_A`/`d_B`-dimensional matrices
//! through the channel; spatial ones on the `d_A·d_B`-dimensional state. All
//! results are traces of Hermitian combinations and therefore real; each
//! function checks the imaginary residual before dropping it.

use num_complex::Complex64;

use crate::channels::{denominator, KrausChannel};
use crate::chronomap::CorrespondenceBundle;
use crate::error::{Error, Result};
use crate::matcore::{anticommutator, kron, CMatrix, Party};
use crate::states::{BipartiteState, DensityMatrix, Observable};

const IMAG_TOL: f64 = 1e-10;

/// Which of two sequential pointers a single-measurement mean refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Instant {
    /// Measured before the evolution.
    First,
    /// Measured after the evolution.
    Second,
}

pub(crate) fn real(z: Complex64) -> Result<f64> {
    if z.im.abs() > IMAG_TOL * z.re.abs().max(1.0) {
        return Err(Error::ImaginaryResidual { residual: z.im });
    }
    Ok(z.re)
}

pub(crate) fn expect_dim(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Shape(format!("{what} has dimension {got}, expected {want}")));
    }
    Ok(())
}

fn check_temporal(
    ch: &KrausChannel,
    rho_in: &DensityMatrix,
    rho_fi: Option<&DensityMatrix>,
    o1: Option<&Observable>,
    o2: Option<&Observable>,
) -> Result<()> {
    expect_dim("ρ_in", rho_in.dim(), ch.d_in())?;
    if let Some(fi) = rho_fi {
        expect_dim("ρ_fi", fi.dim(), ch.d_out())?;
    }
    if let Some(o) = o1 {
        expect_dim("O_1", o.dim(), ch.d_in())?;
    }
    if let Some(o) = o2 {
        expect_dim("O_2", o.dim(), ch.d_out())?;
    }
    Ok(())
}

/// `Tr[ρ_fi X]`, or `Tr[X]` when there is no post-selection.
fn boundary_trace(rho_fi: Option<&DensityMatrix>, x: &CMatrix) -> Complex64 {
    match rho_fi {
        Some(fi) => fi.matrix().trace_product(x),
        None => x.trace(),
    }
}

/// Two-time correlation without post-selection:
/// `E = ½ Tr[O_2 Σ p_z M_z {O_1, ρ_in} M_z†] / Tr[Σ p_z M_z† M_z ρ_in]`.
pub fn temporal_corr(
    rho_in: &DensityMatrix,
    ch: &KrausChannel,
    o1: &Observable,
    o2: &Observable,
) -> Result<f64> {
    check_temporal(ch, rho_in, None, Some(o1), Some(o2))?;
    let d = denominator(&ch.evolve(rho_in.matrix()), None)?;
    let evolved = ch.evolve(&anticommutator(o1.matrix(), rho_in.matrix())?);
    real(o2.matrix().trace_product(&evolved) * 0.5 / d)
}

/// Two-time correlation with post-selection on `ρ_fi`:
/// `E = ¼ Tr[ρ_fi {O_2, Σ p_z M_z {O_1, ρ_in} M_z†}] / Tr[ρ_fi Σ p_z M_z ρ_in M_z†]`.
pub fn temporal_corr_post(
    rho_in: &DensityMatrix,
    rho_fi: &DensityMatrix,
    ch: &KrausChannel,
    o1: &Observable,
    o2: &Observable,
) -> Result<f64> {
    check_temporal(ch, rho_in, Some(rho_fi), Some(o1), Some(o2))?;
    let d = denominator(&ch.evolve(rho_in.matrix()), Some(rho_fi))?;
    let evolved = ch.evolve(&anticommutator(o1.matrix(), rho_in.matrix())?);
    let outer = anticommutator(o2.matrix(), &evolved)?;
    real(rho_fi.matrix().trace_product(&outer) * 0.25 / d)
}

/// [`temporal_corr_post`] with all four mapped objects taken from a bundle.
pub fn temporal_corr_bundle(ch: &KrausChannel, b: &CorrespondenceBundle) -> Result<f64> {
    temporal_corr_post(&b.rho_in, &b.rho_fi, ch, &b.o1, &b.o2)
}

/// Post-selection pair `ρ_A^fi ⊗ ρ_B^fi`, defaulting each factor to `I/d`.
fn boundary_product(
    dims: (usize, usize),
    rho_a_fi: Option<&DensityMatrix>,
    rho_b_fi: Option<&DensityMatrix>,
) -> Result<CMatrix> {
    let fa = match rho_a_fi {
        Some(r) => {
            expect_dim("ρ_A^fi", r.dim(), dims.0)?;
            r.matrix().clone()
        }
        None => CMatrix::identity(dims.0).scale_real(1.0 / dims.0 as f64),
    };
    let fb = match rho_b_fi {
        Some(r) => {
            expect_dim("ρ_B^fi", r.dim(), dims.1)?;
            r.matrix().clone()
        }
        None => CMatrix::identity(dims.1).scale_real(1.0 / dims.1 as f64),
    };
    Ok(kron(&fa, &fb))
}

/// Correlation of spacelike pointers:
/// `E = Tr[F {I⊗O_B, {O_A⊗I, ρ_AB}}] / (4 Tr[F ρ_AB])`, `F = ρ_A^fi ⊗ ρ_B^fi`.
///
/// Works on explicit `d_A·d_B`-dimensional matrices.
pub fn spatial_corr(
    rho_ab: &BipartiteState,
    o_a: &Observable,
    o_b: &Observable,
    rho_a_fi: Option<&DensityMatrix>,
    rho_b_fi: Option<&DensityMatrix>,
) -> Result<f64> {
    let dims = rho_ab.dims();
    expect_dim("O_A", o_a.dim(), dims.0)?;
    expect_dim("O_B", o_b.dim(), dims.1)?;
    let f = boundary_product(dims, rho_a_fi, rho_b_fi)?;
    let rho = rho_ab.matrix();
    let den = f.trace_product(rho).re;
    if den <= crate::channels::MIN_DENOMINATOR {
        return Err(Error::IncompatibleBoundary { denominator: den });
    }
    let a = kron(o_a.matrix(), &CMatrix::identity(dims.1));
    let b = kron(&CMatrix::identity(dims.0), o_b.matrix());
    // {A, ρ} = Aρ + (Aρ)† and Tr[F{B, X}] = Tr[{F, B} X] for Hermitian operands
    let a_rho = &a * rho;
    let inner = &a_rho + &a_rho.dagger();
    let fb = &f * &b;
    let f_b = &fb + &fb.dagger();
    real(f_b.trace_product(&inner) / (4.0 * den))
}

/// Mean of one pointer in the two-time setting.
///
/// First: `½ Tr[ρ_fi Σ p_z M_z {O, ρ_in} M_z†] / D`.
/// Second: `½ Tr[ρ_fi {O, Σ p_z M_z ρ_in M_z†}] / D`.
/// `D = Tr[ρ_fi Σ p_z M_z ρ_in M_z†]`; without post-selection `ρ_fi` acts as
/// the trace.
pub fn temporal_single(
    rho_in: &DensityMatrix,
    rho_fi: Option<&DensityMatrix>,
    ch: &KrausChannel,
    o: &Observable,
    which: Instant,
) -> Result<f64> {
    match which {
        Instant::First => check_temporal(ch, rho_in, rho_fi, Some(o), None)?,
        Instant::Second => check_temporal(ch, rho_in, rho_fi, None, Some(o))?,
    }
    let evolved_state = ch.evolve(rho_in.matrix());
    let d = denominator(&evolved_state, rho_fi)?;
    let x = match which {
        Instant::First => ch.evolve(&anticommutator(o.matrix(), rho_in.matrix())?),
        Instant::Second => anticommutator(o.matrix(), &evolved_state)?,
    };
    real(boundary_trace(rho_fi, &x) * 0.5 / d)
}

/// Mean of one pointer in the spatial setting:
/// `Tr[F {O⊗I, ρ_AB}] / (2 Tr[F ρ_AB])` for party A, symmetric for B.
pub fn spatial_single(
    rho_ab: &BipartiteState,
    o: &Observable,
    party: Party,
    rho_a_fi: Option<&DensityMatrix>,
    rho_b_fi: Option<&DensityMatrix>,
) -> Result<f64> {
    let dims = rho_ab.dims();
    let full = match party {
        Party::A => {
            expect_dim("O_A", o.dim(), dims.0)?;
            kron(o.matrix(), &CMatrix::identity(dims.1))
        }
        Party::B => {
            expect_dim("O_B", o.dim(), dims.1)?;
            kron(&CMatrix::identity(dims.0), o.matrix())
        }
    };
    let f = boundary_product(dims, rho_a_fi, rho_b_fi)?;
    let rho = rho_ab.matrix();
    let den = f.trace_product(rho).re;
    if den <= crate::channels::MIN_DENOMINATOR {
        return Err(Error::IncompatibleBoundary { denominator: den });
    }
    let x = anticommutator(&full, rho)?;
    real(f.trace_product(&x) / (2.0 * den))
}

/// Three sequential weak measurements under the trivial evolution with no
/// post-selection: `E = ¼ Tr[O_3 {O_2, {O_1, ρ_in}}]`. Order matters.
pub fn tripartite_temporal(
    rho_in: &DensityMatrix,
    o1: &Observable,
    o2: &Observable,
    o3: &Observable,
) -> Result<f64> {
    let d = rho_in.dim();
    expect_dim("O_1", o1.dim(), d)?;
    expect_dim("O_2", o2.dim(), d)?;
    expect_dim("O_3", o3.dim(), d)?;
    let inner = anticommutator(o1.matrix(), rho_in.matrix())?;
    let outer = anticommutator(o2.matrix(), &inner)?;
    real(o3.matrix().trace_product(&outer) * 0.25)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chronomap::{spatial_to_temporal, state_to_channel};
    use crate::random;
    use crate::states::{paulis, singlet, werner};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn half() -> DensityMatrix {
        DensityMatrix::maximally_mixed(2)
    }

    #[test]
    fn temporal_anchors() {
        let id = KrausChannel::identity(2);
        // ½ Tr[σz {σz, I/2}] = ½ Tr[σz σz] = 1
        assert!((temporal_corr(&half(), &id, &paulis::z(), &paulis::z()).unwrap() - 1.0).abs() < 1e-15);
        assert!(temporal_corr(&half(), &id, &paulis::z(), &paulis::x()).unwrap().abs() < 1e-15);
    }

    #[test]
    fn unitary_evolution_with_pauli_observables_is_state_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..50 {
            let u = random::unitary(2, &mut rng);
            let ch = KrausChannel::single(u.clone());
            let (o1, o2) = (random::pauli_direction(&mut rng), random::pauli_direction(&mut rng));
            let heis = &(&u.dagger() * o2.matrix()) * &u;
            let expected = anticommutator(o1.matrix(), &heis).unwrap().trace().re / 4.0;
            for _ in 0..10 {
                let rho = random::density(2, &mut rng);
                let e = temporal_corr(&rho, &ch, &o1, &o2).unwrap();
                assert!((e - expected).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn post_selection_anchors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let ch = random::channel(2, 3, 2, &mut rng);
            let rho = random::density(2, &mut rng);
            let (o1, o2) = (random::observable(2, &mut rng), random::observable(3, &mut rng));
            let plain = temporal_corr(&rho, &ch, &o1, &o2).unwrap();
            let post = temporal_corr_post(&rho, &DensityMatrix::maximally_mixed(3), &ch, &o1, &o2).unwrap();
            assert!((plain - post).abs() < 1e-13);
        }
        let zero = DensityMatrix::basis(2, 0);
        let id = KrausChannel::identity(2);
        let e = temporal_corr_post(&zero, &zero, &id, &paulis::z(), &paulis::z()).unwrap();
        assert!((e - 1.0).abs() < 1e-15);
        let err = temporal_corr_post(&zero, &DensityMatrix::basis(2, 1), &id, &paulis::z(), &paulis::z());
        assert!(matches!(err, Err(Error::IncompatibleBoundary { .. })));
    }

    #[test]
    fn spatial_anchors() {
        let s = singlet().to_bipartite();
        let e = spatial_corr(&s, &paulis::z(), &paulis::z(), None, None).unwrap();
        assert!((e + 1.0).abs() < 1e-15);
        let ra = DensityMatrix::new(CMatrix::diag_real(&[0.8, 0.2])).unwrap();
        let rb = DensityMatrix::new(CMatrix::from_real(2, 2, &[0.5, 0.3, 0.3, 0.5])).unwrap();
        let prod = BipartiteState::product(&ra, &rb);
        let e = spatial_corr(&prod, &paulis::z(), &paulis::x(), None, None).unwrap();
        assert!((e - paulis::z().expectation(&ra) * paulis::x().expectation(&rb)).abs() < 1e-15);
        for w in [0.0, 0.25, 0.6, 1.0] {
            let e = spatial_corr(&werner(w).unwrap(), &paulis::z(), &paulis::z(), None, None).unwrap();
            assert!((e + w).abs() < 1e-15);
        }
    }

    #[test]
    fn single_anchors() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let rho = random::density(3, &mut rng);
        let o = random::observable(3, &mut rng);
        let id = KrausChannel::identity(3);
        let mixed = DensityMatrix::maximally_mixed(3);
        let e = temporal_single(&rho, Some(&mixed), &id, &o, Instant::First).unwrap();
        assert!((e - o.expectation(&rho)).abs() < 1e-14);
        let e = temporal_single(&rho, None, &id, &o, Instant::Second).unwrap();
        assert!((e - o.expectation(&rho)).abs() < 1e-14);

        let st = BipartiteState::new(random::density(6, &mut rng), (2, 3)).unwrap();
        let oa = random::observable(2, &mut rng);
        let e = spatial_single(&st, &oa, Party::A, None, None).unwrap();
        let direct = kron(oa.matrix(), &CMatrix::identity(3)).trace_product(st.matrix()).re;
        assert!((e - direct).abs() < 1e-14);

        let s = singlet().to_bipartite();
        assert!(spatial_single(&s, &paulis::z(), Party::A, None, None).unwrap().abs() < 1e-15);
        let prod = BipartiteState::product(&DensityMatrix::basis(2, 0), &DensityMatrix::basis(2, 1));
        assert!((spatial_single(&prod, &paulis::z(), Party::B, None, None).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn tripartite_reduces_to_pairwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let rho = random::density(3, &mut rng);
            let (o2, o3) = (random::observable(3, &mut rng), random::observable(3, &mut rng));
            let three = tripartite_temporal(&rho, &Observable::identity(3), &o2, &o3).unwrap();
            let two = temporal_corr(&rho, &KrausChannel::identity(3), &o2, &o3).unwrap();
            assert!((three - two).abs() < 1e-13);
        }
    }

    #[test]
    fn temporal_pairs_are_all_maximal_for_trivial_evolution() {
        let id = KrausChannel::identity(2);
        let e = temporal_corr(&half(), &id, &paulis::z(), &paulis::z()).unwrap();
        assert!((e - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_errors() {
        let id = KrausChannel::identity(2);
        let err = temporal_corr(&half(), &id, &Observable::identity(3), &paulis::z()).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
        let s = singlet().to_bipartite();
        assert!(spatial_corr(&s, &Observable::identity(3), &paulis::z(), None, None).is_err());
    }

    #[test]
    fn theorem_equality_on_fixed_instance() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let rho = BipartiteState::new(random::density(12, &mut rng), (3, 4)).unwrap();
        let (oa, ob) = (random::observable(3, &mut rng), random::observable(4, &mut rng));
        let (fa, fb) = (random::density(3, &mut rng), random::density(4, &mut rng));
        let spatial = spatial_corr(&rho, &oa, &ob, Some(&fa), Some(&fb)).unwrap();
        let bundle = spatial_to_temporal(&oa, &ob, Some(&fa), Some(&fb)).unwrap();
        let temporal = temporal_corr_bundle(&state_to_channel(&rho), &bundle).unwrap();
        assert!((spatial - temporal).abs() < 1e-10, "{spatial} vs {temporal}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn spatial_without_post_selection_is_born_correlator(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (da, db) = (rng.random_range(1..5), rng.random_range(1..5));
            let rho = BipartiteState::new(random::density(da * db, &mut rng), (da, db)).unwrap();
            let (oa, ob) = (random::observable(da, &mut rng), random::observable(db, &mut rng));
            let e = spatial_corr(&rho, &oa, &ob, None, None).unwrap();
            let born = kron(oa.matrix(), ob.matrix()).trace_product(rho.matrix()).re;
            prop_assert!((e - born).abs() < 1e-12);
        }

        #[test]
        fn spatial_is_bilinear(seed in any::<u64>(), c1 in -2.0f64..2.0, c2 in -2.0f64..2.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = BipartiteState::new(random::density(6, &mut rng), (2, 3)).unwrap();
            let (a1, a2) = (random::observable(2, &mut rng), random::observable(2, &mut rng));
            let (b1, b2) = (random::observable(3, &mut rng), random::observable(3, &mut rng));
            let fa = random::full_rank_density(2, &mut rng);
            let fb = random::full_rank_density(3, &mut rng);
            let e = |a: &Observable, b: &Observable| spatial_corr(&rho, a, b, Some(&fa), Some(&fb)).unwrap();
            let mix_a = crate::states::combine(&[(c1, &a1), (c2, &a2)]);
            let mix_b = crate::states::combine(&[(c1, &b1), (c2, &b2)]);
            prop_assert!((e(&mix_a, &b1) - (c1 * e(&a1, &b1) + c2 * e(&a2, &b1))).abs() < 1e-12);
            prop_assert!((e(&a1, &mix_b) - (c1 * e(&a1, &b1) + c2 * e(&a1, &b2))).abs() < 1e-12);
        }
    }
}
