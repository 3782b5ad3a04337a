//! CHSH and CGLMP in space and in time.
//!
//! Every value is built from weak two-point correlations. On the temporal
//! side the settings are carried over by the state/channel correspondence:
//! Bob's observables are conjugated and the boundary states are maximally
//! mixed.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::KrausChannel;
use crate::chronomap::{pure_to_kraus, state_to_channel};
use crate::correlators::{spatial_corr, temporal_corr_post};
use crate::error::{Error, Result};
use crate::matcore::{CMatrix, TOL};
use crate::states::{combine, max_entangled, paulis, singlet, BipartiteState, DensityMatrix, Observable, PureBipartite};

/// Two observables per party.
#[derive(Debug, Clone, PartialEq)]
pub struct ChshSettings {
    pub a1: Observable,
    pub a2: Observable,
    pub b1: Observable,
    pub b2: Observable,
}

impl ChshSettings {
    pub fn new(a1: Observable, a2: Observable, b1: Observable, b2: Observable) -> Result<Self> {
        if a1.dim() != a2.dim() || b1.dim() != b2.dim() {
            return Err(Error::Shape("settings of one party must share a dimension".into()));
        }
        Ok(ChshSettings { a1, a2, b1, b2 })
    }

    /// `A = σz, σx`; `B = −(σz+σx)/√2, (σx−σz)/√2`. Reaches `2√2` on the singlet.
    pub fn optimal_singlet() -> Self {
        let (z, x) = (paulis::z(), paulis::x());
        ChshSettings {
            b1: combine(&[(-FRAC_1_SQRT_2, &z), (-FRAC_1_SQRT_2, &x)]),
            b2: combine(&[(-FRAC_1_SQRT_2, &z), (FRAC_1_SQRT_2, &x)]),
            a1: z,
            a2: x,
        }
    }

    /// `A = σz, σx`; `B = (σz+σx)/√2, (σz−σx)/√2`. Reaches `2√2` on `|Φ+⟩`.
    pub fn optimal_phi_plus() -> Self {
        let (z, x) = (paulis::z(), paulis::x());
        ChshSettings {
            b1: combine(&[(FRAC_1_SQRT_2, &z), (FRAC_1_SQRT_2, &x)]),
            b2: combine(&[(FRAC_1_SQRT_2, &z), (-FRAC_1_SQRT_2, &x)]),
            a1: z,
            a2: x,
        }
    }

    /// All four square to the identity.
    pub fn is_dichotomic(&self) -> bool {
        [&self.a1, &self.a2, &self.b1, &self.b2].iter().all(|o| {
            let m = o.matrix();
            (m * m).max_abs_diff(&CMatrix::identity(o.dim())) < TOL
        })
    }

    fn combine_with(&self, mut e: impl FnMut(&Observable, &Observable) -> Result<f64>) -> Result<f64> {
        Ok(e(&self.a1, &self.b1)? + e(&self.a1, &self.b2)? + e(&self.a2, &self.b1)? - e(&self.a2, &self.b2)?)
    }
}

/// `S = E(A1,B1) + E(A1,B2) + E(A2,B1) − E(A2,B2)` without post-selection.
pub fn chsh_spatial(rho_ab: &BipartiteState, s: &ChshSettings) -> Result<f64> {
    s.combine_with(|a, b| spatial_corr(rho_ab, a, b, None, None))
}

/// Temporal image of [`chsh_spatial`]: `O_1 = A`, `O_2 = B*`, post-selection on
/// `I/d_out`, and `ρ_in` defaulting to `I/d_in`.
pub fn chsh_temporal(ch: &KrausChannel, s: &ChshSettings, rho_in: Option<&DensityMatrix>) -> Result<f64> {
    let rho_in = rho_in.cloned().unwrap_or_else(|| DensityMatrix::maximally_mixed(ch.d_in()));
    let rho_fi = DensityMatrix::maximally_mixed(ch.d_out());
    s.combine_with(|a, b| temporal_corr_post(&rho_in, &rho_fi, ch, a, &b.conj()))
}

/// `S(w)` of Werner states at [`ChshSettings::optimal_singlet`].
pub fn werner_scan(w_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    let s = ChshSettings::optimal_singlet();
    w_grid
        .iter()
        .map(|&w| Ok((w, chsh_spatial(&crate::states::werner(w)?, &s)?)))
        .collect()
}

/// The evolution mapped from a Werner state: the singlet's unitary with
/// weight `w`, the completely depolarizing map with weight `1 − w`.
pub fn werner_channel(w: f64) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::OutOfRange { name: "w", value: w, range: "[0, 1]" });
    }
    let unitary = KrausChannel::single(pure_to_kraus(&singlet()));
    let mixed = BipartiteState::new(DensityMatrix::maximally_mixed(4), (2, 2))?;
    let depolarizing = state_to_channel(&mixed);
    KrausChannel::mixture(&[(w, &unitary), (1.0 - w, &depolarizing)])
}

/// Temporal counterpart of [`werner_scan`] on [`werner_channel`].
pub fn werner_scan_temporal(w_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    let s = ChshSettings::optimal_singlet();
    w_grid
        .iter()
        .map(|&w| Ok((w, chsh_temporal(&werner_channel(w)?, &s, None)?)))
        .collect()
}

/// First `w` where `|S|` reaches 2, by linear interpolation between scan points.
pub fn violation_threshold(scan: &[(f64, f64)]) -> Option<f64> {
    scan.windows(2).find_map(|pair| {
        let ((w0, s0), (w1, s1)) = (pair[0], pair[1]);
        let (g0, g1) = (s0.abs() - 2.0, s1.abs() - 2.0);
        if g0 < 0.0 && g1 >= 0.0 {
            Some(w0 + (w1 - w0) * (-g0) / (g1 - g0))
        } else {
            None
        }
    })
}

/// Phase offsets of the two CGLMP settings per side.
pub const CGLMP_ALPHA: [f64; 2] = [0.0, 0.5];
pub const CGLMP_BETA: [f64; 2] = [0.25, -0.25];

fn fourier_projectors(offset: f64, sign: f64) -> Vec<Observable> {
    let s = 1.0 / 3f64.sqrt();
    (0..3)
        .map(|k| {
            let v: Vec<Complex64> = (0..3)
                .map(|j| Complex64::from_polar(s, 2.0 * PI * j as f64 * (sign * k as f64 + offset) / 3.0))
                .collect();
            Observable::from_trusted(CMatrix::outer(&v, &v))
        })
        .collect()
}

/// Outcome projectors `[setting][outcome]`, Alice then Bob.
///
/// `|k⟩_a = Σ_j e^{2πi j(k+α_a)/3}|j⟩/√3`, `|l⟩_b = Σ_j e^{2πi j(−l+β_b)/3}|j⟩/√3`.
pub fn cglmp_projectors() -> (Vec<Vec<Observable>>, Vec<Vec<Observable>>) {
    (
        CGLMP_ALPHA.iter().map(|&a| fourier_projectors(a, 1.0)).collect(),
        CGLMP_BETA.iter().map(|&b| fourier_projectors(b, -1.0)).collect(),
    )
}

/// `I₃` from joint probabilities `p(a, k, b, l) = P(A_a = k, B_b = l)`.
pub fn cglmp3_from_probabilities(mut p: impl FnMut(usize, usize, usize, usize) -> Result<f64>) -> Result<f64> {
    // P(X_x = Y_y + shift) summed over outcomes
    let mut shifted = |a: usize, b: usize, alice_minus_bob: i32| -> Result<f64> {
        let mut acc = 0.0;
        for k in 0..3 {
            for l in 0..3 {
                if (k as i32 - l as i32 - alice_minus_bob).rem_euclid(3) == 0 {
                    acc += p(a, k, b, l)?;
                }
            }
        }
        Ok(acc)
    };
    let plus = shifted(0, 0, 0)? + shifted(1, 0, -1)? + shifted(1, 1, 0)? + shifted(0, 1, 0)?;
    let minus = shifted(0, 0, -1)? + shifted(1, 0, 0)? + shifted(1, 1, -1)? + shifted(0, 1, 1)?;
    Ok(plus - minus)
}

fn check_qutrits(dims: (usize, usize)) -> Result<()> {
    if dims != (3, 3) {
        return Err(Error::Shape(format!("CGLMP needs two qutrits, got {dims:?}")));
    }
    Ok(())
}

/// `I₃` of a two-qutrit state. Local bound 2.
pub fn cglmp3(rho_ab: &BipartiteState) -> Result<f64> {
    check_qutrits(rho_ab.dims())?;
    let (pa, pb) = cglmp_projectors();
    cglmp3_from_probabilities(|a, k, b, l| spatial_corr(rho_ab, &pa[a][k], &pb[b][l], None, None))
}

/// `I₃` of a qutrit evolution through the mapped settings.
pub fn cglmp3_temporal(ch: &KrausChannel) -> Result<f64> {
    check_qutrits((ch.d_in(), ch.d_out()))?;
    let (pa, pb) = cglmp_projectors();
    let mixed = DensityMatrix::maximally_mixed(3);
    cglmp3_from_probabilities(|a, k, b, l| temporal_corr_post(&mixed, &mixed, ch, &pa[a][k], &pb[b][l].conj()))
}

/// `(|00⟩ + γ|11⟩ + |22⟩)/√(2+γ²)`.
pub fn schmidt_state(gamma: f64) -> PureBipartite {
    PureBipartite::normalized(CMatrix::diag_real(&[1.0, gamma, 1.0])).expect("nonzero amplitudes")
}

/// Scan of `I₃` over [`schmidt_state`] on `lo, lo+step, …, ≤ hi`; returns the
/// maximizing `(γ, I₃)`. Ties go to the smaller `γ`.
pub fn cglmp3_gamma_scan(lo: f64, hi: f64, step: f64) -> Result<(f64, f64)> {
    if !(step > 0.0 && hi >= lo) {
        return Err(Error::Config(format!("bad scan range [{lo}, {hi}] step {step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    let values: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let g = lo + i as f64 * step;
            cglmp3(&schmidt_state(g).to_bipartite()).map(|v| (g, v))
        })
        .collect::<Result<_>>()?;
    Ok(values.into_iter().fold((f64::NAN, f64::NEG_INFINITY), |best, x| if x.1 > best.1 { x } else { best }))
}

/// Spatial and temporal `I₃` for the maximally entangled and the scan-optimal
/// qutrit states.
#[derive(Debug, Clone, Serialize)]
pub struct CglmpAnomalyReport {
    pub max_entangled_spatial: f64,
    pub max_entangled_temporal: f64,
    pub max_entangled_channel_unitary: bool,
    pub optimal_gamma: f64,
    pub optimal_spatial: f64,
    pub optimal_temporal: f64,
    pub optimal_channel_unitary: bool,
    pub schmidt_weights: Vec<f64>,
}

impl CglmpAnomalyReport {
    /// Temporal equals spatial for both states and the non-unitary evolution
    /// beats the unitary one.
    pub fn holds(&self, tol: f64) -> bool {
        (self.max_entangled_spatial - self.max_entangled_temporal).abs() < tol
            && (self.optimal_spatial - self.optimal_temporal).abs() < tol
            && self.max_entangled_channel_unitary
            && !self.optimal_channel_unitary
            && self.optimal_temporal > self.max_entangled_temporal
            && self.max_entangled_temporal > 2.0
    }
}

/// Scans `γ ∈ [0.001, 2]` in steps of `1e-3`, maps both states to
/// evolutions and evaluates `I₃` on both sides.
pub fn cglmp3_temporal_anomaly() -> Result<CglmpAnomalyReport> {
    let me = max_entangled(3, None)?;
    let me_channel = KrausChannel::single(pure_to_kraus(&me));
    let (gamma, optimal_spatial) = cglmp3_gamma_scan(1e-3, 2.0, 1e-3)?;
    let opt = schmidt_state(gamma);
    let opt_channel = KrausChannel::single(pure_to_kraus(&opt));
    Ok(CglmpAnomalyReport {
        max_entangled_spatial: cglmp3(&me.to_bipartite())?,
        max_entangled_temporal: cglmp3_temporal(&me_channel)?,
        max_entangled_channel_unitary: me_channel.is_unitary(),
        optimal_gamma: gamma,
        optimal_spatial,
        optimal_temporal: cglmp3_temporal(&opt_channel)?,
        optimal_channel_unitary: opt_channel.is_unitary(),
        schmidt_weights: opt.schmidt_weights(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chronomap::channel_to_state;
    use crate::matcore::kron;
    use crate::random;
    use crate::states::werner;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TSIRELSON: f64 = 2.0 * std::f64::consts::SQRT_2;

    fn random_dichotomic(rng: &mut ChaCha8Rng) -> ChshSettings {
        ChshSettings::new(
            random::pauli_direction(rng),
            random::pauli_direction(rng),
            random::pauli_direction(rng),
            random::pauli_direction(rng),
        )
        .unwrap()
    }

    #[test]
    fn tsirelson_values() {
        let s = ChshSettings::optimal_singlet();
        assert!(s.is_dichotomic());
        assert!((chsh_spatial(&singlet().to_bipartite(), &s).unwrap() - TSIRELSON).abs() < 1e-12);
        let phi = max_entangled(2, None).unwrap().to_bipartite();
        let p = ChshSettings::optimal_phi_plus();
        assert!((chsh_spatial(&phi, &p).unwrap() - TSIRELSON).abs() < 1e-12);
        let u = KrausChannel::single(pure_to_kraus(&max_entangled(2, None).unwrap()));
        assert!((chsh_temporal(&u, &p, None).unwrap() - TSIRELSON).abs() < 1e-12);
    }

    #[test]
    fn textbook_settings_cancel_on_the_singlet() {
        // B2 = (σz−σx)/√2 paired with B1 = −(σz+σx)/√2 gives zero, not 2√2
        let (z, x) = (paulis::z(), paulis::x());
        let s = ChshSettings::new(
            z.clone(),
            x.clone(),
            combine(&[(-FRAC_1_SQRT_2, &z), (-FRAC_1_SQRT_2, &x)]),
            combine(&[(FRAC_1_SQRT_2, &z), (-FRAC_1_SQRT_2, &x)]),
        )
        .unwrap();
        assert!(chsh_spatial(&singlet().to_bipartite(), &s).unwrap().abs() < 1e-12);
    }

    #[test]
    fn temporal_value_is_input_independent_for_unitaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let ch = KrausChannel::single(random::unitary(2, &mut rng));
            let s = random_dichotomic(&mut rng);
            let base = chsh_temporal(&ch, &s, None).unwrap();
            for _ in 0..10 {
                let rho = random::density(2, &mut rng);
                assert!((chsh_temporal(&ch, &s, Some(&rho)).unwrap() - base).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn werner_threshold_in_space_and_time() {
        let grid: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
        let spatial = werner_scan(&grid).unwrap();
        let temporal = werner_scan_temporal(&grid).unwrap();
        for ((w, s), (_, t)) in spatial.iter().zip(&temporal) {
            assert!((s - w * TSIRELSON).abs() < 1e-12);
            assert!((s - t).abs() < 1e-12);
        }
        let w_s = violation_threshold(&spatial).unwrap();
        let w_t = violation_threshold(&temporal).unwrap();
        assert!((w_s - FRAC_1_SQRT_2).abs() < 1e-6);
        assert!((w_t - FRAC_1_SQRT_2).abs() < 1e-6);
        let s06 = werner_scan(&[0.6]).unwrap()[0].1;
        assert!((s06 - 1.697).abs() < 1e-3 && s06 < 2.0);
    }

    #[test]
    fn werner_channel_maps_back_to_werner_state() {
        for w in [0.0, 0.3, 1.0] {
            let back = channel_to_state(&werner_channel(w).unwrap());
            assert!(back.matrix().frobenius_diff(werner(w).unwrap().matrix()) < 1e-12);
        }
    }

    #[test]
    fn product_states_respect_local_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..1000 {
            let prod = BipartiteState::product(&random::density(2, &mut rng), &random::density(2, &mut rng));
            assert!(chsh_spatial(&prod, &random_dichotomic(&mut rng)).unwrap().abs() <= 2.0 + 1e-12);
        }
        for _ in 0..300 {
            let prod = BipartiteState::product(&random::density(3, &mut rng), &random::density(3, &mut rng));
            assert!(cglmp3(&prod).unwrap() <= 2.0 + 1e-12);
        }
    }

    #[test]
    fn weak_and_strong_correlators_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..50 {
            let rho = BipartiteState::new(random::density(4, &mut rng), (2, 2)).unwrap();
            let (a, b) = (random::pauli_direction(&mut rng), random::pauli_direction(&mut rng));
            let strong = kron(a.matrix(), b.matrix()).trace_product(rho.matrix()).re;
            assert!((spatial_corr(&rho, &a, &b, None, None).unwrap() - strong).abs() < 1e-12);
        }
    }

    #[test]
    fn cglmp_golden_values() {
        let me = cglmp3(&max_entangled(3, None).unwrap().to_bipartite()).unwrap();
        assert!((me - 2.872_934_051_172_337).abs() < 1e-9, "{me}");
        let (g, best) = cglmp3_gamma_scan(1e-3, 2.0, 1e-3).unwrap();
        assert!((g - 0.792).abs() < 1e-9, "{g}");
        assert!((best - 2.914_854_124_132_738).abs() < 1e-9, "{best}");
        let analytic = (11f64.sqrt() - 3f64.sqrt()) / 2.0;
        assert!((g - analytic).abs() < 1e-3);
    }

    #[test]
    fn cglmp_anomaly_report() {
        let r = cglmp3_temporal_anomaly().unwrap();
        assert!(r.holds(1e-9), "{r:?}");
    }

    #[test]
    fn cglmp_rejects_qubits() {
        assert!(cglmp3(&singlet().to_bipartite()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn tsirelson_envelope(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = BipartiteState::new(random::density(4, &mut rng), (2, 2)).unwrap();
            prop_assert!(chsh_spatial(&rho, &random_dichotomic(&mut rng)).unwrap().abs() <= TSIRELSON + 1e-9);
        }

        #[test]
        fn temporal_chsh_equals_spatial(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = BipartiteState::new(random::density(4, &mut rng), (2, 2)).unwrap();
            let s = ChshSettings::new(
                random::observable(2, &mut rng),
                random::observable(2, &mut rng),
                random::observable(2, &mut rng),
                random::observable(2, &mut rng),
            ).unwrap();
            let spatial = chsh_spatial(&rho, &s).unwrap();
            let temporal = chsh_temporal(&state_to_channel(&rho), &s, None).unwrap();
            prop_assert!((spatial - temporal).abs() < 1e-9);
        }
    }
}
