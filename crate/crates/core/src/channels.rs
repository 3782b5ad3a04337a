//! Generalized evolutions as weighted Kraus sets.
//!
//! A channel stores raw pairs `(p_z, M_z)`. The state-dependent normalization
//! `M'_z = √p_z M_z / √D` is never materialized: `D` depends on the boundary
//! states and is recomputed per evaluation by [`KrausChannel::normalization_scalar`].

use crate::error::{Error, Result};
use crate::matcore::CMatrix;
use crate::states::DensityMatrix;

/// Weights below this are clamped to zero instead of rejected.
const WEIGHT_ROUNDOFF: f64 = 1e-12;
/// Normalizations at or below this mean the boundary conditions are incompatible.
pub const MIN_DENOMINATOR: f64 = 1e-14;
const STRUCTURE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    elements: Vec<(f64, CMatrix)>,
    d_in: usize,
    d_out: usize,
    renormalized: bool,
}

impl KrausChannel {
    /// Validates a list of `(weight, d_out × d_in matrix)` pairs.
    ///
    /// Weights within round-off of zero are clamped; weights that do not sum
    /// to one are rescaled and the channel remembers it (see
    /// [`KrausChannel::was_renormalized`]).
    pub fn new(elements: Vec<(f64, CMatrix)>) -> Result<Self> {
        let (d_out, d_in) = elements.first().ok_or(Error::EmptyChannel)?.1.shape();
        let mut cleaned = Vec::with_capacity(elements.len());
        for (index, (p, m)) in elements.into_iter().enumerate() {
            if m.shape() != (d_out, d_in) {
                return Err(Error::Shape(format!(
                    "Kraus element {index} is {:?}, expected ({d_out}, {d_in})",
                    m.shape()
                )));
            }
            if !p.is_finite() {
                return Err(Error::OutOfRange {
                    name: "weight",
                    value: p,
                    range: "finite, >= 0",
                });
            }
            if p < -WEIGHT_ROUNDOFF {
                return Err(Error::NegativeWeight { index, weight: p });
            }
            cleaned.push((p.max(0.0), m));
        }
        if !cleaned.iter().any(|(p, m)| *p > 0.0 && m.max_abs() > 0.0) {
            return Err(Error::ZeroChannel);
        }
        let total: f64 = cleaned.iter().map(|(p, _)| p).sum();
        let renormalized = (total - 1.0).abs() > 1e-10;
        if renormalized {
            cleaned.iter_mut().for_each(|(p, _)| *p /= total);
        }
        Ok(Self {
            elements: cleaned,
            d_in,
            d_out,
            renormalized,
        })
    }

    /// The identity evolution on dimension `d`.
    pub fn identity(d: usize) -> Self {
        Self::single(CMatrix::identity(d))
    }

    /// A single Kraus operator with weight 1. Panics on a zero matrix.
    pub fn single(m: CMatrix) -> Self {
        Self::new(vec![(1.0, m)]).expect("nonzero Kraus operator")
    }

    /// Convex combination of channels sharing input/output dimensions.
    pub fn mixture(parts: &[(f64, &KrausChannel)]) -> Result<Self> {
        let mut elements = Vec::new();
        for (w, ch) in parts {
            for (p, m) in &ch.elements {
                elements.push((w * p, m.clone()));
            }
        }
        Self::new(elements)
    }

    pub fn elements(&self) -> &[(f64, CMatrix)] {
        &self.elements
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    /// Whether construction rescaled the weights to sum to one.
    pub fn was_renormalized(&self) -> bool {
        self.renormalized
    }

    /// `Σ_z p_z M_z X M_z†` for an arbitrary `d_in × d_in` operator `X`.
    pub fn evolve(&self, x: &CMatrix) -> CMatrix {
        assert_eq!(x.shape(), (self.d_in, self.d_in), "operator does not match channel input");
        let mut acc = CMatrix::zeros(self.d_out, self.d_out);
        for (p, m) in &self.elements {
            if *p == 0.0 {
                continue;
            }
            let term = &(m * x) * &m.dagger();
            acc = &acc + &term.scale_real(*p);
        }
        acc
    }

    fn check_input(&self, rho_in: &DensityMatrix, rho_fi: Option<&DensityMatrix>) -> Result<()> {
        if rho_in.dim() != self.d_in {
            return Err(Error::Shape(format!(
                "initial state has dimension {}, channel input is {}",
                rho_in.dim(),
                self.d_in
            )));
        }
        if let Some(fi) = rho_fi {
            if fi.dim() != self.d_out {
                return Err(Error::Shape(format!(
                    "post-selected state has dimension {}, channel output is {}",
                    fi.dim(),
                    self.d_out
                )));
            }
        }
        Ok(())
    }

    /// The common denominator `D` of the normalized Kraus operators.
    ///
    /// Without post-selection `D = Tr[Σ p_z M_z† M_z ρ_in]`; with it
    /// `D = Tr[ρ_fi Σ p_z M_z ρ_in M_z†]`.
    pub fn normalization_scalar(
        &self,
        rho_in: &DensityMatrix,
        rho_fi: Option<&DensityMatrix>,
    ) -> Result<f64> {
        self.check_input(rho_in, rho_fi)?;
        let evolved = self.evolve(rho_in.matrix());
        denominator(&evolved, rho_fi)
    }

    /// The evolved state `Σ_z p_z M_z ρ_in M_z† / Tr[...]`.
    ///
    /// A post-selected final state only gates the call: it fails when the
    /// post-selection probability vanishes, and otherwise does not change
    /// the returned state.
    pub fn apply(&self, rho_in: &DensityMatrix, rho_fi: Option<&DensityMatrix>) -> Result<DensityMatrix> {
        self.check_input(rho_in, rho_fi)?;
        let evolved = self.evolve(rho_in.matrix());
        if rho_fi.is_some() {
            denominator(&evolved, rho_fi)?;
        }
        let d = denominator(&evolved, None)?;
        Ok(DensityMatrix::from_trusted(evolved.scale_real(1.0 / d).hermitian_part()))
    }

    /// True when `Σ_z p_z M_z† M_z` is proportional to the identity, i.e. the
    /// normalization does not depend on the input state.
    pub fn is_trace_preserving(&self) -> bool {
        let mut sum = CMatrix::zeros(self.d_in, self.d_in);
        for (p, m) in &self.elements {
            sum = &sum + &(&m.dagger() * m).scale_real(*p);
        }
        let c = sum.trace().re / self.d_in as f64;
        c > 0.0 && sum.max_abs_diff(&CMatrix::identity(self.d_in).scale_real(c)) <= STRUCTURE_TOL * c
    }

    /// True for a single effective Kraus operator with `M†M = c I`, `c > 0`.
    pub fn is_unitary(&self) -> bool {
        if self.d_in != self.d_out {
            return false;
        }
        let mut live = self.elements.iter().filter(|(p, m)| *p > 0.0 && m.max_abs() > 0.0);
        let (Some((_, m)), None) = (live.next(), live.next()) else {
            return false;
        };
        let mm = &m.dagger() * m;
        let c = mm.trace().re / self.d_in as f64;
        c > 0.0 && mm.max_abs_diff(&CMatrix::identity(self.d_in).scale_real(c)) <= STRUCTURE_TOL * c
    }
}

/// `Tr[ρ_fi X]`, or `Tr[X]` without post-selection, checked against [`MIN_DENOMINATOR`].
pub(crate) fn denominator(evolved: &CMatrix, rho_fi: Option<&DensityMatrix>) -> Result<f64> {
    let d = match rho_fi {
        Some(fi) => fi.matrix().trace_product(evolved).re,
        None => evolved.trace().re,
    };
    if d <= MIN_DENOMINATOR {
        return Err(Error::IncompatibleBoundary { denominator: d });
    }
    Ok(d)
}

pub fn make_channel(elements: Vec<(f64, CMatrix)>) -> Result<KrausChannel> {
    KrausChannel::new(elements)
}
