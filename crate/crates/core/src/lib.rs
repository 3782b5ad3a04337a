//! Weak-measurement correlations in space and time.
//!
//! A pure bipartite state `Σ α_ij |i⟩⊗|j⟩` corresponds to the single Kraus
//! operator `M = α†`, and mixtures of states to mixtures of evolutions. Under
//! this correspondence (with `O_2 = O_B*` and `ρ_fi = ρ_B^fi*`) the correlation
//! of two weak measurements on spatially separated parties equals the
//! correlation of two weak measurements made before and after the evolution.
//!
//! Modules, bottom-up:
//!
//! - [`matcore`]: dense complex matrices, Kronecker products, partial traces
//!   and a deterministic Hermitian eigendecomposition.
//! - [`states`]: density matrices, observables, named states, Haar sampling.
//! - [`channels`]: weighted Kraus sets with state-dependent normalization.
//! - [`chronomap`]: the state/channel correspondence in both directions.
//! - [`correlators`]: closed-form weak correlations (temporal, spatial,
//!   singles, three-time).
//! - [`pointer_oracle`]: exact finite-strength Gaussian-pointer model and a
//!   Monte Carlo sampler of pointer readings.
//! - [`inequalities`]: CHSH in space and time, Werner scans, CGLMP for qutrits.
//! - [`studies`]: Haar concentration, decohering dynamics, and the cost
//!   comparison of the two evaluation routes.
//! - [`verify`]: randomized equality suites shared by tests and the CLI.

pub mod channels;
pub mod chronomap;
pub mod correlators;
pub mod error;
pub mod inequalities;
pub mod matcore;
pub mod pointer_oracle;
pub mod random;
pub mod states;
pub mod studies;
pub mod verify;

pub use channels::KrausChannel;
pub use error::{Error, Result};
pub use matcore::{CMatrix, Party};
pub use num_complex::Complex64;
pub use states::{BipartiteState, DensityMatrix, Observable, PureBipartite};
