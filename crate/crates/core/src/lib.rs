//! Monte Carlo simulation of objective state reduction for an entangled
//! qubit pair `α|00⟩ + β|11⟩`.
//!
//! The crate integrates the nonlinear stochastic reduction dynamics under
//! frozen, Ornstein–Uhlenbeck and white-noise driving ([`dynamics`],
//! [`noise`]), averages large trajectory ensembles deterministically in
//! parallel ([`ensemble`]), and evaluates the thermodynamic, entanglement
//! and locally obtainable entropies of the result ([`analysis`]).

pub mod analysis;
pub mod cli;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod noise;
pub mod output;

pub use analysis::{
    avg_entanglement, binary_entropy, dephasing_reference, entanglement_entropy, entropy_series, interrupt_entropy,
    von_neumann_entropy, DephasingParams, EntropyRecord, Estimate, Observable,
};
pub use dynamics::{
    sigma_expect, simulate_trajectory, step_deterministic, step_white, ModelParams, Outcome, PairState, Trajectory,
};
pub use ensemble::{
    density_matrix_at, run_ensemble, run_ensemble_with_workers, DensityMatrix2, EnsembleConfig, MomentSeries,
};
pub use error::{Error, Result};
pub use noise::{FrozenDist, NoiseSpec};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
