//! Shor order finding in the presence of operational delays.
//!
//! Between the four unitary blocks of Shor's algorithm (Hadamard layer,
//! modular-exponentiation entangler, auxiliary measurement, Fourier
//! transform) the qubits evolve freely, and every computational basis state
//! picks up a dynamical phase. This crate computes what that does to the
//! final measurement statistics:
//!
//! * [`number_theory`]: modular exponentiation, multiplicative order,
//!   register sizing and continued-fraction post-processing.
//! * [`phase_model`]: qubit energy splittings, per-state dynamical phases and
//!   the phase-matching predicates.
//! * [`distribution`]: closed-form outcome distribution `P(k)`, the set of
//!   correct outputs and the success probabilities `p_e(k_e)` / `P_e`.
//! * [`statevector`]: a brute-force joint-register simulation of the whole
//!   pipeline, used as an independent oracle for [`distribution`].
//! * [`montecarlo`]: ensemble averages over Gaussian-distributed splittings
//!   and the qubit-count decay study.
//! * [`sweep`]: parameter sweeps and the tabular [`SweepResult`] they emit.
//!
//! Data-parallel loops run on rayon when the `parallel` feature is enabled
//! (the default); see [`Backend`].

pub mod distribution;
mod error;
pub mod montecarlo;
pub mod number_theory;
mod par;
pub mod phase_model;
pub mod statevector;
pub mod sweep;

pub use distribution::{
    analytic_n4, correct_set, outcome_distribution, success_probabilities, Conditioning, CorrectSet, CorrectSetRule,
    OutcomeDistribution, SuccessProbabilities,
};
pub use error::{Error, Result};
pub use montecarlo::{decay_with_qubits, ensemble_pe, EnsembleSweepSpec, LinearFit};
pub use number_theory::FactoringInstance;
pub use par::Backend;
pub use phase_model::{DelaySchedule, GaussianEnsemble, PhaseConvention, QubitPhases, SplittingModel};
pub use statevector::{qft, run_pipeline, AuxOutcome, PipelineOutput};
pub use sweep::SweepResult;
