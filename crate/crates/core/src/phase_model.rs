//! Qubit energy splittings and the dynamical phases basis states pick up
//! while the registers idle between operations.
//!
//! Units have `hbar = 1`, so a splitting is an angular frequency and
//! `splitting * time` is an angle in radians. Only the splitting
//! `Delta = e1 - e0` is observable; the ground energy contributes a global
//! phase and is dropped.
//!
//! # Sampling stream
//!
//! Gaussian splittings are drawn one per `(seed, sample, qubit)` triple. The
//! triple is folded into a 64-bit key with SplitMix64, the key seeds a
//! `ChaCha8Rng` (rand_chacha 0.9) and a single `StandardNormal` variate
//! (rand_distr 0.5, ziggurat) is taken from it. This is stream version
//! [`SPLITTING_STREAM_VERSION`]; results never depend on thread scheduling.

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const SPLITTING_STREAM_VERSION: u32 = 1;

/// Default tolerance (radians) for the phase-matching predicates.
pub const DEFAULT_MATCH_TOL: f64 = 1e-9;

/// How the relative phase of a basis state is counted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseConvention {
    /// Each excited qubit `k` contributes `Delta_k * tau`. Matching at
    /// `tau * Delta = 2 n pi`.
    #[default]
    Hamming,
    /// Each qubit contributes `+Delta_k * tau` when excited and
    /// `-Delta_k * tau` when not, i.e. `(L1 - L0) * Delta * tau` for identical
    /// qubits. Twice the Hamming phase up to a global offset, so matching
    /// moves to `tau * Delta = n pi`. Kept for comparison only.
    Imbalance,
}

/// How qubit energy splittings are assigned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SplittingModel {
    Identical { delta: f64 },
    PerQubit { deltas: Vec<f64> },
    Gaussian(GaussianEnsemble),
}

/// Independent Gaussian splittings with mean `mean` and standard deviation
/// `sigma`, reproducible from `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianEnsemble {
    pub mean: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl SplittingModel {
    /// Per-qubit splittings for a register of `l` qubits. `sample` selects
    /// the ensemble member and is ignored by the deterministic variants.
    pub fn resolve(&self, l: u32, sample: u64) -> Result<Vec<f64>> {
        let deltas = match self {
            SplittingModel::Identical { delta } => vec![*delta; l as usize],
            SplittingModel::PerQubit { deltas } => {
                if deltas.len() != l as usize {
                    return Err(Error::LengthMismatch { expected: l as usize, got: deltas.len() });
                }
                deltas.clone()
            }
            SplittingModel::Gaussian(ens) => sample_splittings_for(ens, sample, l)?,
        };
        if let Some(&bad) = deltas.iter().find(|d| !d.is_finite()) {
            return Err(Error::InvalidSplitting(bad));
        }
        Ok(deltas)
    }
}

/// Idle intervals before the entangler (`tau1`), before the auxiliary
/// measurement (`tau2`), before the Fourier transform (`tau3`) and before the
/// final read-out (`tau4`). Operation durations are taken as zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DelaySchedule {
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
    pub tau4: f64,
}

impl DelaySchedule {
    pub fn new(tau1: f64, tau2: f64, tau3: f64, tau4: f64) -> Result<Self> {
        for t in [tau1, tau2, tau3, tau4] {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::InvalidDelay(t));
            }
        }
        Ok(Self { tau1, tau2, tau3, tau4 })
    }

    /// All delay placed before the Fourier transform.
    pub fn from_total(tau: f64) -> Result<Self> {
        Self::new(0.0, 0.0, tau, 0.0)
    }

    /// Effective delay `tau1 + tau2 + tau3`; `tau4` never contributes.
    pub fn total(&self) -> f64 {
        self.tau1 + self.tau2 + self.tau3
    }
}

/// `sum_k bit_k(j) * Delta_k * tau`: the relative phase of basis state `j`.
/// The state's amplitude is multiplied by `exp(-i * phase)`.
///
/// `deltas[k]` belongs to bit `k` (least significant first); `j` must fit in
/// `deltas.len()` bits.
pub fn state_phase(j: u64, deltas: &[f64], tau: f64) -> f64 {
    excited_splitting_sum(j, deltas) * tau
}

fn excited_splitting_sum(mut j: u64, deltas: &[f64]) -> f64 {
    let mut sum = 0.0;
    while j != 0 {
        sum += deltas[j.trailing_zeros() as usize];
        j &= j - 1;
    }
    sum
}

/// Resolved splittings plus the counting convention: everything needed to
/// evaluate the dynamical phase of any basis state of one register.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitPhases {
    deltas: Vec<f64>,
    convention: PhaseConvention,
    total: f64,
}

impl QubitPhases {
    pub fn new(deltas: Vec<f64>, convention: PhaseConvention) -> Result<Self> {
        if let Some(&bad) = deltas.iter().find(|d| !d.is_finite()) {
            return Err(Error::InvalidSplitting(bad));
        }
        let total = deltas.iter().sum();
        Ok(Self { deltas, convention, total })
    }

    pub fn identical(delta: f64, l: u32) -> Self {
        Self::new(vec![delta; l as usize], PhaseConvention::Hamming).expect("identical splitting must be finite")
    }

    pub fn from_model(model: &SplittingModel, l: u32, sample: u64, convention: PhaseConvention) -> Result<Self> {
        Self::new(model.resolve(l, sample)?, convention)
    }

    pub fn with_convention(mut self, convention: PhaseConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn convention(&self) -> PhaseConvention {
        self.convention
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    pub fn phase(&self, j: u64, tau: f64) -> f64 {
        let excited = excited_splitting_sum(j, &self.deltas);
        match self.convention {
            PhaseConvention::Hamming => excited * tau,
            PhaseConvention::Imbalance => (2.0 * excited - self.total) * tau,
        }
    }
}

/// True iff `tau * delta` lies within `tol` of some `2 n pi` with `n >= 0`.
pub fn is_phase_matched(delta: f64, tau: f64, tol: f64) -> bool {
    let angle = tau * delta;
    if !angle.is_finite() {
        return false;
    }
    let n = (angle / TAU).round().max(0.0);
    (angle - n * TAU).abs() < tol
}

/// Per-qubit matching: every `(delta_k, tau_k)` pair must be matched, each
/// with its own integer `n_k`.
pub fn per_qubit_phase_matched(deltas: &[f64], taus: &[f64], tol: f64) -> Result<bool> {
    if deltas.len() != taus.len() {
        return Err(Error::LengthMismatch { expected: deltas.len(), got: taus.len() });
    }
    Ok(deltas.iter().zip(taus).all(|(&d, &t)| is_phase_matched(d, t, tol)))
}

/// First ensemble member (`sample = 0`) for a register of `l` qubits.
pub fn sample_splittings(ensemble: &GaussianEnsemble, l: u32) -> Result<Vec<f64>> {
    sample_splittings_for(ensemble, 0, l)
}

/// Ensemble member `sample`: `l` independent draws `mean + sigma * z`.
/// With `sigma = 0` every entry is exactly `mean`.
pub fn sample_splittings_for(ensemble: &GaussianEnsemble, sample: u64, l: u32) -> Result<Vec<f64>> {
    let GaussianEnsemble { mean, sigma, seed } = *ensemble;
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidSigma(sigma));
    }
    if !mean.is_finite() {
        return Err(Error::InvalidSplitting(mean));
    }
    Ok((0..u64::from(l))
        .map(|qubit| {
            if sigma == 0.0 {
                return mean;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, sample, qubit));
            let z: f64 = StandardNormal.sample(&mut rng);
            mean + sigma * z
        })
        .collect())
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn derive_seed(seed: u64, sample: u64, qubit: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ sample) ^ qubit)
}
