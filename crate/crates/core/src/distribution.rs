//! Closed-form read-out statistics of the work register.
//!
//! After the auxiliary register reports `a^s mod N`, the work register holds
//! the `w_s + 1` states `l r + s`, each carrying the dynamical phase it
//! accumulated over the total delay `tau`. The Fourier transform then gives
//!
//! ```text
//! P(k | s) = 1 / (q (w_s + 1)) * | sum_l exp(-i phi(l r + s) tau) exp(2 pi i l k r / q) |^2
//! ```
//!
//! which is evaluated here directly, one `k` at a time. Sums over `l` use a
//! fixed pairwise reduction so results are identical on every backend.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::number_theory::{continued_fraction_order_candidates, FactoringInstance};
use crate::par::{map_range, Backend};
use crate::phase_model::QubitPhases;
use crate::{Error, Result};

/// Largest work register for which distributions are evaluated.
pub const MAX_DISTRIBUTION_QUBITS: u32 = 24;

/// Which auxiliary outcomes a distribution describes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Conditioning {
    /// Conditioned on the auxiliary register having shown `a^s mod N`.
    FixedResidue(u64),
    /// Born-weighted mixture over all auxiliary outcomes, i.e. what is seen
    /// when the auxiliary result is discarded.
    #[default]
    AveragedOverS,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    q: u64,
    probs: Vec<f64>,
    conditioning: Conditioning,
}

impl OutcomeDistribution {
    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    pub fn conditioning(&self) -> Conditioning {
        self.conditioning
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Largest probability and the first `k` attaining it.
    pub fn max(&self) -> (u64, f64) {
        self.probs
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (k, &p)| if p > best.1 { (k as u64, p) } else { best })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrectSetRule {
    /// `round(j q / r) mod q` for `j = 0..r`, ties rounded down.
    #[default]
    NearestMultiple,
    /// Every `k` whose continued-fraction convergents of `k / q` include the
    /// denominator `r`, plus `k = 0`.
    ContinuedFraction,
}

/// The measurement outcomes counted as correct.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectSet {
    kes: Vec<u64>,
    rule: CorrectSetRule,
}

impl CorrectSet {
    pub fn from_outcomes(mut kes: Vec<u64>, rule: CorrectSetRule) -> Self {
        kes.sort_unstable();
        kes.dedup();
        Self { kes, rule }
    }

    pub fn outcomes(&self) -> &[u64] {
        &self.kes
    }

    pub fn rule(&self) -> CorrectSetRule {
        self.rule
    }

    pub fn len(&self) -> usize {
        self.kes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessProbabilities {
    /// `p_e(k_e)` for every correct outcome.
    pub per_outcome: BTreeMap<u64, f64>,
    /// `P_e`, the sum of the above.
    pub total: f64,
}

struct Residue {
    s: u64,
    phasors: Vec<Complex64>,
}

/// Precomputed Fourier twiddles for one instance; reusable across many
/// splittings and delays.
pub struct DistributionKernel {
    inst: FactoringInstance,
    mask: u64,
    twiddles: Vec<Complex64>,
}

impl DistributionKernel {
    pub fn new(inst: &FactoringInstance) -> Result<Self> {
        if inst.l() > MAX_DISTRIBUTION_QUBITS {
            return Err(Error::TooManyQubits { qubits: inst.l(), limit: MAX_DISTRIBUTION_QUBITS });
        }
        let q = inst.q();
        let twiddles = (0..q)
            .map(|m| {
                let (sin, cos) = (TAU * m as f64 / q as f64).sin_cos();
                Complex64::new(cos, sin)
            })
            .collect();
        Ok(Self { inst: *inst, mask: q - 1, twiddles })
    }

    pub fn instance(&self) -> &FactoringInstance {
        &self.inst
    }

    /// Full distribution over `k in [0, q)`.
    pub fn distribution(
        &self,
        backend: Backend,
        phases: &QubitPhases,
        tau: f64,
        conditioning: Conditioning,
    ) -> Result<OutcomeDistribution> {
        let residues = self.residues(phases, tau, conditioning)?;
        let probs = map_range(backend, self.inst.q() as usize, |k| self.probability(&residues, k as u64, conditioning));
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        Ok(OutcomeDistribution { q: self.inst.q(), probs, conditioning })
    }

    /// `P(k)` at the given outcomes only.
    pub fn probabilities_at(
        &self,
        phases: &QubitPhases,
        tau: f64,
        conditioning: Conditioning,
        ks: &[u64],
    ) -> Result<Vec<f64>> {
        let q = self.inst.q();
        if let Some(&k) = ks.iter().find(|&&k| k >= q) {
            return Err(Error::OutcomeOutOfRange { k, q });
        }
        let residues = self.residues(phases, tau, conditioning)?;
        Ok(ks.iter().map(|&k| self.probability(&residues, k, conditioning)).collect())
    }

    /// `P_e = sum over the correct set of P(k_e)`.
    pub fn success_probability(
        &self,
        phases: &QubitPhases,
        tau: f64,
        conditioning: Conditioning,
        cset: &CorrectSet,
    ) -> Result<f64> {
        Ok(self.probabilities_at(phases, tau, conditioning, cset.outcomes())?.iter().sum())
    }

    fn residues(&self, phases: &QubitPhases, tau: f64, conditioning: Conditioning) -> Result<Vec<Residue>> {
        let inst = &self.inst;
        if phases.len() != inst.l() as usize {
            return Err(Error::LengthMismatch { expected: inst.l() as usize, got: phases.len() });
        }
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::InvalidDelay(tau));
        }
        let residue = |s: u64| {
            let phasors = (0..inst.support_size(s))
                .map(|l| {
                    let (sin, cos) = phases.phase(l * inst.r() + s, tau).sin_cos();
                    Complex64::new(cos, -sin)
                })
                .collect();
            Residue { s, phasors }
        };
        match conditioning {
            Conditioning::FixedResidue(s) => {
                if s >= inst.r() {
                    return Err(Error::ResidueOutOfRange { s, r: inst.r() });
                }
                if inst.support_size(s) == 0 {
                    return Err(Error::ZeroProbabilityOutcome { s });
                }
                Ok(vec![residue(s)])
            }
            Conditioning::AveragedOverS => Ok(inst.supported_residues().map(residue).collect()),
        }
    }

    fn amplitude(&self, residue: &Residue, k: u64) -> Complex64 {
        let step = self.inst.r().wrapping_mul(k) & self.mask;
        let term = |l: usize| residue.phasors[l] * self.twiddles[((l as u64).wrapping_mul(step) & self.mask) as usize];
        pairwise_sum(0, residue.phasors.len(), &term)
    }

    fn probability(&self, residues: &[Residue], k: u64, conditioning: Conditioning) -> f64 {
        let q = self.inst.q() as f64;
        match conditioning {
            Conditioning::FixedResidue(_) => {
                let r = &residues[0];
                debug_assert_eq!(Conditioning::FixedResidue(r.s), conditioning);
                self.amplitude(r, k).norm_sqr() / (q * r.phasors.len() as f64)
            }
            // Pr(s) P(k|s) = (w+1)/q * |amp|^2 / (q (w+1))
            Conditioning::AveragedOverS => {
                residues.iter().map(|r| self.amplitude(r, k).norm_sqr()).sum::<f64>() / (q * q)
            }
        }
    }
}

fn pairwise_sum<F: Fn(usize) -> Complex64>(lo: usize, hi: usize, term: &F) -> Complex64 {
    const BLOCK: usize = 32;
    if hi - lo <= BLOCK {
        (lo..hi).fold(Complex64::new(0.0, 0.0), |acc, l| acc + term(l))
    } else {
        let mid = lo + (hi - lo) / 2;
        pairwise_sum(lo, mid, term) + pairwise_sum(mid, hi, term)
    }
}

/// Read-out distribution of the work register for total delay `tau`.
pub fn outcome_distribution(
    inst: &FactoringInstance,
    phases: &QubitPhases,
    tau: f64,
    conditioning: Conditioning,
) -> Result<OutcomeDistribution> {
    outcome_distribution_with(Backend::default(), inst, phases, tau, conditioning)
}

pub fn outcome_distribution_with(
    backend: Backend,
    inst: &FactoringInstance,
    phases: &QubitPhases,
    tau: f64,
    conditioning: Conditioning,
) -> Result<OutcomeDistribution> {
    DistributionKernel::new(inst)?.distribution(backend, phases, tau, conditioning)
}

/// Distribution with no delay: textbook order finding.
pub fn ideal_distribution(inst: &FactoringInstance, conditioning: Conditioning) -> Result<OutcomeDistribution> {
    outcome_distribution(inst, &QubitPhases::identical(0.0, inst.l()), 0.0, conditioning)
}

pub fn correct_set(inst: &FactoringInstance, rule: CorrectSetRule) -> CorrectSet {
    let (q, r) = (inst.q(), inst.r());
    let kes = match rule {
        CorrectSetRule::NearestMultiple => (0..r)
            .map(|j| {
                // floor(j q / r + 1/2 - 1/(2r)): nearest integer, halves go down
                let num = 2 * u128::from(j) * u128::from(q) + u128::from(r) - 1;
                (num / (2 * u128::from(r))) as u64 % q
            })
            .collect(),
        CorrectSetRule::ContinuedFraction => std::iter::once(0)
            .chain((1..q).filter(|&k| continued_fraction_order_candidates(k, q, inst.n()).contains(&r)))
            .collect(),
    };
    CorrectSet::from_outcomes(kes, rule)
}

pub fn success_probabilities(dist: &OutcomeDistribution, cset: &CorrectSet) -> Result<SuccessProbabilities> {
    let mut per_outcome = BTreeMap::new();
    for &k in cset.outcomes() {
        let p = *dist.probs.get(k as usize).ok_or(Error::OutcomeOutOfRange { k, q: dist.q })?;
        per_outcome.insert(k, p);
    }
    let total = per_outcome.values().sum();
    Ok(SuccessProbabilities { per_outcome, total })
}

/// Probability of each correct outcome (`|0>` or `|2>`) when factoring 4
/// with `a = 3` on a two-qubit work register: `(1 + cos(tau * delta)) / 4`.
pub fn analytic_n4(tau: f64, delta: f64) -> f64 {
    (1.0 + (tau * delta).cos()) / 4.0
}
