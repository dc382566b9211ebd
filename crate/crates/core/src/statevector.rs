//! Brute-force simulation of the delayed order-finding pipeline on the joint
//! work and auxiliary registers. Shares no code path with
//! [`crate::distribution`] beyond the instance and the phase rule, so it
//! serves as an independent check of the closed form.
//!
//! Amplitudes are stored work-major: index `j * 2^L' + x` holds
//! `|j>_W |x>_A`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::number_theory::{mod_pow, FactoringInstance};
use crate::par::{for_each_indexed, Backend};
use crate::phase_model::{DelaySchedule, QubitPhases};
use crate::{Error, Result};

/// Largest joint register (`L + L'`) the simulator will allocate.
pub const MAX_PIPELINE_QUBITS: u32 = 24;

/// How the auxiliary measurement is resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuxOutcome {
    /// Post-select the outcome `a^s mod N`.
    Forced(u64),
    /// Draw the outcome from its Born distribution.
    BornSample(u64),
}

/// Pipeline stages at which the joint-state norm is recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Hadamard,
    FirstDelay,
    Entangler,
    SecondDelay,
    Measurement,
    ThirdDelay,
    Fourier,
    FinalDelay,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    /// Residue `s` in `[0, r)` whose value `a^s mod N` was observed.
    pub s_measured: u64,
    pub aux_value: u64,
    /// Born probability of `aux_value` before collapse.
    pub aux_probability: f64,
    /// `|amplitude|^2` over the work basis, summed over the auxiliary index.
    pub work_distribution: Vec<f64>,
    /// Work-register amplitudes right before read-out, with the (global)
    /// auxiliary factor divided out.
    pub work_amplitudes: Vec<Complex64>,
    pub stage_norms: Vec<(Stage, f64)>,
}

/// Joint state of the work and auxiliary registers.
#[derive(Debug, Clone)]
pub struct JointState {
    l: u32,
    l_aux: u32,
    amps: Vec<Complex64>,
}

impl JointState {
    /// Uniform superposition on the work register, auxiliary in `|0>`.
    fn hadamard(l: u32, l_aux: u32) -> Self {
        let q = 1usize << l;
        let aux_dim = 1usize << l_aux;
        let mut amps = vec![Complex64::new(0.0, 0.0); q << l_aux];
        let h = 1.0 / (q as f64).sqrt();
        for j in 0..q {
            amps[j * aux_dim] = Complex64::new(h, 0.0);
        }
        Self { l, l_aux, amps }
    }

    fn aux_dim(&self) -> usize {
        1 << self.l_aux
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        compensated_sum(self.amps.iter().map(|a| a.norm_sqr()))
    }

    fn free_evolve(&mut self, backend: Backend, work: &QubitPhases, aux: &QubitPhases, tau: f64) {
        if tau == 0.0 {
            return;
        }
        let mask = self.aux_dim() - 1;
        let shift = self.l_aux;
        for_each_indexed(backend, &mut self.amps, |idx, amp| {
            let phase = work.phase((idx >> shift) as u64, tau) + aux.phase((idx & mask) as u64, tau);
            let (sin, cos) = phase.sin_cos();
            *amp *= Complex64::new(cos, -sin);
        });
    }

    /// `|j>|0> -> |j>|a^j mod N>`.
    fn entangle(&mut self, inst: &FactoringInstance) {
        let aux_dim = self.aux_dim();
        let mut value = 1u64;
        for j in 0..(1usize << self.l) {
            let block = &mut self.amps[j * aux_dim..(j + 1) * aux_dim];
            debug_assert!(block[1..].iter().all(|a| *a == Complex64::new(0.0, 0.0)));
            block.swap(0, value as usize);
            value = value * inst.a() % inst.n();
        }
    }

    fn aux_marginal(&self) -> Vec<f64> {
        let aux_dim = self.aux_dim();
        (0..aux_dim).map(|x| compensated_sum(self.amps.iter().skip(x).step_by(aux_dim).map(|a| a.norm_sqr()))).collect()
    }

    /// Projects the auxiliary register onto `|x>` and renormalises.
    fn project_aux(&mut self, x: usize) {
        let aux_dim = self.aux_dim();
        let kept = compensated_sum(self.amps.iter().skip(x).step_by(aux_dim).map(|a| a.norm_sqr()));
        let scale = 1.0 / kept.sqrt();
        for (idx, amp) in self.amps.iter_mut().enumerate() {
            if idx % aux_dim == x {
                *amp *= scale;
            } else {
                *amp = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Fourier transform of the work register for every auxiliary column
    /// that carries amplitude.
    fn fourier_work(&mut self) {
        let aux_dim = self.aux_dim();
        let q = 1usize << self.l;
        let table = TwiddleTable::new(q);
        let mut column = vec![Complex64::new(0.0, 0.0); q];
        for x in 0..aux_dim {
            if self.amps.iter().skip(x).step_by(aux_dim).all(|a| a.norm_sqr() == 0.0) {
                continue;
            }
            for (j, c) in column.iter_mut().enumerate() {
                *c = self.amps[j * aux_dim + x];
            }
            table.transform(&mut column);
            for (j, c) in column.iter().enumerate() {
                self.amps[j * aux_dim + x] = *c;
            }
        }
    }
}

/// Runs Hadamard, delay `tau1`, entangler, delay `tau2`, auxiliary
/// measurement, delay `tau3`, Fourier transform and delay `tau4`, then reads
/// out the work register. Free evolution acts on both registers throughout.
pub fn run_pipeline(
    inst: &FactoringInstance,
    work: &QubitPhases,
    aux: &QubitPhases,
    schedule: &DelaySchedule,
    outcome: AuxOutcome,
) -> Result<PipelineOutput> {
    run_pipeline_with(Backend::default(), inst, work, aux, schedule, outcome)
}

pub fn run_pipeline_with(
    backend: Backend,
    inst: &FactoringInstance,
    work: &QubitPhases,
    aux: &QubitPhases,
    schedule: &DelaySchedule,
    outcome: AuxOutcome,
) -> Result<PipelineOutput> {
    let qubits = inst.l() + inst.l_aux();
    if qubits > MAX_PIPELINE_QUBITS {
        return Err(Error::TooManyQubits { qubits, limit: MAX_PIPELINE_QUBITS });
    }
    if work.len() != inst.l() as usize {
        return Err(Error::LengthMismatch { expected: inst.l() as usize, got: work.len() });
    }
    if aux.len() != inst.l_aux() as usize {
        return Err(Error::LengthMismatch { expected: inst.l_aux() as usize, got: aux.len() });
    }
    let DelaySchedule { tau1, tau2, tau3, tau4 } =
        DelaySchedule::new(schedule.tau1, schedule.tau2, schedule.tau3, schedule.tau4)?;

    let mut norms = Vec::with_capacity(8);
    let mut state = JointState::hadamard(inst.l(), inst.l_aux());
    norms.push((Stage::Hadamard, state.norm_sqr()));
    state.free_evolve(backend, work, aux, tau1);
    norms.push((Stage::FirstDelay, state.norm_sqr()));
    state.entangle(inst);
    norms.push((Stage::Entangler, state.norm_sqr()));
    state.free_evolve(backend, work, aux, tau2);
    norms.push((Stage::SecondDelay, state.norm_sqr()));

    let marginal = state.aux_marginal();
    let aux_value = match outcome {
        AuxOutcome::Forced(s) => {
            if s >= inst.r() {
                return Err(Error::ResidueOutOfRange { s, r: inst.r() });
            }
            let v = inst.aux_value(s);
            if marginal[v as usize] == 0.0 {
                return Err(Error::ZeroProbabilityOutcome { s });
            }
            v
        }
        AuxOutcome::BornSample(seed) => {
            let u: f64 = ChaCha8Rng::seed_from_u64(seed).random();
            let total: f64 = marginal.iter().sum();
            let mut acc = 0.0;
            let mut chosen = None;
            for (x, &p) in marginal.iter().enumerate() {
                if p > 0.0 {
                    acc += p / total;
                    chosen = Some(x as u64);
                    if u < acc {
                        break;
                    }
                }
            }
            chosen.expect("state has non-zero norm")
        }
    };
    let s_measured = (0..inst.r())
        .find(|&s| mod_pow(inst.a(), s, inst.n()).ok() == Some(aux_value))
        .expect("observed value lies on the orbit of a");
    let aux_probability = marginal[aux_value as usize];
    state.project_aux(aux_value as usize);
    norms.push((Stage::Measurement, state.norm_sqr()));

    state.free_evolve(backend, work, aux, tau3);
    norms.push((Stage::ThirdDelay, state.norm_sqr()));
    state.fourier_work();
    norms.push((Stage::Fourier, state.norm_sqr()));
    state.free_evolve(backend, work, aux, tau4);
    norms.push((Stage::FinalDelay, state.norm_sqr()));

    let aux_dim = state.aux_dim();
    let q = inst.q() as usize;
    let work_distribution = (0..q)
        .map(|j| compensated_sum(state.amps[j * aux_dim..(j + 1) * aux_dim].iter().map(|a| a.norm_sqr())))
        .collect();
    // the collapsed auxiliary register contributes one common factor
    let aux_factor = {
        let phase = aux.phase(0, tau1) + aux.phase(aux_value, tau2 + tau3 + tau4);
        let (sin, cos) = phase.sin_cos();
        Complex64::new(cos, sin)
    };
    let work_amplitudes = (0..q).map(|j| state.amps[j * aux_dim + aux_value as usize] * aux_factor).collect();

    Ok(PipelineOutput {
        s_measured,
        aux_value,
        aux_probability,
        work_distribution,
        work_amplitudes,
        stage_norms: norms,
    })
}

/// `out[k] = q^(-1/2) * sum_j in[j] * exp(+2 pi i j k / q)`.
pub fn qft(amplitudes: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut out = amplitudes.to_vec();
    qft_in_place(&mut out)?;
    Ok(out)
}

pub fn qft_in_place(data: &mut [Complex64]) -> Result<()> {
    if !data.len().is_power_of_two() {
        return Err(Error::NotPowerOfTwo(data.len()));
    }
    TwiddleTable::new(data.len()).transform(data);
    Ok(())
}

struct TwiddleTable {
    len: usize,
    /// `exp(2 pi i k / len)` for `k < len / 2`.
    roots: Vec<Complex64>,
}

impl TwiddleTable {
    fn new(len: usize) -> Self {
        let roots = (0..len / 2)
            .map(|k| {
                let (sin, cos) = (TAU * k as f64 / len as f64).sin_cos();
                Complex64::new(cos, sin)
            })
            .collect();
        Self { len, roots }
    }

    /// Iterative radix-2 Cooley-Tukey with a unitary scale.
    fn transform(&self, data: &mut [Complex64]) {
        let n = self.len;
        debug_assert_eq!(data.len(), n);
        if n == 1 {
            return;
        }
        let bits = n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if j > i {
                data.swap(i, j);
            }
        }
        let mut half = 1;
        while half < n {
            let stride = n / (2 * half);
            for start in (0..n).step_by(2 * half) {
                for k in 0..half {
                    let w = self.roots[k * stride];
                    let even = data[start + k];
                    let odd = data[start + k + half] * w;
                    data[start + k] = even + odd;
                    data[start + k + half] = even - odd;
                }
            }
            half *= 2;
        }
        let scale = 1.0 / (n as f64).sqrt();
        data.iter_mut().for_each(|x| *x *= scale);
    }
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use proptest::prelude::*;

    use super::*;
    use crate::distribution::{outcome_distribution, Conditioning};

    fn direct_dft(input: &[Complex64]) -> Vec<Complex64> {
        let q = input.len();
        (0..q)
            .map(|k| {
                input
                    .iter()
                    .enumerate()
                    .map(|(j, &x)| {
                        let (sin, cos) = (TAU * ((j * k) % q) as f64 / q as f64).sin_cos();
                        x * Complex64::new(cos, sin)
                    })
                    .sum::<Complex64>()
                    / (q as f64).sqrt()
            })
            .collect()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn qft_of_basis_zero_is_uniform() {
        let mut v = vec![c(0.0); 32];
        v[0] = c(1.0);
        for x in qft(&v).unwrap() {
            assert!((x - c(1.0 / 32f64.sqrt())).norm() < 1e-15);
        }
    }

    #[test]
    fn qft_of_uniform_is_basis_zero() {
        let v = vec![c(0.25); 16];
        let out = qft(&v).unwrap();
        assert!((out[0] - c(1.0)).norm() < 1e-15);
        assert!(out[1..].iter().all(|x| x.norm() < 1e-15));
    }

    #[test]
    fn qft_of_comb_has_comb_support() {
        let mut v = vec![c(0.0); 16];
        for j in (1..16).step_by(4) {
            v[j] = c(0.5);
        }
        let out = qft(&v).unwrap();
        for (k, x) in out.iter().enumerate() {
            if k % 4 == 0 {
                assert!((x.norm_sqr() - 0.25).abs() < 1e-14, "k={k}");
            } else {
                assert!(x.norm() < 1e-14, "k={k}");
            }
        }
    }

    #[test]
    fn qft_uses_positive_exponent() {
        let mut v = vec![c(0.0); 8];
        v[1] = c(1.0);
        let out = qft(&v).unwrap();
        let expected = Complex64::from_polar(1.0 / 8f64.sqrt(), TAU / 8.0);
        assert!((out[1] - expected).norm() < 1e-15);
    }

    #[test]
    fn qft_rejects_non_power_of_two() {
        assert_eq!(qft(&[c(1.0); 12]).unwrap_err(), Error::NotPowerOfTwo(12));
        assert_eq!(qft(&[c(1.0)]).unwrap(), vec![c(1.0)]);
    }

    proptest! {
        #[test]
        fn qft_matches_direct_dft_and_is_unitary(
            bits in 0u32..9,
            seed in proptest::collection::vec(-1.0f64..1.0, 1024),
        ) {
            let q = 1usize << bits;
            let v: Vec<Complex64> = (0..q).map(|i| Complex64::new(seed[2 * i], seed[2 * i + 1])).collect();
            let fast = qft(&v).unwrap();
            let slow = direct_dft(&v);
            for (a, b) in fast.iter().zip(&slow) {
                prop_assert!((a - b).norm() < 1e-12);
            }
            let n_in: f64 = v.iter().map(|x| x.norm_sqr()).sum();
            let n_out: f64 = fast.iter().map(|x| x.norm_sqr()).sum();
            prop_assert!((n_in - n_out).abs() <= 1e-12 * (1.0 + n_in));
        }
    }

    fn phases(inst: &FactoringInstance, delta: f64) -> (QubitPhases, QubitPhases) {
        (QubitPhases::identical(delta, inst.l()), QubitPhases::identical(delta, inst.l_aux()))
    }

    #[test]
    fn ideal_pipeline_for_fifteen() {
        let inst = FactoringInstance::new(15, 13, 4).unwrap();
        let (w, a) = phases(&inst, 1.0);
        let out = run_pipeline(&inst, &w, &a, &DelaySchedule::default(), AuxOutcome::Forced(0)).unwrap();
        assert_eq!(out.aux_value, 1);
        assert!((out.aux_probability - 0.25).abs() < 1e-15);
        for (k, &p) in out.work_distribution.iter().enumerate() {
            let expected = if k % 4 == 0 { 0.25 } else { 0.0 };
            assert!((p - expected).abs() < 1e-14, "k={k}");
        }
        for (stage, n) in &out.stage_norms {
            assert!((n - 1.0).abs() < 1e-12, "{stage:?}");
        }
    }

    #[test]
    fn four_fails_at_odd_pi() {
        let inst = FactoringInstance::new(4, 3, 2).unwrap();
        let (w, a) = phases(&inst, 1.0);
        let schedule = DelaySchedule::new(PI / 3.0, PI / 3.0, PI / 3.0, 0.0).unwrap();
        let out = run_pipeline(&inst, &w, &a, &schedule, AuxOutcome::Forced(1)).unwrap();
        assert_eq!(out.aux_value, 3);
        assert!(out.work_distribution[0] < 1e-15);
        assert!(out.work_distribution[2] < 1e-15);
    }

    #[test]
    fn matches_closed_form_for_twenty_one() {
        let inst = FactoringInstance::new(21, 5, 9).unwrap();
        let (w, a) = phases(&inst, 1.0);
        let tau = 0.4 * PI;
        let schedule = DelaySchedule::new(0.1 * PI, 0.2 * PI, 0.1 * PI, 0.3).unwrap();
        for s in 0..6 {
            let out = run_pipeline(&inst, &w, &a, &schedule, AuxOutcome::Forced(s)).unwrap();
            assert_eq!(out.s_measured, s);
            let closed = outcome_distribution(&inst, &w, tau, Conditioning::FixedResidue(s)).unwrap();
            let dev = out.work_distribution.iter().zip(closed.probs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(dev < 1e-10, "s={s} dev={dev}");
        }
    }

    #[test]
    fn forced_outcome_errors() {
        let inst = FactoringInstance::new(33, 5, 3).unwrap();
        let (w, a) = phases(&inst, 1.0);
        let sched = DelaySchedule::default();
        assert_eq!(
            run_pipeline(&inst, &w, &a, &sched, AuxOutcome::Forced(9)).unwrap_err(),
            Error::ZeroProbabilityOutcome { s: 9 }
        );
        assert_eq!(
            run_pipeline(&inst, &w, &a, &sched, AuxOutcome::Forced(10)).unwrap_err(),
            Error::ResidueOutOfRange { s: 10, r: 10 }
        );
        let big = FactoringInstance::new(33, 5, 19).unwrap();
        let (w, a) = phases(&big, 1.0);
        assert!(matches!(
            run_pipeline(&big, &w, &a, &sched, AuxOutcome::Forced(0)),
            Err(Error::TooManyQubits { qubits: 25, limit: 24 })
        ));
    }

    #[test]
    fn final_delay_changes_amplitudes_not_probabilities() {
        let inst = FactoringInstance::new(21, 5, 6).unwrap();
        let (w, a) = phases(&inst, 1.0);
        let base = DelaySchedule::new(0.3, 0.4, 0.5, 0.0).unwrap();
        let later = DelaySchedule { tau4: 0.9, ..base };
        let x = run_pipeline(&inst, &w, &a, &base, AuxOutcome::Forced(2)).unwrap();
        let y = run_pipeline(&inst, &w, &a, &later, AuxOutcome::Forced(2)).unwrap();
        let amp_gap = x.work_amplitudes.iter().zip(&y.work_amplitudes).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        assert!(amp_gap > 1e-3);
        for (p, q) in x.work_distribution.iter().zip(&y.work_distribution) {
            assert!((p - q).abs() < 1e-13);
        }
    }

    #[test]
    fn born_sampling_frequencies() {
        // q = 32, r = 6: supports 6, 6, 5, 5, 5, 5
        let inst = FactoringInstance::new(21, 5, 5).unwrap();
        let (w, a) = phases(&inst, 1.0);
        let sched = DelaySchedule::new(0.2, 0.3, 0.1, 0.0).unwrap();
        let runs = 10_000u64;
        let mut counts = [0u64; 6];
        for seed in 0..runs {
            let out =
                run_pipeline_with(Backend::Sequential, &inst, &w, &a, &sched, AuxOutcome::BornSample(seed)).unwrap();
            counts[out.s_measured as usize] += 1;
        }
        for s in 0..6u64 {
            let p = inst.residue_probability(s);
            let sd = (runs as f64 * p * (1.0 - p)).sqrt();
            let diff = (counts[s as usize] as f64 - runs as f64 * p).abs();
            assert!(diff < 3.0 * sd, "s={s} count={} p={p}", counts[s as usize]);
        }
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let vals = [1.0, 1e-16, 1e-16, 1e-16, 1e-16, -1.0];
        assert!((compensated_sum(vals.into_iter()) - 4e-16).abs() < 1e-30);
    }
}
