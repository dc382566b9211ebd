//! Success probabilities under static qubit-to-qubit spread of the energy
//! splitting, and the decay of `p_e(k_e)` with the work-register size.
//!
//! Ensemble member `i` uses the same standard-normal draws for every width
//! and every delay (splittings `mean * (1 + ratio * z_ik)`), so comparisons
//! across the sweep are made on common random numbers.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::distribution::{correct_set, Conditioning, CorrectSetRule, DistributionKernel};
use crate::number_theory::FactoringInstance;
use crate::par::{try_map_range, Backend};
use crate::phase_model::{GaussianEnsemble, PhaseConvention, QubitPhases, SplittingModel};
use crate::sweep::{SweepResult, Value};
use crate::{Error, Result};

pub const DEFAULT_SAMPLES: usize = 1000;

/// Probabilities below this are left out of logarithmic fits.
pub const LOG_FIT_FLOOR: f64 = 1e-300;

/// `points` evenly spaced `tau * <Delta>` offsets spanning `+-half_width_pi * pi`.
pub fn tau_offsets(half_width_pi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points).map(|i| half_width_pi * PI * (2.0 * i as f64 / (points - 1) as f64 - 1.0)).collect(),
    }
}

/// 81 offsets spanning `+-0.2 pi` around each matching point.
pub fn default_tau_offsets() -> Vec<f64> {
    tau_offsets(0.2, 81)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSweepSpec {
    pub inst: FactoringInstance,
    pub mean_delta: f64,
    /// Widths `sigma / <Delta>`.
    pub sigma_ratios: Vec<f64>,
    /// Matching points `tau * <Delta> = 2 n pi`.
    pub matching_orders: Vec<u32>,
    /// Offsets of `tau * <Delta>` (radians) around each matching point.
    pub tau_offsets: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub conditioning: Conditioning,
    pub rule: CorrectSetRule,
    pub convention: PhaseConvention,
}

impl EnsembleSweepSpec {
    /// Matching points only, default sampling.
    pub fn new(inst: FactoringInstance, sigma_ratios: Vec<f64>, matching_orders: Vec<u32>, seed: u64) -> Self {
        Self {
            inst,
            mean_delta: 1.0,
            sigma_ratios,
            matching_orders,
            tau_offsets: vec![0.0],
            samples: DEFAULT_SAMPLES,
            seed,
            conditioning: Conditioning::AveragedOverS,
            rule: CorrectSetRule::NearestMultiple,
            convention: PhaseConvention::Hamming,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsemblePoint {
    pub matching_order: u32,
    pub sigma_ratio: f64,
    /// `tau * <Delta>` in radians.
    pub tau_delta: f64,
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSweep {
    pub points: Vec<EnsemblePoint>,
}

impl EnsembleSweep {
    pub fn find(&self, matching_order: u32, sigma_ratio: f64) -> impl Iterator<Item = &EnsemblePoint> {
        self.points.iter().filter(move |p| p.matching_order == matching_order && p.sigma_ratio == sigma_ratio)
    }

    /// `n,sigma_ratio,tau_delta,Pe_mean,Pe_stderr`.
    pub fn to_table(&self) -> SweepResult {
        let mut t = SweepResult::new(["n", "sigma_ratio", "tau_delta", "Pe_mean", "Pe_stderr"]);
        for p in &self.points {
            t.push_row(vec![
                Value::Int(u64::from(p.matching_order)),
                Value::Real(p.sigma_ratio),
                Value::Real(p.tau_delta),
                Value::Real(p.mean),
                Value::Real(p.stderr),
            ]);
        }
        t
    }
}

/// Mean and standard error of `P_e` over the splitting ensemble at every
/// `(sigma, n, offset)` point, in that nesting order.
pub fn ensemble_pe(spec: &EnsembleSweepSpec) -> Result<EnsembleSweep> {
    ensemble_pe_with(Backend::default(), spec)
}

pub fn ensemble_pe_with(backend: Backend, spec: &EnsembleSweepSpec) -> Result<EnsembleSweep> {
    if spec.samples == 0 {
        return Err(Error::NoSamples);
    }
    if !(spec.mean_delta.is_finite() && spec.mean_delta > 0.0) {
        return Err(Error::InvalidSplitting(spec.mean_delta));
    }
    if let Some(&bad) = spec.sigma_ratios.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        return Err(Error::InvalidSigma(bad));
    }
    let inst = &spec.inst;
    let kernel = DistributionKernel::new(inst)?;
    let cset = correct_set(inst, spec.rule);
    let taus: Vec<(u32, f64)> = spec
        .matching_orders
        .iter()
        .flat_map(|&n| spec.tau_offsets.iter().map(move |&off| (n, TAU * f64::from(n) + off)))
        .collect();
    if let Some(&(_, bad)) = taus.iter().find(|(_, td)| *td < 0.0) {
        return Err(Error::InvalidDelay(bad));
    }

    let mut points = Vec::with_capacity(spec.sigma_ratios.len() * taus.len());
    for &ratio in &spec.sigma_ratios {
        let model = SplittingModel::Gaussian(GaussianEnsemble {
            mean: spec.mean_delta,
            sigma: ratio * spec.mean_delta,
            seed: spec.seed,
        });
        let members = try_map_range(backend, spec.samples, |i| {
            QubitPhases::from_model(&model, inst.l(), i as u64, spec.convention)
        })?;
        let values = try_map_range(backend, taus.len() * spec.samples, |task| {
            let (_, td) = taus[task / spec.samples];
            let phases = &members[task % spec.samples];
            kernel.success_probability(phases, td / spec.mean_delta, spec.conditioning, &cset)
        })?;
        for (chunk, &(n, td)) in values.chunks(spec.samples).zip(&taus) {
            let (mean, stderr) = mean_and_stderr(chunk);
            points.push(EnsemblePoint {
                matching_order: n,
                sigma_ratio: ratio,
                tau_delta: td,
                mean,
                stderr,
                samples: spec.samples,
            });
        }
    }
    Ok(EnsembleSweep { points })
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let first = values[0];
    if values.iter().all(|&v| v == first) {
        return (first, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// True when each successive mean exceeds its predecessor by at most `k`
/// combined standard errors.
pub fn non_increasing_within(means: &[f64], stderrs: &[f64], k: f64) -> bool {
    means.windows(2).zip(stderrs.windows(2)).all(|(m, s)| m[1] <= m[0] + k * s[0].hypot(s[1]))
}

/// Ordinary least-squares line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// `None` unless at least two distinct abscissae are given.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = xs[..n].iter().sum::<f64>() / nf;
    let my = ys[..n].iter().sum::<f64>() / nf;
    let sxx: f64 = xs[..n].iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs[..n].iter().zip(&ys[..n]).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys[..n].iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs[..n].iter().zip(&ys[..n]).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Some(LinearFit { slope, intercept, r_squared, points: n })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub l: u32,
    pub k_e: u64,
    pub p_e: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitDecay {
    pub tau_delta: f64,
    pub rows: Vec<DecayRow>,
    /// Fit of `ln(mean_j p_e(k_e^j))` against `L`.
    pub mean_fit: Option<LinearFit>,
    /// One fit per correct output `j` (the `j`-th smallest `k_e`), tracked
    /// across `L`.
    pub output_fits: Vec<Option<LinearFit>>,
}

impl QubitDecay {
    /// `L,k_e,p_e`.
    pub fn to_table(&self) -> SweepResult {
        let mut t = SweepResult::new(["L", "k_e", "p_e"]);
        for r in &self.rows {
            t.push_row(vec![Value::Int(u64::from(r.l)), Value::Int(r.k_e), Value::Real(r.p_e)]);
        }
        t
    }
}

/// `p_e(k_e)` for identical splittings at angle `tau_delta`, for every work
/// register size in `l_range`, with log-linear fits against `L`.
pub fn decay_with_qubits(n: u64, a: u64, tau_delta: f64, l_range: &[u32]) -> Result<QubitDecay> {
    decay_with_qubits_using(n, a, tau_delta, l_range, PhaseConvention::Hamming, Conditioning::AveragedOverS)
}

pub fn decay_with_qubits_using(
    n: u64,
    a: u64,
    tau_delta: f64,
    l_range: &[u32],
    convention: PhaseConvention,
    conditioning: Conditioning,
) -> Result<QubitDecay> {
    if l_range.is_empty() || l_range.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidRange(format!("L range {l_range:?} must be non-empty and ascending")));
    }
    let mut rows = Vec::new();
    let mut per_l: Vec<(u32, Vec<f64>)> = Vec::new();
    for &l in l_range {
        let inst = FactoringInstance::new(n, a, l)?;
        let kernel = DistributionKernel::new(&inst)?;
        let cset = correct_set(&inst, CorrectSetRule::NearestMultiple);
        let phases = QubitPhases::identical(1.0, l).with_convention(convention);
        let probs = kernel.probabilities_at(&phases, tau_delta, conditioning, cset.outcomes())?;
        rows.extend(cset.outcomes().iter().zip(&probs).map(|(&k_e, &p_e)| DecayRow { l, k_e, p_e }));
        per_l.push((l, probs));
    }

    let log_fit = |points: Vec<(f64, f64)>| {
        let (xs, ys): (Vec<f64>, Vec<f64>) =
            points.into_iter().filter(|&(_, p)| p >= LOG_FIT_FLOOR).map(|(l, p)| (l, p.ln())).unzip();
        least_squares(&xs, &ys)
    };
    let mean_fit =
        log_fit(per_l.iter().map(|(l, p)| (f64::from(*l), p.iter().sum::<f64>() / p.len() as f64)).collect());
    let outputs = per_l.iter().map(|(_, p)| p.len()).min().unwrap_or(0);
    let output_fits =
        (0..outputs).map(|j| log_fit(per_l.iter().map(|(l, p)| (f64::from(*l), p[j])).collect())).collect();
    Ok(QubitDecay { tau_delta, rows, mean_fit, output_fits })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fifteen(l: u32) -> FactoringInstance {
        FactoringInstance::new(15, 13, l).unwrap()
    }

    #[test]
    fn offsets_span_window() {
        let o = default_tau_offsets();
        assert_eq!(o.len(), 81);
        assert!((o[0] + 0.2 * PI).abs() < 1e-15);
        assert_eq!(o[40], 0.0);
        assert!((o[80] - 0.2 * PI).abs() < 1e-15);
        assert_eq!(tau_offsets(0.2, 1), vec![0.0]);
    }

    #[test]
    fn zero_sigma_reproduces_identical_splitting() {
        let inst = fifteen(8);
        let mut spec = EnsembleSweepSpec::new(inst, vec![0.0], vec![1], 5);
        spec.samples = 50;
        spec.tau_offsets = vec![-0.3, 0.0, 0.25];
        let sweep = ensemble_pe(&spec).unwrap();
        let kernel = DistributionKernel::new(&inst).unwrap();
        let cset = correct_set(&inst, CorrectSetRule::NearestMultiple);
        for p in &sweep.points {
            let exact = kernel
                .success_probability(&QubitPhases::identical(1.0, 8), p.tau_delta, Conditioning::AveragedOverS, &cset)
                .unwrap();
            assert_eq!(p.mean, exact);
            assert_eq!(p.stderr, 0.0);
        }
    }

    #[test]
    fn shorter_delay_and_narrower_spread_do_better() {
        let mut spec = EnsembleSweepSpec::new(fifteen(8), vec![0.005], vec![1, 4], 11);
        spec.samples = 200;
        let s = ensemble_pe(&spec).unwrap();
        assert!(s.points[0].mean > s.points[1].mean);

        let mut spec = EnsembleSweepSpec::new(fifteen(8), vec![0.0001, 0.011], vec![1], 11);
        spec.samples = 200;
        let s = ensemble_pe(&spec).unwrap();
        assert!(s.points[0].mean > s.points[1].mean);
    }

    #[test]
    fn ensemble_is_backend_independent() {
        let mut spec = EnsembleSweepSpec::new(fifteen(6), vec![0.003, 0.01], vec![1, 2], 3);
        spec.samples = 64;
        spec.tau_offsets = tau_offsets(0.2, 5);
        let a = ensemble_pe_with(Backend::Sequential, &spec).unwrap();
        let b = ensemble_pe_with(Backend::Parallel, &spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.points.len(), 2 * 2 * 5);
    }

    #[test]
    fn ensemble_validation() {
        let mut spec = EnsembleSweepSpec::new(fifteen(4), vec![0.01], vec![1], 0);
        spec.samples = 0;
        assert_eq!(ensemble_pe(&spec), Err(Error::NoSamples));
        let spec = EnsembleSweepSpec::new(fifteen(4), vec![-0.01], vec![1], 0);
        assert_eq!(ensemble_pe(&spec), Err(Error::InvalidSigma(-0.01)));
    }

    #[test]
    fn stats_helpers() {
        assert_eq!(mean_and_stderr(&[0.3; 7]), (0.3, 0.0));
        let (m, se) = mean_and_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert!(non_increasing_within(&[0.9, 0.8, 0.81], &[0.01, 0.01, 0.01], 2.0));
        assert!(!non_increasing_within(&[0.9, 0.8, 0.9], &[0.01, 0.01, 0.01], 2.0));
    }

    #[test]
    fn least_squares_recovers_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 0.5 * x).collect();
        let fit = least_squares(&xs, &ys).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-14 && (fit.intercept - 3.0).abs() < 1e-14);
        assert!((fit.r_squared - 1.0).abs() < 1e-14);
        assert_eq!(least_squares(&[1.0], &[2.0]), None);
        assert_eq!(least_squares(&[1.0, 1.0], &[2.0, 3.0]), None);
    }

    #[test]
    fn decay_at_five_thirds_pi() {
        let d = decay_with_qubits(15, 13, 5.0 * PI / 3.0, &[4, 5, 6, 7, 8]).unwrap();
        let fit = d.mean_fit.unwrap();
        assert!(fit.slope < 0.0);
        assert!(fit.r_squared > 0.99);
        assert_eq!(d.output_fits.len(), 4);
        for f in &d.output_fits {
            assert!(f.unwrap().slope < 0.0);
        }
        let l4: Vec<u64> = d.rows.iter().filter(|r| r.l == 4).map(|r| r.k_e).collect();
        assert_eq!(l4, vec![0, 4, 8, 12]);
    }

    #[test]
    fn no_decay_at_matching() {
        let d = decay_with_qubits(15, 13, 2.0 * PI, &[4, 5, 6, 7, 8]).unwrap();
        for r in &d.rows {
            assert!((r.p_e - 0.25).abs() < 1e-9, "{r:?}");
        }
        assert!(d.mean_fit.unwrap().slope.abs() < 1e-9);
    }

    #[test]
    fn single_size_has_no_slope() {
        let d = decay_with_qubits(15, 13, 1.0, &[6]).unwrap();
        assert_eq!(d.mean_fit, None);
        assert!(d.output_fits.iter().all(Option::is_none));
        assert!(decay_with_qubits(15, 13, 1.0, &[]).is_err());
        assert!(decay_with_qubits(15, 13, 1.0, &[5, 4]).is_err());
    }
}
