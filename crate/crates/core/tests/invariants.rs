use std::f64::consts::PI;

use proptest::prelude::*;
use shorphase::number_theory::gcd;
use shorphase::phase_model::sample_splittings_for;
use shorphase::{
    correct_set, ensemble_pe, outcome_distribution, run_pipeline, AuxOutcome, Conditioning, CorrectSetRule,
    DelaySchedule, EnsembleSweepSpec, FactoringInstance, GaussianEnsemble, PhaseConvention, QubitPhases,
};

fn instances() -> impl Strategy<Value = FactoringInstance> {
    (3u64..=33)
        .prop_filter("not a power of two", |n| !n.is_power_of_two())
        .prop_flat_map(|n| {
            let bases: Vec<u64> = (2..n).filter(|&a| gcd(a, n) == 1).collect();
            (Just(n), proptest::sample::select(bases), 1u32..=7)
        })
        .prop_map(|(n, a, l)| FactoringInstance::new(n, a, l).unwrap())
}

fn max_diff(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn work_distribution(
    inst: &FactoringInstance,
    work: &QubitPhases,
    aux_delta: f64,
    schedule: DelaySchedule,
    s: u64,
) -> Vec<f64> {
    let aux = QubitPhases::identical(aux_delta, inst.l_aux());
    run_pipeline(inst, work, &aux, &schedule, AuxOutcome::Forced(s)).unwrap().work_distribution
}

#[test]
fn delay_partitions_with_equal_total_agree() {
    let inst = FactoringInstance::new(15, 7, 5).unwrap();
    let work = QubitPhases::new(vec![1.0, 1.1, 0.9, 1.05, 0.97], PhaseConvention::Hamming).unwrap();
    let reference = work_distribution(&inst, &work, 1.0, DelaySchedule::new(1.0, 2.0, 3.0, 0.0).unwrap(), 1);
    for (t1, t2, t3) in [(6.0, 0.0, 0.0), (0.0, 0.0, 6.0), (0.0, 6.0, 0.0)] {
        let other = work_distribution(&inst, &work, 1.0, DelaySchedule::new(t1, t2, t3, 0.0).unwrap(), 1);
        assert!(max_diff(&reference, &other) < 1e-10);
    }
}

#[test]
fn sigma_zero_ensemble_equals_deterministic() {
    let inst = FactoringInstance::new(15, 13, 8).unwrap();
    let mut spec = EnsembleSweepSpec::new(inst, vec![0.0], vec![1, 2], 99);
    spec.samples = 20;
    spec.tau_offsets = vec![-0.2, 0.1];
    let sweep = ensemble_pe(&spec).unwrap();
    let cset = correct_set(&inst, CorrectSetRule::NearestMultiple);
    for p in &sweep.points {
        let d = outcome_distribution(&inst, &QubitPhases::identical(1.0, 8), p.tau_delta, Conditioning::AveragedOverS)
            .unwrap();
        let exact: f64 = cset.outcomes().iter().map(|&k| d.probs()[k as usize]).sum();
        assert!((p.mean - exact).abs() < 1e-12);
        assert_eq!(p.stderr, 0.0);
    }
}

#[test]
fn tiny_sigma_approaches_deterministic() {
    let inst = FactoringInstance::new(15, 13, 8).unwrap();
    let mut spec = EnsembleSweepSpec::new(inst, vec![1e-14], vec![1], 4);
    spec.samples = 30;
    let p = ensemble_pe(&spec).unwrap().points[0];
    assert!((p.mean - 1.0).abs() < 1e-12);
}

#[test]
fn gaussian_stream_is_reproducible() {
    let ens = GaussianEnsemble { mean: 1.0, sigma: 0.01, seed: 17 };
    assert_eq!(sample_splittings_for(&ens, 3, 8).unwrap(), sample_splittings_for(&ens, 3, 8).unwrap());
    assert_ne!(sample_splittings_for(&ens, 3, 8).unwrap(), sample_splittings_for(&ens, 4, 8).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn every_conditional_distribution_is_normalized(
        inst in instances(),
        deltas in proptest::collection::vec(0.1f64..3.0, 7),
        tau in 0.0f64..20.0,
    ) {
        let work = QubitPhases::new(deltas[..inst.l() as usize].to_vec(), PhaseConvention::Hamming).unwrap();
        for s in inst.supported_residues() {
            let d = outcome_distribution(&inst, &work, tau, Conditioning::FixedResidue(s)).unwrap();
            prop_assert!((d.total() - 1.0).abs() < 1e-10);
            prop_assert!(d.probs().iter().all(|&p| p >= 0.0));
        }
        let avg = outcome_distribution(&inst, &work, tau, Conditioning::AveragedOverS).unwrap();
        prop_assert!((avg.total() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn averaged_is_born_weighted_mixture(inst in instances(), tau in 0.0f64..10.0) {
        let work = QubitPhases::identical(1.0, inst.l());
        let avg = outcome_distribution(&inst, &work, tau, Conditioning::AveragedOverS).unwrap();
        let mut mix = vec![0.0; inst.q() as usize];
        for s in inst.supported_residues() {
            let d = outcome_distribution(&inst, &work, tau, Conditioning::FixedResidue(s)).unwrap();
            for (m, p) in mix.iter_mut().zip(d.probs()) {
                *m += inst.residue_probability(s) * p;
            }
        }
        prop_assert!(max_diff(avg.probs(), &mix) < 1e-12);
    }

    #[test]
    fn readout_delay_and_aux_splitting_do_not_matter(
        inst in instances(),
        tau in 0.0f64..8.0,
        tau4 in 0.0f64..8.0,
        aux_delta in 0.0f64..4.0,
    ) {
        let work = QubitPhases::identical(1.0, inst.l());
        let base = work_distribution(&inst, &work, 1.0, DelaySchedule::new(tau, 0.0, 0.0, 0.0).unwrap(), 0);
        let other = work_distribution(&inst, &work, aux_delta, DelaySchedule::new(0.0, tau, 0.0, tau4).unwrap(), 0);
        prop_assert!(max_diff(&base, &other) < 1e-10);
    }

    #[test]
    fn full_period_shift_is_invisible(inst in instances(), delta in 0.2f64..3.0, tau in 0.0f64..10.0, m in 1u32..4) {
        let work = QubitPhases::identical(delta, inst.l());
        let cond = Conditioning::AveragedOverS;
        let a = outcome_distribution(&inst, &work, tau, cond).unwrap();
        let b = outcome_distribution(&inst, &work, tau + 2.0 * PI * f64::from(m) / delta, cond).unwrap();
        prop_assert!(max_diff(a.probs(), b.probs()) < 1e-10);
    }

    #[test]
    fn matching_points_recover_ideal(inst in instances(), m in 0u32..5) {
        let work = QubitPhases::identical(1.0, inst.l());
        let cond = Conditioning::AveragedOverS;
        let ideal = outcome_distribution(&inst, &work, 0.0, cond).unwrap();
        let matched = outcome_distribution(&inst, &work, 2.0 * PI * f64::from(m), cond).unwrap();
        prop_assert!(max_diff(ideal.probs(), matched.probs()) < 1e-10);
    }
}
