use coarse_beliefs::belief::BeliefStrategy;
use coarse_beliefs::mental_chain::{finite_n_distribution, general_stationary, ladder_transition, LadderSystem, MentalSystem};
use coarse_beliefs::oracle::{regression_battery, run_battery, simulate_chain, simulate_ladder, simulate_welfare};
use coarse_beliefs::scenarios::{autocorr_model, AutocorrParams};
use coarse_beliefs::signal_model::{ContinuousSignalModel, PVector, SignalModel, TransitionKernel};
use coarse_beliefs::welfare::ProblemSpec;

#[test]
fn same_seed_same_bits() {
    let model: SignalModel = ContinuousSignalModel::spiked_tilt(0.4, 0.2, 20.0).unwrap().into();
    let spec = ProblemSpec::tied(0.5, 0.6, 0.5, 2).unwrap();
    let s = BeliefStrategy::fixed(3.0).unwrap();
    let a = simulate_welfare(&model, &spec, &s, 0.3, 25, 20_000, 11).unwrap();
    let b = simulate_welfare(&model, &spec, &s, 0.3, 25, 20_000, 11).unwrap();
    assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
    assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    let c = simulate_welfare(&model, &spec, &s, 0.3, 25, 20_000, 12).unwrap();
    assert_ne!(a.estimate.to_bits(), c.estimate.to_bits());

    let q = TransitionKernel::from_p(PVector::new(0.7, 0.6).unwrap());
    let system = MentalSystem::new(3).unwrap();
    let x = simulate_chain(&q, 1, system, 100, 30_000, 5).unwrap();
    let y = simulate_chain(&q, 1, system, 100, 30_000, 5).unwrap();
    assert_eq!(x.counts, y.counts);
}

#[test]
fn thread_count_does_not_change_results() {
    let q = TransitionKernel::from_p(PVector::new(0.65, 0.55).unwrap());
    let system = MentalSystem::new(2).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate_chain(&q, 2, system, 50, 50_000, 9).unwrap().counts)
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn chain_matches_exact_iteration() {
    let q = TransitionKernel::from_processed([0.3, 0.2], [0.25, 0.4]).unwrap();
    let system = MentalSystem::new(2).unwrap();
    for theta in 1..=2 {
        let est = simulate_chain(&q, theta, system, 12, 200_000, 3).unwrap();
        let exact = finite_n_distribution(&q, theta, system, 12);
        for (i, (e, x)) in est.distribution.probs().iter().zip(exact.probs()).enumerate() {
            let se = est.stderr[i].max(1e-6);
            assert!((e - x).abs() <= 4.0 * se, "theta={theta} i={i}: {e} vs {x}");
        }
    }
}

#[test]
fn battery_sample_agrees() {
    // every fourth case at reduced size; the acceptance run does all twenty
    let cases: Vec<_> = regression_battery().unwrap().into_iter().step_by(4).collect();
    for r in run_battery(&cases, 40_000, 77).unwrap() {
        assert!(r.agrees(3.5), "{r:?}");
    }
}

#[test]
fn ladder_matches_long_run() {
    let model = autocorr_model(&AutocorrParams { draws: 10, ..Default::default() }).unwrap();
    let system = LadderSystem::new(2).unwrap();
    let matrices = ladder_transition(&model.ladder_evidence(0.0).unwrap(), system).unwrap();
    let sims = simulate_ladder(&model, system, 0.0, 400, 100_000, 21).unwrap();
    for (m, sim) in matrices.iter().zip(&sims) {
        let exact = general_stationary(m).unwrap();
        for (i, (e, x)) in sim.distribution.probs().iter().zip(exact.probs()).enumerate() {
            let se = sim.stderr[i].max(1e-6);
            assert!((e - x).abs() <= 4.0 * se, "state {i}: {e} vs {x}");
        }
    }
}
