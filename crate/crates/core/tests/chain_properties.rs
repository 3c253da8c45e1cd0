use approx::assert_relative_eq;
use coarse_beliefs::belief::{bayes_params, decision_threshold, threshold_mass, BeliefStrategy, PriorModel};
use coarse_beliefs::mental_chain::{
    finite_n_distribution, finite_n_with_mode, stationary, upper_tail, CountMode, MentalSystem,
};
use coarse_beliefs::signal_model::{PVector, TransitionKernel};
use proptest::prelude::*;

fn interior() -> impl Strategy<Value = (f64, f64)> {
    (0.01f64..0.99, 0.01f64..0.99)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn stationary_ratio_is_detailed(r in 0.01f64..100.0, k in 1usize..8) {
        let system = MentalSystem::new(k).unwrap();
        let dist = stationary(r, system);
        prop_assert!((dist.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for s in -(k as i64)..(k as i64) {
            let ratio = dist.at(s + 1) / dist.at(s);
            prop_assert!((ratio / r - 1.0).abs() < 1e-10, "s={} ratio={} r={}", s, ratio, r);
        }
    }

    #[test]
    fn upper_tail_rises_with_r(r in 0.01f64..50.0, bump in 1.001f64..3.0, k in 1usize..6) {
        let system = MentalSystem::new(k).unwrap();
        let ki = k as i64;
        for t in (1 - ki)..=ki {
            let (lo, hi) = (upper_tail(t, r, system), upper_tail(t, r * bump, system));
            prop_assert!(hi >= lo);
            // strictness is visible only away from the ends of [0, 1]
            if lo > 1e-6 && hi < 1.0 - 1e-6 {
                prop_assert!(hi > lo, "t={} {} vs {}", t, lo, hi);
            }
        }
        prop_assert_eq!(upper_tail(-ki, r, system), 1.0);
        prop_assert_eq!(upper_tail(ki + 1, r, system), 0.0);
    }

    #[test]
    fn long_runs_reach_the_stationary_law((p11, p22) in (0.2f64..0.8, 0.2f64..0.8), k in 1usize..4) {
        let system = MentalSystem::new(k).unwrap();
        let p = PVector::new(p11, p22).unwrap();
        let q = TransitionKernel::from_p(p);
        for theta in 1..=2 {
            let limit = stationary(p.ratio(theta), system);
            let far = finite_n_distribution(&q, theta, system, 4000);
            prop_assert!(far.total_variation(&limit) < 1e-9);
        }
    }

    #[test]
    fn censoring_only_slows_the_chain((p11, p22) in interior(), hold in 0.0f64..0.9, n in 0usize..40) {
        // holding with probability `hold` and counting processed signals
        // reproduces the uncensored chain
        let system = MentalSystem::new(2).unwrap();
        let q = TransitionKernel::from_processed(
            [p11 * (1.0 - hold), (1.0 - p22) * (1.0 - hold)],
            [(1.0 - p11) * (1.0 - hold), p22 * (1.0 - hold)],
        ).unwrap();
        let plain = TransitionKernel::from_p(PVector::new(p11, p22).unwrap());
        for theta in 1..=2 {
            let a = finite_n_with_mode(&q, theta, system, n, CountMode::ProcessedSignals);
            let b = finite_n_distribution(&plain, theta, system, n);
            prop_assert!(a.total_variation(&b) < 1e-12);
        }
    }

    #[test]
    fn threshold_falls_as_prior_odds_rise(d in 1.0f64..10.0, lambda in 0.1f64..10.0, rho in 0.01f64..100.0,
                                          bump in 1.0f64..5.0, ratio in 0.01f64..100.0, k in 1usize..6) {
        let system = MentalSystem::new(k).unwrap();
        let s = BeliefStrategy::new(d, lambda).unwrap();
        let lo = decision_threshold(&s, rho, ratio, system).unwrap();
        let hi = decision_threshold(&s, rho * bump, ratio, system).unwrap();
        prop_assert!(hi <= lo);
        let ki = k as i64;
        prop_assert!((-ki..=ki + 1).contains(&lo));
        // the threshold is the first state whose posterior reaches the ratio
        if lo <= ki {
            prop_assert!(rho * lambda * d.powi(lo as i32) >= ratio * (1.0 - 1e-12));
        }
        if lo > -ki {
            prop_assert!(rho * lambda * d.powi(lo as i32 - 1) < ratio * (1.0 + 1e-12));
        }
    }

    #[test]
    fn threshold_law_is_a_distribution(d in 1.01f64..10.0, sigma in 0.0f64..2.0, ratio in 0.05f64..20.0, k in 1usize..6) {
        let system = MentalSystem::new(k).unwrap();
        let law = threshold_mass(&PriorModel::new(1.0, sigma).unwrap(), &BeliefStrategy::fixed(d).unwrap(), ratio, system).unwrap();
        prop_assert!((law.masses().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(law.masses().iter().all(|m| *m >= 0.0));
    }

    #[test]
    fn bayes_parameters_reproduce_the_posterior((p11, p22) in interior(), k in 1usize..6, rho in 0.1f64..10.0) {
        let system = MentalSystem::new(k).unwrap();
        let p = PVector::new(p11, p22).unwrap();
        let b = bayes_params(p, system).unwrap();
        let (phi1, phi2) = (stationary(p.r1(), system), stationary(p.r2(), system));
        for s in system.states() {
            let direct = rho * phi1.at(s) / phi2.at(s);
            let rule = rho * b.lambda * b.d.powi(s as i32);
            prop_assert!((rule / direct - 1.0).abs() < 1e-9, "s={} rule={} direct={}", s, rule, direct);
        }
    }
}

#[test]
fn stationary_edges() {
    let system = MentalSystem::new(2).unwrap();
    assert_eq!(stationary(f64::INFINITY, system).probs(), &[0.0, 0.0, 0.0, 0.0, 1.0]);
    assert_eq!(stationary(0.0, system).probs(), &[1.0, 0.0, 0.0, 0.0, 0.0]);
    assert_relative_eq!(stationary(2.0, system).at(2), 16.0 / 31.0, max_relative = 1e-14);
    // no overflow for a large memory and a steep drift
    let big = stationary(1e6, MentalSystem::new(200).unwrap());
    assert!(big.probs().iter().all(|p| p.is_finite()));
    assert!(big.at(200) > 0.999);
}
