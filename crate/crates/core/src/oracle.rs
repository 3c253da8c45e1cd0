//! Monte Carlo checks of the closed forms.
//!
//! Every trial draws from its own Xoshiro256++ stream, seeded from
//! `(seed, stream, trial)` through SplitMix64, so a run is a pure function
//! of its arguments. Trials are grouped into fixed chunks that run in
//! parallel and are reduced through integer counters, which keeps results
//! bit-identical whatever the scheduling.

use rand::{Rng, RngCore, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::Serialize;

use crate::belief::{posterior, BeliefStrategy};
use crate::error::{domain, Result};
use crate::mental_chain::{LadderState, LadderSystem, MentalSystem, StateDistribution};
use crate::signal_model::{DiscreteSignalModel, SignalModel, TransitionKernel};
use crate::welfare::ProblemSpec;

/// Trials per parallel work unit.
pub const CHUNK: u64 = 4096;

/// z-value of a two-sided 95% interval.
pub const Z95: f64 = 1.959963984540054;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The generator of one trial.
pub fn trial_rng(seed: u64, stream: u64, trial: u64) -> Xoshiro256PlusPlus {
    let key = splitmix64(seed ^ splitmix64(stream.wrapping_add(splitmix64(trial))));
    Xoshiro256PlusPlus::seed_from_u64(key)
}

/// Runs `trials` trials in fixed chunks and sums their integer tallies.
fn tally<F>(trials: u64, width: usize, run_chunk: F) -> Vec<u64>
where
    F: Fn(u64, u64, &mut [u64]) + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut local = vec![0u64; width];
            let start = c * CHUNK;
            run_chunk(start, (start + CHUNK).min(trials), &mut local);
            local
        })
        .reduce(
            || vec![0u64; width],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

/// Empirical occupancy of mental states after a fixed number of signals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainEstimate {
    pub distribution: StateDistribution,
    /// Binomial standard error of each cell.
    pub stderr: Vec<f64>,
    pub counts: Vec<u64>,
    pub trials: u64,
    pub seed: u64,
}

impl ChainEstimate {
    fn from_counts(counts: Vec<u64>, trials: u64, seed: u64) -> Self {
        let n = trials as f64;
        let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
        let stderr = probs.iter().map(|p| (p * (1.0 - p) / n).sqrt()).collect();
        Self {
            distribution: StateDistribution::from_raw(probs),
            stderr,
            counts,
            trials,
            seed,
        }
    }

    /// Empirical `Pr(state index >= i)` and its standard error, for each index.
    pub fn upper_tails(&self) -> Vec<(f64, f64)> {
        let n = self.trials as f64;
        let mut acc = 0u64;
        let mut out: Vec<(f64, f64)> = self
            .counts
            .iter()
            .rev()
            .map(|&c| {
                acc += c;
                let p = acc as f64 / n;
                (p, (p * (1.0 - p) / n).sqrt())
            })
            .collect();
        out.reverse();
        out
    }
}

/// 32-bit thresholds for one step of the two-theory chain.
fn step_thresholds(q: &TransitionKernel, theta: usize) -> (u64, u64) {
    let scale = 4_294_967_296.0;
    let up = (q.q(1, theta) * scale).round() as u64;
    let moved = ((q.q(1, theta) + q.q(2, theta)) * scale).round().min(scale) as u64;
    (up, moved.max(up))
}

#[inline(always)]
fn chain_step(s: i32, u: u32, up: u64, moved: u64, top: i32) -> i32 {
    let u = u as u64;
    let delta = (u < up) as i32 - ((u >= up) & (u < moved)) as i32;
    (s + delta).clamp(0, top)
}

/// Mental state after `n` signals from state 0, over `trials` runs.
///
/// Each 64-bit draw supplies two 32-bit uniforms, so move probabilities are
/// resolved to `2^-32`.
pub fn simulate_chain(
    q: &TransitionKernel,
    theta: usize,
    system: MentalSystem,
    n: usize,
    trials: u64,
    seed: u64,
) -> Result<ChainEstimate> {
    if trials == 0 {
        return Err(domain("at least one trial"));
    }
    if !(1..=2).contains(&theta) {
        return Err(domain(format!("theta must be 1 or 2, got {theta}")));
    }
    let (up, moved) = step_thresholds(q, theta);
    let top = 2 * system.k() as i32;
    let start = system.k() as i32;
    let counts = tally(trials, system.state_count(), |from, to, local| {
        for trial in from..to {
            let mut rng = trial_rng(seed, theta as u64, trial);
            let mut s = start;
            for _ in 0..n / 2 {
                let r = rng.next_u64();
                s = chain_step(s, r as u32, up, moved, top);
                s = chain_step(s, (r >> 32) as u32, up, moved, top);
            }
            if n % 2 == 1 {
                s = chain_step(s, rng.next_u64() as u32, up, moved, top);
            }
            local[s as usize] += 1;
        }
    });
    Ok(ChainEstimate::from_counts(counts, trials, seed))
}

/// Monte Carlo welfare with a 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WelfareEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
    pub seed: u64,
}

impl WelfareEstimate {
    pub fn contains(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }

    /// `|estimate − value|` in standard errors.
    pub fn z_score(&self, value: f64) -> f64 {
        if self.stderr == 0.0 {
            if self.estimate == value {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.estimate - value).abs() / self.stderr
        }
    }
}

/// Per-signal perception sampler.
enum Perceiver<'a> {
    /// Direction of each outcome, 0 when censored.
    Discrete(&'a DiscreteSignalModel, Vec<usize>),
    Continuous(&'a crate::signal_model::ContinuousSignalModel, f64),
}

impl Perceiver<'_> {
    fn new(model: &SignalModel, beta: f64) -> Result<Perceiver<'_>> {
        if !(beta >= 0.0) {
            return Err(domain(format!("censoring level must be >= 0, got {beta}")));
        }
        Ok(match model {
            SignalModel::Discrete(m) => Perceiver::Discrete(m, perceived_directions(m, beta)),
            SignalModel::Continuous(m) => Perceiver::Continuous(m, beta),
        })
    }

    fn perceive<R: Rng>(&self, theta: usize, rng: &mut R) -> usize {
        match self {
            Perceiver::Discrete(m, dirs) => dirs[m.sample_index(theta, rng)],
            Perceiver::Continuous(m, beta) => {
                let x = m.sample(theta, rng);
                match m.classify(x) {
                    Ok(ev) if ev.is_processed(*beta) => ev.direction,
                    _ => 0,
                }
            }
        }
    }
}

fn perceived_directions(model: &DiscreteSignalModel, beta: f64) -> Vec<usize> {
    (0..model.len())
        .map(|i| match model.classify_index(i) {
            Ok(ev) if ev.is_processed(beta) => ev.direction,
            _ => 0,
        })
        .collect()
}

/// End-to-end welfare: draw the state by `π`, the prior by its lognormal
/// law, `n` signals from the model; censor, walk the chain from 0, act on
/// `posterior >= Γ` and collect the payoff.
pub fn simulate_welfare(
    model: &SignalModel,
    spec: &ProblemSpec,
    strategy: &BeliefStrategy,
    beta: f64,
    n: usize,
    trials: u64,
    seed: u64,
) -> Result<WelfareEstimate> {
    if trials == 0 {
        return Err(domain("at least one trial"));
    }
    if model.theta_count() != 2 {
        return Err(domain("welfare simulation needs a two-state model"));
    }
    let perceiver = Perceiver::new(model, beta)?;
    let k = spec.system.k_i();
    let ratio = spec.stakes_ratio();
    let prior = spec.prior;
    // tallies: [state 1 and action 1, state 2 and action 2]
    let counts = tally(trials, 2, |from, to, local| {
        for trial in from..to {
            let mut rng = trial_rng(seed, 0, trial);
            let theta = if rng.random::<f64>() < spec.pi { 1 } else { 2 };
            let z: f64 = rng.sample(StandardNormal);
            let rho_tilde = prior.rho * (prior.sigma_log * z).exp();
            let mut s = 0i64;
            for _ in 0..n {
                match perceiver.perceive(theta, &mut rng) {
                    1 => s = (s + 1).min(k),
                    2 => s = (s - 1).max(-k),
                    _ => {}
                }
            }
            let act1 = posterior(strategy, rho_tilde, s) >= ratio;
            match (theta, act1) {
                (1, true) => local[0] += 1,
                (2, false) => local[1] += 1,
                _ => {}
            }
        }
    });
    let nt = trials as f64;
    let (a, b) = (1.0 - spec.gamma(), spec.gamma());
    let mean = (a * counts[0] as f64 + b * counts[1] as f64) / nt;
    let second = (a * a * counts[0] as f64 + b * b * counts[1] as f64) / nt;
    let var = (second - mean * mean).max(0.0) * nt / (nt - 1.0).max(1.0);
    let stderr = (var / nt).sqrt();
    Ok(WelfareEstimate {
        estimate: mean,
        stderr,
        ci_low: mean - Z95 * stderr,
        ci_high: mean + Z95 * stderr,
        trials,
        seed,
    })
}

/// Ladder occupancy after `n` signals from the neutral state, one estimate per state of the world.
pub fn simulate_ladder(
    model: &DiscreteSignalModel,
    system: LadderSystem,
    beta: f64,
    n: usize,
    trials: u64,
    seed: u64,
) -> Result<Vec<ChainEstimate>> {
    if model.theta_count() != 3 {
        return Err(domain(format!(
            "the ladder needs a three-state model, got {}",
            model.theta_count()
        )));
    }
    if trials == 0 {
        return Err(domain("at least one trial"));
    }
    let dirs = perceived_directions(model, beta);
    // transition table: next[state][direction]
    let width = system.state_count();
    let next: Vec<[usize; 4]> = (0..width)
        .map(|i| {
            let here = system.state(i);
            let mut row = [i; 4];
            for (theory, slot) in row.iter_mut().enumerate().skip(1) {
                *slot = system.index(system.step(here, theory));
            }
            row
        })
        .collect();
    let start = system.index(LadderState::Neutral);
    (1..=3)
        .map(|theta| {
            let counts = tally(trials, width, |from, to, local| {
                for trial in from..to {
                    let mut rng = trial_rng(seed, 16 + theta as u64, trial);
                    let mut s = start;
                    for _ in 0..n {
                        s = next[s][dirs[model.sample_index(theta, &mut rng)]];
                    }
                    local[s] += 1;
                }
            });
            Ok(ChainEstimate::from_counts(counts, trials, seed))
        })
        .collect()
}

/// One configuration of the end-to-end regression battery.
#[derive(Debug, Clone, PartialEq)]
pub struct BatteryCase {
    pub label: String,
    pub model: SignalModel,
    pub spec: ProblemSpec,
    pub strategy: BeliefStrategy,
    pub beta: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryResult {
    pub label: String,
    pub estimate: WelfareEstimate,
    /// `finite_n_welfare` at the same `n`.
    pub exact: f64,
    pub z: f64,
}

impl BatteryResult {
    pub fn agrees(&self, z_tol: f64) -> bool {
        self.z <= z_tol
    }
}

/// Twenty fixed configurations spanning the continuous families, the
/// discrete scenarios, censoring levels, memory sizes, stakes, prior noise
/// and belief rules (monotone and inverted).
pub fn regression_battery() -> Result<Vec<BatteryCase>> {
    use crate::scenarios::{coin_model, illusory_model, lunar_model, CoinParams, IllusoryParams, LunarParams};
    use crate::signal_model::{ContinuousSignalModel, DEFAULT_SPIKED};

    let (sl, sw, ss) = DEFAULT_SPIKED;
    let tilt = |l: f64| -> Result<SignalModel> { Ok(ContinuousSignalModel::exp_tilt(l)?.into()) };
    let spiked = || -> Result<SignalModel> { Ok(ContinuousSignalModel::spiked_tilt(sl, sw, ss)?.into()) };
    let coin = |tosses| -> Result<SignalModel> { Ok(coin_model(&CoinParams { tosses, ..Default::default() })?.into()) };
    let illusory = || -> Result<SignalModel> { Ok(illusory_model(&IllusoryParams::default())?.into()) };
    let lunar = || -> Result<SignalModel> {
        Ok(lunar_model(&LunarParams {
            pool_tension_above: Some(8),
            ..Default::default()
        })?
        .into())
    };
    // (label, model, pi, gamma, sigma_log, K, d, lambda, beta, n)
    #[allow(clippy::type_complexity)]
    let rows: Vec<(&str, SignalModel, f64, f64, f64, usize, f64, f64, f64, usize)> = vec![
        ("tilt1 K2 exact", tilt(1.0)?, 0.5, 0.5, 0.0, 2, 3.0, 1.0, 0.0, 20),
        ("tilt1 K2 noisy", tilt(1.0)?, 0.5, 0.6, 0.5, 2, 3.0, 1.0, 0.0, 20),
        ("tilt2 K3 censored", tilt(2.0)?, 0.4, 0.5, 0.5, 3, 2.0, 1.0, 0.3, 50),
        ("tilt2 K1 high stakes", tilt(2.0)?, 0.5, 0.8, 0.0, 1, 4.0, 1.0, 0.2, 10),
        ("tilt4 K4 long", tilt(4.0)?, 0.5, 0.5, 0.5, 4, 1.5, 0.8, 0.5, 100),
        ("tilt1 inverted", tilt(1.0)?, 0.5, 0.5, 0.5, 2, 0.5, 1.0, 0.0, 20),
        ("tilt1 N0", tilt(1.0)?, 0.3, 0.4, 0.5, 2, 3.0, 1.0, 0.0, 0),
        ("spiked K2", spiked()?, 0.5, 0.5, 0.0, 2, 3.0, 1.0, 0.0, 30),
        ("spiked K2 censored", spiked()?, 0.5, 0.6, 0.5, 2, 3.0, 1.0, 0.6, 30),
        ("spiked K3 one-sided", spiked()?, 0.6, 0.5, 0.5, 3, 2.0, 1.0, 0.95, 30),
        ("coin1 K2", coin(1)?, 0.5, 0.5, 0.5, 2, 2.0, 1.0, 0.0, 15),
        ("coin3 K2 censored", coin(3)?, 0.5, 0.7, 0.5, 2, 3.0, 1.0, 2.0, 15),
        ("coin2 K3", coin(2)?, 0.3, 0.3, 0.0, 3, 2.5, 1.2, 1.0, 25),
        ("illusory K2", illusory()?, 0.5, 0.5, 0.5, 2, 3.0, 1.0, 0.0, 40),
        ("illusory K3 censored", illusory()?, 0.5, 0.4, 0.5, 3, 3.0, 1.0, 0.05, 40),
        ("lunar K2 beta0.35", lunar()?, 0.5, 0.5, 0.5, 2, 3.0, 1.0, 0.35, 200),
        ("lunar K3 beta0.2", lunar()?, 0.5, 0.5, 0.0, 3, 2.0, 1.0, 0.2, 200),
        ("tilt3 K2 skewed prior", tilt(3.0)?, 0.8, 0.7, 0.5, 2, 3.0, 0.5, 0.1, 25),
        ("tilt3 K5", tilt(3.0)?, 0.5, 0.55, 1.0, 5, 2.0, 1.0, 0.0, 60),
        ("spiked K1 noisy", spiked()?, 0.45, 0.5, 1.0, 1, 5.0, 2.0, 0.3, 12),
    ];
    rows.into_iter()
        .map(|(label, model, pi, gamma, sigma, k, d, lambda, beta, n)| {
            Ok(BatteryCase {
                label: label.to_string(),
                model,
                spec: ProblemSpec::tied(pi, gamma, sigma, k)?,
                strategy: BeliefStrategy::new(d, lambda)?,
                beta,
                n,
            })
        })
        .collect()
}

/// Runs every case with `trials` trials; case `i` uses seed `seed + i`.
pub fn run_battery(cases: &[BatteryCase], trials: u64, seed: u64) -> Result<Vec<BatteryResult>> {
    cases
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let estimate = simulate_welfare(&c.model, &c.spec, &c.strategy, c.beta, c.n, trials, seed + i as u64)?;
            let q = c.model.censored_transitions(c.beta)?;
            let exact = crate::welfare::finite_n_welfare(&q, &c.spec, &c.strategy, c.n)?;
            Ok(BatteryResult {
                label: c.label.clone(),
                z: estimate.z_score(exact),
                estimate,
                exact,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mental_chain::{finite_n_distribution, stationary};
    use crate::signal_model::PVector;

    fn sys(k: usize) -> MentalSystem {
        MentalSystem::new(k).unwrap()
    }

    #[test]
    fn certain_moves_reach_the_top() {
        let q = TransitionKernel::from_processed([1.0, 1.0], [0.0, 0.0]).unwrap();
        let est = simulate_chain(&q, 2, sys(3), 3, 100, 7).unwrap();
        assert_eq!(est.counts[6], 100);
    }

    #[test]
    fn same_seed_same_output() {
        let q = TransitionKernel::from_p(PVector::new(0.7, 0.6).unwrap());
        let a = simulate_chain(&q, 1, sys(2), 25, 10_000, 42).unwrap();
        let b = simulate_chain(&q, 1, sys(2), 25, 10_000, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate_chain(&q, 1, sys(2), 25, 10_000, 43).unwrap();
        assert_ne!(a.counts, c.counts);
    }

    #[test]
    fn chain_matches_exact_finite_n() {
        let q = TransitionKernel::from_processed([0.3, 0.2], [0.25, 0.4]).unwrap();
        let est = simulate_chain(&q, 1, sys(2), 10, 200_000, 1).unwrap();
        let exact = finite_n_distribution(&q, 1, sys(2), 10);
        for (i, (p, se)) in est.upper_tails().into_iter().enumerate() {
            let want: f64 = exact.probs()[i..].iter().sum();
            assert!((p - want).abs() <= 3.0 * se.max(1e-9), "index {i}: {p} vs {want}");
        }
    }

    #[test]
    fn chain_approaches_stationary() {
        let q = TransitionKernel::from_p(PVector::new(0.8, 0.8).unwrap());
        let est = simulate_chain(&q, 1, sys(2), 500, 100_000, 3).unwrap();
        assert!(est.distribution.total_variation(&stationary(4.0, sys(2))) < 0.01);
    }

    #[test]
    fn prior_only_rule_recovers_baseline() {
        let model = SignalModel::from(crate::scenarios::coin_model(&Default::default()).unwrap());
        let spec = ProblemSpec::tied(0.5, 0.6, 0.5, 2).unwrap();
        let est = simulate_welfare(&model, &spec, &BeliefStrategy::prior_only(), 0.0, 5, 50_000, 9).unwrap();
        let base = crate::welfare::baseline_welfare(&spec).under;
        assert!(est.z_score(base) < 3.0, "{est:?} vs {base}");
    }

    #[test]
    fn perfect_evidence_ladder() {
        let outcomes = vec!["a".into(), "b".into(), "c".into()];
        let eye = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let m = DiscreteSignalModel::new(outcomes, eye).unwrap();
        let l = LadderSystem::new(2).unwrap();
        let est = simulate_ladder(&m, l, 0.0, 4, 1000, 5).unwrap();
        for (t, e) in est.iter().enumerate() {
            assert_eq!(e.counts[l.index(LadderState::Rung(t + 1, 2))], 1000);
        }
    }
}
