//! Welfare of belief rules, the Bayes benchmark, and the sensitivity of
//! both to censoring in `p`-space.
//!
//! Under state `θ` the mind is in state `s` with probability `φ_θ(s)`; the
//! agent takes action 1 when its posterior reaches `Γ`. Action 1 pays
//! `1−γ` under state 1, action 2 pays `γ` under state 2.

use serde::Serialize;

use crate::belief::{
    action_prob, bayes_params, ln_geometric_sum, prior_exceed_prob, threshold_mass, BayesParams,
    BeliefStrategy, PriorModel, Stakes,
};
use crate::error::{domain, Error, Result};
use crate::mental_chain::{
    finite_n_with_mode, stationary, upper_tail, CountMode, MentalSystem, StateDistribution,
};
use crate::signal_model::{PVector, TransitionKernel};

/// Step of the central differences in [`censor_sensitivity`].
pub const FD_STEP: f64 = 1e-6;

/// One decision problem: state-1 frequency, stakes, prior noise and memory size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProblemSpec {
    pub pi: f64,
    pub stakes: Stakes,
    pub prior: PriorModel,
    pub system: MentalSystem,
}

impl ProblemSpec {
    pub fn new(pi: f64, gamma: f64, prior: PriorModel, system: MentalSystem) -> Result<Self> {
        if !(pi > 0.0 && pi < 1.0) {
            return Err(domain(format!("pi must lie in (0,1), got {pi}")));
        }
        Ok(Self {
            pi,
            stakes: Stakes::new(gamma)?,
            prior,
            system,
        })
    }

    /// Prior odds tied to `π`, with log noise `sigma_log`.
    pub fn tied(pi: f64, gamma: f64, sigma_log: f64, k: usize) -> Result<Self> {
        Self::new(pi, gamma, PriorModel::from_pi(pi, sigma_log)?, MentalSystem::new(k)?)
    }

    /// Exact prior odds `π/(1−π)`.
    pub fn correct(pi: f64, gamma: f64, k: usize) -> Result<Self> {
        Self::tied(pi, gamma, 0.0, k)
    }

    pub fn gamma(&self) -> f64 {
        self.stakes.gamma()
    }

    /// `Γ`.
    pub fn stakes_ratio(&self) -> f64 {
        self.stakes.ratio()
    }

    /// Weight on action 1 being right: `π(1−γ)`.
    fn w1(&self) -> f64 {
        self.pi * (1.0 - self.gamma())
    }

    /// Weight on action 2 being right: `(1−π)γ`.
    fn w2(&self) -> f64 {
        (1.0 - self.pi) * self.gamma()
    }

    /// Exact prior equal to the objective odds.
    pub fn has_correct_prior(&self) -> bool {
        let rho = self.pi / (1.0 - self.pi);
        self.prior.is_exact() && ((self.prior.rho - rho) / rho).abs() <= 1e-12
    }

    pub fn with_stakes(&self, stakes: Stakes) -> Self {
        Self { stakes, ..*self }
    }

    pub fn with_system(&self, system: MentalSystem) -> Self {
        Self { system, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WelfareReport {
    pub value: f64,
    /// Prior-only welfare under the agent's (possibly noisy) prior.
    pub baseline: f64,
    /// Prior-only welfare with correct priors.
    pub baseline_correct: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Baseline {
    pub under: f64,
    pub under_correct: f64,
}

/// Welfare of acting on the prior alone.
pub fn baseline_welfare(spec: &ProblemSpec) -> Baseline {
    let act = if spec.stakes_ratio().is_infinite() {
        0.0
    } else if spec.stakes_ratio() == 0.0 {
        1.0
    } else {
        prior_exceed_prob(&spec.prior, spec.stakes_ratio()).unwrap_or(0.0)
    };
    Baseline {
        under: spec.w1() * act + spec.w2() * (1.0 - act),
        under_correct: spec.w1().max(spec.w2()),
    }
}

/// `W(k, p) = π(1−γ)Φ(k, r₁) + (1−π)γ(1 − Φ(k, r₂))`.
pub fn welfare_at_threshold(k: i64, p: PVector, spec: &ProblemSpec) -> f64 {
    spec.w1() * upper_tail(k, p.r1(), spec.system)
        + spec.w2() * (1.0 - upper_tail(k, p.r2(), spec.system))
}

/// Welfare of `strategy` when the mind is distributed as `phi1`/`phi2` under each state.
///
/// Monotone strategies average over the law of the threshold; inverted ones
/// go state by state.
pub fn welfare_from_distributions(
    phi1: &StateDistribution,
    phi2: &StateDistribution,
    spec: &ProblemSpec,
    strategy: &BeliefStrategy,
) -> Result<f64> {
    if !strategy.is_monotone() {
        return Ok(welfare_per_state(phi1, phi2, spec, strategy));
    }
    let law = threshold_mass(&spec.prior, strategy, spec.stakes_ratio(), spec.system)?;
    Ok(law
        .iter()
        .map(|(k, m)| m * (spec.w1() * phi1.upper_tail(k) + spec.w2() * (1.0 - phi2.upper_tail(k))))
        .sum())
}

/// `Σ_s [π(1−γ)φ₁(s)A(s) + (1−π)γφ₂(s)(1−A(s))]` with `A(s)` the action-1 probability.
pub fn welfare_per_state(
    phi1: &StateDistribution,
    phi2: &StateDistribution,
    spec: &ProblemSpec,
    strategy: &BeliefStrategy,
) -> f64 {
    spec.system
        .states()
        .map(|s| {
            let a = action_prob(&spec.prior, strategy, spec.stakes_ratio(), s);
            spec.w1() * phi1.at(s) * a + spec.w2() * phi2.at(s) * (1.0 - a)
        })
        .sum()
}

fn report(value: f64, spec: &ProblemSpec) -> WelfareReport {
    let b = baseline_welfare(spec);
    WelfareReport {
        value,
        baseline: b.under,
        baseline_correct: b.under_correct,
        delta: value - b.under,
    }
}

/// Long-run welfare of `strategy` on a problem with conditional dynamics `p`.
pub fn expected_welfare(p: PVector, spec: &ProblemSpec, strategy: &BeliefStrategy) -> Result<WelfareReport> {
    let phi1 = stationary(p.r1(), spec.system);
    let phi2 = stationary(p.r2(), spec.system);
    Ok(report(welfare_from_distributions(&phi1, &phi2, spec, strategy)?, spec))
}

/// Best achievable welfare given the mental state: `Σ_s max(π(1−γ)φ₁(s), (1−π)γφ₂(s))`.
pub fn bayes_welfare(p: PVector, spec: &ProblemSpec) -> f64 {
    let phi1 = stationary(p.r1(), spec.system);
    let phi2 = stationary(p.r2(), spec.system);
    spec.system
        .states()
        .map(|s| (spec.w1() * phi1.at(s)).max(spec.w2() * phi2.at(s)))
        .sum()
}

/// `Δ(p)`: gain of the Bayesian rule over the prior.
///
/// With correct priors this is `bayes_welfare − W̲`; otherwise the rule
/// `(d_p, Λ_p)` is run through the noisy prior and may lose.
pub fn delta_bayes(p: PVector, spec: &ProblemSpec) -> Result<f64> {
    if spec.has_correct_prior() {
        return Ok(bayes_welfare(p, spec) - baseline_welfare(spec).under);
    }
    let strategy = bayes_params(p, spec.system)?.strategy()?;
    Ok(expected_welfare(p, spec, &strategy)?.delta)
}

/// Per-state term of the `Δ^d` decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaTerm {
    pub state: i64,
    /// `ψ(s) = (1−γ)πφ₁(s) − γ(1−π)φ₂(s)`.
    pub psi: f64,
    /// `J(s) = Pr(η >= Γ/(ρd^s)) − Pr(η >= Γ/ρ)`.
    pub j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaFixed {
    /// `expected_welfare − W̲` for `σ^d`.
    pub direct: f64,
    /// `Σ_s ψ(s) J(s)`.
    pub decomposition: f64,
    pub terms: Vec<DeltaTerm>,
}

/// Gain of the uncorrected rule `σ^d` over the prior, two ways.
pub fn delta_fixed(p: PVector, spec: &ProblemSpec, d: f64) -> Result<DeltaFixed> {
    if !(d > 1.0) {
        return Err(Error::Precondition(format!("delta_fixed needs d > 1, got {d}")));
    }
    let strategy = BeliefStrategy::fixed(d)?;
    let direct = expected_welfare(p, spec, &strategy)?.delta;
    let phi1 = stationary(p.r1(), spec.system);
    let phi2 = stationary(p.r2(), spec.system);
    let ratio = spec.stakes_ratio();
    let a0 = action_prob(&spec.prior, &BeliefStrategy::prior_only(), ratio, 0);
    let terms: Vec<DeltaTerm> = spec
        .system
        .states()
        .map(|s| DeltaTerm {
            state: s,
            psi: spec.w1() * phi1.at(s) - spec.w2() * phi2.at(s),
            j: action_prob(&spec.prior, &strategy, ratio, s) - a0,
        })
        .collect();
    let decomposition = terms.iter().map(|t| t.psi * t.j).sum();
    Ok(DeltaFixed {
        direct,
        decomposition,
        terms,
    })
}

/// Membership in the set where the system can always tilt some decision:
/// `d_p > max(Γ/(ρΛ_p), ρΛ_p/Γ)`.
pub fn in_b(p: PVector, spec: &ProblemSpec) -> Result<bool> {
    let b = bayes_params(p, spec.system)?;
    let shift = spec.prior.rho * b.lambda;
    let ratio = spec.stakes_ratio();
    if ratio == 0.0 || ratio.is_infinite() {
        return Ok(false);
    }
    Ok(b.d > (ratio / shift).max(shift / ratio))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regularity {
    Regular,
    Irregular,
}

/// Regular iff `p₁₁ > 1/2` and `p₂₂ > 1/2`.
pub fn regularity(p: PVector) -> Regularity {
    if p.p11 > 0.5 && p.p22 > 0.5 {
        Regularity::Regular
    } else {
        Regularity::Irregular
    }
}

/// `x`-derivatives at `x = 0` of quantities along the censoring map
/// `p ↦ (p − x)/(1 − 2x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CensorSensitivity {
    pub p: PVector,
    pub d_p: f64,
    pub lambda: f64,
    pub lambda_bar: f64,
    /// `2p₁₁ − 1`.
    pub dp11: f64,
    /// `2p₂₂ − 1`.
    pub dp22: f64,
    pub dd: f64,
    pub dd_fd: f64,
    pub dlambda: f64,
    pub dlambda_fd: f64,
    pub dlambda_bar: f64,
    pub dlambda_bar_fd: f64,
}

/// `(r − 1/r) E_r[s]`: the log-derivative of `Σ r^s` along the map, using `r' = r² − 1`.
fn log_sum_slope(r: f64, system: MentalSystem) -> f64 {
    let dist = stationary(r, system);
    let mean: f64 = system.states().map(|s| s as f64 * dist.at(s)).sum();
    (r - 1.0 / r) * mean
}

pub fn censor_sensitivity(p: PVector, system: MentalSystem) -> Result<CensorSensitivity> {
    let b = bayes_params(p, system)?;
    let k = system.k() as f64;
    let (r1, r2) = (p.r1(), p.r2());

    let (d1, d2) = (p.p11 / (1.0 - p.p11), p.p22 / (1.0 - p.p22));
    let d1_slope = (2.0 * p.p11 - 1.0) / (1.0 - p.p11).powi(2);
    let d2_slope = (2.0 * p.p22 - 1.0) / (1.0 - p.p22).powi(2);
    let dd = d1_slope * d2 + d1 * d2_slope;

    let dlambda = b.lambda * (log_sum_slope(r2, system) - log_sum_slope(r1, system));
    let lambda_bar = b.lambda_bar(system);
    let dlambda_bar = lambda_bar * (dlambda / b.lambda + k * dd / b.d);

    let at = |x: f64| -> Result<BayesParams> { bayes_params(p.censored_by(x), system) };
    let (hi, lo) = (at(FD_STEP)?, at(-FD_STEP)?);
    let fd = |f: fn(&BayesParams, MentalSystem) -> f64| (f(&hi, system) - f(&lo, system)) / (2.0 * FD_STEP);

    Ok(CensorSensitivity {
        p,
        d_p: b.d,
        lambda: b.lambda,
        lambda_bar,
        dp11: 2.0 * p.p11 - 1.0,
        dp22: 2.0 * p.p22 - 1.0,
        dd,
        dd_fd: fd(|b, _| b.d),
        dlambda,
        dlambda_fd: fd(|b, _| b.lambda),
        dlambda_bar,
        dlambda_bar_fd: fd(|b, s| b.lambda_bar(s)),
    })
}

/// `Λ̄` at a point, log-domain so that large `K` does not overflow early.
fn ln_lambda_bar(p: PVector, system: MentalSystem) -> f64 {
    let (r1, r2) = (p.r1(), p.r2());
    ln_geometric_sum(r2, system) - ln_geometric_sum(r1, system) + system.k() as f64 * (r1 / r2).ln()
}

/// A point where marginal censoring lowers `Λ̄`, with stakes that turn this
/// into a strict welfare loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DWitness {
    pub p: PVector,
    pub lambda_bar: f64,
    /// `dΛ̄/dx` at `x = 0`.
    pub lambda_bar_slope: f64,
    /// Censoring step used for the verification.
    pub step: f64,
    pub lambda_bar_censored: f64,
    /// Window `(lo, hi)` for `Γ/ρ`.
    pub window: (f64, f64),
    pub pi: f64,
    pub gamma: f64,
    pub welfare_before: f64,
    pub welfare_after: f64,
    pub baseline_correct: f64,
    /// `W(K, p)` under the witness stakes.
    pub threshold_welfare: f64,
    pub grid_points: usize,
}

impl DWitness {
    /// Censoring strictly lowered the best achievable welfare to the prior-only level.
    pub fn demonstrates_loss(&self) -> bool {
        self.welfare_before > self.baseline_correct + 1e-12
            && (self.welfare_after - self.baseline_correct).abs() <= 1e-12
            && self.threshold_welfare > self.baseline_correct
    }
}

/// Searches an `n × n` grid over `(0.01, 0.99)²` for `dΛ̄/dx < 0` with
/// `Λ̄ > 1` and `d_p > 1`, keeping the steepest relative decrease.
pub fn find_d_witness(system: MentalSystem, n: usize) -> Result<Option<DWitness>> {
    if system.k() < 2 {
        return Err(Error::Precondition("the witness search needs K >= 2".into()));
    }
    if n < 2 {
        return Err(domain("witness grid needs at least 2 points per axis"));
    }
    let axis: Vec<f64> = (0..n).map(|i| 0.01 + 0.98 * i as f64 / (n - 1) as f64).collect();
    let mut best: Option<(f64, PVector, CensorSensitivity)> = None;
    for &p11 in &axis {
        for &p22 in &axis {
            let p = PVector::new(p11, p22)?;
            let sens = censor_sensitivity(p, system)?;
            if sens.d_p <= 1.0 || sens.lambda_bar <= 1.0 || sens.dlambda_bar >= 0.0 {
                continue;
            }
            let rel = sens.dlambda_bar / sens.lambda_bar;
            if best.as_ref().is_none_or(|(b, _, _)| rel < *b) {
                best = Some((rel, p, sens));
            }
        }
    }
    let Some((_, p, sens)) = best else {
        return Ok(None);
    };

    let ln_bar = ln_lambda_bar(p, system);
    let mut step = 1e-3;
    let mut ln_after = f64::INFINITY;
    for _ in 0..40 {
        let moved = p.censored_by(step);
        if moved.is_interior() {
            ln_after = ln_lambda_bar(moved, system);
            if ln_after < ln_bar {
                break;
            }
        }
        step *= 0.5;
    }
    if !(ln_after < ln_bar) {
        return Ok(None);
    }
    let lo = ln_after.max(0.0);
    let ratio = (0.5 * (lo + ln_bar)).exp();
    let pi = 0.5;
    let spec = ProblemSpec::new(pi, Stakes::from_ratio(ratio)?.gamma(), PriorModel::new(1.0, 0.0)?, system)?;
    Ok(Some(DWitness {
        p,
        lambda_bar: sens.lambda_bar,
        lambda_bar_slope: sens.dlambda_bar,
        step,
        lambda_bar_censored: ln_after.exp(),
        window: (lo.exp(), ln_bar.exp()),
        pi,
        gamma: spec.gamma(),
        welfare_before: bayes_welfare(p, &spec),
        welfare_after: bayes_welfare(p.censored_by(step), &spec),
        baseline_correct: baseline_welfare(&spec).under_correct,
        threshold_welfare: welfare_at_threshold(system.k_i(), p, &spec),
        grid_points: n * n,
    }))
}

/// `W(k, p(x)) − W(k, p)` for a regular problem and a threshold inside `(−K, K]`.
pub fn regular_censoring_gain(p: PVector, spec: &ProblemSpec, k: i64, x: f64) -> Result<f64> {
    if regularity(p) != Regularity::Regular {
        return Err(Error::Precondition(format!(
            "p=({}, {}) is not regular",
            p.p11, p.p22
        )));
    }
    let kk = spec.system.k_i();
    if k <= -kk || k > kk {
        return Err(Error::Precondition(format!("threshold {k} outside (-{kk}, {kk}]")));
    }
    if !(x > 0.0) || x > (1.0 - p.p11).min(1.0 - p.p22) {
        return Err(domain(format!("censoring step {x} leaves the unit square")));
    }
    Ok(welfare_at_threshold(k, p.censored_by(x), spec) - welfare_at_threshold(k, p, spec))
}

/// Welfare after `n` signals from state 0.
pub fn finite_n_welfare(
    q: &TransitionKernel,
    spec: &ProblemSpec,
    strategy: &BeliefStrategy,
    n: usize,
) -> Result<f64> {
    finite_n_welfare_with_mode(q, spec, strategy, n, CountMode::AllSignals)
}

pub fn finite_n_welfare_with_mode(
    q: &TransitionKernel,
    spec: &ProblemSpec,
    strategy: &BeliefStrategy,
    n: usize,
    mode: CountMode,
) -> Result<f64> {
    let phi1 = finite_n_with_mode(q, 1, spec.system, n, mode);
    let phi2 = finite_n_with_mode(q, 2, spec.system, n, mode);
    welfare_from_distributions(&phi1, &phi2, spec, strategy)
}
