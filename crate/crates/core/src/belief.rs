//! Posterior odds, decisions and the Bayes-optimal strategy.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::mental_chain::MentalSystem;
use crate::numeric::normal_cdf;
use crate::signal_model::PVector;

/// Default standard deviation of the log prior noise.
pub const DEFAULT_SIGMA_LOG: f64 = 0.5;

/// The belief rule `ρ̃ · Λ · d^s`.
///
/// `d >= 1` gives a monotone rule. `0 < d < 1` is accepted as the inverted
/// variant (posterior decreasing in the state); threshold-based helpers
/// reject it, the per-state welfare path handles it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeliefStrategy {
    pub d: f64,
    pub lambda: f64,
}

impl BeliefStrategy {
    pub fn new(d: f64, lambda: f64) -> Result<Self> {
        if !(d > 0.0) || !d.is_finite() {
            return Err(domain(format!("discriminatory power must be positive and finite, got {d}")));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(domain(format!("bias correction must be positive and finite, got {lambda}")));
        }
        Ok(Self { d, lambda })
    }

    /// `σ^d`: no bias correction.
    pub fn fixed(d: f64) -> Result<Self> {
        Self::new(d, 1.0)
    }

    /// The prior-only rule `d = 1, Λ = 1`.
    pub fn prior_only() -> Self {
        Self { d: 1.0, lambda: 1.0 }
    }

    pub fn is_monotone(&self) -> bool {
        self.d >= 1.0
    }

    fn require_monotone(&self) -> Result<()> {
        if self.is_monotone() {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "threshold rules need d >= 1, got d={}",
                self.d
            )))
        }
    }
}

/// Noisy prior odds `ρ̃ = η ρ` with `ln η ~ N(0, σ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorModel {
    pub rho: f64,
    pub sigma_log: f64,
}

impl PriorModel {
    pub fn new(rho: f64, sigma_log: f64) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(domain(format!("prior odds must be positive and finite, got {rho}")));
        }
        if !(sigma_log >= 0.0) || !sigma_log.is_finite() {
            return Err(domain(format!("log prior noise must be >= 0, got {sigma_log}")));
        }
        Ok(Self { rho, sigma_log })
    }

    /// Odds tied to `π`: `ρ = π/(1−π)`.
    pub fn from_pi(pi: f64, sigma_log: f64) -> Result<Self> {
        if !(pi > 0.0 && pi < 1.0) {
            return Err(domain(format!("pi must lie in (0,1), got {pi}")));
        }
        Self::new(pi / (1.0 - pi), sigma_log)
    }

    pub fn is_exact(&self) -> bool {
        self.sigma_log == 0.0
    }
}

/// Payoff weight `γ` on the correct action under state 2, with `Γ = γ/(1−γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stakes {
    gamma: f64,
    ratio: f64,
}

impl Stakes {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(domain(format!("gamma must lie in [0,1], got {gamma}")));
        }
        let ratio = if gamma == 1.0 { f64::INFINITY } else { gamma / (1.0 - gamma) };
        Ok(Self { gamma, ratio })
    }

    /// From the odds bar `Γ` (infinite allowed).
    pub fn from_ratio(ratio: f64) -> Result<Self> {
        if !(ratio >= 0.0) {
            return Err(domain(format!("stakes ratio must be >= 0, got {ratio}")));
        }
        let gamma = if ratio.is_infinite() { 1.0 } else { ratio / (1.0 + ratio) };
        Ok(Self { gamma, ratio })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `Γ`.
    pub fn ratio(&self) -> f64 {
        self.ratio
    }
}

pub fn posterior(strategy: &BeliefStrategy, rho_tilde: f64, s: i64) -> f64 {
    rho_tilde * strategy.lambda * strategy.d.powi(s as i32)
}

/// Smallest state whose posterior reaches `Γ`, clamped to `-K..=K+1`.
///
/// `-K` means action 1 in every state, `K+1` means never.
pub fn decision_threshold(
    strategy: &BeliefStrategy,
    rho_tilde: f64,
    stakes_ratio: f64,
    system: MentalSystem,
) -> Result<i64> {
    strategy.require_monotone()?;
    let k = system.k_i();
    if strategy.d == 1.0 {
        return Ok(if rho_tilde * strategy.lambda >= stakes_ratio { -k } else { k + 1 });
    }
    let reaches = |s: i64| posterior(strategy, rho_tilde, s) >= stakes_ratio;
    let guess = (stakes_ratio.ln() - rho_tilde.ln() - strategy.lambda.ln()) / strategy.d.ln();
    let mut s = if guess.is_nan() {
        0
    } else {
        guess.ceil().clamp(-(k as f64), (k + 1) as f64) as i64
    };
    // the log guess can be off by one from rounding
    while s > -k && reaches(s - 1) {
        s -= 1;
    }
    while s <= k && !reaches(s) {
        s += 1;
    }
    Ok(s)
}

/// `(d_p, Λ_p)` of the Bayesian posterior `ρ φ₁(s)/φ₂(s) = ρ Λ_p d_p^s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BayesParams {
    pub d: f64,
    pub lambda: f64,
}

impl BayesParams {
    /// The corresponding strategy (inverted when `d < 1`).
    pub fn strategy(&self) -> Result<BeliefStrategy> {
        BeliefStrategy::new(self.d, self.lambda)
    }

    /// `Λ_p d_p^K`: the largest posterior shift the system can deliver.
    pub fn lambda_bar(&self, system: MentalSystem) -> f64 {
        self.lambda * self.d.powi(system.k() as i32)
    }
}

/// `ln Σ_{s=-K..K} r^s`.
pub(crate) fn ln_geometric_sum(r: f64, system: MentalSystem) -> f64 {
    let ln_r = r.ln();
    let k = system.k_i() as f64;
    let top = k * ln_r.abs();
    let sum: f64 = system.states().map(|s| (s as f64 * ln_r - top).exp()).sum();
    top + sum.ln()
}

pub fn bayes_params(p: PVector, system: MentalSystem) -> Result<BayesParams> {
    if !p.is_interior() {
        return Err(Error::DegenerateStrategy { p11: p.p11, p22: p.p22 });
    }
    let (r1, r2) = (p.r1(), p.r2());
    Ok(BayesParams {
        d: r1 / r2,
        lambda: (ln_geometric_sum(r2, system) - ln_geometric_sum(r1, system)).exp(),
    })
}

/// `Pr(ρ̃ >= t)` for `t` given on the log scale.
pub fn prior_exceed_prob_ln(prior: &PriorModel, ln_t: f64) -> f64 {
    let ln_rho = prior.rho.ln();
    if prior.is_exact() {
        return if ln_rho >= ln_t { 1.0 } else { 0.0 };
    }
    normal_cdf((ln_rho - ln_t) / prior.sigma_log)
}

/// `Pr(ρ̃ >= t) = Φ((ln ρ − ln t)/σ)`; an indicator when `σ = 0`.
pub fn prior_exceed_prob(prior: &PriorModel, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(domain(format!("exceedance level must be positive, got {t}")));
    }
    if prior.is_exact() {
        return Ok(if prior.rho >= t { 1.0 } else { 0.0 });
    }
    Ok(prior_exceed_prob_ln(prior, t.ln()))
}

/// Probability that the agent takes action 1 in state `s`: `Pr(ρ̃Λd^s >= Γ)`.
pub fn action_prob(prior: &PriorModel, strategy: &BeliefStrategy, stakes_ratio: f64, s: i64) -> f64 {
    if prior.is_exact() {
        return if posterior(strategy, prior.rho, s) >= stakes_ratio { 1.0 } else { 0.0 };
    }
    let ln_t = stakes_ratio.ln() - strategy.lambda.ln() - s as f64 * strategy.d.ln();
    prior_exceed_prob_ln(prior, ln_t)
}

/// Law of the decision threshold over prior noise, on `-K..=K+1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdLaw {
    k: i64,
    masses: Vec<f64>,
}

impl ThresholdLaw {
    /// `Pr(threshold = k)`.
    pub fn mass(&self, k: i64) -> f64 {
        if k < -self.k || k > self.k + 1 {
            0.0
        } else {
            self.masses[(k + self.k) as usize]
        }
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let k0 = -self.k;
        self.masses.iter().enumerate().map(move |(i, &m)| (k0 + i as i64, m))
    }
}

/// `Pr(k = j) = Pr(k <= j) − Pr(k <= j−1)` with `Pr(k <= j) = Pr(ρ̃ >= Γ/(Λd^j))`.
pub fn threshold_mass(
    prior: &PriorModel,
    strategy: &BeliefStrategy,
    stakes_ratio: f64,
    system: MentalSystem,
) -> Result<ThresholdLaw> {
    strategy.require_monotone()?;
    let k = system.k_i();
    let mut masses = vec![0.0; system.state_count() + 1];
    if prior.is_exact() {
        let at = decision_threshold(strategy, prior.rho, stakes_ratio, system)?;
        masses[(at + k) as usize] = 1.0;
        return Ok(ThresholdLaw { k, masses });
    }
    let mut prev = 0.0;
    for (i, j) in system.states().enumerate() {
        let cum = action_prob(prior, strategy, stakes_ratio, j);
        masses[i] = (cum - prev).max(0.0);
        prev = cum;
    }
    masses[system.state_count()] = (1.0 - prev).max(0.0);
    Ok(ThresholdLaw { k, masses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sys(k: usize) -> MentalSystem {
        MentalSystem::new(k).unwrap()
    }

    #[test]
    fn posterior_examples() {
        let s = BeliefStrategy::fixed(3.0).unwrap();
        assert_eq!(posterior(&s, 1.0, 0), 1.0);
        assert_eq!(posterior(&s, 2.0, 2), 18.0);
        let flat = BeliefStrategy::new(1.0, 0.7).unwrap();
        for st in -3..=3 {
            assert_abs_diff_eq!(posterior(&flat, 2.0, st), 1.4, epsilon = 1e-15);
        }
    }

    #[test]
    fn threshold_examples() {
        let s = BeliefStrategy::fixed(3.0).unwrap();
        assert_eq!(decision_threshold(&s, 1.0, 1.5, sys(2)).unwrap(), 1);
        assert_eq!(decision_threshold(&s, 1.0, 1.0, sys(2)).unwrap(), 0);
        assert_eq!(decision_threshold(&s, 100.0, 1.0, sys(2)).unwrap(), -2);
        assert_eq!(decision_threshold(&s, 1.0, 1e6, sys(2)).unwrap(), 3);
        assert_eq!(decision_threshold(&s, 1.0, f64::INFINITY, sys(2)).unwrap(), 3);
        assert_eq!(decision_threshold(&s, 1.0, 0.0, sys(2)).unwrap(), -2);
        let flat = BeliefStrategy::prior_only();
        assert_eq!(decision_threshold(&flat, 1.0, 1.0, sys(2)).unwrap(), -2);
        assert_eq!(decision_threshold(&flat, 1.0, 1.01, sys(2)).unwrap(), 3);
    }

    #[test]
    fn threshold_rejects_inverted_rule() {
        let inv = BeliefStrategy::fixed(0.5).unwrap();
        assert!(decision_threshold(&inv, 1.0, 1.0, sys(1)).is_err());
    }

    #[test]
    fn exact_powers_resolve_with_ge() {
        // Γ exactly on a power of d must land on that power
        let s = BeliefStrategy::fixed(10.0).unwrap();
        for j in -3..=3 {
            let g = 10f64.powi(j);
            assert_eq!(decision_threshold(&s, 1.0, g, sys(4)).unwrap(), j as i64);
        }
    }

    #[test]
    fn bayes_params_examples() {
        let b = bayes_params(PVector::new(0.8, 0.8).unwrap(), sys(2)).unwrap();
        assert_abs_diff_eq!(b.d, 16.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.lambda, 1.0, epsilon = 1e-12);
        let b = bayes_params(PVector::new(0.8, 0.6).unwrap(), sys(2)).unwrap();
        assert_abs_diff_eq!(b.d, 6.0, epsilon = 1e-12);
        // Σ (2/3)^s / Σ 4^s over s=-2..2
        let num: f64 = (-2..=2).map(|s| (2.0f64 / 3.0).powi(s)).sum();
        let den: f64 = (-2..=2).map(|s| 4f64.powi(s)).sum();
        assert_abs_diff_eq!(b.lambda, num / den, epsilon = 1e-14);
        assert_abs_diff_eq!(b.lambda, 0.27501, epsilon = 5e-5);
        let b = bayes_params(PVector::new(0.5, 0.5).unwrap(), sys(2)).unwrap();
        assert_abs_diff_eq!(b.d, 1.0, epsilon = 1e-15);
        assert!(matches!(
            bayes_params(PVector::new(1.0, 0.5).unwrap(), sys(2)),
            Err(Error::DegenerateStrategy { .. })
        ));
    }

    #[test]
    fn prior_exceed_examples() {
        let p = PriorModel::new(1.0, 0.5).unwrap();
        assert_abs_diff_eq!(prior_exceed_prob(&p, 1.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(prior_exceed_prob(&p, 1.0 / 3.0).unwrap(), 0.98600, epsilon = 5e-6);
        let exact = PriorModel::new(2.0, 0.0).unwrap();
        assert_eq!(prior_exceed_prob(&exact, 1.0).unwrap(), 1.0);
        assert_eq!(prior_exceed_prob(&exact, 2.0).unwrap(), 1.0);
        assert_eq!(prior_exceed_prob(&exact, 2.5).unwrap(), 0.0);
    }

    #[test]
    fn threshold_mass_examples() {
        let exact = PriorModel::new(1.0, 0.0).unwrap();
        let s = BeliefStrategy::fixed(3.0).unwrap();
        let law = threshold_mass(&exact, &s, 1.5, sys(2)).unwrap();
        assert_eq!(law.mass(1), 1.0);
        let noisy = PriorModel::new(1.0, 0.5).unwrap();
        let law = threshold_mass(&noisy, &s, 1.5, sys(2)).unwrap();
        assert_abs_diff_eq!(law.masses().iter().sum::<f64>(), 1.0, epsilon = 1e-14);
        // huge d concentrates the law on the cells around 0
        let sharp = BeliefStrategy::fixed(1e12).unwrap();
        let law = threshold_mass(&noisy, &sharp, 1.5, sys(2)).unwrap();
        assert!(law.mass(0) + law.mass(1) > 1.0 - 1e-12);
        let flat = threshold_mass(&noisy, &BeliefStrategy::prior_only(), 1.5, sys(2)).unwrap();
        assert_abs_diff_eq!(flat.mass(-2) + flat.mass(3), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn threshold_mass_extreme_stakes() {
        let noisy = PriorModel::new(1.0, 0.5).unwrap();
        let s = BeliefStrategy::fixed(3.0).unwrap();
        assert_eq!(threshold_mass(&noisy, &s, f64::INFINITY, sys(2)).unwrap().mass(3), 1.0);
        assert_eq!(threshold_mass(&noisy, &s, 0.0, sys(2)).unwrap().mass(-2), 1.0);
    }

    #[test]
    fn stakes_sentinel() {
        assert!(Stakes::new(1.0).unwrap().ratio().is_infinite());
        assert_abs_diff_eq!(Stakes::new(0.6).unwrap().ratio(), 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(Stakes::from_ratio(1.5).unwrap().gamma(), 0.6, epsilon = 1e-15);
        assert!(Stakes::new(1.2).is_err());
    }
}
