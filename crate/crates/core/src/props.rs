//! Verification battery for the welfare results: Bayes dominance, the gain
//! of fixed rules on `B`, censoring slopes, the loss witness, and the
//! censoring gain on regular problems.
//!
//! Every check reports how many points it tried and the first failure.

use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::Serialize;

use crate::belief::{bayes_params, BeliefStrategy};
use crate::error::Result;
use crate::mental_chain::MentalSystem;
use crate::signal_model::PVector;
use crate::sweep::Grid;
use crate::welfare::{
    bayes_welfare, censor_sensitivity, delta_fixed, expected_welfare, find_d_witness, in_b,
    regular_censoring_gain, regularity, ProblemSpec, Regularity,
};

pub const SLACK: f64 = 1e-12;
pub const FD_REL_TOL: f64 = 1e-4;

/// Sizes of the battery. Defaults are the full sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropsConfig {
    pub seed: u64,
    /// Random strategies per point in the dominance check.
    pub strategies: usize,
    /// Random `p` in the dominance check.
    pub points: usize,
    /// Points per axis of the grid checks.
    pub grid: usize,
    /// Random `p` in the slope check.
    pub slope_samples: usize,
    /// Largest memory size tried.
    pub k_max: usize,
    /// Points per axis of the loss-witness search.
    pub witness_grid: usize,
    /// Censoring step of the regular-gain check.
    pub censor_step: f64,
}

impl Default for PropsConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            strategies: 1000,
            points: 100,
            grid: 101,
            slope_samples: 1000,
            k_max: 4,
            witness_grid: 100,
            censor_step: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub checked: usize,
    pub first_failure: Option<String>,
    /// Extra detail: worst margin, witness, and so on.
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for PropOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {} checks, {}", self.name, self.checked, self.detail)?;
        if let Some(fail) = &self.first_failure {
            write!(f, "; first failure at {fail}")?;
        }
        Ok(())
    }
}

struct Tally {
    checked: usize,
    first_failure: Option<String>,
}

impl Tally {
    fn new() -> Self {
        Self {
            checked: 0,
            first_failure: None,
        }
    }

    fn check(&mut self, ok: bool, at: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok && self.first_failure.is_none() {
            self.first_failure = Some(at());
        }
    }

    fn finish(self, name: &'static str, detail: String, start: Instant) -> PropOutcome {
        PropOutcome {
            name,
            passed: self.first_failure.is_none() && self.checked > 0,
            checked: self.checked,
            first_failure: self.first_failure,
            detail,
            seconds: start.elapsed().as_secs_f64(),
        }
    }
}

fn rng(seed: u64, salt: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn interior<R: Rng>(rng: &mut R) -> Result<PVector> {
    PVector::new(rng.random_range(0.01..0.99), rng.random_range(0.01..0.99))
}

/// With exact priors the Bayesian rule beats every `(d, Λ)` and attains
/// `bayes_welfare` itself.
pub fn check_bayes_dominance(cfg: &PropsConfig) -> Result<PropOutcome> {
    let start = Instant::now();
    let mut rng = rng(cfg.seed, 1);
    let mut tally = Tally::new();
    let mut worst_gap = f64::INFINITY;
    let mut worst_self = 0.0f64;
    for i in 0..cfg.points {
        let p = interior(&mut rng)?;
        let k = 1 + i % cfg.k_max;
        let spec = ProblemSpec::correct(rng.random_range(0.05..0.95), rng.random_range(0.05..0.95), k)?;
        let best = bayes_welfare(p, &spec);
        let own = expected_welfare(p, &spec, &bayes_params(p, spec.system)?.strategy()?)?.value;
        worst_self = worst_self.max((own - best).abs());
        tally.check((own - best).abs() <= SLACK, || {
            format!("p=({}, {}), K={k}: Bayes rule gives {own} vs {best}", p.p11, p.p22)
        });
        for _ in 0..cfg.strategies {
            // both monotone and inverted rules
            let d = rng.random_range(-3.0f64..3.0).exp();
            let lambda = rng.random_range(-4.0f64..4.0).exp();
            let w = expected_welfare(p, &spec, &BeliefStrategy::new(d, lambda)?)?.value;
            worst_gap = worst_gap.min(best - w);
            tally.check(w <= best + SLACK, || {
                format!("p=({}, {}), K={k}, d={d}, lambda={lambda}: {w} > {best}", p.p11, p.p22)
            });
        }
    }
    let detail = format!("min(bayes - other) = {worst_gap:.3e}, max |self - bayes| = {worst_self:.3e}");
    Ok(tally.finish("bayes_dominance", detail, start))
}

/// On `B` every uncorrected rule `σ^d` gains over the prior, and the
/// per-state decomposition adds up to the direct gain.
///
/// Grid over `(p₂₂, γ)` with `p₁₁ = 0.8`, `π = 1/2`, `σ_log = 0.5`, `K = 2`.
pub fn check_fixed_rule_gain(cfg: &PropsConfig, ds: &[f64]) -> Result<PropOutcome> {
    let start = Instant::now();
    let mut tally = Tally::new();
    let axis = Grid::new(0.005, 0.995, cfg.grid)?.values();
    let mut in_b_count = 0usize;
    let mut min_gain = f64::INFINITY;
    let mut worst_split = 0.0f64;
    for &p22 in &axis {
        let p = PVector::new(0.8, p22)?;
        for &gamma in &axis {
            let spec = ProblemSpec::tied(0.5, gamma, 0.5, 2)?;
            if !in_b(p, &spec)? {
                continue;
            }
            in_b_count += 1;
            for &d in ds {
                let gain = delta_fixed(p, &spec, d)?;
                // the sum of per-state terms keeps gains far below the
                // welfare level, which `value - baseline` rounds away
                min_gain = min_gain.min(gain.decomposition);
                worst_split = worst_split.max((gain.direct - gain.decomposition).abs());
                tally.check(gain.decomposition > 0.0 && (gain.direct - gain.decomposition).abs() <= SLACK, || {
                    format!(
                        "p22={p22}, gamma={gamma}, d={d}: gain {} (decomposition {})",
                        gain.direct, gain.decomposition
                    )
                });
            }
        }
    }
    let detail = format!(
        "{in_b_count} grid points in B, min gain {min_gain:.3e}, max |direct - decomposition| {worst_split:.1e}"
    );
    Ok(tally.finish("fixed_rule_gain", detail, start))
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= FD_REL_TOL * a.abs().max(b.abs()) + 1e-10
}

/// Analytic censoring slopes agree with central differences and carry the
/// expected signs. Points are drawn with `p₁₁ + p₂₂ > 1`, where `d_p` rises
/// under censoring.
pub fn check_censor_slopes(cfg: &PropsConfig) -> Result<PropOutcome> {
    let start = Instant::now();
    let mut rng = rng(cfg.seed, 3);
    let mut tally = Tally::new();
    let mut drawn = 0usize;
    while drawn < cfg.slope_samples {
        let p = interior(&mut rng)?;
        if p.p11 + p.p22 <= 1.0 {
            continue;
        }
        let system = MentalSystem::new(1 + drawn % cfg.k_max)?;
        drawn += 1;
        let s = censor_sensitivity(p, system)?;
        let at = || format!("p=({}, {}), K={}: {s:?}", p.p11, p.p22, system.k());
        tally.check(rel_close(s.dd, s.dd_fd), at);
        tally.check(rel_close(s.dlambda, s.dlambda_fd), at);
        tally.check(rel_close(s.dlambda_bar, s.dlambda_bar_fd), at);
        tally.check(s.dp11.signum() == (p.p11 - 0.5).signum(), at);
        tally.check(s.dp22.signum() == (p.p22 - 0.5).signum(), at);
        tally.check(s.dd > 0.0, at);
        if (s.lambda - 1.0).abs() > 1e-9 {
            tally.check((s.dlambda < 0.0) == (s.lambda < 1.0), at);
        }
    }
    Ok(tally.finish("censor_slopes", format!("{drawn} points"), start))
}

/// Censoring weak evidence can hurt: a point where `Λ̄` falls, with
/// stakes that turn the fall into a welfare loss.
pub fn check_censoring_loss(cfg: &PropsConfig, k: usize) -> Result<PropOutcome> {
    let start = Instant::now();
    let mut tally = Tally::new();
    let witness = find_d_witness(MentalSystem::new(k)?, cfg.witness_grid)?;
    let detail = match &witness {
        Some(w) => {
            tally.check(w.demonstrates_loss(), || format!("{w:?}"));
            format!(
                "witness p=({:.4}, {:.4}), gamma={:.6}, welfare {:.6} -> {:.6} after censoring {:.1e}",
                w.p.p11, w.p.p22, w.gamma, w.welfare_before, w.welfare_after, w.step
            )
        }
        None => {
            tally.check(false, || format!("no witness on a {0}x{0} grid, K={k}", cfg.witness_grid));
            "no witness".into()
        }
    };
    Ok(tally.finish("censoring_loss", detail, start))
}

/// On regular problems censoring never lowers `W(k, p)` for interior
/// thresholds. Grid over `(p₁₁, p₂₂)`, `π = 1/2`, several stakes.
pub fn check_regular_censoring_gain(cfg: &PropsConfig) -> Result<PropOutcome> {
    let start = Instant::now();
    let mut tally = Tally::new();
    let axis = Grid::new(0.005, 0.995, cfg.grid)?.values();
    let mut min_gain = f64::INFINITY;
    for k_size in 1..=cfg.k_max {
        for gamma in [0.2, 0.5, 0.8] {
            let spec = ProblemSpec::correct(0.5, gamma, k_size)?;
            let kk = k_size as i64;
            for &p11 in &axis {
                for &p22 in &axis {
                    let p = PVector::new(p11, p22)?;
                    if regularity(p) != Regularity::Regular {
                        continue;
                    }
                    let x = cfg.censor_step.min((1.0 - p11).min(1.0 - p22));
                    for k in (1 - kk)..=kk {
                        let gain = regular_censoring_gain(p, &spec, k, x)?;
                        min_gain = min_gain.min(gain);
                        tally.check(gain >= -SLACK, || {
                            format!("p=({p11}, {p22}), K={k_size}, k={k}, gamma={gamma}: gain {gain}")
                        });
                    }
                }
            }
        }
    }
    Ok(tally.finish("regular_censoring_gain", format!("min gain {min_gain:.3e}"), start))
}

/// The whole battery in order.
pub fn run_all(cfg: &PropsConfig) -> Result<Vec<PropOutcome>> {
    Ok(vec![
        check_bayes_dominance(cfg)?,
        check_fixed_rule_gain(cfg, &[1.5, 3.0, 10.0])?,
        check_censor_slopes(cfg)?,
        check_censoring_loss(cfg, 2)?,
        check_regular_censoring_gain(cfg)?,
    ])
}
