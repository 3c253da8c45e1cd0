//! Signal-generating processes and the evidence they produce.
//!
//! A signal is classified by the state that fits it best (its *direction*)
//! and by the likelihood ratio of that state against the best alternative
//! (its *strength*, always at least 1). Censoring at level `beta` drops every
//! signal whose strength is below `1 + beta`; what survives moves the mental
//! state one step, which is summarised by a [`TransitionKernel`] and, after
//! conditioning on processing, by a [`PVector`].
//!
//! Two kinds of models are supported: smooth two-state families on `[0, 1]`
//! with a strictly increasing likelihood ratio ([`ContinuousSignalModel`]),
//! and finite outcome tables over two or more states ([`DiscreteSignalModel`]).

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numeric::{adaptive_simpson, bisect_increasing, ln_factorial};

/// Absolute tolerance of the censoring integrals.
/// Width at which censoring boundaries are considered located.
pub const BOUNDARY_TOL: f64 = 1e-12;
/// Default cap on the number of outcomes produced by batching.
pub const DEFAULT_BATCH_CAP: usize = 1_000_000;

/// Direction and strength of the evidence carried by one signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    /// 1-based index of the best-fitting state.
    pub direction: usize,
    /// Likelihood of `direction` over the best alternative, `>= 1`.
    pub strength: f64,
}

impl Evidence {
    /// Whether this evidence survives censoring at level `beta`.
    ///
    /// Exactly uninformative signals (strength 1) are never processed.
    pub fn is_processed(&self, beta: f64) -> bool {
        self.strength > 1.0 && self.strength >= 1.0 + beta
    }
}

/// Move probabilities `q[θ̃][θ]` for perceptions θ̃ ∈ {0, 1, 2} (0 = not
/// processed) under underlying states θ ∈ {1, 2}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionKernel {
    q: [[f64; 2]; 3],
}

impl TransitionKernel {
    /// Builds a kernel from the processed-evidence probabilities; `q0θ` is the remainder.
    ///
    /// `q1[θ-1]` is the probability of processing evidence for 1 under θ.
    pub fn from_processed(q1: [f64; 2], q2: [f64; 2]) -> Result<Self> {
        let mut q = [[0.0; 2]; 3];
        for t in 0..2 {
            for (name, v) in [("q1", q1[t]), ("q2", q2[t])] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(domain(format!("{name} under theta={} is {v}, not a probability", t + 1)));
                }
            }
            let used = q1[t] + q2[t];
            if used > 1.0 + 1e-12 {
                return Err(domain(format!("q1+q2 = {used} exceeds 1 under theta={}", t + 1)));
            }
            q[1][t] = q1[t];
            q[2][t] = q2[t];
            q[0][t] = (1.0 - used).max(0.0);
        }
        Ok(Self { q })
    }

    /// Kernel with no censoring, i.e. every signal processed, matching `p`.
    pub fn from_p(p: PVector) -> Self {
        Self {
            q: [[0.0, 0.0], [p.p11, 1.0 - p.p22], [1.0 - p.p11, p.p22]],
        }
    }

    /// `q_{θ̃θ}`; `perception` in {0,1,2}, `theta` in {1,2}.
    pub fn q(&self, perception: usize, theta: usize) -> f64 {
        self.q[perception][theta - 1]
    }

    /// Probability that a signal is processed under `theta`.
    pub fn processed(&self, theta: usize) -> f64 {
        self.q[1][theta - 1] + self.q[2][theta - 1]
    }

    /// States under which every signal is censored.
    pub fn fully_censored(&self) -> Vec<usize> {
        (1..=2).filter(|&t| self.processed(t) <= 0.0).collect()
    }
}

/// Conditional dynamics `p = (p11, p22)`: move probabilities given that a signal is processed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PVector {
    pub p11: f64,
    pub p22: f64,
}

impl PVector {
    pub fn new(p11: f64, p22: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p11) || !(0.0..=1.0).contains(&p22) {
            return Err(domain(format!("p=({p11}, {p22}) outside [0,1]^2")));
        }
        Ok(Self { p11, p22 })
    }

    /// Probability of an upward move under `theta`, `p_{1θ}`.
    pub fn up(&self, theta: usize) -> f64 {
        match theta {
            1 => self.p11,
            _ => 1.0 - self.p22,
        }
    }

    /// Drift ratio `r_θ = p_{1θ} / p_{2θ}`; infinite when `p_{2θ} = 0`.
    pub fn ratio(&self, theta: usize) -> f64 {
        let up = self.up(theta);
        let down = 1.0 - up;
        if down <= 0.0 {
            f64::INFINITY
        } else {
            up / down
        }
    }

    pub fn r1(&self) -> f64 {
        self.ratio(1)
    }

    pub fn r2(&self) -> f64 {
        self.ratio(2)
    }

    pub fn is_interior(&self) -> bool {
        self.p11 > 0.0 && self.p11 < 1.0 && self.p22 > 0.0 && self.p22 < 1.0
    }

    /// Image under the first-order censoring device that removes mass `x`
    /// from both move probabilities: `p ↦ (p − x)/(1 − 2x)`.
    pub fn censored_by(&self, x: f64) -> PVector {
        let map = |p: f64| (p - x) / (1.0 - 2.0 * x);
        PVector {
            p11: map(self.p11),
            p22: map(self.p22),
        }
    }
}

/// `p_{θ̃θ} = q_{θ̃θ} / (q_{1θ} + q_{2θ})`.
pub fn conditional_dynamics(q: &TransitionKernel) -> Result<PVector> {
    if let Some(&theta) = q.fully_censored().first() {
        return Err(Error::FullyCensored { theta });
    }
    Ok(PVector {
        p11: q.q(1, 1) / q.processed(1),
        p22: q.q(2, 2) / q.processed(2),
    })
}

// ---------------------------------------------------------------------------
// Continuous two-state families

/// Truncated exponential density on `[0, 1]` with rate `a`: `a e^{a x} / (e^a − 1)`.
fn tilt_density(a: f64, x: f64) -> f64 {
    if a.abs() < 1e-12 {
        1.0
    } else {
        a * (a * x).exp() / a.exp_m1()
    }
}

fn tilt_cdf(a: f64, x: f64) -> f64 {
    if a.abs() < 1e-12 {
        x
    } else {
        (a * x).exp_m1() / a.exp_m1()
    }
}

fn tilt_quantile(a: f64, u: f64) -> f64 {
    if a.abs() < 1e-12 {
        u
    } else {
        (u * a.exp_m1()).ln_1p() / a
    }
}

/// Named parametric families of signal densities on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum SignalFamily {
    /// `f(x|1) ∝ e^{λx}`, `f(x|2) ∝ e^{−λx}`, so `L(x) = e^{λ(2x−1)}`.
    ExpTilt { lambda: f64 },
    /// The tilt family with a narrow high-strength component of rate `spike`
    /// and mass `weight` mixed into `f(·|1)`. Evidence for 1 near `x = 1`
    /// becomes rare but strong, while evidence for 2 stays weak.
    SpikedTilt { lambda: f64, weight: f64, spike: f64 },
}

/// A two-state signal model with smooth densities on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousSignalModel {
    family: SignalFamily,
}

impl ContinuousSignalModel {
    /// Validates the family numerically: unit mass, positivity, monotone likelihood ratio.
    pub fn new(family: SignalFamily) -> Result<Self> {
        match family {
            SignalFamily::ExpTilt { lambda } => {
                if !(lambda > 0.0 && lambda.is_finite()) {
                    return Err(domain(format!("tilt lambda must be positive, got {lambda}")));
                }
            }
            SignalFamily::SpikedTilt { lambda, weight, spike } => {
                if !(lambda > 0.0 && lambda.is_finite()) {
                    return Err(domain(format!("tilt lambda must be positive, got {lambda}")));
                }
                if !(0.0..1.0).contains(&weight) {
                    return Err(domain(format!("spike weight must lie in [0,1), got {weight}")));
                }
                if !(spike > 0.0 && spike.is_finite()) {
                    return Err(domain(format!("spike rate must be positive, got {spike}")));
                }
            }
        }
        let model = Self { family };
        model.check_invariants()?;
        Ok(model)
    }

    pub fn exp_tilt(lambda: f64) -> Result<Self> {
        Self::new(SignalFamily::ExpTilt { lambda })
    }

    pub fn spiked_tilt(lambda: f64, weight: f64, spike: f64) -> Result<Self> {
        Self::new(SignalFamily::SpikedTilt { lambda, weight, spike })
    }

    pub fn family(&self) -> SignalFamily {
        self.family
    }

    fn check_invariants(&self) -> Result<()> {
        for theta in 1..=2 {
            let mass = adaptive_simpson(&|x| self.density(theta, x), 0.0, 1.0, 1e-10);
            if (mass - 1.0).abs() > 1e-6 {
                return Err(domain(format!("density under theta={theta} integrates to {mass}")));
            }
        }
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            let (f1, f2) = (self.density(1, x), self.density(2, x));
            if !(f1 > 0.0 && f2 > 0.0) {
                return Err(domain(format!("density not strictly positive at x={x}")));
            }
            let ll = self.log_likelihood_ratio(x);
            if ll <= prev {
                return Err(domain(format!("likelihood ratio not increasing at x={x}")));
            }
            prev = ll;
        }
        Ok(())
    }

    /// `f(x | theta)`.
    pub fn density(&self, theta: usize, x: f64) -> f64 {
        match (self.family, theta) {
            (SignalFamily::ExpTilt { lambda }, 1) => tilt_density(lambda, x),
            (SignalFamily::ExpTilt { lambda }, _) => tilt_density(-lambda, x),
            (SignalFamily::SpikedTilt { lambda, weight, spike }, 1) => {
                (1.0 - weight) * tilt_density(lambda, x) + weight * tilt_density(spike, x)
            }
            (SignalFamily::SpikedTilt { lambda, .. }, _) => tilt_density(-lambda, x),
        }
    }

    /// `F(x | theta)`.
    pub fn cdf(&self, theta: usize, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match (self.family, theta) {
            (SignalFamily::ExpTilt { lambda }, 1) => tilt_cdf(lambda, x),
            (SignalFamily::ExpTilt { lambda }, _) => tilt_cdf(-lambda, x),
            (SignalFamily::SpikedTilt { lambda, weight, spike }, 1) => {
                (1.0 - weight) * tilt_cdf(lambda, x) + weight * tilt_cdf(spike, x)
            }
            (SignalFamily::SpikedTilt { lambda, .. }, _) => tilt_cdf(-lambda, x),
        }
    }

    pub fn likelihood_ratio(&self, x: f64) -> f64 {
        self.log_likelihood_ratio(x).exp()
    }

    fn log_likelihood_ratio(&self, x: f64) -> f64 {
        match self.family {
            SignalFamily::ExpTilt { lambda } => lambda * (2.0 * x - 1.0),
            SignalFamily::SpikedTilt { .. } => self.density(1, x).ln() - self.density(2, x).ln(),
        }
    }

    /// Draws a signal from `f(· | theta)` by inversion.
    pub fn sample<R: Rng + ?Sized>(&self, theta: usize, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        match (self.family, theta) {
            (SignalFamily::ExpTilt { lambda }, 1) => tilt_quantile(lambda, u),
            (SignalFamily::ExpTilt { lambda }, _) => tilt_quantile(-lambda, u),
            (SignalFamily::SpikedTilt { lambda, weight, spike }, 1) => {
                let pick: f64 = rng.random();
                if pick < weight {
                    tilt_quantile(spike, u)
                } else {
                    tilt_quantile(lambda, u)
                }
            }
            (SignalFamily::SpikedTilt { lambda, .. }, _) => tilt_quantile(-lambda, u),
        }
    }

    pub fn classify(&self, x: f64) -> Result<Evidence> {
        if !(0.0..=1.0).contains(&x) {
            return Err(domain(format!("signal {x} outside the support [0,1]")));
        }
        let llr = self.log_likelihood_ratio(x);
        if llr.is_nan() {
            return Err(domain(format!("signal {x} has zero likelihood under every state")));
        }
        Ok(Evidence {
            direction: if llr >= 0.0 { 1 } else { 2 },
            strength: llr.abs().exp(),
        })
    }

    /// The uninformative signal `x0` with `L(x0) = 1`, if it lies in `[0, 1]`.
    pub fn uninformative_point(&self) -> Option<f64> {
        self.level_crossing(0.0)
    }

    /// Point where `ln L(x) = level`, if the level is crossed inside `[0, 1]`.
    fn level_crossing(&self, level: f64) -> Option<f64> {
        let g = |x: f64| self.log_likelihood_ratio(x) - level;
        if g(0.0) >= 0.0 || g(1.0) < 0.0 {
            return None;
        }
        Some(bisect_increasing(g, 0.0, 1.0, BOUNDARY_TOL))
    }

    /// Boundaries `(x2, x1)` of the censored band: evidence for 2 is
    /// processed on `[0, x2]` and evidence for 1 on `[x1, 1]`.
    pub fn censoring_band(&self, beta: f64) -> (f64, f64) {
        let level = (1.0 + beta).ln();
        let lo = self.log_likelihood_ratio(0.0);
        let hi = self.log_likelihood_ratio(1.0);
        let x1 = if lo >= level {
            0.0
        } else if hi < level {
            1.0
        } else {
            self.level_crossing(level).unwrap_or(1.0)
        };
        let x2 = if hi <= -level {
            1.0
        } else if lo > -level {
            0.0
        } else {
            self.level_crossing(-level).unwrap_or(0.0)
        };
        (x2, x1)
    }

    pub fn censored_transitions(&self, beta: f64) -> Result<TransitionKernel> {
        check_beta(beta)?;
        let (x2, x1) = self.censoring_band(beta);
        let mut q1 = [0.0; 2];
        let mut q2 = [0.0; 2];
        // both families have closed-form CDFs, so the band masses are exact
        for theta in 1..=2 {
            q1[theta - 1] = (1.0 - self.cdf(theta, x1)).clamp(0.0, 1.0);
            q2[theta - 1] = self.cdf(theta, x2).clamp(0.0, 1.0);
        }
        TransitionKernel::from_processed(q1, q2)
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta >= 0.0 && !beta.is_nan() {
        Ok(())
    } else {
        Err(domain(format!("censoring level must be >= 0, got {beta}")))
    }
}

fn two_state_evidence(f1: f64, f2: f64) -> Result<Evidence> {
    if f1 <= 0.0 && f2 <= 0.0 {
        return Err(domain("signal has zero likelihood under every state"));
    }
    if f1 >= f2 {
        Ok(Evidence { direction: 1, strength: f1 / f2 })
    } else {
        Ok(Evidence { direction: 2, strength: f2 / f1 })
    }
}

/// Direction is the argmax over states (ties to the lowest index); strength
/// is the likelihood of that state over the best alternative.
fn multi_state_evidence(likelihoods: &[f64]) -> Result<Evidence> {
    let mut best = 0;
    for (i, &f) in likelihoods.iter().enumerate() {
        if f > likelihoods[best] {
            best = i;
        }
    }
    if likelihoods[best] <= 0.0 {
        return Err(domain("signal has zero likelihood under every state"));
    }
    let runner_up = likelihoods
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, &f)| f)
        .fold(0.0_f64, f64::max);
    Ok(Evidence {
        direction: best + 1,
        strength: likelihoods[best] / runner_up,
    })
}

// ---------------------------------------------------------------------------
// Discrete outcome tables

/// A finite signal space with per-state outcome probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSignalModel {
    outcomes: Vec<String>,
    /// `probs[θ-1][outcome]`.
    probs: Vec<Vec<f64>>,
}

/// One line of an evidence table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvidenceRow {
    pub outcome: String,
    pub evidence: Evidence,
    /// `Pr(outcome | θ)` for θ = 1, 2, ...
    pub probs: Vec<f64>,
}

impl DiscreteSignalModel {
    pub fn new(outcomes: Vec<String>, probs: Vec<Vec<f64>>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(domain("a discrete model needs at least two states"));
        }
        if outcomes.is_empty() {
            return Err(domain("a discrete model needs at least one outcome"));
        }
        let unique: BTreeSet<&String> = outcomes.iter().collect();
        if unique.len() != outcomes.len() {
            return Err(domain("outcome labels must be unique"));
        }
        let tol = 1e-12 * (outcomes.len() as f64).max(1.0);
        for (t, row) in probs.iter().enumerate() {
            if row.len() != outcomes.len() {
                return Err(domain(format!(
                    "theta={} has {} probabilities for {} outcomes",
                    t + 1,
                    row.len(),
                    outcomes.len()
                )));
            }
            if let Some(bad) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(domain(format!("probability {bad} under theta={} outside [0,1]", t + 1)));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > tol {
                return Err(domain(format!("probabilities under theta={} sum to {total}", t + 1)));
            }
        }
        Ok(Self { outcomes, probs })
    }

    pub fn theta_count(&self) -> usize {
        self.probs.len()
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// `Pr(outcome index | theta)`.
    pub fn prob(&self, theta: usize, outcome: usize) -> f64 {
        self.probs[theta - 1][outcome]
    }

    pub fn probs(&self, theta: usize) -> &[f64] {
        &self.probs[theta - 1]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.outcomes
            .iter()
            .position(|o| o == label)
            .ok_or_else(|| domain(format!("unknown outcome {label:?}")))
    }

    pub fn classify(&self, label: &str) -> Result<Evidence> {
        self.classify_index(self.index_of(label)?)
    }

    pub fn classify_index(&self, outcome: usize) -> Result<Evidence> {
        let likelihoods: Vec<f64> = self.probs.iter().map(|row| row[outcome]).collect();
        if likelihoods.len() == 2 {
            two_state_evidence(likelihoods[0], likelihoods[1])
        } else {
            multi_state_evidence(&likelihoods)
        }
    }

    /// Evidence for every outcome, in model order. Outcomes impossible
    /// under every state are skipped.
    pub fn evidence_table(&self) -> Vec<EvidenceRow> {
        (0..self.len())
            .filter_map(|i| {
                let evidence = self.classify_index(i).ok()?;
                Some(EvidenceRow {
                    outcome: self.outcomes[i].clone(),
                    evidence,
                    probs: self.probs.iter().map(|row| row[i]).collect(),
                })
            })
            .collect()
    }

    /// Per-state perception probabilities after censoring: entry
    /// `[θ-1][θ̃]` with θ̃ = 0 for unprocessed signals.
    pub fn perception_probs(&self, beta: f64) -> Result<Vec<Vec<f64>>> {
        check_beta(beta)?;
        let m = self.theta_count();
        let mut out = vec![vec![0.0; m + 1]; m];
        for i in 0..self.len() {
            // uninformative outcomes are never processed
            let slot = match self.classify_index(i) {
                Ok(ev) if ev.is_processed(beta) => ev.direction,
                _ => 0,
            };
            for (t, row) in out.iter_mut().enumerate() {
                row[slot] += self.probs[t][i];
            }
        }
        Ok(out)
    }

    /// Conditional evidence matrix of a three-state model for the ladder:
    /// entry `[i][θ-1]` is the probability that a processed signal favours
    /// theory `i+1` under `θ`.
    pub fn ladder_evidence(&self, beta: f64) -> Result<[[f64; 3]; 3]> {
        if self.theta_count() != 3 {
            return Err(domain(format!("the ladder needs three states, model has {}", self.theta_count())));
        }
        let pp = self.perception_probs(beta)?;
        let mut out = [[0.0; 3]; 3];
        for (t, row) in pp.iter().enumerate() {
            let processed: f64 = row[1..].iter().sum();
            if processed <= 0.0 {
                return Err(Error::FullyCensored { theta: t + 1 });
            }
            for i in 0..3 {
                out[i][t] = row[i + 1] / processed;
            }
        }
        Ok(out)
    }

    pub fn censored_transitions(&self, beta: f64) -> Result<TransitionKernel> {
        if self.theta_count() != 2 {
            return Err(domain(format!(
                "transition kernels are two-state; model has {} states",
                self.theta_count()
            )));
        }
        let pp = self.perception_probs(beta)?;
        TransitionKernel::from_processed([pp[0][1], pp[1][1]], [pp[0][2], pp[1][2]])
    }

    /// Merges outcomes according to `partition`, a list of `(label, members)`
    /// groups covering every outcome exactly once.
    pub fn pool(&self, partition: &[(String, Vec<String>)]) -> Result<Self> {
        let mut seen = vec![false; self.len()];
        let mut labels = Vec::with_capacity(partition.len());
        let mut probs = vec![Vec::with_capacity(partition.len()); self.theta_count()];
        for (label, members) in partition {
            if members.is_empty() {
                return Err(domain(format!("pool group {label:?} is empty")));
            }
            let mut mass = vec![0.0; self.theta_count()];
            for member in members {
                let i = self.index_of(member)?;
                if seen[i] {
                    return Err(domain(format!("outcome {member:?} appears in two pool groups")));
                }
                seen[i] = true;
                for (t, m) in mass.iter_mut().enumerate() {
                    *m += self.probs[t][i];
                }
            }
            labels.push(label.clone());
            for (t, m) in mass.into_iter().enumerate() {
                probs[t].push(m);
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(domain(format!("partition does not cover outcome {:?}", self.outcomes[i])));
        }
        Self::new(labels, probs)
    }

    /// Pools `members` into a single outcome `label`, keeping every other outcome as is.
    pub fn merge(&self, label: &str, members: &[&str]) -> Result<Self> {
        let members: BTreeSet<&str> = members.iter().copied().collect();
        for m in &members {
            self.index_of(m)?;
        }
        let mut partition = Vec::new();
        let mut placed = false;
        for o in &self.outcomes {
            if members.contains(o.as_str()) {
                if !placed {
                    partition.push((label.to_string(), members.iter().map(|s| s.to_string()).collect()));
                    placed = true;
                }
            } else {
                partition.push((o.clone(), vec![o.clone()]));
            }
        }
        self.pool(&partition)
    }

    /// Batches of `j` consecutive signals as ordered tuples, labelled by
    /// joining member labels with `|`.
    pub fn batch(&self, j: usize, cap: usize) -> Result<Self> {
        if j == 0 {
            return Err(domain("batch size must be at least 1"));
        }
        if j == 1 {
            return Ok(self.clone());
        }
        let count = (self.len() as f64).powi(j as i32);
        if count > cap as f64 {
            return Err(Error::TooLarge { outcomes: count, cap });
        }
        let n = self.len();
        let total = count as usize;
        let mut labels = Vec::with_capacity(total);
        let mut probs = vec![Vec::with_capacity(total); self.theta_count()];
        let mut digits = vec![0usize; j];
        for _ in 0..total {
            labels.push(
                digits
                    .iter()
                    .map(|&d| self.outcomes[d].as_str())
                    .collect::<Vec<_>>()
                    .join("|"),
            );
            for (t, row) in probs.iter_mut().enumerate() {
                row.push(digits.iter().map(|&d| self.probs[t][d]).product());
            }
            for d in digits.iter_mut().rev() {
                *d += 1;
                if *d < n {
                    break;
                }
                *d = 0;
            }
        }
        Self::new(labels, probs)
    }

    /// Batches of `j` signals summarised by their outcome counts, which is a
    /// sufficient statistic for i.i.d. draws. Labels read `a:2 b:1`.
    pub fn batch_counts(&self, j: usize, cap: usize) -> Result<Self> {
        if j == 0 {
            return Err(domain("batch size must be at least 1"));
        }
        if j == 1 {
            return Ok(self.clone());
        }
        let m = self.len();
        let compositions = (ln_factorial((j + m - 1) as u64)
            - ln_factorial(j as u64)
            - ln_factorial((m - 1) as u64))
        .exp()
        .round();
        if compositions > cap as f64 {
            return Err(Error::TooLarge { outcomes: compositions, cap });
        }
        let mut labels = Vec::new();
        let mut probs = vec![Vec::new(); self.theta_count()];
        let mut counts = vec![0usize; m];
        let ln_j = ln_factorial(j as u64);
        self.compositions(0, j, &mut counts, &mut |counts| {
            labels.push(
                counts
                    .iter()
                    .zip(&self.outcomes)
                    .map(|(c, o)| format!("{o}:{c}"))
                    .collect::<Vec<_>>()
                    .join(" "),
            );
            let ln_coef = ln_j - counts.iter().map(|&c| ln_factorial(c as u64)).sum::<f64>();
            for (t, row) in probs.iter_mut().enumerate() {
                let mut ln_p = ln_coef;
                for (i, &c) in counts.iter().enumerate() {
                    if c > 0 {
                        ln_p += c as f64 * self.probs[t][i].ln();
                    }
                }
                row.push(ln_p.exp());
            }
        });
        // exp/ln round-off accumulates over many cells
        for row in probs.iter_mut() {
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= total);
        }
        Self::new(labels, probs)
    }

    fn compositions<F: FnMut(&[usize])>(&self, pos: usize, left: usize, counts: &mut Vec<usize>, emit: &mut F) {
        if pos == counts.len() - 1 {
            counts[pos] = left;
            emit(counts);
            return;
        }
        for c in (0..=left).rev() {
            counts[pos] = c;
            self.compositions(pos + 1, left - c, counts, emit);
        }
    }

    /// Draws an outcome index from `Pr(· | theta)`.
    pub fn sample_index<R: Rng + ?Sized>(&self, theta: usize, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let row = &self.probs[theta - 1];
        let mut acc = 0.0;
        for (i, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        row.iter().rposition(|&p| p > 0.0).unwrap_or(row.len() - 1)
    }
}

// ---------------------------------------------------------------------------
// Unified model and JSON documents

/// Either kind of signal model.
#[derive(Debug, Clone, PartialEq)]
pub enum SignalModel {
    Continuous(ContinuousSignalModel),
    Discrete(DiscreteSignalModel),
}

/// A signal of either kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Signal<'a> {
    Point(f64),
    Outcome(&'a str),
}

/// JSON document describing a signal model.
///
/// Discrete: `{"theta_count": 2, "outcomes": [...], "probs": {"1": [...], "2": [...]}}`.
/// Continuous: `{"family": "exp_tilt", "params": {"lambda": 1.0}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SignalModelDoc {
    Discrete {
        theta_count: usize,
        outcomes: Vec<String>,
        probs: BTreeMap<String, Vec<f64>>,
    },
    Continuous {
        family: String,
        params: BTreeMap<String, f64>,
    },
}

fn param(params: &BTreeMap<String, f64>, key: &str, default: Option<f64>) -> Result<f64> {
    params
        .get(key)
        .copied()
        .or(default)
        .ok_or_else(|| domain(format!("missing family parameter {key:?}")))
}

impl SignalModel {
    pub fn from_doc(doc: &SignalModelDoc) -> Result<Self> {
        match doc {
            SignalModelDoc::Discrete { theta_count, outcomes, probs } => {
                let rows = (1..=*theta_count)
                    .map(|t| {
                        probs
                            .get(&t.to_string())
                            .cloned()
                            .ok_or_else(|| domain(format!("probs missing theta {t}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                if probs.len() != *theta_count {
                    return Err(domain("probs keys do not match theta_count"));
                }
                Ok(Self::Discrete(DiscreteSignalModel::new(outcomes.clone(), rows)?))
            }
            SignalModelDoc::Continuous { family, params } => {
                let known: &[&str] = match family.as_str() {
                    "exp_tilt" => &["lambda"],
                    "spiked_tilt" => &["lambda", "weight", "spike"],
                    other => return Err(domain(format!("unknown signal family {other:?}"))),
                };
                if let Some(k) = params.keys().find(|k| !known.contains(&k.as_str())) {
                    return Err(domain(format!("unknown parameter {k:?} for family {family}")));
                }
                let fam = match family.as_str() {
                    "exp_tilt" => SignalFamily::ExpTilt {
                        lambda: param(params, "lambda", Some(1.0))?,
                    },
                    _ => SignalFamily::SpikedTilt {
                        lambda: param(params, "lambda", Some(DEFAULT_SPIKED.0))?,
                        weight: param(params, "weight", Some(DEFAULT_SPIKED.1))?,
                        spike: param(params, "spike", Some(DEFAULT_SPIKED.2))?,
                    },
                };
                Ok(Self::Continuous(ContinuousSignalModel::new(fam)?))
            }
        }
    }

    pub fn to_doc(&self) -> SignalModelDoc {
        match self {
            Self::Discrete(m) => SignalModelDoc::Discrete {
                theta_count: m.theta_count(),
                outcomes: m.outcomes.clone(),
                probs: m
                    .probs
                    .iter()
                    .enumerate()
                    .map(|(t, row)| ((t + 1).to_string(), row.clone()))
                    .collect(),
            },
            Self::Continuous(m) => {
                let (family, params): (&str, Vec<(&str, f64)>) = match m.family {
                    SignalFamily::ExpTilt { lambda } => ("exp_tilt", vec![("lambda", lambda)]),
                    SignalFamily::SpikedTilt { lambda, weight, spike } => (
                        "spiked_tilt",
                        vec![("lambda", lambda), ("weight", weight), ("spike", spike)],
                    ),
                };
                SignalModelDoc::Continuous {
                    family: family.to_string(),
                    params: params.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
                }
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SignalModelDoc = serde_json::from_str(text)?;
        Self::from_doc(&doc)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_doc())?)
    }

    pub fn theta_count(&self) -> usize {
        match self {
            Self::Continuous(_) => 2,
            Self::Discrete(m) => m.theta_count(),
        }
    }

    pub fn censored_transitions(&self, beta: f64) -> Result<TransitionKernel> {
        match self {
            Self::Continuous(m) => m.censored_transitions(beta),
            Self::Discrete(m) => m.censored_transitions(beta),
        }
    }
}

/// Default `(lambda, weight, spike)` of the spiked family.
pub const DEFAULT_SPIKED: (f64, f64, f64) = (0.4, 0.2, 20.0);

impl From<ContinuousSignalModel> for SignalModel {
    fn from(m: ContinuousSignalModel) -> Self {
        Self::Continuous(m)
    }
}

impl From<DiscreteSignalModel> for SignalModel {
    fn from(m: DiscreteSignalModel) -> Self {
        Self::Discrete(m)
    }
}

pub fn classify(model: &SignalModel, signal: Signal<'_>) -> Result<Evidence> {
    match (model, signal) {
        (SignalModel::Continuous(m), Signal::Point(x)) => m.classify(x),
        (SignalModel::Discrete(m), Signal::Outcome(label)) => m.classify(label),
        _ => Err(domain("signal kind does not match the model")),
    }
}

pub fn censored_transitions(model: &SignalModel, beta: f64) -> Result<TransitionKernel> {
    model.censored_transitions(beta)
}

/// Qualitative flags attached to a point of a censoring path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathFlag {
    /// All evidence censored under at least one state.
    FullyCensored,
    /// All processed evidence points one way under some state.
    OneSided,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensorPathPoint {
    pub beta: f64,
    pub kernel: TransitionKernel,
    pub p: Option<PVector>,
    pub flags: Vec<PathFlag>,
}

/// Traces `β ↦ p(β)` over an ascending grid.
pub fn censor_path(model: &SignalModel, betas: &[f64]) -> Result<Vec<CensorPathPoint>> {
    if betas.windows(2).any(|w| w[1] < w[0]) {
        return Err(domain("censoring grid must be sorted ascending"));
    }
    betas
        .iter()
        .map(|&beta| {
            let kernel = model.censored_transitions(beta)?;
            let mut flags = Vec::new();
            let p = match conditional_dynamics(&kernel) {
                Ok(p) => {
                    if !p.is_interior() {
                        flags.push(PathFlag::OneSided);
                    }
                    Some(p)
                }
                Err(Error::FullyCensored { .. }) => {
                    flags.push(PathFlag::FullyCensored);
                    None
                }
                Err(e) => return Err(e),
            };
            Ok(CensorPathPoint { beta, kernel, p, flags })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn coin(a1: f64, a2: f64) -> DiscreteSignalModel {
        DiscreteSignalModel::new(
            vec!["T".into(), "H".into()],
            vec![vec![a1, 1.0 - a1], vec![a2, 1.0 - a2]],
        )
        .unwrap()
    }

    #[test]
    fn tilt_midpoint_is_uninformative() {
        let m = ContinuousSignalModel::exp_tilt(1.0).unwrap();
        let ev = m.classify(0.5).unwrap();
        assert_eq!(ev.direction, 1);
        assert_abs_diff_eq!(ev.strength, 1.0, epsilon = 1e-12);
        assert!(!ev.is_processed(0.0));
    }

    #[test]
    fn tilt_likelihood_ratio_closed_form() {
        let m = ContinuousSignalModel::exp_tilt(1.3).unwrap();
        for x in [0.0, 0.2, 0.7, 1.0] {
            assert_abs_diff_eq!(m.likelihood_ratio(x), (1.3 * (2.0 * x - 1.0)).exp(), epsilon = 1e-12);
        }
    }

    #[test]
    fn classify_rejects_out_of_support() {
        let m = ContinuousSignalModel::exp_tilt(1.0).unwrap();
        assert!(m.classify(1.5).is_err());
        assert!(coin(0.7, 0.3).classify("edge").is_err());
    }

    #[test]
    fn zero_likelihood_everywhere_is_a_domain_error() {
        let m = DiscreteSignalModel::new(
            vec!["a".into(), "never".into()],
            vec![vec![1.0, 0.0], vec![1.0, 0.0]],
        )
        .unwrap();
        assert!(m.classify("never").is_err());
    }

    #[test]
    fn invalid_families_rejected() {
        assert!(ContinuousSignalModel::exp_tilt(0.0).is_err());
        assert!(ContinuousSignalModel::spiked_tilt(0.4, 1.0, 20.0).is_err());
        assert!(ContinuousSignalModel::spiked_tilt(0.4, 0.2, -1.0).is_err());
    }

    #[test]
    fn no_censoring_processes_everything_continuous() {
        let m = ContinuousSignalModel::exp_tilt(1.0).unwrap();
        let q = m.censored_transitions(0.0).unwrap();
        for t in 1..=2 {
            assert_abs_diff_eq!(q.q(0, t), 0.0, epsilon = 1e-9);
        }
        let p = conditional_dynamics(&q).unwrap();
        assert_abs_diff_eq!(p.p11, p.p22, epsilon = 1e-9);
    }

    #[test]
    fn tilt_band_is_symmetric_with_closed_form_half_width() {
        let lambda = 1.0;
        let beta = 0.2;
        let m = ContinuousSignalModel::exp_tilt(lambda).unwrap();
        let (x2, x1) = m.censoring_band(beta);
        let half = (1.0_f64 + beta).ln() / (2.0 * lambda);
        assert_abs_diff_eq!(x1, 0.5 + half, epsilon = 1e-11);
        assert_abs_diff_eq!(x2, 0.5 - half, epsilon = 1e-11);
        // closed-form integration of the tilt density over the processed regions
        let q = m.censored_transitions(beta).unwrap();
        let q11 = 1.0 - tilt_cdf(lambda, 0.5 + half);
        let q21 = tilt_cdf(lambda, 0.5 - half);
        assert_abs_diff_eq!(q.q(1, 1), q11, epsilon = 1e-9);
        assert_abs_diff_eq!(q.q(2, 1), q21, epsilon = 1e-9);
        let q0 = m.censored_transitions(0.0).unwrap();
        assert!(q.q(1, 1) < q0.q(1, 1));
    }

    #[test]
    fn kernel_rows_sum_to_one() {
        let m = ContinuousSignalModel::spiked_tilt(0.4, 0.2, 20.0).unwrap();
        for beta in [0.0, 0.3, 1.0, 10.0] {
            let q = m.censored_transitions(beta).unwrap();
            for t in 1..=2 {
                assert_abs_diff_eq!(q.q(0, t) + q.q(1, t) + q.q(2, t), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn huge_beta_gives_legal_degenerate_kernel() {
        let m = ContinuousSignalModel::exp_tilt(1.0).unwrap();
        let q = m.censored_transitions(100.0).unwrap();
        assert_eq!(q.fully_censored(), vec![1, 2]);
        assert!(matches!(conditional_dynamics(&q), Err(Error::FullyCensored { theta: 1 })));
    }

    #[test]
    fn conditional_dynamics_definition() {
        let q = TransitionKernel::from_processed([0.4, 0.2], [0.1, 0.6]).unwrap();
        let p = conditional_dynamics(&q).unwrap();
        assert_abs_diff_eq!(p.p11, 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(p.p22, 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(q.q(0, 1), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn p_ratios_use_infinite_sentinel() {
        let p = PVector::new(1.0, 0.0).unwrap();
        assert_eq!(p.r1(), f64::INFINITY);
        assert_eq!(p.r2(), f64::INFINITY);
        let p = PVector::new(0.8, 0.6).unwrap();
        assert_abs_diff_eq!(p.r1(), 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.r2(), 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn censoring_map_example() {
        let p = PVector::new(0.8, 0.5).unwrap().censored_by(0.1);
        assert_abs_diff_eq!(p.p11, 0.875, epsilon = 1e-15);
        assert_abs_diff_eq!(p.p22, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn identity_pool_is_identity() {
        let m = coin(0.7, 0.3);
        let part: Vec<(String, Vec<String>)> =
            m.outcomes().iter().map(|o| (o.clone(), vec![o.clone()])).collect();
        assert_eq!(m.pool(&part).unwrap(), m);
    }

    #[test]
    fn pool_rejects_bad_partitions() {
        let m = coin(0.7, 0.3);
        let overlap = vec![
            ("a".to_string(), vec!["T".to_string()]),
            ("b".to_string(), vec!["T".to_string(), "H".to_string()]),
        ];
        assert!(m.pool(&overlap).is_err());
        let missing = vec![("a".to_string(), vec!["T".to_string()])];
        assert!(m.pool(&missing).is_err());
    }

    #[test]
    fn batch_one_is_identity_and_tuples_multiply() {
        let m = coin(0.7, 0.8);
        assert_eq!(m.batch(1, DEFAULT_BATCH_CAP).unwrap(), m);
        let b = m.batch(2, DEFAULT_BATCH_CAP).unwrap();
        assert_eq!(b.len(), 4);
        let i = b.index_of("T|H").unwrap();
        assert_abs_diff_eq!(b.prob(1, i), 0.7 * 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(b.prob(2, i), 0.8 * 0.2, epsilon = 1e-15);
    }

    #[test]
    fn batch_cap_suggests_counts() {
        let m = coin(0.7, 0.8);
        let err = m.batch(30, DEFAULT_BATCH_CAP).unwrap_err();
        assert!(matches!(err, Error::TooLarge { .. }));
        assert!(err.to_string().contains("batch_counts"));
        assert!(m.batch_counts(30, DEFAULT_BATCH_CAP).is_ok());
    }

    #[test]
    fn batch_counts_match_tuples_on_kernel() {
        let m = coin(0.7, 0.8);
        for beta in [0.0, 0.1, 0.5] {
            let a = m.batch(6, DEFAULT_BATCH_CAP).unwrap().censored_transitions(beta).unwrap();
            let b = m.batch_counts(6, DEFAULT_BATCH_CAP).unwrap().censored_transitions(beta).unwrap();
            for t in 1..=2 {
                for s in 0..3 {
                    assert_abs_diff_eq!(a.q(s, t), b.q(s, t), epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn multi_state_tie_breaks_low() {
        let ev = multi_state_evidence(&[0.2, 0.5, 0.5]).unwrap();
        assert_eq!(ev.direction, 2);
        assert_abs_diff_eq!(ev.strength, 1.0);
    }

    #[test]
    fn json_roundtrip_and_unknown_family() {
        let text = r#"{"theta_count": 2, "outcomes": ["T", "H"], "probs": {"1": [0.7, 0.3], "2": [0.8, 0.2]}}"#;
        let m = SignalModel::from_json(text).unwrap();
        assert_eq!(SignalModel::from_json(&m.to_json().unwrap()).unwrap(), m);
        let c = SignalModel::from_json(r#"{"family": "exp_tilt", "params": {"lambda": 2.0}}"#).unwrap();
        assert_eq!(SignalModel::from_json(&c.to_json().unwrap()).unwrap(), c);
        assert!(SignalModel::from_json(r#"{"family": "gauss", "params": {}}"#).is_err());
        assert!(SignalModel::from_json(r#"{"theta_count": 2, "outcomes": ["T"], "probs": {"1": [1.0]}}"#).is_err());
    }

    #[test]
    fn censor_path_rejects_unsorted_grid() {
        let m: SignalModel = ContinuousSignalModel::exp_tilt(1.0).unwrap().into();
        assert!(censor_path(&m, &[0.5, 0.1]).is_err());
    }
}
