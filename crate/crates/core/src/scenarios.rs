//! Worked examples as discrete signal models.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::numeric::{ln_binomial, ln_factorial};
use crate::signal_model::{DiscreteSignalModel, Evidence};

// ---------------------------------------------------------------------------
// Lunar effects

/// Deliveries per day are Poisson. Under state 2 the mean is `base_rate`
/// every day; under state 1 full-moon days run `effect` times higher than
/// other days, with the same overall average. A signal is the tension
/// `X = max(n − capacity, 0)` together with the moon phase `Y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LunarParams {
    pub base_rate: f64,
    pub effect: f64,
    pub capacity: usize,
    pub full_moon_frac: f64,
    /// Largest delivery count kept; each Poisson law is renormalised on `0..=cutoff`.
    pub cutoff: usize,
    /// Pool all tension levels above this value into one outcome per phase.
    pub pool_tension_above: Option<usize>,
}

impl Default for LunarParams {
    fn default() -> Self {
        Self {
            base_rate: 10.0,
            effect: 1.2,
            capacity: 12,
            full_moon_frac: 0.1,
            cutoff: 40,
            pool_tension_above: None,
        }
    }
}

impl LunarParams {
    /// `(α₀, α₁)`: state-1 means off and on full-moon days.
    pub fn rates(&self) -> (f64, f64) {
        let off = self.base_rate / (self.full_moon_frac * self.effect + 1.0 - self.full_moon_frac);
        (off, self.effect * off)
    }
}

/// Order of the strength rows for evidence favouring state 2 and state 1.
pub const LUNAR_THETA2_ROW: [&str; 9] = [
    "(0,1)", "(8,0)", "(7,0)", "(6,0)", "(5,0)", "(4,0)", "(3,0)", "(2,0)", "(1,0)",
];
pub const LUNAR_THETA1_ROW: [&str; 9] = [
    "(0,0)", "(1,1)", "(2,1)", "(3,1)", "(4,1)", "(5,1)", "(6,1)", "(7,1)", "(8,1)",
];

fn truncated_poisson(mean: f64, cutoff: usize) -> Vec<f64> {
    let ln_mean = mean.ln();
    let raw: Vec<f64> = (0..=cutoff)
        .map(|n| (-mean + n as f64 * ln_mean - ln_factorial(n as u64)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / total).collect()
}

/// Tension law: index `x` holds `Pr(X = x)`.
fn tension_law(mean: f64, capacity: usize, cutoff: usize) -> Vec<f64> {
    let pmf = truncated_poisson(mean, cutoff);
    let mut out = vec![pmf[..=capacity.min(cutoff)].iter().sum::<f64>()];
    if cutoff > capacity {
        out.extend_from_slice(&pmf[capacity + 1..]);
    }
    out
}

pub fn lunar_model(params: &LunarParams) -> Result<DiscreteSignalModel> {
    let LunarParams {
        base_rate,
        effect,
        capacity,
        full_moon_frac,
        cutoff,
        pool_tension_above,
    } = *params;
    if !(base_rate > 0.0) || !(effect > 1.0) || !(full_moon_frac > 0.0 && full_moon_frac < 1.0) {
        return Err(domain("lunar parameters need base_rate > 0, effect > 1, full_moon_frac in (0,1)"));
    }
    if cutoff <= capacity {
        return Err(domain("the Poisson cutoff must exceed the capacity"));
    }
    let (off, on) = params.rates();
    let neutral = tension_law(base_rate, capacity, cutoff);
    let calm_off = tension_law(off, capacity, cutoff);
    let busy_on = tension_law(on, capacity, cutoff);

    let mut labels = Vec::new();
    let mut probs = vec![Vec::new(), Vec::new()];
    for (y, weight, state1) in [(0, 1.0 - full_moon_frac, &calm_off), (1, full_moon_frac, &busy_on)] {
        let top = pool_tension_above.map_or(neutral.len() - 1, |t| t.min(neutral.len() - 1));
        for x in 0..=top {
            labels.push(format!("({x},{y})"));
            probs[0].push(weight * state1[x]);
            probs[1].push(weight * neutral[x]);
        }
        if top + 1 < neutral.len() {
            labels.push(format!("(>{top},{y})"));
            probs[0].push(weight * state1[top + 1..].iter().sum::<f64>());
            probs[1].push(weight * neutral[top + 1..].iter().sum::<f64>());
        }
    }
    DiscreteSignalModel::new(labels, probs)
}

/// Evidence for the outcomes in `labels`, in that order.
pub fn evidence_row(model: &DiscreteSignalModel, labels: &[&str]) -> Result<Vec<Evidence>> {
    labels.iter().map(|l| model.classify(l)).collect()
}

// ---------------------------------------------------------------------------
// Illusory correlation

/// Premise `P` with `Pr(P) = r`, consequence `C` with `Pr(C) = q`. Under
/// state 1 the premise multiplies the probability of `C` by `alpha`; under
/// state 2 the two are independent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IllusoryParams {
    pub alpha: f64,
    pub r: f64,
    pub q: f64,
}

impl Default for IllusoryParams {
    fn default() -> Self {
        Self { alpha: 2.0, r: 0.1, q: 0.05 }
    }
}

impl IllusoryParams {
    /// `(Pr(C | P), Pr(C | not P))` under state 1.
    pub fn conditional_rates(&self) -> (f64, f64) {
        let base = self.q / (1.0 + (self.alpha - 1.0) * self.r);
        (self.alpha * base, base)
    }
}

pub const ILLUSORY_OUTCOMES: [&str; 4] = ["PC", "nPC", "PnC", "nPnC"];

pub fn illusory_model(params: &IllusoryParams) -> Result<DiscreteSignalModel> {
    let IllusoryParams { alpha, r, q } = *params;
    if !(alpha > 1.0) || !(r > 0.0 && r < 1.0) || !(q > 0.0 && q < 1.0) {
        return Err(domain("illusory parameters need alpha > 1 and r, q in (0,1)"));
    }
    let (with_p, without_p) = params.conditional_rates();
    if with_p > 1.0 {
        return Err(domain(format!("Pr(C | P) = {with_p} exceeds 1")));
    }
    let state1 = vec![
        r * with_p,
        (1.0 - r) * without_p,
        r * (1.0 - with_p),
        (1.0 - r) * (1.0 - without_p),
    ];
    let state2 = vec![r * q, (1.0 - r) * q, r * (1.0 - q), (1.0 - r) * (1.0 - q)];
    DiscreteSignalModel::new(ILLUSORY_OUTCOMES.iter().map(|s| s.to_string()).collect(), vec![state1, state2])
}

// ---------------------------------------------------------------------------
// Coin framing

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoinParams {
    /// `Pr(tail)` under state 1.
    pub alpha1: f64,
    /// `Pr(tail)` under state 2.
    pub alpha2: f64,
    /// Tosses per signal.
    pub tosses: usize,
}

impl Default for CoinParams {
    fn default() -> Self {
        Self {
            alpha1: 0.7,
            alpha2: 0.3,
            tosses: 1,
        }
    }
}

/// Number of tails in `tosses` tosses, labelled `tails=k`.
pub fn coin_model(params: &CoinParams) -> Result<DiscreteSignalModel> {
    let CoinParams { alpha1, alpha2, tosses } = *params;
    if !(alpha1 > 0.0 && alpha1 < 1.0) || !(alpha2 > 0.0 && alpha2 < 1.0) {
        return Err(domain("tail probabilities must lie in (0,1)"));
    }
    if tosses == 0 {
        return Err(domain("at least one toss per signal"));
    }
    let j = tosses as u64;
    let law = |a: f64| -> Vec<f64> {
        let raw: Vec<f64> = (0..=j)
            .map(|k| (ln_binomial(j, k) + k as f64 * a.ln() + (j - k) as f64 * (1.0 - a).ln()).exp())
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|p| p / total).collect()
    };
    let labels = (0..=tosses).map(|k| format!("tails={k}")).collect();
    DiscreteSignalModel::new(labels, vec![law(alpha1), law(alpha2)])
}

// ---------------------------------------------------------------------------
// Autocorrelated draws

/// Binary draws whose consecutive values agree with probability `rho`,
/// one value per theory. The outcome is the number of reversals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AutocorrParams {
    pub draws: usize,
    pub rho: Vec<f64>,
}

impl Default for AutocorrParams {
    fn default() -> Self {
        Self {
            draws: 6,
            rho: vec![2.0 / 3.0, 1.0 / 3.0, 0.5],
        }
    }
}

/// One reversal count of the autocorrelation table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AutocorrRow {
    pub reversals: usize,
    pub direction: usize,
    pub strength: f64,
    /// `Pr(reversal count | independence)`, the last theory.
    pub prob_last: f64,
}

/// Reversal counts `n=0..draws-1`, labelled `n=k`. Every sequence with the
/// same count has the same likelihood, so the evidence of the count equals
/// that of each of its sequences.
pub fn autocorr_model(params: &AutocorrParams) -> Result<DiscreteSignalModel> {
    if params.draws < 2 {
        return Err(domain("at least two draws are needed to see a reversal"));
    }
    if params.rho.len() < 2 || params.rho.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
        return Err(domain("need at least two persistence values in (0,1)"));
    }
    let t = (params.draws - 1) as u64;
    let labels = (0..=t).map(|n| format!("n={n}")).collect();
    let probs = params
        .rho
        .iter()
        .map(|&rho| {
            (0..=t)
                .map(|n| (ln_binomial(t, n) + (t - n) as f64 * rho.ln() + n as f64 * (1.0 - rho).ln()).exp())
                .collect()
        })
        .collect();
    DiscreteSignalModel::new(labels, probs)
}

pub fn autocorr_table(params: &AutocorrParams) -> Result<Vec<AutocorrRow>> {
    let model = autocorr_model(params)?;
    let last = model.theta_count();
    (0..model.len())
        .map(|i| {
            let ev = model.classify_index(i)?;
            Ok(AutocorrRow {
                reversals: i,
                direction: ev.direction,
                strength: ev.strength,
                prob_last: model.prob(last, i),
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Name-based construction

/// Named scenario with its parameter document.
#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Lunar(LunarParams),
    Illusory(IllusoryParams),
    Coin(CoinParams),
    Autocorr(AutocorrParams),
}

pub const SCENARIO_NAMES: [&str; 4] = ["lunar", "illusory", "coin", "autocorr"];

impl Scenario {
    /// Parses `name` with an optional JSON object of parameters; missing keys take defaults.
    pub fn from_name(name: &str, params: Option<&serde_json::Value>) -> Result<Self> {
        let empty = serde_json::Value::Object(Default::default());
        let v = params.unwrap_or(&empty).clone();
        Ok(match name {
            "lunar" => Scenario::Lunar(serde_json::from_value(v)?),
            "illusory" => Scenario::Illusory(serde_json::from_value(v)?),
            "coin" => Scenario::Coin(serde_json::from_value(v)?),
            "autocorr" => Scenario::Autocorr(serde_json::from_value(v)?),
            other => {
                return Err(domain(format!(
                    "unknown scenario {other:?}; expected one of {}",
                    SCENARIO_NAMES.join(", ")
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Lunar(_) => "lunar",
            Scenario::Illusory(_) => "illusory",
            Scenario::Coin(_) => "coin",
            Scenario::Autocorr(_) => "autocorr",
        }
    }

    pub fn params_json(&self) -> serde_json::Value {
        match self {
            Scenario::Lunar(p) => serde_json::to_value(p),
            Scenario::Illusory(p) => serde_json::to_value(p),
            Scenario::Coin(p) => serde_json::to_value(p),
            Scenario::Autocorr(p) => serde_json::to_value(p),
        }
        .expect("parameter structs serialise")
    }

    pub fn model(&self) -> Result<DiscreteSignalModel> {
        match self {
            Scenario::Lunar(p) => lunar_model(p),
            Scenario::Illusory(p) => illusory_model(p),
            Scenario::Coin(p) => coin_model(p),
            Scenario::Autocorr(p) => autocorr_model(p),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_model::conditional_dynamics;
    use approx::assert_abs_diff_eq;

    fn row_sums_are_one(m: &DiscreteSignalModel) {
        for t in 1..=m.theta_count() {
            assert_abs_diff_eq!(m.probs(t).iter().sum::<f64>(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn lunar_rates() {
        let (off, on) = LunarParams::default().rates();
        assert_abs_diff_eq!(on, 1.2 * off, epsilon = 1e-12);
        assert_abs_diff_eq!(on + 9.0 * off, 100.0, epsilon = 1e-12);
        assert!((on - 11.76).abs() < 0.01 && (off - 9.80).abs() < 0.01);
    }

    #[test]
    fn lunar_strengths_match_recomputation() {
        let m = lunar_model(&LunarParams::default()).unwrap();
        row_sums_are_one(&m);
        // independent Poisson ratios: l(X,0) = e^{α₀−α}(α/α₀)^n for X > 0
        let (off, on) = LunarParams::default().rates();
        for x in 1..=8 {
            let n = 12.0 + x as f64;
            let ev = m.classify(&format!("({x},0)")).unwrap();
            assert_eq!(ev.direction, 2);
            assert_abs_diff_eq!(ev.strength, (off - 10.0).exp() * (10.0 / off).powf(n), epsilon = 1e-9);
            let ev = m.classify(&format!("({x},1)")).unwrap();
            assert_eq!(ev.direction, 1);
            assert_abs_diff_eq!(ev.strength, (10.0 - on).exp() * (on / 10.0).powf(n), epsilon = 1e-9);
        }
        let row2 = evidence_row(&m, &LUNAR_THETA2_ROW).unwrap();
        assert!(row2.iter().all(|e| e.direction == 2));
        assert_abs_diff_eq!(row2[0].strength, 1.3130, epsilon = 5e-5);
        let row1 = evidence_row(&m, &LUNAR_THETA1_ROW).unwrap();
        assert!(row1.iter().all(|e| e.direction == 1));
        assert_abs_diff_eq!(row1[0].strength, 1.0230, epsilon = 5e-5);
    }

    #[test]
    fn lunar_censoring_locks_belief() {
        let m = lunar_model(&LunarParams::default()).unwrap();
        let p = conditional_dynamics(&m.censored_transitions(0.35).unwrap()).unwrap();
        assert!(p.p22 < 1e-3, "{p:?}");
        let pooled = lunar_model(&LunarParams {
            pool_tension_above: Some(8),
            ..Default::default()
        })
        .unwrap();
        row_sums_are_one(&pooled);
        let p = conditional_dynamics(&pooled.censored_transitions(0.35).unwrap()).unwrap();
        assert_eq!(p.p22, 0.0);
        assert_eq!(p.p11, 1.0);
    }

    #[test]
    fn illusory_examples() {
        let params = IllusoryParams::default();
        let m = illusory_model(&params).unwrap();
        row_sums_are_one(&m);
        let (with_p, without_p) = params.conditional_rates();
        assert_abs_diff_eq!(params.r * with_p + (1.0 - params.r) * without_p, params.q, epsilon = 1e-15);
        let pc = m.classify("PC").unwrap();
        assert_eq!(pc.direction, 1);
        assert_abs_diff_eq!(pc.strength, 2.0 / 1.1, epsilon = 1e-12);
        let npc = m.classify("nPC").unwrap();
        assert_eq!(npc.direction, 2);
        assert_abs_diff_eq!(npc.strength, 1.1, epsilon = 1e-12);
        let pnc = m.classify("PnC").unwrap();
        assert_eq!(pnc.direction, 2);
        assert_abs_diff_eq!(pnc.strength, 0.95 / (1.0 - 0.1 / 1.1), epsilon = 1e-12);
        let npnc = m.classify("nPnC").unwrap();
        assert_eq!(npnc.direction, 1);
        assert_abs_diff_eq!(npnc.strength, (1.0 - 0.05 / 1.1) / 0.95, epsilon = 1e-12);

        let p = conditional_dynamics(&m.censored_transitions(0.5).unwrap()).unwrap();
        assert_eq!((p.p11, p.p22), (1.0, 0.0));
    }

    #[test]
    fn illusory_weak_influence_is_uninformative() {
        let m = illusory_model(&IllusoryParams { alpha: 1.0 + 1e-9, r: 0.1, q: 0.05 }).unwrap();
        for row in m.evidence_table() {
            assert!(row.evidence.strength < 1.0 + 1e-8);
        }
        assert!(illusory_model(&IllusoryParams { alpha: 30.0, r: 0.01, q: 0.5 }).is_err());
    }

    #[test]
    fn coin_examples() {
        let m = coin_model(&CoinParams::default()).unwrap();
        assert_eq!(m.classify("tails=1").unwrap().direction, 1);
        assert_eq!(m.classify("tails=0").unwrap().direction, 2);
        let p = conditional_dynamics(&m.censored_transitions(0.0).unwrap()).unwrap();
        assert!(p.p11 > 0.5 && p.p22 > 0.5);

        let skewed = coin_model(&CoinParams { alpha1: 0.7, alpha2: 0.8, tosses: 1 }).unwrap();
        assert_eq!(skewed.classify("tails=1").unwrap().direction, 2);
        let p = conditional_dynamics(&skewed.censored_transitions(0.0).unwrap()).unwrap();
        assert!(p.p22 > 0.5 && 1.0 - p.p11 > 0.5);

        let batched = coin_model(&CoinParams { alpha1: 0.7, alpha2: 0.8, tosses: 200 }).unwrap();
        row_sums_are_one(&batched);
        let p = conditional_dynamics(&batched.censored_transitions(0.0).unwrap()).unwrap();
        assert!(p.p11 > 0.5 && p.p22 > 0.5, "{p:?}");
    }

    #[test]
    fn coin_matches_batched_single_toss() {
        let single = coin_model(&CoinParams { alpha1: 0.7, alpha2: 0.8, tosses: 1 }).unwrap();
        let by_counts = single.batch_counts(5, 1000).unwrap();
        let direct = coin_model(&CoinParams { alpha1: 0.7, alpha2: 0.8, tosses: 5 }).unwrap();
        let a = by_counts.censored_transitions(0.1).unwrap();
        let b = direct.censored_transitions(0.1).unwrap();
        for t in 1..=2 {
            for k in 0..=2 {
                assert_abs_diff_eq!(a.q(k, t), b.q(k, t), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn autocorr_six_draws() {
        let table = autocorr_table(&AutocorrParams::default()).unwrap();
        assert_eq!(table.len(), 6);
        assert_eq!(table[0].direction, 1);
        assert_abs_diff_eq!(table[0].strength, (4.0f64 / 3.0).powi(5), epsilon = 1e-12);
        assert_abs_diff_eq!(table[0].prob_last, 0.03125, epsilon = 1e-15);
        assert_abs_diff_eq!(table[2].strength, 1.05, epsilon = 0.005);
        assert!(table.iter().all(|r| r.direction != 3));
        let m = autocorr_model(&AutocorrParams::default()).unwrap();
        row_sums_are_one(&m);
    }

    #[test]
    fn autocorr_ten_draws() {
        let table = autocorr_table(&AutocorrParams { draws: 10, ..Default::default() }).unwrap();
        assert_eq!(table[4].direction, 3);
        assert_abs_diff_eq!(table[4].strength, 1.2, epsilon = 0.05);
        assert_abs_diff_eq!(table[4].prob_last, 126.0 / 512.0, epsilon = 1e-15);
        let threes: Vec<_> = table.iter().filter(|r| r.direction == 3).collect();
        assert!(!threes.is_empty() && threes.iter().all(|r| r.strength <= 1.2 + 0.05));
    }

    #[test]
    fn scenario_names_round_trip() {
        let s = Scenario::from_name("coin", Some(&serde_json::json!({"tosses": 3}))).unwrap();
        assert_eq!(s.model().unwrap().len(), 4);
        assert_eq!(s.params_json()["alpha1"], 0.7);
        assert!(Scenario::from_name("tarot", None).is_err());
        assert!(Scenario::from_name("coin", Some(&serde_json::json!({"flips": 3}))).is_err());
    }
}
