//! Exact distributions over mental states.
//!
//! The two-theory system has states `-K..=K`: processed evidence for 1 moves
//! one step up, evidence for 2 one step down, and moves past the ends are
//! blocked. Its long-run law under drift ratio `r` is geometric,
//! `f_r(s) ∝ r^s`. The three-theory ladder system has a neutral state 0 and
//! one ladder of height `K` per theory.

use serde::{Serialize, Serializer};

use crate::error::{domain, Error, Result};
use crate::signal_model::TransitionKernel;

/// Size of the two-theory mental system: states `-K..=K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct MentalSystem {
    k: usize,
}

impl MentalSystem {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(domain("a mental system needs K >= 1"));
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn k_i(&self) -> i64 {
        self.k as i64
    }

    pub fn state_count(&self) -> usize {
        2 * self.k + 1
    }

    pub fn states(&self) -> impl Iterator<Item = i64> {
        let k = self.k_i();
        -k..=k
    }

    /// Vector index of state `s`.
    pub fn index(&self, s: i64) -> usize {
        (s + self.k_i()) as usize
    }
}

/// A probability vector over mental states.
///
/// Two-theory distributions are ordered `-K..=K`; ladder distributions list
/// state 0 first, then ladders 1, 2, 3 with `k = 1..=K` each.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDistribution {
    probs: Vec<f64>,
}

impl Serialize for StateDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.probs.serialize(serializer)
    }
}

impl StateDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(domain("state probabilities must be nonnegative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 * (probs.len() as f64).max(1.0) {
            return Err(domain(format!("state probabilities sum to {total}")));
        }
        Ok(Self { probs })
    }

    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Probability of two-theory state `s` (zero outside `-K..=K`).
    pub fn at(&self, s: i64) -> f64 {
        let k = (self.probs.len() as i64 - 1) / 2;
        if s < -k || s > k {
            0.0
        } else {
            self.probs[(s + k) as usize]
        }
    }

    /// `Pr(state >= k)` for a two-theory distribution.
    pub fn upper_tail(&self, k: i64) -> f64 {
        let kk = (self.probs.len() as i64 - 1) / 2;
        if k > kk {
            return 0.0;
        }
        let start = (k.max(-kk) + kk) as usize;
        let upper: f64 = self.probs[start..].iter().sum();
        let lower: f64 = self.probs[..start].iter().sum();
        // sum the small side so tails near 1 keep their ordering in r
        if upper <= lower {
            upper
        } else {
            (1.0 - lower).clamp(0.0, 1.0)
        }
    }

    pub fn total_variation(&self, other: &StateDistribution) -> f64 {
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

/// Long-run distribution `f_r(s) = r^s / Σ_u r^u` on `-K..=K`.
///
/// `r = ∞` puts all mass on `+K`, `r = 0` on `-K`.
pub fn stationary(r: f64, system: MentalSystem) -> StateDistribution {
    let n = system.state_count();
    let mut probs = vec![0.0; n];
    if r.is_infinite() {
        probs[n - 1] = 1.0;
        return StateDistribution::from_raw(probs);
    }
    if r <= 0.0 {
        probs[0] = 1.0;
        return StateDistribution::from_raw(probs);
    }
    let ln_r = r.ln();
    let k = system.k_i() as f64;
    // scale by the largest weight to avoid overflow for extreme r
    let top = if ln_r >= 0.0 { k * ln_r } else { -k * ln_r };
    for (i, s) in system.states().enumerate() {
        probs[i] = (s as f64 * ln_r - top).exp();
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    StateDistribution::from_raw(probs)
}

/// `Φ(k, r) = Σ_{s >= k} f_r(s)`; 1 for `k <= -K`, 0 for `k > K`.
pub fn upper_tail(k: i64, r: f64, system: MentalSystem) -> f64 {
    if k <= -system.k_i() {
        return 1.0;
    }
    if k > system.k_i() {
        return 0.0;
    }
    stationary(r, system).upper_tail(k)
}

/// How the step count `N` of a finite horizon is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CountMode {
    /// `N` signals received, unprocessed ones included (stay with `q0θ`).
    #[default]
    AllSignals,
    /// `N` processed signals: `q0θ` forced to 0, move probabilities rescaled.
    ProcessedSignals,
}

/// Distribution after `n` signals, starting from state 0, by exact vector iteration.
pub fn finite_n_distribution(
    q: &TransitionKernel,
    theta: usize,
    system: MentalSystem,
    n: usize,
) -> StateDistribution {
    finite_n_with_mode(q, theta, system, n, CountMode::AllSignals)
}

pub fn finite_n_with_mode(
    q: &TransitionKernel,
    theta: usize,
    system: MentalSystem,
    n: usize,
    mode: CountMode,
) -> StateDistribution {
    let (mut up, mut down) = (q.q(1, theta), q.q(2, theta));
    if mode == CountMode::ProcessedSignals {
        let total = up + down;
        if total > 0.0 {
            up /= total;
            down /= total;
        }
    }
    let stay = (1.0 - up - down).max(0.0);
    let len = system.state_count();
    let mut cur = vec![0.0; len];
    cur[system.k()] = 1.0;
    let mut next = vec![0.0; len];
    for _ in 0..n {
        next.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..len {
            let mass = cur[i];
            if mass == 0.0 {
                continue;
            }
            next[i] += stay * mass;
            next[if i + 1 < len { i + 1 } else { i }] += up * mass;
            next[if i > 0 { i - 1 } else { i }] += down * mass;
        }
        std::mem::swap(&mut cur, &mut next);
    }
    StateDistribution::from_raw(cur)
}

// ---------------------------------------------------------------------------
// Three-theory ladder

/// The ladder system: state 0 plus `(i, k)` for theories `i = 1..=3`, `k = 1..=K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LadderSystem {
    k: usize,
}

/// A ladder state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LadderState {
    Neutral,
    /// `(theory, height)`, theory in `1..=3`, height in `1..=K`.
    Rung(usize, usize),
}

pub const LADDER_THEORIES: usize = 3;

impl LadderSystem {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(domain("a ladder system needs K >= 1"));
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn state_count(&self) -> usize {
        LADDER_THEORIES * self.k + 1
    }

    pub fn index(&self, state: LadderState) -> usize {
        match state {
            LadderState::Neutral => 0,
            LadderState::Rung(i, k) => 1 + (i - 1) * self.k + (k - 1),
        }
    }

    pub fn state(&self, index: usize) -> LadderState {
        if index == 0 {
            LadderState::Neutral
        } else {
            let j = index - 1;
            LadderState::Rung(j / self.k + 1, j % self.k + 1)
        }
    }

    /// Where evidence for `theory` moves the mind from `from`.
    pub fn step(&self, from: LadderState, theory: usize) -> LadderState {
        match from {
            LadderState::Neutral => LadderState::Rung(theory, 1),
            LadderState::Rung(i, k) if i == theory => LadderState::Rung(i, (k + 1).min(self.k)),
            LadderState::Rung(_, 1) => LadderState::Neutral,
            LadderState::Rung(i, k) => LadderState::Rung(i, k - 1),
        }
    }

    /// Total mass on the ladder of `theory`.
    pub fn ladder_mass(&self, dist: &StateDistribution, theory: usize) -> f64 {
        (1..=self.k)
            .map(|k| dist.probs()[self.index(LadderState::Rung(theory, k))])
            .sum()
    }
}

/// Row-stochastic matrix as nested rows.
pub type Matrix = Vec<Vec<f64>>;

/// Per-state transition matrices of the ladder chain.
///
/// `p3[i][θ]` is the probability of processing evidence for theory `i+1`
/// when theory `θ+1` is true; each column must sum to 1.
pub fn ladder_transition(p3: &[[f64; 3]; 3], system: LadderSystem) -> Result<[Matrix; 3]> {
    for theta in 0..3 {
        let col: f64 = p3.iter().map(|row| row[theta]).sum();
        if (col - 1.0).abs() > 1e-12 || p3.iter().any(|row| !(0.0..=1.0).contains(&row[theta])) {
            return Err(domain(format!("evidence probabilities under theta={} are not a distribution", theta + 1)));
        }
    }
    let n = system.state_count();
    let build = |theta: usize| {
        let mut m = vec![vec![0.0; n]; n];
        for (from, row) in m.iter_mut().enumerate() {
            let state = system.state(from);
            for theory in 1..=3 {
                let to = system.index(system.step(state, theory));
                row[to] += p3[theory - 1][theta];
            }
        }
        m
    };
    Ok([build(0), build(1), build(2)])
}

/// Residual target of [`general_stationary`].
pub const STATIONARY_RESIDUAL: f64 = 1e-12;
/// Iteration budget of [`general_stationary`].
pub const STATIONARY_MAX_ITER: usize = 1_000_000;

/// Stationary distribution of a row-stochastic matrix with one closed class.
///
/// Iterates the lazy chain `(I + P)/2`, which shares the stationary law of
/// `P` and is aperiodic, from the uniform vector until `‖πP − π‖₁ ≤ 1e-12`.
pub fn general_stationary(matrix: &Matrix) -> Result<StateDistribution> {
    let n = matrix.len();
    if n == 0 {
        return Err(domain("empty transition matrix"));
    }
    for (i, row) in matrix.iter().enumerate() {
        if row.len() != n {
            return Err(domain("transition matrix is not square"));
        }
        if row.iter().any(|&v| !(v >= 0.0)) {
            return Err(domain(format!("row {i} has a negative entry")));
        }
        let total: f64 = row.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(domain(format!("row {i} sums to {total}")));
        }
    }
    check_single_closed_class(matrix)?;

    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for iter in 0..STATIONARY_MAX_ITER {
        mul_left(&pi, matrix, &mut next);
        residual = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        if residual <= STATIONARY_RESIDUAL {
            let total: f64 = next.iter().sum();
            next.iter_mut().for_each(|v| *v /= total);
            return Ok(StateDistribution::from_raw(next));
        }
        for (p, q) in pi.iter_mut().zip(&next) {
            *p = 0.5 * (*p + q);
        }
        if iter % 64 == 0 {
            let total: f64 = pi.iter().sum();
            pi.iter_mut().for_each(|v| *v /= total);
        }
    }
    Err(Error::NoConvergence {
        iterations: STATIONARY_MAX_ITER,
        residual,
    })
}

fn mul_left(v: &[f64], m: &Matrix, out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for (i, row) in m.iter().enumerate() {
        let vi = v[i];
        if vi == 0.0 {
            continue;
        }
        for (j, &p) in row.iter().enumerate() {
            out[j] += vi * p;
        }
    }
}

/// A unique stationary law needs a single closed class, i.e. some state
/// that every state can reach. Transient states are allowed and get mass 0.
fn check_single_closed_class(matrix: &Matrix) -> Result<()> {
    let n = matrix.len();
    let reaches_all = |target: usize| {
        let mut seen = vec![false; n];
        let mut stack = vec![target];
        seen[target] = true;
        while let Some(j) = stack.pop() {
            for i in 0..n {
                if matrix[i][j] > 0.0 && !seen[i] {
                    seen[i] = true;
                    stack.push(i);
                }
            }
        }
        seen.iter().all(|&s| s)
    };
    if (0..n).any(reaches_all) {
        Ok(())
    } else {
        Err(Error::Reducible)
    }
}

/// Transition matrix of the two-theory chain under `theta`, for cross-checks.
pub fn birth_death_matrix(q: &TransitionKernel, theta: usize, system: MentalSystem) -> Matrix {
    let n = system.state_count();
    let (up, down) = (q.q(1, theta), q.q(2, theta));
    let stay = (1.0 - up - down).max(0.0);
    let mut m = vec![vec![0.0; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] += stay;
        row[if i + 1 < n { i + 1 } else { i }] += up;
        row[if i > 0 { i - 1 } else { i }] += down;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_model::PVector;
    use approx::assert_abs_diff_eq;

    fn sys(k: usize) -> MentalSystem {
        MentalSystem::new(k).unwrap()
    }

    #[test]
    fn stationary_examples() {
        let u = stationary(1.0, sys(2));
        for &p in u.probs() {
            assert_abs_diff_eq!(p, 0.2, epsilon = 1e-15);
        }
        // Σ = 1/4 + 1/2 + 1 + 2 + 4 = 7.75
        let d = stationary(2.0, sys(2));
        assert_abs_diff_eq!(d.at(0), 1.0 / 7.75, epsilon = 1e-15);
        assert_abs_diff_eq!(d.at(2), 4.0 / 7.75, epsilon = 1e-15);
        let m = stationary(0.5, sys(2));
        for s in -2..=2 {
            assert_abs_diff_eq!(m.at(s), d.at(-s), epsilon = 1e-15);
        }
    }

    #[test]
    fn stationary_sentinels_are_point_masses() {
        let top = stationary(f64::INFINITY, sys(3));
        assert_eq!(top.at(3), 1.0);
        let bottom = stationary(0.0, sys(3));
        assert_eq!(bottom.at(-3), 1.0);
    }

    #[test]
    fn stationary_extreme_ratio_does_not_overflow() {
        let d = stationary(1e200, sys(4));
        assert!(d.probs().iter().all(|p| p.is_finite()));
        assert_abs_diff_eq!(d.at(4), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn upper_tail_examples() {
        assert_eq!(upper_tail(-2, 2.0, sys(2)), 1.0);
        assert_abs_diff_eq!(upper_tail(1, 2.0, sys(2)), 6.0 / 7.75, epsilon = 1e-15);
        assert_abs_diff_eq!(upper_tail(1, 1.0, sys(2)), 0.4, epsilon = 1e-15);
        assert_eq!(upper_tail(3, 2.0, sys(2)), 0.0);
    }

    #[test]
    fn finite_n_edge_cases() {
        let q = TransitionKernel::from_processed([1.0, 1.0], [0.0, 0.0]).unwrap();
        let d0 = finite_n_distribution(&q, 1, sys(2), 0);
        assert_eq!(d0.at(0), 1.0);
        let d3 = finite_n_distribution(&q, 1, sys(2), 3);
        assert_eq!(d3.at(2), 1.0);
    }

    #[test]
    fn finite_n_converges_to_uniform() {
        let q = TransitionKernel::from_processed([0.5, 0.5], [0.5, 0.5]).unwrap();
        let d = finite_n_distribution(&q, 1, sys(2), 200);
        let s = stationary(1.0, sys(2));
        for (a, b) in d.probs().iter().zip(s.probs()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn processed_count_mode_rescales() {
        let q = TransitionKernel::from_processed([0.2, 0.1], [0.05, 0.3]).unwrap();
        let p = crate::signal_model::conditional_dynamics(&q).unwrap();
        let a = finite_n_with_mode(&q, 1, sys(2), 10, CountMode::ProcessedSignals);
        let b = finite_n_distribution(&TransitionKernel::from_p(p), 1, sys(2), 10);
        for (x, y) in a.probs().iter().zip(b.probs()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-15);
        }
    }

    #[test]
    fn general_stationary_examples() {
        let swap = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let d = general_stationary(&swap).unwrap();
        assert_abs_diff_eq!(d.probs()[0], 0.5, epsilon = 1e-12);

        let p = PVector::new(2.0 / 3.0, 2.0 / 3.0).unwrap();
        let m = birth_death_matrix(&TransitionKernel::from_p(p), 1, sys(2));
        let d = general_stationary(&m).unwrap();
        let s = stationary(2.0, sys(2));
        for (a, b) in d.probs().iter().zip(s.probs()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }

        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(matches!(general_stationary(&id), Err(Error::Reducible)));
        // state 2 is transient and ends with no mass
        let leaky = vec![vec![0.5, 0.5, 0.0], vec![0.5, 0.5, 0.0], vec![0.2, 0.3, 0.5]];
        let d = general_stationary(&leaky).unwrap();
        assert_abs_diff_eq!(d.probs()[0], 0.5, epsilon = 1e-12);
        assert!(d.probs()[2] < 1e-12);
        let bad = vec![vec![0.5, 0.4], vec![0.5, 0.5]];
        assert!(general_stationary(&bad).is_err());
    }

    #[test]
    fn ladder_moves() {
        let l = LadderSystem::new(2).unwrap();
        assert_eq!(l.state_count(), 7);
        assert_eq!(l.step(LadderState::Neutral, 1), LadderState::Rung(1, 1));
        assert_eq!(l.step(LadderState::Rung(2, 1), 1), LadderState::Neutral);
        assert_eq!(l.step(LadderState::Rung(2, 2), 3), LadderState::Rung(2, 1));
        assert_eq!(l.step(LadderState::Rung(3, 2), 3), LadderState::Rung(3, 2));
        for i in 0..l.state_count() {
            assert_eq!(l.index(l.state(i)), i);
        }
    }

    #[test]
    fn ladder_perfect_evidence_one_step() {
        let id = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let l = LadderSystem::new(3).unwrap();
        let m = ladder_transition(&id, l).unwrap();
        assert_eq!(m[0][0][l.index(LadderState::Rung(1, 1))], 1.0);
    }

    #[test]
    fn ladder_uniform_is_symmetric() {
        let third = 1.0 / 3.0;
        let u = [[third; 3]; 3];
        let l = LadderSystem::new(3).unwrap();
        let m = ladder_transition(&u, l).unwrap();
        let d = general_stationary(&m[0]).unwrap();
        let a = l.ladder_mass(&d, 1);
        assert_abs_diff_eq!(a, l.ladder_mass(&d, 2), epsilon = 1e-10);
        assert_abs_diff_eq!(a, l.ladder_mass(&d, 3), epsilon = 1e-10);
    }

    #[test]
    fn ladder_rejects_malformed_p3() {
        let bad = [[0.5, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(ladder_transition(&bad, LadderSystem::new(1).unwrap()).is_err());
    }
}
