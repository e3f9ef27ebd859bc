//! Closed-form model of one inversion step applied to the phase-kicked
//! state, and the success probability of the majority vote built on it.
//!
//! After the kickback every register holds `sum_x (-1)^{f(x)} |x>`; one
//! inversion about the average leaves amplitude
//! `k = (3 - 4t/N) / sqrt(N)` on each marked item and
//! `l = (1 - 4t/N) / sqrt(N)` on each unmarked one.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circuit::{select_winner, TieBreak};
use crate::error::{Error, Result};
use crate::oracle::{log2_exact, BooleanPredicate};
use crate::statevector::StateVector;

/// Default bound on the number of frequency vectors visited by
/// [`enumerate_success_probability`].
pub const DEFAULT_COMPOSITION_CAP: u64 = 1_000_000;

/// Default bound on the inner-loop work of [`exact_success_probability`].
pub const DEFAULT_EXACT_WORK_CAP: u64 = 2_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeModel {
    n_items: usize,
    marked_count: usize,
    k: f64,
    l: f64,
}

impl AmplitudeModel {
    pub fn new(n_items: usize, marked_count: usize) -> Result<Self> {
        log2_exact(n_items)?;
        if marked_count > n_items {
            return Err(Error::domain(format!(
                "marked count {marked_count} exceeds {n_items} items"
            )));
        }
        let n = n_items as f64;
        let ratio = 4.0 * marked_count as f64 / n;
        Ok(Self {
            n_items,
            marked_count,
            k: (3.0 - ratio) / n.sqrt(),
            l: (1.0 - ratio) / n.sqrt(),
        })
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn marked_count(&self) -> usize {
        self.marked_count
    }

    /// Signed amplitude of each marked item.
    pub fn k(&self) -> f64 {
        self.k
    }

    /// Signed amplitude of each unmarked item.
    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn p_marked(&self) -> f64 {
        self.k * self.k
    }

    pub fn p_unmarked(&self) -> f64 {
        self.l * self.l
    }

    /// `(9 - 24t/N + (4t/N)^2) / N`, the expanded form of `k^2`.
    pub fn p_marked_expanded(&self) -> f64 {
        let n = self.n_items as f64;
        let r = self.marked_count as f64 / n;
        (9.0 - 24.0 * r + (4.0 * r).powi(2)) / n
    }

    /// `(1 - 8t/N + (4t/N)^2) / N`, the expanded form of `l^2`.
    pub fn p_unmarked_expanded(&self) -> f64 {
        let n = self.n_items as f64;
        let r = self.marked_count as f64 / n;
        (1.0 - 8.0 * r + (4.0 * r).powi(2)) / n
    }

    /// `t k^2 + (N - t) l^2`, which is 1 for every `t`.
    pub fn total_probability(&self) -> f64 {
        let t = self.marked_count as f64;
        t * self.p_marked() + (self.n_items as f64 - t) * self.p_unmarked()
    }

    fn check_predicate(&self, pred: &BooleanPredicate) -> Result<()> {
        if pred.size() != self.n_items || pred.marked_count() != self.marked_count {
            return Err(Error::domain(format!(
                "predicate (N = {}, t = {}) does not match model (N = {}, t = {})",
                pred.size(),
                pred.marked_count(),
                self.n_items,
                self.marked_count
            )));
        }
        Ok(())
    }

    fn amplitude_of(&self, pred: &BooleanPredicate, item: usize) -> f64 {
        if pred.is_marked(item) {
            self.k
        } else {
            self.l
        }
    }
}

/// Probability of measuring each item (index `j - 1` for item `j`).
pub fn per_sample_distribution(
    model: &AmplitudeModel,
    pred: &BooleanPredicate,
) -> Result<Vec<f64>> {
    model.check_predicate(pred)?;
    Ok((1..=model.n_items)
        .map(|x| model.amplitude_of(pred, x).powi(2))
        .collect())
}

/// `(sum_{f(x)=1} k|x> + sum_{f(x)=0} l|x>)^{(x) eta}` over `nu * eta`
/// qubits, register `i` on qubits `(i-1)nu .. i nu - 1`.
pub fn analytic_product_state(
    model: &AmplitudeModel,
    pred: &BooleanPredicate,
    eta: usize,
    qubit_cap: usize,
) -> Result<StateVector> {
    model.check_predicate(pred)?;
    let register: Vec<f64> = (1..=model.n_items)
        .map(|x| model.amplitude_of(pred, x))
        .collect();
    StateVector::register_product(&register, eta, qubit_cap)
}

/// Natural-log factorials `ln 0! .. ln n!`.
fn ln_factorials(n: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    table.push(acc);
    for i in 1..=n {
        acc += (i as f64).ln();
        table.push(acc);
    }
    table
}

/// `C(eta + N - 1, N - 1)`, saturating.
pub fn composition_count(n_items: usize, eta: usize) -> u64 {
    let k = (n_items - 1) as u128;
    let n = (eta + n_items - 1) as u128;
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) / (i + 1);
        if c > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    c as u64
}

/// Success credit of a frequency vector under the policy: the lowest-index
/// maximal item decides, or the marked share of the maximal items.
fn credit(counts: &[usize], pred: &BooleanPredicate, tie_break: TieBreak) -> f64 {
    let max = counts.iter().copied().max().unwrap_or(0);
    let tops = counts.iter().enumerate().filter(|(_, &c)| c == max);
    match tie_break {
        TieBreak::LowestIndex => {
            let first = tops.map(|(i, _)| i + 1).next().expect("non-empty");
            if pred.is_marked(first) {
                1.0
            } else {
                0.0
            }
        }
        TieBreak::Random { .. } => {
            let (mut marked, mut all) = (0usize, 0usize);
            for (i, _) in tops {
                all += 1;
                if pred.is_marked(i + 1) {
                    marked += 1;
                }
            }
            marked as f64 / all as f64
        }
    }
}

/// `Pr[f(x_0) = 1]` by visiting every frequency vector `(c_1..c_N)` with
/// `sum c_j = eta` and weighting it by its multinomial probability.
///
/// The number of vectors is `C(eta + N - 1, N - 1)` and is refused above
/// `composition_cap`.
pub fn enumerate_success_probability(
    model: &AmplitudeModel,
    pred: &BooleanPredicate,
    eta: usize,
    tie_break: TieBreak,
    composition_cap: u64,
) -> Result<f64> {
    let probs = per_sample_distribution(model, pred)?;
    if eta == 0 {
        return Err(Error::domain("eta must be at least 1"));
    }
    let n = probs.len();
    let count = composition_count(n, eta);
    if count > composition_cap {
        return Err(Error::capacity(format!(
            "{count} frequency vectors for N = {n}, eta = {eta} exceed the enumeration cap of {composition_cap}"
        )));
    }
    let ln_fact = ln_factorials(eta);
    let ln_p: Vec<f64> = probs.iter().map(|p| p.ln()).collect();

    struct Walk<'a> {
        probs: &'a [f64],
        ln_p: &'a [f64],
        ln_fact: &'a [f64],
        pred: &'a BooleanPredicate,
        tie_break: TieBreak,
        counts: Vec<usize>,
        total: f64,
    }

    impl Walk<'_> {
        fn visit(&mut self, item: usize, remaining: usize, ln_weight: f64) {
            let n = self.probs.len();
            if item == n - 1 {
                let c = remaining;
                if c > 0 && self.probs[item] == 0.0 {
                    return;
                }
                let term = if c == 0 {
                    0.0
                } else {
                    c as f64 * self.ln_p[item]
                };
                self.counts[item] = c;
                let ln_w =
                    ln_weight + term - self.ln_fact[c] + self.ln_fact[self.ln_fact.len() - 1];
                let w = ln_w.exp();
                if w > 0.0 {
                    self.total += w * credit(&self.counts, self.pred, self.tie_break);
                }
                return;
            }
            for c in 0..=remaining {
                if c > 0 && self.probs[item] == 0.0 {
                    break;
                }
                let term = if c == 0 {
                    0.0
                } else {
                    c as f64 * self.ln_p[item]
                };
                self.counts[item] = c;
                self.visit(item + 1, remaining - c, ln_weight + term - self.ln_fact[c]);
            }
        }
    }

    let mut walk = Walk {
        probs: &probs,
        ln_p: &ln_p,
        ln_fact: &ln_fact,
        pred,
        tie_break,
        counts: vec![0; n],
        total: 0.0,
    };
    walk.visit(0, eta, 0.0);
    Ok(walk.total.clamp(0.0, 1.0))
}

/// Binomial pmf table for one item: `pmf[c] = Bin(n, q)(c)` for all `n`.
struct BinomialChain {
    ln_fact: Vec<f64>,
}

impl BinomialChain {
    fn pmf(&self, n: usize, c: usize, q: f64) -> f64 {
        if q <= 0.0 {
            return if c == 0 { 1.0 } else { 0.0 };
        }
        if q >= 1.0 {
            return if c == n { 1.0 } else { 0.0 };
        }
        let ln_choose = self.ln_fact[n] - self.ln_fact[c] - self.ln_fact[n - c];
        (ln_choose + c as f64 * q.ln() + (n - c) as f64 * (-q).ln_1p()).exp()
    }
}

/// Conditional probabilities `q_j = p_j / (p_j + ... + p_N)`: drawing
/// `c_j ~ Bin(eta - c_1 - ... - c_{j-1}, q_j)` in item order reproduces the
/// multinomial.
fn conditional_probabilities(probs: &[f64]) -> Vec<f64> {
    let mut suffix = 0.0;
    let mut q = vec![0.0; probs.len()];
    for (j, &p) in probs.iter().enumerate().rev() {
        suffix += p;
        q[j] = if suffix > 0.0 {
            (p / suffix).min(1.0)
        } else {
            0.0
        };
    }
    q
}

fn exact_work_estimate(n: usize, eta: usize, t: usize, tie_break: TieBreak) -> u64 {
    let base = (eta as u64 + 1).pow(3).saturating_mul(n as u64);
    match tie_break {
        TieBreak::LowestIndex => base.saturating_mul(3),
        TieBreak::Random { .. } => {
            let a = t.min(eta) as u64 + 1;
            let b = (n - t).min(eta) as u64 + 1;
            base.saturating_mul(a * b)
        }
    }
}

/// Exact `Pr[f(x_0) = 1]` without visiting frequency vectors one by one.
///
/// Conditions on the maximal count `m` and runs a dynamic program over the
/// items in index order, drawing each count from its conditional binomial.
/// The tracked state is the number of samples used so far plus, for
/// `LowestIndex`, whether the first item to reach `m` was marked, or for
/// `Random`, how many marked and unmarked items sit at `m`. Random ties are
/// credited fractionally.
pub fn exact_success_probability(
    model: &AmplitudeModel,
    pred: &BooleanPredicate,
    eta: usize,
    tie_break: TieBreak,
    work_cap: u64,
) -> Result<f64> {
    let probs = per_sample_distribution(model, pred)?;
    if eta == 0 {
        return Err(Error::domain("eta must be at least 1"));
    }
    let n = probs.len();
    let work = exact_work_estimate(n, eta, model.marked_count, tie_break);
    if work > work_cap {
        return Err(Error::capacity(format!(
            "exact success probability for N = {n}, eta = {eta} needs ~{work} steps, cap is {work_cap}"
        )));
    }
    let chain = BinomialChain {
        ln_fact: ln_factorials(eta),
    };
    let q = conditional_probabilities(&probs);
    let marked: Vec<bool> = (1..=n).map(|x| pred.is_marked(x)).collect();
    let min_max = eta.div_ceil(n);
    let total = (min_max..=eta)
        .map(|m| match tie_break {
            TieBreak::LowestIndex => lowest_index_given_max(&chain, &q, &marked, eta, m),
            TieBreak::Random { .. } => random_given_max(&chain, &q, &marked, eta, m),
        })
        .sum::<f64>();
    Ok(total.clamp(0.0, 1.0))
}

/// Probability that the maximal count is `m` and the first item reaching it
/// is marked.
fn lowest_index_given_max(
    chain: &BinomialChain,
    q: &[f64],
    marked: &[bool],
    eta: usize,
    m: usize,
) -> f64 {
    // flag 0: no item at m yet, 1: first at m marked, 2: first at m unmarked
    let mut dp = vec![[0.0f64; 3]; eta + 1];
    dp[0][0] = 1.0;
    for (j, &qj) in q.iter().enumerate() {
        let mut next = vec![[0.0f64; 3]; eta + 1];
        for used in 0..=eta {
            let row = dp[used];
            if row.iter().all(|&w| w == 0.0) {
                continue;
            }
            let left = eta - used;
            for c in 0..=left.min(m) {
                let w = chain.pmf(left, c, qj);
                if w == 0.0 {
                    continue;
                }
                let to = &mut next[used + c];
                if c < m {
                    to[0] += row[0] * w;
                } else {
                    to[if marked[j] { 1 } else { 2 }] += row[0] * w;
                }
                to[1] += row[1] * w;
                to[2] += row[2] * w;
            }
        }
        dp = next;
    }
    dp[eta][1]
}

/// Expected marked share of the items at the maximal count `m`, restricted
/// to outcomes whose maximum is `m`.
fn random_given_max(
    chain: &BinomialChain,
    q: &[f64],
    marked: &[bool],
    eta: usize,
    m: usize,
) -> f64 {
    let t = marked.iter().filter(|&&b| b).count();
    let cap_a = t.min(eta / m);
    let cap_b = (marked.len() - t).min(eta / m);
    let width = cap_b + 1;
    let states = (cap_a + 1) * width;
    let mut dp = vec![vec![0.0f64; states]; eta + 1];
    dp[0][0] = 1.0;
    for (j, &qj) in q.iter().enumerate() {
        let mut next = vec![vec![0.0f64; states]; eta + 1];
        for used in 0..=eta {
            let left = eta - used;
            for s in 0..states {
                let w0 = dp[used][s];
                if w0 == 0.0 {
                    continue;
                }
                let (a, b) = (s / width, s % width);
                for c in 0..=left.min(m) {
                    let w = chain.pmf(left, c, qj);
                    if w == 0.0 {
                        continue;
                    }
                    let target = if c < m {
                        s
                    } else if marked[j] {
                        if a == cap_a {
                            continue;
                        }
                        (a + 1) * width + b
                    } else {
                        if b == cap_b {
                            continue;
                        }
                        a * width + b + 1
                    };
                    next[used + c][target] += w0 * w;
                }
            }
        }
        dp = next;
    }
    dp[eta]
        .iter()
        .enumerate()
        .filter(|&(_, &w)| w > 0.0)
        .map(|(s, &w)| {
            let (a, b) = (s / width, s % width);
            if a + b == 0 {
                0.0
            } else {
                w * a as f64 / (a + b) as f64
            }
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub successes: u64,
    pub trials: u64,
}

/// Per-trial RNG: stream `trial` of the ChaCha8 generator keyed by `seed`.
fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Fraction of `trials` simulated sample sets whose majority winner is
/// marked. Every trial draws from its own stream, so the estimate does not
/// depend on how trials are scheduled across threads.
pub fn monte_carlo_success_probability(
    model: &AmplitudeModel,
    pred: &BooleanPredicate,
    eta: usize,
    trials: u64,
    seed: u64,
    tie_break: TieBreak,
) -> Result<MonteCarloEstimate> {
    if trials == 0 {
        return Err(Error::domain("Monte Carlo needs at least one trial"));
    }
    if eta == 0 {
        return Err(Error::domain("eta must be at least 1"));
    }
    let probs = per_sample_distribution(model, pred)?;
    let dist = WeightedIndex::new(&probs)
        .map_err(|e| Error::domain(format!("degenerate sample distribution: {e}")))?;
    let random = matches!(tie_break, TieBreak::Random { .. });
    let n = probs.len();

    let successes = (0..trials)
        .into_par_iter()
        .filter(|&trial| {
            let mut rng = trial_rng(seed, trial);
            let mut counts = vec![0usize; n];
            for _ in 0..eta {
                counts[dist.sample(&mut rng)] += 1;
            }
            let (winner, _) = select_winner(&counts, random.then_some(&mut rng));
            pred.is_marked(winner)
        })
        .count() as u64;

    let estimate = successes as f64 / trials as f64;
    Ok(MonteCarloEstimate {
        estimate,
        std_error: (estimate * (1.0 - estimate) / trials as f64).sqrt(),
        successes,
        trials,
    })
}

/// `ceil(c * N * (log2 N)^2)`.
pub fn eta_schedule(n_items: usize, constant_c: f64) -> Result<usize> {
    if n_items < 2 {
        return Err(Error::domain(format!(
            "schedule needs N >= 2, got {n_items}"
        )));
    }
    if !(constant_c > 0.0 && constant_c.is_finite()) {
        return Err(Error::domain(format!(
            "schedule constant must be positive, got {constant_c}"
        )));
    }
    let log_n = (n_items as f64).log2();
    Ok((constant_c * n_items as f64 * log_n * log_n).ceil() as usize)
}
