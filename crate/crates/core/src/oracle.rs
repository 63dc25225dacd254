//! Exhaustive optimality oracle over ordered partitions of the swarm.

use num_integer::Integer;

use crate::allocator::{Allocation, AllocatorConfig, TaskSet};
use crate::error::{Error, Result};
use crate::scalability::Family;
use crate::scalar::Scalar;

/// Relative tolerance under which two scores count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// How many tied maximizers are kept verbatim; `tie_count` is always exact.
pub const MAX_REPORTED_TIES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleConfig {
    /// Largest number of candidate allocations the oracle agrees to enumerate.
    pub cap: u128,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { cap: 10_000_000 }
    }
}

/// One candidate allocation: per-task counts plus the idle pool.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Candidate {
    pub counts: Vec<usize>,
    pub idle: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult<S> {
    /// First maximizer in enumeration order.
    pub best: Allocation<S>,
    pub best_score: S,
    /// Maximizers within [`TIE_TOLERANCE`], in enumeration order.
    pub ties: Vec<Candidate>,
    pub tie_count: u128,
    pub enumerated: u128,
    /// Whether allocations with a non-empty idle pool were part of the search.
    pub includes_idle: bool,
}

impl<S> OracleResult<S> {
    pub fn contains(&self, counts: &[usize], idle: usize) -> bool {
        self.ties.iter().any(|c| c.counts == counts && c.idle == idle)
    }
}

/// Number of ordered partitions of `n` into `t` positive parts, `binom(n - 1, t - 1)`,
/// in exact integer arithmetic.
pub fn count_partitions(n: usize, t: usize) -> Result<u128> {
    if t == 0 || t > n {
        return Err(Error::Domain(format!(
            "ordered partitions need 1 <= T <= N, got N = {n}, T = {t}"
        )));
    }
    binomial((n - 1) as u128, (t - 1) as u128)
}

fn binomial(n: u128, r: u128) -> Result<u128> {
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        // acc * (n - i) / (i + 1) is an integer; divide out the gcd first so the
        // intermediate product stays as small as possible.
        let num = n - i;
        let den = i + 1;
        let g = acc.gcd(&den);
        let (acc_r, den_r) = (acc / g, den / g);
        let num_r = num / den_r;
        acc = acc_r
            .checked_mul(num_r)
            .ok_or_else(|| Error::Overflow(format!("binom({n}, {r})")))?;
    }
    Ok(acc)
}

/// Score the allocator maximizes: `C(D, N) / (1 + ε)^u` where `u` counts the units
/// handed out beyond the first agent of each task. Equal to `C(D, N)` for `ε = 0`.
pub fn penalized_score<S: Scalar>(tasks: &TaskSet<S>, counts: &[usize], epsilon: S) -> Result<S> {
    let performance = crate::allocator::collective_performance(tasks, counts)?;
    let units: usize = tasks
        .curves()
        .iter()
        .zip(counts)
        .map(|(c, &n)| (n - 1) / c.unit_size())
        .sum();
    Ok(performance / (S::one() + epsilon).powi(units as i32))
}

/// Enumerates every allocation in lexicographic order and returns all maximizers
/// of [`penalized_score`].
///
/// An idle pool is only searched when it can matter: a positive `ε`, or a
/// retrograde task whose performance falls past its peak. Otherwise one more agent
/// never hurts and compositions of exactly `N` are enough.
pub fn brute_force<S: Scalar>(
    agents: usize,
    tasks: &TaskSet<S>,
    config: &AllocatorConfig<S>,
    oracle: &OracleConfig,
) -> Result<OracleResult<S>> {
    config.validate()?;
    let t = tasks.len();
    if agents < t {
        return Err(Error::TooFewAgents { agents, tasks: t });
    }
    let includes_idle = config.epsilon > S::zero()
        || tasks.curves().iter().any(|c| c.family() == Family::Retrograde);
    let enumerated = if includes_idle {
        // counts plus (idle + 1) form a composition of N + 1 into T + 1 parts
        count_partitions(agents + 1, t + 1)?
    } else {
        count_partitions(agents, t)?
    };
    if enumerated > oracle.cap {
        return Err(Error::CapExceeded {
            count: enumerated,
            cap: oracle.cap,
        });
    }

    let max_group = agents - t + 1;
    let factor = (S::one() + config.epsilon).recip();
    // table[i][n] = C(d_i, n) / (1 + ε)^units(n)
    let table: Vec<Vec<S>> = tasks
        .curves()
        .iter()
        .map(|curve| {
            let unit = curve.unit_size();
            let mut row = vec![S::zero(); max_group + 1];
            for (n, slot) in row.iter_mut().enumerate().skip(1) {
                *slot = curve.value_at(n) * factor.powi(((n - 1) / unit) as i32);
            }
            row
        })
        .collect();

    let mut search = Search {
        table: &table,
        counts: vec![0; t],
        idle: 0,
        best_score: S::neg_infinity(),
        best: None,
        ties: Vec::new(),
        tie_count: 0,
    };
    let max_idle = if includes_idle { agents - t } else { 0 };
    for idle in 0..=max_idle {
        search.idle = idle;
        search.descend(0, agents - idle, S::one());
    }

    let best = search.best.expect("at least one composition");
    let per_task: Vec<S> = tasks
        .curves()
        .iter()
        .zip(&best.counts)
        .map(|(c, &n)| c.value_at(n))
        .collect();
    let allocation = Allocation {
        agents,
        idle: best.idle,
        collective_performance: per_task.iter().fold(S::one(), |a, &c| a * c),
        counts: best.counts,
        per_task_performance: per_task,
        scale_heterogeneous: tasks.is_scale_heterogeneous(),
    };
    Ok(OracleResult {
        best: allocation,
        best_score: search.best_score,
        ties: search.ties,
        tie_count: search.tie_count,
        enumerated,
        includes_idle,
    })
}

struct Search<'a, S> {
    table: &'a [Vec<S>],
    counts: Vec<usize>,
    idle: usize,
    best_score: S,
    best: Option<Candidate>,
    ties: Vec<Candidate>,
    tie_count: u128,
}

impl<S: Scalar> Search<'_, S> {
    fn descend(&mut self, task: usize, remaining: usize, partial: S) {
        let last = self.counts.len() - 1;
        if task == last {
            self.counts[task] = remaining;
            let score = partial * self.table[task][remaining];
            self.record(score);
            return;
        }
        let reserve = last - task;
        for n in 1..=remaining - reserve {
            self.counts[task] = n;
            self.descend(task + 1, remaining - n, partial * self.table[task][n]);
        }
    }

    fn record(&mut self, score: S) {
        let tol = S::lit(TIE_TOLERANCE);
        let candidate = || Candidate {
            counts: self.counts.clone(),
            idle: self.idle,
        };
        if self.best.is_none() || score > self.best_score + tol * self.best_score.abs() {
            self.best_score = score;
            self.best = Some(candidate());
            self.ties.clear();
            self.ties.push(candidate());
            self.tie_count = 1;
        } else if (score - self.best_score).abs() <= tol * self.best_score.abs() {
            self.tie_count += 1;
            if self.ties.len() < MAX_REPORTED_TIES {
                self.ties.push(candidate());
            }
        }
    }
}
