//! Greedy marginal-gain allocation.
//!
//! Every task starts with one agent. The remaining agents are handed out one
//! allocation unit at a time to the task whose next unit has the largest marginal
//! gain `δ`, read from a max-heap keyed by `δ`. Once the best available gain is at
//! most `ε` the rest of the swarm goes to the idle pool. Since
//! `C(N + e_i) = (1 + δ_i) C(N)`, this maximizes the product of per-task
//! performances whenever every task's gain sequence is non-increasing.
//!
//! Saturating tasks take pairs of agents. When a task set mixes pair tasks with
//! single-agent tasks the two kinds are run as separate greedy streams and the
//! budget split between them is chosen exactly afterwards, because a pair may win
//! the comparison against a single agent while two single agents would have been
//! worth more.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::scalability::{Family, GainState, ScalabilityCurve};
use crate::scalar::Scalar;

/// Ordered list of task curves.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSet<S> {
    curves: Vec<ScalabilityCurve<S>>,
}

impl<S: Scalar> TaskSet<S> {
    pub fn new(curves: Vec<ScalabilityCurve<S>>) -> Result<Self> {
        if curves.is_empty() {
            return Err(Error::EmptyTaskSet);
        }
        for curve in &curves {
            curve.validate()?;
        }
        Ok(TaskSet { curves })
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    /// Always false; a task set holds at least one task.
    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn curves(&self) -> &[ScalabilityCurve<S>] {
        &self.curves
    }

    /// True when unbounded linear curves are multiplied with bounded ones, so the
    /// collective performance mixes incommensurate scales.
    pub fn is_scale_heterogeneous(&self) -> bool {
        let linear = self.curves.iter().any(|c| c.family() == Family::Linear);
        let bounded = self.curves.iter().any(|c| c.family().is_bounded());
        linear && bounded
    }
}

/// Which task wins when several offer exactly the same marginal gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    LowestIndex,
    HighestIndex,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocatorConfig<S> {
    /// Deployment cost: a unit is only assigned when its marginal gain exceeds it.
    pub epsilon: S,
    pub tie_break: TieBreak,
}

impl<S: Scalar> AllocatorConfig<S> {
    pub fn new(epsilon: S) -> Result<Self> {
        let config = AllocatorConfig {
            epsilon,
            tie_break: TieBreak::default(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= S::zero() && self.epsilon.is_finite()) {
            return Err(Error::Domain(format!(
                "epsilon = {} must be finite and >= 0",
                self.epsilon
            )));
        }
        Ok(())
    }
}

impl<S: Scalar> Default for AllocatorConfig<S> {
    fn default() -> Self {
        AllocatorConfig {
            epsilon: S::zero(),
            tie_break: TieBreak::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation<S> {
    /// Swarm size `N`.
    pub agents: usize,
    pub counts: Vec<usize>,
    pub idle: usize,
    pub collective_performance: S,
    pub per_task_performance: Vec<S>,
    pub scale_heterogeneous: bool,
}

impl<S: Scalar> Allocation<S> {
    /// `n_i / N` for every task.
    pub fn proportions(&self) -> Vec<S> {
        let total = S::from_count(self.agents);
        self.counts
            .iter()
            .map(|&c| S::from_count(c) / total)
            .collect()
    }

    pub fn idle_proportion(&self) -> S {
        S::from_count(self.idle) / S::from_count(self.agents)
    }
}

/// Work counters of one [`allocate_with_stats`] call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AllocationStats {
    /// Gain-state advances, one per allocation unit handed out.
    pub advances: usize,
    /// Pushes plus pops on the priority queues.
    pub heap_operations: usize,
}

/// Product of the per-task performances for the given agent counts.
pub fn collective_performance<S: Scalar>(tasks: &TaskSet<S>, counts: &[usize]) -> Result<S> {
    if counts.len() != tasks.len() {
        return Err(Error::LengthMismatch {
            expected: tasks.len(),
            got: counts.len(),
        });
    }
    let mut product = S::one();
    for (curve, &n) in tasks.curves().iter().zip(counts) {
        product = product * curve.evaluate(n)?;
    }
    Ok(product)
}

pub fn allocate<S: Scalar>(
    agents: usize,
    tasks: &TaskSet<S>,
    config: &AllocatorConfig<S>,
) -> Result<Allocation<S>> {
    allocate_with_stats(agents, tasks, config).map(|(allocation, _)| allocation)
}

pub fn allocate_with_stats<S: Scalar>(
    agents: usize,
    tasks: &TaskSet<S>,
    config: &AllocatorConfig<S>,
) -> Result<(Allocation<S>, AllocationStats)> {
    config.validate()?;
    if agents < tasks.len() {
        return Err(Error::TooFewAgents {
            agents,
            tasks: tasks.len(),
        });
    }
    let budget = agents - tasks.len();
    let (singles, pairs): (Vec<usize>, Vec<usize>) =
        (0..tasks.len()).partition(|&i| tasks.curves()[i].unit_size() == 1);
    let mut stats = AllocationStats::default();

    let states = if pairs.is_empty() || singles.is_empty() {
        let unit = tasks.curves()[0].unit_size();
        let mut stream = GreedyStream::new(tasks, &(0..tasks.len()).collect::<Vec<_>>(), config);
        for _ in 0..budget / unit {
            if stream.pick(&mut stats).is_none() {
                break;
            }
        }
        stream.into_states()
    } else {
        split_streams(tasks, &singles, &pairs, budget, config, &mut stats)
    };

    let counts: Vec<usize> = states.iter().map(GainState::agents).collect();
    let per_task: Vec<S> = states.iter().map(|s| s.current_performance).collect();
    let assigned: usize = counts.iter().sum();
    let allocation = Allocation {
        agents,
        idle: agents - assigned,
        collective_performance: per_task.iter().fold(S::one(), |acc, &c| acc * c),
        counts,
        per_task_performance: per_task,
        scale_heterogeneous: tasks.is_scale_heterogeneous(),
    };
    Ok((allocation, stats))
}

/// Runs the single-agent and the pair stream to exhaustion of the budget, then
/// picks the number of pairs `m` maximizing the combined log gain of the first
/// `budget - 2m` single picks and the first `m` pair picks.
fn split_streams<S: Scalar>(
    tasks: &TaskSet<S>,
    singles: &[usize],
    pairs: &[usize],
    budget: usize,
    config: &AllocatorConfig<S>,
    stats: &mut AllocationStats,
) -> Vec<GainState<S>> {
    let cost = config.epsilon.ln_1p();
    let run = |members: &[usize], units: usize, stats: &mut AllocationStats| {
        let mut stream = GreedyStream::new(tasks, members, config);
        let mut picks = Vec::new();
        let mut prefix = vec![S::zero()];
        while picks.len() < units {
            let Some((task, delta)) = stream.pick(stats) else {
                break;
            };
            picks.push(task);
            let last = *prefix.last().unwrap();
            prefix.push(last + delta.ln_1p() - cost);
        }
        (picks, prefix)
    };
    let (single_picks, single_gain) = run(singles, budget, stats);
    let (pair_picks, pair_gain) = run(pairs, budget / 2, stats);

    let mut best = (0, S::neg_infinity());
    for m in 0..pair_picks.len().min(budget / 2) + 1 {
        let j = (budget - 2 * m).min(single_picks.len());
        let total = single_gain[j] + pair_gain[m];
        if total > best.1 {
            best = (m, total);
        }
    }
    let m = best.0;
    let j = (budget - 2 * m).min(single_picks.len());

    let mut steps = vec![1usize; tasks.len()];
    for &task in single_picks[..j].iter().chain(&pair_picks[..m]) {
        steps[task] += 1;
    }
    tasks
        .curves()
        .iter()
        .zip(steps)
        .map(|(&curve, step)| {
            let agents = match curve {
                ScalabilityCurve::Saturating { .. } => 2 * step - 1,
                _ => step,
            };
            GainState {
                curve,
                step_index: step,
                current_delta: S::nan(),
                current_performance: curve.value_at(agents),
            }
        })
        .collect()
}

struct HeapEntry<S> {
    delta: S,
    task: usize,
    tie_break: TieBreak,
}

impl<S: Scalar> PartialEq for HeapEntry<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<S: Scalar> Eq for HeapEntry<S> {}

impl<S: Scalar> PartialOrd for HeapEntry<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<S: Scalar> Ord for HeapEntry<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        // Gains of validated curves are never NaN.
        let by_gain = self
            .delta
            .partial_cmp(&other.delta)
            .unwrap_or(Ordering::Equal);
        by_gain.then_with(|| match self.tie_break {
            TieBreak::LowestIndex => other.task.cmp(&self.task),
            TieBreak::HighestIndex => self.task.cmp(&other.task),
        })
    }
}

/// Greedy marginal-gain loop over a subset of the tasks.
struct GreedyStream<S> {
    states: Vec<GainState<S>>,
    heap: BinaryHeap<HeapEntry<S>>,
    epsilon: S,
    tie_break: TieBreak,
    exhausted: bool,
}

impl<S: Scalar> GreedyStream<S> {
    fn new(tasks: &TaskSet<S>, members: &[usize], config: &AllocatorConfig<S>) -> Self {
        let states: Vec<GainState<S>> = tasks
            .curves()
            .iter()
            .map(|&c| GainState::start(c))
            .collect();
        let heap = members
            .iter()
            .map(|&task| HeapEntry {
                delta: states[task].current_delta,
                task,
                tie_break: config.tie_break,
            })
            .collect();
        GreedyStream {
            states,
            heap,
            epsilon: config.epsilon,
            tie_break: config.tie_break,
            exhausted: false,
        }
    }

    /// Assigns one unit to the best task and returns it with the gain it realized,
    /// or `None` once no task offers a gain above `ε`.
    fn pick(&mut self, stats: &mut AllocationStats) -> Option<(usize, S)> {
        if self.exhausted {
            return None;
        }
        let top = self.heap.peek()?;
        if top.delta <= self.epsilon {
            self.exhausted = true;
            return None;
        }
        let HeapEntry { task, delta, .. } = self.heap.pop()?;
        let next = self.states[task].advance();
        self.states[task] = next;
        self.heap.push(HeapEntry {
            delta: next.current_delta,
            task,
            tie_break: self.tie_break,
        });
        stats.advances += 1;
        stats.heap_operations += 2;
        Some((task, delta))
    }

    fn into_states(self) -> Vec<GainState<S>> {
        self.states
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<S> {
    pub agents: usize,
    pub allocation: Allocation<S>,
    pub proportions: Vec<S>,
    pub idle_proportion: S,
}

/// Allocations for each swarm size, in the order given.
pub fn sweep<S: Scalar>(
    swarm_sizes: &[usize],
    tasks: &TaskSet<S>,
    config: &AllocatorConfig<S>,
) -> Result<Vec<SweepRow<S>>> {
    swarm_sizes
        .iter()
        .map(|&n| {
            let allocation = allocate(n, tasks, config)?;
            Ok(SweepRow {
                agents: n,
                proportions: allocation.proportions(),
                idle_proportion: allocation.idle_proportion(),
                allocation,
            })
        })
        .collect()
}
