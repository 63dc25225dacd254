//! Scalability curves: how the performance of a single task depends on the number
//! of agents working on it.
//!
//! Three concave families are supported:
//!
//! * [`ScalabilityCurve::Linear`]: Gustafson's law, `n - λ(n - 1)`.
//! * [`ScalabilityCurve::Saturating`]: Condorcet jury accuracy of a majority vote of
//!   `n` independent voters that are each right with probability `p`.
//! * [`ScalabilityCurve::Retrograde`]: the universal scalability law,
//!   `k·n / (1 + α(n - 1) + βn(n - 1))`, which peaks and then declines.
//!
//! The allocator only ever looks at the *marginal gain* `δ(n) = C(n+1)/C(n) - 1`
//! through a [`GainState`], which advances one allocation unit at a time in
//! constant time. Saturating curves advance in pairs of agents: adding a single
//! voter to an odd group never changes the majority accuracy, so the unit for
//! these curves is two agents and the gain sequence is indexed by the pair index
//! `k` (group size `2k - 1`).

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Family tag of a [`ScalabilityCurve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Linear,
    Saturating,
    Retrograde,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Linear => "linear",
            Family::Saturating => "saturating",
            Family::Retrograde => "retrograde",
        }
    }

    /// Whether the curve is bounded (a probability-like accuracy or a normalized
    /// throughput) rather than growing without bound in `n`.
    pub fn is_bounded(self) -> bool {
        !matches!(self, Family::Linear)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalabilityCurve<S> {
    /// Gustafson's law with non-parallelizable fraction `lambda` in `(0, 1)`.
    Linear { lambda: S },
    /// Majority-vote accuracy with individual accuracy `p` in `[0.5, 1]`.
    Saturating { p: S },
    /// Universal scalability law with contention `alpha`, incoherence `beta` and
    /// scale `k`. Only `alpha >= beta` is accepted, which keeps the curve concave
    /// up to its peak.
    Retrograde { alpha: S, beta: S, k: S },
}

impl<S: Scalar> ScalabilityCurve<S> {
    pub fn linear(lambda: S) -> Result<Self> {
        let curve = ScalabilityCurve::Linear { lambda };
        curve.validate()?;
        Ok(curve)
    }

    pub fn saturating(p: S) -> Result<Self> {
        let curve = ScalabilityCurve::Saturating { p };
        curve.validate()?;
        Ok(curve)
    }

    pub fn retrograde(alpha: S, beta: S, k: S) -> Result<Self> {
        let curve = ScalabilityCurve::Retrograde { alpha, beta, k };
        curve.validate()?;
        Ok(curve)
    }

    pub fn family(&self) -> Family {
        match self {
            ScalabilityCurve::Linear { .. } => Family::Linear,
            ScalabilityCurve::Saturating { .. } => Family::Saturating,
            ScalabilityCurve::Retrograde { .. } => Family::Retrograde,
        }
    }

    /// Number of agents added per allocation step.
    pub fn unit_size(&self) -> usize {
        match self {
            ScalabilityCurve::Saturating { .. } => 2,
            _ => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_ranges()?;
        if let ScalabilityCurve::Retrograde { alpha, beta, .. } = *self {
            if alpha < beta {
                return Err(Error::InvalidCurve {
                    family: self.family().name(),
                    reason: format!(
                        "alpha = {alpha} < beta = {beta}: the curve is not concave below its peak"
                    ),
                });
            }
        }
        Ok(())
    }

    /// Parameter ranges only, without the concavity requirement on retrograde curves.
    fn validate_ranges(&self) -> Result<()> {
        let invalid = |reason: String| Error::InvalidCurve {
            family: self.family().name(),
            reason,
        };
        match *self {
            ScalabilityCurve::Linear { lambda } => {
                if !(lambda > S::zero() && lambda < S::one()) {
                    return Err(invalid(format!("lambda = {lambda} must lie in (0, 1)")));
                }
            }
            ScalabilityCurve::Saturating { p } => {
                if !(p >= S::lit(0.5) && p <= S::one()) {
                    return Err(invalid(format!("p = {p} must lie in [0.5, 1]")));
                }
            }
            ScalabilityCurve::Retrograde { alpha, beta, k } => {
                if !(alpha >= S::zero() && alpha.is_finite()) {
                    return Err(invalid(format!("alpha = {alpha} must be finite and >= 0")));
                }
                if !(beta >= S::zero() && beta.is_finite()) {
                    return Err(invalid(format!("beta = {beta} must be finite and >= 0")));
                }
                if !(k > S::zero() && k.is_finite()) {
                    return Err(invalid(format!("k = {k} must be finite and > 0")));
                }
            }
        }
        Ok(())
    }

    /// Performance `C(d, n)` of `n >= 1` agents.
    pub fn evaluate(&self, n: usize) -> Result<S> {
        self.validate()?;
        if n == 0 {
            return Err(Error::Domain("group size must be at least 1".into()));
        }
        Ok(self.value_at(n))
    }

    /// `evaluate` without validation; `n >= 1` and a valid curve are assumed.
    pub(crate) fn value_at(&self, n: usize) -> S {
        match *self {
            ScalabilityCurve::Linear { lambda } => {
                let n = S::from_count(n);
                n - lambda * (n - S::one())
            }
            ScalabilityCurve::Saturating { .. } => {
                // C(2k) = C(2k - 1): an even group performs like the odd group below it.
                let pairs = n.div_ceil(2);
                let mut state = GainState::start(*self);
                for _ in 1..pairs {
                    state = state.advance();
                }
                state.current_performance
            }
            ScalabilityCurve::Retrograde { alpha, beta, k } => usl(alpha, beta, k, n),
        }
    }

    /// Absolute gain `Δ` of one allocation step taken from `step`.
    ///
    /// For linear and retrograde curves `step` is the current group size `n` and the
    /// result is `C(n + 1) - C(n)`. For saturating curves `step` is the pair index
    /// `k` and the result is `C(2k + 1) - C(2k - 1)`, evaluated in log space as
    /// `binom(2k - 1, k - 1) (2p - 1) (p(1 - p))^k`.
    pub fn absolute_gain(&self, step: usize) -> Result<S> {
        self.validate()?;
        if step == 0 {
            return Err(Error::Domain("step index must be at least 1".into()));
        }
        Ok(match *self {
            ScalabilityCurve::Saturating { p } => {
                let q = S::one() - p;
                let bias = S::lit(2.0) * p - S::one();
                if bias == S::zero() || q == S::zero() {
                    return Ok(S::zero());
                }
                let ln_binom = ln_binomial::<S>(2 * step - 1, step - 1);
                (ln_binom + bias.ln() + S::from_count(step) * (p * q).ln()).exp()
            }
            _ => self.value_at(step + 1) - self.value_at(step),
        })
    }

    /// Group size with maximal performance for a retrograde curve; when the floor and
    /// the ceiling of `sqrt((1 - α)/β)` perform equally the smaller one is returned.
    ///
    /// Concavity (`α >= β`) is not required here.
    pub fn peak_group_size(&self) -> Result<usize> {
        self.validate_ranges()?;
        let ScalabilityCurve::Retrograde { alpha, beta, .. } = *self else {
            return Err(Error::Domain(format!(
                "{} curves have no interior peak",
                self.family().name()
            )));
        };
        if beta <= S::zero() {
            return Err(Error::Domain("beta = 0: performance never peaks".into()));
        }
        if alpha >= S::one() {
            return Err(Error::Domain(format!(
                "alpha = {alpha} >= 1: performance is maximal at a single agent"
            )));
        }
        let root = ((S::one() - alpha) / beta).sqrt();
        let lo = root.floor().to_usize().unwrap_or(usize::MAX).max(1);
        let hi = root.ceil().to_usize().unwrap_or(usize::MAX).max(1);
        if hi > lo && self.value_at(hi) > self.value_at(lo) {
            Ok(hi)
        } else {
            Ok(lo)
        }
    }
}

fn usl<S: Scalar>(alpha: S, beta: S, k: S, n: usize) -> S {
    let n = S::from_count(n);
    k * n / usl_denominator(alpha, beta, n)
}

#[inline]
fn usl_denominator<S: Scalar>(alpha: S, beta: S, n: S) -> S {
    S::one() + alpha * (n - S::one()) + beta * n * (n - S::one())
}

/// `ln binom(n, r)` as a sum of logarithms.
fn ln_binomial<S: Scalar>(n: usize, r: usize) -> S {
    let r = r.min(n - r);
    (1..=r).fold(S::zero(), |acc, j| {
        acc + (S::from_count(n - r + j) / S::from_count(j)).ln()
    })
}

/// Running marginal gain of a task after `step_index` allocation steps.
///
/// `current_delta` is the relative improvement `C(next)/C(current) - 1` of taking the
/// next step; `current_performance` is `C` at the current group size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainState<S> {
    pub curve: ScalabilityCurve<S>,
    /// Group size for linear and retrograde curves, pair index for saturating ones.
    pub step_index: usize,
    pub current_delta: S,
    pub current_performance: S,
}

impl<S: Scalar> GainState<S> {
    pub fn new(curve: ScalabilityCurve<S>) -> Result<Self> {
        curve.validate()?;
        Ok(Self::start(curve))
    }

    pub(crate) fn start(curve: ScalabilityCurve<S>) -> Self {
        let (delta, performance) = match curve {
            ScalabilityCurve::Linear { lambda } => (S::one() - lambda, S::one()),
            ScalabilityCurve::Saturating { p } => ((S::lit(2.0) * p - S::one()) * (S::one() - p), p),
            ScalabilityCurve::Retrograde { alpha, beta, k } => {
                (usl_delta(alpha, beta, S::one()), k)
            }
        };
        GainState {
            curve,
            step_index: 1,
            current_delta: delta,
            current_performance: performance,
        }
    }

    /// Takes one allocation step (one agent, or one pair for saturating curves).
    #[must_use]
    pub fn advance(self) -> Self {
        let next = self.step_index + 1;
        let delta = match self.curve {
            ScalabilityCurve::Linear { lambda } => {
                let n = S::from_count(next);
                (S::one() - lambda) / (n * (S::one() - lambda) + lambda)
            }
            ScalabilityCurve::Saturating { p } => {
                let k = S::from_count(next);
                let prev = self.current_delta;
                S::lit(2.0) * (S::lit(2.0) - k.recip()) * p * (S::one() - p) * prev
                    / (S::one() + prev)
            }
            ScalabilityCurve::Retrograde { alpha, beta, .. } => {
                usl_delta(alpha, beta, S::from_count(next))
            }
        };
        let performance = match self.curve {
            ScalabilityCurve::Saturating { .. } => {
                (S::one() + self.current_delta) * self.current_performance
            }
            // Closed forms are exact here; no need to accumulate products.
            _ => self.curve.value_at(next),
        };
        GainState {
            curve: self.curve,
            step_index: next,
            current_delta: delta,
            current_performance: performance,
        }
    }

    /// Agents currently allocated to the task.
    pub fn agents(&self) -> usize {
        match self.curve {
            ScalabilityCurve::Saturating { .. } => 2 * self.step_index - 1,
            _ => self.step_index,
        }
    }
}

/// `C(n+1)/C(n) - 1` for the universal scalability law, which simplifies to
/// `(1 - α - βn(n+1)) / (n · D(n+1))` and is independent of `k`.
fn usl_delta<S: Scalar>(alpha: S, beta: S, n: S) -> S {
    let numerator = S::one() - alpha - beta * n * (n + S::one());
    numerator / (n * usl_denominator(alpha, beta, n + S::one()))
}

/// Initial gain state, one agent on the task.
pub fn marginal_gain_init<S: Scalar>(curve: ScalabilityCurve<S>) -> Result<GainState<S>> {
    GainState::new(curve)
}

pub fn marginal_gain_advance<S: Scalar>(state: GainState<S>) -> GainState<S> {
    state.advance()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::relative_difference;

    /// Direct majority-vote sum with log-space binomial terms, tie term included.
    fn cjt_direct(p: f64, n: usize) -> f64 {
        let lp = p.ln();
        let lq = (1.0 - p).ln();
        let ln_c = |k: usize| -> f64 {
            (1..=k).map(|j| ((n - k + j) as f64 / j as f64).ln()).sum::<f64>()
        };
        let term = |k: usize| -> f64 {
            let a = if k == 0 { 0.0 } else { k as f64 * lp };
            let b = if n == k { 0.0 } else { (n - k) as f64 * lq };
            (ln_c(k) + a + b).exp()
        };
        let mut sum: f64 = (n / 2 + 1..=n).map(term).sum();
        if n % 2 == 0 {
            sum += 0.5 * term(n / 2);
        }
        sum
    }

    fn sat(p: f64) -> ScalabilityCurve<f64> {
        ScalabilityCurve::saturating(p).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(ScalabilityCurve::linear(0.5).unwrap().evaluate(1).unwrap(), 1.0);
        assert_eq!(sat(0.6).evaluate(1).unwrap(), 0.6);
        assert!((sat(0.6).evaluate(3).unwrap() - 0.648).abs() < 1e-15);
        assert!((sat(0.6).evaluate(2).unwrap() - 0.6).abs() < 1e-15);
        let usl = ScalabilityCurve::retrograde(0.3, 0.01, 1.0).unwrap();
        assert_eq!(usl.evaluate(1).unwrap(), 1.0);
    }

    #[test]
    fn evaluate_rejects_bad_inputs() {
        assert!(matches!(sat(0.6).evaluate(0), Err(Error::Domain(_))));
        assert!(ScalabilityCurve::linear(0.0).is_err());
        assert!(ScalabilityCurve::linear(1.0).is_err());
        assert!(ScalabilityCurve::saturating(0.49).is_err());
        assert!(ScalabilityCurve::saturating(1.01).is_err());
        assert!(ScalabilityCurve::retrograde(0.1, 0.2, 1.0).is_err());
        assert!(ScalabilityCurve::retrograde(0.1, -0.01, 1.0).is_err());
        assert!(ScalabilityCurve::retrograde(0.1, 0.01, 0.0).is_err());
        let raw = ScalabilityCurve::Saturating { p: 0.2 };
        assert!(matches!(raw.evaluate(3), Err(Error::InvalidCurve { .. })));
    }

    #[test]
    fn evaluate_matches_direct_sum() {
        for &p in &[0.5, 0.51, 0.6017, 0.8069, 0.99, 1.0] {
            for n in 1..=120 {
                let got = sat(p).evaluate(n).unwrap();
                let want = cjt_direct(p, n);
                assert!(
                    (got - want).abs() <= 1e-12,
                    "p={p} n={n}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn absolute_gain_examples() {
        let g = sat(0.6).absolute_gain(1).unwrap();
        assert!((g - 0.048).abs() < 1e-15);
        assert!((g - (cjt_direct(0.6, 3) - cjt_direct(0.6, 1))).abs() < 1e-15);
        let lin = ScalabilityCurve::linear(0.3f64).unwrap();
        assert!((lin.absolute_gain(4).unwrap() - 0.7).abs() < 1e-12);
        for k in [1, 5, 40] {
            assert_eq!(sat(1.0).absolute_gain(k).unwrap(), 0.0);
        }
        assert!(sat(0.6).absolute_gain(0).is_err());
    }

    #[test]
    fn absolute_gain_matches_direct_difference() {
        for &p in &[0.55, 0.6017, 0.75, 0.9] {
            for k in 1..=60 {
                let want = cjt_direct(p, 2 * k + 1) - cjt_direct(p, 2 * k - 1);
                let got = sat(p).absolute_gain(k).unwrap();
                assert!((got - want).abs() <= 1e-13, "p={p} k={k}");
            }
        }
    }

    #[test]
    fn init_examples() {
        let s = marginal_gain_init(sat(0.6)).unwrap();
        assert!((s.current_delta - 0.08).abs() < 1e-15);
        assert!((s.current_delta - 0.048 / 0.6).abs() < 1e-15);
        let l = marginal_gain_init(ScalabilityCurve::linear(0.5f64).unwrap()).unwrap();
        assert!((l.current_delta - 0.5).abs() < 1e-15);
        let r = marginal_gain_init(ScalabilityCurve::retrograde(0.0f64, 0.0, 1.0).unwrap()).unwrap();
        assert!((r.current_delta - 1.0).abs() < 1e-15);
        assert!(marginal_gain_init(ScalabilityCurve::Linear { lambda: 2.0 }).is_err());
    }

    #[test]
    fn advance_examples() {
        let s = marginal_gain_advance(marginal_gain_init(sat(0.6)).unwrap());
        assert_eq!(s.step_index, 2);
        assert_eq!(s.agents(), 3);
        assert!((s.current_delta - 2.0 * 1.5 * 0.24 * (0.08 / 1.08)).abs() < 1e-15);
        let direct = (cjt_direct(0.6, 5) - cjt_direct(0.6, 3)) / cjt_direct(0.6, 3);
        assert!(relative_difference(s.current_delta, direct) < 1e-12);
        assert!((s.current_performance - 0.648).abs() < 1e-15);

        for &lambda in &[0.01, 0.3, 0.5, 0.99] {
            let mut st = GainState::new(ScalabilityCurve::linear(lambda).unwrap()).unwrap();
            for _ in 0..200 {
                let next = st.advance();
                assert!(next.current_delta < st.current_delta);
                st = next;
            }
        }

        let table_row = ScalabilityCurve::retrograde(0.7971, 0.0012, 0.5194).unwrap();
        let mut st = GainState::new(table_row).unwrap();
        while st.step_index < 12 {
            st = st.advance();
        }
        assert!(st.current_delta > 0.0);
        st = st.advance().advance();
        assert_eq!(st.step_index, 14);
        assert!(st.current_delta < 0.0);
    }

    #[test]
    fn retrograde_state_tracks_direct_values() {
        let curve = ScalabilityCurve::retrograde(0.6376f64, 0.0021, 0.5270).unwrap();
        let mut st = GainState::new(curve).unwrap();
        for n in 1..300 {
            let want = curve.value_at(n + 1) / curve.value_at(n) - 1.0;
            assert!((st.current_delta - want).abs() <= 1e-12 * want.abs().max(1e-3));
            assert!(relative_difference(st.current_performance, curve.value_at(n)) < 1e-14);
            st = st.advance();
        }
    }

    #[test]
    fn peak_examples() {
        let row = ScalabilityCurve::retrograde(0.7971, 0.0012, 0.5194).unwrap();
        assert_eq!(row.peak_group_size().unwrap(), 13);
        let r2 = ScalabilityCurve::retrograde(0.75, 0.25, 1.0).unwrap();
        assert_eq!(r2.peak_group_size().unwrap(), 1);
        let r3 = ScalabilityCurve::retrograde(0.0, 0.0, 1.0).unwrap();
        assert!(r3.peak_group_size().is_err());
        let r4 = ScalabilityCurve::retrograde(1.2, 0.01, 1.0).unwrap();
        assert!(r4.peak_group_size().is_err());
        assert!(sat(0.7).peak_group_size().is_err());
    }

    #[test]
    fn peak_exact_root() {
        // sqrt(1 / 0.01) = 10 exactly; allowed here even though alpha < beta.
        let curve = ScalabilityCurve::Retrograde { alpha: 0.0, beta: 0.01, k: 1.0 };
        assert_eq!(curve.peak_group_size().unwrap(), 10);
        assert!(curve.value_at(10) >= curve.value_at(11));
        assert!(curve.value_at(10) > curve.value_at(9));
    }

    #[test]
    fn peak_is_scale_invariant() {
        for &k in &[1e-3, 0.5194, 1.0, 7.0, 1e4] {
            let c = ScalabilityCurve::retrograde(0.7971, 0.0012, k).unwrap();
            assert_eq!(c.peak_group_size().unwrap(), 13);
        }
    }

    #[test]
    fn generic_over_f32() {
        let c = ScalabilityCurve::<f32>::saturating(0.6).unwrap();
        assert!((c.evaluate(3).unwrap() - 0.648).abs() < 1e-6);
        let st = GainState::new(c).unwrap().advance();
        assert!((st.current_delta - 0.053_333_33).abs() < 1e-6);
    }
}
