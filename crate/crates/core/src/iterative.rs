//! Iteration kernels: interval iteration for reachability, mean-payoff value
//! iteration with Δ-bracket bounds, and the (unsound) power method.

use thiserror::Error;

use crate::chain::{ChainAccess, MarkovChain, RewardFunction, StateId};
use crate::graph::can_reach_mask;
use crate::linalg::left_multiply;

/// Default iteration cap for the kernels.
pub const DEFAULT_MAX_ITER: usize = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("iteration budget of {iterations} steps exhausted")]
pub struct IterationBudgetExceeded<T> {
    pub iterations: usize,
    /// Last (still sound) result.
    pub partial: T,
}

/// Per-state `[lower, upper]` pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalVector {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl IntervalVector {
    /// `[0, 1]` everywhere.
    pub fn trivial(n: usize) -> Self {
        IntervalVector {
            lower: vec![0.0; n],
            upper: vec![1.0; n],
        }
    }

    pub fn exact(values: Vec<f64>) -> Self {
        IntervalVector {
            lower: values.clone(),
            upper: values,
        }
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn max_width(&self) -> f64 {
        (0..self.len()).map(|i| self.width(i)).fold(0.0, f64::max)
    }

    /// Whether every `values[i]` lies in `[lower[i] − slack, upper[i] + slack]`.
    pub fn contains(&self, values: &[f64], slack: f64) -> bool {
        values
            .iter()
            .enumerate()
            .all(|(i, &v)| self.lower[i] - slack <= v && v <= self.upper[i] + slack)
    }

    /// Largest distance by which some `values[i]` falls outside its interval.
    pub fn excess(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| (self.lower[i] - v).max(v - self.upper[i]).max(0.0))
            .fold(0.0, f64::max)
    }
}

/// Synchronous interval iteration for `P[◊T]`.
///
/// Lower bounds start at `0` (`1` on `T`), upper bounds at `1` (`0` on `S₀`);
/// both are pushed through `v ↦ ⟨δ(s)|v⟩` and clamped monotone.
pub struct ReachIteration<'a> {
    chain: &'a MarkovChain,
    fixed: Vec<bool>,
    bounds: IntervalVector,
    steps: usize,
}

impl<'a> ReachIteration<'a> {
    pub fn new(chain: &'a MarkovChain, targets: &[StateId]) -> Self {
        let n = chain.num_states();
        let can_reach = can_reach_mask(chain, targets);
        let mut bounds = IntervalVector::trivial(n);
        let mut fixed = vec![false; n];
        for s in 0..n {
            if !can_reach[s] {
                bounds.upper[s] = 0.0;
                fixed[s] = true;
            }
        }
        for &t in targets {
            bounds.lower[t.index()] = 1.0;
            fixed[t.index()] = true;
        }
        ReachIteration {
            chain,
            fixed,
            bounds,
            steps: 0,
        }
    }

    pub fn step(&mut self) {
        let n = self.chain.num_states();
        let mut next = self.bounds.clone();
        for s in 0..n {
            if self.fixed[s] {
                continue;
            }
            let d = self.chain.successors(StateId(s));
            let lo = d.expect(|t| self.bounds.lower[t.index()]);
            let hi = d.expect(|t| self.bounds.upper[t.index()]);
            next.lower[s] = self.bounds.lower[s].max(lo);
            next.upper[s] = self.bounds.upper[s].min(hi);
        }
        self.bounds = next;
        self.steps += 1;
    }

    pub fn bounds(&self) -> &IntervalVector {
        &self.bounds
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn into_bounds(self) -> IntervalVector {
        self.bounds
    }
}

/// Runs [`ReachIteration`] until every interval is at most `tol` wide.
pub fn reach_interval_iteration(
    chain: &MarkovChain,
    targets: &[StateId],
    tol: f64,
    max_iter: usize,
) -> Result<IntervalVector, IterationBudgetExceeded<IntervalVector>> {
    let mut it = ReachIteration::new(chain, targets);
    while it.bounds().max_width() > tol {
        if it.steps() >= max_iter {
            return Err(IterationBudgetExceeded {
                iterations: it.steps(),
                partial: it.into_bounds(),
            });
        }
        it.step();
    }
    Ok(it.into_bounds())
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerResult {
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Power method `v ← vᵀP` stopped on a small absolute change.
///
/// This is the stopping rule of common model checkers and carries no
/// guarantee whatsoever: slowly mixing chains stop far from the answer.
pub fn power_method_naive<C: ChainAccess + ?Sized>(
    chain: &C,
    start: &[f64],
    abs_threshold: f64,
    max_iter: usize,
) -> PowerResult {
    let mut v = start.to_vec();
    for k in 1..=max_iter {
        let next = left_multiply(chain, &v);
        let change = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        if change < abs_threshold {
            return PowerResult {
                vector: v,
                iterations: k,
                converged: true,
            };
        }
    }
    PowerResult {
        vector: v,
        iterations: max_iter,
        converged: false,
    }
}

/// State of mean-payoff value iteration.
///
/// `v` is kept shifted so that `min v = 0`; adding a constant to `v` does not
/// change any later Δ because the transition rows sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanPayoffIterate {
    pub v: Vec<f64>,
    /// `Δ(s) = v_next(s) − v(s)` of the most recent step (empty before the first).
    pub delta: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
}

impl MeanPayoffIterate {
    pub fn start(v0: Vec<f64>) -> Self {
        MeanPayoffIterate {
            v: v0,
            delta: Vec::new(),
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn zero(n: usize) -> Self {
        Self::start(vec![0.0; n])
    }
}

/// One step `v'(s) = r(s) + ⟨δ(s)|v⟩`, recomputing Δ and its min/max.
pub fn mean_payoff_step<C: ChainAccess + ?Sized>(
    chain: &C,
    reward: &RewardFunction,
    it: &MeanPayoffIterate,
) -> MeanPayoffIterate {
    let n = it.v.len();
    let mut next = Vec::with_capacity(n);
    let mut delta = Vec::with_capacity(n);
    mean_payoff_step_into(chain, |s| reward.get(s), &it.v, &mut next, &mut delta);
    let (lo, hi) = min_max(&delta);
    MeanPayoffIterate {
        v: next,
        delta,
        lo,
        hi,
    }
}

/// Allocation-free core of [`mean_payoff_step`]: fills `next` and `delta`.
pub(crate) fn mean_payoff_step_into<C, R>(
    chain: &C,
    reward: R,
    v: &[f64],
    next: &mut Vec<f64>,
    delta: &mut Vec<f64>,
) where
    C: ChainAccess + ?Sized,
    R: Fn(StateId) -> f64,
{
    let n = v.len();
    next.clear();
    delta.clear();
    for s in 0..n {
        let id = StateId(s);
        let x = reward(id) + chain.successors(id).expect(|t| v[t.index()]);
        next.push(x);
        delta.push(x - v[s]);
    }
    let shift = next.iter().copied().fold(f64::INFINITY, f64::min);
    if shift.is_finite() && shift != 0.0 {
        for x in next.iter_mut() {
            *x -= shift;
        }
    }
}

pub(crate) fn min_max(xs: &[f64]) -> (f64, f64) {
    xs.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeanPayoffBounds {
    pub lo: f64,
    pub hi: f64,
    pub final_v: Vec<f64>,
    pub steps: usize,
}

/// Iterates [`mean_payoff_step`] from `v0` (default `0`) until
/// `stop(steps, lo, hi)` holds; always performs at least one step.
///
/// On a single aperiodic BSCC, `[lo, hi]` contains the mean payoff after
/// every step.
pub fn mean_payoff_bounds<C, F>(
    chain: &C,
    reward: &RewardFunction,
    mut stop: F,
    v0: Option<Vec<f64>>,
) -> MeanPayoffBounds
where
    C: ChainAccess + ?Sized,
    F: FnMut(usize, f64, f64) -> bool,
{
    let n = chain.num_states();
    let mut v = v0.unwrap_or_else(|| vec![0.0; n]);
    let mut next = Vec::with_capacity(n);
    let mut delta = Vec::with_capacity(n);
    let mut steps = 0;
    loop {
        mean_payoff_step_into(chain, |s| reward.get(s), &v, &mut next, &mut delta);
        std::mem::swap(&mut v, &mut next);
        steps += 1;
        let (lo, hi) = min_max(&delta);
        if stop(steps, lo, hi) {
            return MeanPayoffBounds {
                lo,
                hi,
                final_v: v,
                steps,
            };
        }
    }
}
