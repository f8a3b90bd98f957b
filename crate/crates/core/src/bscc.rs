//! Certified bounds on the stationary distribution inside one BSCC.
//!
//! The stationary probability of `s` in a BSCC equals the mean payoff of the
//! indicator reward `1_{s}`, and mean-payoff value iteration yields a
//! converging bracket `[min Δ, max Δ]` around it. Each state is refined
//! separately and can be paused and resumed; because the bounds belong to a
//! distribution, lower bounds on some states also cap the others.

use crate::chain::{aperiodic_transform, MarkovChain, StateId, DEFAULT_ALPHA};
use crate::iterative::{mean_payoff_step_into, min_max, IntervalVector, IterationBudgetExceeded};
use crate::sum::NeumaierSum;

/// Step cap for a single `refine_state` call with the default stop rule.
pub const REFINE_STATE_MAX_STEPS: usize = 50;

/// VI sweeps allowed per [`PrecisionGoal::HalveError`] refinement.
pub const HALVE_SWEEP_BUDGET: usize = 200;

/// Warm-start vectors are only kept while `|R|²` stays below this.
const CACHE_LIMIT: usize = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PrecisionGoal {
    /// Every interval at most this wide.
    Absolute(f64),
    /// Halve the current maximal width.
    HalveError,
}

/// Bounds `l^R ≤ π_R ≤ u^R` for a single BSCC, in the BSCC's local indexing.
#[derive(Clone, Debug)]
pub struct BsccBounds {
    /// Aperiodic version of the BSCC; same stationary distribution.
    chain: MarkovChain,
    bounds: IntervalVector,
    cache: Vec<Option<Vec<f64>>>,
    use_cache: bool,
    vi_steps: usize,
}

impl BsccBounds {
    /// `[0, 1]` everywhere, `[1, 1]` for a singleton. `bscc` must be a single BSCC.
    pub fn new(bscc: &MarkovChain) -> Self {
        let n = bscc.num_states();
        let chain = if n == 1 {
            bscc.clone()
        } else {
            aperiodic_transform(bscc, DEFAULT_ALPHA).expect("default alpha is valid")
        };
        let mut bounds = IntervalVector::trivial(n);
        if n == 1 {
            bounds.lower[0] = 1.0;
        }
        BsccBounds {
            chain,
            bounds,
            cache: vec![None; n],
            use_cache: n.saturating_mul(n) <= CACHE_LIMIT,
            vi_steps: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }

    pub fn lower(&self, s: StateId) -> f64 {
        self.bounds.lower[s.index()]
    }

    pub fn upper(&self, s: StateId) -> f64 {
        self.bounds.upper[s.index()]
    }

    pub fn bounds(&self) -> &IntervalVector {
        &self.bounds
    }

    /// `err^R = max_s u(s) − l(s)`.
    pub fn err_width(&self) -> f64 {
        self.bounds.max_width()
    }

    /// Total mean-payoff sweeps spent so far.
    pub fn vi_steps(&self) -> usize {
        self.vi_steps
    }

    /// Replaces the bounds by exactly known values (e.g. from a direct solve).
    pub fn set_exact(&mut self, pi: &[f64]) {
        for (s, &p) in pi.iter().enumerate() {
            let p = p.clamp(0.0, 1.0);
            self.bounds.lower[s] = self.bounds.lower[s].max(p);
            self.bounds.upper[s] = self.bounds.upper[s].min(p);
            if self.bounds.lower[s] > self.bounds.upper[s] {
                self.bounds.lower[s] = p;
                self.bounds.upper[s] = p;
            }
        }
        self.cache.iter_mut().for_each(|c| *c = None);
    }

    /// Mean-payoff VI for reward `1_{s}`, warm-started from the cached vector,
    /// until `stop(steps, lo, hi)`. Tightens `[l(s), u(s)]` with the bracket.
    /// Returns the number of sweeps performed.
    pub fn refine_state<F>(&mut self, s: StateId, mut stop: F) -> usize
    where
        F: FnMut(usize, f64, f64) -> bool,
    {
        let n = self.len();
        if n == 1 {
            return 0;
        }
        let mut v = self.cache[s.index()].take().unwrap_or_else(|| vec![0.0; n]);
        let mut next = Vec::with_capacity(n);
        let mut delta = Vec::with_capacity(n);
        let mut steps = 0;
        let (lo, hi) = loop {
            mean_payoff_step_into(
                &self.chain,
                |t| if t == s { 1.0 } else { 0.0 },
                &v,
                &mut next,
                &mut delta,
            );
            std::mem::swap(&mut v, &mut next);
            steps += 1;
            let (lo, hi) = min_max(&delta);
            if stop(steps, lo, hi) {
                break (lo, hi);
            }
        };
        self.vi_steps += steps;
        let i = s.index();
        self.bounds.lower[i] = self.bounds.lower[i].max(lo.max(0.0));
        self.bounds.upper[i] = self.bounds.upper[i].min(hi.min(1.0));
        if self.use_cache {
            self.cache[i] = Some(v);
        }
        steps
    }

    /// [`refine_state`](Self::refine_state) with the default rule: stop once
    /// the bracket is at most half the current width of `s` (or `target`),
    /// or after `max_steps` sweeps.
    pub fn refine_state_default(&mut self, s: StateId, target: f64, max_steps: usize) -> usize {
        let goal = (0.5 * self.bounds.width(s.index())).max(target);
        self.refine_state(s, |n, lo, hi| hi - lo <= goal || n >= max_steps)
    }

    /// One pass of `l(s) ← max(l, 1 − Σ_{s'≠s} u)`, `u(s) ← min(u, 1 − Σ_{s'≠s} l)`.
    pub fn tighten_by_complement(&mut self) {
        tighten_by_complement(&mut self.bounds);
    }

    /// Refines until `goal` is met or `sweep_budget` sweeps were spent in
    /// this call. Returns whether the goal was met.
    pub fn refine(&mut self, goal: PrecisionGoal, sweep_budget: usize) -> bool {
        let target = match goal {
            PrecisionGoal::Absolute(eps) => eps,
            PrecisionGoal::HalveError => 0.5 * self.err_width(),
        };
        let mut spent = 0;
        loop {
            if self.err_width() <= target {
                return true;
            }
            if spent >= sweep_budget {
                return false;
            }
            for s in self.refinement_order() {
                if self.bounds.width(s.index()) <= target {
                    continue;
                }
                let cap = REFINE_STATE_MAX_STEPS.min(sweep_budget - spent).max(1);
                spent += self.refine_state_default(s, target, cap);
                self.tighten_by_complement();
                if self.err_width() <= target {
                    return true;
                }
                if spent >= sweep_budget {
                    return false;
                }
            }
        }
    }

    /// States by descending interval width, ties by id.
    fn refinement_order(&self) -> Vec<StateId> {
        let mut order: Vec<StateId> = (0..self.len()).map(StateId).collect();
        order.sort_by(|a, b| {
            self.bounds
                .width(b.index())
                .total_cmp(&self.bounds.width(a.index()))
                .then(a.cmp(b))
        });
        order
    }
}

/// Complement update on a bounds vector describing one distribution.
pub fn tighten_by_complement(bounds: &mut IntervalVector) {
    let sum_l = bounds
        .lower
        .iter()
        .copied()
        .collect::<NeumaierSum>()
        .value();
    let sum_u = bounds
        .upper
        .iter()
        .copied()
        .collect::<NeumaierSum>()
        .value();
    for s in 0..bounds.len() {
        let (l, u) = (bounds.lower[s], bounds.upper[s]);
        let upper = u.min((1.0 - (sum_l - l)).max(l)).clamp(0.0, 1.0);
        bounds.lower[s] = l.max((1.0 - (sum_u - u)).min(upper)).clamp(0.0, 1.0);
        bounds.upper[s] = upper;
    }
}

/// Bounds for a whole BSCC at the requested precision.
pub fn approximate_bscc(
    bscc: &MarkovChain,
    goal: PrecisionGoal,
    sweep_budget: usize,
) -> Result<BsccBounds, IterationBudgetExceeded<BsccBounds>> {
    let mut b = BsccBounds::new(bscc);
    if b.refine(goal, sweep_budget) {
        Ok(b)
    } else {
        Err(IterationBudgetExceeded {
            iterations: b.vi_steps(),
            partial: b,
        })
    }
}

/// One state at a time, each solved to `epsilon` before moving on, keeping
/// only `O(|R|)` auxiliary values alive (no warm-start cache).
pub fn approximate_bscc_low_memory(
    bscc: &MarkovChain,
    epsilon: f64,
    max_steps_per_state: usize,
) -> Result<BsccBounds, IterationBudgetExceeded<BsccBounds>> {
    let mut b = BsccBounds::new(bscc);
    b.use_cache = false;
    b.cache = Vec::new();
    let n = b.len();
    if n == 1 {
        return Ok(b);
    }
    for i in 0..n {
        if b.bounds.width(i) <= epsilon {
            continue;
        }
        let mut v = vec![0.0; n];
        let mut next = Vec::with_capacity(n);
        let mut delta = Vec::with_capacity(n);
        let s = StateId(i);
        let mut steps = 0;
        let (lo, hi) = loop {
            mean_payoff_step_into(
                &b.chain,
                |t| if t == s { 1.0 } else { 0.0 },
                &v,
                &mut next,
                &mut delta,
            );
            std::mem::swap(&mut v, &mut next);
            steps += 1;
            let (lo, hi) = min_max(&delta);
            if hi - lo <= epsilon || steps >= max_steps_per_state {
                break (lo, hi);
            }
        };
        b.vi_steps += steps;
        b.bounds.lower[i] = b.bounds.lower[i].max(lo.max(0.0));
        b.bounds.upper[i] = b.bounds.upper[i].min(hi.min(1.0));
        drop((v, next, delta));
        b.tighten_by_complement();
        if b.bounds.width(i) > epsilon {
            return Err(IterationBudgetExceeded {
                iterations: b.vi_steps,
                partial: b,
            });
        }
    }
    Ok(b)
}
