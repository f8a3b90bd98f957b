//! The generic refinement loop.
//!
//! A run keeps a family of known BSCCs, bounds on each one's stationary
//! distribution, and bounds on the probability of reaching each of them from
//! every state it has looked at. A [`StrategyHooks`] implementation decides
//! how the family grows and which bounds get refined. The loop stops once
//!
//! ```text
//! (1 − Σ_R l^{◊R}(ŝ)) + Σ_R l^{◊R}(ŝ) · err^R  ≤  ε
//! ```
//!
//! and then multiplies the two kinds of bounds together. Because every hook
//! only ever tightens sound bounds, the assembled result is sound after every
//! iteration, not just at the end.

mod classic;
mod sampling;

use std::time::{Duration, Instant};

use rand_xoshiro::Xoshiro256PlusPlus;
use thiserror::Error;

use crate::bscc::BsccBounds;
use crate::chain::{restrict, ChainAccess, ChainError, StateId};
use crate::graph::PartialGraphView;
use crate::io::generators::rng_from_seed;
use crate::iterative::IntervalVector;
use crate::linalg::SolveError;
use crate::reach::ReachBounds;
use crate::sum::NeumaierSum;

pub use classic::{classic_hooks, ClassicHooks};
pub use sampling::{
    naive_hooks, sample_hooks, sample_path, select_target, BsccSolver, Episode, PathEnd,
    SampleHooks, SampleTarget, ZeroWeight, ZERO_WEIGHT,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub explored: usize,
    pub episodes: u64,
    pub vi_steps: u64,
}

/// Limits on a run. `None` means unlimited.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Budget {
    pub max_episodes: Option<u64>,
    pub timeout: Option<Duration>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BudgetKind {
    Episodes,
    WallClock,
}

/// Final (or partial) bounds of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultBounds {
    pub bounds: IntervalVector,
    pub global_error: f64,
    pub method: String,
    pub epsilon: f64,
    pub seed: Option<u64>,
    pub stats: Stats,
}

#[derive(Debug, Error)]
pub enum FrameworkError {
    #[error("epsilon must be positive and finite, got {0}")]
    BadEpsilon(f64),
    #[error("initial state {0} is not a state of the chain")]
    BadInitial(usize),
    #[error("precision not met: global error {global_error} exceeds {epsilon}")]
    PrecisionNotMet { global_error: f64, epsilon: f64 },
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("{kind:?} budget exhausted with global error {}", partial.global_error)]
    Budget {
        kind: BudgetKind,
        partial: Box<ResultBounds>,
    },
}

/// A BSCC proven to exist, with bounds on its stationary distribution.
#[derive(Clone, Debug)]
pub struct KnownBscc {
    /// Sorted global ids; local state `i` of `dist` is `members[i]`.
    pub members: Vec<StateId>,
    pub dist: BsccBounds,
}

impl KnownBscc {
    pub fn local_of(&self, s: StateId) -> Option<StateId> {
        self.members.binary_search(&s).ok().map(StateId)
    }
}

/// Everything a run knows at a given point.
pub struct FrameworkState {
    pub initial: StateId,
    pub explored: PartialGraphView,
    pub known: Vec<KnownBscc>,
    pub reach: ReachBounds,
    pub rng: Xoshiro256PlusPlus,
    pub episodes: u64,
}

impl FrameworkState {
    pub fn new(num_states: usize, initial: StateId, seed: u64) -> Self {
        let mut explored = PartialGraphView::new(num_states);
        explored.mark(initial);
        FrameworkState {
            initial,
            explored,
            known: Vec::new(),
            reach: ReachBounds::new(num_states),
            rng: rng_from_seed(seed),
            episodes: 0,
        }
    }

    pub fn num_states(&self) -> usize {
        self.reach.num_states()
    }

    /// `L = Σ_R l^{◊R}(ŝ)`.
    pub fn reach_lower_total(&self) -> f64 {
        (0..self.known.len())
            .map(|r| self.reach.lower(self.initial, r))
            .collect::<NeumaierSum>()
            .value()
    }

    /// `(1 − Σ_R l^{◊R}(ŝ)) + Σ_R l^{◊R}(ŝ) · err^R`.
    pub fn global_error(&self) -> f64 {
        let mut acc = NeumaierSum::new();
        acc.add(1.0);
        for (r, b) in self.known.iter().enumerate() {
            let l = self.reach.lower(self.initial, r);
            acc.add(-l);
            acc.add(l * b.dist.err_width());
        }
        acc.value()
    }

    pub fn stats(&self) -> Stats {
        Stats {
            explored: self.explored.len(),
            episodes: self.episodes,
            vi_steps: self.known.iter().map(|b| b.dist.vi_steps() as u64).sum(),
        }
    }

    /// Adds a newly proven BSCC: trivial reach bounds on its members, a fresh
    /// (or singleton `[1, 1]`) distribution bound, and an explicit entry for
    /// it at the initial state. Returns its index.
    pub fn register_bscc<C: ChainAccess + ?Sized>(
        &mut self,
        chain: &C,
        members: Vec<StateId>,
    ) -> Result<usize, ChainError> {
        let restricted = restrict(chain, &members)?;
        for &s in &restricted.to_global {
            self.explored.mark(s);
        }
        let r = self.reach.add_bscc(&restricted.to_global);
        self.known.push(KnownBscc {
            members: restricted.to_global,
            dist: BsccBounds::new(&restricted.chain),
        });
        self.reach.ensure_all_targets(self.initial);
        Ok(r)
    }

    /// The bounds the loop would return right now.
    ///
    /// A state in known BSCC `R` gets
    /// `[l^{◊R}(ŝ)·l^R(s), min(u^{◊R}(ŝ), 1 − L + l^{◊R}(ŝ))·u^R(s)]`; every
    /// other state gets `[0, 1 − L]`, since all of its long-run mass lies in
    /// BSCCs not yet known.
    pub fn assemble(&self) -> IntervalVector {
        let n = self.num_states();
        let total = self.reach_lower_total();
        let rest = (1.0 - total).clamp(0.0, 1.0);
        let mut out = IntervalVector {
            lower: vec![0.0; n],
            upper: vec![rest; n],
        };
        for (r, b) in self.known.iter().enumerate() {
            let (lr, ur) = self.reach.get(self.initial, r);
            let cap = ur.min(1.0 - total + lr).clamp(0.0, 1.0);
            for (local, &g) in b.members.iter().enumerate() {
                let s = StateId(local);
                out.lower[g.index()] = lr * b.dist.lower(s);
                out.upper[g.index()] = (cap * b.dist.upper(s)).max(out.lower[g.index()]);
            }
        }
        out
    }

    fn result(&self, method: &str, epsilon: f64, seed: Option<u64>) -> ResultBounds {
        ResultBounds {
            bounds: self.assemble(),
            global_error: self.global_error(),
            method: method.to_string(),
            epsilon,
            seed,
            stats: self.stats(),
        }
    }
}

/// Assembles the result, refusing to do so before the precision is met.
pub fn assemble_result(
    state: &FrameworkState,
    method: &str,
    epsilon: f64,
    seed: Option<u64>,
) -> Result<ResultBounds, FrameworkError> {
    let global_error = state.global_error();
    if global_error > epsilon {
        return Err(FrameworkError::PrecisionNotMet {
            global_error,
            epsilon,
        });
    }
    Ok(state.result(method, epsilon, seed))
}

/// Pluggable parts of the loop. All of them must only tighten sound bounds,
/// and `update_bsccs` must only return true BSCCs not already known.
pub trait StrategyHooks {
    fn name(&self) -> &str;

    fn seed(&self) -> Option<u64> {
        None
    }

    /// Advances exploration / sampling.
    fn episode(
        &mut self,
        st: &mut FrameworkState,
        chain: &dyn ChainAccess,
    ) -> Result<(), FrameworkError>;

    /// BSCCs discovered since the last call.
    fn update_bsccs(
        &mut self,
        st: &mut FrameworkState,
        chain: &dyn ChainAccess,
    ) -> Result<Vec<Vec<StateId>>, FrameworkError>;

    fn select_distribution_updates(&mut self, st: &FrameworkState, new: &[usize]) -> Vec<usize>;

    fn refine_distribution(
        &mut self,
        st: &mut FrameworkState,
        chain: &dyn ChainAccess,
        r: usize,
    ) -> Result<(), FrameworkError>;

    fn select_reach_updates(&mut self, st: &FrameworkState, new: &[usize]) -> Vec<usize>;

    fn refine_reach(
        &mut self,
        st: &mut FrameworkState,
        chain: &dyn ChainAccess,
        targets: &[usize],
    ) -> Result<(), FrameworkError>;
}

/// Runs the loop until the global error drops to `epsilon` or the budget
/// runs out. The budget error carries the sound partial result.
pub fn run(
    chain: &dyn ChainAccess,
    initial: StateId,
    epsilon: f64,
    hooks: &mut dyn StrategyHooks,
    budget: Budget,
) -> Result<ResultBounds, FrameworkError> {
    run_observed(chain, initial, epsilon, hooks, budget, |_| {})
}

/// [`run`], calling `observe` before every outer iteration and once more
/// at the end.
pub fn run_observed<F>(
    chain: &dyn ChainAccess,
    initial: StateId,
    epsilon: f64,
    hooks: &mut dyn StrategyHooks,
    budget: Budget,
    mut observe: F,
) -> Result<ResultBounds, FrameworkError>
where
    F: FnMut(&FrameworkState),
{
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(FrameworkError::BadEpsilon(epsilon));
    }
    if initial.index() >= chain.num_states() {
        return Err(FrameworkError::BadInitial(initial.index()));
    }
    let seed = hooks.seed();
    let start = Instant::now();
    let mut st = FrameworkState::new(chain.num_states(), initial, seed.unwrap_or(0));
    loop {
        observe(&st);
        if st.global_error() <= epsilon {
            break;
        }
        let exhausted = if budget.max_episodes.is_some_and(|m| st.episodes >= m) {
            Some(BudgetKind::Episodes)
        } else if budget.timeout.is_some_and(|t| start.elapsed() >= t) {
            Some(BudgetKind::WallClock)
        } else {
            None
        };
        if let Some(kind) = exhausted {
            let partial = Box::new(st.result(hooks.name(), epsilon, seed));
            return Err(FrameworkError::Budget { kind, partial });
        }

        hooks.episode(&mut st, chain)?;
        let mut new = Vec::new();
        for members in hooks.update_bsccs(&mut st, chain)? {
            new.push(st.register_bscc(chain, members)?);
        }
        for r in hooks.select_distribution_updates(&st, &new) {
            hooks.refine_distribution(&mut st, chain, r)?;
        }
        let targets = hooks.select_reach_updates(&st, &new);
        hooks.refine_reach(&mut st, chain, &targets)?;
        st.episodes += 1;
    }
    assemble_result(&st, hooks.name(), epsilon, seed)
}
