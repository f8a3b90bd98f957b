//! Partial exploration by sampling paths from the initial state.
//!
//! Guided sampling first picks what to learn about: the unexplored part of
//! the chain, weighted by `exploreBound(ŝ)`, or a known BSCC `R`, weighted by
//! `err^{◊R}(ŝ) + u^{◊R}(ŝ)·err^R`. It then walks from `ŝ`, drawing each
//! successor with probability proportional to `δ(s, s')·f(s')` where `f` is
//! `exploreBound` or `u^{◊R}` respectively. Naive sampling simply follows
//! `δ`. After each path the bounds along it are back-propagated in reverse.

use std::collections::HashSet;

use rand::Rng;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::bscc::{PrecisionGoal, HALVE_SWEEP_BUDGET};
use crate::chain::{restrict, ChainAccess, StateId};
use crate::graph::search_candidates;
use crate::linalg::stationary_exact;
use crate::sum::NeumaierSum;

use super::{FrameworkError, FrameworkState, StrategyHooks};

/// Selection weights at or below this count as zero.
pub const ZERO_WEIGHT: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleTarget {
    Unknown,
    KnownBscc(usize),
}

/// Every selection weight vanished although the precision is not met.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ZeroWeight;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathEnd {
    /// Entered known BSCC `r` (at the given state).
    HitBscc(usize, StateId),
    /// Drew a state already on the path.
    Revisit(StateId),
    /// All successors of the last state have guidance weight zero.
    ZeroWeight,
    LengthCap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    /// Visited states from `ŝ` on, excluding members of known BSCCs and the
    /// revisited state.
    pub path: Vec<StateId>,
    pub end: PathEnd,
}

/// Inverse-CDF draw over compensated prefix sums. `None` if the total
/// weight is not positive.
fn draw(rng: &mut Xoshiro256PlusPlus, weights: &[f64]) -> Option<usize> {
    let mut acc = NeumaierSum::new();
    let prefix: Vec<f64> = weights
        .iter()
        .map(|&w| {
            acc.add(w);
            acc.value()
        })
        .collect();
    let total = *prefix.last()?;
    if !(total > 0.0) {
        return None;
    }
    let x = rng.gen::<f64>() * total;
    let i = prefix.partition_point(|&p| p <= x);
    // Rounding can leave `x` on the last prefix; fall back to the last
    // positive weight.
    Some(if i < weights.len() {
        i
    } else {
        weights.iter().rposition(|&w| w > 0.0)?
    })
}

/// Weighted draw of the next guidance target.
pub fn select_target(st: &mut FrameworkState) -> Result<SampleTarget, ZeroWeight> {
    let s = st.initial;
    let mut weights = Vec::with_capacity(st.known.len() + 1);
    weights.push(st.reach.explore_bound(s));
    for (r, b) in st.known.iter().enumerate() {
        let (l, u) = st.reach.get(s, r);
        weights.push((u - l) + u * b.dist.err_width());
    }
    if weights.iter().all(|&w| w <= ZERO_WEIGHT) {
        return Err(ZeroWeight);
    }
    match draw(&mut st.rng, &weights).ok_or(ZeroWeight)? {
        0 => Ok(SampleTarget::Unknown),
        k => Ok(SampleTarget::KnownBscc(k - 1)),
    }
}

/// Samples one path from `ŝ`, guided towards `target` (or following the
/// transition probabilities when `target` is `None`). Newly visited states
/// are marked explored.
pub fn sample_path(
    st: &mut FrameworkState,
    chain: &dyn ChainAccess,
    target: Option<SampleTarget>,
) -> Episode {
    let cap = 10 * st.explored.len() + 100;
    let mut s = st.initial;
    st.explored.mark(s);
    if let Some(r) = st.reach.bscc_of(s) {
        return Episode {
            path: Vec::new(),
            end: PathEnd::HitBscc(r, s),
        };
    }
    let mut path = vec![s];
    let mut on_path: HashSet<StateId> = HashSet::from([s]);
    let mut weights = Vec::new();
    loop {
        if path.len() >= cap {
            return Episode {
                path,
                end: PathEnd::LengthCap,
            };
        }
        let d = chain.successors(s);
        weights.clear();
        weights.extend(d.iter().map(|(t, p)| {
            p * match target {
                None => 1.0,
                Some(SampleTarget::Unknown) => st.reach.explore_bound(t),
                Some(SampleTarget::KnownBscc(r)) => st.reach.upper(t, r),
            }
        }));
        let Some(i) = draw(&mut st.rng, &weights) else {
            return Episode {
                path,
                end: PathEnd::ZeroWeight,
            };
        };
        let t = d.entries()[i].0;
        st.explored.mark(t);
        if let Some(r) = st.reach.bscc_of(t) {
            return Episode {
                path,
                end: PathEnd::HitBscc(r, t),
            };
        }
        if !on_path.insert(t) {
            return Episode {
                path,
                end: PathEnd::Revisit(t),
            };
        }
        path.push(t);
        s = t;
    }
}

/// How a known BSCC's distribution bounds are refined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BsccSolver {
    /// Mean-payoff value iteration, halving the error per visit.
    #[default]
    ValueIteration,
    /// One dense linear solve per BSCC.
    Exact,
}

/// Guided (or naive) sampling strategy.
pub struct SampleHooks {
    guided: bool,
    solver: BsccSolver,
    seed: u64,
    last: Option<Episode>,
    guidance: Option<usize>,
    /// Exact solve forced by a starved selection.
    fallback: Option<usize>,
    /// Targets whose bounds at `ŝ` moved during the previous reach pass.
    changed: Vec<usize>,
}

pub fn sample_hooks(seed: u64) -> SampleHooks {
    SampleHooks {
        guided: true,
        solver: BsccSolver::ValueIteration,
        seed,
        last: None,
        guidance: None,
        fallback: None,
        changed: Vec::new(),
    }
}

pub fn naive_hooks(seed: u64) -> SampleHooks {
    SampleHooks {
        guided: false,
        ..sample_hooks(seed)
    }
}

impl SampleHooks {
    pub fn with_bscc_solver(mut self, solver: BsccSolver) -> Self {
        self.solver = solver;
        self
    }

    fn hit(&self) -> Option<usize> {
        match self.last.as_ref()?.end {
            PathEnd::HitBscc(r, _) => Some(r),
            _ => None,
        }
    }
}

impl StrategyHooks for SampleHooks {
    fn name(&self) -> &str {
        match (self.guided, self.solver) {
            (true, BsccSolver::ValueIteration) => "sample",
            (true, BsccSolver::Exact) => "solve",
            (false, BsccSolver::ValueIteration) => "naive",
            (false, BsccSolver::Exact) => "naive-solve",
        }
    }

    fn seed(&self) -> Option<u64> {
        Some(self.seed)
    }

    fn episode(
        &mut self,
        st: &mut FrameworkState,
        chain: &dyn ChainAccess,
    ) -> Result<(), FrameworkError> {
        self.guidance = None;
        self.fallback = None;
        self.last = None;
        let target = if self.guided {
            match select_target(st) {
                Ok(t) => Some(t),
                Err(ZeroWeight) => {
                    self.fallback = (0..st.known.len()).max_by(|&a, &b| {
                        st.known[a]
                            .dist
                            .err_width()
                            .total_cmp(&st.known[b].dist.err_width())
                            .then(b.cmp(&a))
                    });
                    return Ok(());
                }
            }
        } else {
            None
        };
        if let Some(SampleTarget::KnownBscc(r)) = target {
            self.guidance = Some(r);
        }
        self.last = Some(sample_path(st, chain, target));
        Ok(())
    }

    fn update_bsccs(
        &mut self,
        st: &mut FrameworkState,
        chain: &dyn ChainAccess,
    ) -> Result<Vec<Vec<StateId>>, FrameworkError> {
        let Some(ep) = &self.last else {
            return Ok(Vec::new());
        };
        let roots = match ep.end {
            PathEnd::Revisit(_) | PathEnd::LengthCap => &ep.path,
            PathEnd::HitBscc(..) | PathEnd::ZeroWeight => return Ok(Vec::new()),
        };
        let reach = &st.reach;
        let found = search_candidates(chain, &st.explored, roots, |s| reach.bscc_of(s).is_some());
        for s in found.frontier {
            st.explored.mark(s);
        }
        Ok(found.bsccs)
    }

    fn select_distribution_updates(&mut self, st: &FrameworkState, new: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = new.to_vec();
        out.extend(self.hit());
        out.extend(self.fallback);
        out.retain(|&r| st.known[r].dist.err_width() > 0.0);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn refine_distribution(
        &mut self,
        st: &mut FrameworkState,
        chain: &dyn ChainAccess,
        r: usize,
    ) -> Result<(), FrameworkError> {
        if self.fallback == Some(r) || self.solver == BsccSolver::Exact {
            let b = &mut st.known[r];
            let restricted = restrict(chain, &b.members)?;
            b.dist.set_exact(&stationary_exact(&restricted.chain)?);
        } else {
            st.known[r]
                .dist
                .refine(PrecisionGoal::HalveError, HALVE_SWEEP_BUDGET);
        }
        Ok(())
    }

    fn select_reach_updates(&mut self, st: &FrameworkState, new: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = new.to_vec();
        out.extend(self.hit());
        out.extend(self.guidance);
        out.extend(self.changed.iter().copied());
        if self.fallback.is_some() {
            out.extend(0..st.known.len());
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    fn refine_reach(
        &mut self,
        st: &mut FrameworkState,
        chain: &dyn ChainAccess,
        targets: &[usize],
    ) -> Result<(), FrameworkError> {
        let s0 = st.initial;
        let before: Vec<(f64, f64)> = (0..st.known.len()).map(|r| st.reach.get(s0, r)).collect();
        let path: &[StateId] = match &self.last {
            Some(ep) => &ep.path,
            None => std::slice::from_ref(&s0),
        };
        for &s in path.iter().rev() {
            st.reach.backprop_state(chain, s, targets);
            st.reach.tighten_by_complement(s);
        }
        self.changed = (0..st.known.len())
            .filter(|&r| st.reach.get(s0, r) != before[r])
            .collect();
        Ok(())
    }
}
