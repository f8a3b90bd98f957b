//! Markov chain data model.
//!
//! A [`MarkovChain`] is an immutable list of sparse successor
//! [`Distribution`]s over densely numbered states, plus an optional initial
//! state. Construction validates every distribution; zero-probability entries
//! are dropped so the stored list is exactly the support.

use std::fmt;
use std::sync::OnceLock;

use thiserror::Error;

use crate::sum::NeumaierSum;

/// Tolerance on the successor-probability sum accepted at construction.
pub const INPUT_SUM_TOLERANCE: f64 = 1e-9;

/// Self-loop weight used when a BSCC has to be made aperiodic.
pub const DEFAULT_ALPHA: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("chain has no states")]
    Empty,
    #[error("successor probabilities of state {state} sum to {sum}")]
    BadProbabilitySum { state: usize, sum: f64 },
    #[error("state {state} has a successor {target} outside the chain")]
    DanglingSuccessor { state: usize, target: usize },
    #[error("state {state} has a negative or non-finite transition probability")]
    NegativeProbability { state: usize },
    #[error("state {state} lists successor {target} more than once")]
    DuplicateSuccessor { state: usize, target: usize },
    #[error("initial state {0} is not a state of the chain")]
    BadInitial(usize),
    #[error("set is not closed: transition {from} -> {to} leaves it")]
    NotClosed { from: usize, to: usize },
    #[error("alpha must lie strictly between 0 and 1, got {0}")]
    BadAlpha(f64),
    #[error("vector has dimension {got}, chain has {expected} states")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("reward of state {0} is not finite")]
    NonFiniteReward(usize),
}

/// Dense, zero-based state index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateId(pub usize);

impl StateId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for StateId {
    fn from(i: usize) -> Self {
        StateId(i)
    }
}

/// Sparse successor distribution, sorted by target, strictly positive entries.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Distribution {
    entries: Vec<(StateId, f64)>,
}

impl Distribution {
    /// Builds a distribution for `state`, dropping zero entries.
    ///
    /// Checks signs, duplicates and the sum, but not that targets exist.
    pub fn new(state: usize, entries: Vec<(StateId, f64)>) -> Result<Self, ChainError> {
        let mut entries: Vec<(StateId, f64)> = entries;
        for &(_, p) in &entries {
            if !p.is_finite() || p < 0.0 {
                return Err(ChainError::NegativeProbability { state });
            }
        }
        entries.retain(|&(_, p)| p > 0.0);
        entries.sort_by_key(|&(t, _)| t);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(ChainError::DuplicateSuccessor {
                    state,
                    target: w[0].0.index(),
                });
            }
        }
        let d = Distribution { entries };
        let sum = d.total();
        if (sum - 1.0).abs() > INPUT_SUM_TOLERANCE {
            return Err(ChainError::BadProbabilitySum { state, sum });
        }
        Ok(d)
    }

    /// Point mass on `target`.
    pub fn dirac(target: StateId) -> Self {
        Distribution {
            entries: vec![(target, 1.0)],
        }
    }

    pub fn entries(&self) -> &[(StateId, f64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (StateId, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn prob(&self, target: StateId) -> f64 {
        self.entries
            .binary_search_by_key(&target, |&(t, _)| t)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(_, p)| p)
            .collect::<NeumaierSum>()
            .value()
    }

    /// Compensated `Σ p(t) · f(t)` over the support.
    #[inline]
    pub fn expect<F: FnMut(StateId) -> f64>(&self, mut f: F) -> f64 {
        let mut acc = NeumaierSum::new();
        for &(t, p) in &self.entries {
            acc.add(p * f(t));
        }
        acc.value()
    }
}

/// Read access to a chain whose states may be materialized on demand.
pub trait ChainAccess {
    fn num_states(&self) -> usize;
    fn successors(&self, s: StateId) -> &Distribution;
    fn initial(&self) -> Option<StateId>;
}

impl<C: ChainAccess + ?Sized> ChainAccess for &C {
    fn num_states(&self) -> usize {
        (**self).num_states()
    }
    fn successors(&self, s: StateId) -> &Distribution {
        (**self).successors(s)
    }
    fn initial(&self) -> Option<StateId> {
        (**self).initial()
    }
}

/// Finite discrete-time Markov chain held fully in memory.
#[derive(Clone, Debug)]
pub struct MarkovChain {
    transitions: Vec<Distribution>,
    initial: Option<StateId>,
    reverse: OnceLock<Vec<Vec<StateId>>>,
}

impl PartialEq for MarkovChain {
    fn eq(&self, other: &Self) -> bool {
        self.transitions == other.transitions && self.initial == other.initial
    }
}

impl MarkovChain {
    /// Builds and validates a chain from raw `(target, probability)` lists.
    pub fn new(rows: Vec<Vec<(usize, f64)>>, initial: Option<usize>) -> Result<Self, ChainError> {
        let transitions = rows
            .into_iter()
            .enumerate()
            .map(|(s, row)| {
                Distribution::new(s, row.into_iter().map(|(t, p)| (StateId(t), p)).collect())
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_distributions(transitions, initial.map(StateId))
    }

    pub fn from_distributions(
        transitions: Vec<Distribution>,
        initial: Option<StateId>,
    ) -> Result<Self, ChainError> {
        let chain = MarkovChain {
            transitions,
            initial,
            reverse: OnceLock::new(),
        };
        validate(&chain)?;
        Ok(chain)
    }

    pub fn num_states(&self) -> usize {
        self.transitions.len()
    }

    pub fn initial(&self) -> Option<StateId> {
        self.initial
    }

    pub fn with_initial(&self, initial: StateId) -> Result<Self, ChainError> {
        if initial.index() >= self.num_states() {
            return Err(ChainError::BadInitial(initial.index()));
        }
        Ok(MarkovChain {
            transitions: self.transitions.clone(),
            initial: Some(initial),
            reverse: OnceLock::new(),
        })
    }

    pub fn successors(&self, s: StateId) -> &Distribution {
        &self.transitions[s.index()]
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        (0..self.num_states()).map(StateId)
    }

    pub fn num_transitions(&self) -> usize {
        self.transitions.iter().map(Distribution::len).sum()
    }

    /// Predecessor lists, built on first use and cached.
    pub fn predecessors(&self, s: StateId) -> &[StateId] {
        let rev = self.reverse.get_or_init(|| {
            let mut rev = vec![Vec::new(); self.num_states()];
            for (src, d) in self.transitions.iter().enumerate() {
                for (t, _) in d.iter() {
                    rev[t.index()].push(StateId(src));
                }
            }
            rev
        });
        &rev[s.index()]
    }
}

impl ChainAccess for MarkovChain {
    fn num_states(&self) -> usize {
        self.transitions.len()
    }
    fn successors(&self, s: StateId) -> &Distribution {
        &self.transitions[s.index()]
    }
    fn initial(&self) -> Option<StateId> {
        self.initial
    }
}

/// State reward vector `r : S → ℝ`.
#[derive(Clone, Debug, PartialEq)]
pub struct RewardFunction {
    values: Vec<f64>,
}

impl RewardFunction {
    pub fn new(values: Vec<f64>) -> Result<Self, ChainError> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ChainError::NonFiniteReward(i));
        }
        Ok(RewardFunction { values })
    }

    /// `1` on `s`, `0` elsewhere.
    pub fn indicator(num_states: usize, s: StateId) -> Self {
        let mut values = vec![0.0; num_states];
        values[s.index()] = 1.0;
        RewardFunction { values }
    }

    pub fn constant(num_states: usize, c: f64) -> Self {
        RewardFunction {
            values: vec![c; num_states],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, s: StateId) -> f64 {
        self.values[s.index()]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Checks every distribution invariant and the initial state.
pub fn validate(chain: &MarkovChain) -> Result<(), ChainError> {
    let n = chain.num_states();
    if n == 0 {
        return Err(ChainError::Empty);
    }
    for (s, d) in chain.transitions.iter().enumerate() {
        let mut prev: Option<StateId> = None;
        for (t, p) in d.iter() {
            if !p.is_finite() || p < 0.0 {
                return Err(ChainError::NegativeProbability { state: s });
            }
            if t.index() >= n {
                return Err(ChainError::DanglingSuccessor {
                    state: s,
                    target: t.index(),
                });
            }
            if prev == Some(t) {
                return Err(ChainError::DuplicateSuccessor {
                    state: s,
                    target: t.index(),
                });
            }
            prev = Some(t);
        }
        let sum = d.total();
        if (sum - 1.0).abs() > INPUT_SUM_TOLERANCE {
            return Err(ChainError::BadProbabilitySum { state: s, sum });
        }
    }
    if let Some(i) = chain.initial {
        if i.index() >= n {
            return Err(ChainError::BadInitial(i.index()));
        }
    }
    Ok(())
}

/// `⟨δ(s) | f⟩`, the successor-weighted sum of `f`.
#[inline]
pub fn weighted_sum<C: ChainAccess + ?Sized>(chain: &C, s: StateId, f: &[f64]) -> f64 {
    chain.successors(s).expect(|t| f[t.index()])
}

/// A chain restricted to a closed subset, with the local→global index map.
#[derive(Clone, Debug)]
pub struct Restriction {
    pub chain: MarkovChain,
    /// Sorted global ids; local state `i` is `to_global[i]`.
    pub to_global: Vec<StateId>,
}

impl Restriction {
    pub fn local_of(&self, global: StateId) -> Option<StateId> {
        self.to_global.binary_search(&global).ok().map(StateId)
    }

    pub fn global_of(&self, local: StateId) -> StateId {
        self.to_global[local.index()]
    }
}

/// Restricts `chain` to the closed set `subset`, re-indexed densely in id order.
pub fn restrict<C: ChainAccess + ?Sized>(
    chain: &C,
    subset: &[StateId],
) -> Result<Restriction, ChainError> {
    let mut to_global = subset.to_vec();
    to_global.sort_unstable();
    to_global.dedup();
    if to_global.is_empty() {
        return Err(ChainError::Empty);
    }
    let n = chain.num_states();
    if let Some(bad) = to_global.iter().find(|s| s.index() >= n) {
        return Err(ChainError::DanglingSuccessor {
            state: bad.index(),
            target: bad.index(),
        });
    }
    let mut transitions = Vec::with_capacity(to_global.len());
    for &g in &to_global {
        let mut entries = Vec::with_capacity(chain.successors(g).len());
        for (t, p) in chain.successors(g).iter() {
            match to_global.binary_search(&t) {
                Ok(local) => entries.push((StateId(local), p)),
                Err(_) => {
                    return Err(ChainError::NotClosed {
                        from: g.index(),
                        to: t.index(),
                    })
                }
            }
        }
        transitions.push(Distribution { entries });
    }
    let initial = chain
        .initial()
        .and_then(|i| to_global.binary_search(&i).ok())
        .map(StateId);
    let chain = MarkovChain {
        transitions,
        initial,
        reverse: OnceLock::new(),
    };
    Ok(Restriction { chain, to_global })
}

/// `P_α = αI + (1 − α)P`: adds a self-loop of weight `alpha` everywhere.
pub fn aperiodic_transform(chain: &MarkovChain, alpha: f64) -> Result<MarkovChain, ChainError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ChainError::BadAlpha(alpha));
    }
    let transitions = chain
        .transitions
        .iter()
        .enumerate()
        .map(|(s, d)| {
            let me = StateId(s);
            let mut entries: Vec<(StateId, f64)> =
                d.iter().map(|(t, p)| (t, (1.0 - alpha) * p)).collect();
            match entries.binary_search_by_key(&me, |&(t, _)| t) {
                Ok(i) => entries[i].1 += alpha,
                Err(i) => entries.insert(i, (me, alpha)),
            }
            Distribution { entries }
        })
        .collect();
    Ok(MarkovChain {
        transitions,
        initial: chain.initial,
        reverse: OnceLock::new(),
    })
}
