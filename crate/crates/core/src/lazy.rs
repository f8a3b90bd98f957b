//! Chains whose successor distributions are generated on first access.
//!
//! Partial-exploration strategies only ever ask for the successors of states
//! they actually visit, so a [`LazyChain`] never builds the parts of a model
//! the solver proves irrelevant.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::OnceLock;

use crate::chain::{ChainAccess, Distribution, StateId};

type Generator = Box<dyn Fn(StateId) -> Distribution + Send + Sync>;

pub struct LazyChain {
    slots: Vec<OnceLock<Distribution>>,
    initial: Option<StateId>,
    generate: Generator,
    materialized: AtomicUsize,
}

impl LazyChain {
    /// `generate` must be a pure function of the state and return a valid
    /// distribution over `0..num_states`.
    pub fn new<F>(num_states: usize, initial: Option<StateId>, generate: F) -> Self
    where
        F: Fn(StateId) -> Distribution + Send + Sync + 'static,
    {
        LazyChain {
            slots: (0..num_states).map(|_| OnceLock::new()).collect(),
            initial,
            generate: Box::new(generate),
            materialized: AtomicUsize::new(0),
        }
    }

    /// Number of states whose successors have been generated so far.
    pub fn materialized(&self) -> usize {
        self.materialized.load(Ordering::Relaxed)
    }
}

impl ChainAccess for LazyChain {
    fn num_states(&self) -> usize {
        self.slots.len()
    }

    fn successors(&self, s: StateId) -> &Distribution {
        self.slots[s.index()].get_or_init(|| {
            self.materialized.fetch_add(1, Ordering::Relaxed);
            (self.generate)(s)
        })
    }

    fn initial(&self) -> Option<StateId> {
        self.initial
    }
}

impl std::fmt::Debug for LazyChain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LazyChain")
            .field("num_states", &self.slots.len())
            .field("materialized", &self.materialized())
            .finish()
    }
}
