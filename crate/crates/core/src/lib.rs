//! Certified bounds on the stationary distribution of finite discrete-time
//! Markov chains.
//!
//! The stationary distribution from an initial state `ŝ` decomposes over the
//! bottom strongly connected components (BSCCs) of the chain as
//! `π = Σ_R P_ŝ[◊R] · π_R`. Every solver in this crate bounds both factors
//! from below and above and multiplies the bounds together:
//!
//! * [`framework::classic_hooks`] finds all BSCCs and solves everything
//!   exactly with dense LU.
//! * [`framework::sample_hooks`] explores the chain by guided sampling and
//!   refines only what matters for the requested precision, so large parts
//!   of a model may never be built (see [`lazy::LazyChain`]). Inside a BSCC
//!   it runs mean-payoff value iteration by default, or one exact solve per
//!   BSCC with [`framework::BsccSolver::Exact`].
//! * [`framework::naive_hooks`] samples by following the transition
//!   probabilities.
//!
//! [`iterative::power_method_naive`] is included as the unsound baseline it
//! is: it stops on a small change between iterates, which says nothing about
//! the distance to the answer.
//!
//! ```
//! use statdist::chain::{MarkovChain, StateId};
//! use statdist::framework::{run, sample_hooks, Budget};
//!
//! let chain = MarkovChain::new(
//!     vec![
//!         vec![(1, 0.5), (2, 0.5)],
//!         vec![(1, 1.0)],
//!         vec![(2, 0.5), (3, 0.5)],
//!         vec![(3, 0.9), (2, 0.1)],
//!     ],
//!     Some(0),
//! )
//! .unwrap();
//! let result = run(&chain, StateId(0), 1e-4, &mut sample_hooks(1), Budget::default()).unwrap();
//! assert!(result.bounds.lower[1] <= 0.5 && 0.5 <= result.bounds.upper[1]);
//! assert!(result.bounds.max_width() <= 1e-4);
//! ```

pub mod bscc;
pub mod chain;
pub mod framework;
pub mod graph;
pub mod io;
pub mod iterative;
pub mod lazy;
pub mod linalg;
pub mod reach;
pub mod sum;

pub use chain::{ChainAccess, Distribution, MarkovChain, StateId};
pub use framework::{run, Budget, ResultBounds};
pub use iterative::IntervalVector;
