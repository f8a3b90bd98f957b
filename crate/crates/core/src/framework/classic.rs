//! The classical solution inside the loop: find every BSCC, solve each one's
//! balance equations and the reachability probabilities exactly.

use crate::chain::{ChainAccess, MarkovChain, StateId};
use crate::graph::bsccs;
use crate::linalg::{bscc_reach_exact, stationary_exact};

use super::{FrameworkError, FrameworkState, StrategyHooks};

pub struct ClassicHooks<'a> {
    chain: &'a MarkovChain,
    done: bool,
}

pub fn classic_hooks(chain: &MarkovChain) -> ClassicHooks<'_> {
    ClassicHooks { chain, done: false }
}

impl StrategyHooks for ClassicHooks<'_> {
    fn name(&self) -> &str {
        "classic"
    }

    fn episode(
        &mut self,
        st: &mut FrameworkState,
        _: &dyn ChainAccess,
    ) -> Result<(), FrameworkError> {
        for s in self.chain.states() {
            st.explored.mark(s);
        }
        Ok(())
    }

    fn update_bsccs(
        &mut self,
        _: &mut FrameworkState,
        _: &dyn ChainAccess,
    ) -> Result<Vec<Vec<StateId>>, FrameworkError> {
        if std::mem::replace(&mut self.done, true) {
            return Ok(Vec::new());
        }
        Ok(bsccs(self.chain))
    }

    fn select_distribution_updates(&mut self, _: &FrameworkState, new: &[usize]) -> Vec<usize> {
        new.to_vec()
    }

    fn refine_distribution(
        &mut self,
        st: &mut FrameworkState,
        _: &dyn ChainAccess,
        r: usize,
    ) -> Result<(), FrameworkError> {
        let b = &mut st.known[r];
        if b.members.len() > 1 {
            let restricted = crate::chain::restrict(self.chain, &b.members)?;
            let pi = stationary_exact(&restricted.chain)?;
            b.dist.set_exact(&pi);
        }
        Ok(())
    }

    fn select_reach_updates(&mut self, _: &FrameworkState, new: &[usize]) -> Vec<usize> {
        new.to_vec()
    }

    fn refine_reach(
        &mut self,
        st: &mut FrameworkState,
        _: &dyn ChainAccess,
        targets: &[usize],
    ) -> Result<(), FrameworkError> {
        if targets.is_empty() {
            return Ok(());
        }
        let all: Vec<Vec<StateId>> = st.known.iter().map(|b| b.members.clone()).collect();
        let p = bscc_reach_exact(self.chain, &all, st.initial)?;
        for &r in targets {
            st.reach.tighten(st.initial, r, p[r], p[r]);
        }
        st.reach.tighten_explore(st.initial, 0.0);
        Ok(())
    }
}
