//! Sound bounds on the probability of reaching each known BSCC.
//!
//! Lower and upper bounds are pushed backwards through `v ↦ ⟨δ(s)|v⟩` one
//! state at a time, in whatever order the caller chooses, and only ever
//! tightened. Alongside them every state carries `exploreBound`, an upper
//! bound on the probability of reaching a state that is unexplored or lies
//! in a BSCC nobody has identified yet.
//!
//! Storage is sparse: a state only holds entries for the targets that were
//! ever propagated through it. A missing entry means `[0, 1]`.

use crate::chain::{ChainAccess, StateId};
use crate::sum::NeumaierSum;

const NO_BSCC: u32 = u32::MAX;

/// Bounds on `P_s[◊R]` for one target `R` at one state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReachEntry {
    pub target: u32,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug)]
pub struct ReachBounds {
    bscc_of: Vec<u32>,
    /// Per state, sorted by target.
    entries: Vec<Vec<ReachEntry>>,
    explore: Vec<f64>,
    num_targets: usize,
}

impl ReachBounds {
    /// No BSCCs known: every reach bound `[0, 1]`, `exploreBound ≡ 1`.
    pub fn new(num_states: usize) -> Self {
        ReachBounds {
            bscc_of: vec![NO_BSCC; num_states],
            entries: vec![Vec::new(); num_states],
            explore: vec![1.0; num_states],
            num_targets: 0,
        }
    }

    pub fn num_states(&self) -> usize {
        self.bscc_of.len()
    }

    pub fn num_targets(&self) -> usize {
        self.num_targets
    }

    /// Registers a newly discovered BSCC and returns its target index.
    ///
    /// Members get `[1, 1]` for it, `[0, 0]` for every other target and
    /// `exploreBound = 0`.
    pub fn add_bscc(&mut self, members: &[StateId]) -> usize {
        let r = self.num_targets;
        self.num_targets += 1;
        for &s in members {
            let i = s.index();
            debug_assert_eq!(self.bscc_of[i], NO_BSCC, "BSCCs must be disjoint");
            self.bscc_of[i] = r as u32;
            self.entries[i] = Vec::new();
            self.explore[i] = 0.0;
        }
        r
    }

    pub fn bscc_of(&self, s: StateId) -> Option<usize> {
        match self.bscc_of[s.index()] {
            NO_BSCC => None,
            r => Some(r as usize),
        }
    }

    /// `(l^{◊R}(s), u^{◊R}(s))`.
    #[inline]
    pub fn get(&self, s: StateId, r: usize) -> (f64, f64) {
        let i = s.index();
        match self.bscc_of[i] {
            NO_BSCC => match self.find(i, r) {
                Ok(k) => (self.entries[i][k].lower, self.entries[i][k].upper),
                Err(_) => (0.0, 1.0),
            },
            own if own as usize == r => (1.0, 1.0),
            _ => (0.0, 0.0),
        }
    }

    pub fn lower(&self, s: StateId, r: usize) -> f64 {
        self.get(s, r).0
    }

    pub fn upper(&self, s: StateId, r: usize) -> f64 {
        self.get(s, r).1
    }

    /// `err^{◊R}(s) = u^{◊R}(s) − l^{◊R}(s)`.
    pub fn err(&self, s: StateId, r: usize) -> f64 {
        let (l, u) = self.get(s, r);
        u - l
    }

    /// `err^{◊?}(s)`.
    #[inline]
    pub fn explore_bound(&self, s: StateId) -> f64 {
        self.explore[s.index()]
    }

    /// Targets with a stored entry at `s` (members of known BSCCs have none).
    pub fn entries(&self, s: StateId) -> &[ReachEntry] {
        &self.entries[s.index()]
    }

    /// Compensated `Σ_R l^{◊R}(s)`.
    pub fn sum_lower(&self, s: StateId) -> f64 {
        if self.bscc_of[s.index()] != NO_BSCC {
            return 1.0;
        }
        self.entries[s.index()]
            .iter()
            .map(|e| e.lower)
            .collect::<NeumaierSum>()
            .value()
    }

    /// Intersects the bounds for `(s, R)` with `[lower, upper]`.
    pub fn tighten(&mut self, s: StateId, r: usize, lower: f64, upper: f64) {
        let i = s.index();
        if self.bscc_of[i] != NO_BSCC {
            return;
        }
        let e = self.entry_mut(i, r);
        e.lower = e.lower.max(lower.clamp(0.0, 1.0));
        e.upper = e.upper.min(upper.clamp(0.0, 1.0));
    }

    /// Makes sure `s` carries an explicit entry for every known target.
    pub fn ensure_all_targets(&mut self, s: StateId) {
        if self.bscc_of[s.index()] != NO_BSCC {
            return;
        }
        for r in 0..self.num_targets {
            self.entry_mut(s.index(), r);
        }
    }

    /// Intersects `exploreBound(s)` with `value`.
    pub fn tighten_explore(&mut self, s: StateId, value: f64) {
        let e = &mut self.explore[s.index()];
        *e = e.min(value.max(0.0));
    }

    /// One backward update at every state of `states`, in order, for every
    /// target in `targets`, plus `exploreBound`. Members of known BSCCs are
    /// skipped.
    pub fn backprop<C: ChainAccess + ?Sized>(
        &mut self,
        chain: &C,
        states: &[StateId],
        targets: &[usize],
    ) {
        for &s in states {
            self.backprop_state(chain, s, targets);
        }
    }

    pub fn backprop_state<C: ChainAccess + ?Sized>(
        &mut self,
        chain: &C,
        s: StateId,
        targets: &[usize],
    ) {
        let i = s.index();
        if self.bscc_of[i] != NO_BSCC {
            return;
        }
        let d = chain.successors(s);
        for &r in targets {
            let lo = d.expect(|t| self.get(t, r).0);
            let hi = d.expect(|t| self.get(t, r).1);
            self.tighten(s, r, lo, hi);
        }
        let ex = d.expect(|t| self.explore[t.index()]);
        self.tighten_explore(s, ex);
    }

    /// One pass of the sum-to-one rules at `s` over the stored entries:
    /// `u^{◊R} ← min(u, 1 − Σ_{R'≠R} l^{◊R'})` and
    /// `l^{◊R} ← max(l, 1 − Σ_{R'≠R} u^{◊R'} − exploreBound)`.
    pub fn tighten_by_complement(&mut self, s: StateId) {
        let i = s.index();
        if self.bscc_of[i] != NO_BSCC || self.entries[i].is_empty() {
            return;
        }
        let absent = (self.num_targets - self.entries[i].len()) as f64;
        let sum_l = self.entries[i]
            .iter()
            .map(|e| e.lower)
            .collect::<NeumaierSum>()
            .value();
        let mut su = self.entries[i]
            .iter()
            .map(|e| e.upper)
            .collect::<NeumaierSum>();
        su.add(absent);
        let sum_u = su.value();
        let explore = self.explore[i];
        // Neither rule may cross the entry's own opposite bound: rounding can
        // push Σ l slightly above 1, and repeated passes would amplify it.
        for e in self.entries[i].iter_mut() {
            let (l, u) = (e.lower, e.upper);
            e.upper = u.min((1.0 - (sum_l - l)).max(l)).clamp(0.0, 1.0);
            e.lower = l
                .max((1.0 - (sum_u - u) - explore).min(e.upper))
                .clamp(0.0, 1.0);
        }
    }

    fn find(&self, i: usize, r: usize) -> Result<usize, usize> {
        self.entries[i].binary_search_by_key(&(r as u32), |e| e.target)
    }

    fn entry_mut(&mut self, i: usize, r: usize) -> &mut ReachEntry {
        let k = match self.find(i, r) {
            Ok(k) => k,
            Err(k) => {
                self.entries[i].insert(
                    k,
                    ReachEntry {
                        target: r as u32,
                        lower: 0.0,
                        upper: 1.0,
                    },
                );
                k
            }
        };
        &mut self.entries[i][k]
    }
}

/// Bounds with the given BSCCs already registered, in order.
pub fn init_reach_bounds(num_states: usize, known: &[Vec<StateId>]) -> ReachBounds {
    let mut b = ReachBounds::new(num_states);
    for r in known {
        b.add_bscc(r);
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::tests::fig1;
    use crate::chain::MarkovChain;

    fn fig1_bounds() -> ReachBounds {
        init_reach_bounds(4, &[vec![StateId(1)], vec![StateId(2), StateId(3)]])
    }

    #[test]
    fn init_values() {
        let b = fig1_bounds();
        assert_eq!(b.get(StateId(0), 0), (0.0, 1.0));
        assert_eq!(b.get(StateId(1), 0), (1.0, 1.0));
        assert_eq!(b.get(StateId(1), 1), (0.0, 0.0));
        assert_eq!(b.explore_bound(StateId(0)), 1.0);
        assert_eq!(b.explore_bound(StateId(3)), 0.0);

        let b = ReachBounds::new(3);
        assert_eq!(b.num_targets(), 0);
        assert!((0..3).all(|i| b.explore_bound(StateId(i)) == 1.0));
    }

    #[test]
    fn one_bscc_everything_settled() {
        let b = init_reach_bounds(3, &[vec![StateId(0), StateId(1), StateId(2)]]);
        assert!((0..3).all(|i| b.get(StateId(i), 0) == (1.0, 1.0)));
    }

    #[test]
    fn fig1_single_pass() {
        let mut b = fig1_bounds();
        b.backprop(&fig1(), &[StateId(0)], &[0, 1]);
        assert_eq!(b.get(StateId(0), 0), (0.5, 0.5));
        assert_eq!(b.get(StateId(0), 1), (0.5, 0.5));
        assert_eq!(b.explore_bound(StateId(0)), 0.0);
        b.tighten_by_complement(StateId(0));
        assert_eq!(b.get(StateId(0), 0), (0.5, 0.5));
    }

    #[test]
    fn reverse_pass_settles_a_line() {
        let c = MarkovChain::new(
            vec![
                vec![(1, 1.0)],
                vec![(2, 1.0)],
                vec![(3, 1.0)],
                vec![(3, 1.0)],
            ],
            Some(0),
        )
        .unwrap();
        let mut b = init_reach_bounds(4, &[vec![StateId(3)]]);
        b.backprop(&c, &[StateId(2), StateId(1), StateId(0)], &[0]);
        assert_eq!(b.get(StateId(0), 0), (1.0, 1.0));
    }

    #[test]
    fn unexplored_successor_keeps_upper_mass() {
        let c = MarkovChain::new(
            vec![vec![(1, 0.3), (2, 0.7)], vec![(1, 1.0)], vec![(2, 1.0)]],
            Some(0),
        )
        .unwrap();
        let mut b = init_reach_bounds(3, &[vec![StateId(2)]]);
        b.backprop(&c, &[StateId(0)], &[0]);
        let (l, u) = b.get(StateId(0), 0);
        assert_eq!((l, u), (0.7, 1.0));
        assert!((b.explore_bound(StateId(0)) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn complement_examples() {
        let mut b = init_reach_bounds(3, &[vec![StateId(1)], vec![StateId(2)]]);
        let s = StateId(0);
        b.tighten(s, 0, 0.9, 1.0);
        b.tighten(s, 1, 0.0, 1.0);
        b.tighten_explore(s, 0.0);
        b.tighten_by_complement(s);
        assert!(b.upper(s, 1) <= 0.1 + 1e-15);

        let mut b = init_reach_bounds(3, &[vec![StateId(1)], vec![StateId(2)]]);
        b.tighten(s, 0, 0.2, 0.4);
        b.tighten(s, 1, 0.1, 0.3);
        b.tighten_by_complement(s);
        assert_eq!(b.get(s, 0), (0.2, 0.4));
    }

    #[test]
    fn round_robin_converges_to_exact() {
        let c = fig1();
        let mut b = fig1_bounds();
        for _ in 0..3 {
            b.backprop(&c, &[StateId(0)], &[0, 1]);
        }
        let exact = crate::linalg::reachability_exact(&c, &[StateId(1)]).unwrap();
        assert!((b.lower(StateId(0), 0) - exact[0]).abs() < 1e-12);
    }
}
