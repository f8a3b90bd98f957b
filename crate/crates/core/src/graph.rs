//! SCC / BSCC decomposition and backward reachability.
//!
//! Tarjan's algorithm runs with an explicit call stack, so deep chains (long
//! transient paths, large cycles) cannot overflow the thread stack.

use std::collections::{HashMap, HashSet};

use crate::chain::{ChainAccess, MarkovChain, StateId};

/// Strongly connected components of a (sub)graph.
///
/// A component is bottom iff no member has a successor outside it in the
/// full chain, so bottom components of a subgraph are BSCCs of the chain.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SccDecomposition {
    /// Members of each component, sorted by id. Components come out in
    /// Tarjan completion order (reverse topological).
    pub components: Vec<Vec<StateId>>,
    pub is_bottom: Vec<bool>,
}

impl SccDecomposition {
    pub fn bottoms(&self) -> impl Iterator<Item = &[StateId]> {
        self.components
            .iter()
            .zip(&self.is_bottom)
            .filter(|(_, &b)| b)
            .map(|(c, _)| c.as_slice())
    }

    pub fn into_bottoms(self) -> Vec<Vec<StateId>> {
        self.components
            .into_iter()
            .zip(self.is_bottom)
            .filter_map(|(c, b)| b.then_some(c))
            .collect()
    }
}

/// Tarjan decomposition of the subgraph induced by `subset` (default: all states).
pub fn sccs<C: ChainAccess + ?Sized>(chain: &C, subset: Option<&[StateId]>) -> SccDecomposition {
    match subset {
        None => {
            let nodes: Vec<StateId> = (0..chain.num_states()).map(StateId).collect();
            let adj = nodes
                .iter()
                .map(|&s| {
                    chain
                        .successors(s)
                        .iter()
                        .map(|(t, _)| t.index() as u32)
                        .collect()
                })
                .collect();
            decompose(chain, &nodes, adj)
        }
        Some(sub) => {
            let mut nodes = sub.to_vec();
            nodes.sort_unstable();
            nodes.dedup();
            let local: HashMap<StateId, u32> = nodes
                .iter()
                .enumerate()
                .map(|(i, &s)| (s, i as u32))
                .collect();
            let adj = nodes
                .iter()
                .map(|&s| {
                    chain
                        .successors(s)
                        .iter()
                        .filter_map(|(t, _)| local.get(&t).copied())
                        .collect()
                })
                .collect();
            decompose(chain, &nodes, adj)
        }
    }
}

const UNVISITED: u32 = u32::MAX;

fn decompose<C: ChainAccess + ?Sized>(
    chain: &C,
    nodes: &[StateId],
    adj: Vec<Vec<u32>>,
) -> SccDecomposition {
    let m = nodes.len();
    let mut index = vec![UNVISITED; m];
    let mut low = vec![0u32; m];
    let mut on_stack = vec![false; m];
    let mut stack: Vec<u32> = Vec::new();
    let mut call: Vec<(u32, usize)> = Vec::new();
    let mut next = 0u32;
    let mut comp_of = vec![UNVISITED; m];
    let mut components: Vec<Vec<StateId>> = Vec::new();

    for root in 0..m as u32 {
        if index[root as usize] != UNVISITED {
            continue;
        }
        index[root as usize] = next;
        low[root as usize] = next;
        next += 1;
        stack.push(root);
        on_stack[root as usize] = true;
        call.push((root, 0));

        while let Some(&(v, pos)) = call.last() {
            let vi = v as usize;
            if pos < adj[vi].len() {
                let w = adj[vi][pos];
                call.last_mut().expect("non-empty").1 += 1;
                let wi = w as usize;
                if index[wi] == UNVISITED {
                    index[wi] = next;
                    low[wi] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[wi] = true;
                    call.push((w, 0));
                } else if on_stack[wi] {
                    low[vi] = low[vi].min(index[wi]);
                }
                continue;
            }
            call.pop();
            if low[vi] == index[vi] {
                let cid = components.len() as u32;
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w as usize] = false;
                    comp_of[w as usize] = cid;
                    comp.push(nodes[w as usize]);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                components.push(comp);
            }
            if let Some(&(u, _)) = call.last() {
                low[u as usize] = low[u as usize].min(low[vi]);
            }
        }
    }

    // Bottom: every successor (in the full chain) lies in the same component.
    let mut is_bottom = vec![true; components.len()];
    for (cid, comp) in components.iter().enumerate() {
        'members: for &s in comp {
            for (t, _) in chain.successors(s).iter() {
                if comp.binary_search(&t).is_err() {
                    is_bottom[cid] = false;
                    break 'members;
                }
            }
        }
    }
    SccDecomposition {
        components,
        is_bottom,
    }
}

/// BSCCs of a fully built chain.
pub fn bsccs(chain: &MarkovChain) -> Vec<Vec<StateId>> {
    sccs(chain, None).into_bottoms()
}

/// Explored-state set `P` of a partially built chain.
#[derive(Clone, Debug, Default)]
pub struct PartialGraphView {
    mask: Vec<bool>,
    order: Vec<StateId>,
}

impl PartialGraphView {
    pub fn new(num_states: usize) -> Self {
        PartialGraphView {
            mask: vec![false; num_states],
            order: Vec::new(),
        }
    }

    pub fn with_explored(num_states: usize, states: &[StateId]) -> Self {
        let mut v = Self::new(num_states);
        for &s in states {
            v.mark(s);
        }
        v
    }

    /// Marks `s` explored; returns whether it was new.
    pub fn mark(&mut self, s: StateId) -> bool {
        if self.mask[s.index()] {
            return false;
        }
        self.mask[s.index()] = true;
        self.order.push(s);
        true
    }

    #[inline]
    pub fn is_explored(&self, s: StateId) -> bool {
        self.mask[s.index()]
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Explored states in exploration order.
    pub fn explored(&self) -> &[StateId] {
        &self.order
    }

    /// True if `s` has a successor that has not been explored yet.
    pub fn is_frontier<C: ChainAccess + ?Sized>(&self, chain: &C, s: StateId) -> bool {
        chain
            .successors(s)
            .iter()
            .any(|(t, _)| !self.is_explored(t))
    }
}

/// SCCs of the explored subgraph that are provably BSCCs of the full chain:
/// bottom within the explored part and free of frontier states.
pub fn candidate_bsccs<C: ChainAccess + ?Sized>(
    chain: &C,
    view: &PartialGraphView,
) -> Vec<Vec<StateId>> {
    sccs(chain, Some(view.explored())).into_bottoms()
}

/// Result of a restricted candidate search.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CandidateSearch {
    /// Proven BSCCs of the full chain.
    pub bsccs: Vec<Vec<StateId>>,
    /// Unexplored successors of explored SCCs whose every exit leads to an
    /// unexplored state. A run inside such an SCC leaves it almost surely,
    /// and only towards these states.
    pub frontier: Vec<StateId>,
}

/// Searches the explored states reachable (through explored states) from
/// `roots`, skipping states for which `skip` holds (typically members of
/// already known BSCCs).
pub fn search_candidates<C, F>(
    chain: &C,
    view: &PartialGraphView,
    roots: &[StateId],
    skip: F,
) -> CandidateSearch
where
    C: ChainAccess + ?Sized,
    F: Fn(StateId) -> bool,
{
    let mut seen: HashSet<StateId> = HashSet::new();
    let mut scope = Vec::new();
    let mut work: Vec<StateId> = roots
        .iter()
        .copied()
        .filter(|&s| view.is_explored(s) && !skip(s))
        .collect();
    while let Some(s) = work.pop() {
        if !seen.insert(s) {
            continue;
        }
        scope.push(s);
        for (t, _) in chain.successors(s).iter() {
            if view.is_explored(t) && !skip(t) && !seen.contains(&t) {
                work.push(t);
            }
        }
    }
    if scope.is_empty() {
        return CandidateSearch::default();
    }
    let d = sccs(chain, Some(&scope));
    let mut out = CandidateSearch::default();
    for (comp, bottom) in d.components.into_iter().zip(d.is_bottom) {
        if bottom {
            out.bsccs.push(comp);
            continue;
        }
        let mut exits = Vec::new();
        let closed_in_view = comp.iter().all(|&s| {
            chain.successors(s).iter().all(|(t, _)| {
                if comp.binary_search(&t).is_ok() {
                    true
                } else if !view.is_explored(t) {
                    exits.push(t);
                    true
                } else {
                    false
                }
            })
        });
        if closed_in_view {
            out.frontier.extend(exits);
        }
    }
    out.frontier.sort_unstable();
    out.frontier.dedup();
    out
}

/// BSCCs found by [`search_candidates`].
pub fn candidate_bsccs_from<C, F>(
    chain: &C,
    view: &PartialGraphView,
    roots: &[StateId],
    skip: F,
) -> Vec<Vec<StateId>>
where
    C: ChainAccess + ?Sized,
    F: Fn(StateId) -> bool,
{
    search_candidates(chain, view, roots, skip).bsccs
}

/// `S₀`: states with no path into `targets`, by backward search from `targets`.
pub fn unreachable_states(chain: &MarkovChain, targets: &[StateId]) -> Vec<StateId> {
    let reach = can_reach_mask(chain, targets);
    chain.states().filter(|s| !reach[s.index()]).collect()
}

/// Mask of states with a path (of length ≥ 0) into `targets`.
pub fn can_reach_mask(chain: &MarkovChain, targets: &[StateId]) -> Vec<bool> {
    let mut reach = vec![false; chain.num_states()];
    let mut queue = std::collections::VecDeque::new();
    for &t in targets {
        if !reach[t.index()] {
            reach[t.index()] = true;
            queue.push_back(t);
        }
    }
    while let Some(s) = queue.pop_front() {
        for &p in chain.predecessors(s) {
            if !reach[p.index()] {
                reach[p.index()] = true;
                queue.push_back(p);
            }
        }
    }
    reach
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::tests::fig1;

    fn ids(v: &[usize]) -> Vec<StateId> {
        v.iter().map(|&i| StateId(i)).collect()
    }

    fn sorted(mut v: Vec<Vec<StateId>>) -> Vec<Vec<StateId>> {
        v.sort();
        v
    }

    #[test]
    fn fig1_components() {
        let d = sccs(&fig1(), None);
        assert_eq!(
            sorted(d.components.clone()),
            vec![ids(&[0]), ids(&[1]), ids(&[2, 3])]
        );
        assert_eq!(sorted(d.into_bottoms()), vec![ids(&[1]), ids(&[2, 3])]);
    }

    #[test]
    fn single_absorbing_state() {
        let c = MarkovChain::new(vec![vec![(0, 1.0)]], None).unwrap();
        assert_eq!(bsccs(&c), vec![ids(&[0])]);
    }

    #[test]
    fn counterexample_is_one_bscc() {
        let c = crate::io::generators::gen_counterexample(1e-8).unwrap();
        assert_eq!(bsccs(&c), vec![ids(&[0, 1, 2, 3])]);
    }

    #[test]
    fn long_cycle_does_not_overflow() {
        let n = 200_000;
        let rows = (0..n).map(|i| vec![((i + 1) % n, 1.0)]).collect();
        let c = MarkovChain::new(rows, None).unwrap();
        let b = bsccs(&c);
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].len(), n);
    }

    #[test]
    fn candidates_on_partial_views() {
        let c = fig1();
        let v = PartialGraphView::with_explored(4, &ids(&[0, 1]));
        assert_eq!(candidate_bsccs(&c, &v), vec![ids(&[1])]);
        let v = PartialGraphView::with_explored(4, &ids(&[2]));
        assert!(candidate_bsccs(&c, &v).is_empty());
        let v = PartialGraphView::with_explored(4, &ids(&[0, 1, 2, 3]));
        assert_eq!(
            sorted(candidate_bsccs(&c, &v)),
            vec![ids(&[1]), ids(&[2, 3])]
        );
    }

    #[test]
    fn restricted_candidate_search_skips_known() {
        let c = fig1();
        let v = PartialGraphView::with_explored(4, &ids(&[0, 1, 2, 3]));
        let found = candidate_bsccs_from(&c, &v, &ids(&[0]), |s| s == StateId(1));
        assert_eq!(found, vec![ids(&[2, 3])]);
    }

    #[test]
    fn frontier_of_open_components() {
        let c = crate::io::generators::gen_counterexample(1e-8).unwrap();
        let v = PartialGraphView::with_explored(4, &ids(&[0, 1]));
        let found = search_candidates(&c, &v, &ids(&[1]), |_| false);
        assert!(found.bsccs.is_empty());
        assert_eq!(found.frontier, ids(&[2]));

        let c = fig1();
        let v = PartialGraphView::with_explored(4, &ids(&[0, 1]));
        let found = search_candidates(&c, &v, &ids(&[0]), |_| false);
        assert_eq!(found.bsccs, vec![ids(&[1])]);
        assert!(found.frontier.is_empty());
    }

    #[test]
    fn unreachable_examples() {
        let c = fig1();
        assert_eq!(unreachable_states(&c, &ids(&[1])), ids(&[2, 3]));
        assert_eq!(unreachable_states(&c, &ids(&[2])), ids(&[1]));
        assert!(unreachable_states(&c, &ids(&[0, 1, 2, 3])).is_empty());
    }
}
