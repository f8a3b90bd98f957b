//! Seeded model generators.
//!
//! All randomness comes from `Xoshiro256PlusPlus` seeded through SplitMix64
//! (`seed_from_u64`), so every generator is a pure function of its
//! parameters on every platform.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use thiserror::Error;

use crate::chain::MarkovChain;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("bad generator parameter: {0}")]
    BadParameter(String),
}

pub fn rng_from_seed(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// `k` weights drawn from `[0.1, 1)` and normalized.
fn random_weights(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| 0.1 + 0.9 * rng.gen::<f64>()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Adds `p` to the entry for `t`, merging duplicates.
fn push_merged(row: &mut Vec<(usize, f64)>, t: usize, p: f64) {
    match row.iter_mut().find(|(u, _)| *u == t) {
        Some(e) => e.1 += p,
        None => row.push((t, p)),
    }
}

/// The four-state chain on which absolute-change power iteration stops far
/// from the answer. States `0..4` are `s1..s4`, the initial state is `s2`.
pub fn gen_counterexample(e: f64) -> Result<MarkovChain, GenError> {
    if !(e > 0.0 && e < 0.5) {
        return Err(GenError::BadParameter(format!(
            "e must lie in (0, 1/2), got {e}"
        )));
    }
    let rows = vec![
        vec![(0, 0.5), (1, 0.5)],
        vec![(0, 1.0 - e), (2, e)],
        vec![(3, 1.0 - 2.0 * e), (1, 2.0 * e)],
        vec![(3, 0.5), (2, 0.5)],
    ];
    Ok(MarkovChain::new(rows, Some(1)).expect("counterexample rows are stochastic"))
}

/// A transient tree of depth `d` whose leaves enter `k` cyclic BSCCs of
/// size `m`.
///
/// The tree has branching factor `max(2, ⌈k^{1/d}⌉)`, so there are at least
/// `k` leaves. Leaf `j` enters BSCC `j mod k` and, when `k > 1`, also BSCC
/// `(j + 1) mod k`, each at a random member. Inside a BSCC, member `i` moves
/// to `i + 1` (cyclically) or to a random member. States are numbered
/// breadth-first from the root (state 0, the initial state), followed by the
/// BSCC members.
pub fn gen_branch(k: usize, m: usize, d: usize, seed: u64) -> Result<MarkovChain, GenError> {
    if k == 0 || m == 0 || d == 0 {
        return Err(GenError::BadParameter(format!(
            "k, m, d must be positive, got {k}, {m}, {d}"
        )));
    }
    let mut b = 2usize;
    while b.checked_pow(d as u32).is_some_and(|leaves| leaves < k) {
        b += 1;
    }
    let mut levels = vec![1usize];
    for _ in 0..d {
        let next = levels.last().unwrap().checked_mul(b);
        levels.push(next.ok_or_else(|| GenError::BadParameter("tree too large".into()))?);
    }
    let tree: usize = levels.iter().sum();
    let total = k
        .checked_mul(m)
        .and_then(|x| x.checked_add(tree))
        .filter(|&t| t <= u32::MAX as usize)
        .ok_or_else(|| GenError::BadParameter("model too large".into()))?;

    let mut rng = rng_from_seed(seed);
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(total);
    let mut level_start = 0;
    for (depth, &width) in levels.iter().enumerate() {
        let child_start = level_start + width;
        for i in 0..width {
            if depth < d {
                let w = random_weights(&mut rng, b);
                rows.push((0..b).map(|c| (child_start + i * b + c, w[c])).collect());
            } else {
                let first = i % k;
                let targets: Vec<usize> = if k > 1 {
                    vec![first, (first + 1) % k]
                } else {
                    vec![first]
                };
                let w = random_weights(&mut rng, targets.len());
                let mut row = Vec::new();
                for (r, p) in targets.into_iter().zip(w) {
                    let entry = tree + r * m + rng.gen_range(0..m as u64) as usize;
                    push_merged(&mut row, entry, p);
                }
                rows.push(row);
            }
        }
        level_start = child_start;
    }
    for r in 0..k {
        let base = tree + r * m;
        for i in 0..m {
            if m == 1 {
                rows.push(vec![(base, 1.0)]);
                continue;
            }
            let stay = 0.1 + 0.8 * rng.gen::<f64>();
            let jump = base + rng.gen_range(0..m as u64) as usize;
            let mut row = vec![(base + (i + 1) % m, stay)];
            push_merged(&mut row, jump, 1.0 - stay);
            rows.push(row);
        }
    }
    debug_assert_eq!(rows.len(), total);
    Ok(MarkovChain::new(rows, Some(0)).expect("branch rows are stochastic"))
}

/// `n` states, each with `1..=max_out` distinct uniformly chosen successors
/// and random weights. The initial state is 0.
pub fn gen_random(n: usize, max_out: usize, seed: u64) -> Result<MarkovChain, GenError> {
    if n == 0 || max_out == 0 {
        return Err(GenError::BadParameter(format!(
            "n and max_out must be positive, got {n}, {max_out}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let k = (1 + rng.gen_range(0..max_out as u64) as usize).min(n);
        let mut succ: Vec<usize> = Vec::with_capacity(k);
        while succ.len() < k {
            let t = rng.gen_range(0..n as u64) as usize;
            if !succ.contains(&t) {
                succ.push(t);
            }
        }
        let w = random_weights(&mut rng, k);
        rows.push(succ.into_iter().zip(w).collect());
    }
    Ok(MarkovChain::new(rows, Some(0)).expect("random rows are stochastic"))
}

/// State 0 moves to the absorbing state 1 with probability `1 − p` and into
/// a strongly connected component of `size` states (numbered from 2) with
/// probability `p`.
pub fn gen_rare_component(size: usize, p: f64, seed: u64) -> Result<MarkovChain, GenError> {
    if size == 0 || !(p > 0.0 && p < 1.0) {
        return Err(GenError::BadParameter(format!(
            "need size > 0 and 0 < p < 1, got {size}, {p}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut rows = vec![vec![(1, 1.0 - p), (2, p)], vec![(1, 1.0)]];
    for i in 0..size {
        if size == 1 {
            rows.push(vec![(2, 1.0)]);
            break;
        }
        let stay = 0.1 + 0.8 * rng.gen::<f64>();
        let mut row = vec![(2 + (i + 1) % size, stay)];
        push_merged(
            &mut row,
            2 + rng.gen_range(0..size as u64) as usize,
            1.0 - stay,
        );
        rows.push(row);
    }
    Ok(MarkovChain::new(rows, Some(0)).expect("gadget rows are stochastic"))
}
