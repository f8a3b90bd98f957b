//! Exact stationary distribution of a small chain with two BSCCs.

use statdist::framework::{classic_hooks, run, Budget};
use statdist::graph::bsccs;
use statdist::{MarkovChain, StateId};

fn main() {
    // p -> {s, q1} ; s absorbing ; q1 <-> q2
    let chain = MarkovChain::new(
        vec![
            vec![(1, 0.5), (2, 0.5)],
            vec![(1, 1.0)],
            vec![(2, 0.5), (3, 0.5)],
            vec![(2, 0.1), (3, 0.9)],
        ],
        Some(0),
    )
    .unwrap();

    println!("BSCCs: {:?}", bsccs(&chain));
    let result = run(
        &chain,
        StateId(0),
        1e-9,
        &mut classic_hooks(&chain),
        Budget::default(),
    )
    .unwrap();
    for (s, name) in ["p", "s", "q1", "q2"].iter().enumerate() {
        println!(
            "{name:>3}: [{:.6}, {:.6}]",
            result.bounds.lower[s], result.bounds.upper[s]
        );
    }
}
