//! A chain of a million states that is never built: the initial state falls
//! into a small absorbing state with high probability, and the huge ring is
//! reached only rarely. Guided sampling certifies the result after
//! generating a handful of states.

use statdist::framework::{run, sample_hooks, Budget};
use statdist::lazy::LazyChain;
use statdist::{Distribution, StateId};

const N: usize = 1_000_000;

fn main() {
    let chain = LazyChain::new(N, Some(StateId(0)), |s| {
        let entries = match s.index() {
            0 => vec![(StateId(1), 1.0 - 1e-7), (StateId(2), 1e-7)],
            1 => vec![(StateId(1), 1.0)],
            i => vec![(StateId(if i + 1 < N { i + 1 } else { 2 }), 1.0)],
        };
        Distribution::new(s.index(), entries).unwrap()
    });
    let r = run(
        &chain,
        StateId(0),
        1e-4,
        &mut sample_hooks(7),
        Budget::default(),
    )
    .unwrap();
    println!(
        "certified with global error {:.2e}; generated {} of {N} states",
        r.global_error,
        chain.materialized()
    );
    println!(
        "state 1: [{:.7}, {:.7}]",
        r.bounds.lower[1], r.bounds.upper[1]
    );
    println!("any ring state: [0, {:.1e}]", r.bounds.upper[N - 1]);
}
