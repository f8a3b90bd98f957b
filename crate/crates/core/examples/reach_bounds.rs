//! Sound reachability bounds: interval iteration on a full chain, and the
//! state-by-state backward updates the sampling strategies use.

use statdist::graph::bsccs;
use statdist::io::generators::gen_branch;
use statdist::iterative::reach_interval_iteration;
use statdist::linalg::reachability_exact;
use statdist::reach::init_reach_bounds;
use statdist::StateId;

fn main() {
    let chain = gen_branch(3, 4, 2, 5).unwrap();
    let targets = bsccs(&chain);
    let root = StateId(0);

    let iv = reach_interval_iteration(&chain, &targets[0], 1e-10, 100_000).unwrap();
    let exact = reachability_exact(&chain, &targets[0]).unwrap();
    println!(
        "interval iteration: P[reach R0] in [{:.10}, {:.10}], exact {:.10}",
        iv.lower[0], iv.upper[0], exact[0]
    );

    // Root-first sweeps move information up only one level at a time.
    let mut bounds = init_reach_bounds(chain.num_states(), &targets);
    let all: Vec<usize> = (0..targets.len()).collect();
    let order: Vec<StateId> = chain
        .states()
        .filter(|&s| bounds.bscc_of(s).is_none())
        .collect();
    for sweep in 1..=3 {
        bounds.backprop(&chain, &order, &all);
        let row: Vec<(f64, f64)> = all.iter().map(|&r| bounds.get(root, r)).collect();
        println!(
            "sweep {sweep}: {row:.6?}, exploreBound {}",
            bounds.explore_bound(root)
        );
    }
}
