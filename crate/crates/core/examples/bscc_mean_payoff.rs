//! Bounds on the stationary distribution of a single BSCC via mean-payoff
//! value iteration, in the cached and the low-memory variant.

use statdist::bscc::{approximate_bscc, approximate_bscc_low_memory, PrecisionGoal};
use statdist::chain::{aperiodic_transform, RewardFunction};
use statdist::iterative::mean_payoff_bounds;
use statdist::linalg::stationary_exact;
use statdist::{MarkovChain, StateId};

fn main() {
    let bscc = MarkovChain::new(
        vec![
            vec![(1, 1.0)],
            vec![(2, 0.7), (0, 0.3)],
            vec![(0, 0.6), (3, 0.4)],
            vec![(0, 1.0)],
        ],
        None,
    )
    .unwrap();
    let exact = stationary_exact(&bscc).unwrap();
    println!("exact       {exact:.6?}");

    // One state at a time: the Δ bracket of an indicator reward.
    let transformed = aperiodic_transform(&bscc, 0.1).unwrap();
    let reward = RewardFunction::indicator(4, StateId(2));
    let b = mean_payoff_bounds(&transformed, &reward, |_, lo, hi| hi - lo < 1e-8, None);
    println!(
        "state 2     [{:.8}, {:.8}] after {} steps",
        b.lo, b.hi, b.steps
    );

    let cached = approximate_bscc(&bscc, PrecisionGoal::Absolute(1e-6), 100_000).unwrap();
    let low = approximate_bscc_low_memory(&bscc, 1e-6, 100_000).unwrap();
    for (name, r) in [("cached", &cached), ("low-memory", &low)] {
        println!(
            "{name:<11} lower {:.6?}\n{:<11} upper {:.6?} ({} VI steps)",
            r.bounds().lower,
            "",
            r.bounds().upper,
            r.vi_steps()
        );
    }
}
