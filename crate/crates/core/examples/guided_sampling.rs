//! Naive against guided sampling on a model with several BSCCs, watching
//! the global error fall while the bounds stay sound.

use statdist::framework::{
    naive_hooks, run_observed, sample_hooks, BsccSolver, Budget, StrategyHooks,
};
use statdist::io::generators::gen_branch;
use statdist::linalg::stationary_full_exact;
use statdist::StateId;

fn main() {
    let chain = gen_branch(6, 8, 3, 3).unwrap();
    let exact = stationary_full_exact(&chain, StateId(0)).unwrap();
    let strategies: Vec<Box<dyn StrategyHooks>> = vec![
        Box::new(naive_hooks(1)),
        Box::new(sample_hooks(1)),
        Box::new(sample_hooks(1).with_bscc_solver(BsccSolver::Exact)),
    ];
    for mut hooks in strategies {
        let mut trace = Vec::new();
        let mut sound = true;
        let r = run_observed(
            &chain,
            StateId(0),
            1e-4,
            hooks.as_mut(),
            Budget::default(),
            |st| {
                sound &= st.assemble().contains(&exact, 1e-12);
                if st.episodes.is_power_of_two() {
                    trace.push((st.episodes, st.global_error()));
                }
            },
        )
        .unwrap();
        println!(
            "{:<6} episodes {:>6}, explored {:>3}, VI steps {:>6}, always sound: {sound}",
            r.method, r.stats.episodes, r.stats.explored, r.stats.vi_steps
        );
        for (ep, err) in trace {
            println!("    after {ep:>5} episodes: global error {err:.2e}");
        }
    }
}
