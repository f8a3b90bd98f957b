//! The power method with an absolute-change stopping rule stops early on a
//! slowly mixing chain; the exact solution and a certified run do not.

use statdist::framework::{run, sample_hooks, BsccSolver, Budget};
use statdist::io::generators::gen_counterexample;
use statdist::iterative::power_method_naive;
use statdist::linalg::{stationary_full_exact, sup_distance};
use statdist::StateId;

fn main() {
    for e in [1e-7, 1e-8, 1e-9] {
        let chain = gen_counterexample(e).unwrap();
        let exact = stationary_full_exact(&chain, StateId(1)).unwrap();
        let power = power_method_naive(&chain, &[0.25; 4], 1e-6, 10_000_000);
        println!("e = {e:e}");
        println!("  exact  {exact:.4?}");
        println!(
            "  power  {:.4?} after {} iterations, error {:.3}",
            power.vector,
            power.iterations,
            sup_distance(&power.vector, &exact)
        );

        let mut hooks = sample_hooks(1).with_bscc_solver(BsccSolver::Exact);
        let r = run(&chain, StateId(1), 1e-4, &mut hooks, Budget::default()).unwrap();
        println!(
            "  sample contains exact: {} (global error {:.1e})",
            r.bounds.contains(&exact, 1e-12),
            r.global_error
        );
    }
}
