//! Acceptance checks. Prints one line per criterion and exits non-zero if
//! any of them fails.

mod common;

use std::alloc::{GlobalAlloc, Layout, System};
use std::cell::Cell;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use statdist::bscc::{approximate_bscc, approximate_bscc_low_memory, PrecisionGoal};
use statdist::chain::{aperiodic_transform, MarkovChain, RewardFunction, StateId};
use statdist::framework::{
    classic_hooks, naive_hooks, run, run_observed, sample_hooks, BsccSolver, Budget,
    FrameworkError, ResultBounds,
};
use statdist::graph::bsccs;
use statdist::io::generators::{
    gen_branch, gen_counterexample, gen_random, gen_rare_component, rng_from_seed,
};
use statdist::io::report::{write_report, ResultReport};
use statdist::iterative::{mean_payoff_bounds, power_method_naive};
use statdist::linalg::{reachability_exact, stationary_exact, stationary_full_exact, sup_distance};

use common::{golden, initial, largest_bscc, random_chain, strongly_connected, SLACK};

struct Counting;

thread_local! {
    static TRACKING: Cell<bool> = const { Cell::new(false) };
    static LIVE: Cell<isize> = const { Cell::new(0) };
    static PEAK: Cell<isize> = const { Cell::new(0) };
}

fn note(delta: isize) {
    let _ = TRACKING.try_with(|t| {
        if t.get() {
            LIVE.with(|l| {
                let now = l.get() + delta;
                l.set(now);
                PEAK.with(|p| p.set(p.get().max(now)));
            });
        }
    });
}

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        note(layout.size() as isize);
        System.alloc(layout)
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        note(-(layout.size() as isize));
        System.dealloc(ptr, layout)
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        note(new_size as isize - layout.size() as isize);
        System.realloc(ptr, layout, new_size)
    }
}

#[global_allocator]
static GLOBAL: Counting = Counting;

/// Peak bytes allocated (and not yet freed) on this thread while running `f`.
fn peak_allocation<T>(f: impl FnOnce() -> T) -> (T, usize) {
    LIVE.with(|l| l.set(0));
    PEAK.with(|p| p.set(0));
    TRACKING.with(|t| t.set(true));
    let out = f();
    TRACKING.with(|t| t.set(false));
    (out, PEAK.with(|p| p.get()).max(0) as usize)
}

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || {
        format!("took {:.2?}, limit {:.0?}", elapsed, limit)
    })
}

fn certified(
    chain: &MarkovChain,
    hooks: &mut dyn statdist::framework::StrategyHooks,
    eps: f64,
    budget: Budget,
) -> Result<ResultBounds, String> {
    match run(chain, initial(chain), eps, hooks, budget) {
        Ok(r) => Ok(r),
        Err(FrameworkError::Budget { kind, partial }) => Err(format!(
            "{} ran out of budget ({kind:?}) at global error {:e}",
            partial.method, partial.global_error
        )),
        Err(e) => Err(e.to_string()),
    }
}

fn check_result(r: &ResultBounds, oracle: &[f64], eps: f64) -> Result<(), String> {
    ensure(r.bounds.max_width() <= eps, || {
        format!("{}: width {:e} > {eps:e}", r.method, r.bounds.max_width())
    })?;
    ensure(r.bounds.contains(oracle, SLACK), || {
        format!(
            "{}: oracle outside by {:e}",
            r.method,
            r.bounds.excess(oracle)
        )
    })
}

fn fig1_golden() -> Check {
    let t = Instant::now();
    let chain = common::fig1();
    let classic = certified(&chain, &mut classic_hooks(&chain), 1e-9, Budget::default())?;
    let err = sup_distance(&classic.bounds.lower, &golden::FIG1)
        .max(sup_distance(&classic.bounds.upper, &golden::FIG1));
    ensure(err <= 1e-9, || format!("classic off by {err:e}"))?;
    let sample = certified(&chain, &mut sample_hooks(1), 1e-4, Budget::default())?;
    check_result(&sample, &golden::FIG1, 1e-4)?;
    within(t.elapsed(), Duration::from_secs(1))?;
    Ok(format!(
        "classic error {err:.1e}, sample width {:.2e}, {:.0?}",
        sample.bounds.max_width(),
        t.elapsed()
    ))
}

fn power_counterexample() -> Check {
    let t = Instant::now();
    let mut worst_power = f64::INFINITY;
    let mut sample_error = 0.0f64;
    for (e, oracle) in [
        (1e-7, golden::CEX_1E7),
        (1e-8, golden::CEX_1E8),
        (1e-9, golden::CEX_1E9),
    ] {
        let chain = gen_counterexample(e).unwrap();
        let exact = stationary_full_exact(&chain, initial(&chain)).map_err(|e| e.to_string())?;
        ensure(sup_distance(&exact, &oracle) < 1e-12, || {
            format!("e = {e:e}: linear solver disagrees with the oracle")
        })?;
        let mut starts = vec![vec![0.25; 4]];
        starts.extend((0..4).map(|i| {
            let mut v = vec![0.0; 4];
            v[i] = 1.0;
            v
        }));
        for start in starts {
            let p = power_method_naive(&chain, &start, 1e-6, 10_000_000);
            let err = sup_distance(&p.vector, &oracle);
            ensure(p.converged && err >= 0.1, || {
                format!(
                    "e = {e:e}, start {start:?}: converged {} with error {err:.3}",
                    p.converged
                )
            })?;
            worst_power = worst_power.min(err);
        }
        let classic = certified(&chain, &mut classic_hooks(&chain), 1e-4, Budget::default())?;
        check_result(&classic, &oracle, 1e-4)?;
        let mut solve = sample_hooks(3).with_bscc_solver(BsccSolver::Exact);
        let sampled = certified(&chain, &mut solve, 1e-4, Budget::default())?;
        check_result(&sampled, &oracle, 1e-4)?;

        // Value iteration inside the BSCC mixes in about 1/e sweeps here, so
        // it is only checked to stay sound on a short budget.
        let short = Budget {
            max_episodes: Some(2_000),
            timeout: None,
        };
        let partial = match run(&chain, initial(&chain), 1e-4, &mut sample_hooks(3), short) {
            Ok(r) => r,
            Err(FrameworkError::Budget { partial, .. }) => *partial,
            Err(e) => return Err(e.to_string()),
        };
        ensure(partial.bounds.contains(&oracle, SLACK), || {
            format!("e = {e:e}: partial value-iteration bounds exclude the oracle")
        })?;
        sample_error = sample_error.max(partial.global_error);
    }
    within(t.elapsed(), Duration::from_secs(5))?;
    Ok(format!(
        "power error >= {worst_power:.3}; classic and sample (exact BSCC solve) certified; \
         value-iteration sample sound at global error {sample_error:.2}; {:.2?}",
        t.elapsed()
    ))
}

fn oracle_equivalence() -> Check {
    let t = Instant::now();
    let eps = 1e-4;
    let mut rng = rng_from_seed(0xacce);
    let mut episodes = 0u64;
    for i in 0..100u64 {
        let n = rng.gen_range(2..=200u64) as usize;
        let max_out = rng.gen_range(1..=4u64) as usize;
        let chain = gen_random(n, max_out, 1000 + i).unwrap();
        let oracle = stationary_full_exact(&chain, initial(&chain)).map_err(|e| e.to_string())?;
        let classic = certified(&chain, &mut classic_hooks(&chain), eps, Budget::default())?;
        let err = sup_distance(&classic.bounds.lower, &oracle)
            .max(sup_distance(&classic.bounds.upper, &oracle));
        ensure(err <= 1e-8, || format!("chain {i}: classic off by {err:e}"))?;
        let budget = Budget {
            max_episodes: Some(1_000_000),
            timeout: None,
        };
        for r in [
            certified(&chain, &mut sample_hooks(i), eps, budget)?,
            certified(&chain, &mut naive_hooks(i), eps, budget)?,
        ] {
            check_result(&r, &oracle, eps).map_err(|m| format!("chain {i} (n = {n}): {m}"))?;
            episodes = episodes.max(r.stats.episodes);
        }
    }
    within(t.elapsed(), Duration::from_secs(120))?;
    Ok(format!(
        "100 chains, most episodes {episodes}, {:.1?}",
        t.elapsed()
    ))
}

fn anytime_soundness() -> Check {
    let t = Instant::now();
    let mut steps = 0usize;
    for i in 0..20u64 {
        let chain = random_chain(2000 + i, 100, 4);
        let oracle = stationary_full_exact(&chain, initial(&chain)).map_err(|e| e.to_string())?;
        let mut violation = None;
        let r = run_observed(
            &chain,
            initial(&chain),
            1e-4,
            &mut sample_hooks(i),
            Budget::default(),
            |st| {
                steps += 1;
                let b = st.assemble();
                if violation.is_none() && !b.contains(&oracle, SLACK) {
                    violation = Some((st.stats().episodes, b.excess(&oracle)));
                }
            },
        )
        .map_err(|e| e.to_string())?;
        if let Some((ep, by)) = violation {
            return Err(format!(
                "chain {i}: oracle outside by {by:e} at episode {ep}"
            ));
        }
        check_result(&r, &oracle, 1e-4)?;
    }
    within(t.elapsed(), Duration::from_secs(60))?;
    Ok(format!(
        "{steps} intermediate states checked, {:.2?}",
        t.elapsed()
    ))
}

fn mean_payoff_bracket() -> Check {
    let t = Instant::now();
    let mut rng = rng_from_seed(0xb7ac);
    let mut checked = 0usize;
    for i in 0..50u64 {
        let chain = aperiodic_transform(&strongly_connected(3000 + i, 100), 0.1).unwrap();
        let n = chain.num_states();
        let pi = stationary_exact(&chain).map_err(|e| e.to_string())?;
        let s = StateId(rng.gen_range(0..n as u64) as usize);
        let reward = RewardFunction::indicator(n, s);
        let truth = pi[s.index()];
        let mut bad = None;
        mean_payoff_bounds(
            &chain,
            &reward,
            |k, lo, hi| {
                checked += 1;
                if bad.is_none() && !(lo - SLACK <= truth && truth <= hi + SLACK) {
                    bad = Some((k, lo, hi));
                }
                hi - lo <= 1e-10 || k >= 100_000
            },
            None,
        );
        if let Some((k, lo, hi)) = bad {
            return Err(format!(
                "chain {i}: step {k} bracket [{lo:e}, {hi:e}] misses {truth:e}"
            ));
        }
    }
    within(t.elapsed(), Duration::from_secs(60))?;
    Ok(format!(
        "{checked} iterations bracketed, {:.2?}",
        t.elapsed()
    ))
}

fn sum_to_one() -> Check {
    let mut chains = vec![
        common::fig1(),
        gen_counterexample(1e-8).unwrap(),
        gen_branch(3, 5, 3, 7).unwrap(),
        gen_random(50, 3, 11).unwrap(),
    ];
    chains.extend((0..20).map(|i| random_chain(4000 + i, 100, 4)));
    let mut results = 0;
    for (i, chain) in chains.iter().enumerate() {
        let mut total = vec![0.0; chain.num_states()];
        for r in bsccs(chain) {
            let p = reachability_exact(chain, &r).map_err(|e| e.to_string())?;
            for (t, x) in total.iter_mut().zip(p) {
                *t += x;
            }
        }
        let off = total.iter().map(|t| (t - 1.0).abs()).fold(0.0, f64::max);
        ensure(off <= 1e-8, || {
            format!("chain {i}: reach sum off by {off:e}")
        })?;

        for r in [
            certified(chain, &mut classic_hooks(chain), 1e-4, Budget::default())?,
            certified(
                chain,
                &mut sample_hooks(i as u64).with_bscc_solver(BsccSolver::Exact),
                1e-4,
                Budget::default(),
            )?,
        ] {
            let lo: f64 = r.bounds.lower.iter().sum();
            let hi: f64 = r.bounds.upper.iter().sum();
            ensure(lo <= 1.0 + SLACK && hi >= 1.0 - SLACK, || {
                format!("chain {i}, {}: Σl = {lo}, Σu = {hi}", r.method)
            })?;
            results += 1;
        }
    }
    Ok(format!(
        "{} chains, {results} certified results",
        chains.len()
    ))
}

fn partial_exploration() -> Check {
    let chain = gen_rare_component(10_000, 1e-6, 5).unwrap();
    let t = Instant::now();
    let r = certified(&chain, &mut sample_hooks(5), 1e-4, Budget::default())?;
    let elapsed = t.elapsed();
    ensure(r.bounds.max_width() <= 1e-4, || {
        format!("width {:e}", r.bounds.max_width())
    })?;
    // The component holds mass p in total; states 0 and 1 are known exactly.
    let p = chain.successors(StateId(0)).prob(StateId(2));
    let absorbed = chain.successors(StateId(0)).prob(StateId(1));
    let b = &r.bounds;
    ensure(
        b.lower[0] <= 0.0 && b.lower[1] <= absorbed && absorbed <= b.upper[1],
        || {
            format!(
                "states 0/1 bounds {:?} / {:?}",
                (b.lower[0], b.upper[0]),
                (b.lower[1], b.upper[1])
            )
        },
    )?;
    let lo: f64 = b.lower[2..].iter().sum();
    let hi: f64 = b.upper[2..].iter().sum();
    ensure(lo <= p && p <= hi, || {
        format!("component mass {p:e} outside [{lo:e}, {hi:e}]")
    })?;
    let fraction = r.stats.explored as f64 / chain.num_states() as f64;
    ensure(fraction < 0.05, || {
        format!("explored {} of {}", r.stats.explored, chain.num_states())
    })?;
    within(elapsed, Duration::from_secs(30))?;
    Ok(format!(
        "explored {} of {} states, {:.2?}",
        r.stats.explored,
        chain.num_states(),
        elapsed
    ))
}

fn aperiodicity_invariance() -> Check {
    let mut worst = 0.0f64;
    for i in 0..20u64 {
        let chain = strongly_connected(5000 + i, 60);
        let pi = stationary_exact(&chain).map_err(|e| e.to_string())?;
        for alpha in [0.1, 0.5, 0.9] {
            let t = aperiodic_transform(&chain, alpha).unwrap();
            let d = sup_distance(&pi, &stationary_exact(&t).map_err(|e| e.to_string())?);
            ensure(d <= 1e-9, || {
                format!("chain {i}, α = {alpha}: off by {d:e}")
            })?;
            worst = worst.max(d);
        }
    }
    Ok(format!("20 chains × 3 α, worst difference {worst:.1e}"))
}

fn low_memory() -> Check {
    let eps = 1e-6;
    let mut worst_ratio = 0.0f64;
    for i in 0..10u64 {
        let chain = largest_bscc(&gen_random(400, 4, 6000 + i).unwrap());
        let chain = if chain.num_states() < 20 {
            strongly_connected(6000 + i, 400)
        } else {
            chain
        };
        let n = chain.num_states();
        let pi = stationary_exact(&chain).map_err(|e| e.to_string())?;
        let full = approximate_bscc(&chain, PrecisionGoal::Absolute(eps), 1_000_000)
            .map_err(|_| format!("bscc {i}: cached variant out of budget"))?;
        let (low, peak) = peak_allocation(|| approximate_bscc_low_memory(&chain, eps, 1_000_000));
        let low = low.map_err(|_| format!("bscc {i}: low-memory variant out of budget"))?;
        for (name, b) in [("cached", full.bounds()), ("low-memory", low.bounds())] {
            ensure(b.contains(&pi, SLACK) && b.max_width() <= eps, || {
                format!("bscc {i} (n = {n}): {name} bounds wrong")
            })?;
        }
        let limit = 1024 * n + 16384;
        ensure(peak <= limit, || {
            format!("bscc {i} (n = {n}): peak {peak} bytes > {limit}")
        })?;
        worst_ratio = worst_ratio.max(peak as f64 / n as f64);
    }
    Ok(format!(
        "10 BSCCs, peak auxiliary ≤ {worst_ratio:.0} bytes per state"
    ))
}

fn determinism() -> Check {
    let models = [
        ("fig1", common::fig1()),
        ("branch", gen_branch(3, 5, 3, 7).unwrap()),
        ("random", gen_random(50, 3, 11).unwrap()),
    ];
    let mut reports = 0;
    for (name, chain) in &models {
        for method in ["classic", "sample", "naive"] {
            let report = || -> Result<String, String> {
                let mut hooks: Box<dyn statdist::framework::StrategyHooks> = match method {
                    "classic" => Box::new(classic_hooks(chain)),
                    "sample" => Box::new(sample_hooks(42)),
                    _ => Box::new(naive_hooks(42)),
                };
                let r = certified(chain, hooks.as_mut(), 1e-4, Budget::default())?;
                Ok(write_report(&ResultReport::from_result(name, &r, true)))
            };
            let (a, b) = (report()?, report()?);
            ensure(a == b, || format!("{name}/{method}: reports differ"))?;
            reports += 1;
        }
    }
    Ok(format!("{reports} report pairs byte-identical"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("fig1 golden values", fig1_golden),
        ("power method counterexample", power_counterexample),
        ("oracle equivalence on random chains", oracle_equivalence),
        ("anytime soundness", anytime_soundness),
        ("mean-payoff bracket", mean_payoff_bracket),
        ("sum-to-one", sum_to_one),
        ("partial exploration", partial_exploration),
        ("aperiodicity invariance", aperiodicity_invariance),
        ("low-memory BSCC approximation", low_memory),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
