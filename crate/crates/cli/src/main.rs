use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use statdist::framework::{
    classic_hooks, naive_hooks, run, sample_hooks, BsccSolver, Budget, FrameworkError,
    StrategyHooks,
};
use statdist::io::generators::{gen_branch, gen_counterexample, gen_random};
use statdist::io::model::{parse_model, serialize_model};
use statdist::io::report::{write_report, ResultReport};
use statdist::iterative::{power_method_naive, DEFAULT_MAX_ITER};
use statdist::linalg::{stationary_full_exact, sup_distance};
use statdist::{MarkovChain, StateId};

const EXIT_BUDGET: u8 = 2;
const EXIT_INPUT: u8 = 1;
const EXIT_UNSOUND: u8 = 3;

/// Certified bounds on the stationary distribution of Markov chains.
#[derive(Parser)]
#[command(name = "statdist", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a model with one method and write a JSON report.
    Solve(SolveArgs),
    /// Run every method on a model and compare against the exact solution.
    Compare(SolveArgs),
    /// Write a generated model in the text format.
    Generate {
        #[command(subcommand)]
        generator: Generator,
        #[arg(long, global = true)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Classic,
    Sample,
    /// Guided sampling with an exact linear solve inside each BSCC.
    Solve,
    Naive,
    Power,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Classic => "classic",
            Method::Sample => "sample",
            Method::Solve => "solve",
            Method::Naive => "naive",
            Method::Power => "power",
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum, default_value = "sample")]
    method: Method,
    #[arg(long, default_value_t = 1e-4)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    max_episodes: Option<u64>,
    #[arg(long, default_value_t = 300)]
    timeout_secs: u64,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-6)]
    power_threshold: f64,
}

#[derive(Subcommand)]
enum Generator {
    /// Four-state chain on which the power method stops early.
    Counterexample {
        #[arg(long)]
        e: f64,
    },
    /// Transient tree feeding k cyclic BSCCs of size m.
    Branch {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Random sparse chain.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        max_out: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

enum Outcome {
    Certified(ResultReport),
    Exhausted(ResultReport),
    Uncertified {
        report: ResultReport,
        converged: bool,
    },
}

impl Outcome {
    fn report(&self) -> &ResultReport {
        match self {
            Outcome::Certified(r)
            | Outcome::Exhausted(r)
            | Outcome::Uncertified { report: r, .. } => r,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            Outcome::Certified(_)
            | Outcome::Uncertified {
                converged: true, ..
            } => 0,
            _ => EXIT_BUDGET,
        }
    }
}

fn load(path: &Path) -> Result<MarkovChain> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_model(&text).with_context(|| format!("invalid model {}", path.display()))
}

fn model_name(path: &Path) -> String {
    path.file_name().map_or_else(
        || path.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    )
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn solve_with(
    chain: &MarkovChain,
    name: &str,
    method: Method,
    args: &SolveArgs,
    max_episodes: Option<u64>,
) -> Result<Outcome> {
    let initial = chain.initial().unwrap_or(StateId(0));
    if method == Method::Power {
        let mut start = vec![0.0; chain.num_states()];
        start[initial.index()] = 1.0;
        let r = power_method_naive(chain, &start, args.power_threshold, DEFAULT_MAX_ITER);
        let report = ResultReport::uncertified(
            name,
            "power",
            args.epsilon,
            args.seed,
            &r.vector,
            r.iterations as u64,
        );
        return Ok(Outcome::Uncertified {
            report,
            converged: r.converged,
        });
    }
    let budget = Budget {
        max_episodes,
        timeout: Some(Duration::from_secs(args.timeout_secs)),
    };
    let mut hooks: Box<dyn StrategyHooks + '_> = match method {
        Method::Classic => Box::new(classic_hooks(chain)),
        Method::Sample => Box::new(sample_hooks(args.seed)),
        Method::Solve => Box::new(sample_hooks(args.seed).with_bscc_solver(BsccSolver::Exact)),
        Method::Naive => Box::new(naive_hooks(args.seed)),
        Method::Power => unreachable!(),
    };
    match run(chain, initial, args.epsilon, hooks.as_mut(), budget) {
        Ok(r) => Ok(Outcome::Certified(ResultReport::from_result(
            name, &r, true,
        ))),
        Err(FrameworkError::Budget { kind, partial }) => {
            eprintln!(
                "{}: {kind:?} budget exhausted, global error {}",
                method.name(),
                partial.global_error
            );
            Ok(Outcome::Exhausted(ResultReport::from_result(
                name, &partial, false,
            )))
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_solve(args: &SolveArgs) -> Result<u8> {
    let chain = load(&args.model)?;
    anyhow::ensure!(
        args.epsilon > 0.0 && args.epsilon.is_finite(),
        "epsilon must be positive"
    );
    let start = Instant::now();
    let outcome = solve_with(
        &chain,
        &model_name(&args.model),
        args.method,
        args,
        args.max_episodes,
    )?;
    eprintln!(
        "{}: {:.3} ms",
        args.method.name(),
        start.elapsed().as_secs_f64() * 1e3
    );
    emit(&write_report(outcome.report()), args.output.as_deref())?;
    Ok(outcome.exit_code())
}

fn cmd_compare(args: &SolveArgs) -> Result<u8> {
    let chain = load(&args.model)?;
    anyhow::ensure!(
        args.epsilon > 0.0 && args.epsilon.is_finite(),
        "epsilon must be positive"
    );
    let name = model_name(&args.model);
    let initial = chain.initial().unwrap_or(StateId(0));
    let oracle = stationary_full_exact(&chain, initial).context("exact solution failed")?;
    let mut reports = Vec::new();
    let mut violated = false;
    println!(
        "{:<8} {:>10} {:>10} {:>12} {:>12} {:>9}",
        "method", "status", "ms", "max-width", "sup-error", "contains"
    );
    for method in [
        Method::Classic,
        Method::Naive,
        Method::Sample,
        Method::Solve,
        Method::Power,
    ] {
        let max_episodes = match method {
            Method::Naive => Some(args.max_episodes.unwrap_or(100_000)),
            _ => args.max_episodes,
        };
        let start = Instant::now();
        let outcome = solve_with(&chain, &name, method, args, max_episodes);
        let ms = start.elapsed().as_secs_f64() * 1e3;
        let outcome = match outcome {
            Ok(o) => o,
            Err(e) => {
                println!(
                    "{:<8} {:>10} {:>10.3} error: {e:#}",
                    method.name(),
                    "failed",
                    ms
                );
                continue;
            }
        };
        let report = outcome.report();
        let iv = report.bounds();
        let mid: Vec<f64> = iv
            .lower
            .iter()
            .zip(&iv.upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect();
        let status = match &outcome {
            Outcome::Certified(_) => "certified",
            Outcome::Exhausted(_) => "budget",
            Outcome::Uncertified {
                converged: true, ..
            } => "converged",
            Outcome::Uncertified { .. } => "no-conv",
        };
        let contains = if matches!(outcome, Outcome::Uncertified { .. }) {
            "-"
        } else if iv.contains(&oracle, 1e-9) {
            "yes"
        } else {
            violated = true;
            "NO"
        };
        println!(
            "{:<8} {:>10} {:>10.3} {:>12.3e} {:>12.3e} {:>9}",
            method.name(),
            status,
            ms,
            iv.max_width(),
            sup_distance(&mid, &oracle),
            contains
        );
        reports.push(report.clone());
    }
    if let Some(out) = &args.output {
        let text = serde_json::to_string_pretty(&reports)? + "\n";
        fs::write(out, text).with_context(|| format!("cannot write {}", out.display()))?;
    }
    if violated {
        eprintln!("a certified method excluded the exact value");
        return Ok(EXIT_UNSOUND);
    }
    Ok(0)
}

fn cmd_generate(generator: &Generator, output: Option<&Path>) -> Result<u8> {
    let chain = match *generator {
        Generator::Counterexample { e } => gen_counterexample(e)?,
        Generator::Branch { k, m, d, seed } => gen_branch(k, m, d, seed)?,
        Generator::Random { n, max_out, seed } => gen_random(n, max_out, seed)?,
    };
    emit(&serialize_model(&chain), output)?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Generate { generator, output } => cmd_generate(generator, output.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
