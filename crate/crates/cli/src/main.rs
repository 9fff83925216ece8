use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use posted_makespan::adversaries::{
    flatten_prefix, randomized_oblivious_instance, run_det_lower_bound, scale_instance, AdversaryConfig,
};
use posted_makespan::agents::TiePolicy;
use posted_makespan::consistency::{check_flexfit_consistency_with, CheckOptions};
use posted_makespan::experiments::{table1_csv, table1_experiment, Table1Config};
use posted_makespan::harness::run;
use posted_makespan::io::{certified_to_json, read_instance, write_instance, CertifiedInstance};
use posted_makespan::model::Instance;
use posted_makespan::opt::opt_bruteforce_with_budget;
use posted_makespan::strategy::{read_price_file, scheme_registry, strategy_registry, StrategyParams};
use posted_makespan::trace::Trace;
use posted_makespan::Scalar;

#[derive(Parser, Debug)]
#[command(name = "pmk", version, about = "Online makespan scheduling with posted prices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scheduler or pricing scheme on an instance
    Run(RunArgs),
    /// Exact offline optimum of an instance
    Opt {
        instance: PathBuf,
        /// Largest m^n the search will attempt
        #[arg(long, default_value_t = posted_makespan::opt::DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Lower-bound and reduction constructions
    #[command(subcommand)]
    Adversary(AdversaryCommand),
    /// Check a trace against the Flex-Fit permissible actions
    Verify {
        trace: PathBuf,
        instance: PathBuf,
        /// The run started from this estimate with threshold 2 + eps/2
        #[arg(long)]
        known_lambda: Option<Scalar>,
        /// Print only the summary line
        #[arg(long)]
        quiet: bool,
    },
    /// Experiments
    #[command(subcommand)]
    Bench(BenchCommand),
    /// List registered schedulers and schemes
    Schemes,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Strategy spec, e.g. greedy, flexfit, dynrel, static:<pricefile>
    #[arg(long)]
    scheme: String,
    #[arg(long)]
    instance: PathBuf,
    /// lowest, highest, prefer1, random:<seed> or scripted:<file>
    #[arg(long, default_value = "lowest")]
    ties: String,
    /// Write the per-step trace CSV here
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the posted prices (step, m1..mM) here
    #[arg(long)]
    prices_log: Option<PathBuf>,
    /// Also check the trace against Flex-Fit (related machines only)
    #[arg(long)]
    check: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum AdversaryCommand {
    /// Adaptive adversary against a deterministic scheme on unrelated machines
    Det {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 10)]
        phases: usize,
        #[arg(long, default_value = "1/10")]
        epsilon: Scalar,
        #[arg(long, default_value = "zero")]
        scheme: String,
        #[arg(long, default_value_t = 200_000)]
        max_jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Oblivious adversary against a randomized scheme, by Monte-Carlo
    Rand {
        #[arg(long)]
        m: usize,
        /// Number of jobs to generate
        #[arg(long)]
        jobs: usize,
        #[arg(long, default_value = "1/10")]
        epsilon: Scalar,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Scheme spec; sample s is built with seed + s
        #[arg(long, default_value = "randstatic:1")]
        scheme: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Prepend the prefix that flattens loads plus static prices
    Flatten {
        /// JSON array of static prices
        #[arg(long)]
        prices: PathBuf,
        /// Instance supplying the machine model and the suffix
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scale processing times so prices up to a bound cannot change greedy
    Scale {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        price_bound: Scalar,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum BenchCommand {
    /// Observed competitive ratios per model and rule
    Table1 {
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Checks passed, or a violation was found.
enum Outcome {
    Clean,
    Violation,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Violation) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::Run(args) => cmd_run(args),
        Command::Opt { instance, budget } => cmd_opt(&instance, budget),
        Command::Adversary(a) => cmd_adversary(a),
        Command::Verify { trace, instance, known_lambda, quiet } => cmd_verify(&trace, &instance, known_lambda, quiet),
        Command::Bench(BenchCommand::Table1 { trials, seed, out }) => {
            let cfg = Table1Config { trials, seed, ..Table1Config::default() };
            let csv = table1_csv(&table1_experiment(&cfg)?);
            emit(out.as_ref(), &csv)?;
            Ok(Outcome::Clean)
        }
        Command::Schemes => {
            for (name, help) in strategy_registry().describe() {
                println!("{name:<16}{help}");
            }
            Ok(Outcome::Clean)
        }
    }
}

fn load(path: &PathBuf) -> Result<Instance> {
    read_instance(path).with_context(|| format!("reading instance {}", path.display()))
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn tie_policy(spec: &str) -> Result<TiePolicy> {
    if let Some(path) = spec.strip_prefix("scripted:") {
        let text = fs::read_to_string(path).with_context(|| format!("reading tie script {path}"))?;
        return Ok(TiePolicy::parse_script(&text)?);
    }
    Ok(TiePolicy::from_name(spec)?)
}

fn one_based(v: &[usize]) -> String {
    v.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(" ")
}

fn cmd_run(args: RunArgs) -> Result<Outcome> {
    let inst = load(&args.instance)?;
    let mut ties = tie_policy(&args.ties)?;
    let params = StrategyParams { m: inst.m(), epsilon: inst.epsilon.clone(), seed: args.seed };
    let mut strategy = strategy_registry().build(&args.scheme, &params)?;
    let id = args.instance.display().to_string();
    let (mut report, trace) = run(strategy.as_mut(), &inst, &id, &mut ties)?;
    report.scheme = args.scheme.clone();
    report.ties = args.ties.clone();
    if let Some(path) = &args.trace {
        trace.write_path(path).with_context(|| format!("writing trace {}", path.display()))?;
        report.trace_path = Some(path.clone());
    }
    if let Some(path) = &args.prices_log {
        let file = fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
        trace.write_price_log(file, inst.m())?;
    }
    println!("{report}");
    println!("assignment: {}", one_based(&trace.choices()));
    if args.check {
        let opts = match args.scheme.strip_prefix("dynrel-known:") {
            Some(l) => CheckOptions { epsilon: &inst.epsilon / &Scalar::from_int(2), initial_lambda: Some(l.parse()?) },
            None => CheckOptions::for_instance(&inst),
        };
        let verdicts = check_flexfit_consistency_with(&trace, &inst, &opts)?;
        println!("consistency: {}", verdicts.summary());
        if !verdicts.is_ok() {
            return Ok(Outcome::Violation);
        }
    }
    Ok(Outcome::Clean)
}

fn cmd_opt(path: &PathBuf, budget: u64) -> Result<Outcome> {
    let inst = load(path)?;
    let opt = opt_bruteforce_with_budget(&inst, budget)
        .context("use a smaller instance or a larger --budget; the lower bound is reported by `run`")?;
    println!("opt: {}", opt.makespan);
    println!("witness: {}", one_based(opt.witness.as_deref().unwrap_or_default()));
    Ok(Outcome::Clean)
}

fn write_certified(out: Option<&PathBuf>, c: &CertifiedInstance) -> Result<()> {
    if let Some(p) = out {
        fs::write(p, certified_to_json(c)? + "\n").with_context(|| format!("writing {}", p.display()))?;
        println!("written: {}", p.display());
    }
    Ok(())
}

fn cmd_adversary(cmd: AdversaryCommand) -> Result<Outcome> {
    match cmd {
        AdversaryCommand::Det { m, phases, epsilon, scheme, max_jobs, out } => {
            let cfg = AdversaryConfig { max_jobs, ..AdversaryConfig::new(m, epsilon.clone(), phases) };
            let params = StrategyParams { m, epsilon, seed: 0 };
            let scheme = scheme_registry().build(&scheme, &params)?;
            let r = run_det_lower_bound(scheme, &cfg)?;
            println!("jobs: {}", r.cases.len());
            println!("spread_jobs: {}", r.spread_jobs());
            println!("scheme_makespan: {}", r.scheme_makespan);
            println!("witness_makespan: {}", r.witness_makespan);
            println!("claimed_opt_bound: {}", r.certified.claimed_opt_bound);
            println!("ratio: {}", r.ratio);
            write_certified(out.as_ref(), &r.certified)?;
            Ok(Outcome::Clean)
        }
        AdversaryCommand::Rand { m, jobs, epsilon, samples, seed, scheme, out } => {
            let cfg = AdversaryConfig { samples, seed, ..AdversaryConfig::new(m, epsilon.clone(), 1) };
            let registry = scheme_registry();
            // Validate the spec once so a typo is a usage error, not a panic in a worker.
            registry.build(&scheme, &StrategyParams { m, epsilon: epsilon.clone(), seed })?;
            let factory = |s: u64| {
                registry
                    .build(&scheme, &StrategyParams { m, epsilon: epsilon.clone(), seed: s })
                    .expect("spec validated above")
            };
            let r = randomized_oblivious_instance(factory, &cfg, jobs)?;
            println!("jobs: {}", r.cases.len());
            println!("spread_jobs: {}", r.spread_jobs());
            println!("mean_scheme_makespan: {}", r.mean_scheme_makespan);
            println!("witness_makespan: {}", r.certified.witness_makespan()?);
            println!("claimed_opt_bound: {}", r.certified.claimed_opt_bound);
            write_certified(out.as_ref(), &r.certified)?;
            Ok(Outcome::Clean)
        }
        AdversaryCommand::Flatten { prices, instance, out } => {
            let pi = read_price_file(&prices.to_string_lossy())?;
            let sigma = load(&instance)?;
            let mut jobs = flatten_prefix(&pi, &sigma.model)?;
            let prefix = jobs.len();
            jobs.extend(sigma.jobs.iter().cloned());
            let whole = Instance::new(sigma.model.clone(), jobs, sigma.epsilon.clone())?;
            let top = Scalar::max_of(pi.0.iter()).unwrap_or_default();
            println!("pi_max: {top}");
            println!("prefix_jobs: {prefix}");
            match &out {
                Some(p) => {
                    write_instance(p, &whole)?;
                    println!("written: {}", p.display());
                }
                None => println!("{}", posted_makespan::io::instance_to_json(&whole)),
            }
            Ok(Outcome::Clean)
        }
        AdversaryCommand::Scale { instance, price_bound, out } => {
            let inst = load(&instance)?;
            let scaled = scale_instance(&inst, &price_bound)?;
            let delta = scaled.delta.as_ref().map_or("none".into(), Scalar::to_string);
            println!("delta: {delta}");
            println!("factor: {}", scaled.factor);
            println!("tie_steps: {}", one_based(&scaled.tie_steps));
            match &out {
                Some(p) => {
                    write_instance(p, &scaled.instance)?;
                    println!("written: {}", p.display());
                }
                None => println!("{}", posted_makespan::io::instance_to_json(&scaled.instance)),
            }
            Ok(Outcome::Clean)
        }
    }
}

fn cmd_verify(trace: &PathBuf, instance: &PathBuf, known: Option<Scalar>, quiet: bool) -> Result<Outcome> {
    let inst = load(instance)?;
    let trace = Trace::read_path(trace).with_context(|| format!("reading trace {}", trace.display()))?;
    let opts = match known {
        Some(l) => {
            if !l.is_positive() || l.is_infinite() {
                bail!("--known-lambda must be positive and finite");
            }
            CheckOptions { epsilon: &inst.epsilon / &Scalar::from_int(2), initial_lambda: Some(l) }
        }
        None => CheckOptions::for_instance(&inst),
    };
    let report = check_flexfit_consistency_with(&trace, &inst, &opts)?;
    if !quiet {
        for s in &report.steps {
            println!("step {}: {}", s.step, s.verdict);
        }
    }
    println!("{}", report.summary());
    Ok(if report.is_ok() { Outcome::Clean } else { Outcome::Violation })
}
