//! `revnet`: command-line harness for the network annealing engines.
//!
//! Subcommands: `check` (parse + validate), `solve` (run one engine,
//! emitting a trace CSV and a JSON summary), `zeno` (watchdog-iteration
//! sweep), `compare` (hitting-time statistics across engines and seeds),
//! and `compile` (DIMACS CNF to network file).
//!
//! Exit codes: 0 solved/valid, 1 usage or I/O error, 2 unsatisfiability
//! evidence, 3 budget exhausted.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use revnet_core::classical::{anneal, AnnealVerdict, ClassicalConfig};
use revnet_core::config::{derive_seed, EngineConfig};
use revnet_core::netlang::{compile_cnf, parse_dimacs, parse_network, serialize_network};
use revnet_core::network::{Assignment, Network};
use revnet_core::oneway::{anneal_one_way, zeno_iterate};
use revnet_core::trace::{RelaxationTrace, RunVerdict};
use revnet_core::twoway::relax_two_way;

mod summary;

use summary::RunSummary;

#[derive(Parser)]
#[command(name = "revnet", version, about = "Annealing over reversible Boolean networks")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GlobalOpts {
    /// RNG seed; identical seeds replay identical runs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Step budget for the relaxation engines.
    #[arg(long, global = true, default_value_t = 10_000)]
    max_steps: usize,
    /// Model time per step.
    #[arg(long, global = true, default_value_t = 0.05)]
    dt: f64,
    /// Gate relaxation rate.
    #[arg(long, global = true, default_value_t = 1.0)]
    sigma: f64,
    /// Output directory for traces and summaries.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Disable the heat bath (one-way engine only).
    #[arg(long, global = true, default_value_t = false)]
    no_bath: bool,
    /// Suppress console output; files are still written.
    #[arg(long, global = true, default_value_t = false)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a network file.
    Check { net_path: PathBuf },
    /// Run one engine on a network, writing trace.csv and summary.json.
    Solve {
        net_path: PathBuf,
        #[arg(long, value_enum)]
        engine: Engine,
        /// Starting assignment for the one-way engine (bitstring in node
        /// order); defaults to a seeded link-consistent sample.
        #[arg(long)]
        initial: Option<String>,
    },
    /// Sweep the watchdog iteration count and record the deviation decay.
    Zeno {
        /// Initial in-subspace angle.
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
        /// Total rotation angle.
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
        phi: f64,
        /// Iteration counts, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
    },
    /// Hitting-time statistics over a seed ensemble, per engine.
    Compare {
        net_path: PathBuf,
        #[arg(long, value_enum, value_delimiter = ',', required = true)]
        engines: Vec<Engine>,
        /// Number of seeded runs per engine.
        #[arg(long, default_value_t = 20)]
        seeds: usize,
    },
    /// Compile a DIMACS CNF file into a network file.
    Compile {
        cnf_path: PathBuf,
        out_net_path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Engine {
    Classical,
    Oneway,
    Twoway,
}

impl Engine {
    fn id(self) -> &'static str {
        match self {
            Engine::Classical => "classical",
            Engine::Oneway => "oneway",
            Engine::Twoway => "twoway",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode, String> {
    let opts = &cli.global;
    match &cli.command {
        Command::Check { net_path } => cmd_check(opts, net_path),
        Command::Solve { net_path, engine, initial } => {
            cmd_solve(opts, net_path, *engine, initial.as_deref())
        }
        Command::Zeno { theta, phi, n } => cmd_zeno(opts, *theta, *phi, n),
        Command::Compare { net_path, engines, seeds } => {
            cmd_compare(opts, net_path, engines, *seeds)
        }
        Command::Compile { cnf_path, out_net_path } => cmd_compile(opts, cnf_path, out_net_path),
    }
}

fn read_to_string(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn load_network(path: &Path) -> Result<Network, String> {
    let text = read_to_string(path)?;
    parse_network(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_check(opts: &GlobalOpts, net_path: &Path) -> Result<ExitCode, String> {
    let text = read_to_string(net_path)?;
    match parse_network(&text) {
        Ok(net) => {
            if !opts.quiet {
                println!(
                    "valid: {} nodes, {} links, {} gates, {} constraints",
                    net.num_nodes(),
                    net.links.len(),
                    net.gates.len(),
                    net.constraints.len()
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            eprintln!("{}: {e}", net_path.display());
            Ok(ExitCode::from(1))
        }
    }
}

fn engine_config(opts: &GlobalOpts) -> EngineConfig {
    EngineConfig {
        sigma: opts.sigma,
        dt: opts.dt,
        max_steps: opts.max_steps,
        seed: opts.seed,
        no_bath: opts.no_bath,
        ..EngineConfig::default()
    }
}

fn classical_config(opts: &GlobalOpts) -> ClassicalConfig {
    // The step budget is split evenly across restarts.
    let restarts = 8;
    ClassicalConfig {
        max_iters: (opts.max_steps / restarts).max(1),
        restarts,
        seed: opts.seed,
        ..ClassicalConfig::default()
    }
}

struct RunResult {
    verdict: RunVerdict,
    assignment: Option<Assignment>,
    iterations: usize,
    final_energy: f64,
    confidence: Option<f64>,
    trace: RelaxationTrace,
}

fn run_engine(
    net: &Network,
    engine: Engine,
    opts: &GlobalOpts,
    seed: u64,
    initial: Option<&Assignment>,
) -> Result<RunResult, String> {
    match engine {
        Engine::Classical => {
            let cfg = ClassicalConfig { seed, ..classical_config(opts) };
            let (outcome, trace) = anneal(net, &cfg);
            let (verdict, confidence) = match outcome.verdict {
                AnnealVerdict::Solved => (RunVerdict::Solved, None),
                AnnealVerdict::UnsatWithConfidence => (
                    RunVerdict::UnsatEvidence { energy_floor: f64::NAN },
                    Some(outcome.confidence),
                ),
                AnnealVerdict::BudgetExhausted => (RunVerdict::BudgetExhausted, None),
            };
            let final_energy = trace.final_energy().unwrap_or(f64::NAN);
            Ok(RunResult {
                verdict,
                assignment: outcome.assignment,
                iterations: outcome.iterations,
                final_energy,
                confidence,
                trace,
            })
        }
        Engine::Oneway => {
            let cfg = EngineConfig { seed, ..engine_config(opts) };
            let (trace, outcome) = anneal_one_way(net, &cfg, initial);
            Ok(RunResult {
                verdict: outcome.verdict,
                assignment: outcome.assignment,
                iterations: outcome.steps,
                final_energy: outcome.final_energy,
                confidence: None,
                trace,
            })
        }
        Engine::Twoway => {
            let cfg = EngineConfig { seed, ..engine_config(opts) };
            let (trace, outcome) = relax_two_way(net, &cfg).map_err(|e| e.to_string())?;
            Ok(RunResult {
                verdict: outcome.verdict,
                assignment: outcome.assignment,
                iterations: outcome.steps,
                final_energy: outcome.final_energy,
                confidence: None,
                trace,
            })
        }
    }
}

fn write_trace_csv(path: &Path, trace: &RelaxationTrace) -> Result<(), String> {
    let mut out = String::from("step,time,total_energy,gate_energy,clamped,overlap_solution\n");
    for row in &trace.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.step,
            row.time,
            row.total_energy,
            row.gate_energy,
            row.clamped as u8,
            row.overlap_solution,
        ));
    }
    fs::write(path, out).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn cmd_solve(
    opts: &GlobalOpts,
    net_path: &Path,
    engine: Engine,
    initial: Option<&str>,
) -> Result<ExitCode, String> {
    let net = load_network(net_path)?;
    let initial = match initial {
        Some(text) => {
            let a = Assignment::from_bitstring(text)
                .ok_or_else(|| format!("--initial '{text}' is not a bitstring"))?;
            if a.bits.len() != net.num_nodes() {
                return Err(format!(
                    "--initial has {} bits, network has {} nodes",
                    a.bits.len(),
                    net.num_nodes()
                ));
            }
            Some(a)
        }
        None => None,
    };
    let result = run_engine(&net, engine, opts, opts.seed, initial.as_ref())?;

    fs::create_dir_all(&opts.out)
        .map_err(|e| format!("cannot create {}: {e}", opts.out.display()))?;
    let trace_path = opts.out.join("trace.csv");
    write_trace_csv(&trace_path, &result.trace)?;

    let summary = RunSummary::new(
        engine.id(),
        opts.seed,
        &result.verdict,
        result.iterations,
        result.final_energy,
        result.assignment.as_ref().map(|a| a.to_bitstring()),
        result.confidence,
        "trace.csv",
    );
    let summary_path = opts.out.join("summary.json");
    fs::write(&summary_path, summary.to_json()?)
        .map_err(|e| format!("cannot write {}: {e}", summary_path.display()))?;

    if !opts.quiet {
        match &result.verdict {
            RunVerdict::Solved => println!(
                "solved: {} after {} steps",
                result.assignment.as_ref().map(|a| a.to_bitstring()).unwrap_or_default(),
                result.iterations
            ),
            RunVerdict::UnsatEvidence { energy_floor } => {
                if energy_floor.is_nan() {
                    println!(
                        "unsatisfiable evidence: no solution in {} iterations (confidence {:.4})",
                        result.iterations,
                        result.confidence.unwrap_or(0.0)
                    );
                } else {
                    println!("unsatisfiable evidence: symmetric-subspace energy floor = {energy_floor}");
                }
            }
            RunVerdict::BudgetExhausted => println!(
                "budget exhausted after {} steps, final energy {}",
                result.iterations, result.final_energy
            ),
        }
    }

    Ok(match result.verdict {
        RunVerdict::Solved => ExitCode::SUCCESS,
        RunVerdict::UnsatEvidence { .. } => ExitCode::from(2),
        RunVerdict::BudgetExhausted => ExitCode::from(3),
    })
}

fn cmd_zeno(opts: &GlobalOpts, theta: f64, phi: f64, counts: &[usize]) -> Result<ExitCode, String> {
    if counts.is_empty() {
        return Err("need at least one iteration count".to_string());
    }
    let net = revnet_core::network::single_link_net(None, None);
    let mut csv = String::from("n,deviation,n_times_angle\n");
    for &n in counts {
        let outcome = zeno_iterate(&net, 0, 1, theta, phi, n)
            .map_err(|e| format!("watchdog iteration failed: {e}"))?;
        csv.push_str(&format!(
            "{},{},{}\n",
            n,
            outcome.deviation,
            n as f64 * outcome.in_subspace_angle
        ));
        if !opts.quiet {
            println!(
                "n={n}: deviation={}, n*angle={}",
                outcome.deviation,
                n as f64 * outcome.in_subspace_angle
            );
        }
    }
    fs::create_dir_all(&opts.out)
        .map_err(|e| format!("cannot create {}: {e}", opts.out.display()))?;
    let path = opts.out.join("zeno.csv");
    fs::write(&path, csv).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_compare(
    opts: &GlobalOpts,
    net_path: &Path,
    engines: &[Engine],
    seeds: usize,
) -> Result<ExitCode, String> {
    if engines.is_empty() || seeds == 0 {
        return Err("need at least one engine and one seed".to_string());
    }
    let net = load_network(net_path)?;

    // Fan runs out across workers, then let a single aggregator merge the
    // slots; each (engine, run) pair is computed exactly once, so the
    // aggregate is order independent.
    let jobs: Vec<(usize, usize)> = (0..engines.len())
        .flat_map(|ei| (0..seeds).map(move |ri| (ei, ri)))
        .collect();
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let chunk = jobs.len().div_ceil(workers).max(1);
    let mut results: Vec<Vec<(bool, usize)>> = vec![vec![(false, 0); seeds]; engines.len()];
    let batches: Vec<Vec<((usize, usize), (bool, usize))>> = std::thread::scope(|scope| {
        let net = &net;
        let handles: Vec<_> = jobs
            .chunks(chunk)
            .map(|batch| {
                let engines = engines.to_vec();
                let opts = opts.clone();
                scope.spawn(move || {
                    batch
                        .iter()
                        .map(|&(ei, ri)| {
                            let seed = derive_seed(opts.seed, ri as u64);
                            let outcome = run_engine(net, engines[ei], &opts, seed, None);
                            let slot = match outcome {
                                Ok(r) => {
                                    (matches!(r.verdict, RunVerdict::Solved), r.iterations)
                                }
                                Err(_) => (false, usize::MAX),
                            };
                            ((ei, ri), slot)
                        })
                        .collect()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    for batch in batches {
        for ((ei, ri), slot) in batch {
            results[ei][ri] = slot;
        }
    }

    let mut csv = String::from("engine,runs,solved,median_iterations,q25,q75\n");
    for (ei, engine) in engines.iter().enumerate() {
        let runs = &results[ei];
        let solved = runs.iter().filter(|(ok, _)| *ok).count();
        // Unsolved runs are censored at their full budget.
        let mut iters: Vec<usize> = runs.iter().map(|&(_, i)| i).collect();
        iters.sort_unstable();
        let quantile = |q: f64| -> usize { iters[((iters.len() - 1) as f64 * q).round() as usize] };
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            engine.id(),
            seeds,
            solved,
            quantile(0.5),
            quantile(0.25),
            quantile(0.75),
        ));
        if !opts.quiet {
            println!(
                "{}: solved {}/{} runs, median {} iterations",
                engine.id(),
                solved,
                seeds,
                quantile(0.5)
            );
        }
    }
    fs::create_dir_all(&opts.out)
        .map_err(|e| format!("cannot create {}: {e}", opts.out.display()))?;
    let path = opts.out.join("compare.csv");
    fs::write(&path, csv).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_compile(opts: &GlobalOpts, cnf_path: &Path, out_net_path: &Path) -> Result<ExitCode, String> {
    let text = read_to_string(cnf_path)?;
    let formula = parse_dimacs(&text).map_err(|e| format!("{}: {e}", cnf_path.display()))?;
    let net = compile_cnf(&formula);
    let report = net.validate();
    if !report.is_valid() {
        return Err(format!("compiled network failed validation: {report}"));
    }
    fs::write(out_net_path, serialize_network(&net))
        .map_err(|e| format!("cannot write {}: {e}", out_net_path.display()))?;
    if !opts.quiet {
        println!(
            "compiled {} vars, {} clauses -> {} nodes, {} gates",
            formula.num_vars,
            formula.clauses.len(),
            net.num_nodes(),
            net.gates.len()
        );
    }
    Ok(ExitCode::SUCCESS)
}
