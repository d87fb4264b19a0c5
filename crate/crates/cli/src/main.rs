use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lazydual::Method;
use lazydual_cli::experiment::thread_budget;
use lazydual_cli::reports::{params_report, score_report, spectrum_report};
use lazydual_cli::{run_all, write_outputs, CliError, ExperimentConfig, Format, Overrides, Result, Setup};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "lazydual", version, about = "Decentralized dual gradient methods with lazy communication")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured (method, seed) pair and write traces plus summary.json.
    Run(RunArgs),
    /// Spectrum of the gossip matrix and its Chebyshev acceleration.
    Spectrum(Common),
    /// Parameters prescribed by the convergence theory.
    Params(Common),
    /// Heterogeneity scores and predicted communication of the lazy methods.
    Score(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Methods to run, comma separated (ssda, msda, dlag, mdlag)
    #[arg(long, value_delimiter = ',')]
    method: Vec<Method>,
    /// Dual step size
    #[arg(long)]
    eta: Option<f64>,
    /// Momentum safety factor, at least 1
    #[arg(long)]
    s: Option<f64>,
    /// Lazy threshold weight
    #[arg(long)]
    gamma: Option<f64>,
    /// Inner-solver contraction target in (0, 1)
    #[arg(long)]
    c: Option<f64>,
    /// Delay cap
    #[arg(long = "bigD")]
    big_d: Option<usize>,
    /// Gossip rounds per multi-consensus step
    #[arg(long = "K")]
    k: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Seeds, comma separated
    #[arg(long, value_delimiter = ',')]
    seed: Vec<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trace format
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Stop once suboptimality is at or below this value
    #[arg(long)]
    target: Option<f64>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            methods: self.method.clone(),
            eta: self.eta,
            s: self.s,
            gamma: self.gamma,
            c: self.c,
            big_d: self.big_d,
            k: self.k,
            ..Default::default()
        }
    }

    fn setup(&self, extra: impl FnOnce(&mut Overrides)) -> Result<Setup> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        let mut o = self.overrides();
        extra(&mut o);
        cfg.apply(&o)?;
        Setup::new(cfg)
    }
}

fn print_json(value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn run(args: RunArgs) -> Result<()> {
    let setup = args.common.setup(|o| {
        o.seeds = args.seed.clone();
        o.out = args.out.clone();
        o.format = args.format;
        o.max_iters = args.max_iters;
        o.target_subopt = args.target;
    })?;
    let outcomes = run_all(&setup, thread_budget());
    let dir = setup.cfg.output.dir.clone();
    let summary = write_outputs(&setup, &outcomes, &dir, setup.cfg.output.format)?;
    println!("{}  config {}", summary.name, &summary.config_hash[..12]);
    println!("{:<6} {:>5} {:>8} {:>12} {:>12} {:>14} {:>8}", "method", "seed", "iters", "subopt", "messages", "grad evals", "util");
    for r in &summary.runs {
        let status = r.error.as_deref().map(|e| format!("  [{e}]")).unwrap_or_default();
        println!(
            "{:<6} {:>5} {:>8} {:>12.4e} {:>12} {:>14} {:>8.4}{status}",
            r.method.to_string(),
            r.seed,
            r.iterations,
            r.final_subopt,
            r.messages,
            r.grad_evals,
            r.edge_utilization
        );
    }
    println!("traces and summary.json in {}", dir.display());
    let failed = summary.runs.iter().filter(|r| !r.ok).count();
    if failed > 0 {
        return Err(CliError::RunsFailed { failed, total: summary.runs.len() });
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Spectrum(c) => c.setup(|_| {}).and_then(|s| print_json(&spectrum_report(&s)?)),
        Command::Params(c) => c.setup(|_| {}).and_then(|s| print_json(&params_report(&s)?)),
        Command::Score(c) => c.setup(|_| {}).and_then(|s| print_json(&score_report(&s)?)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
