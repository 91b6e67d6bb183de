//! Command-line front end for seeded sweeps.

use std::ffi::OsString;
use std::io::Write;
use std::ops::RangeInclusive;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use edocr::scenario::annotated_defaults;
use edocr::sweep::{compare, run_sweep, write_sweep, SweepPlan, SweepRun};
use edocr::{HeadStrategy, Scenario};

#[derive(Debug, Parser)]
#[command(name = "edocr", version, about = "Cluster-head election and routing simulator for sensor networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario over one or more seeds and strategies.
    Run(RunArgs),
    /// Print the default scenario as an annotated TOML file.
    Defaults,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario file (TOML).
    pub scenario: PathBuf,
    /// Seeds: `7`, `1..20` (inclusive) or `1,4,9`. Defaults to the scenario's seed.
    #[arg(long, value_parser = parse_seeds)]
    pub seeds: Option<Seeds>,
    /// Head-election strategy; repeat to compare several. Defaults to the scenario's.
    #[arg(long = "strategy")]
    pub strategies: Vec<HeadStrategy>,
    /// Output directory. Defaults to the scenario's `output_dir`.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Ticks between metrics rows.
    #[arg(long)]
    pub reporting_interval: Option<u64>,
    /// Simulated duration in seconds.
    #[arg(long)]
    pub simulation_time: Option<f64>,
    /// Also write the per-event trace of every run.
    #[arg(long)]
    pub trace: bool,
    /// Worker threads; outputs do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Seeds(pub Vec<u64>);

pub fn parse_seeds(text: &str) -> Result<Seeds, String> {
    let parse = |s: &str| s.trim().parse::<u64>().map_err(|e| format!("bad seed `{s}`: {e}"));
    let seeds = if let Some((a, b)) = text.split_once("..") {
        let range: RangeInclusive<u64> = parse(a)?..=parse(b.trim_start_matches('='))?;
        if range.is_empty() {
            return Err(format!("empty seed range `{text}`"));
        }
        range.collect()
    } else {
        text.split(',').map(parse).collect::<Result<Vec<_>, _>>()?
    };
    Ok(Seeds(seeds))
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors go to stderr.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli, &mut std::io::stdout()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

pub fn execute(cli: Cli, out: &mut impl Write) -> anyhow::Result<()> {
    match cli.command {
        Command::Defaults => write!(out, "{}", annotated_defaults())?,
        Command::Run(args) => run(args, out)?,
    }
    Ok(())
}

fn run(args: RunArgs, out: &mut impl Write) -> anyhow::Result<()> {
    let mut scenario = Scenario::load(&args.scenario)?;
    if let Some(r) = args.reporting_interval {
        scenario.reporting_interval = r;
    }
    if let Some(t) = args.simulation_time {
        scenario.network.simulation_time = t;
    }
    scenario.validate()?;
    if args.threads == Some(0) {
        bail!("--threads must be at least 1");
    }
    let seeds = args.seeds.map_or_else(|| vec![scenario.network.seed], |s| s.0);
    let mut strategies = if args.strategies.is_empty() { vec![scenario.strategy] } else { args.strategies };
    strategies.dedup();
    let dir = args.output.unwrap_or_else(|| scenario.output_dir.clone());

    let plan = SweepPlan { scenario, seeds, strategies, threads: args.threads, record_trace: args.trace };
    let runs = run_sweep(&plan)?;
    let manifest = write_sweep(&plan, &runs, &dir).with_context(|| format!("writing {}", dir.display()))?;
    summarize(&plan, &runs, out)?;
    writeln!(out, "wrote {} files to {}", manifest.artifacts.len() + 2, dir.display())?;
    Ok(())
}

fn summarize(plan: &SweepPlan, runs: &[SweepRun], out: &mut impl Write) -> anyhow::Result<()> {
    for &strategy in &plan.strategies {
        let own: Vec<_> = runs.iter().filter(|r| r.strategy == strategy).collect();
        let pdr: Vec<f64> = own.iter().filter_map(|r| r.output.summary.pdr()).collect();
        let mean_pdr = pdr.iter().sum::<f64>() / pdr.len().max(1) as f64;
        let alive = own.iter().map(|r| r.output.summary.lifetime.final_alive_fraction).sum::<f64>() / own.len() as f64;
        writeln!(out, "{strategy:<16} runs={:<3} mean_pdr={mean_pdr:.4} mean_final_alive={alive:.4}", own.len())?;
    }
    if plan.strategies.len() > 1 && plan.seeds.len() > 1 {
        let candidate = plan.strategies[0];
        for &baseline in &plan.strategies[1..] {
            let c = compare(runs, candidate, baseline);
            let (w, l, t) = c.pdr_outcomes;
            writeln!(
                out,
                "{candidate} vs {baseline}: pdr wins/losses/ties {w}/{l}/{t}, sign p={:.4}; mean partition tick {:.1} vs {:.1}",
                c.pdr_sign_p, c.mean_partition_candidate, c.mean_partition_baseline
            )?;
        }
    }
    Ok(())
}
