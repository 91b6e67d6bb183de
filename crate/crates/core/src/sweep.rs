//! Seed sweeps over one or more strategies, run in parallel.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::clustering::HeadStrategy;
use crate::error::{Error, Result};
use crate::report::{emit_metrics_csv, format_metrics_csv, write_trace, RunManifest};
use crate::scenario::Scenario;
use crate::sim::{run, RunOptions, RunOutput};
use crate::stats::{paired_outcomes, sign_test_p};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug)]
pub struct SweepPlan {
    pub scenario: Scenario,
    pub seeds: Vec<u64>,
    pub strategies: Vec<HeadStrategy>,
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
    pub record_trace: bool,
}

#[derive(Clone, Debug)]
pub struct SweepRun {
    pub strategy: HeadStrategy,
    pub seed: u64,
    pub output: RunOutput<f64>,
}

impl SweepRun {
    pub fn stem(&self) -> String {
        format!("{}_seed{}", self.strategy, self.seed)
    }
}

/// Runs every (strategy, seed) pair. Results come back ordered by strategy
/// as listed in the plan, then by seed, whatever the thread count.
pub fn run_sweep(plan: &SweepPlan) -> Result<Vec<SweepRun>> {
    plan.scenario
        .validate()
        .map_err(|e| Error::Config(e.to_string()))?;
    let jobs: Vec<(HeadStrategy, u64)> = plan
        .strategies
        .iter()
        .flat_map(|&s| plan.seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    let options = RunOptions {
        record_trace: plan.record_trace,
    };
    let work = || {
        jobs.par_iter()
            .map(|&(strategy, seed)| {
                let scenario = plan.scenario.with_seed(seed);
                let output = run::<f64>(&scenario.sim_config(), strategy, &scenario.traffic, options)?;
                Ok(SweepRun { strategy, seed, output })
            })
            .collect::<Result<Vec<_>>>()
    };
    match plan.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

pub const COMPARISON_HEADER: &str = "strategy,seed,ticks_run,sent,delivered,dropped,pdr,first_death_tick,first_partition_tick,final_alive_fraction,final_residual_fraction,discoveries,control_packets";

pub fn format_comparison(runs: &[SweepRun]) -> String {
    let mut out = String::from(COMPARISON_HEADER);
    out.push('\n');
    let opt = |v: Option<u64>| v.map_or_else(|| "NA".to_string(), |t| t.to_string());
    for r in runs {
        let s = &r.output.summary;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{:.6},{:.6},{},{}\n",
            r.strategy,
            r.seed,
            s.ticks_run,
            s.sent,
            s.delivered,
            s.dropped,
            s.pdr().map_or_else(|| "NA".to_string(), |p| format!("{p:.6}")),
            opt(s.lifetime.first_death_tick),
            opt(s.lifetime.first_partition_tick),
            s.lifetime.final_alive_fraction,
            s.lifetime.final_residual_fraction,
            s.discoveries,
            s.control_packets,
        ));
    }
    out
}

/// Paired comparison of `candidate` against `baseline` over shared seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct PairedComparison {
    pub candidate: HeadStrategy,
    pub baseline: HeadStrategy,
    pub pairs: usize,
    pub mean_partition_candidate: f64,
    pub mean_partition_baseline: f64,
    pub mean_pdr_candidate: f64,
    pub mean_pdr_baseline: f64,
    /// (wins, losses, ties) of the candidate on end-of-run delivery ratio.
    pub pdr_outcomes: (u64, u64, u64),
    pub pdr_sign_p: f64,
    pub partition_outcomes: (u64, u64, u64),
}

pub fn compare(runs: &[SweepRun], candidate: HeadStrategy, baseline: HeadStrategy) -> PairedComparison {
    let find = |strategy, seed| runs.iter().find(|r| r.strategy == strategy && r.seed == seed);
    let pairs: Vec<(&SweepRun, &SweepRun)> = runs
        .iter()
        .filter(|r| r.strategy == candidate)
        .filter_map(|c| find(baseline, c.seed).map(|b| (c, b)))
        .collect();
    let n = pairs.len().max(1) as f64;
    let pdr = |r: &SweepRun| r.output.summary.pdr().unwrap_or(0.0);
    let part = |r: &SweepRun| r.output.summary.partition_or_end();
    let pdr_outcomes = paired_outcomes(pairs.iter().map(|(c, b)| (pdr(c), pdr(b))));
    PairedComparison {
        candidate,
        baseline,
        pairs: pairs.len(),
        mean_partition_candidate: pairs.iter().map(|(c, _)| part(c) as f64).sum::<f64>() / n,
        mean_partition_baseline: pairs.iter().map(|(_, b)| part(b) as f64).sum::<f64>() / n,
        mean_pdr_candidate: pairs.iter().map(|(c, _)| pdr(c)).sum::<f64>() / n,
        mean_pdr_baseline: pairs.iter().map(|(_, b)| pdr(b)).sum::<f64>() / n,
        pdr_sign_p: sign_test_p(pdr_outcomes.0, pdr_outcomes.1),
        pdr_outcomes,
        partition_outcomes: paired_outcomes(pairs.iter().map(|(c, b)| (part(c), part(b)))),
    }
}

/// Writes one metrics CSV per run (plus traces when recorded), the paired
/// comparison table, the scenario and a manifest into `dir`.
pub fn write_sweep(plan: &SweepPlan, runs: &[SweepRun], dir: &Path) -> Result<RunManifest> {
    fs::create_dir_all(dir)?;
    let mut artifacts = Vec::new();
    for r in runs {
        let csv = format!("metrics_{}.csv", r.stem());
        emit_metrics_csv(&r.output.frames, &dir.join(&csv))?;
        artifacts.push(csv);
        if plan.record_trace {
            let trace = format!("trace_{}.tsv", r.stem());
            write_trace(&r.output.trace, &dir.join(&trace))?;
            artifacts.push(trace);
        }
    }
    fs::write(dir.join("comparison.csv"), format_comparison(runs))?;
    artifacts.push("comparison.csv".into());
    let scenario_file = "scenario.toml".to_string();
    plan.scenario
        .save(&dir.join(&scenario_file))
        .map_err(|e| Error::Config(e.to_string()))?;
    let manifest = RunManifest {
        tool_version: TOOL_VERSION.into(),
        scenario_hash: plan.scenario.hash(),
        scenario_file,
        strategies: plan.strategies.iter().map(|s| s.to_string()).collect(),
        seeds: plan.seeds.clone(),
        artifacts,
    };
    manifest.write(&dir.join("manifest.toml"))?;
    Ok(manifest)
}

/// CSV bytes of every run, keyed by file stem, for determinism checks.
pub fn metrics_bytes(runs: &[SweepRun]) -> Vec<(String, String)> {
    runs.iter()
        .map(|r| (r.stem(), format_metrics_csv(&r.output.frames)))
        .collect()
}

pub fn default_output_dir(scenario: &Scenario) -> PathBuf {
    scenario.output_dir.clone()
}
