use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use ced_core::fvs;
use ced_core::graph::DirectedGraph;
use ced_core::policy::PolicyKind;
use clap::{Args, Parser, Subcommand};

use ced_harness::config::{
    parse_node_list, parse_strategies, parse_switch, BudgetRule, EdgeMode, PartialConfig,
};
use ced_harness::{report, selftest, sweep, HarnessError};

#[derive(Parser)]
#[command(
    name = "ced",
    version,
    about = "Adaptive experiment design for cyclic linear causal models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded multi-size sweep and emit one CSV row per (trial, strategy)
    Sweep(SweepArgs),
    /// Run one instance with one strategy and print the per-round trace
    Single(SingleArgs),
    /// Solve the exact minimum feedback vertex set of a graph file
    Fvs(FvsArgs),
    /// Run the built-in property suites
    Selftest(SelftestArgs),
}

/// Flags shared by sweep and single; every one of them can also come
/// from a --config file, with flags taking precedence.
#[derive(Args)]
struct CommonArgs {
    /// Comma-separated node counts, e.g. 6,8,10,12
    #[arg(long)]
    nodes: Option<String>,
    /// Benefit computation: exact or sample
    #[arg(long)]
    mode: Option<String>,
    /// Sampler draws per round in sample mode
    #[arg(long)]
    samples: Option<usize>,
    /// Graph wiring: sparse:c=2.0 or dense:p=0.2
    #[arg(long)]
    edge: Option<String>,
    /// Intervention budget: n (match node count) or a fixed integer
    #[arg(long)]
    budget: Option<String>,
    /// Master seed; everything else derives from it
    #[arg(long)]
    seed: Option<u64>,
    /// Compute the exact FVS lower bound per instance: on or off
    #[arg(long)]
    fvs: Option<String>,
    /// Key=value config file mirroring these flags
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Trials per node count
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated subset of adaptive,random,maxdegree
    #[arg(long)]
    strategies: Option<String>,
    /// Write the records CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the per-(n, strategy) summary CSV to this path
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Fill the wall_ms column; timings vary, so output is no longer
    /// byte-reproducible
    #[arg(long = "wall-ms")]
    wall_ms: bool,
}

#[derive(Args)]
struct SingleArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Strategy to run
    #[arg(long, default_value = "adaptive")]
    strategy: String,
    /// Trial index within the master seed's stream
    #[arg(long, default_value_t = 0)]
    trial: usize,
}

#[derive(Args)]
struct FvsArgs {
    /// Adjacency matrix file: one row of 0/1 digits per line
    #[arg(long)]
    graph: PathBuf,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Command::Sweep(args) => run_sweep(args),
        Command::Single(args) => run_single(args),
        Command::Fvs(args) => run_fvs(args),
        Command::Selftest(args) => run_selftest(args),
    }
}

fn partial_from_common(common: &CommonArgs) -> Result<PartialConfig, HarnessError> {
    let bad = HarnessError::Config;
    let mut partial = PartialConfig::default();
    if let Some(nodes) = &common.nodes {
        partial.node_counts = Some(parse_node_list(nodes).map_err(bad)?);
    }
    if let Some(mode) = &common.mode {
        partial.mode = Some(match mode.as_str() {
            "exact" => "exact",
            "sample" | "sampled" => "sample",
            other => return Err(bad(format!("mode must be exact or sample, got {other:?}"))),
        });
    }
    partial.samples = common.samples;
    if let Some(edge) = &common.edge {
        partial.edge_mode = Some(EdgeMode::from_str(edge).map_err(bad)?);
    }
    if let Some(budget) = &common.budget {
        partial.budget = Some(BudgetRule::from_str(budget).map_err(bad)?);
    }
    partial.master_seed = common.seed;
    if let Some(fvs) = &common.fvs {
        partial.fvs_enabled = Some(parse_switch(fvs).map_err(bad)?);
    }
    let merged = match &common.config {
        Some(path) => PartialConfig::from_file_text(&fs::read_to_string(path)?)?
            .merged_with(partial),
        None => partial,
    };
    Ok(merged)
}

fn run_sweep(args: SweepArgs) -> Result<ExitCode, HarnessError> {
    let mut partial = partial_from_common(&args.common)?;
    let flag_overrides = PartialConfig {
        trials_per_size: args.trials,
        strategies: args
            .strategies
            .as_deref()
            .map(parse_strategies)
            .transpose()
            .map_err(HarnessError::Config)?,
        record_wall_time: args.wall_ms.then_some(true),
        out: args.out,
        summary: args.summary,
        ..PartialConfig::default()
    };
    partial = partial.merged_with(flag_overrides);
    let out = partial.out.clone();
    let summary = partial.summary.clone();
    let cfg = partial.finish()?;

    let records = sweep::run_sweep(&cfg)?;
    let csv = report::records_csv(&records);
    match &out {
        Some(path) => fs::write(path, &csv)?,
        None => print!("{csv}"),
    }
    if let Some(path) = &summary {
        fs::write(path, report::summary_csv(&report::aggregate(&records)))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run_single(args: SingleArgs) -> Result<ExitCode, HarnessError> {
    let kind =
        PolicyKind::from_str(&args.strategy).map_err(HarnessError::Config)?;
    let mut partial = partial_from_common(&args.common)?;
    partial.trials_per_size = Some(1);
    let cfg = partial.finish()?;
    let n = match cfg.node_counts.as_slice() {
        [n] => *n,
        _ => {
            return Err(HarnessError::Config(
                "single takes exactly one node count, e.g. --nodes 8".into(),
            ))
        }
    };

    let (instance, outcome, fvs_result) = sweep::run_single(&cfg, kind, n, args.trial)?;
    let truth = instance.w.support();
    println!(
        "instance: n = {n}, seed = {}, {} edges, strategy = {kind}",
        instance.seed,
        truth.edge_count(),
    );
    if let Some(result) = fvs_result {
        println!("fvs lower bound: {} {:?}", result.size, result.witness);
    }
    for record in &outcome.interventions {
        println!(
            "round {}: intervene on x{} -> observation row {} belongs to it",
            record.round + 1,
            record.target,
            record.revealed_ica_row
        );
    }
    match (&outcome.class_size_trace, outcome.identified) {
        (Some(trace), _) => {
            let sizes: Vec<String> = trace.iter().map(u64::to_string).collect();
            println!(
                "{} after {} interventions; class sizes {}",
                if outcome.identified { "identified" } else { "budget exhausted" },
                outcome.interventions_used(),
                sizes.join(" -> "),
            );
        }
        (None, true) => {
            println!("identified after {} interventions", outcome.interventions_used())
        }
        (None, false) => {
            println!("budget exhausted after {} interventions", outcome.interventions_used())
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run_fvs(args: FvsArgs) -> Result<ExitCode, HarnessError> {
    let g = DirectedGraph::from_text(&fs::read_to_string(&args.graph)?)?;
    let result = fvs::min_fvs(&g)?;
    println!("minimum feedback vertex set: size {} {:?}", result.size, result.witness);
    Ok(ExitCode::SUCCESS)
}

fn run_selftest(args: SelftestArgs) -> Result<ExitCode, HarnessError> {
    let outcomes = selftest::run_all(args.seed);
    let mut all_passed = true;
    for outcome in &outcomes {
        let status = if outcome.passed { "ok" } else { "FAILED" };
        println!("{:<16} {status} ({})", outcome.name, outcome.detail);
        all_passed &= outcome.passed;
    }
    Ok(if all_passed { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
