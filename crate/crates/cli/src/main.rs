//! `wlc`: compress analytical query workloads.
//!
//! Subcommands: `compress` (ingest a log and select a summary), `merge`
//! (combine two summary reports incrementally), and `generate` (emit a
//! synthetic templated workload). Configuration errors exit 1, data
//! errors exit 2.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use wlc_cli::io::{ingest, read_target, write_log, write_spec, IngestStats};
use wlc_cli::report::{Report, ReportConfig};
use wlc_cli::{CliError, CliResult};
use wlc_core::baselines::{hierarchical, kmedoids, random_sample, DistanceConfig};
use wlc_core::synth::{generate, instance_counts, synth_spec, InstanceCounts};
use wlc_core::{
    greedy_compress, merge_summaries, parallel_compress, AlphaKind, CompressionConfig,
    CompressionResult, CostMode, MergeMode, RhoKind, SelectionMode, Summary, TargetSpec, Workload,
};

#[derive(Parser)]
#[command(
    name = "wlc",
    version,
    about = "Workload compression for analytical query logs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest a query log and select a budget-constrained summary.
    Compress(CompressArgs),
    /// Merge two summary reports over their combined workloads.
    Merge(MergeArgs),
    /// Generate a synthetic templated query log.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct CompressArgs {
    /// JSONL query log.
    #[arg(long)]
    log: PathBuf,
    /// JSON feature spec.
    #[arg(long)]
    spec: PathBuf,
    /// greedy | random | kmedoids | hierarchical
    #[arg(long, default_value = "greedy")]
    algorithm: String,
    /// Summary budget (required for greedy and random).
    #[arg(long)]
    budget: Option<f64>,
    /// unit | field:NAME (the pseudo-field `cost` reads the log's cost column).
    #[arg(long, default_value = "unit")]
    cost: String,
    /// Smoothing parameter in (0, 1]; small values favor coverage.
    #[arg(long, default_value_t = 1e-25)]
    gamma: f64,
    /// Blend between coverage and representativity in [0, 1].
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// min | avg
    #[arg(long, default_value = "min")]
    alpha: String,
    /// l1 | linf
    #[arg(long, default_value = "l1")]
    rho: String,
    /// input | uniform | file:PATH
    #[arg(long, default_value = "input")]
    target: String,
    /// objective | score
    #[arg(long, default_value = "objective")]
    select: String,
    /// Partition count for parallel compression.
    #[arg(long, default_value_t = 1)]
    partitions: usize,
    /// Seed for randomized algorithms (PCG-64).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cluster count for kmedoids/hierarchical.
    #[arg(long)]
    k: Option<usize>,
    /// Refinement cap for kmedoids.
    #[arg(long, default_value_t = 50)]
    max_iters: usize,
    /// Report path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MergeArgs {
    /// Two summary reports produced by `compress` (repeat the flag).
    #[arg(long = "summary", required = true)]
    summary: Vec<PathBuf>,
    /// union | regreedy
    #[arg(long, default_value = "union")]
    mode: String,
    /// Budget for regreedy mode (defaults to the reports' shared budget).
    #[arg(long)]
    budget: Option<f64>,
    /// Report path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of query templates.
    #[arg(long)]
    templates: u32,
    /// uniform:N | harmonic:BASE
    #[arg(long = "instances-per-template", default_value = "uniform:19")]
    instances: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output JSONL log path.
    #[arg(long)]
    out: PathBuf,
    /// Also write the matching feature spec here.
    #[arg(long)]
    spec_out: Option<PathBuf>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            if e.use_stderr() {
                eprintln!("{e}");
                std::process::exit(1);
            }
            print!("{e}");
            std::process::exit(0);
        }
    };
    let result = match cli.command {
        Command::Compress(args) => run_compress(args),
        Command::Merge(args) => run_merge(args),
        Command::Generate(args) => run_generate(args),
    };
    if let Err(e) = result {
        eprintln!("wlc: {e}");
        std::process::exit(e.exit_code());
    }
}

fn parse_cost(s: &str) -> CliResult<CostMode> {
    match s {
        "unit" => Ok(CostMode::Unit),
        _ => match s.strip_prefix("field:") {
            Some(name) if !name.is_empty() => Ok(CostMode::Field(name.to_string())),
            _ => Err(CliError::config(format!(
                "--cost must be unit or field:NAME, got {s}"
            ))),
        },
    }
}

fn parse_alpha(s: &str) -> CliResult<AlphaKind> {
    match s {
        "min" => Ok(AlphaKind::Min),
        "avg" => Ok(AlphaKind::Avg),
        _ => Err(CliError::config(format!(
            "--alpha must be min or avg, got {s}"
        ))),
    }
}

fn parse_rho(s: &str) -> CliResult<RhoKind> {
    match s {
        "l1" => Ok(RhoKind::L1),
        "linf" => Ok(RhoKind::LInf),
        _ => Err(CliError::config(format!(
            "--rho must be l1 or linf, got {s}"
        ))),
    }
}

fn parse_select(s: &str) -> CliResult<SelectionMode> {
    match s {
        "objective" => Ok(SelectionMode::Objective),
        "score" => Ok(SelectionMode::BetaScore),
        _ => Err(CliError::config(format!(
            "--select must be objective or score, got {s}"
        ))),
    }
}

/// Resolve the target flag. File targets need the ingested workload to
/// align token ids.
fn parse_target(s: &str, workload: &Workload) -> CliResult<TargetSpec> {
    match s {
        "input" => Ok(TargetSpec::Input),
        "uniform" => Ok(TargetSpec::Uniform),
        _ => match s.strip_prefix("file:") {
            Some(path) if !path.is_empty() => Ok(TargetSpec::Explicit(read_target(
                Path::new(path),
                workload,
            )?)),
            _ => Err(CliError::config(format!(
                "--target must be input, uniform, or file:PATH, got {s}"
            ))),
        },
    }
}

fn emit(report: &Report, out: Option<&PathBuf>) -> CliResult<()> {
    match out {
        Some(path) => report.write(path),
        None => {
            println!(
                "{}",
                serde_json::to_string_pretty(report).expect("report serializes")
            );
            Ok(())
        }
    }
}

fn run_compress(args: CompressArgs) -> CliResult<()> {
    let t0 = Instant::now();
    let (workload, ingest_stats) = ingest(&args.log, &args.spec)?;
    let ingest_ms = t0.elapsed().as_secs_f64() * 1e3;

    let cost_mode = parse_cost(&args.cost)?;
    let target = parse_target(&args.target, &workload)?;
    if !(0.0..=1.0).contains(&args.beta) {
        return Err(CliError::config(format!(
            "--beta {} outside [0, 1]",
            args.beta
        )));
    }
    if !(args.gamma > 0.0 && args.gamma <= 1.0) {
        return Err(CliError::config(format!(
            "--gamma {} outside (0, 1]",
            args.gamma
        )));
    }
    if args.partitions == 0 {
        return Err(CliError::config("--partitions must be >= 1".to_string()));
    }
    let config = CompressionConfig {
        gamma: args.gamma,
        beta: args.beta,
        budget: args.budget.unwrap_or(0.0),
        cost_mode,
        target,
        selection: parse_select(&args.select)?,
        alpha_kind: parse_alpha(&args.alpha)?,
        rho_kind: parse_rho(&args.rho)?,
        partitions: args.partitions,
        seed: args.seed,
    };

    let needs_budget = matches!(args.algorithm.as_str(), "greedy" | "random");
    if needs_budget && args.budget.is_none() {
        return Err(CliError::config(format!(
            "--budget is required for --algorithm {}",
            args.algorithm
        )));
    }

    let t1 = Instant::now();
    let mut extra_warnings = Vec::new();
    let result: CompressionResult = match args.algorithm.as_str() {
        "greedy" => {
            if config.partitions > 1 {
                parallel_compress(&workload, &config)?
            } else {
                greedy_compress(&workload, &config)?
            }
        }
        "random" => random_sample(&workload, &config)?,
        "kmedoids" | "hierarchical" => {
            let k = args.k.ok_or_else(|| {
                CliError::config(format!(
                    "--k is required for --algorithm {}",
                    args.algorithm
                ))
            })?;
            if args.budget.is_some() {
                extra_warnings
                    .push("--budget is ignored by clustering algorithms; use --k".to_string());
            }
            let dist = DistanceConfig::default();
            if args.algorithm == "kmedoids" {
                kmedoids(&workload, k, &dist, args.max_iters, &config)?
            } else {
                hierarchical(&workload, k, &dist, &config)?
            }
        }
        other => {
            return Err(CliError::config(format!(
                "--algorithm must be greedy, random, kmedoids, or hierarchical, got {other}"
            )))
        }
    };
    let algo_ms = t1.elapsed().as_secs_f64() * 1e3;

    let mut result = result;
    result.warnings.extend(extra_warnings);

    let mut timings = BTreeMap::new();
    timings.insert("ingest".to_string(), ingest_ms);
    timings.insert("compress".to_string(), algo_ms);
    let report = Report::new(
        &args.log.display().to_string(),
        &args.spec.display().to_string(),
        ReportConfig {
            algorithm: args.algorithm.clone(),
            budget: config.budget,
            cost: args.cost.clone(),
            gamma: config.gamma,
            beta: config.beta,
            alpha: args.alpha.clone(),
            rho: args.rho.clone(),
            target: args.target.clone(),
            select: args.select.clone(),
            partitions: config.partitions,
            seed: config.seed,
            k: args.k,
        },
        ingest_stats,
        &workload,
        &result,
        timings,
    );
    emit(&report, args.out.as_ref())
}

fn run_merge(args: MergeArgs) -> CliResult<()> {
    if args.summary.len() != 2 {
        return Err(CliError::config(format!(
            "--summary must be given exactly twice, got {}",
            args.summary.len()
        )));
    }
    let mode = match args.mode.as_str() {
        "union" => MergeMode::Union,
        "regreedy" => MergeMode::Regreedy,
        other => {
            return Err(CliError::config(format!(
                "--mode must be union or regreedy, got {other}"
            )))
        }
    };
    let t0 = Instant::now();
    let report_a = Report::read(&args.summary[0])?;
    let report_b = Report::read(&args.summary[1])?;
    for r in [&report_a, &report_b] {
        if r.config.target.starts_with("file:") {
            return Err(CliError::config(
                "merge does not support file targets; re-run compress with input or uniform"
                    .to_string(),
            ));
        }
    }

    let budget = match (args.budget, mode) {
        (Some(b), _) => b,
        (None, MergeMode::Union) => report_a.config.budget + report_b.config.budget,
        (None, MergeMode::Regreedy) => {
            if report_a.config.budget != report_b.config.budget {
                return Err(CliError::config(format!(
                    "regreedy needs --budget when the reports disagree ({} vs {})",
                    report_a.config.budget, report_b.config.budget
                )));
            }
            report_a.config.budget
        }
    };

    let (w_a, stats_a) = ingest(
        Path::new(&report_a.log_path),
        Path::new(&report_a.spec_path),
    )?;
    let (w_b, stats_b) = ingest(
        Path::new(&report_b.log_path),
        Path::new(&report_b.spec_path),
    )?;
    let s_a = Summary::from_ids(&w_a, &report_a.summary_ids).map_err(CliError::from)?;
    let s_b = Summary::from_ids(&w_b, &report_b.summary_ids).map_err(CliError::from)?;

    let config = CompressionConfig {
        gamma: report_a.config.gamma,
        beta: report_a.config.beta,
        budget,
        cost_mode: parse_cost(&report_a.config.cost)?,
        target: match report_a.config.target.as_str() {
            "uniform" => TargetSpec::Uniform,
            _ => TargetSpec::Input,
        },
        selection: SelectionMode::Objective,
        alpha_kind: parse_alpha(&report_a.config.alpha)?,
        rho_kind: parse_rho(&report_a.config.rho)?,
        partitions: 1,
        seed: report_a.config.seed,
    };
    let (combined, result) = merge_summaries(&w_a, &s_a, &w_b, &s_b, mode, &config)?;
    let total_ms = t0.elapsed().as_secs_f64() * 1e3;

    let ingest_stats = IngestStats {
        parsed: stats_a.parsed + stats_b.parsed,
        skipped: stats_a.skipped + stats_b.skipped,
        clamped: {
            let mut merged = stats_a.clamped.clone();
            for (k, v) in stats_b.clamped {
                *merged.entry(k).or_insert(0) += v;
            }
            merged
        },
    };
    let mut timings = BTreeMap::new();
    timings.insert("merge".to_string(), total_ms);
    let mut report = Report::new(
        "<merged>",
        &report_a.spec_path,
        ReportConfig {
            algorithm: format!("merge-{}", args.mode),
            budget,
            cost: report_a.config.cost.clone(),
            gamma: config.gamma,
            beta: config.beta,
            alpha: report_a.config.alpha.clone(),
            rho: report_a.config.rho.clone(),
            target: report_a.config.target.clone(),
            select: "objective".to_string(),
            partitions: 1,
            seed: config.seed,
            k: None,
        },
        ingest_stats,
        &combined,
        &result,
        timings,
    );
    report.merged_from = Some(vec![
        args.summary[0].display().to_string(),
        args.summary[1].display().to_string(),
    ]);
    emit(&report, args.out.as_ref())
}

fn run_generate(args: GenerateArgs) -> CliResult<()> {
    if args.templates == 0 {
        return Err(CliError::config("--templates must be >= 1".to_string()));
    }
    let counts = parse_instances(&args.instances)?;
    let records = generate(args.templates, counts, args.seed);
    write_log(&args.out, &records)?;
    if let Some(spec_path) = &args.spec_out {
        write_spec(spec_path, &synth_spec())?;
    }
    let total: u32 = instance_counts(args.templates, counts).iter().sum();
    eprintln!(
        "generated {total} queries over {} templates into {}",
        args.templates,
        args.out.display()
    );
    Ok(())
}

fn parse_instances(s: &str) -> CliResult<InstanceCounts> {
    if let Some(n) = s.strip_prefix("uniform:") {
        let n: u32 = n
            .parse()
            .map_err(|_| CliError::config(format!("bad --instances-per-template {s}")))?;
        return Ok(InstanceCounts::Uniform(n));
    }
    if let Some(b) = s.strip_prefix("harmonic:") {
        let b: u32 = b
            .parse()
            .map_err(|_| CliError::config(format!("bad --instances-per-template {s}")))?;
        return Ok(InstanceCounts::Harmonic(b));
    }
    Err(CliError::config(format!(
        "--instances-per-template must be uniform:N or harmonic:BASE, got {s}"
    )))
}
