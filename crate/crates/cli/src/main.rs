//! Command line front end for the weighted sum-rate solvers.
//!
//! Subcommands:
//! - `gen`   — write a random network file (deterministic in the seed)
//! - `solve` — run one algorithm on one network file; emits a result JSON
//!   and a per-iteration trace CSV
//! - `bench` — iterations-to-threshold table over many random realizations
//! - `diag`  — solve and emit the stationarity / scaling / gradient report

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use duallink_core::dual_link::{InitStrategy, SolveResult, SolverConfig};
use duallink_core::harness::{
    self, Algorithm, BenchReport, ExperimentConfig,
};
use duallink_core::kkt;
use duallink_core::network::json::{covariances_to_entries, NetworkDocument};
use duallink_core::whitening;

#[derive(Parser)]
#[command(
    name = "duallink",
    about = "Weighted sum-rate maximization for MIMO interference networks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random network file.
    Gen(GenArgs),
    /// Solve one network file with one algorithm.
    Solve(SolveArgs),
    /// Reproduce the iterations-to-threshold benchmark table.
    Bench(BenchArgs),
    /// Emit KKT, scaling-invariance, and gradient diagnostics for a network.
    Diag(DiagArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Master seed; the same seed always produces the same file.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Realization index under the master seed.
    #[arg(long, default_value_t = 0)]
    realization: u64,
    #[arg(long, default_value_t = 10)]
    links: usize,
    #[arg(long, default_value_t = 3)]
    tx: usize,
    #[arg(long, default_value_t = 4)]
    rx: usize,
    #[arg(long, default_value_t = 0.0)]
    gain_diag_db: f64,
    #[arg(long, default_value_t = 0.0)]
    gain_offdiag_db: f64,
    #[arg(long, default_value_t = 100.0)]
    total_power: f64,
    /// Output file path.
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    /// Network file produced by `gen` (or by hand, same schema).
    #[arg(long, short)]
    input: PathBuf,
    /// dual_link, pwf, or wmmse.
    #[arg(long, default_value = "dual_link")]
    algorithm: String,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    /// scaled_identity or random.
    #[arg(long, default_value = "scaled_identity")]
    init: String,
    /// Seed for the random initialization.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report rates in bits instead of nats.
    #[arg(long)]
    bits: bool,
    /// Output stem: writes <stem>.json and <stem>.trace.csv.
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment config JSON (fields of the experiment configuration;
    /// missing fields take the defaults). Flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    links: Option<usize>,
    #[arg(long)]
    tx: Option<usize>,
    #[arg(long)]
    rx: Option<usize>,
    #[arg(long)]
    gain_diag_db: Option<f64>,
    /// Off-diagonal gain in dB; repeat the flag to benchmark several
    /// interference levels in one run.
    #[arg(long = "gain-offdiag-db")]
    gain_offdiag_db: Vec<f64>,
    #[arg(long)]
    total_power: Option<f64>,
    #[arg(long)]
    realizations: Option<usize>,
    /// Comma separated fractions of the per-run converged value.
    #[arg(long, value_delimiter = ',')]
    thresholds: Vec<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma separated subset of dual_link,pwf,wmmse.
    #[arg(long, value_delimiter = ',')]
    algorithms: Vec<String>,
    /// Output stem: writes <stem>.json and <stem>.csv.
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args)]
struct DiagArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 20000)]
    max_iters: usize,
    /// Scaling factors for the invariance check.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 0.5, 2.0, 10.0])]
    alphas: Vec<f64>,
    /// Random Hermitian directions per link for the gradient check.
    #[arg(long, default_value_t = 20)]
    fd_directions: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output stem: writes <stem>.json.
    #[arg(long, short)]
    output: PathBuf,
}

fn parse_init(init: &str, seed: u64) -> anyhow::Result<InitStrategy> {
    match init {
        "scaled_identity" => Ok(InitStrategy::ScaledIdentity),
        "random" => Ok(InitStrategy::RandomSeeded(seed)),
        other => bail!("unknown init '{other}' (expected scaled_identity or random)"),
    }
}

fn stem_with(stem: &Path, suffix: &str) -> PathBuf {
    let mut name = stem.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(suffix);
    stem.with_file_name(name)
}

fn run_gen(args: GenArgs) -> anyhow::Result<()> {
    let cfg = ExperimentConfig {
        links: args.links,
        tx: args.tx,
        rx: args.rx,
        gain_diag_db: args.gain_diag_db,
        gain_offdiag_db: args.gain_offdiag_db,
        total_power: args.total_power,
        master_seed: args.seed,
        realizations: 1,
        ..ExperimentConfig::default()
    };
    let spec = harness::generate_network(&cfg, args.realization)?;
    NetworkDocument::new(spec).save(&args.output)?;
    println!("wrote {}", args.output.display());
    Ok(())
}

fn run_solve(args: SolveArgs) -> anyhow::Result<()> {
    let algorithm: Algorithm = args.algorithm.parse()?;
    let doc = NetworkDocument::load(&args.input)
        .with_context(|| format!("loading {}", args.input.display()))?;
    let config = SolverConfig {
        tol: args.tol,
        max_iters: args.max_iters,
        init: parse_init(&args.init, args.seed)?,
        record_trace: true,
    };

    // Colored noise / weighted power: solve the whitened equivalent and map
    // the solution back to the original network.
    let whitened = doc.noise.is_some() || doc.power_weights.is_some();
    let noise = doc
        .noise
        .clone()
        .unwrap_or_else(|| whitening::NoiseModel::identity(&doc.spec));
    let power_weights = doc
        .power_weights
        .clone()
        .unwrap_or_else(|| whitening::PowerWeights::identity(&doc.spec));
    let work_spec = if whitened {
        whitening::to_equivalent(&doc.spec, &noise, &power_weights)?
    } else {
        doc.spec.clone()
    };

    let runs = harness::run_convergence(&work_spec, &[algorithm], &config);
    let result: SolveResult = runs.into_iter().next().unwrap().outcome?;

    let sigma_out = if whitened {
        whitening::recover_solution(&result.sigma, &power_weights)?
    } else {
        result.sigma.clone()
    };

    let scale = if args.bits { std::f64::consts::LN_2 } else { 1.0 };
    let summary = serde_json::json!({
        "algorithm": algorithm.to_string(),
        "wsr": result.wsr / scale,
        "unit": if args.bits { "bits" } else { "nats" },
        "iterations": result.iterations,
        "converged": result.converged,
        "whitened": whitened,
        "sigma": covariances_to_entries(&sigma_out),
        "sigma_hat": covariances_to_entries(&result.sigma_hat),
    });

    let json_path = stem_with(&args.output, ".json");
    std::fs::write(&json_path, serde_json::to_string_pretty(&summary)?)?;
    let csv_path = stem_with(&args.output, ".trace.csv");
    let mut csv = std::fs::File::create(&csv_path)?;
    harness::write_trace_csv(&mut csv, result.trace.as_ref().unwrap(), scale)?;

    println!(
        "{algorithm}: wsr {:.9} {} in {} iterations (converged: {})",
        result.wsr / scale,
        if args.bits { "bits" } else { "nats" },
        result.iterations,
        result.converged
    );
    println!("wrote {} and {}", json_path.display(), csv_path.display());
    Ok(())
}

fn run_bench(args: BenchArgs) -> anyhow::Result<()> {
    let mut base = match &args.config {
        Some(path) => serde_json::from_str::<ExperimentConfig>(
            &std::fs::read_to_string(path)
                .with_context(|| format!("loading {}", path.display()))?,
        )?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = args.links {
        base.links = v;
    }
    if let Some(v) = args.tx {
        base.tx = v;
    }
    if let Some(v) = args.rx {
        base.rx = v;
    }
    if let Some(v) = args.gain_diag_db {
        base.gain_diag_db = v;
    }
    if let Some(v) = args.total_power {
        base.total_power = v;
    }
    if let Some(v) = args.realizations {
        base.realizations = v;
    }
    if let Some(v) = args.seed {
        base.master_seed = v;
    }
    if !args.thresholds.is_empty() {
        base.thresholds = args.thresholds.clone();
    }
    if !args.algorithms.is_empty() {
        base.algorithms = args
            .algorithms
            .iter()
            .map(|s| s.parse())
            .collect::<Result<_, _>>()?;
    }
    let gains = if args.gain_offdiag_db.is_empty() {
        vec![base.gain_offdiag_db]
    } else {
        args.gain_offdiag_db.clone()
    };

    let mut reports: Vec<BenchReport> = Vec::new();
    for gain in gains {
        let cfg = ExperimentConfig {
            gain_offdiag_db: gain,
            ..base.clone()
        };
        eprintln!(
            "bench: {} realizations at {gain} dB off-diagonal gain ...",
            cfg.realizations
        );
        reports.push(harness::run_table(&cfg)?);
    }

    let json_path = stem_with(&args.output, ".json");
    let payload = if reports.len() == 1 {
        serde_json::to_string_pretty(&reports[0])?
    } else {
        serde_json::to_string_pretty(&serde_json::json!({ "reports": reports }))?
    };
    std::fs::write(&json_path, payload)?;

    let csv_path = stem_with(&args.output, ".csv");
    let mut csv = String::new();
    for (i, report) in reports.iter().enumerate() {
        let text = report.to_csv();
        if i == 0 {
            csv.push_str(&text);
        } else {
            // skip the repeated header
            csv.extend(text.splitn(2, '\n').nth(1).map(str::to_owned));
        }
    }
    std::fs::write(&csv_path, &csv)?;

    for report in &reports {
        for cell in &report.cells {
            println!(
                "{} @ {} dB, threshold {:.2}: mean {:.3} iterations ({} / {} converged)",
                cell.algorithm,
                cell.gain_offdiag_db,
                cell.threshold,
                cell.mean_iters,
                cell.n_converged,
                cell.n_total
            );
        }
    }
    println!("wrote {} and {}", json_path.display(), csv_path.display());
    Ok(())
}

fn run_diag(args: DiagArgs) -> anyhow::Result<()> {
    let doc = NetworkDocument::load(&args.input)
        .with_context(|| format!("loading {}", args.input.display()))?;
    let config = SolverConfig {
        tol: args.tol,
        max_iters: args.max_iters,
        ..SolverConfig::default()
    };
    let result = duallink_core::dual_link::solve(&doc.spec, &config)?;
    let report = kkt::diagnostics_report(
        &doc.spec,
        &result,
        &args.alphas,
        args.fd_directions,
        args.seed,
    )?;
    let json_path = stem_with(&args.output, ".json");
    std::fs::write(&json_path, serde_json::to_string_pretty(&report)?)?;
    println!(
        "wsr {:.9} nats; saddle-point residual {:.3e}; transformation residual {:.3e}",
        report.wsr,
        report.saddle_point.max_residual(),
        report.transformation_residual
    );
    println!("wrote {}", json_path.display());
    Ok(())
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Gen(args) => run_gen(args),
        Command::Solve(args) => run_solve(args),
        Command::Bench(args) => run_bench(args),
        Command::Diag(args) => run_diag(args),
    }
}
