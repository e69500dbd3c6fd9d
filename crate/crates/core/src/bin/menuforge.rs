//! Command-line front end: exact and approximately-optimal menu
//! computation, benchmarks, discretization, the bucket mechanism, and
//! the barrier instance, with JSON reports.

use clap::{Parser, Subcommand, ValueEnum};
use menuforge::barrier::{check_features, gen_barrier_with_k, BarrierError};
use menuforge::benchmarks::{benchmark_report, monopoly_price};
use menuforge::bucket::{
    bucket_revenue, bucket_to_menu, build_buckets, BucketError, BucketEvalMode,
};
use menuforge::discretize::{
    canonical_discretize, delta_bound, DeltaMode, DiscretizationParams, DiscretizeError,
};
use menuforge::dist::DistError;
use menuforge::io::{load_instance, load_menu, to_json_string, InstanceFile, IoError, MenuFile};
use menuforge::menu::{complexity_measures, revenue_exact, revenue_mc};
use menuforge::oracle::{brute_force_optimal, OracleError};
use menuforge::reduction::{run_reduction, ReductionError, SolverConfig};
use menuforge::symlp::{solve_modrev, SymLpError};
use menuforge::{DEFAULT_ORACLE_CAP, DEFAULT_REP_CAP, DEFAULT_SUPPORT_CAP};
use serde::Serialize;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "menuforge", version, about = "Optimal and approximately-optimal selling menus for a single buyer over a product distribution")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Instance file (menu file for `complexity`).
    #[arg(short = 'i', long, global = true)]
    input: Option<PathBuf>,
    /// Report destination; stdout when absent.
    #[arg(short = 'o', long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Monte-Carlo sample budget.
    #[arg(long, global = true, default_value_t = 100_000)]
    samples: usize,
    /// LP pivot / feasibility tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tolerance: f64,
    /// Largest enumerable support size.
    #[arg(long, global = true, default_value_t = DEFAULT_SUPPORT_CAP)]
    support_cap: usize,
    /// Largest number of canonical representatives in the symmetric LP.
    #[arg(long, global = true, default_value_t = DEFAULT_REP_CAP)]
    rep_cap: usize,
    /// Worker threads; default = logical cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Multiplier on the selling-separately proxy in parameter selection.
    #[arg(long, global = true, default_value_t = 2.0)]
    safety_factor: f64,
    /// Explicit barrier grid length (must be even).
    #[arg(long, global = true)]
    k_override: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve ModRevMax via the symmetry-reduced LP.
    Solve,
    /// Solve ModRevMax by full-support enumeration (tiny instances).
    Oracle,
    /// Run the unbounded-to-bounded reduction pipeline.
    Reduce,
    /// Standard revenue benchmarks (SRev, BRev, per-item monopoly).
    Bench,
    /// Build and evaluate the bucket mechanism.
    Bucketize {
        /// JSON array of per-item prices; per-item monopoly prices when absent.
        #[arg(long)]
        prices: Option<PathBuf>,
    },
    /// Evaluate a menu's revenue on an instance.
    Eval {
        #[arg(short = 'm', long)]
        menu: PathBuf,
    },
    /// Canonically discretize an instance (values, then probabilities).
    Discretize,
    /// Generate the barrier instance and its feature report.
    Barrier {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 1_000_000)]
        max_retries: usize,
    },
    /// Complexity measures of a menu file.
    Complexity,
}

enum CliError {
    Validation(String),
    Budget(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Budget(_) => 3,
        }
    }
    fn msg(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Budget(m) => m,
        }
    }
}

fn dist_err(e: DistError) -> CliError {
    match e {
        DistError::SupportTooLarge { .. } | DistError::SupportOverflow => {
            CliError::Budget(e.to_string())
        }
        _ => CliError::Validation(e.to_string()),
    }
}

fn symlp_err(e: SymLpError) -> CliError {
    match e {
        SymLpError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
        _ => CliError::Validation(e.to_string()),
    }
}

fn io_err(e: IoError) -> CliError {
    CliError::Validation(e.to_string())
}

fn oracle_err(e: OracleError) -> CliError {
    match e {
        OracleError::SupportTooLarge { .. } => CliError::Budget(e.to_string()),
        OracleError::SymLp(inner) => symlp_err(inner),
    }
}

fn reduction_err(e: ReductionError) -> CliError {
    match e {
        ReductionError::SymLp(inner) => symlp_err(inner),
        ReductionError::Dist(inner) => dist_err(inner),
        ReductionError::Oracle(inner) => oracle_err(inner),
        ReductionError::Discretize(DiscretizeError::Dist(inner)) => dist_err(inner),
        other => CliError::Validation(other.to_string()),
    }
}

fn bucket_err(e: BucketError) -> CliError {
    match e {
        BucketError::MenuTooLarge { .. } | BucketError::JointTooLarge { .. } => {
            CliError::Budget(e.to_string())
        }
        BucketError::Dist(inner) => dist_err(inner),
        _ => CliError::Validation(e.to_string()),
    }
}

fn barrier_err(e: BarrierError) -> CliError {
    match e {
        BarrierError::SeparationFailed(_) => CliError::Budget(e.to_string()),
        BarrierError::Dist(inner) => dist_err(inner),
        _ => CliError::Validation(e.to_string()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(
        env_logger::Env::new().filter_or("MENUFORGE_LOG", "warn"),
    )
    .init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot configure {t} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.msg());
            ExitCode::from(e.code())
        }
    }
}

fn require_input(cli: &Cli) -> Result<PathBuf, CliError> {
    cli.input
        .clone()
        .ok_or_else(|| CliError::Validation("missing required --input".into()))
}

fn require_epsilon(cli: &Cli) -> Result<f64, CliError> {
    let eps = cli
        .epsilon
        .ok_or_else(|| CliError::Validation("missing required --epsilon".into()))?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(CliError::Validation(format!(
            "epsilon must lie in (0,1), got {eps}"
        )));
    }
    Ok(eps)
}

fn emit<T: Serialize>(cli: &Cli, report: &T) -> Result<(), CliError> {
    let body = match cli.format {
        Format::Json => to_json_string(report).map_err(io_err)?,
        Format::Text => {
            let v = serde_json::to_value(report).map_err(|e| CliError::Validation(e.to_string()))?;
            let mut out = String::new();
            render_text(&v, "", &mut out);
            out
        }
    };
    match &cli.output {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

/// Flat `key: value` rendering of a JSON report for --format text.
fn render_text(v: &serde_json::Value, prefix: &str, out: &mut String) {
    match v {
        serde_json::Value::Object(map) => {
            for (k, val) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                render_text(val, &key, out);
            }
        }
        serde_json::Value::Array(items) if items.len() > 8 => {
            out.push_str(&format!("{prefix}: [{} entries]\n", items.len()));
        }
        other => {
            out.push_str(&format!("{prefix}: {other}\n"));
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.cmd {
        Cmd::Solve => {
            let d = load_instance(&require_input(cli)?).map_err(io_err)?;
            let w = vec![0.0; d.n()];
            let sol = solve_modrev(&d, &w, cli.rep_cap, cli.tolerance).map_err(symlp_err)?;
            emit(cli, &json!({
                "objective": sol.objective,
                "num_reps": sol.num_reps,
                "seed": cli.seed,
                "menu": MenuFile::from_menu(&sol.menu),
            }))
        }
        Cmd::Oracle => {
            let d = load_instance(&require_input(cli)?).map_err(io_err)?;
            let w = vec![0.0; d.n()];
            let cap = cli.support_cap.min(DEFAULT_ORACLE_CAP.max(cli.rep_cap));
            let sol = brute_force_optimal(&d, &w, cap, cli.tolerance).map_err(oracle_err)?;
            emit(cli, &json!({
                "objective": sol.objective,
                "num_reps": sol.num_reps,
                "seed": cli.seed,
                "menu": MenuFile::from_menu(&sol.menu),
            }))
        }
        Cmd::Reduce => {
            let d = load_instance(&require_input(cli)?).map_err(io_err)?;
            let eps = require_epsilon(cli)?;
            let cfg = SolverConfig {
                support_cap: cli.support_cap,
                rep_cap: cli.rep_cap,
                oracle_cap: DEFAULT_ORACLE_CAP,
                mc_samples: cli.samples,
                seed: cli.seed,
                tolerance: cli.tolerance,
                safety_factor: cli.safety_factor,
                c_delta: 1.0,
            };
            let report = run_reduction(&d, eps, &cfg).map_err(reduction_err)?;
            let provenance = report.params.as_ref().map(|p| {
                json!({"h": p.h, "e": p.e, "t": p.t, "delta": report.delta, "rhat": p.rhat})
            });
            emit(cli, &json!({"provenance": provenance, "report": report}))
        }
        Cmd::Bench => {
            let d = load_instance(&require_input(cli)?).map_err(io_err)?;
            let report = benchmark_report(&d, cli.support_cap, 100_000, cli.samples, cli.seed);
            emit(cli, &json!({"seed": cli.seed, "report": report}))
        }
        Cmd::Bucketize { prices } => {
            let d = load_instance(&require_input(cli)?).map_err(io_err)?;
            let eps = require_epsilon(cli)?;
            let p: Vec<f64> = match prices {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| {
                        CliError::Validation(format!("cannot read {}: {e}", path.display()))
                    })?;
                    serde_json::from_str(&text)
                        .map_err(|e| CliError::Validation(format!("bad price file: {e}")))?
                }
                None => d
                    .marginals()
                    .iter()
                    .map(|m| monopoly_price(m, 0.0).0.unwrap_or(0.0))
                    .collect(),
            };
            if p.len() != d.n() {
                return Err(CliError::Validation(format!(
                    "{} prices for {} items",
                    p.len(),
                    d.n()
                )));
            }
            let q: Vec<f64> = (0..d.n()).map(|i| d.marginal(i).pr_geq(p[i])).collect();
            let bm = build_buckets(&p, &q, eps).map_err(bucket_err)?;
            let srev: f64 = p.iter().zip(&q).map(|(&pi, &qi)| pi * qi).sum();
            let (revenue, stderr) = bucket_revenue(
                &bm,
                &d,
                BucketEvalMode::Mc {
                    samples: cli.samples,
                    seed: cli.seed,
                },
            )
            .map_err(bucket_err)?;
            let menu = bucket_to_menu(&bm, d.n(), 10_000).ok();
            emit(cli, &json!({
                "mechanism": bm,
                "option_count": bm.option_count().to_string(),
                "bucket_count": bm.bucket_count(),
                "srev_at_prices": srev,
                "revenue_mc": revenue,
                "revenue_stderr": stderr,
                "seed": cli.seed,
                "menu": menu.map(|m| MenuFile::from_menu(&m)),
            }))
        }
        Cmd::Eval { menu } => {
            let d = load_instance(&require_input(cli)?).map_err(io_err)?;
            let m = load_menu(menu).map_err(io_err)?;
            if m.n != d.n() {
                return Err(CliError::Validation(format!(
                    "menu has {} items, instance has {}",
                    m.n,
                    d.n()
                )));
            }
            match revenue_exact(&m, &d, cli.support_cap) {
                Ok(value) => emit(cli, &json!({"revenue": value, "method": "exact"})),
                Err(_) => {
                    let (value, stderr) = revenue_mc(&m, &d, cli.samples, cli.seed);
                    emit(cli, &json!({
                        "revenue": value,
                        "stderr": stderr,
                        "method": "mc",
                        "samples": cli.samples,
                        "seed": cli.seed,
                    }))
                }
            }
        }
        Cmd::Discretize => {
            let d = load_instance(&require_input(cli)?).map_err(io_err)?;
            let eps = require_epsilon(cli)?;
            let max_val: f64 = d
                .marginals()
                .iter()
                .map(|m| m.max_value())
                .fold(0.0, f64::max)
                * d.k().min(d.n()) as f64;
            if max_val <= 0.0 {
                return Err(CliError::Validation("all-zero instance".into()));
            }
            let params = DiscretizationParams {
                delta: eps,
                t: 1.0,
                rev_proxy: max_val,
                k: d.k(),
                n: d.n(),
            };
            let (dd, coupling) =
                canonical_discretize(&d, &params).map_err(|e| CliError::Validation(e.to_string()))?;
            let analytic = delta_bound(&d, &coupling, &params, DeltaMode::Analytic, cli.support_cap)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            emit(cli, &json!({
                "delta": eps,
                "rev_proxy": max_val,
                "analytic_delta_bound": analytic,
                "instance": InstanceFile::from_dist(&dd),
            }))
        }
        Cmd::Barrier { n, max_retries } => {
            let eps = cli.epsilon.unwrap_or(1.0 / 9.0);
            let (d, spec) = gen_barrier_with_k(*n, eps, cli.seed, *max_retries, cli.k_override)
                .map_err(barrier_err)?;
            let features = check_features(&d, &spec, cli.samples.max(2), cli.seed);
            emit(cli, &json!({
                "spec": {"n": spec.n, "eps": spec.eps, "seed": spec.seed, "k": spec.k},
                "features": features,
                "instance": InstanceFile::from_dist(&d),
            }))
        }
        Cmd::Complexity => {
            let m = load_menu(&require_input(cli)?).map_err(io_err)?;
            emit(cli, &json!({
                "option_count": m.option_count(),
                "measures": complexity_measures(&m),
            }))
        }
    }
}
