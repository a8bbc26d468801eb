//! `imbench`: generate synthetic imbalanced datasets, fit penalized
//! logistic models, run forest importances, execute the full benchmark
//! grid, or audit a real CSV with injected noise features.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
//! Standard output stays machine-silent except for `--print-config`;
//! progress goes to standard error.

mod manifest;

use clap::{Args, Parser, Subcommand, ValueEnum};
use imbench_core::audit::{self, AuditConfig};
use imbench_core::bench::{BenchConfig, ForestPair};
use imbench_core::datagen::{self, DatasetSpec};
use imbench_core::dataset::{ingest_csv, Dataset};
use imbench_core::error::Error as CoreError;
use imbench_core::glm::{self, CiMethod, DesignMatrix};
use imbench_core::penalized::{self, LogFConfig, NetConfig};
use manifest::ManifestBuilder;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "imbench", version, about = "Imbalanced-data feature selection benchmark")]
struct Cli {
    /// Worker threads for the run (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic datasets (CSV + metadata sidecar).
    Gen(GenArgs),
    /// Fit one regression model on a CSV.
    Fit(FitArgs),
    /// Run the repeated-split forest protocol on a CSV.
    Forest(ForestArgs),
    /// Run the full benchmark over a dataset grid.
    Bench(BenchArgs),
    /// Audit a real CSV: inject noise, run both tracks, emit the report.
    Audit(AuditArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Dataset spec as a JSON file.
    #[arg(long, conflicts_with_all = ["paper_grid", "standin"])]
    spec: Option<PathBuf>,
    /// Write all fifteen grid datasets.
    #[arg(long, conflicts_with = "standin")]
    paper_grid: bool,
    /// Write a bundled stand-in dataset (choices: school1, null).
    #[arg(long)]
    standin: Option<String>,
    /// Output CSV path (single-dataset modes).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output directory (grid mode).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Overrides the seed in the spec / derives the grid seeds.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Ml,
    Firth,
    Logf,
    Lasso,
    Ridge,
    Enet,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum CiArg {
    Profile,
    Wald,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "Y")]
    outcome: String,
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long, value_enum, default_value = "profile")]
    ci: CiArg,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Penalty for lasso/ridge/enet; cross-validated when omitted.
    #[arg(long)]
    lambda: Option<f64>,
    /// Elastic-net mixing (0 = lasso, 1 = ridge) when --method enet.
    #[arg(long)]
    alpha_mix: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum AlgoArg {
    Cart,
    Cif,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ImportanceArg {
    Gini,
    PermAcc,
    PermAuc,
}

#[derive(Args)]
struct ForestArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "Y")]
    outcome: String,
    #[arg(long, value_enum)]
    algo: AlgoArg,
    #[arg(long, value_enum)]
    importance: ImportanceArg,
    #[arg(long, default_value_t = 500)]
    ntree: usize,
    /// Candidate features per node: `sqrt` or an integer.
    #[arg(long, default_value = "sqrt")]
    mtry: String,
    #[arg(long, default_value_t = 30)]
    reps: usize,
    #[arg(long, default_value_t = 0.7)]
    split: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ProfileArg {
    Desk,
    Paper,
}

#[derive(Args)]
struct BenchArgs {
    /// TOML config mirroring the benchmark configuration; omitted fields
    /// take the profile defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "desk")]
    profile: ProfileArg,
    #[arg(long, default_value = "bench_out")]
    out_dir: PathBuf,
    /// Overrides the config's root seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Print the effective config to standard output and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "Y")]
    outcome: String,
    /// `default` injects four binary + three continuous noise features;
    /// `none` audits the file as-is.
    #[arg(long, default_value = "default")]
    add_noise: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    bootstrap_reps: usize,
    #[arg(long, default_value_t = 30)]
    forest_reps: usize,
    #[arg(long, default_value_t = 500)]
    ntree: usize,
    #[arg(long, default_value = "audit_report")]
    out_dir: PathBuf,
}

/// Errors exit with 1, config/spec problems with 2.
enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let usage = matches!(
            e,
            CoreError::InvalidSpec(_)
                | CoreError::InfeasibleCell { .. }
                | CoreError::Unsupported(_)
        );
        let msg = {
            let mut parts = vec![e.to_string()];
            let mut src: Option<&dyn std::error::Error> = std::error::Error::source(&e);
            while let Some(s) = src {
                parts.push(s.to_string());
                src = s.source();
            }
            parts.dedup();
            parts.join(": ")
        };
        if usage {
            CliError::Usage(msg)
        } else {
            CliError::Runtime(msg)
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("imbench: failed to size the worker pool: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Forest(args) => cmd_forest(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Audit(args) => cmd_audit(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Runtime(msg)) => {
            eprintln!("imbench: error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("imbench: config error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_dataset(path: &Path, outcome: &str) -> Result<Dataset, CliError> {
    let (ds, report) = ingest_csv(path, outcome)?;
    if report.dropped_missing > 0 {
        eprintln!(
            "imbench: dropped {} of {} rows with missing values",
            report.dropped_missing, report.n_rows_read
        );
    }
    for note in &report.encodings {
        eprintln!("imbench: {note}");
    }
    Ok(ds)
}

// ---------------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------------

fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    if args.paper_grid {
        let out_dir = args
            .out_dir
            .ok_or_else(|| CliError::Usage("--paper-grid requires --out-dir".into()))?;
        let root = args.seed.unwrap_or(0);
        let grid = datagen::paper_grid(root);
        let serialized = serde_json::to_string(&grid).unwrap_or_default();
        let builder = ManifestBuilder::start("gen --paper-grid", &serialized, root);
        std::fs::create_dir_all(&out_dir)?;
        let mut outputs = Vec::new();
        for spec in &grid {
            let ds = datagen::sample_dataset(spec)?;
            let csv = out_dir.join(format!("{}.csv", spec.name));
            let sidecar = ds.write_with_sidecar(&csv, Some(spec))?;
            eprintln!("imbench: wrote {}", csv.display());
            outputs.push(csv);
            outputs.push(sidecar);
        }
        builder.finish(&out_dir.join("manifest.json"), &outputs)?;
        return Ok(());
    }

    let spec: DatasetSpec = if let Some(name) = &args.standin {
        let seed = args.seed.unwrap_or(0);
        match name.as_str() {
            "school1" => audit::standin_school1_spec(seed),
            "null" => audit::standin_null_spec(seed),
            other => {
                return Err(CliError::Usage(format!(
                    "unknown stand-in {other:?} (choices: school1, null)"
                )))
            }
        }
    } else {
        let path = args
            .spec
            .ok_or_else(|| CliError::Usage("gen needs --spec, --paper-grid or --standin".into()))?;
        let text = std::fs::read_to_string(&path)?;
        let mut spec = DatasetSpec::from_json_str(&text)?;
        if let Some(seed) = args.seed {
            spec.seed = seed;
        }
        spec
    };
    let out = args
        .out
        .ok_or_else(|| CliError::Usage("single-dataset gen requires --out".into()))?;
    let serialized = serde_json::to_string(&spec).unwrap_or_default();
    let builder = ManifestBuilder::start("gen", &serialized, spec.seed);
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let ds = datagen::sample_dataset(&spec)?;
    let sidecar = ds.write_with_sidecar(&out, Some(&spec))?;
    eprintln!("imbench: wrote {} ({} rows)", out.display(), ds.n_rows());
    let stem = out.file_stem().unwrap_or_default().to_string_lossy().to_string();
    let manifest_path = out.with_file_name(format!("{stem}.manifest.json"));
    builder.finish(&manifest_path, &[out, sidecar])?;
    Ok(())
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

fn cmd_fit(args: FitArgs) -> Result<(), CliError> {
    let ds = load_dataset(&args.data, &args.outcome)?;
    let design = DesignMatrix::from_dataset(&ds, true);
    let y = &ds.outcome;
    let alpha = args.alpha;
    let seed = args.seed;

    #[derive(serde::Serialize)]
    struct EffectiveFit<'a> {
        method: &'a str,
        ci: &'a str,
        alpha: f64,
        lambda: Option<f64>,
        alpha_mix: Option<f64>,
        seed: u64,
    }

    let method_label = match args.method {
        MethodArg::Ml => "ml",
        MethodArg::Firth => "firth",
        MethodArg::Logf => "logf",
        MethodArg::Lasso => "lasso",
        MethodArg::Ridge => "ridge",
        MethodArg::Enet => "enet",
    };
    let ci_label = match args.ci {
        CiArg::Profile => "profile",
        CiArg::Wald => "wald",
    };

    let mut chosen_lambda = args.lambda;
    let mut chosen_mix = args.alpha_mix;
    let (fit, ci, p_raw): (glm::FitResult, Option<Vec<(f64, f64)>>, Option<Vec<f64>>) =
        match args.method {
            MethodArg::Ml | MethodArg::Firth | MethodArg::Logf => {
                let logf_cfg = LogFConfig::default();
                let fit = match args.method {
                    MethodArg::Ml => glm::fit_ml(&design, y)?,
                    MethodArg::Firth => penalized::fit_firth(&design, y)?,
                    MethodArg::Logf => penalized::fit_logf(&design, y, logf_cfg)?,
                    _ => unreachable!(),
                };
                let ci = match (args.method, args.ci) {
                    (_, CiArg::Wald) => glm::wald_intervals(&fit, alpha),
                    (MethodArg::Ml, CiArg::Profile) => {
                        glm::confidence_intervals(&fit, &design, y, CiMethod::Profile, alpha)
                    }
                    (MethodArg::Firth, CiArg::Profile) => {
                        penalized::firth_confidence_intervals(&design, y, &fit, alpha)?
                    }
                    (MethodArg::Logf, CiArg::Profile) => {
                        penalized::logf_confidence_intervals(&design, y, logf_cfg, &fit, alpha)
                    }
                    _ => unreachable!(),
                };
                let p: Vec<f64> = (1..fit.coefficients.len())
                    .map(|j| match args.method {
                        MethodArg::Ml => Ok(glm::profile_lrt_p_value(&fit, &design, y, j)),
                        MethodArg::Firth => penalized::firth_lrt_p_value(&design, y, &fit, j),
                        MethodArg::Logf => {
                            Ok(penalized::logf_lrt_p_value(&design, y, logf_cfg, &fit, j))
                        }
                        _ => unreachable!(),
                    })
                    .collect::<Result<_, _>>()?;
                (fit, Some(ci), Some(p))
            }
            MethodArg::Lasso | MethodArg::Ridge | MethodArg::Enet => {
                let base = NetConfig::default();
                let cfg = match (args.lambda, args.method) {
                    (Some(lambda), MethodArg::Lasso) => {
                        NetConfig { lambda, alpha_mix: 0.0, ..base }
                    }
                    (Some(lambda), MethodArg::Ridge) => {
                        NetConfig { lambda, alpha_mix: 1.0, ..base }
                    }
                    (Some(lambda), _) => NetConfig {
                        lambda,
                        alpha_mix: args.alpha_mix.unwrap_or(0.5),
                        ..base
                    },
                    (None, method) => {
                        let grid: Vec<f64> = match method {
                            MethodArg::Lasso => vec![0.0],
                            MethodArg::Ridge => vec![1.0],
                            _ => penalized::default_alpha_grid(),
                        };
                        let choice = penalized::cv_tune(&design, y, &grid, &base, seed)?;
                        eprintln!(
                            "imbench: cross-validation chose lambda={} alpha_mix={}",
                            choice.config.lambda, choice.config.alpha_mix
                        );
                        choice.config
                    }
                };
                chosen_lambda = Some(cfg.lambda);
                chosen_mix = Some(cfg.alpha_mix);
                let fit = penalized::fit_net(&design, y, &cfg)?;
                (fit, None, None)
            }
        };

    let effective = EffectiveFit {
        method: method_label,
        ci: ci_label,
        alpha,
        lambda: chosen_lambda,
        alpha_mix: chosen_mix,
        seed,
    };
    let serialized = serde_json::to_string(&effective).unwrap_or_default();
    let builder = ManifestBuilder::start("fit", &serialized, seed);

    let mut out = String::from("feature,coefficient,odds_ratio,ci_lo,ci_hi,p_raw,separation\n");
    for j in 0..fit.coefficients.len() {
        let (lo, hi) = ci.as_ref().map_or((String::new(), String::new()), |c| {
            (c[j].0.to_string(), c[j].1.to_string())
        });
        let p = if j == 0 {
            String::new()
        } else {
            p_raw
                .as_ref()
                .map(|p| p[j - 1].to_string())
                .unwrap_or_default()
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fit.names[j], fit.coefficients[j], fit.odds_ratios[j], lo, hi, p, fit.separated[j]
        );
    }
    std::fs::create_dir_all(&args.out_dir)?;
    let table = args.out_dir.join("fit.csv");
    std::fs::write(&table, out)?;
    eprintln!("imbench: wrote {}", table.display());
    builder.finish(&args.out_dir.join("manifest.json"), &[table])?;
    Ok(())
}

// ---------------------------------------------------------------------------
// forest
// ---------------------------------------------------------------------------

fn cmd_forest(args: ForestArgs) -> Result<(), CliError> {
    let ds = load_dataset(&args.data, &args.outcome)?;
    let mtry = match args.mtry.as_str() {
        "sqrt" => None,
        other => Some(other.parse::<usize>().map_err(|_| {
            CliError::Usage(format!("--mtry must be `sqrt` or an integer, got {other:?}"))
        })?),
    };
    let pair = match (args.algo, args.importance) {
        (AlgoArg::Cart, ImportanceArg::Gini) => ForestPair::CartGini,
        (AlgoArg::Cart, ImportanceArg::PermAcc) => ForestPair::CartPermAccuracy,
        (AlgoArg::Cif, ImportanceArg::PermAcc) => ForestPair::CifPermAccuracy,
        (AlgoArg::Cif, ImportanceArg::PermAuc) => ForestPair::CifPermAuc,
        (AlgoArg::Cart, ImportanceArg::PermAuc) => {
            return Err(CliError::Usage(
                "cart pairs with gini or perm-acc; perm-auc pairs with cif".into(),
            ))
        }
        (AlgoArg::Cif, ImportanceArg::Gini) => {
            return Err(CliError::Usage(
                "gini importance applies to the cart forest only".into(),
            ))
        }
    };
    let cfg = BenchConfig {
        forest_repeats: args.reps,
        forest_split: args.split,
        forest_pairs: vec![pair],
        n_trees: args.ntree,
        mtry,
        root_seed: args.seed,
        ..BenchConfig::desk(args.seed)
    };
    let serialized = serde_json::to_string(&(
        pair.label(),
        args.ntree,
        &args.mtry,
        args.reps,
        args.split,
        args.seed,
    ))
    .unwrap_or_default();
    let builder = ManifestBuilder::start("forest", &serialized, args.seed);
    let out = imbench_core::bench::run_forest_protocol(&ds, &cfg, 0)?;
    let (_, report) = &out.reports[0];
    let mut text = String::from("feature,mean_importance,rank,detected\n");
    for (f, name) in report.names.iter().enumerate() {
        let _ = writeln!(
            text,
            "{},{},{},{}",
            name, report.values[f], report.ranks[f], report.detected[f]
        );
    }
    std::fs::create_dir_all(&args.out_dir)?;
    let table = args.out_dir.join("importance.csv");
    std::fs::write(&table, text)?;
    let q = &out.quality[0];
    eprintln!(
        "imbench: wrote {} (mean auc train {:.3} / test {:.3})",
        table.display(),
        q.auc_train,
        q.auc_test
    );
    builder.finish(&args.out_dir.join("manifest.json"), &[table])?;
    Ok(())
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let mut cfg = BenchConfig::from_toml_str(&text)?;
            if let Some(seed) = args.seed {
                cfg.root_seed = seed;
            }
            cfg
        }
        None => match args.profile {
            ProfileArg::Desk => BenchConfig::desk(args.seed.unwrap_or(0)),
            ProfileArg::Paper => BenchConfig::paper(args.seed.unwrap_or(0)),
        },
    };
    // A config without a grid falls back to the profile's grid, seeded by
    // the effective root seed.
    if cfg.grid.is_empty() {
        cfg.grid = match args.profile {
            ProfileArg::Desk => datagen::desk_grid(cfg.root_seed),
            ProfileArg::Paper => datagen::paper_grid(cfg.root_seed),
        };
    }
    cfg.validate()?;
    let serialized = cfg.to_toml_string();
    if args.print_config {
        print!("{serialized}");
        return Ok(());
    }
    let builder = ManifestBuilder::start("bench", &serialized, cfg.root_seed);
    eprintln!(
        "imbench: running {} grid cells ({} forest pairs, {} regression methods, {} bootstrap reps)",
        cfg.grid.len(),
        cfg.forest_pairs.len(),
        cfg.regression_methods.len(),
        cfg.bootstrap_reps
    );
    let result = imbench_core::bench::run_bench(&cfg)?;
    let outputs = result.write_tables(&args.out_dir)?;
    for path in &outputs {
        eprintln!("imbench: wrote {}", path.display());
    }
    builder.finish(&args.out_dir.join("manifest.json"), &outputs)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// audit
// ---------------------------------------------------------------------------

fn cmd_audit(args: AuditArgs) -> Result<(), CliError> {
    let ds = load_dataset(&args.data, &args.outcome)?;
    let cfg = AuditConfig {
        outcome_column: args.outcome.clone(),
        seed: args.seed,
        bootstrap_reps: args.bootstrap_reps,
        forest_repeats: args.forest_reps,
        n_trees: args.ntree,
        ..Default::default()
    };
    let data = match args.add_noise.as_str() {
        "default" => audit::inject_noise(&ds, &cfg)?,
        "none" => ds,
        other => {
            return Err(CliError::Usage(format!(
                "--add-noise takes `default` or `none`, got {other:?}"
            )))
        }
    };
    let serialized = serde_json::to_string(&cfg).unwrap_or_default();
    let builder = ManifestBuilder::start("audit", &serialized, cfg.seed);
    let report = audit::run_audit(&data, &cfg)?;
    let outputs = report.write_dir(&args.out_dir)?;
    for path in &outputs {
        eprintln!("imbench: wrote {}", path.display());
    }
    builder.finish(&args.out_dir.join("manifest.json"), &outputs)?;
    Ok(())
}
