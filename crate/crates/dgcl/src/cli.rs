//! Command-line surface: train, eval, ablate, sweep, export-figures.
//!
//! Every subcommand takes `--config <path>` (key-value file), `--seed N`
//! and `--set key=value` overrides; metrics go to standard out as JSON,
//! CSVs and checkpoints land under `--out`. CSV files open with a
//! `# schema: ...` comment line naming their column layout version.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::checkpoint::Checkpoint;
use crate::config::{Ablation, TrainConfig};
use crate::diffusion::ScheduleKind;
use crate::error::DgclError;
use crate::trainer::{dataset_from_config, train};

pub const ABLATE_SCHEMA: &str = "dgcl-ablate-v1";
pub const SWEEP_SCHEMA: &str = "dgcl-sweep-v1";
pub const FIGURES_SCHEMA: &str = "dgcl-figures-v1";

const METRIC_COLUMNS: [&str; 4] = ["recall@10", "ndcg@10", "recall@20", "ndcg@20"];

/// Sweep grids, matching the reported search spaces.
pub const LAMBDA_GRID: [f64; 3] = [0.1, 0.2, 0.3];
pub const DIFF_STEPS_GRID: [usize; 4] = [10, 20, 30, 50];
pub const LAYERS_GRID: [usize; 3] = [1, 2, 3];

#[derive(Parser)]
#[command(name = "dgcl", version, about = "Diffusion-augmented graph contrastive learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write a checkpoint plus a JSONL report
    Train(CommonArgs),
    /// Evaluate a checkpoint and print metrics JSON
    Eval(EvalArgs),
    /// Run every experiment arm and emit a comparison CSV
    Ablate(CommonArgs),
    /// Sweep hyperparameter grids and emit one CSV row per cell
    Sweep(SweepArgs),
    /// Convert a sweep CSV into long-format plot data
    ExportFigures(ExportArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Key-value config file; defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed override
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for checkpoints and CSVs
    #[arg(long, default_value = "dgcl-out")]
    out: PathBuf,
    /// Config overrides, repeatable: --set key=value
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Checkpoint produced by `dgcl train`
    #[arg(long)]
    checkpoint: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Restrict to one parameter: lambda, T (diff-steps), L (layers) or
    /// schedule (beta-schedule); sweeps all four when omitted
    #[arg(long)]
    param: Option<String>,
}

#[derive(Args)]
struct ExportArgs {
    /// Sweep CSV produced by `dgcl sweep`
    #[arg(long)]
    input: PathBuf,
    /// Output directory
    #[arg(long, default_value = "dgcl-out")]
    out: PathBuf,
}

/// Entry point used by the binary and by tests. Returns the exit code.
pub fn run_cli<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own usage/help text and picks the exit code
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match cli.command {
        Command::Train(args) => cmd_train(&args),
        Command::Eval(args) => cmd_eval(&args),
        Command::Ablate(args) => cmd_ablate(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::ExportFigures(args) => cmd_export_figures(&args),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn resolve_config(args: &CommonArgs) -> Result<TrainConfig, DgclError> {
    let mut cfg = match &args.config {
        Some(path) => TrainConfig::load(path)?,
        None => TrainConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.apply_overrides(&args.set)?;
    Ok(cfg)
}

fn ensure_out_dir(dir: &Path) -> Result<(), DgclError> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn metrics_row(metrics: &std::collections::BTreeMap<String, f64>) -> String {
    METRIC_COLUMNS
        .iter()
        .map(|m| {
            metrics
                .get(*m)
                .map(|v| format!("{v:.6}"))
                .unwrap_or_default()
        })
        .collect::<Vec<_>>()
        .join(",")
}

fn cmd_train(args: &CommonArgs) -> Result<(), DgclError> {
    let cfg = resolve_config(args)?;
    ensure_out_dir(&args.out)?;
    let ds = dataset_from_config(&cfg)?;
    let (model, report) = train(&cfg, &ds)?;

    let ckpt_path = args.out.join("model.ckpt");
    Checkpoint::from_model(&model, report.epochs.len()).save(&ckpt_path)?;
    let report_path = args.out.join("report.jsonl");
    std::fs::write(&report_path, report.to_jsonl())?;

    let stdout_doc = serde_json::json!({
        "dataset": ds.summary(),
        "arm": report.arm,
        "epochs_run": report.epochs.len(),
        "final_metrics": report.final_metrics,
        "checkpoint": ckpt_path.display().to_string(),
        "report": report_path.display().to_string(),
    });
    println!("{stdout_doc}");
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<(), DgclError> {
    let ckpt = Checkpoint::load(&args.checkpoint)?;
    // the config echo pins the dataset and split, so evaluation sees the
    // exact holdout the checkpoint was trained against
    let mut cfg = ckpt.config.clone();
    if let Some(seed) = args.common.seed {
        cfg.seed = seed;
    }
    cfg.apply_overrides(&args.common.set)?;
    let ds = dataset_from_config(&cfg)?;
    let model = ckpt.into_model(&ds)?;
    let adj = crate::data::build_norm_adjacency(&ds)?;
    let result = model.evaluate(&adj, &ds).map_err(crate::error::TrainError::from)?;
    let doc = serde_json::json!({
        "dataset": ds.summary(),
        "metrics": result.metrics,
        "evaluated_users": result.evaluated_users,
    });
    println!("{doc}");
    Ok(())
}

fn cmd_ablate(args: &CommonArgs) -> Result<(), DgclError> {
    let base = resolve_config(args)?;
    ensure_out_dir(&args.out)?;
    let ds = dataset_from_config(&base)?;

    let mut csv = format!("# schema: {ABLATE_SCHEMA}\narm,{}\n", METRIC_COLUMNS.join(","));
    let mut summary = serde_json::Map::new();
    for arm in Ablation::ALL {
        let mut cfg = base.clone();
        cfg.ablation = arm;
        let (_, report) = train(&cfg, &ds)?;
        csv.push_str(&format!(
            "{},{}\n",
            arm.name(),
            metrics_row(&report.final_metrics)
        ));
        summary.insert(
            arm.name().to_string(),
            serde_json::to_value(&report.final_metrics).expect("metrics serialize"),
        );
    }
    let csv_path = args.out.join("ablate.csv");
    std::fs::write(&csv_path, csv)?;
    let doc = serde_json::json!({
        "arms": summary,
        "csv": csv_path.display().to_string(),
    });
    println!("{doc}");
    Ok(())
}

/// The four sweep axes; `--param` selects one by name or alias.
#[derive(Clone, Copy, PartialEq, Eq)]
enum SweepAxis {
    Lambda,
    DiffSteps,
    Layers,
    Schedule,
}

impl SweepAxis {
    const ALL: [SweepAxis; 4] = [
        SweepAxis::Lambda,
        SweepAxis::DiffSteps,
        SweepAxis::Layers,
        SweepAxis::Schedule,
    ];

    fn parse(name: &str) -> Option<Self> {
        match name {
            "lambda" => Some(SweepAxis::Lambda),
            "T" | "t" | "diff-steps" => Some(SweepAxis::DiffSteps),
            "L" | "l" | "layers" => Some(SweepAxis::Layers),
            "schedule" | "beta-schedule" => Some(SweepAxis::Schedule),
            _ => None,
        }
    }

    fn key(&self) -> &'static str {
        match self {
            SweepAxis::Lambda => "lambda",
            SweepAxis::DiffSteps => "diff-steps",
            SweepAxis::Layers => "layers",
            SweepAxis::Schedule => "beta-schedule",
        }
    }

    fn values(&self) -> Vec<String> {
        match self {
            SweepAxis::Lambda => LAMBDA_GRID.iter().map(|v| v.to_string()).collect(),
            SweepAxis::DiffSteps => DIFF_STEPS_GRID.iter().map(|v| v.to_string()).collect(),
            SweepAxis::Layers => LAYERS_GRID.iter().map(|v| v.to_string()).collect(),
            SweepAxis::Schedule => ScheduleKind::ALL.iter().map(|k| k.name().into()).collect(),
        }
    }
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), DgclError> {
    let base = resolve_config(&args.common)?;
    ensure_out_dir(&args.common.out)?;
    let ds = dataset_from_config(&base)?;

    let axes: Vec<SweepAxis> = match &args.param {
        Some(name) => vec![SweepAxis::parse(name).ok_or_else(|| {
            DgclError::Config(crate::error::ConfigError::BadValue {
                key: "--param".into(),
                value: name.clone(),
                detail: "expected lambda, T, L or schedule".into(),
            })
        })?],
        None => SweepAxis::ALL.to_vec(),
    };

    let mut csv = format!(
        "# schema: {SWEEP_SCHEMA}\nparam,value,{}\n",
        METRIC_COLUMNS.join(",")
    );
    for axis in axes {
        for value in axis.values() {
            let mut cfg = base.clone();
            cfg.set(axis.key(), &value)?;
            let (_, report) = train(&cfg, &ds)?;
            csv.push_str(&format!(
                "{},{},{}\n",
                axis.key(),
                value,
                metrics_row(&report.final_metrics)
            ));
        }
    }
    let csv_path = args.common.out.join("sweep.csv");
    std::fs::write(&csv_path, &csv)?;
    let doc = serde_json::json!({ "csv": csv_path.display().to_string() });
    println!("{doc}");
    Ok(())
}

fn cmd_export_figures(args: &ExportArgs) -> Result<(), DgclError> {
    let text = std::fs::read_to_string(&args.input)?;
    ensure_out_dir(&args.out)?;
    let mut lines = text.lines().filter(|l| !l.trim_start().starts_with('#'));
    let header = lines.next().unwrap_or_default();
    let columns: Vec<&str> = header.split(',').collect();

    let mut long = format!("# schema: {FIGURES_SCHEMA}\nparam,value,metric,score\n");
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            continue;
        }
        for (col, field) in columns.iter().zip(&fields).skip(2) {
            long.push_str(&format!("{},{},{col},{field}\n", fields[0], fields[1]));
        }
    }
    let path = args.out.join("figures.csv");
    std::fs::write(&path, long)?;
    let doc = serde_json::json!({ "csv": path.display().to_string() });
    println!("{doc}");
    Ok(())
}
