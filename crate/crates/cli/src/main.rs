//! `asc`: generate data, train the victim, attack single images, run the
//! SDR benchmark and render attack panels.
//!
//! Exit codes: 0 success, 1 usage, 2 I/O, 3 configuration or validation.
//! Logging goes to stderr and is set with `ASC_LOG` (`error`, `info`,
//! `debug`, ...); stdout carries one JSON summary per command.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use asc_core::attack::{attack_with_pattern, AttackReport};
use asc_core::coco::{self, CocoFile};
use asc_core::contour::budget_pixels;
use asc_core::imagecore::{load_image, save_image};
use asc_core::patterns::generate;
use asc_core::victim::{designated_target, gen_scenes, train_tiny_with, TrainConfig};
use asc_core::{
    f_asc, o_asc, render_panel, run_bench, AscError, AttackConfig, BenchConfig, PatternKind,
    TinyDetector,
};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use config::{layered, ConfigFile, Flags};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Config(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Config(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Config(m) => f.write_str(m),
        }
    }
}

impl From<AscError> for CliError {
    fn from(e: AscError) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

#[derive(Parser)]
#[command(
    name = "asc",
    version,
    about = "Sparse contour attacks on a small object detector"
)]
struct Cli {
    /// Optional TOML settings file with [train], [attack] and [bench] tables.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset (PNGs plus annotations.json).
    GenData {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the detector on a dataset directory.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Weights file; a JSON summary is written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Attack the designated object of one image.
    Attack {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        image: PathBuf,
        /// Annotation file containing the image.
        #[arg(long)]
        ann: PathBuf,
        #[arg(long, value_parser = parse_pattern)]
        pattern: PatternKind,
        /// Budget as a fraction of the object area, e.g. 0.05.
        #[arg(long)]
        budget: Option<f64>,
        /// Mask sampling rounds (O-ASC).
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for result.json and renders.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every pattern at every budget over a dataset.
    Bench {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_delimiter = ',', value_parser = parse_pattern)]
        patterns: Option<Vec<PatternKind>>,
        #[arg(long, value_delimiter = ',')]
        budgets: Option<Vec<f64>>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: number of processors).
        #[arg(long)]
        workers: Option<usize>,
        /// Only bench the first N scenes.
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compose x, M*, T* and x ⊕ P* from an attack result into one PNG.
    Render {
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_pattern(s: &str) -> Result<PatternKind, String> {
    s.parse().map_err(|e: AscError| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ASC_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&summary).expect("summary serializes")
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<Value, CliError> {
    let file = ConfigFile::load(cli.config.as_deref())?;
    match cli.command {
        Command::GenData { n, seed, out } => gen_data(n, seed, &out),
        Command::Train {
            data,
            epochs,
            lr,
            seed,
            out,
        } => {
            let flags = Flags::default()
                .set("epochs", epochs)
                .set("lr", lr)
                .set("seed", seed)
                .value();
            let cfg: TrainConfig = layered(
                &TrainConfig::default(),
                &[file.section("train"), Some(&flags)],
            )?;
            train(&data, &cfg, &out)
        }
        Command::Attack {
            model,
            image,
            ann,
            pattern,
            budget,
            rounds,
            seed,
            out,
        } => {
            let flags = Flags::default()
                .set("budget_fraction", budget)
                .set("rounds", rounds)
                .set("seed", seed)
                .value();
            let cfg: AttackConfig = layered(
                &AttackConfig::default(),
                &[file.section("attack"), Some(&flags)],
            )?;
            cfg.validate()?;
            attack(&model, &image, &ann, pattern, &cfg, &out)
        }
        Command::Bench {
            model,
            data,
            patterns,
            budgets,
            seed,
            workers,
            limit,
            out,
        } => {
            let defaults = BenchConfig {
                workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
                ..BenchConfig::default()
            };
            let attack = file.section("attack").map(|a| json!({ "attack": a }));
            let flags = Flags::default()
                .set("patterns", patterns)
                .set("budgets", budgets)
                .set("seed", seed)
                .set("workers", workers)
                .value();
            let cfg: BenchConfig = layered(
                &defaults,
                &[attack.as_ref(), file.section("bench"), Some(&flags)],
            )?;
            cfg.validate()?;
            bench(&model, &data, limit, &cfg, &out)
        }
        Command::Render { result, out } => render(&result, &out),
    }
}

fn gen_data(n: usize, seed: u64, out: &Path) -> Result<Value, CliError> {
    let scenes = gen_scenes(n, seed)?;
    coco::save_dataset(&scenes, out)?;
    log::info!("wrote {n} scenes to {}", out.display());
    Ok(json!({
        "command": "gen-data",
        "n": n,
        "seed": seed,
        "out": out,
        "annotations": out.join(coco::ANNOTATIONS_FILE),
    }))
}

fn train(data: &Path, cfg: &TrainConfig, out: &Path) -> Result<Value, CliError> {
    let scenes = coco::load_dataset(data)?;
    log::info!(
        "training on {} scenes for {} epochs",
        scenes.len(),
        cfg.epochs
    );
    let (model, report) = train_tiny_with(&scenes, cfg)?;
    model.save(out)?;
    let summary = json!({
        "command": "train",
        "data": data,
        "weights": out,
        "config": cfg,
        "report": report,
    });
    let sidecar = out.with_extension("json");
    write_json(&sidecar, &summary)?;
    Ok(summary)
}

fn attack(
    model: &Path,
    image: &Path,
    ann: &Path,
    pattern: PatternKind,
    cfg: &AttackConfig,
    out: &Path,
) -> Result<Value, CliError> {
    let detector = TinyDetector::load(model)?;
    let x = load_image(image)?;
    let annotations = CocoFile::load(ann)?;
    let name = image
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or_default();
    let entry = annotations
        .find_image(name)
        .ok_or_else(|| CliError::Config(format!("{} has no entry for {name}", ann.display())))?;
    if (entry.height, entry.width) != x.dims() {
        return Err(CliError::Config(format!(
            "{name} is {}x{} but annotated as {}x{}",
            x.height(),
            x.width(),
            entry.height,
            entry.width
        )));
    }
    let objects = annotations.objects(entry)?;
    let gt = designated_target(&objects)
        .map(|i| &objects[i])
        .ok_or_else(|| CliError::Config(format!("{name} has no annotated object")))?;

    let result = match pattern {
        PatternKind::Fasc => f_asc(&detector, &x, gt, cfg)?,
        PatternKind::Oasc => o_asc(&detector, &x, gt, cfg)?,
        kind => {
            let (h, w) = x.dims();
            let mask = generate(
                kind,
                gt,
                &gt.segmentation(h, w)?,
                budget_pixels(gt, cfg.budget_fraction),
            )?;
            attack_with_pattern(&detector, &x, gt, &mask, cfg)?
        }
    };
    let context = json!({
        "model": model,
        "image": image,
        "ann": ann,
        "image_id": entry.id,
        "pattern": pattern,
        "object_area": gt.object_area,
    });
    let path = result.save(out, &x, cfg, context)?;
    Ok(json!({
        "command": "attack",
        "pattern": pattern,
        "success": result.success,
        "l0_used": result.l0_used,
        "budget": result.budget,
        "best_loss": result.best_loss,
        "rounds_used": result.rounds_used,
        "result": path,
        "config": cfg,
    }))
}

fn bench(
    model: &Path,
    data: &Path,
    limit: Option<usize>,
    cfg: &BenchConfig,
    out: &Path,
) -> Result<Value, CliError> {
    let detector = TinyDetector::load(model)?;
    let mut scenes = coco::load_dataset(data)?;
    if let Some(n) = limit {
        scenes.truncate(n);
    }
    log::info!(
        "benching {} scenes with {} workers",
        scenes.len(),
        cfg.workers
    );
    let report = run_bench(&detector, &scenes, cfg)?;
    let files = report.save(out)?;
    Ok(json!({
        "command": "bench",
        "images": report.images,
        "skipped": report.skipped.len(),
        "clean_sdr": report.clean_sdr,
        "table": report.table,
        "files": files,
        "config": cfg,
    }))
}

fn render(result: &Path, out: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(result)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", result.display())))?;
    let report: AttackReport = serde_json::from_str(&text)
        .map_err(|e| CliError::Io(format!("malformed {}: {e}", result.display())))?;
    let dir = result.parent().unwrap_or(Path::new("."));
    let original = match (
        &report.files.original,
        report.context.get("image").and_then(Value::as_str),
    ) {
        (Some(f), _) => dir.join(f),
        (None, Some(p)) => PathBuf::from(p),
        (None, None) => {
            return Err(CliError::Config(format!(
                "{} does not name its original image",
                result.display()
            )))
        }
    };
    let x = load_image(&original)?;
    let panel = render_panel(&x, &report.pattern()?, 2)?;
    save_image(&panel, out)?;
    Ok(json!({
        "command": "render",
        "result": result,
        "original": original,
        "out": out,
        "config": report.config,
    }))
}

fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("json values serialize");
    std::fs::write(path, text)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}
