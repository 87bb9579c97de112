//! `sketchgrade` command-line tool.

mod config;
mod error;

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use sketchgrade_core::feedback::{feedback_for, NullStudent, SimulatedStudent};
use sketchgrade_core::scoring::CalibrationGrid;
use sketchgrade_core::{loop_run, similarity, ItemSpec, Srg, StudentModel, VisualHint};
use sketchgrade_harness::{
    calibrate_dataset, evaluate, generate_pack, load_dataset, load_item, render_table, Dataset, SyntheticConfig, TableFormat,
};
use sketchgrade_service::{AppState, ServiceConfig};

use config::Config;
use error::CliError;

const DEFAULT_PACK: &str = "fixtures/packs/demo";

#[derive(Debug, Parser)]
#[command(name = "sketchgrade", version, about = "Score sketch reasoning graphs against rubric items")]
struct Cli {
    /// JSON config file; flags take precedence over its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check an item pack (or a single item directory) and its samples.
    Validate {
        #[arg(long)]
        pack: PathBuf,
    },
    /// Score one student graph against an item.
    Score(StudentArgs),
    /// Emit the feedback report and overlay script for one student graph.
    Feedback {
        #[command(flatten)]
        student: StudentArgs,
        /// Canvas size for the overlay, WIDTHxHEIGHT.
        #[arg(long, value_parser = parse_canvas)]
        canvas: Option<(u32, u32)>,
        /// Print the human-readable report instead of JSON.
        #[arg(long)]
        text: bool,
    },
    /// Run the revision loop with a simulated or interactive student.
    Loop {
        #[command(flatten)]
        student: StudentArgs,
        /// Probability of applying each hinted repair.
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Revision budget; defaults to the item's own.
        #[arg(long)]
        t_max: Option<usize>,
        /// Read a revised graph path from stdin after each round of hints.
        #[arg(long, conflicts_with = "p")]
        interactive: bool,
        /// Never revise (baseline run).
        #[arg(long, conflicts_with_all = ["p", "interactive"])]
        null: bool,
    },
    /// Score a labeled pack and print the accuracy table.
    Eval {
        #[arg(long)]
        pack: Option<PathBuf>,
        #[arg(long)]
        parallelism: Option<usize>,
        #[arg(long, default_value = "text")]
        format: TableFormat,
        /// Row label in the table.
        #[arg(long, default_value = "SRG")]
        label: String,
        /// Write the full result as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid-search gamma1 (and optionally alpha) against the pack's labels.
    Calibrate {
        #[arg(long)]
        pack: Option<PathBuf>,
        #[arg(long, default_value_t = 0.05)]
        gamma_step: f64,
        /// Comma-separated alpha grid; alpha stays fixed when omitted.
        #[arg(long, value_delimiter = ',')]
        alpha: Option<Vec<f64>>,
    },
    /// Generate a synthetic pack with planted band labels.
    Gen {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        samples_per_band: Option<usize>,
        /// Comma-separated item ids; the digit sets the highest Bloom level.
        #[arg(long, value_delimiter = ',')]
        items: Option<Vec<String>>,
    },
    /// Serve the HTTP API over a pack.
    Serve {
        #[arg(long)]
        pack: Option<PathBuf>,
        #[arg(long)]
        addr: Option<String>,
        /// Environment variable holding the instructor bearer token.
        #[arg(long)]
        token_env: Option<String>,
        #[arg(long)]
        journal: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct StudentArgs {
    /// Item directory, or an item id under the configured pack.
    #[arg(long)]
    item: String,
    /// Student graph file, or a sample name inside the item's samples/.
    #[arg(long)]
    student: String,
}

fn parse_canvas(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WIDTHxHEIGHT")?;
    let w: u32 = w.trim().parse().map_err(|e| format!("width: {e}"))?;
    let h: u32 = h.trim().parse().map_err(|e| format!("height: {e}"))?;
    if w == 0 || h == 0 {
        return Err("canvas size must be positive".into());
    }
    Ok((w, h))
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn print_json<T: serde::Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("outputs serialize"));
}

fn item_dir(arg: &str, cfg: &Config) -> PathBuf {
    let p = PathBuf::from(arg);
    if p.is_dir() {
        return p;
    }
    cfg.pack.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_PACK)).join(arg)
}

fn with_overrides(mut item: ItemSpec, cfg: &Config) -> Result<ItemSpec, CliError> {
    if let Some(s) = cfg.scoring {
        s.validate().map_err(sketchgrade_core::ItemError::from)?;
        item.meta.scoring = s;
    }
    Ok(item)
}

fn load_student(args: &StudentArgs, cfg: &Config) -> Result<(ItemSpec, Srg), CliError> {
    let dir = item_dir(&args.item, cfg);
    let item = with_overrides(load_item(&dir)?, cfg)?;
    let direct = PathBuf::from(&args.student);
    let path = [
        direct.clone(),
        dir.join("samples").join(&args.student),
        dir.join("samples").join(format!("{}.srg.json", args.student)),
    ]
    .into_iter()
    .find(|p| p.is_file())
    .unwrap_or(direct);
    let student = Srg::from_json(&read(&path)?)?;
    Ok((item, student))
}

fn load_pack(pack: Option<PathBuf>, cfg: &Config) -> Result<Dataset, CliError> {
    let root = pack
        .or_else(|| cfg.pack.clone())
        .ok_or_else(|| CliError::Usage("--pack is required (or set \"pack\" in the config)".into()))?;
    let mut ds = load_dataset(&root)?;
    if cfg.scoring.is_some() {
        ds.items = ds.items.into_iter().map(|i| with_overrides(i, cfg)).collect::<Result<_, _>>()?;
    }
    Ok(ds)
}

/// Prints hints to stderr and reads the next graph's path from stdin. An
/// empty line or end of input keeps the current graph.
struct InteractiveStudent;

impl StudentModel for InteractiveStudent {
    fn revise(&mut self, t: usize, gs: &Srg, hints: &[VisualHint], _go: &Srg) -> Srg {
        let mut err = io::stderr();
        let _ = writeln!(err, "iteration {t}:");
        for h in hints {
            let _ = writeln!(err, "  [{}] {}", h.bloom_target, h.text);
        }
        let _ = write!(err, "revised graph path: ");
        let _ = err.flush();
        let mut line = String::new();
        if io::stdin().lock().read_line(&mut line).unwrap_or(0) == 0 || line.trim().is_empty() {
            return gs.clone();
        }
        match fs::read_to_string(line.trim()).map_err(|e| e.to_string()).and_then(|t| Srg::from_json(&t).map_err(|e| e.to_string())) {
            Ok(g) => g,
            Err(e) => {
                let _ = writeln!(err, "keeping the current graph: {e}");
                gs.clone()
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Validate { pack } => {
            let ds = if pack.join("item.json").is_file() {
                let item = load_item(&pack)?;
                Dataset { items: vec![item], ..Dataset::default() }
            } else {
                load_dataset(&pack)?
            };
            for w in &ds.warnings {
                eprintln!("{}", json!({"warning": w}));
            }
            print_json(&json!({
                "items": ds.items.iter().map(|i| i.summary()).collect::<Vec<_>>(),
                "samples": ds.sample_count(),
                "warnings": ds.warnings.len(),
            }));
        }
        Command::Score(args) => {
            let (item, gs) = load_student(&args, &cfg)?;
            print_json(&similarity(&gs, &item.gold, &item.ontology, item.scoring())?);
        }
        Command::Feedback { student, canvas, text } => {
            let (item, gs) = load_student(&student, &cfg)?;
            let canvas = canvas.or(cfg.canvas).unwrap_or((1000, 800));
            let fb = feedback_for(&item, &gs, canvas)?;
            if text {
                print!("{}", fb.report.to_text());
            } else {
                print_json(&json!({"report": fb.report, "overlay": fb.overlay, "hints": fb.hints}));
            }
        }
        Command::Loop { student, p, seed, t_max, interactive, null } => {
            let (item, gs) = load_student(&student, &cfg)?;
            if !(0.0..=1.0).contains(&p) {
                return Err(CliError::Usage(format!("--p {p} outside [0, 1]")));
            }
            let t_max = t_max.unwrap_or(item.meta.feedback.t_max);
            let mut model: Box<dyn StudentModel> = if interactive {
                Box::new(InteractiveStudent)
            } else if null {
                Box::new(NullStudent)
            } else {
                Box::new(SimulatedStudent { p, seed })
            };
            print_json(&loop_run(&item.gold, &gs, model.as_mut(), &item, t_max)?);
        }
        Command::Eval { pack, parallelism, format, label, out } => {
            let ds = load_pack(pack, &cfg)?;
            let workers = parallelism
                .or(cfg.parallelism)
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let r = evaluate(&ds.items, &ds.samples, workers);
            print!("{}", render_table(&r, format, &label));
            if let Some(out) = out {
                let doc = serde_json::to_string_pretty(&r).expect("results serialize");
                fs::write(&out, doc + "\n").map_err(|source| CliError::Io { path: out, source })?;
            }
        }
        Command::Calibrate { pack, gamma_step, alpha } => {
            if !(gamma_step > 0.0 && gamma_step <= 1.0) {
                return Err(CliError::Usage(format!("--gamma-step {gamma_step} outside (0, 1]")));
            }
            let ds = load_pack(pack, &cfg)?;
            let base = cfg.scoring.or_else(|| ds.items.first().map(|i| *i.scoring())).unwrap_or_default();
            let steps = (1.0 / gamma_step).round() as usize;
            let grid = CalibrationGrid { gamma1: (0..=steps).map(|k| (k as f64 * gamma_step).min(1.0)).collect(), alpha };
            print_json(&calibrate_dataset(&ds, &base, &grid)?);
        }
        Command::Gen { out, seed, samples_per_band, items } => {
            let mut sc = cfg.synthetic.clone().unwrap_or_else(SyntheticConfig::default);
            if let Some(s) = seed {
                sc.seed = s;
            }
            if let Some(n) = samples_per_band {
                sc.samples_per_band = n;
            }
            if let Some(ids) = items {
                sc.items = ids;
            }
            let ids = generate_pack(&out, &sc)?;
            print_json(&json!({"out": out, "items": ids}));
        }
        Command::Serve { pack, addr, token_env, journal } => {
            let ds = load_pack(pack, &cfg)?;
            let s = &cfg.service;
            let addr = addr.or_else(|| s.addr.clone()).unwrap_or_else(|| "127.0.0.1:8080".into());
            let addr = addr.parse().map_err(|e| CliError::Usage(format!("--addr {addr}: {e}")))?;
            let token_env = token_env.or_else(|| s.token_env.clone()).unwrap_or_else(|| "SKETCHGRADE_SERVICE_TOKEN".into());
            let d = ServiceConfig::default();
            let config = ServiceConfig {
                token: std::env::var(&token_env).ok().filter(|t| !t.is_empty()),
                max_nodes: s.max_nodes.unwrap_or(d.max_nodes),
                max_edges: s.max_edges.unwrap_or(d.max_edges),
                max_body_bytes: s.max_body_bytes.unwrap_or(d.max_body_bytes),
                idle_timeout: s.idle_timeout_secs.map_or(d.idle_timeout, Duration::from_secs),
                journal: journal.or_else(|| s.journal.clone()),
            };
            let journal_path = config.journal.clone().unwrap_or_default();
            let state = AppState::new(ds.items, config).map_err(|source| CliError::Io { path: journal_path, source })?;
            let rt = tokio::runtime::Runtime::new().map_err(|source| CliError::Io { path: PathBuf::new(), source })?;
            rt.block_on(sketchgrade_service::serve(addr, state))
                .map_err(|source| CliError::Io { path: PathBuf::from(addr.to_string()), source })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
