//! `pagealign` command-line front end.
//!
//! Exit status: 0 on success, 1 when an argument or input (bundle, ground
//! truth, config) fails validation, 2 on any other failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use pagealign::eval::{compute_prf, MetricsReport};
use pagealign::report::{compare, engine_version, write_outputs};
use pagealign::{load_bundle, load_ground_truth, run_variant, EngineConfig, EvalMetrics, Mode, Variant};

const THREADS_ENV: &str = "PAGEALIGN_THREADS";
const META_FILE: &str = "report.meta.json";

#[derive(Parser)]
#[command(name = "pagealign", version, about = "Align and diff two revisions of a paged document")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Match pages, diff matched pairs and write the report.
    Compare {
        old: PathBuf,
        new: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "full", value_parser = parse_mode)]
        mode: Mode,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Score one pipeline variant against ground truth and print metrics JSON.
    Eval {
        old: PathBuf,
        new: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, default_value = "full")]
        variant: Variant,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Print one fingerprint JSON line per page.
    Fingerprint { bundle: PathBuf },
}

/// Threshold overrides applied on top of the defaults or `--config`.
#[derive(Args)]
struct Tuning {
    /// JSON file with any subset of the engine configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    tau_s: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gap_penalty: Option<f64>,
    #[arg(long)]
    phash_accept: Option<f64>,
    #[arg(long)]
    content_similar: Option<f64>,
    #[arg(long)]
    pixel_threshold: Option<u8>,
    #[arg(long)]
    min_region_area: Option<u32>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "full" => Ok(Mode::Full),
        "patch" => Ok(Mode::Patch),
        _ => Err(format!("unknown mode {s:?}, expected full or patch")),
    }
}

enum Failure {
    Invalid(anyhow::Error),
    Internal(anyhow::Error),
}

impl Failure {
    fn invalid(e: impl Into<anyhow::Error>) -> Self {
        Failure::Invalid(e.into())
    }

    fn internal(e: impl Into<anyhow::Error>) -> Self {
        Failure::Internal(e.into())
    }
}

impl Tuning {
    fn resolve(&self) -> Result<EngineConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => {
                let raw = fs::read_to_string(path)
                    .with_context(|| format!("cannot read {}", path.display()))
                    .map_err(Failure::invalid)?;
                serde_json::from_str(&raw)
                    .with_context(|| format!("invalid config {}", path.display()))
                    .map_err(Failure::invalid)?
            }
            None => EngineConfig::default(),
        };
        if let Some(v) = self.tau_s {
            cfg.seven_phase.tau_s = v;
        }
        if let Some(v) = self.phash_accept {
            cfg.seven_phase.phash_accept = v;
        }
        if let Some(v) = self.gap_penalty {
            cfg.dp.gap_penalty = v;
        }
        if let Some(v) = self.content_similar {
            cfg.dp.content_similar_threshold = v;
        }
        if let Some(v) = self.pixel_threshold {
            cfg.diff.pixel_threshold = v;
        }
        if let Some(v) = self.min_region_area {
            cfg.diff.min_region_area = v;
        }
        cfg.validate().map_err(|e| Failure::invalid(anyhow!(e)))?;
        Ok(cfg)
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| Failure::invalid(anyhow!("{THREADS_ENV} must be a non-negative integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(Failure::internal)
}

fn load(path: &Path) -> Result<pagealign::DocumentBundle, Failure> {
    load_bundle(path)
        .with_context(|| format!("loading bundle {}", path.display()))
        .map_err(Failure::invalid)
}

fn cmd_compare(old: &Path, new: &Path, out: &Path, mode: Mode, tuning: &Tuning) -> Result<(), Failure> {
    let cfg = tuning.resolve()?;
    let (old_b, new_b) = (load(old)?, load(new)?);
    let (report, diffs) = compare(&old_b, &new_b, mode, &cfg).map_err(Failure::internal)?;
    fs::create_dir_all(out)
        .with_context(|| format!("cannot create {}", out.display()))
        .map_err(Failure::internal)?;
    write_outputs(out, &report, &diffs, &old_b, &new_b).map_err(Failure::internal)?;

    let generated = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or_default();
    let meta = serde_json::json!({
        "generated_unix": generated,
        "engine_version": engine_version(),
    });
    let meta_path = out.join(META_FILE);
    fs::write(&meta_path, format!("{meta:#}\n"))
        .with_context(|| format!("cannot write {}", meta_path.display()))
        .map_err(Failure::internal)?;

    eprintln!(
        "{} matches, {} inserted, {} deleted, {} orphans, {} changed pairs; report in {}",
        report.matches.len(),
        report.inserted.len(),
        report.deleted.len(),
        report.orphans.len(),
        report.changed_pairs(),
        out.display()
    );
    Ok(())
}

fn cmd_eval(old: &Path, new: &Path, gt: &Path, variant: Variant, tuning: &Tuning) -> Result<(), Failure> {
    let cfg = tuning.resolve()?;
    let (old_b, new_b) = (load(old)?, load(new)?);
    let truth = load_ground_truth(gt)
        .with_context(|| format!("loading ground truth {}", gt.display()))
        .map_err(Failure::invalid)?;
    let result = run_variant(&old_b, &new_b, variant, &cfg).map_err(Failure::internal)?;
    let metrics: EvalMetrics = compute_prf(&result, &truth, old_b.len(), new_b.len()).map_err(Failure::invalid)?;
    let report = MetricsReport { variant, metrics };
    println!("{}", serde_json::to_string(&report).map_err(Failure::internal)?);
    Ok(())
}

fn cmd_fingerprint(bundle: &Path) -> Result<(), Failure> {
    let b = load(bundle)?;
    for page in &b.pages {
        let fp = pagealign::fingerprint_page(page).map_err(Failure::internal)?;
        let line = serde_json::json!({ "index": page.index, "fingerprint": fp });
        println!("{line}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let run = || -> Result<(), Failure> {
        configure_threads()?;
        match &cli.command {
            Command::Compare { old, new, out, mode, tuning } => cmd_compare(old, new, out, *mode, tuning),
            Command::Eval { old, new, gt, variant, tuning } => cmd_eval(old, new, gt, *variant, tuning),
            Command::Fingerprint { bundle } => cmd_fingerprint(bundle),
        }
    };
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(2)
        }
    }
}
