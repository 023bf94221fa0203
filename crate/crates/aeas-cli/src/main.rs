//! `aeas` — command-line front end for the exploit-actionability engine.
//!
//! The pipeline is split into re-runnable stages that persist their output
//! under `--out` with fixed filenames, so stages compose across invocations
//! (and across backends): `filter` writes `manifest.json`, `extract` writes
//! `findings/`, `score` writes `scores.json` and `report.md`, `eval` writes
//! `metrics.json`, and `report` re-renders the Markdown from whatever is on
//! disk. Settings come from an optional JSON config file; command-line flags
//! override file values. Exit code is 0 iff the command succeeded.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aeas_core::pipeline::{
    self, make_backend, BackendChoice, ConfigFile, Overrides, RunConfig,
};
use anyhow::Result;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "aeas",
    version,
    about = "Assess and rank the actionability of public exploit artifacts",
    propagate_version = true
)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file; flags override file values
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Corpus root directory (one subdirectory per CVE)
    #[arg(long, global = true, value_name = "DIR")]
    corpus: Option<PathBuf>,
    /// Output directory for stage files [default: aeas-out]
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Analysis backend: `rules` (deterministic, offline) or `live`
    #[arg(long, global = true, value_name = "NAME")]
    backend: Option<BackendChoice>,
    /// Serve model completions from the cache only; uncached prompts fail
    #[arg(long, global = true)]
    offline: bool,
    /// Completion cache directory [default: <out>/cache]
    #[arg(long, global = true, value_name = "DIR")]
    cache_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Filter corpus repositories by size, confidence, and quality
    Filter,
    /// Extract exploit sub-features for every artifact kept by `filter`
    Extract,
    /// Aggregate findings into scores and render the Markdown report
    Score,
    /// Print the top vulnerabilities by severity
    Rank {
        /// Number of vulnerabilities to print
        #[arg(long, default_value_t = 10, value_name = "N")]
        top_k: usize,
    },
    /// Compare scores against ground-truth labels and baseline score files
    Eval {
        /// Ground-truth labels file (JSON Lines, one object per artifact)
        #[arg(long, value_name = "PATH")]
        labels: Option<PathBuf>,
        /// Baseline score table as NAME=PATH (CSV `cve_id,score`; repeatable)
        #[arg(long = "baseline", value_name = "NAME=PATH", value_parser = parse_baseline)]
        baselines: Vec<(String, PathBuf)>,
    },
    /// Re-render report.md from persisted scores and metrics
    Report,
}

fn parse_baseline(spec: &str) -> std::result::Result<(String, PathBuf), String> {
    match spec.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => {
            Ok((name.to_string(), PathBuf::from(path)))
        }
        _ => Err(format!("expected NAME=PATH, got `{spec}`")),
    }
}

fn load_config_file(common: &CommonArgs) -> Result<ConfigFile> {
    match &common.config {
        Some(path) => Ok(ConfigFile::load(path)?),
        None => Ok(ConfigFile::default()),
    }
}

fn resolve(common: &CommonArgs, file: ConfigFile) -> Result<RunConfig> {
    let overrides = Overrides {
        corpus: common.corpus.clone(),
        out: common.out.clone(),
        backend: common.backend,
        offline: common.offline,
        cache_dir: common.cache_dir.clone(),
    };
    Ok(RunConfig::resolve(file, overrides)?)
}

/// Output directory for commands that only read persisted stage files and
/// therefore need no corpus; mirrors the default applied by
/// [`RunConfig::resolve`].
fn out_dir(common: &CommonArgs, file: &ConfigFile) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| file.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("aeas-out"))
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    let file = load_config_file(&cli.common)?;

    match &cli.command {
        Command::Filter => {
            let cfg = resolve(&cli.common, file)?;
            let manifest = pipeline::run_filter(&cfg)?;
            let kept: usize = manifest.cves.iter().map(|c| c.kept.len()).sum();
            let dropped: usize = manifest.cves.iter().map(|c| c.dropped.len()).sum();
            println!(
                "filtered {} vulnerabilities: kept {} artifact(s), dropped {}",
                manifest.cves.len(),
                kept,
                dropped
            );
            println!("wrote {}", cfg.out_dir.join(pipeline::MANIFEST_FILE).display());
        }
        Command::Extract => {
            let cfg = resolve(&cli.common, file)?;
            let backend = make_backend(&cfg, None)?;
            let findings = pipeline::run_extract(&cfg, backend.as_ref())?;
            println!(
                "extracted features for {} artifact(s) with the `{}` backend",
                findings.len(),
                backend.name()
            );
            println!("wrote {}/", cfg.out_dir.join(pipeline::FINDINGS_DIR).display());
        }
        Command::Score => {
            let cfg = resolve(&cli.common, file)?;
            let scores = pipeline::run_score(&cfg)?;
            let exploits: usize = scores.cves.iter().map(|c| c.exploits.len()).sum();
            println!(
                "scored {} vulnerabilities ({} exploit artifacts)",
                scores.cves.len(),
                exploits
            );
            if let Some(top) = scores.ranking.first() {
                let severity = scores
                    .cves
                    .iter()
                    .find(|c| &c.cve_id == top)
                    .map(|c| c.severity)
                    .unwrap_or_default();
                println!("highest severity: {top} ({severity:.4})");
            }
            println!(
                "wrote {} and {}",
                cfg.out_dir.join(pipeline::SCORES_FILE).display(),
                cfg.out_dir.join(pipeline::REPORT_FILE).display()
            );
        }
        Command::Rank { top_k } => {
            let dir = out_dir(&cli.common, &file);
            let ranked = pipeline::run_rank(&dir, *top_k)?;
            for (i, (cve_id, severity)) in ranked.iter().enumerate() {
                println!("{:>3}. {cve_id}  {severity:.4}", i + 1);
            }
        }
        Command::Eval { labels, baselines } => {
            let cfg = resolve(&cli.common, file)?;
            let labels_path = labels.as_deref().unwrap_or_else(|| Path::new(""));
            let metrics = pipeline::run_eval(&cfg, labels_path, baselines)?;
            if let Some(r) = &metrics.ranking {
                println!(
                    "ranking metrics over {} labeled case(s): top-1 success {}, precision@1 {}",
                    r.cases,
                    fmt_rate(r.top1_success),
                    fmt_rate(r.precision_at_1)
                );
            }
            for b in &metrics.baselines {
                match &b.agreement {
                    Some(a) => println!(
                        "baseline {}: n = {}, mean diff {:.4}, limits [{:.4}, {:.4}]",
                        b.baseline, b.n, a.mean_diff, a.limits.0, a.limits.1
                    ),
                    None => println!(
                        "baseline {}: {}",
                        b.baseline,
                        b.note.as_deref().unwrap_or("no agreement statistics")
                    ),
                }
            }
            println!("wrote {}", cfg.out_dir.join(pipeline::METRICS_FILE).display());
        }
        Command::Report => {
            let dir = out_dir(&cli.common, &file);
            let report = pipeline::run_report(&dir)?;
            println!(
                "wrote {} ({} lines)",
                dir.join(pipeline::REPORT_FILE).display(),
                report.lines().count()
            );
        }
    }
    Ok(())
}

fn fmt_rate(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:.4}"),
        None => "n/a".to_string(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
