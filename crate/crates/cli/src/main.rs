//! `jie`: run, validate and trace Monte-Carlo bias-correction studies.
//!
//! Exit status: 0 on success, 2 for configuration errors, 1 for failures
//! while running.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use jie_core::harness::{self, StudyConfig, PRESETS};
use jie_core::Error;

#[derive(Parser)]
#[command(name = "jie", version, about = "Simulation-based bias correction studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a study and write CSV tables and SVG panels.
    Run {
        /// Config file, or the name of a shipped preset.
        config: String,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a shipped preset (see `jie demo --list`).
    Demo {
        #[arg(required_unless_present = "list")]
        study: Option<String>,
        /// List the shipped presets.
        #[arg(long)]
        list: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Check a config file and print it with every default filled in.
    Validate { config: String },
    /// Dump the IB iterations of one replication to trace.csv, with its
    /// summary line in trace_summary.txt.
    Trace {
        config: String,
        /// JIE estimator to trace; defaults to the first `jie-*` entry.
        #[arg(long)]
        estimator: Option<String>,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Args, Clone, Default)]
struct Overrides {
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores). Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Overrides {
    fn apply(&self, cfg: &mut StudyConfig) {
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
    }
}

/// A path if it exists, otherwise a shipped preset of that name.
fn load(config: &str) -> Result<StudyConfig, Error> {
    let path = Path::new(config);
    if path.exists() || harness::preset_source(config).is_none() {
        StudyConfig::from_file(path)
    } else {
        harness::preset(config)
    }
}

fn print_summary(report: &harness::StudyReport) {
    println!("{:<24} {:>5} {:>14} {:>14} {:>14}", "estimator", "coord", "bias", "rmse", "mc_se");
    for res in &report.results {
        let s = &res.summary;
        for c in 0..s.bias.len() {
            println!("{:<24} {:>5} {:>14.6} {:>14.6} {:>14.6}", res.name, c + 1, s.bias[c], s.rmse[c], s.mc_se[c]);
        }
    }
}

fn run(cfg: &StudyConfig) -> Result<(), Error> {
    let report = harness::run_study(cfg)?;
    let files = harness::write_outputs(&report, &cfg.output_dir)?;
    print_summary(&report);
    if !report.failures.is_empty() {
        eprintln!("{} of {} replications failed and were skipped", report.failures.len(), cfg.r);
    }
    eprintln!("wrote {} files to {} in {:.1} s", files.len(), cfg.output_dir.display(), report.wall_clock.as_secs_f64());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, overrides } => {
            let mut cfg = load(&config)?;
            overrides.apply(&mut cfg);
            run(&cfg)
        }
        Command::Demo { study, list, overrides } => {
            if list {
                for (name, _) in PRESETS {
                    println!("{name}");
                }
                return Ok(());
            }
            let mut cfg = harness::preset(study.as_deref().unwrap_or_default())?;
            overrides.apply(&mut cfg);
            run(&cfg)
        }
        Command::Validate { config } => {
            let cfg = load(&config)?;
            print!("{}", cfg.to_toml_string());
            eprintln!("{config}: ok");
            Ok(())
        }
        Command::Trace { config, estimator, overrides } => {
            let mut cfg = load(&config)?;
            overrides.apply(&mut cfg);
            let (name, res) = harness::trace_study(&cfg, estimator.as_deref())?;
            std::fs::create_dir_all(&cfg.output_dir)?;
            let path = cfg.output_dir.join("trace.csv");
            let file = std::fs::File::create(&path)?;
            res.write_trace_csv(std::io::BufWriter::new(file))?;
            let line = res.summary_line();
            std::fs::write(cfg.output_dir.join("trace_summary.txt"), format!("{line}\n"))?;
            println!("{name} replication {}: {line}", cfg.trace_replication);
            if let Some(d) = res.defect {
                println!("fixed-point defect: {d:.3e}");
            }
            eprintln!("wrote {} and trace_summary.txt", path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
