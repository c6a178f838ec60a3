use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use streamgp::config::{DatasetKind, ExperimentConfig};
use streamgp::data_io::{load_dataset, write_csv};
use streamgp::output::{render, render_trace_csv, render_trace_json_lines, Format};
use streamgp::runner::{compare_methods, parse_methods, run_replicates, ALL_METHODS};
use streamgp::run_trace;

#[derive(Parser)]
#[command(name = "streamgp", version, about = "Streaming graph GP ensembles with online conformal prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment config; defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed (overrides runs.base_seed)
    #[arg(long)]
    seed: Option<u64>,
    /// Replicate count (overrides runs.replicates)
    #[arg(long)]
    replicates: Option<usize>,
    /// Write machine-readable output here
    #[arg(long)]
    out: Option<PathBuf>,
    /// table | csv | json-lines
    #[arg(long, default_value = "table")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset to CSV
    Generate {
        #[command(flatten)]
        common: Common,
        /// synthetic-hetero or synthetic-linear (overrides dataset.kind)
        #[arg(long)]
        kind: Option<String>,
        /// Number of rows (overrides dataset.n)
        #[arg(long)]
        n: Option<usize>,
    },
    /// Run the configured method over all replicates
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Run several methods on paired replicates
    Compare {
        #[command(flatten)]
        common: Common,
        /// Comma-separated, e.g. EGP-OCP,RBF-BCS (default: all six)
        #[arg(long)]
        methods: Option<String>,
    },
    /// Dump every stream step of one replicate
    Trace {
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.runs.base_seed = s;
    }
    if let Some(r) = c.replicates {
        cfg.runs.replicates = r;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_out(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn machine_format(f: Format) -> Format {
    match f {
        Format::Table => Format::JsonLines,
        other => other,
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { common, kind, n } => {
            let mut cfg = load_config(&common)?;
            if let Some(k) = kind {
                cfg.dataset.kind = match k.as_str() {
                    "synthetic-hetero" => DatasetKind::SyntheticHetero,
                    "synthetic-linear" => DatasetKind::SyntheticLinear,
                    _ => anyhow::bail!("--kind must be synthetic-hetero or synthetic-linear, got '{k}'"),
                };
            }
            if cfg.dataset.kind == DatasetKind::Csv {
                anyhow::bail!("generate needs a synthetic dataset kind");
            }
            if n.is_some() {
                cfg.dataset.n = n;
            }
            let out = common.out.context("generate needs --out <path>")?;
            let ds = load_dataset(&cfg.dataset, cfg.runs.base_seed)?;
            write_csv(&ds, &out)?;
            eprintln!("wrote {} rows of {} to {}", ds.len(), cfg.dataset.kind, out.display());
        }
        Command::Run { common } => {
            let cfg = load_config(&common)?;
            let (summary, _) = run_replicates(&cfg, cfg.runs.replicates, cfg.runs.base_seed)?;
            let rows = [summary];
            print!("{}", render(&rows, common.format)?);
            if let Some(out) = &common.out {
                write_out(out, &render(&rows, machine_format(common.format))?)?;
            }
        }
        Command::Compare { common, methods } => {
            let cfg = load_config(&common)?;
            let methods = match methods {
                Some(m) => parse_methods(&m)?,
                None => ALL_METHODS.to_vec(),
            };
            let rows = compare_methods(&cfg, &methods)?;
            print!("{}", render(&rows, common.format)?);
            if let Some(out) = &common.out {
                write_out(out, &render(&rows, machine_format(common.format))?)?;
            }
        }
        Command::Trace { common } => {
            let cfg = load_config(&common)?;
            let (rec, rows) = run_trace(&cfg, cfg.runs.base_seed)?;
            let text = match common.format {
                Format::JsonLines => render_trace_json_lines(&rows),
                _ => render_trace_csv(&rows)?,
            };
            match &common.out {
                Some(out) => write_out(out, &text)?,
                None => print!("{text}"),
            }
            for r in &rec.results {
                eprintln!(
                    "{}: coverage {:.4}, mean width {:.4}, empty {:.4}",
                    r.mode, r.coverage, r.mean_width, r.empty_rate
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
