use clap::{Parser, Subcommand};
use critweld_lab::config::{KvMap, RunContext};
use critweld_lab::experiments;
use critweld_lab::report::plot_data;
use critweld_lab::{LabError, Result};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "lab", about = "Statistical laboratory for critical-LQG conformal welding", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a registered experiment and write its report.
    Run {
        /// Experiment name (see `lab list`).
        experiment: String,
        /// Flat key = value config file overriding the experiment defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Base seed; replica r uses stream id r.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Number of replicas.
        #[arg(long, default_value_t = 200)]
        replicas: u64,
        /// Output directory for report.ndjson and summary.txt.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (the merged report is worker-count invariant).
        #[arg(long, default_value_t = 4)]
        workers: usize,
        /// Inline parameter overrides, key=value (repeatable).
        #[arg(long = "param")]
        params: Vec<String>,
    },
    /// List registered experiments with their anchors.
    List,
    /// Extract gnuplot-compatible two-column data files from a report.
    PlotData {
        report: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn run() -> Result<i32> {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for e in experiments::registry() {
                println!("{:<18} {}", e.name(), e.anchor());
            }
            Ok(0)
        }
        Command::PlotData { report, out } => {
            let text = std::fs::read_to_string(&report)?;
            let written = plot_data(&text, &out)?;
            for p in written {
                println!("{}", p.display());
            }
            Ok(0)
        }
        Command::Run { experiment, config, seed, replicas, out, workers, params } => {
            let exp = experiments::find(&experiment)?;
            let mut overrides = match config {
                Some(path) => KvMap::parse(&std::fs::read_to_string(path)?)?,
                None => KvMap::new(),
            };
            for p in &params {
                let (k, v) = p
                    .split_once('=')
                    .ok_or_else(|| LabError::Usage(format!("--param expects key=value, got '{p}'")))?;
                overrides.set(k.trim(), v.trim());
            }
            let merged = overrides.merged_into(&exp.schema())?;
            let ctx = RunContext { seed, replicas, workers, params: merged };
            let report = exp.run(&ctx)?;
            print!("{}", report.summary_text());
            if let Some(dir) = out {
                let (nd, su) = report.write_to(&dir)?;
                println!("wrote {}", nd.display());
                println!("wrote {}", su.display());
            }
            Ok(if report.passed() { 0 } else { 1 })
        }
    }
}

fn main() {
    match run() {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}
