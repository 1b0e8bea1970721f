//! `hypergene` command-line driver.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hypergene::harness::{
    load_dataset, run_experiment, sweep, time_pretraining, ExperimentConfig, SweepParam, SEED_ENV,
};
use hypergene::hypergraph::io::{read_citation_graph, write_hypergraph};
use hypergene::hypergraph::{ego_network_hypergraphs, EgoMode};
use hypergene::{Error, Result};

#[derive(Parser)]
#[command(name = "hypergene", version, about = "Hypergraph pre-training experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its report.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory, overriding the one in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        repeats: Option<usize>,
    },
    /// Repeat an experiment over values of one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// `clusters` or `adapt-steps`.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<usize>,
        /// CSV output file; the table is printed either way.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare pre-training wall time of the two pre-training strategies.
    Time {
        #[arg(long)]
        config: PathBuf,
    },
    /// Convert a citation graph into an ego-network hypergraph JSON file.
    Convert {
        /// Edge file and node file.
        #[arg(long, num_args = 2, value_names = ["EDGES", "NODES"])]
        citation: Vec<PathBuf>,
        #[arg(long)]
        mode: String,
        #[arg(long)]
        out: PathBuf,
        /// Keep ego networks whose node sets repeat an earlier one.
        #[arg(long)]
        keep_duplicates: bool,
    },
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig> {
    let mut c = ExperimentConfig::from_file(path)?;
    c.apply_seed_override(std::env::var(SEED_ENV).ok().as_deref())?;
    Ok(c)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out, repeats } => {
            let mut c = load_config(&config)?;
            if let Some(o) = out {
                c.output_dir = Some(o);
            }
            if let Some(r) = repeats {
                c.repeats = r;
            }
            let report = run_experiment(&c)?;
            let std = report.accuracy.std.map(|s| format!(" ± {:.2}", 100.0 * s)).unwrap_or_default();
            println!(
                "{}: accuracy {:.2}{std} % over {} repeat(s)",
                report.config.train.strategy.name(),
                100.0 * report.accuracy.mean,
                report.repeats.len()
            );
            if let Some(d) = &c.output_dir {
                println!("report written to {}", d.join("report.json").display());
            }
        }
        Command::Sweep {
            config,
            param,
            values,
            out,
        } => {
            let c = load_config(&config)?;
            c.validate()?;
            let param: SweepParam = param.parse()?;
            let hg = load_dataset(&c.dataset)?;
            let table = sweep(&hg, &c, param, &values)?;
            let csv = table.to_csv();
            print!("{csv}");
            println!("span {:.4}", table.span());
            if let Some(o) = out {
                std::fs::write(&o, csv).map_err(|e| Error::io(&o, e))?;
            }
        }
        Command::Time { config } => {
            let c = load_config(&config)?;
            c.validate()?;
            let hg = load_dataset(&c.dataset)?;
            let report = time_pretraining(&hg, &c)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Convert {
            citation,
            mode,
            out,
            keep_duplicates,
        } => {
            let mode: EgoMode = mode.parse()?;
            let graph = read_citation_graph(&citation[0], &citation[1])?;
            let hg = ego_network_hypergraphs(&graph, mode, !keep_duplicates)?;
            write_hypergraph(&hg, &out)?;
            let (lo, hi) = hg.size_range().unwrap_or((0, 0));
            println!(
                "{} nodes, {} hyperedges (sizes {lo}..={hi}), {} classes",
                hg.num_nodes(),
                hg.num_hyperedges(),
                hg.num_classes()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
