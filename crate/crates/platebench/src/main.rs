//! Thin command-line front end; all behavior lives in the library.

use clap::{Parser, Subcommand};
use platebench::cli;
use platebench::config::load_config;
use platebench::evaluator::Split;
use platebench::models::Family;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "platebench",
    about = "Simulate an orthotropic plate's pulse response and benchmark LR/MLP/GRU surrogates",
    version
)]
struct Args {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Dotted-path config overrides, e.g. --set plate.alpha=10.
    #[arg(long = "set", global = true, value_name = "PATH=VALUE")]
    sets: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the pulse-response dataset CSV.
    Simulate,
    /// Train one model and export checkpoint, trace and scatter data.
    Train {
        #[arg(long, value_parser = parse_family)]
        family: Family,
        #[arg(long)]
        s: usize,
        #[arg(long, default_value_t = 0)]
        h: usize,
    },
    /// Run the (family, s, h) experiment grid.
    Grid {
        /// Worker threads for grid cells; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Export predicted-vs-reference scatter data for a checkpoint.
    Scatter {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value = "test", value_parser = parse_split)]
        split: Split,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rebuild curves and the summary table from grid_results.csv.
    Report,
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_split(s: &str) -> Result<Split, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn run(args: Args) -> platebench::Result<()> {
    let cfg = load_config(args.config.as_deref(), &args.sets)?;
    match args.command {
        Command::Simulate => {
            let art = cli::cmd_simulate(&cfg)?;
            println!(
                "wrote {} ({} rows, {} modes); manifest {}",
                art.dataset.display(),
                art.rows,
                art.num_modes,
                art.manifest.display()
            );
        }
        Command::Train { family, s, h } => {
            let art = cli::cmd_train(&cfg, family, s, h)?;
            println!(
                "trained {} s={} h={}: train R² {:.4}, test R² {:.4}",
                family, s, h, art.train_r2, art.test_r2
            );
            println!("checkpoint {}", art.checkpoint.display());
        }
        Command::Grid { jobs } => {
            let art = cli::cmd_grid(&cfg, jobs)?;
            print!("{}", art.table);
            println!("results in {}", art.grid_csv.display());
        }
        Command::Scatter {
            checkpoint,
            split,
            out,
        } => {
            let path = cli::cmd_scatter(&cfg, &checkpoint, split, out)?;
            println!("wrote {}", path.display());
        }
        Command::Report => {
            let table = cli::cmd_report(&cfg)?;
            print!("{table}");
        }
    }
    Ok(())
}

fn main() {
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(e) => {
            // clap handles --help/--version as "errors" with success status
            if e.use_stderr() {
                eprint!("{e}");
                std::process::exit(1);
            }
            print!("{e}");
            std::process::exit(0);
        }
    };
    if let Err(e) = run(args) {
        eprintln!("error: {e}");
        std::process::exit(cli::exit_code(&e));
    }
}
