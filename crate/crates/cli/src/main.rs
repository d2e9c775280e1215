use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lrising_cli::config::LoadedConfig;
use lrising_cli::verify::{run_suite, Suite, DEFAULT_SEED};
use lrising_cli::{artifact, run, CliError, EXIT_OTHER};

#[derive(Parser)]
#[command(name = "lrising", version, about = "Long-range Ising laboratory")]
struct Cli {
    /// Worker threads for parallel sums (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the master seed of the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run an acceptance suite and print one line per criterion.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn run_command(config: PathBuf, seed: Option<u64>, out_dir: PathBuf) -> Result<(), CliError> {
    let cfg = LoadedConfig::load(&config)?;
    let seed = seed.unwrap_or(cfg.config.seed);
    let out = run::execute(&cfg, seed)?;
    let paths = artifact::write_all(&out_dir, &out.artifacts)?;
    let names: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
    println!("{} -> {}", out.summary, names.join(", "));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_OTHER as u8);
        }
    }
    match cli.command {
        Command::Run { config, seed, out_dir } => match run_command(config, seed, out_dir) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
        Command::Verify { suite, seed } => {
            let results = run_suite(suite, seed.unwrap_or(DEFAULT_SEED));
            for c in &results {
                println!("{c}");
            }
            if results.iter().all(|c| c.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_OTHER as u8)
            }
        }
    }
}
