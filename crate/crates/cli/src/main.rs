use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use surfeig_cli::{cmd_mesh, cmd_report, cmd_solve, load_config, CliError};

#[derive(Parser)]
#[command(name = "surfeig", version, about = "Multigrid eigensolvers for the Laplace-Beltrami operator on the sphere")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the mesh hierarchy as OFF files.
    Mesh {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write stiffness, mass and prolongation matrices.
        #[arg(long)]
        dump_matrices: bool,
    },
    /// Compare finished runs.
    Report {
        /// Run directories or report.json files.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Mesh { config, out } => cmd_mesh(&load_config(&config)?, &out),
        Command::Solve { config, out, dump_matrices } => {
            let report = cmd_solve(&load_config(&config)?, &out, dump_matrices)?;
            for r in &report.rates {
                match r.rate {
                    Some(x) => println!("lambda = {:>6}: rate {x:.4}", r.target),
                    None => println!("lambda = {:>6}: rate n/a ({})", r.target, r.notes.join("; ")),
                }
            }
            Ok(())
        }
        Command::Report { inputs, out } => cmd_report(&inputs, &out).map(|_| ()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
