use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use starfd_cli::{load, presets, run_experiment, write_outputs, CliError, OutputPaths};

#[derive(Parser)]
#[command(name = "starfd", version, about = "Ergodic-rate sweeps for STAR-RIS assisted full-duplex NOMA")]
struct Cli {
    /// Worker threads (default: one per core). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment file (or `preset:<name>`) and write CSV, manifest and summary.
    Run {
        spec: String,
        /// CSV path; overrides the file's `output` key.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check an experiment file and print its resolved form.
    Validate { spec: String },
    /// Shipped experiment files.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    Show { name: String },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation(vec!["--threads must be at least 1".into()]));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Io(format!("cannot start thread pool: {e}")))?;
    }
    match cli.command {
        Command::Run { spec, out } => {
            let exp = load(&spec)?;
            let csv = out
                .or_else(|| exp.output.clone())
                .unwrap_or_else(|| PathBuf::from(format!("{}.csv", exp.name)));
            let table = run_experiment(&exp)?;
            let paths = OutputPaths::for_csv(&csv);
            write_outputs(&exp, &table, &paths)?;
            print!("{}", table.summary());
            println!("wrote {} ({} rows), {}", paths.csv.display(), table.rows.len(), paths.manifest.display());
        }
        Command::Validate { spec } => print!("{}", load(&spec)?.manifest()),
        Command::Presets { action: PresetAction::List } => {
            let width = presets::PRESETS.iter().map(|p| p.0.len()).max().unwrap_or(0);
            for (name, about, _) in presets::PRESETS {
                println!("{name:<width$}  {about}");
            }
        }
        Command::Presets { action: PresetAction::Show { name } } => match presets::get(&name) {
            Some(text) => print!("{text}"),
            None => return Err(CliError::Validation(vec![format!("unknown preset '{name}'")])),
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
