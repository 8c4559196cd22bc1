use clap::{CommandFactory, FromArgMatches, Parser};
use motivdyn_cli::{columns_help, run, CliError, Command, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

/// Analyses of the two-task motivation dynamics.
#[derive(Parser, Debug)]
#[command(name = "motivdyn", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Flat TOML file with model, integrator and grid keys.
    #[arg(long)]
    config: PathBuf,
    /// Results file; the manifest goes to `<out>.manifest.toml`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for grid commands.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let matches = Args::command()
        .after_long_help(columns_help())
        .after_help("Exit status: 2 config error, 3 numerical failure, 4 I/O failure. See --help for output columns.")
        .get_matches();
    let args = match Args::from_arg_matches(&matches) {
        Ok(a) => a,
        Err(e) => e.exit(),
    };
    match execute(&args) {
        Ok(outcome) => {
            eprintln!("wrote {} rows to {}", outcome.rows, outcome.results.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("motivdyn: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(args: &Args) -> Result<motivdyn_cli::RunOutcome, CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| CliError::Io {
        path: args.config.clone(),
        source: e,
    })?;
    let config = RunConfig::parse(&text, Some(args.command))?;
    run(&config, args.out.as_deref(), args.threads)
}
