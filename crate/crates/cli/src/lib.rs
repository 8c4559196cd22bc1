//! Batch front end: every analysis runs from a flat TOML config and writes a
//! tab-separated results table plus a `<results>.manifest.toml`.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{column_help, columns, execute, Cell, Table};
pub use config::{default_reproduction_suite, Command, RunConfig};
pub use error::CliError;

use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub results: PathBuf,
    pub manifest: PathBuf,
    pub rows: usize,
}

/// Computes the table for `config` and writes it with its manifest. `threads`
/// sizes the worker pool for grid commands; the output does not depend on it.
pub fn run(config: &RunConfig, out: Option<&Path>, threads: Option<usize>) -> Result<RunOutcome, CliError> {
    let out_dir = std::env::var_os(output::OUT_DIR_VAR).map(PathBuf::from);
    run_in(config, out, out_dir.as_deref(), threads)
}

pub fn run_in(
    config: &RunConfig,
    out: Option<&Path>,
    out_dir: Option<&Path>,
    threads: Option<usize>,
) -> Result<RunOutcome, CliError> {
    let table = match threads {
        Some(0) => return Err(CliError::Config("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?
            .install(|| execute(config))?,
        None => execute(config)?,
    };
    let results = output::resolve_output(config, out, out_dir);
    let text = output::render_table(config, &table);
    let manifest = output::render_manifest(config, &table, &results);
    output::write_outputs(&results, &text, &manifest)?;
    Ok(RunOutcome {
        manifest: output::manifest_path(&results),
        results,
        rows: table.rows.len(),
    })
}

/// Column documentation for every command, as printed by `--help`.
pub fn columns_help() -> String {
    let mut s = String::from("Output columns (tab-separated, one header row after the # lines):\n");
    for cmd in Command::ALL {
        s.push_str(&format!("\n  {}: {}\n    {}\n", cmd.as_str(), columns(cmd).join(", "), column_help(cmd)));
        if let Some(g) = cmd.grid_meaning() {
            s.push_str(&format!("    grid = {g}\n"));
        }
    }
    s
}
