use crate::commands::{Cell, Table};
use crate::config::RunConfig;
use crate::error::CliError;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

pub const OUT_DIR_VAR: &str = "MOTIVDYN_OUT_DIR";

/// `--out`, then the config's `output_path`, then `<command>.tsv`. When
/// `MOTIVDYN_OUT_DIR` is set the file name is placed in that directory.
pub fn resolve_output(config: &RunConfig, out: Option<&Path>, out_dir: Option<&Path>) -> PathBuf {
    let path = out
        .map(Path::to_path_buf)
        .or_else(|| config.output_path.clone())
        .unwrap_or_else(|| PathBuf::from(format!("{}.tsv", config.command.as_str())));
    match (out_dir, path.file_name()) {
        (Some(dir), Some(name)) => dir.join(name),
        _ => path,
    }
}

pub fn manifest_path(results: &Path) -> PathBuf {
    let mut s = results.as_os_str().to_os_string();
    s.push(".manifest.toml");
    PathBuf::from(s)
}

fn format_cell(c: &Cell) -> String {
    match c {
        Cell::Num(v) if v.is_nan() => "nan".into(),
        Cell::Num(v) => format!("{v:.16e}"),
        Cell::Text(s) => s.replace(['\t', '\n'], " "),
    }
}

/// Tab-separated results: `#` comment lines, a header row, then one record per line.
pub fn render_table(config: &RunConfig, table: &Table) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# motivdyn {} {}", motivdyn::VERSION, config.command.as_str());
    let _ = writeln!(
        out,
        "# sigma={} eps_v={} eps_lambda={} eta={} c={}",
        config.sigma, config.eps_v, config.eps_lambda, config.eta, config.c
    );
    out.push_str(&table.columns.join("\t"));
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(format_cell).collect();
        out.push_str(&cells.join("\t"));
        out.push('\n');
    }
    out
}

pub fn render_manifest(config: &RunConfig, table: &Table, results: &Path) -> String {
    let mut run = toml::Table::new();
    run.insert("command".into(), config.command.as_str().into());
    run.insert("library_version".into(), motivdyn::VERSION.into());
    run.insert("cli_version".into(), env!("CARGO_PKG_VERSION").into());
    run.insert("results".into(), results.display().to_string().into());
    run.insert("rows".into(), (table.rows.len() as i64).into());
    run.insert("columns".into(), toml::Value::Array(table.columns.iter().map(|c| (*c).into()).collect()));
    let resolved: toml::Table = toml::Table::try_from(config).expect("config serializes to a table");
    let mut doc = toml::Table::new();
    doc.insert("run".into(), toml::Value::Table(run));
    doc.insert("config".into(), toml::Value::Table(resolved));
    doc.insert("summary".into(), toml::Value::Table(table.summary.clone().into_iter().collect()));
    toml::to_string(&doc).expect("manifest serializes")
}

/// Writes both files next to their targets first and renames them into place,
/// so a failure never leaves a partial results file behind.
pub fn write_outputs(results: &Path, table_text: &str, manifest_text: &str) -> Result<(), CliError> {
    let manifest = manifest_path(results);
    let staged = [(results.to_path_buf(), table_text), (manifest, manifest_text)];
    let mut written: Vec<PathBuf> = Vec::new();
    let cleanup = |paths: &[PathBuf]| {
        for p in paths {
            let _ = fs::remove_file(p);
        }
    };
    for (target, text) in &staged {
        let tmp = tmp_path(target);
        if let Err(e) = fs::write(&tmp, text) {
            cleanup(&written);
            let _ = fs::remove_file(&tmp);
            return Err(CliError::io(target, e));
        }
        written.push(tmp);
    }
    for (k, (target, _)) in staged.iter().enumerate() {
        if let Err(e) = fs::rename(&written[k], target) {
            cleanup(&written[k..]);
            for (done, _) in &staged[..k] {
                let _ = fs::remove_file(done);
            }
            return Err(CliError::io(target, e));
        }
    }
    Ok(())
}

fn tmp_path(target: &Path) -> PathBuf {
    let mut s = target.as_os_str().to_os_string();
    s.push(".partial");
    PathBuf::from(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Command;

    #[test]
    fn output_resolution_order() {
        let mut c = RunConfig::new(Command::Lyapunov);
        assert_eq!(resolve_output(&c, None, None), PathBuf::from("lyapunov.tsv"));
        c.output_path = Some("a/b.tsv".into());
        assert_eq!(resolve_output(&c, None, None), PathBuf::from("a/b.tsv"));
        assert_eq!(resolve_output(&c, Some(Path::new("c.tsv")), None), PathBuf::from("c.tsv"));
        assert_eq!(resolve_output(&c, None, Some(Path::new("/out"))), PathBuf::from("/out/b.tsv"));
        assert_eq!(manifest_path(Path::new("x/y.tsv")), PathBuf::from("x/y.tsv.manifest.toml"));
    }

    #[test]
    fn cells_keep_full_precision() {
        let s = format_cell(&Cell::Num(std::f64::consts::PI));
        assert_eq!(s.parse::<f64>().unwrap(), std::f64::consts::PI);
        assert_eq!(format_cell(&Cell::Num(f64::NAN)), "nan");
        assert_eq!(format_cell(&Cell::Text("a\tb".into())), "a b");
    }
}
