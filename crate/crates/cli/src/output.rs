//! Atomic file output and run manifests.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::config::{RunFile, CONFIG_DIALECT};
use crate::error::{CliError, CliResult};

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Comma-separated table with a header row.
pub fn csv_text<S: AsRef<str>>(header: &[S], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    let head: Vec<&str> = header.iter().map(AsRef::as_ref).collect();
    out.push_str(&head.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// A named output file held in memory until the run succeeds.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
    pub rows: usize,
}

impl Artifact {
    pub fn table<S: AsRef<str>>(name: impl Into<String>, header: &[S], rows: &[Vec<String>]) -> Self {
        Self {
            name: name.into(),
            contents: csv_text(header, rows),
            rows: rows.len(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub rows: usize,
}

/// Sidecar describing how the outputs were produced. Carries no timestamps
/// so that reruns reproduce it byte for byte.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config_dialect: &'static str,
    /// Resolved run file; `clockwork <command> --config <run_file>` reruns the job.
    pub run_file: String,
    pub seed: Option<u64>,
    pub outputs: Vec<OutputEntry>,
    pub summary: &'a str,
    pub config: &'a RunFile,
}

/// Writes the artifacts, the resolved run file and the manifest into `dir`.
pub fn write_run(
    dir: &Path,
    command: &str,
    seed: Option<u64>,
    artifacts: &[Artifact],
    resolved: &RunFile,
    summary: &str,
) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = Vec::new();
    for a in artifacts {
        let path = dir.join(&a.name);
        write_atomic(&path, a.contents.as_bytes())?;
        written.push(path);
    }
    let run_file = format!("{command}.run.toml");
    let mut rerun = resolved.clone();
    rerun.output_dir = None;
    let text = toml::to_string(&rerun).map_err(|e| CliError::Config(format!("cannot serialize run file: {e}")))?;
    let path = dir.join(&run_file);
    write_atomic(&path, text.as_bytes())?;
    written.push(path);

    let manifest = Manifest {
        tool: "clockwork",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config_dialect: CONFIG_DIALECT,
        run_file,
        seed,
        outputs: artifacts
            .iter()
            .map(|a| OutputEntry {
                file: a.name.clone(),
                rows: a.rows,
            })
            .collect(),
        summary,
        config: &rerun,
    };
    let mut json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Config(format!("cannot serialize manifest: {e}")))?;
    json.push('\n');
    let path = dir.join(format!("{command}.manifest.json"));
    write_atomic(&path, json.as_bytes())?;
    written.push(path);
    Ok(written)
}
