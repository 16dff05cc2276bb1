//! Report, table, plot-data and matrix files, and the checksum manifest.

use crate::experiments::Outcome;
use lognd::harness::ExperimentReport;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

pub const MANIFEST: &str = "manifest.sha256";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    /// Report JSON only.
    Json,
    /// CSV tables, plot data and matrices only.
    Csv,
    /// Everything.
    #[default]
    Both,
}

impl Format {
    fn json(self) -> bool {
        self != Format::Csv
    }

    fn csv(self) -> bool {
        self != Format::Json
    }
}

/// File-name-safe form of a (possibly prefixed) table or curve name.
fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn write(path: &Path, contents: &str, written: &mut Vec<PathBuf>) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, contents)?;
    written.push(path.to_path_buf());
    Ok(())
}

/// One two-column CSV per curve of `report` in `dir`, raw values.
pub fn emit_plotdata(report: &ExperimentReport, dir: &Path) -> io::Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for c in &report.curves {
        write(&dir.join(format!("{}.csv", file_stem(&c.name))), &c.to_csv(), &mut written)?;
    }
    Ok(written)
}

/// Writes the outcome of one experiment under `dir`.
pub fn write_outcome(outcome: &Outcome, dir: &Path, format: Format) -> io::Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let report = &outcome.report;
    if format.json() {
        let json = report.to_json().map_err(|e| io::Error::other(e.to_string()))?;
        write(&dir.join("report.json"), &json, &mut written)?;
    }
    if format.csv() {
        for t in &report.tables {
            write(&dir.join("tables").join(format!("{}.csv", file_stem(&t.name))), &t.to_csv(), &mut written)?;
        }
        written.extend(emit_plotdata(report, &dir.join("plot"))?);
        for (name, csv) in &outcome.matrices {
            write(&dir.join("matrices").join(format!("{}.csv", file_stem(name))), csv, &mut written)?;
        }
    }
    Ok(written)
}

/// `sha256sum`-compatible manifest of `files`, with paths relative to
/// `root` and sorted.
pub fn write_manifest(root: &Path, files: &[PathBuf]) -> io::Result<PathBuf> {
    let mut entries = Vec::new();
    for f in files {
        let digest = Sha256::digest(std::fs::read(f)?);
        let rel = f.strip_prefix(root).unwrap_or(f);
        let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
        entries.push((rel, digest));
    }
    entries.sort();
    let mut text = String::new();
    for (rel, digest) in entries {
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        let _ = writeln!(text, "{hex}  {rel}");
    }
    let path = root.join(MANIFEST);
    std::fs::write(&path, text)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use lognd::harness::Curve;

    #[test]
    fn plotdata_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mut report = ExperimentReport::new("demo");
        report.curves.push(Curve::new("eps0.1/log_difference", "tau", "norm", vec![[0.1, 0.5], [0.2, 0.7]]));
        let files = emit_plotdata(&report, dir.path()).unwrap();
        assert_eq!(files.len(), 1);
        let text = std::fs::read_to_string(&files[0]).unwrap();
        assert_eq!(text, "tau,norm\n0.1,0.5\n0.2,0.7\n");
        assert!(files[0].ends_with("eps0.1_log_difference.csv"));

        let m = write_manifest(dir.path(), &files).unwrap();
        let first = std::fs::read_to_string(&m).unwrap();
        assert!(first.ends_with("  eps0.1_log_difference.csv\n"));
        write_manifest(dir.path(), &files).unwrap();
        assert_eq!(first, std::fs::read_to_string(&m).unwrap());
    }
}
