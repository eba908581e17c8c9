//! Artifact writers and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use surfride_core::{Error, Result};

pub const MANIFEST: &str = "manifest.json";

/// Writes into one directory and remembers every file name it produced.
pub struct ArtifactDir {
    pub dir: PathBuf,
    pub files: Vec<String>,
}

impl ArtifactDir {
    pub fn create(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(ArtifactDir { dir, files: Vec::new() })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    /// CSV with a header row; floats use the shortest round-trip form.
    pub fn csv<I, R>(&mut self, name: &str, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = Cell>,
    {
        let path = self.path(name);
        let io = |e: csv::Error| match e.into_kind() {
            csv::ErrorKind::Io(e) => Error::io(&path, e),
            other => Error::Config(format!("{}: {other:?}", path.display())),
        };
        let mut w = csv::Writer::from_path(&path).map_err(io)?;
        w.write_record(header).map_err(io)?;
        for row in rows {
            w.write_record(row.into_iter().map(|c| c.0)).map_err(io)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))
    }
}

/// One CSV field.
pub struct Cell(pub String);

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell(v.to_string())
    }
}

/// `None` becomes an empty field.
impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        Cell(v.map(|v| v.to_string()).unwrap_or_default())
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell(v.to_string())
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell(v.to_string())
    }
}

/// Row literal: `row![a, b, c]` converts each field into a [`Cell`].
#[macro_export]
macro_rules! row {
    ($($v:expr),* $(,)?) => {
        vec![$($crate::output::Cell::from($v)),*]
    };
}

/// Everything needed to reproduce one subcommand's artifacts. Holds no
/// timestamps, absolute paths or thread counts, so identical campaigns
/// produce identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub version: String,
    /// SHA-256 of the campaign, ship and gain-table bytes.
    pub config_sha256: String,
    pub seeds: BTreeMap<String, u64>,
    pub derived: serde_json::Value,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub runs: BTreeMap<String, RunRecord>,
}

/// Adds or replaces the record of `command` in the directory's manifest.
pub fn record_run(dir: &Path, command: &str, record: RunRecord) -> Result<()> {
    let path = dir.join(MANIFEST);
    let mut manifest: Manifest = fs::read_to_string(&path)
        .ok()
        .and_then(|t| serde_json::from_str(&t).ok())
        .unwrap_or_default();
    manifest.runs.insert(command.to_string(), record);
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_merges_commands() {
        let dir = tempfile::tempdir().unwrap();
        let rec = |v: &str| RunRecord {
            version: v.into(),
            config_sha256: "00".into(),
            seeds: BTreeMap::from([("seaway".into(), 7)]),
            derived: serde_json::json!({}),
            files: vec![],
        };
        record_run(dir.path(), "sweep", rec("a")).unwrap();
        record_run(dir.path(), "fpk", rec("b")).unwrap();
        record_run(dir.path(), "sweep", rec("c")).unwrap();
        let m: Manifest = serde_json::from_str(&fs::read_to_string(dir.path().join(MANIFEST)).unwrap()).unwrap();
        assert_eq!(m.runs.len(), 2);
        assert_eq!(m.runs["sweep"].version, "c");
    }

    #[test]
    fn csv_round_trips_floats() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = ArtifactDir::create(dir.path().into()).unwrap();
        let x = 0.1 + 0.2;
        out.csv("a.csv", &["x", "n"], [row![x, 3usize]]).unwrap();
        let text = fs::read_to_string(dir.path().join("a.csv")).unwrap();
        let v: f64 = text.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
        assert_eq!(v, x);
        assert_eq!(out.files, ["a.csv"]);
    }
}
