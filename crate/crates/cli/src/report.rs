//! Tables, checks, and their on-disk form: one CSV per table, a manifest
//! with the config hash, and run metadata kept apart from the CSV bodies.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use fpam_core::noise::NoiseRealization;
use fpam_core::solver::EvolutionRecord;

use crate::config::{ExperimentConfig, ExportKind};
use crate::formats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Reported without gating the exit code.
    Info,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Info => "INFO",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "<")]
    Below,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
            Relation::Below => "<",
        }
    }

    fn holds(self, measured: f64, threshold: f64) -> bool {
        match self {
            Relation::AtMost => measured <= threshold,
            Relation::AtLeast => measured >= threshold,
            Relation::Below => measured < threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub verdict: Verdict,
}

impl Check {
    pub fn new(name: impl Into<String>, measured: f64, relation: Relation, threshold: f64) -> Self {
        let verdict = if relation.holds(measured, threshold) {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self {
            name: name.into(),
            measured,
            relation,
            threshold,
            verdict,
        }
    }

    /// A measured value with a reference threshold that never gates the run.
    pub fn info(name: impl Into<String>, measured: f64, relation: Relation, threshold: f64) -> Self {
        Self {
            verdict: Verdict::Info,
            ..Self::new(name, measured, relation, threshold)
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {} {} {}",
            self.verdict,
            self.name,
            fmt_f64(self.measured),
            self.relation.symbol(),
            fmt_f64(self.threshold)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width in {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }

    pub fn to_csv(&self) -> io::Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| e.into_error())
    }
}

/// Shortest round-trip decimal; `NaN`/`inf` spelled out.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:e}")
    }
}

/// Non-tabular output written next to the CSV files.
#[derive(Debug, Clone)]
pub enum Attachment {
    Noise(NoiseRealization),
    Record {
        name: String,
        record: EvolutionRecord,
        kind: ExportKind,
    },
}

impl Attachment {
    fn file_name(&self) -> String {
        match self {
            Attachment::Noise(n) => format!("noise_seed{}.bin", n.seed()),
            Attachment::Record { name, kind, .. } => match kind {
                ExportKind::Csv => format!("{name}.csv"),
                _ => format!("{name}.bin"),
            },
        }
    }

    fn bytes(&self) -> io::Result<Vec<u8>> {
        let mut buf = Vec::new();
        match self {
            Attachment::Noise(n) => formats::write_noise(&mut buf, n)?,
            Attachment::Record { record, kind, .. } => match kind {
                ExportKind::Csv => formats::write_record_csv(&mut buf, record)?,
                _ => formats::write_record_binary(&mut buf, record)?,
            },
        }
        Ok(buf)
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub experiment: String,
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
    pub attachments: Vec<Attachment>,
}

impl Report {
    pub fn new(experiment: impl Into<String>) -> Self {
        Self {
            experiment: experiment.into(),
            tables: Vec::new(),
            checks: Vec::new(),
            attachments: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn checks_table(&self) -> Table {
        let mut t = Table::new("checks", &["check", "measured", "relation", "threshold", "verdict"]);
        for c in &self.checks {
            t.push(vec![
                c.name.clone(),
                fmt_f64(c.measured),
                c.relation.symbol().to_string(),
                fmt_f64(c.threshold),
                c.verdict.to_string(),
            ]);
        }
        t
    }

    /// Write every table plus `checks.csv`, the attachments, `manifest.json`
    /// and `metadata.json` into `dir`; returns the CSV paths.
    pub fn write(&self, dir: &Path, cfg: &ExperimentConfig, meta: &RunMetadata) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut files = Vec::new();
        let mut entries = Vec::new();
        for t in self.tables.iter().cloned().chain(std::iter::once(self.checks_table())) {
            let body = t.to_csv()?;
            let name = format!("{}.csv", t.name);
            let path = dir.join(&name);
            fs::write(&path, &body)?;
            entries.push(ManifestEntry {
                file: name,
                rows: t.rows.len(),
                sha256: hex(&Sha256::digest(&body)),
            });
            files.push(path);
        }
        for a in &self.attachments {
            let body = a.bytes()?;
            let name = a.file_name();
            fs::write(dir.join(&name), &body)?;
            entries.push(ManifestEntry {
                file: name,
                rows: 0,
                sha256: hex(&Sha256::digest(&body)),
            });
        }
        let manifest = Manifest {
            experiment: &self.experiment,
            version: env!("CARGO_PKG_VERSION"),
            config_hash: cfg.hash(),
            config: cfg,
            passed: self.passed(),
            files: entries,
        };
        fs::write(dir.join("manifest.json"), to_json(&manifest)?)?;
        fs::write(dir.join("metadata.json"), to_json(meta)?)?;
        Ok(files)
    }
}

#[derive(Serialize)]
struct ManifestEntry {
    file: String,
    rows: usize,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    version: &'a str,
    config_hash: String,
    config: &'a ExperimentConfig,
    passed: bool,
    files: Vec<ManifestEntry>,
}

/// Everything that legitimately differs between identical runs.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub started_unix: f64,
    pub finished_unix: f64,
    pub elapsed_seconds: f64,
    pub threads: usize,
}

impl RunMetadata {
    pub fn start(threads: usize) -> Self {
        let now = unix_now();
        Self {
            started_unix: now,
            finished_unix: now,
            elapsed_seconds: 0.0,
            threads,
        }
    }

    pub fn finish(&mut self) {
        self.finished_unix = unix_now();
        self.elapsed_seconds = self.finished_unix - self.started_unix;
    }
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn to_json<T: Serialize>(v: &T) -> io::Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(io::Error::other)?;
    s.push('\n');
    Ok(s)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts() {
        assert_eq!(Check::new("a", 1.0, Relation::AtMost, 1.0).verdict, Verdict::Pass);
        assert_eq!(Check::new("a", 1.0, Relation::Below, 1.0).verdict, Verdict::Fail);
        assert_eq!(Check::new("a", f64::NAN, Relation::AtLeast, 0.0).verdict, Verdict::Fail);
        let info = Check::info("a", 5.0, Relation::AtMost, 1.0);
        assert!(info.passed());
        let mut r = Report::new("x");
        r.checks.push(info);
        assert!(r.passed());
        r.checks.push(Check::new("b", 2.0, Relation::AtMost, 1.0));
        assert!(!r.passed());
    }

    #[test]
    fn csv_uses_lf_and_round_trip_floats() {
        let mut t = Table::new("t", &["a", "b"]);
        t.push(vec![fmt_f64(0.1), fmt_f64(f64::NAN)]);
        let s = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(s, "a,b\n1e-1,NaN\n");
        assert_eq!("1e-1".parse::<f64>().unwrap(), 0.1);
        let x = 0.220_635_600_152_652_17;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }
}
