//! Check records, `summary.json` and artifact files.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `value ≤ tolerance`
    AtMost,
    /// `value ≥ tolerance`
    AtLeast,
    /// `value > tolerance`
    Above,
    /// `value < tolerance`
    Below,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, relation: Relation, tolerance: f64) -> Self {
        let passed = match relation {
            Relation::AtMost => value <= tolerance,
            Relation::AtLeast => value >= tolerance,
            Relation::Above => value > tolerance,
            Relation::Below => value < tolerance,
        };
        Check { name: name.into(), value, relation, tolerance, passed }
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub command: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
    /// Reported quantities that carry no tolerance.
    pub values: BTreeMap<String, Value>,
    pub artifacts: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorRecord>,
}

/// Collects checks and writes artifacts below one output directory.
pub struct Report {
    dir: PathBuf,
    command: String,
    seed: u64,
    checks: Vec<Check>,
    values: BTreeMap<String, Value>,
    artifacts: Vec<String>,
}

impl Report {
    pub fn new(dir: &Path, command: &str, seed: u64) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Report {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            seed,
            checks: Vec::new(),
            values: BTreeMap::new(),
            artifacts: Vec::new(),
        })
    }

    pub fn check(&mut self, name: impl Into<String>, value: f64, relation: Relation, tolerance: f64) -> bool {
        let c = Check::new(name, value, relation, tolerance);
        let passed = c.passed;
        self.checks.push(c);
        passed
    }

    pub fn value(&mut self, name: &str, v: impl Serialize) {
        self.values.insert(name.to_string(), serde_json::to_value(v).expect("serializable value"));
    }

    /// Writes `name` (relative, may contain a sub-directory) through `body`.
    pub fn artifact<F>(&mut self, name: &str, body: F) -> anyhow::Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> anyhow::Result<()>,
    {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let file = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
        let mut w = BufWriter::new(file);
        body(&mut w)?;
        w.flush()?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    pub fn json_artifact(&mut self, name: &str, v: &impl Serialize) -> anyhow::Result<()> {
        self.artifact(name, |w| {
            serde_json::to_writer_pretty(&mut *w, v)?;
            writeln!(w)?;
            Ok(())
        })
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn finish(self) -> anyhow::Result<Summary> {
        let summary = Summary {
            command: self.command,
            seed: self.seed,
            passed: self.checks.iter().all(|c| c.passed),
            checks: self.checks,
            values: self.values,
            artifacts: self.artifacts,
            error: None,
        };
        write_summary(&self.dir, &summary)?;
        Ok(summary)
    }
}

pub fn write_summary(dir: &Path, summary: &Summary) -> anyhow::Result<()> {
    fs::create_dir_all(dir)?;
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    fs::write(dir.join("summary.json"), text)?;
    Ok(())
}
