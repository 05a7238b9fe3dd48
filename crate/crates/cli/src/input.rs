//! Reading inputs (with hashes and JSON error paths), grid flags, writing
//! artifacts and run reports.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, Context};
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use eincausal::sphere::{GridSpec, SphereGrid};

use crate::Global;

/// An error together with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn usage(error: impl Into<anyhow::Error>) -> Self {
        Self { code: 64, error: error.into() }
    }

    fn output(error: impl Into<anyhow::Error>) -> Self {
        Self { code: 1, error: error.into() }
    }
}

impl From<eincausal::Error> for Failure {
    fn from(e: eincausal::Error) -> Self {
        Failure::usage(e)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::usage(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    FullSpace,
}

impl Status {
    fn code(self) -> u8 {
        match self {
            Status::Pass => 0,
            Status::Fail => 2,
            Status::FullSpace => 3,
        }
    }
}

pub enum Artifact {
    Json(String),
    Csv(String),
}

impl Artifact {
    pub fn json<T: Serialize>(value: &T) -> Result<Self, Failure> {
        let mut text = serde_json::to_string_pretty(value).map_err(Failure::output)?;
        text.push('\n');
        Ok(Artifact::Json(text))
    }

    fn text(&self) -> &str {
        match self {
            Artifact::Json(s) | Artifact::Csv(s) => s,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct InputRecord {
    source: String,
    sha256: String,
    bytes: usize,
}

#[derive(Debug, Serialize)]
struct RunReport<'a> {
    command: &'a str,
    inputs: &'a [InputRecord],
    grid: Option<&'a GridSpec>,
    seed: u64,
    samples: Option<usize>,
    tolerances: &'a BTreeMap<String, f64>,
    verdict: &'a str,
    witnesses: &'a [serde_json::Value],
    warnings: &'a [String],
    wall_time_s: f64,
}

pub struct Session {
    pub global: Global,
    inputs: Vec<InputRecord>,
    grid: Option<Arc<SphereGrid>>,
    grid_used: Option<GridSpec>,
}

impl Session {
    pub fn new(global: Global) -> Self {
        Self { global, inputs: Vec::new(), grid: None, grid_used: None }
    }

    fn record(&mut self, source: String, bytes: &[u8]) {
        self.inputs.push(InputRecord { source, sha256: hex::encode(Sha256::digest(bytes)), bytes: bytes.len() });
    }

    /// Reads and parses a JSON file; parse errors name the file and the
    /// JSON path of the offending value.
    pub fn load<T: DeserializeOwned>(&mut self, path: &Path) -> Result<T, Failure> {
        let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
        self.record(path.display().to_string(), &bytes);
        parse(&bytes, &path.display().to_string())
    }

    /// Parses `arg` as inline JSON when it looks like JSON, else as a path.
    pub fn load_inline<T: DeserializeOwned>(&mut self, arg: &str) -> Result<T, Failure> {
        let trimmed = arg.trim_start();
        if trimmed.starts_with('{') || trimmed.starts_with('[') {
            self.record("<inline>".into(), arg.as_bytes());
            parse(arg.as_bytes(), "inline argument")
        } else {
            self.load(Path::new(arg))
        }
    }

    /// The grid named by `--grid`, if any.
    pub fn grid_flag(&mut self) -> Result<Option<Arc<SphereGrid>>, Failure> {
        if self.grid.is_none() {
            if let Some(arg) = self.global.grid.clone() {
                let spec = self.grid_spec(&arg)?;
                self.grid = Some(Arc::new(SphereGrid::build(&spec)?));
            }
        }
        Ok(self.grid.clone())
    }

    fn grid_spec(&mut self, arg: &str) -> Result<GridSpec, Failure> {
        if let Some((kind, n)) = arg.split_once(':') {
            let bad = || Failure::usage(anyhow!("bad --grid value {arg:?}"));
            return match kind {
                "circle" => Ok(GridSpec::Circle { n: n.parse().map_err(|_| bad())? }),
                "icosphere" => Ok(GridSpec::Icosphere { subdivisions: n.parse().map_err(|_| bad())? }),
                _ => Err(bad()),
            };
        }
        self.load_inline(arg)
    }

    pub fn use_grid(&mut self, spec: &GridSpec) {
        self.grid_used = Some(spec.clone());
    }

    pub fn samples(&self, default: usize) -> usize {
        self.global.samples.unwrap_or(default)
    }

    /// Writes the artifact and the report; returns the exit code.
    pub fn finish(self, command: &str, outcome: Outcome, elapsed: Duration) -> Result<u8, Failure> {
        match &self.global.out {
            Some(path) => fs::write(path, outcome.artifact.text())
                .with_context(|| format!("cannot write {}", path.display()))
                .map_err(Failure::output)?,
            None => std::io::stdout().write_all(outcome.artifact.text().as_bytes()).map_err(Failure::output)?,
        }
        for w in &outcome.warnings {
            eprintln!("warning: {w}");
        }
        if let Some(path) = &self.global.report {
            let report = RunReport {
                command,
                inputs: &self.inputs,
                grid: self.grid_used.as_ref(),
                seed: self.global.seed,
                samples: self.global.samples,
                tolerances: &outcome.tolerances,
                verdict: &outcome.verdict,
                witnesses: &outcome.witnesses,
                warnings: &outcome.warnings,
                wall_time_s: elapsed.as_secs_f64(),
            };
            let mut text = serde_json::to_string_pretty(&report).map_err(Failure::output)?;
            text.push('\n');
            fs::write(path, text)
                .with_context(|| format!("cannot write {}", path.display()))
                .map_err(Failure::output)?;
        }
        Ok(outcome.status.code())
    }
}

fn parse<T: DeserializeOwned>(bytes: &[u8], what: &str) -> Result<T, Failure> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Failure::usage(anyhow!("{what}: malformed JSON at `{path}`: {}", e.into_inner()))
    })
}

/// Result of one command before it is written out.
pub struct Outcome {
    pub artifact: Artifact,
    pub status: Status,
    pub verdict: String,
    pub witnesses: Vec<serde_json::Value>,
    pub tolerances: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

impl Outcome {
    pub fn new(artifact: Artifact, status: Status, verdict: impl Into<String>) -> Self {
        Self {
            artifact,
            status,
            verdict: verdict.into(),
            witnesses: Vec::new(),
            tolerances: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    pub fn tol(mut self, name: &str, value: f64) -> Self {
        self.tolerances.insert(name.into(), value);
        self
    }

    pub fn witness<T: Serialize>(mut self, w: &T) -> Self {
        self.witnesses.push(serde_json::to_value(w).expect("witnesses serialize"));
        self
    }

    pub fn warnings(mut self, w: impl IntoIterator<Item = String>) -> Self {
        self.warnings.extend(w);
        self
    }
}
