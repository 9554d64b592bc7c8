//! File output. Every document carries the tool version, the seed and the
//! effective configuration; files are written under a `.partial` name and
//! renamed only once complete.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

pub const TOOL: &str = "cmjlab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Ok,
    NotSupercritical,
    Regime,
    CapHit,
    BudgetExhausted,
    Mismatch,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    seed: u64,
    status: Status,
    config: &'a RunConfig,
    #[serde(flatten)]
    body: &'a T,
}

pub fn partial_path(path: &Path) -> PathBuf {
    let mut name = OsString::from(path.as_os_str());
    name.push(".partial");
    PathBuf::from(name)
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        source: e,
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

/// Writes `path.partial`, then renames it to `path` unless `complete` is false.
/// Returns the path that now holds the data.
pub fn write_file(path: &Path, bytes: &[u8], complete: bool) -> Result<PathBuf, CliError> {
    let partial = partial_path(path);
    fs::write(&partial, bytes).map_err(|e| io_err(&partial, e))?;
    if !complete {
        return Ok(partial);
    }
    fs::rename(&partial, path).map_err(|e| io_err(path, e))?;
    Ok(path.to_path_buf())
}

pub fn json_bytes<T: Serialize>(cfg: &RunConfig, status: Status, body: &T) -> Vec<u8> {
    let env = Envelope {
        tool: TOOL,
        version: VERSION,
        seed: cfg.seed,
        status,
        config: cfg,
        body,
    };
    let mut out = serde_json::to_vec_pretty(&env).expect("report serializes to JSON");
    out.push(b'\n');
    out
}

/// CSV with `#` comment lines carrying the provenance, then header and rows.
pub struct CsvDoc {
    head: Vec<u8>,
    writer: csv::Writer<Vec<u8>>,
}

impl CsvDoc {
    pub fn new(cfg: &RunConfig, header: &[&str]) -> Self {
        let config = serde_json::to_string(cfg).expect("run config serializes to JSON");
        let head = format!("# tool: {TOOL} {VERSION}\n# seed: {}\n# config: {config}\n", cfg.seed).into_bytes();
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Self { head, writer }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).expect("in-memory write");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        let mut out = self.head;
        out.extend(self.writer.into_inner().expect("in-memory flush"));
        out
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:?}")
    }
}
