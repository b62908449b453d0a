//! Benchmark harness: synthetic datasets, mock engines, file and pipe
//! transfer runners and their report.

mod bench;
mod dataset;
mod engine;

use thiserror::Error;

pub use bench::{
    bench_report, run_baseline_file, run_baseline_file_with, run_bench, run_pipe, run_pipe_with, speedup, BenchReport,
    BenchResult, BenchRun, BenchSpec, Mode, ReportRecord,
};
pub use dataset::{concat_blocks, generate_dataset, partition, Payload, PAIRS};
pub use engine::{example_json_docs, json_lines_len, CsvEngine, JsonEngine};

use crate::pipe::PipeError;
use crate::wire::{Compression, WireError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Pipe(#[from] PipeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("invalid bench spec: {0}")]
    Spec(String),
    #[error("cannot build report: {0}")]
    Report(String),
    #[error("line {line}: {reason}")]
    Config { line: usize, reason: String },
}

impl From<WireError> for HarnessError {
    fn from(e: WireError) -> Self {
        HarnessError::Pipe(e.into())
    }
}

/// Parses `key = value` lines. Blank lines and lines starting with `#` are
/// skipped; keys are lower-cased and `-` is read as `_`.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>, HarnessError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| HarnessError::Config { line: i + 1, reason: format!("expected key=value, got {line:?}") })?;
        let key = k.trim().to_ascii_lowercase().replace('-', "_");
        if key.is_empty() {
            return Err(HarnessError::Config { line: i + 1, reason: "empty key".into() });
        }
        out.push((key, v.trim().to_owned()));
    }
    Ok(out)
}

/// A benchmark plan: every listed mode crossed with every listed codec (file
/// transfers once), each run `repeats` times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchPlan {
    pub specs: Vec<BenchSpec>,
    pub repeats: usize,
}

/// Reads a plan from `key=value` text. Recognized keys: `n`, `seed`,
/// `workers`, `payload`, `block_rows`, `modes`, `codecs` (comma lists) and
/// `repeats`.
pub fn parse_bench_plan(text: &str) -> Result<BenchPlan, HarnessError> {
    let mut base = BenchSpec::default();
    let mut modes = Mode::ALL.to_vec();
    let mut codecs = vec![Compression::None];
    let mut repeats = 1;
    fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, HarnessError> {
        v.replace('_', "").parse().map_err(|_| HarnessError::Spec(format!("{key}: not a number: {v:?}")))
    }
    fn list<T: std::str::FromStr<Err = String>>(v: &str) -> Result<Vec<T>, HarnessError> {
        v.split(',').map(|s| s.trim().parse().map_err(HarnessError::Spec)).collect()
    }
    for (k, v) in parse_key_values(text)? {
        match k.as_str() {
            "n" => base.n = num(&k, &v)?,
            "seed" => base.seed = num(&k, &v)?,
            "workers" => base.workers = num(&k, &v)?,
            "block_rows" => base.block_rows = num(&k, &v)?,
            "repeats" => repeats = num(&k, &v)?,
            "payload" => base.payload = v.parse().map_err(HarnessError::Spec)?,
            "modes" | "mode" => modes = list(&v)?,
            "codecs" | "codec" => codecs = list(&v)?,
            _ => return Err(HarnessError::Spec(format!("unknown key {k:?}"))),
        }
    }
    base.validate()?;
    if repeats == 0 {
        return Err(HarnessError::Spec("repeats must be at least 1".into()));
    }
    let mut specs = Vec::new();
    for mode in modes {
        if mode == Mode::FileCsv {
            specs.push(BenchSpec { mode, codec: Compression::None, ..base.clone() });
            continue;
        }
        for &codec in &codecs {
            specs.push(BenchSpec { mode, codec, ..base.clone() });
        }
    }
    Ok(BenchPlan { specs, repeats })
}
