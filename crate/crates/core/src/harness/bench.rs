use std::fmt::{self, Write as _};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::dataset::{concat_blocks, generate_dataset, partition, Payload};
use super::engine::CsvEngine;
use super::HarnessError;
use crate::directory::{DirectoryConfig, DirectoryServer, ReservedTarget};
use crate::pipe::{open_input, open_output, partition_path, PipeConfig, PipeError, PipeFormat, TransferMetrics};
use crate::wire::{ColumnBlock, Compression};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    FileCsv,
    PipeText,
    PipeRow,
    PipeColumn,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::FileCsv, Mode::PipeText, Mode::PipeRow, Mode::PipeColumn];

    pub fn pipe_format(self) -> Option<PipeFormat> {
        match self {
            Mode::FileCsv => None,
            Mode::PipeText => Some(PipeFormat::Text),
            Mode::PipeRow => Some(PipeFormat::Row),
            Mode::PipeColumn => Some(PipeFormat::Column),
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "file_csv" | "file" => Ok(Mode::FileCsv),
            "pipe_text" | "text" => Ok(Mode::PipeText),
            "pipe_row" | "row" => Ok(Mode::PipeRow),
            "pipe_column" | "column" => Ok(Mode::PipeColumn),
            _ => Err(format!("unknown mode {s:?} (file_csv, pipe_text, pipe_row, pipe_column)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::FileCsv => "file_csv",
            Mode::PipeText => "pipe_text",
            Mode::PipeRow => "pipe_row",
            Mode::PipeColumn => "pipe_column",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchSpec {
    pub n: usize,
    pub seed: u64,
    pub mode: Mode,
    /// Ignored for file transfers.
    pub codec: Compression,
    pub workers: u32,
    pub payload: Payload,
    pub block_rows: usize,
}

impl Default for BenchSpec {
    fn default() -> Self {
        BenchSpec {
            n: 100_000,
            seed: 1,
            mode: Mode::PipeColumn,
            codec: Compression::None,
            workers: 1,
            payload: Payload::BenchSchema,
            block_rows: crate::pipe::DEFAULT_BLOCK_ROWS,
        }
    }
}

impl BenchSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.workers == 0 {
            return Err(HarnessError::Spec("workers must be at least 1".into()));
        }
        if self.block_rows == 0 {
            return Err(HarnessError::Spec("block_rows must be at least 1".into()));
        }
        Ok(())
    }

    /// The parts of the spec that make two results comparable.
    fn workload(&self) -> (usize, u64, u32, Payload) {
        (self.n, self.seed, self.workers, self.payload)
    }
}

/// Outcome of one transfer.
///
/// File transfers run export then import, so `transfer` is zero. Pipe
/// transfers run both sides at once: `export` and `import` are each side's
/// own wall time and `transfer` is the span from start to the last worker
/// finishing, which equals `total`.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub spec: BenchSpec,
    pub export: Duration,
    pub transfer: Duration,
    pub import: Duration,
    pub total: Duration,
    /// File bytes for file transfers, wire bytes otherwise.
    pub bytes: u64,
    pub rows: u64,
    /// Whether the imported table equals the generated one exactly.
    pub exact: bool,
    pub codec_downgraded: bool,
}

/// A finished transfer together with what the importing side received.
pub struct BenchRun {
    pub result: BenchResult,
    pub imported: ColumnBlock,
}

/// Writes the dataset to one CSV file per worker, then reads them back.
pub fn run_baseline_file(spec: &BenchSpec, dir: &Path) -> Result<BenchRun, HarnessError> {
    spec.validate()?;
    let data = generate_dataset(spec.n, spec.seed, spec.payload);
    run_baseline_file_with(spec, dir, &data)
}

pub fn run_baseline_file_with(spec: &BenchSpec, dir: &Path, data: &ColumnBlock) -> Result<BenchRun, HarnessError> {
    let parts: Vec<ColumnBlock> = (0..spec.workers).map(|w| partition(data, w, spec.workers)).collect();
    let base = dir.join(format!("bench-{}.csv", next_token()));
    let base = base.to_string_lossy().into_owned();
    let paths: Vec<PathBuf> = (0..spec.workers).map(|w| partition_path(&base, w, spec.workers)).collect();
    let cfg = PipeConfig { block_rows: spec.block_rows, ..PipeConfig::default() };
    let engine = CsvEngine::default();
    let schema = data.schema().clone();

    let started = Instant::now();
    let written: Vec<Result<TransferMetrics, PipeError>> = thread::scope(|s| {
        let handles: Vec<_> = parts
            .iter()
            .zip(&paths)
            .map(|(part, path)| {
                let cfg = &cfg;
                s.spawn(move || {
                    let mut sink = open_output(&path.to_string_lossy(), 0, cfg)?;
                    engine.export(part, &mut sink)?;
                    sink.close()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("export worker panicked")).collect()
    });
    let export = started.elapsed();
    let written = written.into_iter().collect::<Result<Vec<_>, _>>()?;

    let import_started = Instant::now();
    let read: Vec<Result<ColumnBlock, PipeError>> = thread::scope(|s| {
        let handles: Vec<_> = paths
            .iter()
            .map(|path| {
                let (cfg, schema) = (&cfg, &schema);
                s.spawn(move || {
                    let mut source = open_input(&path.to_string_lossy(), 0, cfg)?;
                    engine.import(&mut source, schema)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("import worker panicked")).collect()
    });
    let import = import_started.elapsed();
    let total = started.elapsed();
    let read = read.into_iter().collect::<Result<Vec<_>, _>>()?;
    for p in &paths {
        let _ = std::fs::remove_file(p);
    }
    finish(spec, &parts, read, written.iter().map(|m| m.bytes).sum(), false, export, Duration::ZERO, import, total)
}

/// Moves the dataset through pipes: `workers` importers register with the
/// directory and the same number of exporters connect to them.
///
/// Without `directory` a private service is started on localhost for the
/// duration of the run.
pub fn run_pipe(spec: &BenchSpec, directory: Option<SocketAddr>) -> Result<BenchRun, HarnessError> {
    spec.validate()?;
    let data = generate_dataset(spec.n, spec.seed, spec.payload);
    run_pipe_with(spec, directory, &data)
}

pub fn run_pipe_with(
    spec: &BenchSpec,
    directory: Option<SocketAddr>,
    data: &ColumnBlock,
) -> Result<BenchRun, HarnessError> {
    let format = spec.mode.pipe_format().ok_or_else(|| HarnessError::Spec("run_pipe needs a pipe mode".into()))?;
    let server = match directory {
        Some(_) => None,
        None => Some(DirectoryServer::bind("127.0.0.1:0", DirectoryConfig::default())?),
    };
    let addr = directory.unwrap_or_else(|| server.as_ref().unwrap().local_addr());
    let parts: Vec<ColumnBlock> = (0..spec.workers).map(|w| partition(data, w, spec.workers)).collect();
    let cfg = PipeConfig {
        format,
        compression: spec.codec,
        block_rows: spec.block_rows,
        directory: Some(addr),
        ..PipeConfig::default()
    };
    let mut target = ReservedTarget::new("bench");
    target.workers = Some(spec.workers);
    target.query_id = Some(format!("bench-{}-{}", std::process::id(), next_token()));
    let target = target.to_string();
    let engine = CsvEngine::default();
    let schema = data.schema().clone();

    let started = Instant::now();
    let (imported, exported) = thread::scope(|s| {
        let importers: Vec<_> = (0..spec.workers)
            .map(|w| {
                let (cfg, schema, target) = (&cfg, &schema, &target);
                s.spawn(move || {
                    let t = Instant::now();
                    let mut source = open_input(target, w, cfg)?;
                    let block = engine.import(&mut source, schema)?;
                    Ok::<_, PipeError>((block, source.metrics(), t.elapsed()))
                })
            })
            .collect();
        let exporters: Vec<_> = parts
            .iter()
            .enumerate()
            .map(|(w, part)| {
                let (cfg, target) = (&cfg, &target);
                s.spawn(move || {
                    let t = Instant::now();
                    let mut sink = open_output(target, w as u32, cfg)?;
                    engine.export(part, &mut sink)?;
                    Ok::<_, PipeError>((sink.close()?, t.elapsed()))
                })
            })
            .collect();
        let exported: Vec<_> = exporters.into_iter().map(|h| h.join().expect("export worker panicked")).collect();
        let imported: Vec<_> = importers.into_iter().map(|h| h.join().expect("import worker panicked")).collect();
        (imported, exported)
    });
    let total = started.elapsed();
    drop(server);
    let exported = exported.into_iter().collect::<Result<Vec<_>, _>>()?;
    let imported = imported.into_iter().collect::<Result<Vec<_>, _>>()?;
    let export = exported.iter().map(|(_, t)| *t).max().unwrap_or_default();
    let import = imported.iter().map(|(_, _, t)| *t).max().unwrap_or_default();
    let bytes = exported.iter().map(|(m, _)| m.bytes).sum();
    let downgraded = exported.iter().any(|(m, _)| m.codec_downgraded);
    let blocks = imported.into_iter().map(|(b, _, _)| b).collect();
    finish(spec, &parts, blocks, bytes, downgraded, export, total, import, total)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    spec: &BenchSpec,
    parts: &[ColumnBlock],
    imported: Vec<ColumnBlock>,
    bytes: u64,
    codec_downgraded: bool,
    export: Duration,
    transfer: Duration,
    import: Duration,
    total: Duration,
) -> Result<BenchRun, HarnessError> {
    let exact = parts.len() == imported.len() && parts.iter().zip(&imported).all(|(a, b)| a == b);
    let schema = spec.payload.schema();
    let imported = concat_blocks(&schema, &imported);
    let result = BenchResult {
        spec: spec.clone(),
        export,
        transfer,
        import,
        total,
        bytes,
        rows: imported.row_count() as u64,
        exact,
        codec_downgraded,
    };
    Ok(BenchRun { result, imported })
}

/// Runs `spec` by its mode. File transfers use `dir` for their files.
pub fn run_bench(spec: &BenchSpec, dir: &Path, directory: Option<SocketAddr>) -> Result<BenchRun, HarnessError> {
    match spec.mode {
        Mode::FileCsv => run_baseline_file(spec, dir),
        _ => run_pipe(spec, directory),
    }
}

fn next_token() -> u64 {
    static NEXT: AtomicU64 = AtomicU64::new(0);
    NEXT.fetch_add(1, Ordering::Relaxed)
}

/// One machine-readable report line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub mode: Mode,
    pub codec: String,
    pub n: usize,
    pub seed: u64,
    pub workers: u32,
    pub payload: Payload,
    pub export_ms: f64,
    pub transfer_ms: f64,
    pub import_ms: f64,
    pub total_ms: f64,
    pub bytes: u64,
    pub rows: u64,
    pub exact: bool,
    /// Baseline total time over this run's total time.
    pub speedup: f64,
}

pub struct BenchReport {
    pub records: Vec<ReportRecord>,
}

impl BenchReport {
    /// Fixed-width table for people.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<12} {:<8} {:>10} {:>10} {:>10} {:>10} {:>12} {:>10} {:>6} {:>8}",
            "mode", "codec", "export_ms", "xfer_ms", "import_ms", "total_ms", "bytes", "rows", "exact", "speedup"
        );
        for r in &self.records {
            let _ = writeln!(
                out,
                "{:<12} {:<8} {:>10.1} {:>10.1} {:>10.1} {:>10.1} {:>12} {:>10} {:>6} {:>8.2}",
                r.mode.to_string(),
                r.codec,
                r.export_ms,
                r.transfer_ms,
                r.import_ms,
                r.total_ms,
                r.bytes,
                r.rows,
                r.exact,
                r.speedup
            );
        }
        out
    }

    /// One JSON object per line.
    pub fn json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("report records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn parse_json_lines(text: &str) -> Result<Vec<ReportRecord>, serde_json::Error> {
        text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Tabulates results against the first file baseline among them. All
/// results must describe the same workload.
pub fn bench_report(results: &[BenchResult]) -> Result<BenchReport, HarnessError> {
    let baseline = results
        .iter()
        .find(|r| r.spec.mode == Mode::FileCsv)
        .ok_or_else(|| HarnessError::Report("no file baseline among the results".into()))?;
    if !results.iter().any(|r| r.spec.mode != Mode::FileCsv) {
        return Err(HarnessError::Report("no pipe result among the results".into()));
    }
    if let Some(r) = results.iter().find(|r| r.spec.workload() != baseline.spec.workload()) {
        return Err(HarnessError::Report(format!(
            "result for {} has a different workload than the baseline: {:?} vs {:?}",
            r.spec.mode,
            r.spec.workload(),
            baseline.spec.workload()
        )));
    }
    let base = baseline.total.as_secs_f64();
    let records = results
        .iter()
        .map(|r| ReportRecord {
            mode: r.spec.mode,
            codec: if r.spec.mode == Mode::FileCsv { "-".into() } else { r.spec.codec.to_string() },
            n: r.spec.n,
            seed: r.spec.seed,
            workers: r.spec.workers,
            payload: r.spec.payload,
            export_ms: ms(r.export),
            transfer_ms: ms(r.transfer),
            import_ms: ms(r.import),
            total_ms: ms(r.total),
            bytes: r.bytes,
            rows: r.rows,
            exact: r.exact,
            speedup: speedup(base, r.total.as_secs_f64()),
        })
        .collect();
    Ok(BenchReport { records })
}

pub fn speedup(baseline_secs: f64, secs: f64) -> f64 {
    if secs > 0.0 {
        baseline_secs / secs
    } else {
        f64::INFINITY
    }
}
