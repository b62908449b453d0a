use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::thread;

use log::info;

use super::{open_input, open_output, partition_path, PipeConfig, PipeError, PipeFormat, TransferMetrics};
use crate::augtext::{render_float, AugText};
use crate::directory::Target;
use crate::formatopt::{parse_text_row, FormatError};
use crate::wire::{Column, ColumnType, RecordBatch, Schema};

/// What the proxy moved in each direction.
#[derive(Debug, Default)]
pub struct ProxyReport {
    /// Rows received per listening worker and written to disk.
    pub received: Vec<TransferMetrics>,
    /// Rows read from disk and sent per worker.
    pub sent: Vec<TransferMetrics>,
    /// Failures, one line per worker that failed.
    pub errors: Vec<String>,
}

impl ProxyReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn rows_received(&self) -> u64 {
        self.received.iter().map(|m| m.rows).sum()
    }

    pub fn rows_sent(&self) -> u64 {
        self.sent.iter().map(|m| m.rows).sum()
    }
}

/// A stand-in remote engine. Whatever arrives on `listen` is written to
/// `out_path` as CSV (one file per worker when the target has several), and
/// the CSV in `in_path` is sent to `send`. Either direction may be omitted.
pub fn run_verification_proxy(
    listen: Option<(&str, &Path)>,
    send: Option<(&str, &Path)>,
    cfg: &PipeConfig,
) -> ProxyReport {
    let mut report = ProxyReport::default();
    thread::scope(|s| {
        let mut recv = Vec::new();
        if let Some((target, out)) = listen {
            match workers_of(target, cfg) {
                Ok(w) => {
                    for worker in 0..w {
                        let out = partition_path(&out.to_string_lossy(), worker, w);
                        recv.push(s.spawn(move || receive(target, worker, &out, cfg)));
                    }
                }
                Err(e) => report.errors.push(format!("listen: {e}")),
            }
        }
        let mut sent = Vec::new();
        if let Some((target, input)) = send {
            match workers_of(target, cfg) {
                Ok(w) => {
                    for worker in 0..w {
                        let input = partition_path(&input.to_string_lossy(), worker, w);
                        sent.push(s.spawn(move || transmit(&input, target, worker, cfg)));
                    }
                }
                Err(e) => report.errors.push(format!("send: {e}")),
            }
        }
        for (i, h) in recv.into_iter().enumerate() {
            match h.join().expect("proxy worker panicked") {
                Ok(m) => report.received.push(m),
                Err(e) => report.errors.push(format!("receive worker {i}: {e}")),
            }
        }
        for (i, h) in sent.into_iter().enumerate() {
            match h.join().expect("proxy worker panicked") {
                Ok(m) => report.sent.push(m),
                Err(e) => report.errors.push(format!("send worker {i}: {e}")),
            }
        }
    });
    info!("proxy received {} rows, sent {} rows", report.rows_received(), report.rows_sent());
    report
}

fn workers_of(target: &str, cfg: &PipeConfig) -> Result<u32, PipeError> {
    match cfg.parse_target(target)? {
        Target::Reserved(t) => Ok(t.worker_count()),
        Target::File(_) => Err(PipeError::Config(format!("{target:?} is not a reserved target"))),
    }
}

fn receive(target: &str, worker: u32, out: &Path, cfg: &PipeConfig) -> Result<TransferMetrics, PipeError> {
    let mut source = open_input(target, worker, cfg)?;
    let mut file = open_output(&out.to_string_lossy(), 0, cfg)?;
    let newline = AugText::from("\n");
    while let Some(line) = source.next_line()? {
        file.write_record(&line)?;
        file.write_record(&newline)?;
    }
    file.close()?;
    Ok(source.metrics())
}

fn transmit(input: &Path, target: &str, worker: u32, cfg: &PipeConfig) -> Result<TransferMetrics, PipeError> {
    let mut sink = open_output(target, worker, cfg)?;
    if cfg.format == PipeFormat::Text {
        let reader = BufReader::new(File::open(input)?);
        for line in reader.lines() {
            let mut line = line?;
            line.push('\n');
            sink.write_record(&AugText::from(line))?;
        }
    } else {
        let schema = infer_csv_schema(input, cfg.delimiter)?;
        let reader = BufReader::new(File::open(input)?);
        let mut batch = RecordBatch::empty(schema.clone());
        for (i, line) in reader.lines().enumerate() {
            let row = parse_text_row(&AugText::from(line?), cfg.delimiter, &schema, i)?;
            batch.push(row)?;
            if batch.len() >= cfg.block_rows {
                sink.write_batch(&batch)?;
                batch = RecordBatch::empty(schema.clone());
            }
        }
        if !batch.is_empty() {
            sink.write_batch(&batch)?;
        }
    }
    sink.close()
}

#[derive(Clone, Copy)]
struct Candidates {
    int: bool,
    float: bool,
    boolean: bool,
}

impl Candidates {
    const ALL: Candidates = Candidates { int: true, float: true, boolean: true };

    fn narrow(&mut self, f: &str) {
        if self.int {
            self.int = f.parse::<i64>().is_ok_and(|x| x.to_string() == f);
        }
        if self.float {
            self.float = f.parse::<f64>().is_ok_and(|x| {
                let mut s = String::new();
                render_float(x, &mut s);
                s == f
            });
        }
        if self.boolean {
            self.boolean = f == "true" || f == "false";
        }
    }

    fn pick(self) -> ColumnType {
        if self.int {
            ColumnType::Int64
        } else if self.float {
            ColumnType::Float64
        } else if self.boolean {
            ColumnType::Bool
        } else {
            ColumnType::Text
        }
    }
}

/// Column types for a CSV file: the narrowest type whose canonical rendering
/// reproduces every field exactly, so sending typed values and re-rendering
/// them gives back the same bytes.
pub fn infer_csv_schema(path: &Path, delim: char) -> Result<Schema, PipeError> {
    let reader = BufReader::new(File::open(path)?);
    let mut cols: Option<Vec<Candidates>> = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let width = line.split(delim).count();
        let cols = cols.get_or_insert_with(|| vec![Candidates::ALL; width]);
        if cols.len() != width {
            return Err(FormatError::Arity { row: i, expected: cols.len(), found: width }.into());
        }
        for (c, f) in cols.iter_mut().zip(line.split(delim)) {
            c.narrow(f);
        }
    }
    let columns =
        cols.unwrap_or_default().into_iter().enumerate().map(|(i, c)| Column::new(format!("c{i}"), c.pick())).collect();
    Ok(Schema::new(columns)?)
}
