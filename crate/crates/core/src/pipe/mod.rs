//! Pipe endpoints.
//!
//! [`open_output`] and [`open_input`] look at the target name: a plain path
//! gives a file-backed sink/source with ordinary CSV (or JSON lines)
//! semantics, a reserved target gives a socket-backed one. Both kinds expose
//! the same operations, so engine code written against files runs unchanged
//! over a pipe.

mod debug;
mod proxy;
mod sink;
mod source;

use std::fmt;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use thiserror::Error;

pub use debug::{debug_compare, DebugMirror, Verdict};
pub use proxy::{infer_csv_schema, run_verification_proxy, ProxyReport};
pub use sink::{FileSink, PipeSink, RecordSink};
pub use source::{FilePipeSource, PipeSource, RecordSource};

use crate::directory::{
    parse_target, DirectoryClient, DirectoryError, ReservedTarget, ReservedTemplate, Target, DEFAULT_LOOKUP_TIMEOUT,
};
use crate::formatopt::FormatError;
use crate::wire::{Compression, Format, Schema, WireError};

pub const DEFAULT_BLOCK_ROWS: usize = 4096;

/// What travels over the socket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PipeFormat {
    /// The exporter's text, unchanged; only the file is bypassed.
    Text,
    /// Typed rows.
    Row,
    /// Typed rows pivoted to columns per block.
    Column,
}

impl PipeFormat {
    /// Format code carried in the transfer header.
    pub fn wire_format(self) -> Format {
        match self {
            PipeFormat::Column => Format::Column,
            PipeFormat::Text | PipeFormat::Row => Format::Row,
        }
    }
}

impl FromStr for PipeFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "text" => Ok(PipeFormat::Text),
            "row" => Ok(PipeFormat::Row),
            "column" => Ok(PipeFormat::Column),
            _ => Err(format!("unknown format {s:?} (text, row, column)")),
        }
    }
}

impl fmt::Display for PipeFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PipeFormat::Text => "text",
            PipeFormat::Row => "row",
            PipeFormat::Column => "column",
        })
    }
}

impl FromStr for Compression {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Compression::None),
            "rle" => Ok(Compression::Rle),
            "deflate" => Ok(Compression::Deflate),
            _ => Err(format!("unknown codec {s:?} (none, rle, deflate)")),
        }
    }
}

impl fmt::Display for Compression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Compression::None => "none",
            Compression::Rle => "rle",
            Compression::Deflate => "deflate",
        })
    }
}

#[derive(Debug, Clone)]
pub struct PipeConfig {
    pub format: PipeFormat,
    pub compression: Compression,
    /// Rows accumulated before a block is framed; at least 1.
    pub block_rows: usize,
    /// CSV value delimiter used by the engines on both sides.
    pub delimiter: char,
    pub debug: Option<DebugMirror>,
    /// Directory service; `PIPEGEN_DIRECTORY` is consulted when unset.
    pub directory: Option<SocketAddr>,
    pub lookup_timeout: Duration,
    /// How long an importer waits for its exporter to connect.
    pub accept_timeout: Duration,
    /// Address importers listen on and register with the directory.
    pub bind_host: String,
    /// Query id for reserved targets that do not name one.
    pub query_token: String,
    pub reserved_template: Option<ReservedTemplate>,
}

impl Default for PipeConfig {
    fn default() -> Self {
        PipeConfig {
            format: PipeFormat::Column,
            compression: Compression::None,
            block_rows: DEFAULT_BLOCK_ROWS,
            delimiter: ',',
            debug: None,
            directory: None,
            lookup_timeout: DEFAULT_LOOKUP_TIMEOUT,
            accept_timeout: DEFAULT_LOOKUP_TIMEOUT,
            bind_host: "127.0.0.1".into(),
            query_token: "default".into(),
            reserved_template: None,
        }
    }
}

impl PipeConfig {
    pub fn validate(&self) -> Result<(), PipeError> {
        if self.block_rows == 0 {
            return Err(PipeError::Config("block_rows must be at least 1".into()));
        }
        Ok(())
    }

    /// The codec actually applied. Run-length encoding needs column blocks,
    /// so it degrades to no compression for text and row pipes.
    pub fn effective_compression(&self) -> Compression {
        if self.format == PipeFormat::Column || self.compression != Compression::Rle {
            self.compression
        } else {
            Compression::None
        }
    }

    pub(crate) fn directory_client(&self) -> Result<DirectoryClient, PipeError> {
        let client = match self.directory {
            Some(addr) => DirectoryClient::new(addr),
            None => DirectoryClient::from_env()?,
        };
        Ok(client.with_lookup_timeout(self.lookup_timeout))
    }

    pub fn parse_target(&self, target: &str) -> Result<Target, PipeError> {
        Ok(parse_target(target, self.reserved_template.as_ref())?)
    }
}

/// Per-endpoint measurements.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TransferMetrics {
    pub rows: u64,
    /// Bytes on the wire (header and frames) or in the file.
    pub bytes: u64,
    pub elapsed: Duration,
    /// The requested codec could not be applied to this format.
    pub codec_downgraded: bool,
}

#[derive(Debug, Error)]
pub enum PipeError {
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    Directory(#[from] DirectoryError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("schema changed mid-stream: expected {expected:?}, got {found:?}")]
    SchemaMismatch { expected: Schema, found: Schema },
    #[error("verification failed at record {record}: {detail}")]
    Verification { record: usize, detail: String },
    #[error("stream carries {found} content, {wanted} was requested")]
    ContentMismatch { wanted: &'static str, found: &'static str },
    #[error("worker {worker} outside target with {workers} workers")]
    WorkerOutOfRange { worker: u32, workers: u32 },
    #[error("stream belongs to query {found:?}, expected {expected:?}")]
    QueryMismatch { expected: String, found: String },
    #[error("no exporter connected within {0:?}")]
    AcceptTimeout(Duration),
    #[error("invalid configuration: {0}")]
    Config(String),
}

fn check_worker(t: &ReservedTarget, worker: u32) -> Result<(), PipeError> {
    if worker >= t.worker_count() {
        return Err(PipeError::WorkerOutOfRange { worker, workers: t.worker_count() });
    }
    Ok(())
}

/// Opens the export side of `target` for worker `worker`.
pub fn open_output(target: &str, worker: u32, cfg: &PipeConfig) -> Result<RecordSink, PipeError> {
    cfg.validate()?;
    match cfg.parse_target(target)? {
        Target::File(path) => Ok(RecordSink::File(FileSink::create(path, cfg)?)),
        Target::Reserved(t) => {
            check_worker(&t, worker)?;
            Ok(RecordSink::Pipe(PipeSink::connect(&t, worker, cfg)?))
        }
    }
}

/// Opens the import side of `target` for worker `worker`. A pipe source
/// registers with the directory immediately and accepts its exporter on first read.
pub fn open_input(target: &str, worker: u32, cfg: &PipeConfig) -> Result<RecordSource, PipeError> {
    cfg.validate()?;
    match cfg.parse_target(target)? {
        Target::File(path) => Ok(RecordSource::File(FilePipeSource::open(path, cfg)?)),
        Target::Reserved(t) => {
            check_worker(&t, worker)?;
            Ok(RecordSource::Pipe(PipeSource::listen(&t, worker, cfg)?))
        }
    }
}

/// File path used by worker `worker` of `workers` for a file target.
pub fn partition_path(path: &str, worker: u32, workers: u32) -> PathBuf {
    if workers <= 1 {
        PathBuf::from(path)
    } else {
        PathBuf::from(format!("{path}.{worker}"))
    }
}
