use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{debug, warn};
use serde_json::Value as Json;

use super::debug::MirrorWriter;
use super::{PipeConfig, PipeError, PipeFormat, TransferMetrics};
use crate::augtext::AugText;
use crate::directory::ReservedTarget;
use crate::formatopt::{render_row, CsvInterceptor, JsonDedupEncoder};
use crate::wire::{
    compress, encode_header, write_frame, BlockBuilder, ColumnType, Compression, Format, Frame, FrameType, RecordBatch,
    Row, Schema, TransferHeader, Value,
};

const TEXT_CHUNK: usize = 64 * 1024;
const SOCKET_BUFFER: usize = 256 * 1024;

/// Export side of a transfer, file- or pipe-backed.
pub enum RecordSink {
    File(FileSink),
    Pipe(PipeSink),
}

impl RecordSink {
    /// Writes exported text. A record may arrive in pieces; rows end at `\n`.
    pub fn write_record(&mut self, text: &AugText) -> Result<(), PipeError> {
        match self {
            RecordSink::File(s) => s.write_record(text),
            RecordSink::Pipe(s) => s.write_record(text),
        }
    }

    pub fn write_batch(&mut self, batch: &RecordBatch) -> Result<(), PipeError> {
        match self {
            RecordSink::File(s) => s.write_batch(batch),
            RecordSink::Pipe(s) => s.write_batch(batch),
        }
    }

    /// Writes one JSON document (one line in a file).
    pub fn write_json(&mut self, doc: &Json) -> Result<(), PipeError> {
        match self {
            RecordSink::File(s) => s.write_json(doc),
            RecordSink::Pipe(s) => s.write_json(doc),
        }
    }

    pub fn close(self) -> Result<TransferMetrics, PipeError> {
        match self {
            RecordSink::File(s) => s.close(),
            RecordSink::Pipe(s) => s.close(),
        }
    }

    pub fn is_pipe(&self) -> bool {
        matches!(self, RecordSink::Pipe(_))
    }
}

/// Plain CSV or JSON-lines file.
pub struct FileSink {
    path: PathBuf,
    out: BufWriter<File>,
    delim: char,
    scratch: String,
    metrics: TransferMetrics,
    started: Instant,
}

impl FileSink {
    pub(crate) fn create(path: PathBuf, cfg: &PipeConfig) -> Result<Self, PipeError> {
        let out = BufWriter::with_capacity(1 << 20, File::create(&path)?);
        Ok(FileSink {
            path,
            out,
            delim: cfg.delimiter,
            scratch: String::new(),
            metrics: TransferMetrics::default(),
            started: Instant::now(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn put(&mut self) -> Result<(), PipeError> {
        self.out.write_all(self.scratch.as_bytes())?;
        self.metrics.bytes += self.scratch.len() as u64;
        self.scratch.clear();
        Ok(())
    }

    fn write_record(&mut self, text: &AugText) -> Result<(), PipeError> {
        text.render_into(&mut self.scratch);
        self.metrics.rows += self.scratch.bytes().filter(|&b| b == b'\n').count() as u64;
        self.put()
    }

    fn write_batch(&mut self, batch: &RecordBatch) -> Result<(), PipeError> {
        for row in batch.rows() {
            render_row(row, self.delim, &mut self.scratch);
        }
        self.metrics.rows += batch.len() as u64;
        self.put()
    }

    fn write_json(&mut self, doc: &Json) -> Result<(), PipeError> {
        serde_json::to_writer(&mut self.out, doc)?;
        self.out.write_all(b"\n")?;
        self.metrics.rows += 1;
        // serde does not report its byte count
        self.metrics.bytes = self.out.get_ref().metadata()?.len() + self.out.buffer().len() as u64;
        Ok(())
    }

    fn close(mut self) -> Result<TransferMetrics, PipeError> {
        self.out.flush()?;
        self.metrics.bytes = self.out.get_ref().metadata()?.len();
        self.metrics.elapsed = self.started.elapsed();
        Ok(self.metrics)
    }
}

/// What the stream has committed to carrying.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Content {
    Unset,
    Text,
    /// Typed rows recovered from exported text.
    Csv,
    /// Typed rows handed over as batches.
    Batches,
    Json,
}

impl Content {
    fn name(self) -> &'static str {
        match self {
            Content::Unset => "empty",
            Content::Text => "text",
            Content::Csv | Content::Batches => "typed row",
            Content::Json => "JSON",
        }
    }

    fn is_typed(self) -> bool {
        matches!(self, Content::Csv | Content::Batches)
    }
}

/// Socket-backed sink: header, frames, `END_OF_STREAM`.
pub struct PipeSink {
    out: BufWriter<TcpStream>,
    query_id: String,
    format: PipeFormat,
    requested: Compression,
    codec: Compression,
    block_rows: usize,
    delim: char,
    content: Content,
    header_sent: bool,
    interceptor: Option<CsvInterceptor>,
    json: Option<JsonDedupEncoder>,
    block: Option<BlockBuilder>,
    text: Vec<u8>,
    scratch: String,
    mirror: Option<MirrorWriter>,
    metrics: TransferMetrics,
    started: Instant,
}

impl PipeSink {
    pub(crate) fn connect(t: &ReservedTarget, worker: u32, cfg: &PipeConfig) -> Result<Self, PipeError> {
        let started = Instant::now();
        let query_id = t.query_id_or(&cfg.query_token).to_owned();
        let entry = cfg.directory_client()?.lookup(&query_id, worker)?;
        let stream = TcpStream::connect((entry.hostname.as_str(), entry.port))?;
        stream.set_nodelay(true)?;
        debug!("exporter {worker} of {query_id} connected to {}:{}", entry.hostname, entry.port);
        let mirror = match &cfg.debug {
            Some(m) => MirrorWriter::create(&m.for_worker(worker, t.worker_count()))?,
            None => None,
        };
        Ok(PipeSink {
            out: BufWriter::with_capacity(SOCKET_BUFFER, stream),
            query_id,
            format: cfg.format,
            requested: cfg.compression,
            codec: cfg.compression,
            block_rows: cfg.block_rows,
            delim: cfg.delimiter,
            content: Content::Unset,
            header_sent: false,
            interceptor: None,
            json: None,
            block: None,
            text: Vec::new(),
            scratch: String::new(),
            mirror,
            metrics: TransferMetrics::default(),
            started,
        })
    }

    pub fn query_id(&self) -> &str {
        &self.query_id
    }

    fn send_header(&mut self, schema: Schema) -> Result<(), PipeError> {
        let wire_format = self.format.wire_format();
        // run-length coding only understands typed column blocks
        if self.requested == Compression::Rle && !(self.content.is_typed() && wire_format == Format::Column) {
            warn!("rle needs column blocks; sending {} stream uncompressed", self.content.name());
            self.codec = Compression::None;
            self.metrics.codec_downgraded = true;
        }
        let header = TransferHeader::new(wire_format, self.codec, self.query_id.clone(), schema.clone());
        let bytes = encode_header(&header)?;
        self.out.write_all(&bytes)?;
        self.metrics.bytes += bytes.len() as u64;
        if self.content.is_typed() {
            self.block = Some(BlockBuilder::new(schema, wire_format));
        }
        self.header_sent = true;
        Ok(())
    }

    fn send_frame(&mut self, frame_type: FrameType, payload: &[u8]) -> Result<(), PipeError> {
        if let Some(m) = self.mirror.as_mut() {
            m.sync()?;
        }
        let coded;
        let payload = match self.codec {
            Compression::None => payload,
            Compression::Rle if !(self.content.is_typed() && frame_type == FrameType::Data) => payload,
            codec => {
                let empty = Schema::EMPTY;
                let schema = self.block.as_ref().map_or(&empty, |b| b.schema());
                coded = compress(payload, codec, schema, self.format.wire_format())?;
                &coded[..]
            }
        };
        self.metrics.bytes += write_frame(&mut self.out, frame_type, payload)? as u64;
        Ok(())
    }

    /// Commits the stream to `want` on first use; later calls must agree.
    fn commit(&mut self, want: Content) -> Result<(), PipeError> {
        if self.content == want {
            return Ok(());
        }
        if self.content != Content::Unset {
            return Err(PipeError::ContentMismatch { wanted: want.name(), found: self.content.name() });
        }
        self.content = want;
        match want {
            Content::Text | Content::Json => self.send_header(Schema::empty())?,
            Content::Csv => self.interceptor = Some(CsvInterceptor::new(self.delim)),
            Content::Batches | Content::Unset => {}
        }
        if want == Content::Json {
            self.json = Some(JsonDedupEncoder::new(self.block_rows));
        }
        Ok(())
    }

    fn write_record(&mut self, text: &AugText) -> Result<(), PipeError> {
        if self.format == PipeFormat::Text {
            self.commit(Content::Text)?;
            text.render_into(&mut self.scratch);
            return self.push_text();
        }
        if let Some(m) = self.mirror.as_mut().filter(|m| m.active()) {
            m.text(text.materialize())?;
        }
        self.commit(Content::Csv)?;
        let mut ic = self.interceptor.take().expect("interceptor exists for CSV content");
        let r = ic.push_with(text, |row| self.push_row(row));
        self.interceptor = Some(ic);
        r
    }

    /// Adds one typed row to the current block, sending the header first
    /// when this is the stream's first row.
    fn push_row(&mut self, row: &mut Row) -> Result<(), PipeError> {
        if !self.header_sent {
            let types: Vec<ColumnType> = row.iter().map(Value::column_type).collect();
            self.send_header(Schema::from_types(&types)?)?;
        }
        let block = self.block.as_mut().expect("typed header creates the block");
        block.push_row(row)?;
        if block.len() >= self.block_rows {
            self.send_block()?;
        }
        Ok(())
    }

    fn push_text(&mut self) -> Result<(), PipeError> {
        if let Some(m) = self.mirror.as_mut() {
            m.text(&self.scratch)?;
        }
        self.metrics.rows += self.scratch.bytes().filter(|&b| b == b'\n').count() as u64;
        self.text.extend_from_slice(self.scratch.as_bytes());
        self.scratch.clear();
        if self.text.len() >= TEXT_CHUNK {
            self.flush_text()?;
        }
        Ok(())
    }

    fn flush_text(&mut self) -> Result<(), PipeError> {
        if self.text.is_empty() {
            return Ok(());
        }
        let chunk = std::mem::take(&mut self.text);
        self.send_frame(FrameType::Data, &chunk)?;
        self.text = chunk;
        self.text.clear();
        Ok(())
    }

    fn write_batch(&mut self, batch: &RecordBatch) -> Result<(), PipeError> {
        if self.format == PipeFormat::Text {
            self.commit(Content::Text)?;
            for row in batch.rows() {
                render_row(row, self.delim, &mut self.scratch);
            }
            return self.push_text();
        }
        self.commit(Content::Batches)?;
        if !self.header_sent {
            self.send_header(batch.schema().clone())?;
        }
        let schema = self.block.as_ref().expect("typed header creates the block").schema();
        if !schema.types().eq(batch.schema().types()) {
            return Err(PipeError::SchemaMismatch { expected: schema.clone(), found: batch.schema().clone() });
        }
        if let Some(m) = self.mirror.as_mut().filter(|m| m.active()) {
            let mut line = String::new();
            for row in batch.rows() {
                line.clear();
                render_row(row, self.delim, &mut line);
                m.text(&line)?;
            }
        }
        for row in batch.rows() {
            self.push_row(&mut row.clone())?;
        }
        Ok(())
    }

    fn write_json(&mut self, doc: &Json) -> Result<(), PipeError> {
        if self.format == PipeFormat::Text {
            self.commit(Content::Text)?;
            self.scratch = serde_json::to_string(doc)?;
            self.scratch.push('\n');
            return self.push_text();
        }
        self.commit(Content::Json)?;
        if let Some(m) = self.mirror.as_mut().filter(|m| m.active()) {
            m.record(&serde_json::to_string(doc)?)?;
        }
        let mut frames = Vec::new();
        self.json.as_mut().expect("encoder exists for JSON content").encode(doc, &mut frames)?;
        self.metrics.rows += 1;
        self.send_frames(frames)
    }

    fn send_frames(&mut self, frames: Vec<Frame>) -> Result<(), PipeError> {
        for f in frames {
            self.send_frame(f.frame_type, &f.payload)?;
        }
        Ok(())
    }

    fn send_block(&mut self) -> Result<(), PipeError> {
        let block = self.block.as_mut().expect("typed header creates the block");
        if block.is_empty() {
            return Ok(());
        }
        let n = block.len() as u64;
        let payload = block.finish()?;
        self.send_frame(FrameType::Data, &payload)?;
        self.metrics.rows += n;
        Ok(())
    }

    fn close(mut self) -> Result<TransferMetrics, PipeError> {
        match self.content {
            Content::Unset => self.send_header(Schema::empty())?,
            Content::Text => self.flush_text()?,
            Content::Csv => {
                let mut ic = self.interceptor.take().expect("interceptor exists for CSV content");
                let mut last = Vec::new();
                ic.finish(&mut last)?;
                for mut row in last {
                    self.push_row(&mut row)?;
                }
                if !self.header_sent {
                    self.send_header(ic.schema().cloned().unwrap_or_else(Schema::empty))?;
                }
                self.send_block()?;
            }
            Content::Batches => self.send_block()?,
            Content::Json => {
                let mut frames = Vec::new();
                self.json.as_mut().expect("encoder exists for JSON content").flush(&mut frames);
                self.send_frames(frames)?;
            }
        }
        if let Some(m) = self.mirror.as_mut() {
            m.finish()?;
        }
        self.metrics.bytes += write_frame(&mut self.out, FrameType::EndOfStream, &[])? as u64;
        self.out.flush()?;
        let stream = self.out.into_inner().map_err(|e| e.into_error())?;
        let _ = stream.shutdown(std::net::Shutdown::Write);
        self.metrics.elapsed = self.started.elapsed();
        debug!("exporter for {} closed after {} rows, {} bytes", self.query_id, self.metrics.rows, self.metrics.bytes);
        Ok(self.metrics)
    }
}
