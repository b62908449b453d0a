use std::collections::VecDeque;
use std::fs::File;
use std::io::{BufRead, BufReader, ErrorKind};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use log::debug;
use serde_json::Value as Json;

use super::debug::MirrorCheck;
use super::{PipeConfig, PipeError, TransferMetrics};
use crate::augtext::AugText;
use crate::directory::{DirectoryEntry, ReservedTarget};
use crate::formatopt::{render_row, FormatError, JsonDedupDecoder};
use crate::wire::{
    decode_block_column, decode_block_row_columns, decompress, read_frame, read_header, ColumnBlock, ColumnData,
    Compression, Format, Frame, FrameType, RecordBatch, Row, Schema, TransferHeader, WireError,
};

const SOCKET_BUFFER: usize = 256 * 1024;

/// Import side of a transfer, file- or pipe-backed.
pub enum RecordSource {
    File(FilePipeSource),
    Pipe(PipeSource),
}

impl RecordSource {
    /// Next line of text, without its terminator. Typed streams yield rows
    /// whose values are kept as typed parts.
    pub fn next_line(&mut self) -> Result<Option<AugText>, PipeError> {
        let mut buf = AugText::new();
        Ok(self.read_line(&mut buf)?.then_some(buf))
    }

    /// Like [`next_line`](Self::next_line), reusing `buf`. Returns false at
    /// the end of the stream.
    pub fn read_line(&mut self, buf: &mut AugText) -> Result<bool, PipeError> {
        match self {
            RecordSource::File(s) => s.read_line(buf),
            RecordSource::Pipe(s) => s.read_line(buf),
        }
    }

    /// Next block of typed rows. Only typed pipe streams carry a schema.
    pub fn next_batch(&mut self) -> Result<Option<RecordBatch>, PipeError> {
        match self {
            RecordSource::File(_) => Err(PipeError::ContentMismatch { wanted: "typed row", found: "text" }),
            RecordSource::Pipe(s) => s.next_batch(),
        }
    }

    pub fn next_json(&mut self) -> Result<Option<Json>, PipeError> {
        match self {
            RecordSource::File(s) => s.next_json(),
            RecordSource::Pipe(s) => s.next_json(),
        }
    }

    pub fn metrics(&self) -> TransferMetrics {
        match self {
            RecordSource::File(s) => s.metrics.clone(),
            RecordSource::Pipe(s) => s.metrics.clone(),
        }
    }

    pub fn is_pipe(&self) -> bool {
        matches!(self, RecordSource::Pipe(_))
    }
}

/// Line reader over a CSV or JSON-lines file.
pub struct FilePipeSource {
    path: PathBuf,
    input: BufReader<File>,
    line: String,
    metrics: TransferMetrics,
    started: Instant,
}

impl FilePipeSource {
    pub(crate) fn open(path: PathBuf, _cfg: &PipeConfig) -> Result<Self, PipeError> {
        let input = BufReader::with_capacity(1 << 20, File::open(&path)?);
        Ok(FilePipeSource {
            path,
            input,
            line: String::new(),
            metrics: TransferMetrics::default(),
            started: Instant::now(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn advance(&mut self) -> Result<bool, PipeError> {
        self.line.clear();
        let n = self.input.read_line(&mut self.line)?;
        self.metrics.elapsed = self.started.elapsed();
        if n == 0 {
            return Ok(false);
        }
        self.metrics.bytes += n as u64;
        self.metrics.rows += 1;
        trim_newline(&mut self.line);
        Ok(true)
    }

    fn read_line(&mut self, buf: &mut AugText) -> Result<bool, PipeError> {
        buf.clear();
        if !self.advance()? {
            return Ok(false);
        }
        buf.push_str(&self.line);
        Ok(true)
    }

    fn next_json(&mut self) -> Result<Option<Json>, PipeError> {
        if !self.advance()? {
            return Ok(None);
        }
        Ok(Some(serde_json::from_str(&self.line)?))
    }
}

fn trim_newline(s: &mut String) {
    if s.ends_with('\n') {
        s.pop();
        if s.ends_with('\r') {
            s.pop();
        }
    }
}

fn trim_newline_bytes(b: &[u8]) -> &[u8] {
    let b = b.strip_suffix(b"\n").unwrap_or(b);
    b.strip_suffix(b"\r").unwrap_or(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    /// Header read, first frame not yet seen.
    Unknown,
    Text,
    Typed,
    Json,
}

/// Socket-backed source. Registers with the directory when opened and
/// accepts its single exporter on first read.
pub struct PipeSource {
    listener: Option<TcpListener>,
    input: Option<BufReader<TcpStream>>,
    accept_timeout: Duration,
    query_id: String,
    delim: char,
    header: Option<TransferHeader>,
    kind: Kind,
    finished: bool,
    /// Decoded typed blocks; `cursor` indexes rows of the front one.
    blocks: VecDeque<ColumnBlock>,
    cursor: usize,
    /// Received text; bytes before `text_pos` have been handed out.
    text: Vec<u8>,
    text_pos: usize,
    /// Start of the first line not yet counted or shown to the check.
    text_scan: usize,
    json: JsonDedupDecoder,
    docs: VecDeque<Json>,
    check: Option<MirrorCheck>,
    metrics: TransferMetrics,
    started: Instant,
}

impl PipeSource {
    pub(crate) fn listen(t: &ReservedTarget, worker: u32, cfg: &PipeConfig) -> Result<Self, PipeError> {
        let query_id = t.query_id_or(&cfg.query_token).to_owned();
        let listener = TcpListener::bind((cfg.bind_host.as_str(), 0))?;
        let port = listener.local_addr()?.port();
        cfg.directory_client()?.register(DirectoryEntry {
            query_id: query_id.clone(),
            worker_index: worker,
            hostname: cfg.bind_host.clone(),
            port,
        })?;
        debug!("importer {worker} of {query_id} listening on {}:{port}", cfg.bind_host);
        let check = cfg.debug.as_ref().and_then(|m| MirrorCheck::new(&m.for_worker(worker, t.worker_count())));
        Ok(PipeSource {
            listener: Some(listener),
            input: None,
            accept_timeout: cfg.accept_timeout,
            query_id,
            delim: cfg.delimiter,
            header: None,
            kind: Kind::Unknown,
            finished: false,
            blocks: VecDeque::new(),
            cursor: 0,
            text: Vec::new(),
            text_pos: 0,
            text_scan: 0,
            json: JsonDedupDecoder::new(),
            docs: VecDeque::new(),
            check,
            metrics: TransferMetrics::default(),
            started: Instant::now(),
        })
    }

    pub fn query_id(&self) -> &str {
        &self.query_id
    }

    /// Transfer header, once the exporter has connected.
    pub fn header(&mut self) -> Result<&TransferHeader, PipeError> {
        self.start()?;
        Ok(self.header.as_ref().unwrap())
    }

    pub fn schema(&mut self) -> Result<&Schema, PipeError> {
        Ok(&self.header()?.schema)
    }

    fn accept(&mut self) -> Result<TcpStream, PipeError> {
        let listener = self.listener.take().expect("accept runs once");
        listener.set_nonblocking(true)?;
        let deadline = Instant::now() + self.accept_timeout;
        loop {
            match listener.accept() {
                Ok((stream, peer)) => {
                    debug!("importer for {} accepted {peer}", self.query_id);
                    stream.set_nonblocking(false)?;
                    stream.set_nodelay(true)?;
                    return Ok(stream);
                }
                Err(e) if e.kind() == ErrorKind::WouldBlock => {
                    if Instant::now() >= deadline {
                        return Err(PipeError::AcceptTimeout(self.accept_timeout));
                    }
                    std::thread::sleep(Duration::from_millis(1));
                }
                Err(e) => return Err(e.into()),
            }
        }
    }

    fn start(&mut self) -> Result<(), PipeError> {
        if self.header.is_some() {
            return Ok(());
        }
        let stream = self.accept()?;
        let mut input = BufReader::with_capacity(SOCKET_BUFFER, stream);
        let header = read_header(&mut input)?;
        if header.query_id != self.query_id {
            return Err(PipeError::QueryMismatch { expected: self.query_id.clone(), found: header.query_id });
        }
        if !header.compression.supports(header.format) {
            return Err(WireError::RleOnRowFormat.into());
        }
        self.metrics.bytes += crate::wire::encode_header(&header)?.len() as u64;
        if !header.schema.is_empty() {
            self.kind = Kind::Typed;
        }
        self.header = Some(header);
        self.input = Some(input);
        Ok(())
    }

    /// Reads and dispatches one frame. Returns false once the stream has ended.
    fn pump(&mut self) -> Result<bool, PipeError> {
        if self.finished {
            return Ok(false);
        }
        self.start()?;
        let frame = read_frame(self.input.as_mut().unwrap())?;
        self.metrics.bytes += frame.encoded_len() as u64;
        if frame.frame_type == FrameType::EndOfStream {
            self.end()?;
            return Ok(false);
        }
        if self.kind == Kind::Unknown {
            self.kind = match frame.frame_type {
                FrameType::Data => Kind::Text,
                _ => Kind::Json,
            };
        }
        let header = self.header.as_ref().unwrap();
        let payload = match header.compression {
            Compression::None => frame.payload,
            Compression::Rle if self.kind != Kind::Typed => {
                return Err(WireError::CorruptPayload("run-length codec on an untyped stream".into()).into());
            }
            Compression::Rle if frame.frame_type != FrameType::Data => frame.payload,
            codec => decompress(&frame.payload, codec, &header.schema, header.format)?,
        };
        match self.kind {
            Kind::Typed => self.take_block(frame.frame_type, &payload)?,
            Kind::Text => self.take_text(frame.frame_type, &payload)?,
            Kind::Json => self.take_json(Frame::new(frame.frame_type, payload))?,
            Kind::Unknown => unreachable!(),
        }
        Ok(true)
    }

    fn end(&mut self) -> Result<(), PipeError> {
        self.finished = true;
        if self.kind == Kind::Text && self.text_scan < self.text.len() {
            // final line without terminator
            let last = self.text[self.text_scan..].to_vec();
            self.text_scan = self.text.len();
            self.saw_text_line(&last)?;
        }
        self.metrics.elapsed = self.started.elapsed();
        if let Some(c) = self.check.as_mut() {
            c.verify()?;
        }
        debug!("importer for {} finished after {} rows", self.query_id, self.metrics.rows);
        Ok(())
    }

    fn take_block(&mut self, frame_type: FrameType, payload: &[u8]) -> Result<(), PipeError> {
        if frame_type != FrameType::Data {
            return Err(FormatError::UnexpectedFrame(frame_type).into());
        }
        let header = self.header.as_ref().unwrap();
        let block = match header.format {
            Format::Column => decode_block_column(&header.schema, payload)?,
            Format::Row => decode_block_row_columns(&header.schema, payload)?,
        };
        self.metrics.rows += block.row_count() as u64;
        if let Some(c) = self.check.as_mut() {
            let mut line = String::new();
            for i in 0..block.row_count() {
                if !c.wants() {
                    break;
                }
                line.clear();
                render_row(&row_at(&block, i), self.delim, &mut line);
                line.pop();
                c.saw(line.clone());
            }
        }
        self.blocks.push_back(block);
        Ok(())
    }

    fn take_text(&mut self, frame_type: FrameType, payload: &[u8]) -> Result<(), PipeError> {
        if frame_type != FrameType::Data {
            return Err(FormatError::UnexpectedFrame(frame_type).into());
        }
        if self.text_pos > 0 && self.text_pos * 2 >= self.text.len() {
            self.text.drain(..self.text_pos);
            self.text_scan -= self.text_pos;
            self.text_pos = 0;
        }
        self.text.extend_from_slice(payload);
        while let Some(i) = self.text[self.text_scan..].iter().position(|&b| b == b'\n') {
            let start = self.text_scan;
            self.text_scan += i + 1;
            if self.check.as_ref().is_some_and(MirrorCheck::wants) {
                let line = self.text[start..start + i + 1].to_vec();
                self.saw_text_line(&line)?;
            } else {
                self.metrics.rows += 1;
            }
        }
        Ok(())
    }

    fn saw_text_line(&mut self, line: &[u8]) -> Result<(), PipeError> {
        self.metrics.rows += 1;
        if let Some(c) = self.check.as_mut() {
            let s = std::str::from_utf8(trim_newline_bytes(line)).map_err(|_| WireError::InvalidUtf8("text stream"))?;
            c.saw(s.to_owned());
        }
        Ok(())
    }

    fn take_json(&mut self, frame: Frame) -> Result<(), PipeError> {
        let mut out = Vec::new();
        self.json.decode(&frame, &mut out)?;
        self.metrics.rows += out.len() as u64;
        if let Some(c) = self.check.as_mut() {
            for d in &out {
                if c.wants() {
                    c.saw(serde_json::to_string(d)?);
                }
            }
        }
        self.docs.extend(out);
        Ok(())
    }

    /// Pulls frames until `ready` holds or the stream ends. Records covered
    /// by the debug check are held back until it passes.
    fn fill(&mut self, ready: impl Fn(&Self) -> bool) -> Result<(), PipeError> {
        loop {
            let verified = self.check.as_ref().is_none_or(MirrorCheck::is_done);
            if verified && ready(self) {
                return Ok(());
            }
            if !verified && !self.check.as_ref().unwrap().wants() {
                self.check.as_mut().unwrap().verify()?;
                continue;
            }
            if !self.pump()? {
                return Ok(());
            }
        }
    }

    fn has_typed_row(&self) -> bool {
        self.blocks.front().is_some_and(|b| self.cursor < b.row_count()) || self.blocks.len() > 1
    }

    /// Moves past exhausted blocks; true when a row is available.
    fn front_row(&mut self) -> Result<bool, PipeError> {
        loop {
            if let Some(b) = self.blocks.front() {
                if self.cursor < b.row_count() {
                    return Ok(true);
                }
                self.blocks.pop_front();
                self.cursor = 0;
                continue;
            }
            self.fill(|s| !s.blocks.is_empty())?;
            if self.blocks.is_empty() {
                return Ok(false);
            }
        }
    }

    fn has_text_line(&self) -> bool {
        self.text_pos < self.text_scan
    }

    fn read_line(&mut self, buf: &mut AugText) -> Result<bool, PipeError> {
        buf.clear();
        self.fill(|s| s.kind != Kind::Unknown)?;
        match self.kind {
            Kind::Typed => {
                self.fill(|s| s.has_typed_row())?;
                if !self.front_row()? {
                    return Ok(false);
                }
                let block = self.blocks.front().unwrap();
                push_row_parts(block, self.cursor, self.delim, buf);
                self.cursor += 1;
                Ok(true)
            }
            Kind::Text => {
                self.fill(|s| s.has_text_line())?;
                if !self.has_text_line() {
                    return Ok(false);
                }
                let rest = &self.text[self.text_pos..self.text_scan];
                let end = rest.iter().position(|&b| b == b'\n').map_or(rest.len(), |i| i + 1);
                let line = trim_newline_bytes(&rest[..end]);
                buf.push_str(std::str::from_utf8(line).map_err(|_| WireError::InvalidUtf8("text stream"))?);
                self.text_pos += end;
                Ok(true)
            }
            Kind::Json => {
                self.fill(|s| !s.docs.is_empty())?;
                match self.docs.pop_front() {
                    Some(d) => {
                        buf.push_str(&serde_json::to_string(&d)?);
                        Ok(true)
                    }
                    None => Ok(false),
                }
            }
            // stream ended before any frame
            Kind::Unknown => Ok(false),
        }
    }

    fn next_batch(&mut self) -> Result<Option<RecordBatch>, PipeError> {
        self.fill(|s| s.kind != Kind::Unknown)?;
        match self.kind {
            Kind::Typed => {
                self.fill(|s| s.has_typed_row())?;
                if !self.front_row()? {
                    return Ok(None);
                }
                let block = self.blocks.pop_front().unwrap();
                let rows: Vec<Row> = (self.cursor..block.row_count()).map(|i| row_at(&block, i)).collect();
                self.cursor = 0;
                Ok(Some(RecordBatch::new(block.schema().clone(), rows)?))
            }
            Kind::Unknown => Ok(None),
            Kind::Text => Err(PipeError::ContentMismatch { wanted: "typed row", found: "text" }),
            Kind::Json => Err(PipeError::ContentMismatch { wanted: "typed row", found: "JSON" }),
        }
    }

    fn next_json(&mut self) -> Result<Option<Json>, PipeError> {
        self.fill(|s| s.kind != Kind::Unknown)?;
        match self.kind {
            Kind::Json => {
                self.fill(|s| !s.docs.is_empty())?;
                Ok(self.docs.pop_front())
            }
            Kind::Text => {
                let mut buf = AugText::new();
                if !self.read_line(&mut buf)? {
                    return Ok(None);
                }
                Ok(Some(serde_json::from_str(buf.materialize())?))
            }
            Kind::Unknown => Ok(None),
            Kind::Typed => Err(PipeError::ContentMismatch { wanted: "JSON", found: "typed row" }),
        }
    }
}

fn row_at(block: &ColumnBlock, i: usize) -> Row {
    block.columns().iter().map(|c| c.value(i)).collect()
}

/// Appends row `i` of `block` as typed parts separated by `delim`.
fn push_row_parts(block: &ColumnBlock, i: usize, delim: char, buf: &mut AugText) {
    let mut d = [0u8; 4];
    let delim: &str = delim.encode_utf8(&mut d);
    for (c, col) in block.columns().iter().enumerate() {
        if c > 0 {
            buf.push_str(delim);
        }
        match col {
            ColumnData::Int32(v) => buf.push_int32(v[i]),
            ColumnData::Int64(v) => buf.push_int64(v[i]),
            ColumnData::Float64(v) => buf.push_float64(v[i]),
            ColumnData::Bool(v) => buf.push_bool(v[i]),
            ColumnData::Text(v) => buf.push_str(&v[i]),
        };
    }
}
