//! Binary wire format shared by pipe endpoints.
//!
//! A transfer is a [`TransferHeader`] followed by a sequence of [`Frame`]s and
//! terminated by an `END_OF_STREAM` frame. All integers are little-endian. The
//! byte-level layout is documented in `docs/wire-format.md`.

mod block;
mod codec;
mod frame;
mod header;
mod schema;

pub use block::{
    decode_block_column, decode_block_row, decode_block_row_columns, encode_block_column, encode_block_row, pivot,
    unpivot, BlockBuilder, ColumnBlock, RecordBatch,
};
pub use codec::{compress, decompress, Compression};
pub use frame::{read_frame, write_frame, Frame, FrameType, FRAME_OVERHEAD};
pub use header::{decode_header, encode_header, read_header, Format, TransferHeader, MAGIC, VERSION};
pub use schema::{Column, ColumnData, ColumnType, Row, Schema, Value};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum WireError {
    #[error("bad magic {0:02x?}, expected \"PGEN\"")]
    BadMagic([u8; 4]),
    #[error("unsupported wire version {0}")]
    UnsupportedVersion(u16),
    #[error("unknown column type code {0}")]
    UnknownTypeCode(u8),
    #[error("unknown format code {0}")]
    UnknownFormat(u8),
    #[error("unknown compression code {0}")]
    UnknownCompression(u8),
    #[error("unknown frame type {0}")]
    UnknownFrameType(u8),
    #[error("truncated input: needed {needed} bytes, {available} available")]
    Truncated { needed: usize, available: usize },
    #[error("schema has {0} columns, at most 65535 allowed")]
    SchemaTooWide(usize),
    #[error("query id is {0} bytes, at most 65535 allowed")]
    QueryIdTooLong(usize),
    #[error("column name is {0} bytes, at most 65535 allowed")]
    NameTooLong(usize),
    #[error("duplicate column name {0:?}")]
    DuplicateColumn(String),
    #[error("invalid UTF-8 in {0}")]
    InvalidUtf8(&'static str),
    #[error("type mismatch: expected {expected}, found {found}")]
    TypeMismatch { expected: ColumnType, found: ColumnType },
    #[error("row has {found} values, schema has {expected} columns")]
    ArityMismatch { expected: usize, found: usize },
    #[error("column {column} has {found} values, block has {expected} rows")]
    RaggedColumn { column: usize, expected: usize, found: usize },
    #[error("text data exceeds 4 GiB in one block")]
    TextOffsetOverflow,
    #[error("bad text offsets in column {0}")]
    BadOffsets(usize),
    #[error("run-length encoding requires the column format")]
    RleOnRowFormat,
    #[error("corrupt compressed payload: {0}")]
    CorruptPayload(String),
    #[error("frame payload of {0} bytes exceeds 4 GiB")]
    FrameTooLarge(usize),
    #[error("END_OF_STREAM frame carries a {0}-byte payload")]
    EndOfStreamPayload(usize),
    #[error("{0} trailing bytes after block")]
    TrailingBytes(usize),
    #[error("connection closed before end of stream")]
    PrematureClose,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Bounds-checked little-endian reader over a byte slice.
pub(crate) struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        ByteReader { buf, pos: 0 }
    }

    pub(crate) fn position(&self) -> usize {
        self.pos
    }

    pub(crate) fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if self.remaining() < n {
            return Err(WireError::Truncated { needed: n, available: self.remaining() });
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], WireError> {
        let mut out = [0u8; N];
        out.copy_from_slice(self.take(N)?);
        Ok(out)
    }

    pub(crate) fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u16(&mut self) -> Result<u16, WireError> {
        self.array().map(u16::from_le_bytes)
    }

    pub(crate) fn u32(&mut self) -> Result<u32, WireError> {
        self.array().map(u32::from_le_bytes)
    }

    pub(crate) fn i32(&mut self) -> Result<i32, WireError> {
        self.array().map(i32::from_le_bytes)
    }

    pub(crate) fn i64(&mut self) -> Result<i64, WireError> {
        self.array().map(i64::from_le_bytes)
    }

    pub(crate) fn f64(&mut self) -> Result<f64, WireError> {
        self.array().map(f64::from_le_bytes)
    }

    pub(crate) fn str_u16(&mut self, what: &'static str) -> Result<&'a str, WireError> {
        let n = self.u16()? as usize;
        std::str::from_utf8(self.take(n)?).map_err(|_| WireError::InvalidUtf8(what))
    }

    pub(crate) fn str_u32(&mut self, what: &'static str) -> Result<&'a str, WireError> {
        let n = self.u32()? as usize;
        std::str::from_utf8(self.take(n)?).map_err(|_| WireError::InvalidUtf8(what))
    }

    pub(crate) fn finish(&self) -> Result<(), WireError> {
        match self.remaining() {
            0 => Ok(()),
            n => Err(WireError::TrailingBytes(n)),
        }
    }
}

pub(crate) fn put_str_u16(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u16).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

pub(crate) fn put_str_u32(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}
