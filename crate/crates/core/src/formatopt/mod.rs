//! Text-format optimizations applied on top of a pipe: delimiter inference,
//! CSV interception/reconstruction and JSON key-header deduplication.

mod csv;
mod delimiter;
mod json;

pub use csv::{
    csv_reconstruct_import, parse_text_row, parse_text_row_into, render_row, row_to_augtext, CsvInterceptor,
};
pub use delimiter::{infer_delimiter, infer_delimiter_parts, DelimiterReport};
pub use json::{json_dedup_decode, json_dedup_encode, JsonDedupDecoder, JsonDedupEncoder, KeyHeader};

use thiserror::Error;

use crate::augtext::AugTextError;
use crate::wire::{ColumnType, WireError};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("no single-character delimiter candidate among the exported parts")]
    NoDelimiterCandidate,
    #[error("row {row} has {found} fields, expected {expected}")]
    Arity { row: usize, expected: usize, found: usize },
    #[error("row {row} field {field}: expected {expected}, found {found}")]
    FieldType { row: usize, field: usize, expected: ColumnType, found: ColumnType },
    #[error("row {row} field {field}: {source}")]
    Parse { row: usize, field: usize, source: AugTextError },
    #[error("top-level JSON value is not an object")]
    NotAnObject,
    #[error("{0} frame arrived before the key header")]
    RowBeforeHeader(&'static str),
    #[error("second key header in one stream")]
    DuplicateKeyHeader,
    #[error("key {0:?} repeats a header key")]
    DuplicateKey(String),
    #[error("bitmap covers {found} bytes, header needs {expected}")]
    BitmapMismatch { expected: usize, found: usize },
    #[error("row holds {found} values, expected {expected}")]
    RowWidth { expected: usize, found: usize },
    #[error("unexpected {0:?} frame in a JSON stream")]
    UnexpectedFrame(crate::wire::FrameType),
    #[error("frames after end of stream")]
    AfterEndOfStream,
    #[error("malformed JSON row payload: {0}")]
    BadPayload(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Wire(#[from] WireError),
}
