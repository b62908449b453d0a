//! Stand-ins for the two engines on either side of a transfer. Each only
//! knows how to export to and import from a stream of its own format, the
//! way a real engine's CSV or JSON export path would.

use serde_json::{json, Value as Json};

use crate::augtext::AugText;
use crate::formatopt::parse_text_row_into;
use crate::pipe::{PipeError, RecordSink, RecordSource};
use crate::wire::{ColumnBlock, ColumnData, Row, Schema};

/// Writes and reads delimited text one row at a time.
#[derive(Debug, Clone, Copy)]
pub struct CsvEngine {
    pub delimiter: char,
}

impl Default for CsvEngine {
    fn default() -> Self {
        CsvEngine { delimiter: ',' }
    }
}

impl CsvEngine {
    /// Exports every row of `data`, one record per row.
    pub fn export(&self, data: &ColumnBlock, sink: &mut RecordSink) -> Result<u64, PipeError> {
        let mut buf = [0u8; 4];
        let delim: &str = self.delimiter.encode_utf8(&mut buf);
        let mut record = AugText::with_capacity(128);
        for i in 0..data.row_count() {
            record.clear();
            for (c, col) in data.columns().iter().enumerate() {
                if c > 0 {
                    record.push_str(delim);
                }
                match col {
                    ColumnData::Int32(v) => record.push_int32(v[i]),
                    ColumnData::Int64(v) => record.push_int64(v[i]),
                    ColumnData::Float64(v) => record.push_float64(v[i]),
                    ColumnData::Bool(v) => record.push_bool(v[i]),
                    ColumnData::Text(v) => record.push_str(&v[i]),
                };
            }
            record.push_str("\n");
            sink.write_record(&record)?;
        }
        Ok(data.row_count() as u64)
    }

    /// Reads lines until the stream ends, parsing each against `schema`.
    pub fn import(&self, source: &mut RecordSource, schema: &Schema) -> Result<ColumnBlock, PipeError> {
        let mut columns: Vec<ColumnData> = schema.types().map(|t| ColumnData::with_capacity(t, 1024)).collect();
        let mut rows = 0;
        let mut line = AugText::new();
        let mut row = Row::with_capacity(schema.len());
        while source.read_line(&mut line)? {
            parse_text_row_into(&line, self.delimiter, schema, rows, &mut row)?;
            for (col, v) in columns.iter_mut().zip(row.drain(..)) {
                col.push(v)?;
            }
            rows += 1;
        }
        Ok(ColumnBlock::new(schema.clone(), rows, columns)?)
    }
}

/// Writes and reads one JSON object per record.
#[derive(Debug, Clone, Copy, Default)]
pub struct JsonEngine;

impl JsonEngine {
    pub fn export(&self, docs: &[Json], sink: &mut RecordSink) -> Result<u64, PipeError> {
        for d in docs {
            sink.write_json(d)?;
        }
        Ok(docs.len() as u64)
    }

    pub fn import(&self, source: &mut RecordSource) -> Result<Vec<Json>, PipeError> {
        let mut docs = Vec::new();
        while let Some(d) = source.next_json()? {
            docs.push(d);
        }
        Ok(docs)
    }
}

/// Homogeneous two-key documents, `{"column1": i, "column2": "value<i>"}`.
pub fn example_json_docs(n: usize) -> Vec<Json> {
    (1..=n).map(|i| json!({"column1": i, "column2": format!("value{i}")})).collect()
}

/// Naive text size of `docs`: one serialized object per line.
pub fn json_lines_len(docs: &[Json]) -> usize {
    docs.iter().map(|d| serde_json::to_string(d).map_or(0, |s| s.len() + 1)).sum()
}
