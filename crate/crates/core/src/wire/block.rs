use super::header::Format;
use super::schema::{ColumnData, ColumnType, Row, Schema, Value};
use super::{put_str_u32, ByteReader, WireError};

/// Row-major block of values conforming to a schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordBatch {
    schema: Schema,
    rows: Vec<Row>,
}

impl RecordBatch {
    pub fn new(schema: Schema, rows: Vec<Row>) -> Result<Self, WireError> {
        for row in &rows {
            check_row(&schema, row)?;
        }
        Ok(RecordBatch { schema, rows })
    }

    pub fn empty(schema: Schema) -> Self {
        RecordBatch { schema, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Row) -> Result<(), WireError> {
        check_row(&self.schema, &row)?;
        self.rows.push(row);
        Ok(())
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<Row> {
        self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

fn check_row(schema: &Schema, row: &[Value]) -> Result<(), WireError> {
    if row.len() != schema.len() {
        return Err(WireError::ArityMismatch { expected: schema.len(), found: row.len() });
    }
    for (v, ty) in row.iter().zip(schema.types()) {
        if v.column_type() != ty {
            return Err(WireError::TypeMismatch { expected: ty, found: v.column_type() });
        }
    }
    Ok(())
}

/// Column-major form of a [`RecordBatch`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnBlock {
    schema: Schema,
    row_count: usize,
    columns: Vec<ColumnData>,
}

impl ColumnBlock {
    pub fn new(schema: Schema, row_count: usize, columns: Vec<ColumnData>) -> Result<Self, WireError> {
        if columns.len() != schema.len() {
            return Err(WireError::ArityMismatch { expected: schema.len(), found: columns.len() });
        }
        for (i, (col, ty)) in columns.iter().zip(schema.types()).enumerate() {
            if col.column_type() != ty {
                return Err(WireError::TypeMismatch { expected: ty, found: col.column_type() });
            }
            if col.len() != row_count {
                return Err(WireError::RaggedColumn { column: i, expected: row_count, found: col.len() });
            }
        }
        Ok(ColumnBlock { schema, row_count, columns })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn columns(&self) -> &[ColumnData] {
        &self.columns
    }
}

pub fn pivot(batch: &RecordBatch) -> ColumnBlock {
    let n = batch.len();
    let mut columns: Vec<ColumnData> = batch.schema.types().map(|t| ColumnData::with_capacity(t, n)).collect();
    for row in &batch.rows {
        for (col, v) in columns.iter_mut().zip(row) {
            // types were checked when the row entered the batch
            col.push(v.clone()).expect("row conforms to schema");
        }
    }
    ColumnBlock { schema: batch.schema.clone(), row_count: n, columns }
}

pub fn unpivot(block: &ColumnBlock) -> RecordBatch {
    let rows = (0..block.row_count).map(|i| block.columns.iter().map(|c| c.value(i)).collect()).collect();
    RecordBatch { schema: block.schema.clone(), rows }
}

fn put_value(out: &mut Vec<u8>, v: &Value) {
    match v {
        Value::Int32(x) => out.extend_from_slice(&x.to_le_bytes()),
        Value::Int64(x) => out.extend_from_slice(&x.to_le_bytes()),
        Value::Float64(x) => out.extend_from_slice(&x.to_le_bytes()),
        Value::Bool(x) => out.push(*x as u8),
        Value::Text(s) => put_str_u32(out, s),
    }
}

pub(crate) fn read_bool(r: &mut ByteReader<'_>) -> Result<bool, WireError> {
    match r.u8()? {
        0 => Ok(false),
        1 => Ok(true),
        b => Err(WireError::CorruptPayload(format!("bool byte {b}"))),
    }
}

pub(crate) fn read_value(r: &mut ByteReader<'_>, ty: ColumnType) -> Result<Value, WireError> {
    Ok(match ty {
        ColumnType::Int32 => Value::Int32(r.i32()?),
        ColumnType::Int64 => Value::Int64(r.i64()?),
        ColumnType::Float64 => Value::Float64(r.f64()?),
        ColumnType::Bool => Value::Bool(read_bool(r)?),
        ColumnType::Text => Value::Text(r.str_u32("text value")?.to_owned()),
    })
}

/// Accumulates rows and encodes them as one block payload, without an
/// intermediate [`RecordBatch`].
#[derive(Debug)]
pub struct BlockBuilder {
    schema: Schema,
    rows: usize,
    state: BuilderState,
}

#[derive(Debug)]
enum BuilderState {
    /// Row-format payload under construction; the first four bytes hold the
    /// row count once the block is finished.
    Row(Vec<u8>),
    Column(Vec<ColumnData>),
}

impl BlockBuilder {
    pub fn new(schema: Schema, format: Format) -> Self {
        let state = match format {
            Format::Row => BuilderState::Row(vec![0; 4]),
            Format::Column => BuilderState::Column(Vec::new()),
        };
        let mut b = BlockBuilder { schema, rows: 0, state };
        b.reset();
        b
    }

    fn reset(&mut self) {
        self.rows = 0;
        match &mut self.state {
            BuilderState::Row(buf) => {
                buf.clear();
                buf.extend_from_slice(&[0; 4]);
            }
            BuilderState::Column(cols) => {
                *cols = self.schema.types().map(|t| ColumnData::with_capacity(t, 1024)).collect();
            }
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    /// Appends a row, taking its values.
    pub fn push_row(&mut self, row: &mut Row) -> Result<(), WireError> {
        check_row(&self.schema, row)?;
        match &mut self.state {
            BuilderState::Row(buf) => row.iter().for_each(|v| put_value(buf, v)),
            BuilderState::Column(cols) => {
                for (col, v) in cols.iter_mut().zip(row.drain(..)) {
                    col.push(v)?;
                }
            }
        }
        row.clear();
        self.rows += 1;
        Ok(())
    }

    /// Encodes the accumulated rows and starts a new block.
    pub fn finish(&mut self) -> Result<Vec<u8>, WireError> {
        let count = u32::try_from(self.rows).map_err(|_| WireError::FrameTooLarge(self.rows))?;
        let out = match &mut self.state {
            BuilderState::Row(buf) => {
                let mut out = std::mem::take(buf);
                out[..4].copy_from_slice(&count.to_le_bytes());
                *buf = Vec::with_capacity(out.len());
                out
            }
            BuilderState::Column(cols) => {
                let block =
                    ColumnBlock { schema: self.schema.clone(), row_count: self.rows, columns: std::mem::take(cols) };
                encode_block_column(&block)?
            }
        };
        self.reset();
        Ok(out)
    }
}

/// Row count u32, then each row's values in schema order.
pub fn encode_block_row(batch: &RecordBatch) -> Result<Vec<u8>, WireError> {
    let row_count = u32::try_from(batch.len()).map_err(|_| WireError::FrameTooLarge(batch.len()))?;
    let width: usize = batch.schema.types().map(|t| t.fixed_width().unwrap_or(8)).sum();
    let mut out = Vec::with_capacity(4 + width * batch.len());
    out.extend_from_slice(&row_count.to_le_bytes());
    for row in &batch.rows {
        for v in row {
            put_value(&mut out, v);
        }
    }
    Ok(out)
}

pub fn decode_block_row(schema: &Schema, b: &[u8]) -> Result<RecordBatch, WireError> {
    let mut r = ByteReader::new(b);
    let n = r.u32()? as usize;
    let mut rows = Vec::with_capacity(n.min(r.remaining()));
    for _ in 0..n {
        let row = schema.types().map(|t| read_value(&mut r, t)).collect::<Result<Row, _>>()?;
        rows.push(row);
    }
    r.finish()?;
    Ok(RecordBatch { schema: schema.clone(), rows })
}

/// Decodes a row-format payload straight into columns.
pub fn decode_block_row_columns(schema: &Schema, b: &[u8]) -> Result<ColumnBlock, WireError> {
    let mut r = ByteReader::new(b);
    let n = r.u32()? as usize;
    let cap = n.min(r.remaining());
    let types: Vec<ColumnType> = schema.types().collect();
    let mut columns: Vec<ColumnData> = types.iter().map(|&t| ColumnData::with_capacity(t, cap)).collect();
    for _ in 0..n {
        for (col, &t) in columns.iter_mut().zip(&types) {
            col.push(read_value(&mut r, t)?)?;
        }
    }
    r.finish()?;
    Ok(ColumnBlock { schema: schema.clone(), row_count: n, columns })
}

/// Row count u32, then each column contiguously. Text columns are written as
/// `n + 1` u32 offsets followed by the concatenated UTF-8 bytes.
pub fn encode_block_column(block: &ColumnBlock) -> Result<Vec<u8>, WireError> {
    let row_count = u32::try_from(block.row_count).map_err(|_| WireError::FrameTooLarge(block.row_count))?;
    let mut out = Vec::with_capacity(4 + column_payload_hint(block));
    out.extend_from_slice(&row_count.to_le_bytes());
    for col in &block.columns {
        encode_column(&mut out, col)?;
    }
    Ok(out)
}

fn column_payload_hint(block: &ColumnBlock) -> usize {
    block
        .columns
        .iter()
        .map(|c| match c {
            ColumnData::Text(v) => 4 * (v.len() + 1) + v.iter().map(String::len).sum::<usize>(),
            other => other.column_type().fixed_width().unwrap() * other.len(),
        })
        .sum()
}

pub(crate) fn encode_column(out: &mut Vec<u8>, col: &ColumnData) -> Result<(), WireError> {
    match col {
        ColumnData::Int32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        ColumnData::Int64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        ColumnData::Float64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        ColumnData::Bool(v) => out.extend(v.iter().map(|&x| x as u8)),
        ColumnData::Text(v) => {
            let mut offset = 0u32;
            out.extend_from_slice(&offset.to_le_bytes());
            for s in v {
                let len = u32::try_from(s.len()).map_err(|_| WireError::TextOffsetOverflow)?;
                offset = offset.checked_add(len).ok_or(WireError::TextOffsetOverflow)?;
                out.extend_from_slice(&offset.to_le_bytes());
            }
            for s in v {
                out.extend_from_slice(s.as_bytes());
            }
        }
    }
    Ok(())
}

pub(crate) fn decode_column(
    r: &mut ByteReader<'_>,
    ty: ColumnType,
    n: usize,
    index: usize,
) -> Result<ColumnData, WireError> {
    // each value takes at least one byte, which bounds preallocation on corrupt counts
    let cap = n.min(r.remaining());
    Ok(match ty {
        ColumnType::Int32 => ColumnData::Int32((0..n).map(|_| r.i32()).collect::<Result<_, _>>()?),
        ColumnType::Int64 => ColumnData::Int64((0..n).map(|_| r.i64()).collect::<Result<_, _>>()?),
        ColumnType::Float64 => ColumnData::Float64((0..n).map(|_| r.f64()).collect::<Result<_, _>>()?),
        ColumnType::Bool => ColumnData::Bool((0..n).map(|_| read_bool(r)).collect::<Result<_, _>>()?),
        ColumnType::Text => {
            let mut offsets = Vec::with_capacity(cap + 1);
            for _ in 0..=n {
                offsets.push(r.u32()? as usize);
            }
            if offsets[0] != 0 || offsets.windows(2).any(|w| w[0] > w[1]) {
                return Err(WireError::BadOffsets(index));
            }
            let bytes = r.take(offsets[n])?;
            let mut values = Vec::with_capacity(cap);
            for w in offsets.windows(2) {
                let s = std::str::from_utf8(&bytes[w[0]..w[1]]).map_err(|_| WireError::InvalidUtf8("text column"))?;
                values.push(s.to_owned());
            }
            ColumnData::Text(values)
        }
    })
}

pub fn decode_block_column(schema: &Schema, b: &[u8]) -> Result<ColumnBlock, WireError> {
    let mut r = ByteReader::new(b);
    let n = r.u32()? as usize;
    let columns =
        schema.types().enumerate().map(|(i, t)| decode_column(&mut r, t, n, i)).collect::<Result<Vec<_>, _>>()?;
    r.finish()?;
    Ok(ColumnBlock { schema: schema.clone(), row_count: n, columns })
}
