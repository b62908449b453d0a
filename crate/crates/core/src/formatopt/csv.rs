use super::FormatError;
use crate::augtext::{render_value, AugText, AugTextError, Part};
use crate::wire::{ColumnType, RecordBatch, Row, Schema, Value};

enum Field {
    Empty,
    Typed(Value),
    Text(String),
}

/// Turns exported CSV records into typed rows by dropping delimiter and
/// newline parts.
///
/// A field made of a single primitive part keeps its type; a field built from
/// several parts (or from text) becomes `TEXT`. The schema comes from the first
/// completed row, with empty column names.
pub struct CsvInterceptor {
    delim: char,
    delim_buf: [u8; 4],
    delim_len: usize,
    schema: Option<Schema>,
    row: Row,
    field: Field,
    rows_seen: usize,
}

impl CsvInterceptor {
    pub fn new(delim: char) -> Self {
        let mut delim_buf = [0u8; 4];
        let delim_len = delim.encode_utf8(&mut delim_buf).len();
        CsvInterceptor { delim, delim_buf, delim_len, schema: None, row: Vec::new(), field: Field::Empty, rows_seen: 0 }
    }

    /// Starts with a known schema instead of inferring one.
    pub fn with_schema(delim: char, schema: Schema) -> Self {
        let mut me = CsvInterceptor::new(delim);
        me.schema = Some(schema);
        me
    }

    pub fn delimiter(&self) -> char {
        self.delim
    }

    pub fn schema(&self) -> Option<&Schema> {
        self.schema.as_ref()
    }

    pub fn rows_seen(&self) -> usize {
        self.rows_seen
    }

    /// Feeds the parts of one exported value; completed rows are appended to `out`.
    pub fn push(&mut self, record: &AugText, out: &mut Vec<Row>) -> Result<(), FormatError> {
        self.push_with(record, |row| {
            out.push(std::mem::take(row));
            Ok::<_, FormatError>(())
        })
    }

    /// Like [`push`](Self::push), but lends each completed row to `on_row`.
    /// Values left in the row are dropped afterwards.
    pub fn push_with<E, F>(&mut self, record: &AugText, mut on_row: F) -> Result<(), E>
    where
        E: From<FormatError>,
        F: FnMut(&mut Row) -> Result<(), E>,
    {
        for part in record.parts() {
            match part {
                Part::Text(s) if s.as_bytes() == &self.delim_buf[..self.delim_len] => self.end_field(),
                Part::Text("\n") | Part::Text("\r\n") => {
                    self.end_field();
                    self.end_row()?;
                    let r = on_row(&mut self.row);
                    self.row.clear();
                    r?;
                }
                other => self.extend_field(other),
            }
        }
        Ok(())
    }

    /// Flushes a final row that was not newline-terminated.
    pub fn finish(&mut self, out: &mut Vec<Row>) -> Result<(), FormatError> {
        if !self.row.is_empty() || !matches!(self.field, Field::Empty) {
            self.end_field();
            self.end_row()?;
            out.push(std::mem::take(&mut self.row));
        }
        Ok(())
    }

    fn extend_field(&mut self, part: Part<'_>) {
        self.field = match std::mem::replace(&mut self.field, Field::Empty) {
            Field::Empty => match part {
                Part::Text(s) => Field::Text(s.to_owned()),
                p => Field::Typed(p.to_value()),
            },
            Field::Typed(v) => {
                let mut s = String::new();
                render_value(&v, &mut s);
                part.render(&mut s);
                Field::Text(s)
            }
            Field::Text(mut s) => {
                part.render(&mut s);
                Field::Text(s)
            }
        };
    }

    fn end_field(&mut self) {
        let v = match std::mem::replace(&mut self.field, Field::Empty) {
            Field::Empty => Value::Text(String::new()),
            Field::Typed(v) => v,
            Field::Text(s) => Value::Text(s),
        };
        self.row.push(v);
    }

    /// Checks the completed row in place, fixing the schema on the first one.
    fn end_row(&mut self) -> Result<(), FormatError> {
        let row = &self.row;
        let index = self.rows_seen;
        self.rows_seen += 1;
        let schema = match &self.schema {
            Some(s) => s,
            None => {
                let types: Vec<ColumnType> = row.iter().map(Value::column_type).collect();
                self.schema.insert(Schema::from_types(&types)?)
            }
        };
        if row.len() != schema.len() {
            let found = row.len();
            self.row.clear();
            return Err(FormatError::Arity { row: index, expected: schema.len(), found });
        }
        for (field, (v, ty)) in row.iter().zip(schema.types()).enumerate() {
            if v.column_type() != ty {
                let found = v.column_type();
                self.row.clear();
                return Err(FormatError::FieldType { row: index, field, expected: ty, found });
            }
        }
        Ok(())
    }
}

/// Canonical CSV line for a row, newline included.
pub fn render_row(row: &[Value], delim: char, out: &mut String) {
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            out.push(delim);
        }
        render_value(v, out);
    }
    out.push('\n');
}

/// Text form of an imported stream: one canonical line per row.
pub fn csv_reconstruct_import<'a, I>(batches: I, delim: char) -> String
where
    I: IntoIterator<Item = &'a RecordBatch>,
{
    let mut out = String::new();
    for b in batches {
        for row in b.rows() {
            render_row(row, delim, &mut out);
        }
    }
    out
}

/// Typed import path: the line as an [`AugText`] whose value parts are the
/// original primitives, so `split` and `parse_*` never touch text.
pub fn row_to_augtext(row: &[Value], delim: char) -> AugText {
    let mut buf = [0u8; 4];
    let d: &str = delim.encode_utf8(&mut buf);
    let mut a = AugText::with_capacity(row.len() * 14);
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            a.push_str(d);
        }
        a.push_value(v);
    }
    a
}

/// Parses one line (without terminator) against a declared schema.
pub fn parse_text_row(line: &AugText, delim: char, schema: &Schema, row: usize) -> Result<Row, FormatError> {
    let mut out = Vec::with_capacity(schema.len());
    parse_text_row_into(line, delim, schema, row, &mut out)?;
    Ok(out)
}

/// [`parse_text_row`] into a caller-owned row, which is cleared first.
///
/// Gives the same result as splitting the line and parsing each field. When
/// the split can work on parts, a field made of one value of the declared
/// type is taken over directly.
pub fn parse_text_row_into(
    line: &AugText,
    delim: char,
    schema: &Schema,
    row: usize,
    out: &mut Row,
) -> Result<(), FormatError> {
    out.clear();
    let types = schema.columns();
    let arity = |found| FormatError::Arity { row, expected: types.len(), found };
    if !line.splits_structurally(delim) {
        let text = line.materialize();
        let found = text.split(delim).count();
        if found != types.len() {
            return Err(arity(found));
        }
        for (field, (f, col)) in text.split(delim).zip(types).enumerate() {
            out.push(parse_str(f, col.ty, row, field)?);
        }
        return Ok(());
    }
    let mut buf = [0u8; 4];
    let delim_str: &str = delim.encode_utf8(&mut buf);
    // most fields are a single part; longer ones spill into `more`
    let mut first: Option<Part<'_>> = None;
    let mut more: Vec<Part<'_>> = Vec::new();
    let mut field = 0;
    let finish_field = |first: &mut Option<Part<'_>>,
                        more: &mut Vec<Part<'_>>,
                        out: &mut Row,
                        field: usize|
     -> Result<(), FormatError> {
        let ty = types.get(field).ok_or(FormatError::Arity { row, expected: types.len(), found: field + 1 })?.ty;
        let v = match (first.take(), more.is_empty(), ty) {
            (Some(Part::Int32(x)), true, ColumnType::Int32) => Value::Int32(x),
            (Some(Part::Int64(x)), true, ColumnType::Int64) => Value::Int64(x),
            (Some(Part::Float64(x)), true, ColumnType::Float64) => Value::Float64(x),
            (Some(Part::Bool(x)), true, ColumnType::Bool) => Value::Bool(x),
            (Some(Part::Text(s)), true, ColumnType::Text) => Value::Text(s.to_owned()),
            (head, _, _) => {
                let mut a = AugText::new();
                head.into_iter().chain(more.drain(..)).for_each(|p| {
                    a.push_part(p);
                });
                parse_field(&a, ty, row, field)?
            }
        };
        out.push(v);
        Ok(())
    };
    for p in line.parts() {
        match p {
            Part::Text(s) if s == delim_str => {
                finish_field(&mut first, &mut more, out, field)?;
                field += 1;
            }
            other if first.is_none() => first = Some(other),
            other => more.push(other),
        }
    }
    finish_field(&mut first, &mut more, out, field)?;
    if out.len() != types.len() {
        return Err(arity(out.len()));
    }
    Ok(())
}

fn parse_field(f: &AugText, ty: ColumnType, row: usize, field: usize) -> Result<Value, FormatError> {
    let err = |source| FormatError::Parse { row, field, source };
    Ok(match ty {
        ColumnType::Int32 => {
            let x = f.parse_int().map_err(err)?;
            Value::Int32(i32::try_from(x).map_err(|_| err(AugTextError::NotNumeric(x.to_string())))?)
        }
        ColumnType::Int64 => Value::Int64(f.parse_int().map_err(err)?),
        ColumnType::Float64 => Value::Float64(f.parse_float().map_err(err)?),
        ColumnType::Bool => Value::Bool(f.parse_bool().map_err(err)?),
        ColumnType::Text => Value::Text(f.materialize().to_owned()),
    })
}

/// Same as [`parse_field`] on a one-part text value, without building one.
fn parse_str(f: &str, ty: ColumnType, row: usize, field: usize) -> Result<Value, FormatError> {
    let err = || FormatError::Parse { row, field, source: AugTextError::NotNumeric(f.to_owned()) };
    Ok(match ty {
        ColumnType::Int32 => {
            let x: i64 = f.parse().map_err(|_| err())?;
            Value::Int32(i32::try_from(x).map_err(|_| FormatError::Parse {
                row,
                field,
                source: AugTextError::NotNumeric(x.to_string()),
            })?)
        }
        ColumnType::Int64 => Value::Int64(f.parse().map_err(|_| err())?),
        ColumnType::Float64 => Value::Float64(f.parse().map_err(|_| err())?),
        ColumnType::Bool => match f {
            "true" => Value::Bool(true),
            "false" => Value::Bool(false),
            _ => return Err(err()),
        },
        ColumnType::Text => Value::Text(f.to_owned()),
    })
}
