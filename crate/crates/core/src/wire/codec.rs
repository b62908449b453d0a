use std::io::{Read, Write};

use flate2::read::DeflateDecoder;
use flate2::write::DeflateEncoder;

use super::block::{decode_column, encode_column, read_value};
use super::header::Format;
use super::schema::{ColumnData, ColumnType, Schema, Value};
use super::{put_str_u32, ByteReader, WireError};

/// Payload codec named in the transfer header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Compression {
    None = 0,
    /// Value-level runs per column; column format only.
    Rle = 1,
    /// Raw deflate stream over the whole payload.
    Deflate = 2,
}

impl Compression {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<Self, WireError> {
        match code {
            0 => Ok(Compression::None),
            1 => Ok(Compression::Rle),
            2 => Ok(Compression::Deflate),
            other => Err(WireError::UnknownCompression(other)),
        }
    }

    /// Whether the codec can be applied to payloads of `format`.
    pub fn supports(self, format: Format) -> bool {
        !(self == Compression::Rle && format == Format::Row)
    }
}

pub fn compress(payload: &[u8], codec: Compression, schema: &Schema, format: Format) -> Result<Vec<u8>, WireError> {
    match codec {
        Compression::None => Ok(payload.to_vec()),
        Compression::Rle if format == Format::Row => Err(WireError::RleOnRowFormat),
        Compression::Rle => rle_encode(payload, schema),
        Compression::Deflate => {
            let mut enc = DeflateEncoder::new(Vec::with_capacity(payload.len() / 2), flate2::Compression::fast());
            enc.write_all(payload)?;
            Ok(enc.finish()?)
        }
    }
}

pub fn decompress(payload: &[u8], codec: Compression, schema: &Schema, format: Format) -> Result<Vec<u8>, WireError> {
    match codec {
        Compression::None => Ok(payload.to_vec()),
        Compression::Rle if format == Format::Row => Err(WireError::RleOnRowFormat),
        Compression::Rle => rle_decode(payload, schema),
        Compression::Deflate => {
            let mut out = Vec::with_capacity(payload.len() * 2);
            DeflateDecoder::new(payload).read_to_end(&mut out).map_err(|e| WireError::CorruptPayload(e.to_string()))?;
            Ok(out)
        }
    }
}

/// Re-encodes a column block payload as row count u32, then for every
/// column a sequence of `(run_length u32, value)` pairs over maximal runs.
fn rle_encode(payload: &[u8], schema: &Schema) -> Result<Vec<u8>, WireError> {
    let mut r = ByteReader::new(payload);
    let n = r.u32()? as usize;
    let mut out = Vec::with_capacity(payload.len() / 4 + 4);
    out.extend_from_slice(&(n as u32).to_le_bytes());
    for (i, ty) in schema.types().enumerate() {
        let col = decode_column(&mut r, ty, n, i)?;
        match &col {
            ColumnData::Int32(v) => put_runs(&mut out, v, |a, b| a == b, |o, x| o.extend_from_slice(&x.to_le_bytes())),
            ColumnData::Int64(v) => put_runs(&mut out, v, |a, b| a == b, |o, x| o.extend_from_slice(&x.to_le_bytes())),
            ColumnData::Float64(v) => {
                put_runs(&mut out, v, |a, b| a.to_bits() == b.to_bits(), |o, x| o.extend_from_slice(&x.to_le_bytes()))
            }
            ColumnData::Bool(v) => put_runs(&mut out, v, |a, b| a == b, |o, x| o.push(*x as u8)),
            ColumnData::Text(v) => put_runs(&mut out, v, |a, b| a == b, |o, x| put_str_u32(o, x)),
        }
    }
    r.finish()?;
    Ok(out)
}

fn put_runs<T>(out: &mut Vec<u8>, values: &[T], same: impl Fn(&T, &T) -> bool, put: impl Fn(&mut Vec<u8>, &T)) {
    let mut i = 0;
    while i < values.len() {
        let mut j = i + 1;
        while j < values.len() && same(&values[i], &values[j]) {
            j += 1;
        }
        out.extend_from_slice(&((j - i) as u32).to_le_bytes());
        put(out, &values[i]);
        i = j;
    }
}

fn rle_decode(payload: &[u8], schema: &Schema) -> Result<Vec<u8>, WireError> {
    let mut r = ByteReader::new(payload);
    let n = r.u32()? as usize;
    let mut out = Vec::with_capacity(payload.len() * 4);
    out.extend_from_slice(&(n as u32).to_le_bytes());
    for ty in schema.types() {
        let mut col = ColumnData::with_capacity(ty, n.min(1 << 16));
        let mut filled = 0usize;
        while filled < n {
            let run = r.u32()? as usize;
            if run == 0 || filled + run > n {
                return Err(WireError::CorruptPayload(format!("run of {run} overflows column of {n} values")));
            }
            let value = read_value(&mut r, ty)?;
            extend_run(&mut col, value, run, ty);
            filled += run;
        }
        encode_column(&mut out, &col)?;
    }
    r.finish()?;
    Ok(out)
}

fn extend_run(col: &mut ColumnData, value: Value, run: usize, ty: ColumnType) {
    match (col, value) {
        (ColumnData::Int32(v), Value::Int32(x)) => v.extend(std::iter::repeat_n(x, run)),
        (ColumnData::Int64(v), Value::Int64(x)) => v.extend(std::iter::repeat_n(x, run)),
        (ColumnData::Float64(v), Value::Float64(x)) => v.extend(std::iter::repeat_n(x, run)),
        (ColumnData::Bool(v), Value::Bool(x)) => v.extend(std::iter::repeat_n(x, run)),
        (ColumnData::Text(v), Value::Text(x)) => v.extend(std::iter::repeat_n(x, run)),
        _ => unreachable!("read_value returns a value of type {ty}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wire::{encode_block_column, encode_block_row, pivot, ColumnBlock, RecordBatch};

    fn int_schema() -> Schema {
        Schema::from_types(&[ColumnType::Int32]).unwrap()
    }

    #[test]
    fn rle_runs_are_maximal() {
        let block = ColumnBlock::new(int_schema(), 4, vec![ColumnData::Int32(vec![5, 5, 5, 1])]).unwrap();
        let raw = encode_block_column(&block).unwrap();
        let rle = compress(&raw, Compression::Rle, &int_schema(), Format::Column).unwrap();
        let mut expected = vec![4, 0, 0, 0];
        for (run, v) in [(3u32, 5i32), (1, 1)] {
            expected.extend_from_slice(&run.to_le_bytes());
            expected.extend_from_slice(&v.to_le_bytes());
        }
        assert_eq!(rle, expected);
        assert_eq!(decompress(&rle, Compression::Rle, &int_schema(), Format::Column).unwrap(), raw);
    }

    #[test]
    fn none_is_identity() {
        let x = b"arbitrary bytes".to_vec();
        assert_eq!(compress(&x, Compression::None, &Schema::empty(), Format::Row).unwrap(), x);
        assert_eq!(decompress(&x, Compression::None, &Schema::empty(), Format::Row).unwrap(), x);
    }

    #[test]
    fn rle_rejects_row_format() {
        let b = RecordBatch::empty(int_schema());
        let raw = encode_block_row(&b).unwrap();
        assert!(matches!(compress(&raw, Compression::Rle, &int_schema(), Format::Row), Err(WireError::RleOnRowFormat)));
        assert!(!Compression::Rle.supports(Format::Row));
        assert!(Compression::Deflate.supports(Format::Row));
    }

    #[test]
    fn corrupt_payloads() {
        assert!(matches!(
            decompress(b"\xff\xff\xff\xff", Compression::Deflate, &Schema::empty(), Format::Row),
            Err(WireError::CorruptPayload(_))
        ));
        // run longer than the column
        let mut bad = vec![2, 0, 0, 0];
        bad.extend_from_slice(&3u32.to_le_bytes());
        bad.extend_from_slice(&9i32.to_le_bytes());
        assert!(matches!(
            decompress(&bad, Compression::Rle, &int_schema(), Format::Column),
            Err(WireError::CorruptPayload(_))
        ));
    }

    #[test]
    fn rle_text_and_float_bits() {
        let schema = Schema::from_types(&[ColumnType::Text, ColumnType::Float64, ColumnType::Bool]).unwrap();
        let rows = vec![
            vec![Value::Text("a".into()), Value::Float64(0.0), Value::Bool(true)],
            vec![Value::Text("a".into()), Value::Float64(-0.0), Value::Bool(true)],
            vec![Value::Text("b".into()), Value::Float64(-0.0), Value::Bool(false)],
        ];
        let block = pivot(&RecordBatch::new(schema.clone(), rows).unwrap());
        let raw = encode_block_column(&block).unwrap();
        let rle = compress(&raw, Compression::Rle, &schema, Format::Column).unwrap();
        // text: (2,"a"),(1,"b") = 2*(4+4+1); float: 0.0 and -0.0 differ = 2*(4+8); bool: 2*(4+1)
        assert_eq!(rle.len(), 4 + 18 + 24 + 10);
        assert_eq!(decompress(&rle, Compression::Rle, &schema, Format::Column).unwrap(), raw);
    }
}
