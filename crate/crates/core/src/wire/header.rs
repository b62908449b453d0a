use std::io::Read;

use super::codec::Compression;
use super::schema::{Column, ColumnType, Schema};
use super::{put_str_u16, ByteReader, WireError};

pub const MAGIC: [u8; 4] = *b"PGEN";
pub const VERSION: u16 = 1;

/// Payload layout of `DATA` frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Format {
    Row = 0,
    Column = 1,
}

impl Format {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<Self, WireError> {
        match code {
            0 => Ok(Format::Row),
            1 => Ok(Format::Column),
            other => Err(WireError::UnknownFormat(other)),
        }
    }
}

/// First bytes of every transfer: identifies the stream and carries the schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransferHeader {
    pub format: Format,
    pub compression: Compression,
    pub query_id: String,
    pub schema: Schema,
}

impl TransferHeader {
    pub fn new(format: Format, compression: Compression, query_id: impl Into<String>, schema: Schema) -> Self {
        TransferHeader { format, compression, query_id: query_id.into(), schema }
    }
}

pub fn encode_header(h: &TransferHeader) -> Result<Vec<u8>, WireError> {
    if h.query_id.len() > u16::MAX as usize {
        return Err(WireError::QueryIdTooLong(h.query_id.len()));
    }
    let columns = h.schema.columns();
    if columns.len() > u16::MAX as usize {
        return Err(WireError::SchemaTooWide(columns.len()));
    }
    let mut out = Vec::with_capacity(12 + h.query_id.len() + columns.len() * 8);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(h.format.code());
    out.push(h.compression.code());
    put_str_u16(&mut out, &h.query_id);
    out.extend_from_slice(&(columns.len() as u16).to_le_bytes());
    for c in columns {
        if c.name.len() > u16::MAX as usize {
            return Err(WireError::NameTooLong(c.name.len()));
        }
        out.push(c.ty.code());
        put_str_u16(&mut out, &c.name);
    }
    Ok(out)
}

/// Decodes a header from the front of `b`, returning it with the number of bytes consumed.
pub fn decode_header(b: &[u8]) -> Result<(TransferHeader, usize), WireError> {
    let mut r = ByteReader::new(b);
    let magic: [u8; 4] = r.take(4)?.try_into().unwrap();
    if magic != MAGIC {
        return Err(WireError::BadMagic(magic));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(WireError::UnsupportedVersion(version));
    }
    let format = Format::from_code(r.u8()?)?;
    let compression = Compression::from_code(r.u8()?)?;
    let query_id = r.str_u16("query id")?.to_owned();
    let ncols = r.u16()? as usize;
    let mut columns = Vec::with_capacity(ncols);
    for _ in 0..ncols {
        let ty = ColumnType::from_code(r.u8()?)?;
        let name = r.str_u16("column name")?;
        columns.push(Column::new(name, ty));
    }
    let schema = Schema::new(columns)?;
    Ok((TransferHeader { format, compression, query_id, schema }, r.position()))
}

/// Reads exactly one header from a stream.
pub fn read_header<R: Read>(r: &mut R) -> Result<TransferHeader, WireError> {
    let mut buf = vec![0u8; 10];
    read_full(r, &mut buf)?;
    // Fail fast on a foreign stream before reading any length fields.
    if buf[..4] != MAGIC {
        return Err(WireError::BadMagic(buf[..4].try_into().unwrap()));
    }
    let qlen = u16::from_le_bytes([buf[8], buf[9]]) as usize;
    extend(r, &mut buf, qlen + 2)?;
    let ncols = u16::from_le_bytes([buf[buf.len() - 2], buf[buf.len() - 1]]) as usize;
    for _ in 0..ncols {
        extend(r, &mut buf, 3)?;
        let nlen = u16::from_le_bytes([buf[buf.len() - 2], buf[buf.len() - 1]]) as usize;
        extend(r, &mut buf, nlen)?;
    }
    let (header, used) = decode_header(&buf)?;
    debug_assert_eq!(used, buf.len());
    Ok(header)
}

fn extend<R: Read>(r: &mut R, buf: &mut Vec<u8>, n: usize) -> Result<(), WireError> {
    let start = buf.len();
    buf.resize(start + n, 0);
    read_full(r, &mut buf[start..])
}

pub(crate) fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<(), WireError> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => WireError::PrematureClose,
        _ => WireError::Io(e),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one_int_column() -> TransferHeader {
        TransferHeader::new(
            Format::Row,
            Compression::None,
            "",
            Schema::new(vec![Column::new("a", ColumnType::Int32)]).unwrap(),
        )
    }

    #[test]
    fn minimal_header_is_twelve_bytes() {
        let h = TransferHeader::new(Format::Row, Compression::None, "", Schema::empty());
        let b = encode_header(&h).unwrap();
        assert_eq!(b, b"PGEN\x01\x00\x00\x00\x00\x00\x00\x00");
    }

    #[test]
    fn one_column_layout_and_inverse() {
        let mut expected = b"PGEN\x01\x00\x00\x00\x00\x00".to_vec();
        expected.extend_from_slice(&[0x01, 0x00]); // one column
        expected.extend_from_slice(&[0x01, 0x01, 0x00, b'a']); // INT32, name len 1, "a"
        let h = one_int_column();
        assert_eq!(encode_header(&h).unwrap(), expected);
        let (back, used) = decode_header(&expected).unwrap();
        assert_eq!(back, h);
        assert_eq!(used, expected.len());
    }

    #[test]
    fn reports_consumed_bytes_with_trailing_data() {
        let mut b = encode_header(&one_int_column()).unwrap();
        let n = b.len();
        b.extend_from_slice(&[9, 9, 9]);
        assert_eq!(decode_header(&b).unwrap().1, n);
    }

    #[test]
    fn distinct_errors() {
        let good = encode_header(&one_int_column()).unwrap();

        let mut b = good.clone();
        b[0] ^= 0xff;
        assert!(matches!(decode_header(&b), Err(WireError::BadMagic(_))));

        assert!(matches!(decode_header(&good[..4]), Err(WireError::Truncated { .. })));

        let mut b = good.clone();
        b[4] = 2;
        assert!(matches!(decode_header(&b), Err(WireError::UnsupportedVersion(2))));

        let mut b = good.clone();
        b[6] = 7;
        assert!(matches!(decode_header(&b), Err(WireError::UnknownFormat(7))));

        let mut b = good.clone();
        b[7] = 3;
        assert!(matches!(decode_header(&b), Err(WireError::UnknownCompression(3))));

        let mut b = good.clone();
        b[12] = 9;
        assert!(matches!(decode_header(&b), Err(WireError::UnknownTypeCode(9))));
    }

    #[test]
    fn long_query_id_rejected() {
        let h = TransferHeader::new(Format::Row, Compression::None, "q".repeat(65_536), Schema::empty());
        assert!(matches!(encode_header(&h), Err(WireError::QueryIdTooLong(65_536))));
    }

    #[test]
    fn stream_reader_matches_slice_decoder() {
        let h = TransferHeader::new(
            Format::Column,
            Compression::Deflate,
            "query-7",
            Schema::new(vec![Column::new("k", ColumnType::Int64), Column::new("", ColumnType::Text)]).unwrap(),
        );
        let b = encode_header(&h).unwrap();
        assert_eq!(read_header(&mut &b[..]).unwrap(), h);
        assert!(matches!(read_header(&mut &b[..b.len() - 1]), Err(WireError::PrematureClose)));
    }

    fn arb_type() -> impl Strategy<Value = ColumnType> {
        (1u8..=5).prop_map(|c| ColumnType::from_code(c).unwrap())
    }

    proptest! {
        #[test]
        fn header_round_trip(
            format in prop_oneof![Just(Format::Row), Just(Format::Column)],
            compression in prop_oneof![Just(Compression::None), Just(Compression::Rle), Just(Compression::Deflate)],
            query in "\\PC{0,20}",
            types in prop::collection::vec(arb_type(), 0..12),
        ) {
            let columns = types
                .iter()
                .enumerate()
                .map(|(i, t)| Column::new(if i % 3 == 0 { String::new() } else { format!("c{i}é") }, *t))
                .collect();
            let h = TransferHeader::new(format, compression, query, Schema::new(columns).unwrap());
            let b = encode_header(&h).unwrap();
            prop_assert_eq!(encode_header(&h).unwrap(), b.clone());
            let (back, used) = decode_header(&b).unwrap();
            prop_assert_eq!(back, h);
            prop_assert_eq!(used, b.len());
        }
    }
}
