use datapipe::wire::{
    compress, decode_block_column, decode_block_row, decode_header, decompress, encode_block_column, encode_block_row,
    encode_header, pivot, read_frame, unpivot, write_frame, Column, ColumnBlock, ColumnData, ColumnType, Compression,
    Format, FrameType, RecordBatch, Schema, TransferHeader, Value, WireError,
};
use proptest::prelude::*;

fn column_type() -> impl Strategy<Value = ColumnType> {
    prop::sample::select(vec![
        ColumnType::Int32,
        ColumnType::Int64,
        ColumnType::Float64,
        ColumnType::Bool,
        ColumnType::Text,
    ])
}

/// Small value domains so that runs actually occur.
fn value(ty: ColumnType) -> BoxedStrategy<Value> {
    match ty {
        ColumnType::Int32 => {
            prop_oneof![(-2i32..2).prop_map(Value::Int32), any::<i32>().prop_map(Value::Int32)].boxed()
        }
        ColumnType::Int64 => prop_oneof![(0i64..3).prop_map(Value::Int64), any::<i64>().prop_map(Value::Int64)].boxed(),
        ColumnType::Float64 => prop_oneof![
            prop::sample::select(vec![0.0, -0.0, 1.5, f64::NAN, f64::INFINITY]).prop_map(Value::Float64),
            any::<f64>().prop_map(Value::Float64),
        ]
        .boxed(),
        ColumnType::Bool => any::<bool>().prop_map(Value::Bool).boxed(),
        ColumnType::Text => prop_oneof!["[ab]{0,2}", "\\PC{0,10}"].prop_map(Value::Text).boxed(),
    }
}

fn batch() -> impl Strategy<Value = RecordBatch> {
    prop::collection::vec(column_type(), 1..6).prop_flat_map(|types| {
        let row: Vec<_> = types.iter().map(|&t| value(t)).collect();
        prop::collection::vec(row, 0..80).prop_map(move |rows| {
            let schema =
                Schema::new(types.iter().enumerate().map(|(i, &t)| Column::new(format!("c{i}"), t)).collect()).unwrap();
            RecordBatch::new(schema, rows).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn column_blocks_survive_every_codec(b in batch()) {
        let block = pivot(&b);
        let raw = encode_block_column(&block).unwrap();
        for codec in [Compression::None, Compression::Rle, Compression::Deflate] {
            let packed = compress(&raw, codec, b.schema(), Format::Column).unwrap();
            let unpacked = decompress(&packed, codec, b.schema(), Format::Column).unwrap();
            prop_assert_eq!(&unpacked, &raw);
            prop_assert_eq!(&decode_block_column(b.schema(), &unpacked).unwrap(), &block);
        }
    }

    #[test]
    fn row_blocks_round_trip(b in batch()) {
        let raw = encode_block_row(&b).unwrap();
        for codec in [Compression::None, Compression::Deflate] {
            let packed = compress(&raw, codec, b.schema(), Format::Row).unwrap();
            let back = decode_block_row(b.schema(), &decompress(&packed, codec, b.schema(), Format::Row).unwrap()).unwrap();
            prop_assert_eq!(&back, &b);
        }
        prop_assert_eq!(unpivot(&pivot(&b)), b);
    }

    #[test]
    fn headers_round_trip(types in prop::collection::vec(column_type(), 0..20), q in "\\PC{0,40}", col in any::<bool>()) {
        let schema = Schema::from_types(&types).unwrap();
        let format = if col { Format::Column } else { Format::Row };
        let h = TransferHeader::new(format, Compression::Deflate, q, schema);
        let bytes = encode_header(&h).unwrap();
        let (back, used) = decode_header(&bytes).unwrap();
        prop_assert_eq!(used, bytes.len());
        prop_assert_eq!(back, h);
    }

    #[test]
    fn truncated_headers_are_rejected(types in prop::collection::vec(column_type(), 1..5), cut in 0usize..1000) {
        let h = TransferHeader::new(Format::Row, Compression::None, "q", Schema::from_types(&types).unwrap());
        let bytes = encode_header(&h).unwrap();
        let cut = cut % bytes.len();
        let truncated = matches!(decode_header(&bytes[..cut]), Err(WireError::Truncated { .. }));
        prop_assert!(truncated);
    }
}

#[test]
fn constant_column_is_one_run_per_block() {
    let n = 10_000;
    let schema = Schema::from_types(&[ColumnType::Int64]).unwrap();
    let rows = vec![vec![Value::Int64(42)]; n];
    let block = pivot(&RecordBatch::new(schema.clone(), rows).unwrap());
    let raw = encode_block_column(&block).unwrap();
    let packed = compress(&raw, Compression::Rle, &schema, Format::Column).unwrap();
    // row count, then one (run length, value) pair
    assert_eq!(packed.len(), 4 + 4 + 8);
    assert_eq!(raw.len(), 4 + 8 * n);
}

#[test]
fn frames_survive_a_byte_stream() {
    let mut buf = Vec::new();
    write_frame(&mut buf, FrameType::Data, b"abc").unwrap();
    write_frame(&mut buf, FrameType::EndOfStream, &[]).unwrap();
    let mut r = buf.as_slice();
    let f = read_frame(&mut r).unwrap();
    assert_eq!((f.frame_type, f.payload.as_slice()), (FrameType::Data, &b"abc"[..]));
    assert_eq!(read_frame(&mut r).unwrap().frame_type, FrameType::EndOfStream);
    assert!(read_frame(&mut r).is_err());
}

#[test]
fn empty_block_is_a_zero_count() {
    let schema = Schema::from_types(&[ColumnType::Text]).unwrap();
    let block = ColumnBlock::new(schema.clone(), 0, vec![ColumnData::with_capacity(ColumnType::Text, 0)]).unwrap();
    let raw = encode_block_column(&block).unwrap();
    assert_eq!(decode_block_column(&schema, &raw).unwrap(), block);
}
