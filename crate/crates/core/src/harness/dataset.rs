use std::fmt;
use std::str::FromStr;

use rand::distr::Alphanumeric;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::wire::{Column, ColumnBlock, ColumnData, ColumnType, Schema};

/// Value pairs after the key column.
pub const PAIRS: usize = 3;

/// Which synthetic table to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    /// INT64 key, then three (INT32, FLOAT64) pairs.
    BenchSchema,
    /// INT64 key, then six INT32 columns.
    Int,
    /// INT64 key, then six FLOAT64 columns.
    Float,
    /// INT64 key, then six TEXT columns of 8 to 16 alphanumeric characters.
    String,
}

impl FromStr for Payload {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "bench_schema" | "bench" => Ok(Payload::BenchSchema),
            "int" => Ok(Payload::Int),
            "float" => Ok(Payload::Float),
            "string" => Ok(Payload::String),
            _ => Err(format!("unknown payload {s:?} (bench_schema, int, float, string)")),
        }
    }
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Payload::BenchSchema => "bench_schema",
            Payload::Int => "int",
            Payload::Float => "float",
            Payload::String => "string",
        })
    }
}

impl Payload {
    fn value_types(self) -> [ColumnType; 2 * PAIRS] {
        match self {
            Payload::BenchSchema => [ColumnType::Int32, ColumnType::Float64].repeat(PAIRS).try_into().unwrap(),
            Payload::Int => [ColumnType::Int32; 2 * PAIRS],
            Payload::Float => [ColumnType::Float64; 2 * PAIRS],
            Payload::String => [ColumnType::Text; 2 * PAIRS],
        }
    }

    pub fn schema(self) -> Schema {
        let mut columns = vec![Column::new("key", ColumnType::Int64)];
        for (i, ty) in self.value_types().into_iter().enumerate() {
            columns.push(Column::new(format!("v{i}"), ty));
        }
        Schema::new(columns).expect("fixed schema is valid")
    }
}

/// Deterministic synthetic table.
///
/// The generator is ChaCha8 seeded with `seed_from_u64(seed)`. Keys are a
/// shuffled permutation of `0..n`; then, row by row and column by column,
/// INT32 values are uniform in `[0, n]` (saturated at `i32::MAX`), FLOAT64
/// values are standard normal and TEXT values are 8 to 16 alphanumeric
/// characters.
pub fn generate_dataset(n: usize, seed: u64, payload: Payload) -> ColumnBlock {
    let schema = payload.schema();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keys: Vec<i64> = (0..n as i64).collect();
    keys.shuffle(&mut rng);
    let types = payload.value_types();
    let mut columns: Vec<ColumnData> = types.iter().map(|&t| ColumnData::with_capacity(t, n)).collect();
    let int_max = i32::try_from(n).unwrap_or(i32::MAX);
    for _ in 0..n {
        for col in columns.iter_mut() {
            match col {
                ColumnData::Int32(v) => v.push(rng.random_range(0..=int_max)),
                ColumnData::Float64(v) => v.push(rng.sample(StandardNormal)),
                ColumnData::Text(v) => {
                    let len = rng.random_range(8..=16);
                    v.push((&mut rng).sample_iter(Alphanumeric).take(len).map(char::from).collect());
                }
                ColumnData::Int64(_) | ColumnData::Bool(_) => {
                    unreachable!("payloads use INT32, FLOAT64, TEXT")
                }
            }
        }
    }
    columns.insert(0, ColumnData::Int64(keys));
    ColumnBlock::new(schema, n, columns).expect("generated columns match the schema")
}

/// Rows `i` with `i % workers == worker`, in order.
pub fn partition(data: &ColumnBlock, worker: u32, workers: u32) -> ColumnBlock {
    let (w, k) = (worker as usize, workers.max(1) as usize);
    fn pick<T: Clone>(v: &[T], w: usize, k: usize) -> Vec<T> {
        v.iter().skip(w).step_by(k).cloned().collect()
    }
    let columns: Vec<ColumnData> = data
        .columns()
        .iter()
        .map(|c| match c {
            ColumnData::Int32(v) => ColumnData::Int32(pick(v, w, k)),
            ColumnData::Int64(v) => ColumnData::Int64(pick(v, w, k)),
            ColumnData::Float64(v) => ColumnData::Float64(pick(v, w, k)),
            ColumnData::Bool(v) => ColumnData::Bool(pick(v, w, k)),
            ColumnData::Text(v) => ColumnData::Text(pick(v, w, k)),
        })
        .collect();
    let rows = columns.first().map_or(0, ColumnData::len);
    ColumnBlock::new(data.schema().clone(), rows, columns).expect("partition keeps the schema")
}

/// Concatenates blocks with a common schema.
pub fn concat_blocks(schema: &Schema, blocks: &[ColumnBlock]) -> ColumnBlock {
    let total = blocks.iter().map(ColumnBlock::row_count).sum();
    let mut columns: Vec<ColumnData> = schema.types().map(|t| ColumnData::with_capacity(t, total)).collect();
    for b in blocks {
        for (dst, src) in columns.iter_mut().zip(b.columns()) {
            match (dst, src) {
                (ColumnData::Int32(d), ColumnData::Int32(s)) => d.extend_from_slice(s),
                (ColumnData::Int64(d), ColumnData::Int64(s)) => d.extend_from_slice(s),
                (ColumnData::Float64(d), ColumnData::Float64(s)) => d.extend_from_slice(s),
                (ColumnData::Bool(d), ColumnData::Bool(s)) => d.extend_from_slice(s),
                (ColumnData::Text(d), ColumnData::Text(s)) => d.extend_from_slice(s),
                _ => panic!("blocks do not share the schema"),
            }
        }
    }
    ColumnBlock::new(schema.clone(), total, columns).expect("concatenation keeps the schema")
}
