//! Acceptance run: each criterion prints one PASS/FAIL line.
//!
//! Runs without the libtest harness so the lines always show and criteria
//! run one after another (the timing criterion needs the machine to itself).

mod common;

use std::io::Read;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::thread;
use std::time::{Duration, Instant};

use common::*;
use datapipe::augtext::AugText;
use datapipe::directory::{DirectoryClient, DirectoryError};
use datapipe::formatopt::infer_delimiter;
use datapipe::harness::{
    example_json_docs, generate_dataset, json_lines_len, partition, run_baseline_file_with, run_pipe_with, BenchSpec,
    CsvEngine, JsonEngine, Mode, Payload,
};
use datapipe::pipe::{open_input, open_output, run_verification_proxy, DebugMirror, PipeConfig, PipeError, PipeFormat};
use datapipe::wire::{
    compress, decode_block_column, decompress, encode_block_column, pivot, read_frame, read_header, ColumnBlock,
    ColumnType, Compression, Format, FrameType, RecordBatch, Schema, Value,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CODECS: [Compression; 3] = [Compression::None, Compression::Rle, Compression::Deflate];

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("fidelity matrix", fidelity_matrix),
        ("delimiter inference", delimiter_inference),
        ("column wire size", column_wire_size),
        ("column speedup", column_speedup),
        ("json key dedup", json_key_dedup),
        ("directory matching", directory_matching),
        ("verification", verification),
        ("codecs", codecs),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail}) [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail}) [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn fidelity_matrix() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let base = BenchSpec { n: 100_000, seed: 1, ..BenchSpec::default() };
    let data = generate_dataset(base.n, base.seed, base.payload);
    let mut runs = 0;
    // the file baseline has no codec; it runs once
    let file = run_baseline_file_with(&BenchSpec { mode: Mode::FileCsv, ..base.clone() }, tmp.path(), &data)
        .map_err(|e| e.to_string())?;
    check(file.result.exact && file.imported == data, "file_csv import differs")?;
    runs += 1;
    for mode in [Mode::PipeText, Mode::PipeRow, Mode::PipeColumn] {
        for codec in CODECS {
            let spec = BenchSpec { mode, codec, ..base.clone() };
            let run = run_pipe_with(&spec, None, &data).map_err(|e| format!("{mode}/{codec}: {e}"))?;
            check(run.result.exact && run.imported == data, format!("{mode}/{codec} import differs"))?;
            check(run.result.rows == base.n as u64, format!("{mode}/{codec} row count"))?;
            runs += 1;
        }
    }
    Ok(format!("{runs} transfers of {} rows, all exact", base.n))
}

fn delimiter_inference() -> Outcome {
    let mut a = AugText::new();
    a.push_int32(1).push_str("|").push_str("a,b").push_str("\n");
    let r = infer_delimiter([&a]).map_err(|e| e.to_string())?;
    check(r.delimiter == '|' && !r.ambiguous, format!("[1,\"|\",\"a,b\",\"\\n\"] gave {r:?}"))?;

    let mut b = AugText::new();
    b.push_int32(1).push_str("|").push_str("a").push_str("\n");
    let r = infer_delimiter([&b]).map_err(|e| e.to_string())?;
    check(r.delimiter == '|' && r.ambiguous, format!("[1,\"|\",\"a\",\"\\n\"] gave {r:?}"))?;
    Ok("'|' chosen in both cases, second flagged ambiguous".into())
}

/// Canonical text length of a float, computed from std formatting.
fn float_text_len(x: f64) -> usize {
    let a = x.abs();
    if x.is_finite() && a != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{x:e}").len()
    } else {
        format!("{x}").len()
    }
}

fn csv_size_oracle(data: &ColumnBlock) -> u64 {
    let cols = data.columns();
    let mut total = 0;
    for i in 0..data.row_count() {
        total += cols.len(); // delimiters plus newline
        for c in cols {
            total += match c.value(i) {
                Value::Int32(x) => x.to_string().len(),
                Value::Int64(x) => x.to_string().len(),
                Value::Float64(x) => float_text_len(x),
                Value::Bool(x) => x.to_string().len(),
                Value::Text(s) => s.len(),
            };
        }
    }
    total as u64
}

fn column_size_oracle(schema: &Schema, rows: usize, block_rows: usize, query: &str) -> u64 {
    let row_width: usize = schema.types().map(|t| t.fixed_width().expect("fixed-width schema")).sum();
    // magic, version, format, codec, query id, column count, then (type, empty name) per column
    let header = 4 + 2 + 1 + 1 + 2 + query.len() + 2 + schema.len() * 3;
    let blocks = rows.div_ceil(block_rows);
    let frames = blocks * (5 + 4) + rows * row_width + 5;
    (header + frames) as u64
}

fn column_wire_size() -> Outcome {
    let n = 100_000;
    let data = generate_dataset(n, 1, Payload::BenchSchema);
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = tmp.path().join("baseline.csv");
    let engine = CsvEngine::default();
    let mut sink = open_output(&path.to_string_lossy(), 0, &PipeConfig::default()).map_err(|e| e.to_string())?;
    engine.export(&data, &mut sink).map_err(|e| e.to_string())?;
    let file_bytes = sink.close().map_err(|e| e.to_string())?.bytes;

    let dir = directory();
    let cfg = config(&dir, PipeFormat::Column, Compression::None);
    let q = query_id("size");
    let t = target("B", 1, &q);
    let mut source = open_input(&t, 0, &cfg).map_err(|e| e.to_string())?;
    let (imported, exported) = thread::scope(|s| {
        let exporter = s.spawn(|| {
            let mut sink = open_output(&t, 0, &cfg)?;
            engine.export(&data, &mut sink)?;
            sink.close()
        });
        let imported = engine.import(&mut source, data.schema());
        (imported, exporter.join().unwrap())
    });
    check(imported.map_err(|e| e.to_string())? == data, "column import differs")?;
    let wire_bytes = exported.map_err(|e| e.to_string())?.bytes;

    let csv_oracle = csv_size_oracle(&data);
    let wire_oracle = column_size_oracle(data.schema(), n, cfg.block_rows, &q);
    check(file_bytes == csv_oracle, format!("CSV is {file_bytes} bytes, oracle says {csv_oracle}"))?;
    check(wire_bytes == wire_oracle, format!("wire is {wire_bytes} bytes, oracle says {wire_oracle}"))?;
    let oracle_ratio = wire_oracle as f64 / csv_oracle as f64;
    let threshold = if oracle_ratio <= 0.60 { 0.60 } else { oracle_ratio + 0.05 };
    let ratio = wire_bytes as f64 / file_bytes as f64;
    let detail = format!(
        "column {wire_bytes} B vs csv {file_bytes} B, ratio {:.1}%, oracle {:.1}%, limit {:.0}%",
        ratio * 100.0,
        oracle_ratio * 100.0,
        threshold * 100.0
    );
    check(ratio <= threshold, detail.clone())?;
    Ok(detail)
}

fn median(mut v: Vec<Duration>) -> Duration {
    v.sort();
    v[v.len() / 2]
}

fn column_speedup() -> Outcome {
    let n = 1_000_000;
    let data = generate_dataset(n, 1, Payload::BenchSchema);
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let file_spec = BenchSpec { n, seed: 1, mode: Mode::FileCsv, workers: 1, ..BenchSpec::default() };
    let pipe_spec = BenchSpec { mode: Mode::PipeColumn, codec: Compression::None, ..file_spec.clone() };
    let (mut file, mut pipe) = (Vec::new(), Vec::new());
    for _ in 0..5 {
        let f = run_baseline_file_with(&file_spec, tmp.path(), &data).map_err(|e| e.to_string())?;
        let p = run_pipe_with(&pipe_spec, None, &data).map_err(|e| e.to_string())?;
        check(f.result.exact && p.result.exact, "a timed run imported wrong data")?;
        file.push(f.result.total);
        pipe.push(p.result.total);
    }
    let (f, p) = (median(file), median(pipe));
    let speedup = f.as_secs_f64() / p.as_secs_f64();
    let detail = format!(
        "median file_csv {:.0} ms, pipe_column {:.0} ms, speedup {speedup:.2}x (need 1.5x)",
        f.as_secs_f64() * 1e3,
        p.as_secs_f64() * 1e3
    );
    check(speedup >= 1.5, detail.clone())?;
    Ok(detail)
}

fn count(hay: &[u8], needle: &[u8]) -> usize {
    hay.windows(needle.len()).filter(|w| *w == needle).count()
}

fn json_key_dedup() -> Outcome {
    let docs = example_json_docs(10_000);
    let dir = directory();
    let q = query_id("json");
    let raw = RawListener::register(&dir, &q, 0);
    // text pipes carry the JSON text unchanged; typed pipes deduplicate keys
    let cfg = config(&dir, PipeFormat::Row, Compression::None);
    let t = target("B", 1, &q);
    let exporter = {
        let docs = docs.clone();
        thread::spawn(move || {
            let mut sink = open_output(&t, 0, &cfg)?;
            JsonEngine.export(&docs, &mut sink)?;
            sink.close()
        })
    };
    let mut bytes = Vec::new();
    raw.accept().read_to_end(&mut bytes).map_err(|e| e.to_string())?;
    let metrics = exporter.join().unwrap().map_err(|e| e.to_string())?;
    check(metrics.bytes == bytes.len() as u64, "sink byte count disagrees with the socket")?;

    let mut r = bytes.as_slice();
    read_header(&mut r).map_err(|e| e.to_string())?;
    let mut frames = Vec::new();
    loop {
        let f = read_frame(&mut r).map_err(|e| e.to_string())?;
        let end = f.frame_type == FrameType::EndOfStream;
        frames.push(f);
        if end {
            break;
        }
    }
    let decoded = datapipe::formatopt::json_dedup_decode(&frames).map_err(|e| e.to_string())?;
    check(decoded == docs, "decoded documents differ")?;
    for key in ["column1", "column2"] {
        let seen = count(&bytes, key.as_bytes());
        check(seen == 1, format!("key {key:?} appears {seen} times on the wire"))?;
    }
    let lines = json_lines_len(&docs);
    let saving = 1.0 - bytes.len() as f64 / lines as f64;
    let detail = format!("{} B on the wire vs {lines} B of JSON lines, {:.1}% smaller", bytes.len(), saving * 100.0);
    check(saving >= 0.40, detail.clone())?;
    Ok(format!("each key sent once; {detail}"))
}

fn import_all(sources: &mut [datapipe::pipe::RecordSource], schema: &Schema) -> Vec<Result<ColumnBlock, PipeError>> {
    let engine = CsvEngine::default();
    thread::scope(|s| {
        let hs: Vec<_> = sources.iter_mut().map(|src| s.spawn(move || engine.import(src, schema))).collect();
        hs.into_iter().map(|h| h.join().unwrap()).collect()
    })
}

fn directory_matching() -> Outcome {
    let engine = CsvEngine::default();
    let data = generate_dataset(20_000, 1, Payload::BenchSchema);

    for w in [1u32, 4, 8] {
        let dir = directory();
        let cfg = config(&dir, PipeFormat::Column, Compression::None);
        let q = query_id("match");
        let t = target("B", w, &q);
        let parts: Vec<_> = (0..w).map(|i| partition(&data, i, w)).collect();
        let mut sources: Vec<_> =
            (0..w).map(|i| open_input(&t, i, &cfg)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
        let got = thread::scope(|s| {
            for (i, part) in parts.iter().enumerate().rev() {
                let (t, cfg) = (&t, &cfg);
                s.spawn(move || {
                    let mut sink = open_output(t, i as u32, cfg).unwrap();
                    engine.export(part, &mut sink).unwrap();
                    sink.close().unwrap();
                });
            }
            import_all(&mut sources, data.schema())
        });
        let got = got.into_iter().collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
        check(got == parts, format!("W={w}: an importer received another worker's rows"))?;
        let client = DirectoryClient::new(dir.local_addr());
        check(dir.registry().entries(&q).len() == w as usize, format!("W={w}: registration count"))?;
        for i in 0..w {
            let again = client.lookup(&q, i);
            check(matches!(again, Err(DirectoryError::AlreadyClaimed { .. })), format!("W={w}: entry {i} unclaimed"))?;
        }
    }

    // two exporters, three importers
    let dir = directory();
    let cfg = config(&dir, PipeFormat::Column, Compression::None);
    let q = query_id("orphan");
    let (t_in, t_out) = (target("B", 3, &q), target("A", 2, &q));
    let parts: Vec<_> = (0..2).map(|i| partition(&data, i, 2)).collect();
    let mut sources: Vec<_> =
        (0..3).map(|i| open_input(&t_in, i, &cfg)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let (got, stubs) = thread::scope(|s| {
        for (i, part) in parts.iter().enumerate() {
            let (t, cfg) = (&t_out, &cfg);
            s.spawn(move || {
                let mut sink = open_output(t, i as u32, cfg).unwrap();
                engine.export(part, &mut sink).unwrap();
                sink.close().unwrap();
            });
        }
        let coordinator = s.spawn(|| DirectoryClient::new(dir.local_addr()).reconcile(&q, 2, 3));
        let got = import_all(&mut sources, data.schema());
        (got, coordinator.join().unwrap())
    });
    check(stubs.map_err(|e| e.to_string())? == 1, "expected one stub")?;
    let got = got.into_iter().collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
    check(got[..2] == parts[..], "2x3: paired importers received wrong rows")?;
    check(got[2].row_count() == 0, "2x3: orphan importer received rows")?;

    // three exporters, two importers
    let q = query_id("surplus");
    let err = DirectoryClient::new(dir.local_addr()).reconcile(&q, 3, 2);
    check(matches!(err, Err(DirectoryError::Unsupported { exporters: 3, importers: 2 })), format!("3x2 gave {err:?}"))?;

    // two queries at once, registrations interleaved, exporters in reverse
    let (qa, qb) = (query_id("qa"), query_id("qb"));
    let (ta, tb) = (target("B", 2, &qa), target("B", 2, &qb));
    let other = generate_dataset(20_000, 2, Payload::BenchSchema);
    let expected = [partition(&data, 0, 2), partition(&other, 0, 2), partition(&data, 1, 2), partition(&other, 1, 2)];
    let mut sources: Vec<_> = [(&ta, 0), (&tb, 0), (&ta, 1), (&tb, 1)]
        .into_iter()
        .map(|(t, w)| open_input(t, w, &cfg))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let got = thread::scope(|s| {
        let jobs = [(&tb, 1, &expected[3]), (&ta, 1, &expected[2]), (&tb, 0, &expected[1]), (&ta, 0, &expected[0])];
        for (t, w, part) in jobs {
            let cfg = &cfg;
            s.spawn(move || {
                let mut sink = open_output(t, w, cfg).unwrap();
                engine.export(part, &mut sink).unwrap();
                sink.close().unwrap();
            });
        }
        import_all(&mut sources, data.schema())
    });
    let got = got.into_iter().collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
    check(got[..] == expected[..], "concurrent queries exchanged streams")?;
    Ok("W=1,4,8 matched; 2x3 stubbed one importer with 0 rows; 3x2 unsupported; queries isolated".into())
}

/// Bytes of one bench-schema row in a row-format block.
const ROW_BYTES: usize = 8 + 3 * (4 + 8);

fn verification() -> Outcome {
    let n = 10_000;
    let data = generate_dataset(n, 1, Payload::BenchSchema);
    let engine = CsvEngine::default();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let baseline = tmp.path().join("baseline.csv");
    let mut sink = open_output(&baseline.to_string_lossy(), 0, &PipeConfig::default()).map_err(|e| e.to_string())?;
    engine.export(&data, &mut sink).map_err(|e| e.to_string())?;
    sink.close().map_err(|e| e.to_string())?;
    let expected = std::fs::read(&baseline).map_err(|e| e.to_string())?;

    let dir = directory();
    for format in [PipeFormat::Text, PipeFormat::Row, PipeFormat::Column] {
        let cfg = config(&dir, format, Compression::None);
        let t = target("Proxy", 1, &query_id("proxy"));
        let out = tmp.path().join(format!("proxy-{format}.csv"));
        let report = thread::scope(|s| {
            let proxy = s.spawn(|| run_verification_proxy(Some((&t, &out)), None, &cfg));
            let mut sink = open_output(&t, 0, &cfg).unwrap();
            engine.export(&data, &mut sink).unwrap();
            sink.close().unwrap();
            proxy.join().unwrap()
        });
        check(report.is_ok(), format!("proxy failed: {:?}", report.errors))?;
        let got = std::fs::read(&out).map_err(|e| e.to_string())?;
        check(got == expected, format!("{format}: proxy CSV differs from the file baseline"))?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let trials = 20;
    let mut caught = 0;
    for trial in 0..trials {
        let record = rng.random_range(0..1000);
        let byte = rng.random_range(0..ROW_BYTES);
        match tampered_transfer(&data, record, byte, tmp.path().join(format!("mirror-{trial}"))) {
            Err(PipeError::Verification { record: r, .. }) if r == record => caught += 1,
            other => return Err(format!("flip at record {record} byte {byte} gave {other:?}")),
        }
    }
    check(caught == trials, "missed a mutation")?;
    Ok(format!("proxy CSV byte-identical for text/row/column at n={n}; {caught}/{trials} mutations caught"))
}

fn tampered_transfer(
    data: &ColumnBlock,
    record: usize,
    byte: usize,
    mirror: std::path::PathBuf,
) -> Result<ColumnBlock, PipeError> {
    let upstream = directory();
    let downstream = directory();
    let q = query_id("tamper");
    let t = target("B", 1, &q);
    // frame header, then the block's row count
    let relay = tampering_relay(&upstream, &downstream, &q, 5 + 4 + record * ROW_BYTES + byte);
    let import_cfg = PipeConfig {
        debug: Some(DebugMirror::new(1000, mirror)),
        ..config(&downstream, PipeFormat::Row, Compression::None)
    };
    let export_cfg = PipeConfig { directory: Some(upstream.local_addr()), ..import_cfg.clone() };
    let mut source = open_input(&t, 0, &import_cfg)?;
    let result = thread::scope(|s| {
        s.spawn(|| {
            let mut sink = open_output(&t, 0, &export_cfg).unwrap();
            CsvEngine::default().export(data, &mut sink).unwrap();
            sink.close().unwrap();
        });
        let r = CsvEngine::default().import(&mut source, data.schema());
        drop(source);
        r
    });
    relay.join().unwrap();
    result
}

fn random_block(rng: &mut ChaCha8Rng) -> ColumnBlock {
    let types = [ColumnType::Int32, ColumnType::Int64, ColumnType::Float64, ColumnType::Bool, ColumnType::Text];
    let ncols = rng.random_range(1..6);
    let cols: Vec<ColumnType> = (0..ncols).map(|_| types[rng.random_range(0..types.len())]).collect();
    let schema = Schema::from_types(&cols).unwrap();
    let rows = rng.random_range(0..300);
    // a small domain gives runs; a wide one gives run length 1
    let narrow = rng.random_bool(0.5);
    let rows = (0..rows)
        .map(|_| {
            cols.iter()
                .map(|t| match t {
                    ColumnType::Int32 if narrow => Value::Int32(rng.random_range(0..3)),
                    ColumnType::Int32 => Value::Int32(rng.random()),
                    ColumnType::Int64 if narrow => Value::Int64(rng.random_range(-1..2)),
                    ColumnType::Int64 => Value::Int64(rng.random()),
                    ColumnType::Float64 if narrow => Value::Float64([0.0, -0.0, f64::NAN][rng.random_range(0..3)]),
                    ColumnType::Float64 => Value::Float64(f64::from_bits(rng.random())),
                    ColumnType::Bool => Value::Bool(rng.random()),
                    ColumnType::Text if narrow => Value::Text(["", "a", "bb"][rng.random_range(0..3)].into()),
                    ColumnType::Text => {
                        Value::Text((0..rng.random_range(0..20)).map(|_| rng.random::<char>()).collect())
                    }
                })
                .collect()
        })
        .collect();
    pivot(&RecordBatch::new(schema, rows).unwrap())
}

fn codecs() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let blocks = 1000;
    for i in 0..blocks {
        let block = random_block(&mut rng);
        let raw = encode_block_column(&block).map_err(|e| e.to_string())?;
        for codec in [Compression::Rle, Compression::Deflate] {
            let packed = compress(&raw, codec, block.schema(), Format::Column).map_err(|e| e.to_string())?;
            let back = decompress(&packed, codec, block.schema(), Format::Column).map_err(|e| e.to_string())?;
            check(back == raw, format!("block {i}: {codec} round trip changed the bytes"))?;
            let decoded = decode_block_column(block.schema(), &back).map_err(|e| e.to_string())?;
            check(decoded == block, format!("block {i}: {codec} round trip changed the values"))?;
        }
    }

    // constant column through an RLE pipe
    let n = 10_000;
    let dir = directory();
    let q = query_id("rle");
    let raw = RawListener::register(&dir, &q, 0);
    let cfg = config(&dir, PipeFormat::Column, Compression::Rle);
    let block_rows = cfg.block_rows;
    let schema = Schema::from_types(&[ColumnType::Int64]).unwrap();
    let batch = RecordBatch::new(schema.clone(), vec![vec![Value::Int64(7)]; n]).unwrap();
    let t = target("B", 1, &q);
    let exporter = thread::spawn(move || {
        let mut sink = open_output(&t, 0, &cfg)?;
        sink.write_batch(&batch)?;
        sink.close()
    });
    let (header, frames) = raw.read_all();
    exporter.join().unwrap().map_err(|e| e.to_string())?;
    check(header.compression == Compression::Rle, "header does not announce RLE")?;
    let data: Vec<_> = frames.iter().filter(|f| f.frame_type == FrameType::Data).collect();
    check(data.len() == n.div_ceil(block_rows), format!("{} blocks", data.len()))?;
    // row count, then a single (run length, value) pair
    let single_run = 4 + 4 + 8;
    let mut rows = 0;
    for f in &data {
        check(f.payload.len() == single_run, format!("block payload is {} bytes, not {single_run}", f.payload.len()))?;
        let plain = decompress(&f.payload, Compression::Rle, &schema, Format::Column).map_err(|e| e.to_string())?;
        rows += decode_block_column(&schema, &plain).map_err(|e| e.to_string())?.row_count();
    }
    check(rows == n, "constant column lost rows")?;
    Ok(format!(
        "{blocks} random blocks round-trip under rle and deflate; constant column = {} blocks of one run ({single_run} B each)",
        data.len()
    ))
}
