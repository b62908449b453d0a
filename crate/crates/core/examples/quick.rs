//! Runs every mode and codec once and prints the comparison table.
//!
//! `cargo run --release --example quick -- [N] [MODE]`
use datapipe::harness::*;
use datapipe::wire::Compression;

fn main() {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|s| s.parse().unwrap()).unwrap_or(100_000);
    let only: Option<Mode> = args.next().map(|s| s.parse().unwrap());
    let dir = tempfile::tempdir().unwrap();
    let mut results = Vec::new();
    for mode in Mode::ALL {
        if only.is_some_and(|m| m != mode && mode != Mode::FileCsv) {
            continue;
        }
        for codec in [Compression::None, Compression::Rle, Compression::Deflate] {
            if (mode == Mode::FileCsv || only.is_some()) && codec != Compression::None {
                continue;
            }
            let spec = BenchSpec { n, mode, codec, ..BenchSpec::default() };
            let r = run_bench(&spec, dir.path(), None).unwrap().result;
            results.push(r);
        }
    }
    print!("{}", bench_report(&results).unwrap().table());
}
