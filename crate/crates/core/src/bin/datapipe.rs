use std::collections::HashSet;
use std::ffi::OsString;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, CommandFactory, Parser, Subcommand};
use log::{info, warn};

use datapipe::directory::{DirectoryClient, DirectoryConfig, DirectoryServer, ReservedTemplate, Target, DIRECTORY_ENV};
use datapipe::harness::{
    bench_report, generate_dataset, parse_bench_plan, parse_key_values, partition, run_bench, BenchPlan, BenchResult,
    CsvEngine, Payload,
};
use datapipe::pipe::{
    open_input, open_output, partition_path, run_verification_proxy, DebugMirror, PipeConfig, PipeFormat,
    TransferMetrics,
};
use datapipe::wire::Compression;

/// Move tables between engines through sockets instead of files.
#[derive(Parser, Debug)]
#[command(name = "datapipe", version, args_override_self = true)]
struct Cli {
    /// key=value file; each key names a flag of the chosen subcommand.
    /// Flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Directory service address (defaults to $PIPEGEN_DIRECTORY).
    #[arg(long, global = true, value_name = "HOST:PORT")]
    directory: Option<String>,

    /// Path pattern treated as a reserved target, e.g. /tmp/__pipe__[Name].
    #[arg(long, global = true, value_name = "PATTERN")]
    reserved_template: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run or talk to the worker directory.
    Directory {
        #[command(subcommand)]
        command: DirectoryCommand,
    },
    /// Generate a synthetic table and export it to a file or reserved target.
    Export(ExportArgs),
    /// Import a table from a file or reserved target.
    Import(ImportArgs),
    /// Run a file-vs-pipe benchmark plan and print the report.
    Bench(BenchArgs),
    /// Stand in for a remote engine: write what arrives to CSV, send CSV out.
    Proxy(ProxyArgs),
}

#[derive(Subcommand, Debug)]
enum DirectoryCommand {
    /// Serve until killed.
    Serve {
        #[arg(long, default_value_t = 0)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Seconds a lookup waits for its importer to register.
        #[arg(long, default_value_t = 60.0)]
        lookup_timeout: f64,
    },
    /// Tell the directory how many workers each side of a query has. Extra
    /// importers get an empty stream; extra exporters are an error.
    Reconcile {
        #[arg(long)]
        query: String,
        #[arg(long)]
        exporters: u32,
        #[arg(long)]
        importers: u32,
    },
}

#[derive(Args, Debug)]
struct PipeArgs {
    #[arg(long, default_value_t = 1)]
    workers: u32,
    #[arg(long, default_value = "column")]
    format: PipeFormat,
    #[arg(long, default_value = "none")]
    codec: Compression,
    #[arg(long, default_value_t = datapipe::pipe::DEFAULT_BLOCK_ROWS)]
    block_rows: usize,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    /// Query id for reserved targets that do not carry one.
    #[arg(long)]
    query: Option<String>,
    /// Mirror the first N records to --debug-path and check them on import.
    #[arg(long, default_value_t = 0)]
    debug_records: usize,
    #[arg(long)]
    debug_path: Option<PathBuf>,
    /// Seconds to wait for the directory and for the other side.
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
}

#[derive(Args, Debug)]
struct DataArgs {
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "bench_schema")]
    payload: Payload,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[arg(long)]
    target: String,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    pipe: PipeArgs,
}

#[derive(Args, Debug)]
struct ImportArgs {
    #[arg(long)]
    source: String,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    pipe: PipeArgs,
    /// Compare the imported rows with the table export would generate.
    #[arg(long)]
    check: bool,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Benchmark plan (n, seed, workers, payload, block_rows, modes, codecs, repeats).
    #[arg(long)]
    spec: PathBuf,
    /// Directory for the file baseline's CSV files.
    #[arg(long)]
    workdir: Option<PathBuf>,
    /// Also write the report as JSON lines.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ProxyArgs {
    /// Reserved target to accept streams on.
    #[arg(long, requires = "out")]
    listen: Option<String>,
    /// CSV written from the received streams.
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV to send.
    #[arg(long = "in", requires = "send")]
    input: Option<PathBuf>,
    /// Reserved target to send --in to.
    #[arg(long)]
    send: Option<String>,
    #[command(flatten)]
    pipe: PipeArgs,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let argv: Vec<OsString> = std::env::args_os().collect();
    // found by hand: the file may supply flags a first parse would miss
    let cli = match config_path(&argv) {
        Some(path) => Cli::parse_from(with_config(&argv, &path)?),
        None => Cli::parse_from(&argv),
    };
    run(cli)
}

fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut args = argv.iter().skip(1).map(|a| a.to_string_lossy());
    while let Some(a) = args.next() {
        if a == "--" {
            break;
        }
        if a == "--config" {
            return args.next().map(|p| PathBuf::from(p.as_ref()));
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

/// Splices config-file flags in right after the subcommand, ahead of the
/// user's own flags so those take precedence.
fn with_config(argv: &[OsString], path: &PathBuf) -> Result<Vec<OsString>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let pairs = parse_key_values(&text)?;

    let root = Cli::command();
    let mut cmd = &root;
    let mut at = 1;
    while let Some(pos) = argv[at..].iter().position(|a| a.to_str().is_some_and(|a| cmd.find_subcommand(a).is_some())) {
        at += pos;
        cmd = cmd.find_subcommand(argv[at].to_str().unwrap()).unwrap();
        at += 1;
        if !cmd.has_subcommands() {
            break;
        }
    }
    let known: HashSet<String> = cmd
        .get_arguments()
        .chain(root.get_arguments())
        .filter_map(|a| a.get_long())
        .map(|l| l.replace('-', "_"))
        .collect();

    let mut extra = Vec::new();
    for (key, value) in pairs {
        if key == "config" {
            continue;
        }
        if !known.contains(&key) {
            warn!("{}: {key:?} is not a flag of this command, ignored", path.display());
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        match value.as_str() {
            "true" if key == "check" => extra.push(flag.into()),
            "false" if key == "check" => {}
            _ => {
                extra.push(flag.into());
                extra.push(value.into());
            }
        }
    }
    let mut out = argv[..at].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[at..]);
    Ok(out)
}

fn run(cli: Cli) -> Result<()> {
    let template = cli.reserved_template.as_deref().map(ReservedTemplate::new).transpose()?;
    let directory = match cli.directory {
        Some(addr) => Some(DirectoryClient::connect_to(&addr)?.addr()),
        None => None,
    };
    match cli.command {
        Command::Directory { command } => match command {
            DirectoryCommand::Serve { port, host, lookup_timeout } => {
                let cfg = DirectoryConfig { lookup_timeout: secs(lookup_timeout)? };
                let server = DirectoryServer::bind((host.as_str(), port), cfg)?;
                // scripts read this line to learn the port
                println!("{}", server.local_addr());
                info!("directory serving on {}; export {DIRECTORY_ENV}={}", server.local_addr(), server.local_addr());
                server.wait();
                Ok(())
            }
            DirectoryCommand::Reconcile { query, exporters, importers } => {
                let client = match directory {
                    Some(addr) => DirectoryClient::new(addr),
                    None => DirectoryClient::from_env()?,
                };
                let stubs = client.reconcile(&query, exporters, importers)?;
                println!("{stubs} stub stream(s) sent");
                Ok(())
            }
        },
        Command::Export(args) => export(args, directory, template),
        Command::Import(args) => import(args, directory, template),
        Command::Bench(args) => bench(args, directory),
        Command::Proxy(args) => proxy(args, directory, template),
    }
}

fn secs(s: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(s).with_context(|| format!("bad duration {s}"))
}

fn pipe_config(p: &PipeArgs, directory: Option<SocketAddr>, template: Option<ReservedTemplate>) -> Result<PipeConfig> {
    let debug = match (&p.debug_path, p.debug_records) {
        (_, 0) => None,
        (Some(path), n) => Some(DebugMirror::new(n, path)),
        (None, _) => bail!("--debug-records needs --debug-path"),
    };
    let mut cfg = PipeConfig {
        format: p.format,
        compression: p.codec,
        block_rows: p.block_rows,
        delimiter: p.delimiter,
        debug,
        directory,
        lookup_timeout: secs(p.timeout)?,
        accept_timeout: secs(p.timeout)?,
        reserved_template: template,
        ..PipeConfig::default()
    };
    if let Some(q) = &p.query {
        cfg.query_token = q.clone();
    }
    Ok(cfg)
}

/// The per-worker endpoint names for `target`. A reserved target without a
/// worker count takes `workers`; a file target gets one file per worker.
fn endpoints(target: &str, workers: u32, cfg: &PipeConfig) -> Result<Vec<(String, u32)>> {
    if workers == 0 {
        bail!("--workers must be at least 1");
    }
    Ok(match cfg.parse_target(target)? {
        Target::Reserved(mut t) => {
            match t.workers {
                Some(w) if w != workers => {
                    bail!("{target} names {w} workers but --workers is {workers}")
                }
                _ => t.workers = Some(workers),
            }
            let name = t.to_string();
            (0..workers).map(|w| (name.clone(), w)).collect()
        }
        Target::File(_) => {
            (0..workers).map(|w| (partition_path(target, w, workers).to_string_lossy().into_owned(), 0)).collect()
        }
    })
}

fn worker_config(cfg: &PipeConfig, worker: u32, workers: u32) -> PipeConfig {
    let mut cfg = cfg.clone();
    cfg.debug = cfg.debug.map(|m| m.for_worker(worker, workers));
    cfg
}

fn print_metrics(verb: &str, w: usize, m: &TransferMetrics) {
    let note = if m.codec_downgraded { " (codec not applicable, sent uncompressed)" } else { "" };
    println!("worker {w}: {verb} {} rows, {} bytes in {:.1} ms{note}", m.rows, m.bytes, m.elapsed.as_secs_f64() * 1e3);
}

fn export(args: ExportArgs, directory: Option<SocketAddr>, template: Option<ReservedTemplate>) -> Result<()> {
    let cfg = pipe_config(&args.pipe, directory, template)?;
    let workers = args.pipe.workers;
    let ends = endpoints(&args.target, workers, &cfg)?;
    let data = generate_dataset(args.data.n, args.data.seed, args.data.payload);
    let engine = CsvEngine { delimiter: cfg.delimiter };
    let started = Instant::now();
    let results: Vec<Result<TransferMetrics>> = thread::scope(|s| {
        let handles: Vec<_> = ends
            .iter()
            .enumerate()
            .map(|(i, (name, w))| {
                let part = partition(&data, i as u32, workers);
                let cfg = worker_config(&cfg, i as u32, workers);
                s.spawn(move || {
                    let mut sink = open_output(name, *w, &cfg)?;
                    engine.export(&part, &mut sink)?;
                    Ok(sink.close()?)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("export worker panicked")).collect()
    });
    let mut rows = 0;
    for (w, r) in results.into_iter().enumerate() {
        let m = r.with_context(|| format!("export worker {w}"))?;
        print_metrics("exported", w, &m);
        rows += m.rows;
    }
    println!("exported {rows} rows to {} in {:.1} ms", args.target, started.elapsed().as_secs_f64() * 1e3);
    Ok(())
}

fn import(args: ImportArgs, directory: Option<SocketAddr>, template: Option<ReservedTemplate>) -> Result<()> {
    let cfg = pipe_config(&args.pipe, directory, template)?;
    let workers = args.pipe.workers;
    let ends = endpoints(&args.source, workers, &cfg)?;
    let schema = args.data.payload.schema();
    let engine = CsvEngine { delimiter: cfg.delimiter };
    // every worker registers before any of them blocks on its exporter
    let mut sources = ends
        .iter()
        .enumerate()
        .map(|(i, (name, w))| open_input(name, *w, &worker_config(&cfg, i as u32, workers)))
        .collect::<Result<Vec<_>, _>>()?;
    let started = Instant::now();
    let results: Vec<_> = thread::scope(|s| {
        let handles: Vec<_> = sources
            .iter_mut()
            .map(|src| {
                let schema = &schema;
                s.spawn(move || engine.import(src, schema).map(|b| (b, src.metrics())))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("import worker panicked")).collect()
    });
    let expected = args.check.then(|| generate_dataset(args.data.n, args.data.seed, args.data.payload));
    let mut rows = 0;
    let mut mismatched = Vec::new();
    for (w, r) in results.into_iter().enumerate() {
        let (block, m) = r.with_context(|| format!("import worker {w}"))?;
        print_metrics("imported", w, &m);
        rows += block.row_count();
        if let Some(data) = &expected {
            if block != partition(data, w as u32, workers) {
                mismatched.push(w);
            }
        }
    }
    println!("imported {rows} rows from {} in {:.1} ms", args.source, started.elapsed().as_secs_f64() * 1e3);
    if !mismatched.is_empty() {
        bail!("workers {mismatched:?} imported rows that differ from the generated table");
    }
    if expected.is_some() {
        println!("check: imported table matches n={} seed={}", args.data.n, args.data.seed);
    }
    Ok(())
}

fn bench(args: BenchArgs, directory: Option<SocketAddr>) -> Result<()> {
    let text = std::fs::read_to_string(&args.spec).with_context(|| format!("reading {}", args.spec.display()))?;
    let plan = parse_bench_plan(&text)?;
    let scratch = std::env::temp_dir().join(format!("datapipe-bench-{}", std::process::id()));
    let workdir = args.workdir.clone().unwrap_or_else(|| scratch.clone());
    std::fs::create_dir_all(&workdir)?;
    let outcome = run_plan(&plan, &workdir, directory);
    let _ = std::fs::remove_dir_all(&scratch);
    let results = outcome?;
    let report = bench_report(&results)?;
    print!("{}", report.table());
    if let Some(path) = &args.json {
        std::fs::write(path, report.json_lines()).with_context(|| format!("writing {}", path.display()))?;
    }
    if results.iter().any(|r| !r.exact) {
        bail!("some transfers did not reproduce the table exactly");
    }
    Ok(())
}

/// Runs every spec `repeats` times and keeps the run with the median total.
fn run_plan(plan: &BenchPlan, workdir: &Path, directory: Option<SocketAddr>) -> Result<Vec<BenchResult>> {
    let mut results = Vec::new();
    for spec in &plan.specs {
        let mut runs = Vec::new();
        for i in 0..plan.repeats {
            let run = run_bench(spec, workdir, directory).with_context(|| format!("{} {}", spec.mode, spec.codec))?;
            info!("{} {} run {}: {:.1} ms", spec.mode, spec.codec, i + 1, run.result.total.as_secs_f64() * 1e3);
            if !run.result.exact {
                warn!("{} {}: imported table differs from the generated one", spec.mode, spec.codec);
            }
            runs.push(run.result);
        }
        runs.sort_by_key(|r| r.total);
        results.push(runs.swap_remove(runs.len() / 2));
    }
    Ok(results)
}

fn proxy(args: ProxyArgs, directory: Option<SocketAddr>, template: Option<ReservedTemplate>) -> Result<()> {
    if args.listen.is_none() && args.send.is_none() {
        bail!("nothing to do: give --listen/--out, --in/--send, or both");
    }
    let cfg = pipe_config(&args.pipe, directory, template)?;
    let listen = args.listen.as_deref().zip(args.out.as_deref());
    let send = args.send.as_deref().zip(args.input.as_deref());
    let report = run_verification_proxy(listen, send, &cfg);
    for (w, m) in report.received.iter().enumerate() {
        print_metrics("received", w, m);
    }
    for (w, m) in report.sent.iter().enumerate() {
        print_metrics("sent", w, m);
    }
    if !report.is_ok() {
        bail!("proxy failed:\n  {}", report.errors.join("\n  "));
    }
    Ok(())
}
