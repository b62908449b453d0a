#![allow(dead_code)]

use std::io::{BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicU64, Ordering};
use std::thread;

use datapipe::directory::{DirectoryClient, DirectoryConfig, DirectoryEntry, DirectoryServer};
use datapipe::harness::CsvEngine;
use datapipe::pipe::{open_input, open_output, PipeConfig, PipeError, PipeFormat, TransferMetrics};
use datapipe::wire::{encode_header, read_frame, read_header, ColumnBlock, Compression, Frame, TransferHeader};

pub fn directory() -> DirectoryServer {
    DirectoryServer::bind("127.0.0.1:0", DirectoryConfig::default()).unwrap()
}

pub fn query_id(tag: &str) -> String {
    static NEXT: AtomicU64 = AtomicU64::new(0);
    format!("{tag}-{}-{}", std::process::id(), NEXT.fetch_add(1, Ordering::Relaxed))
}

pub fn config(dir: &DirectoryServer, format: PipeFormat, codec: Compression) -> PipeConfig {
    PipeConfig { format, compression: codec, directory: Some(dir.local_addr()), ..PipeConfig::default() }
}

pub fn target(name: &str, workers: u32, query: &str) -> String {
    format!("db://{name}?workers={workers}&query={query}")
}

/// Runs the CSV engine on both ends of a single-worker pipe.
pub fn csv_transfer(
    data: &ColumnBlock,
    cfg: &PipeConfig,
) -> (Result<ColumnBlock, PipeError>, Result<TransferMetrics, PipeError>) {
    let t = target("B", 1, &query_id("csv"));
    let engine = CsvEngine::default();
    let mut source = open_input(&t, 0, cfg).unwrap();
    thread::scope(|s| {
        let exporter = s.spawn(|| {
            let mut sink = open_output(&t, 0, cfg)?;
            engine.export(data, &mut sink)?;
            sink.close()
        });
        let imported = engine.import(&mut source, data.schema());
        (imported, exporter.join().unwrap())
    })
}

/// An importer endpoint registered by hand, for inspecting raw streams.
pub struct RawListener {
    listener: TcpListener,
}

impl RawListener {
    pub fn register(dir: &DirectoryServer, query: &str, worker: u32) -> RawListener {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let port = listener.local_addr().unwrap().port();
        DirectoryClient::new(dir.local_addr())
            .register(DirectoryEntry {
                query_id: query.into(),
                worker_index: worker,
                hostname: "127.0.0.1".into(),
                port,
            })
            .unwrap();
        RawListener { listener }
    }

    pub fn accept(&self) -> TcpStream {
        self.listener.accept().unwrap().0
    }

    /// Reads a whole stream: header plus every frame up to and including
    /// `END_OF_STREAM`.
    pub fn read_all(&self) -> (TransferHeader, Vec<Frame>) {
        let mut r = BufReader::new(self.accept());
        let header = read_header(&mut r).unwrap();
        let mut frames = Vec::new();
        loop {
            let f = read_frame(&mut r).unwrap();
            let end = f.frame_type == datapipe::wire::FrameType::EndOfStream;
            frames.push(f);
            if end {
                return (header, frames);
            }
        }
    }
}

/// Forwards one stream from an exporter to the importer registered in
/// `downstream`, flipping the byte at `flip` (counted from the first byte
/// after the header).
pub fn tampering_relay(
    upstream: &DirectoryServer,
    downstream: &DirectoryServer,
    query: &str,
    flip: usize,
) -> thread::JoinHandle<()> {
    let listener = RawListener::register(upstream, query, 0);
    let down = DirectoryClient::new(downstream.local_addr());
    let query = query.to_owned();
    thread::spawn(move || {
        let mut from = BufReader::new(listener.accept());
        let header = read_header(&mut from).unwrap();
        let entry = down.lookup(&query, 0).unwrap();
        let mut to = TcpStream::connect((entry.hostname.as_str(), entry.port)).unwrap();
        to.write_all(&encode_header(&header).unwrap()).unwrap();
        let mut rest = Vec::new();
        from.read_to_end(&mut rest).unwrap();
        rest[flip] ^= 0x01;
        // the importer may hang up early once it has seen the damage
        let _ = to.write_all(&rest);
        let _ = to.shutdown(std::net::Shutdown::Write);
    })
}
