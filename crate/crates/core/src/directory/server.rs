use std::io::{BufReader, BufWriter, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use log::{debug, warn};

use super::protocol::{Request, Response};
use super::{DirectoryEntry, DirectoryError, Registry, DEFAULT_LOOKUP_TIMEOUT};
use crate::wire::{encode_header, write_frame, Compression, Format, FrameType, Schema, TransferHeader};

#[derive(Debug, Clone)]
pub struct DirectoryConfig {
    pub lookup_timeout: Duration,
}

impl Default for DirectoryConfig {
    fn default() -> Self {
        DirectoryConfig { lookup_timeout: DEFAULT_LOOKUP_TIMEOUT }
    }
}

/// The worker directory as a TCP service. One thread per request.
pub struct DirectoryServer {
    addr: SocketAddr,
    registry: Arc<Registry>,
    stop: Arc<AtomicBool>,
    accept: Option<JoinHandle<()>>,
}

impl DirectoryServer {
    pub fn bind(addr: impl ToSocketAddrs, config: DirectoryConfig) -> std::io::Result<Self> {
        let listener = TcpListener::bind(addr)?;
        let addr = listener.local_addr()?;
        let registry = Arc::new(Registry::new());
        let stop = Arc::new(AtomicBool::new(false));
        let accept = {
            let registry = registry.clone();
            let stop = stop.clone();
            std::thread::Builder::new()
                .name("directory-accept".into())
                .spawn(move || accept_loop(listener, registry, stop, config))?
        };
        debug!("directory listening on {addr}");
        Ok(DirectoryServer { addr, registry, stop, accept: Some(accept) })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn registry(&self) -> &Arc<Registry> {
        &self.registry
    }

    /// Blocks the calling thread for the lifetime of the service.
    pub fn wait(mut self) {
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }

    pub fn shutdown(mut self) {
        self.stop_accepting();
    }

    fn stop_accepting(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // wake the blocking accept
        let _ = TcpStream::connect_timeout(&self.addr, Duration::from_secs(1));
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}

impl Drop for DirectoryServer {
    fn drop(&mut self) {
        if self.accept.is_some() {
            self.stop_accepting();
        }
    }
}

fn accept_loop(listener: TcpListener, registry: Arc<Registry>, stop: Arc<AtomicBool>, config: DirectoryConfig) {
    for conn in listener.incoming() {
        if stop.load(Ordering::SeqCst) {
            break;
        }
        let stream = match conn {
            Ok(s) => s,
            Err(e) => {
                warn!("directory accept failed: {e}");
                continue;
            }
        };
        let registry = registry.clone();
        let config = config.clone();
        let spawned = std::thread::Builder::new().name("directory-conn".into()).spawn(move || {
            if let Err(e) = handle(stream, &registry, &config) {
                debug!("directory connection ended with {e}");
            }
        });
        if let Err(e) = spawned {
            warn!("cannot spawn directory handler: {e}");
        }
    }
}

fn handle(stream: TcpStream, registry: &Registry, config: &DirectoryConfig) -> Result<(), DirectoryError> {
    stream.set_nodelay(true)?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = BufWriter::new(stream);
    let response = match Request::read(&mut reader) {
        Ok(req) => {
            debug!("directory request {req:?}");
            match execute(req, registry, config) {
                Ok(r) => r,
                Err(e) => Response::error(&e),
            }
        }
        Err(e) => Response::error(&e),
    };
    response.write(&mut writer)?;
    writer.flush()?;
    let _ = writer.get_ref().shutdown(Shutdown::Write);
    Ok(())
}

fn execute(req: Request, registry: &Registry, config: &DirectoryConfig) -> Result<Response, DirectoryError> {
    Ok(match req {
        Request::Register(entry) => {
            registry.register(entry)?;
            Response::Registered
        }
        Request::Lookup { query_id, worker_index } => {
            let e = registry.lookup(&query_id, worker_index, config.lookup_timeout)?;
            Response::Found { hostname: e.hostname, port: e.port }
        }
        Request::Reconcile { query_id, exporter_count, importer_count } => {
            let plan = registry.reconcile(&query_id, exporter_count, importer_count, config.lookup_timeout)?;
            for entry in &plan.stubs {
                send_stub(entry)?;
            }
            Response::Reconciled { stubs: plan.stubs.len() as u32 }
        }
    })
}

/// Connects to an orphaned importer and delivers an empty transfer: a
/// zero-column header followed immediately by `END_OF_STREAM`.
pub fn send_stub(entry: &DirectoryEntry) -> Result<(), DirectoryError> {
    let mut stream = TcpStream::connect((entry.hostname.as_str(), entry.port))?;
    let header = TransferHeader::new(Format::Row, Compression::None, entry.query_id.clone(), Schema::empty());
    let mut bytes = encode_header(&header)?;
    write_frame(&mut bytes, FrameType::EndOfStream, &[])?;
    stream.write_all(&bytes)?;
    stream.flush()?;
    debug!("sent stub stream to importer {} of {}", entry.worker_index, entry.query_id);
    Ok(())
}
