use std::io::{BufReader, Write};
use std::net::{SocketAddr, TcpStream, ToSocketAddrs};
use std::time::Duration;

use super::protocol::{Request, Response, Status};
use super::{DirectoryEntry, DirectoryError, DEFAULT_LOOKUP_TIMEOUT};

/// Environment variable naming the directory service address.
pub const DIRECTORY_ENV: &str = "PIPEGEN_DIRECTORY";

/// Handle to a remote directory service. Every call uses its own connection.
#[derive(Debug, Clone)]
pub struct DirectoryClient {
    addr: SocketAddr,
    lookup_timeout: Duration,
}

impl DirectoryClient {
    pub fn new(addr: SocketAddr) -> Self {
        DirectoryClient { addr, lookup_timeout: DEFAULT_LOOKUP_TIMEOUT }
    }

    pub fn connect_to(addr: &str) -> Result<Self, DirectoryError> {
        let addr = addr
            .to_socket_addrs()?
            .next()
            .ok_or_else(|| DirectoryError::Malformed(format!("cannot resolve directory address {addr:?}")))?;
        Ok(DirectoryClient::new(addr))
    }

    /// Address from `PIPEGEN_DIRECTORY`.
    pub fn from_env() -> Result<Self, DirectoryError> {
        let addr = std::env::var(DIRECTORY_ENV).map_err(|_| DirectoryError::NoDirectory)?;
        DirectoryClient::connect_to(&addr)
    }

    /// Client-side bound on a blocking lookup. Should not be shorter than the
    /// service's own lookup timeout.
    pub fn with_lookup_timeout(mut self, timeout: Duration) -> Self {
        self.lookup_timeout = timeout;
        self
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    fn call(&self, req: &Request, read_timeout: Duration) -> Result<Response, DirectoryError> {
        let mut stream = TcpStream::connect(self.addr)?;
        stream.set_nodelay(true)?;
        stream.set_read_timeout(Some(read_timeout))?;
        stream.write_all(&req.encode())?;
        stream.flush()?;
        let mut reader = BufReader::new(stream);
        match Response::read(&mut reader, req) {
            Err(DirectoryError::Io(e))
                if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) =>
            {
                match req {
                    Request::Lookup { query_id, worker_index } => {
                        Err(DirectoryError::Timeout { query_id: query_id.clone(), worker_index: *worker_index })
                    }
                    _ => Err(DirectoryError::Io(e)),
                }
            }
            other => other,
        }
    }

    fn remote_error(req: &Request, status: Status, message: String) -> DirectoryError {
        let (query_id, worker_index) = match req {
            Request::Register(e) => (e.query_id.clone(), e.worker_index),
            Request::Lookup { query_id, worker_index } => (query_id.clone(), *worker_index),
            Request::Reconcile { query_id, .. } => (query_id.clone(), 0),
        };
        match (status, req) {
            (Status::Duplicate, _) => DirectoryError::Duplicate { query_id, worker_index },
            (Status::Timeout, _) => DirectoryError::Timeout { query_id, worker_index },
            (Status::AlreadyClaimed, _) => DirectoryError::AlreadyClaimed { query_id, worker_index },
            (Status::Unsupported, Request::Reconcile { exporter_count, importer_count, .. }) => {
                DirectoryError::Unsupported { exporters: *exporter_count, importers: *importer_count }
            }
            (Status::Malformed, _) => DirectoryError::Malformed(message),
            _ => DirectoryError::Remote(message),
        }
    }

    pub fn register(&self, entry: DirectoryEntry) -> Result<(), DirectoryError> {
        let req = Request::Register(entry);
        match self.call(&req, Duration::from_secs(30))? {
            Response::Registered => Ok(()),
            Response::Error { status, message } => Err(Self::remote_error(&req, status, message)),
            other => Err(DirectoryError::Malformed(format!("unexpected response {other:?}"))),
        }
    }

    /// Blocks until the importer `(query_id, worker_index)` has registered.
    pub fn lookup(&self, query_id: &str, worker_index: u32) -> Result<DirectoryEntry, DirectoryError> {
        let req = Request::Lookup { query_id: query_id.to_owned(), worker_index };
        // the service answers with TIMEOUT at its own deadline; this bound only
        // catches a service that stops answering
        let read_timeout = self.lookup_timeout + Duration::from_secs(5);
        match self.call(&req, read_timeout)? {
            Response::Found { hostname, port } => {
                Ok(DirectoryEntry { query_id: query_id.to_owned(), worker_index, hostname, port })
            }
            Response::Error { status, message } => Err(Self::remote_error(&req, status, message)),
            other => Err(DirectoryError::Malformed(format!("unexpected response {other:?}"))),
        }
    }

    /// Asks the service to send stub streams to importers without an exporter.
    /// Returns the number of stubs sent.
    pub fn reconcile(&self, query_id: &str, exporter_count: u32, importer_count: u32) -> Result<u32, DirectoryError> {
        let req = Request::Reconcile { query_id: query_id.to_owned(), exporter_count, importer_count };
        let read_timeout =
            self.lookup_timeout * (importer_count.saturating_sub(exporter_count) + 1) + Duration::from_secs(5);
        match self.call(&req, read_timeout)? {
            Response::Reconciled { stubs } => Ok(stubs),
            Response::Error { status, message } => Err(Self::remote_error(&req, status, message)),
            other => Err(DirectoryError::Malformed(format!("unexpected response {other:?}"))),
        }
    }
}
