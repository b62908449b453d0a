//! Worker directory: reserved-target parsing and the rendezvous service that
//! matches importing workers (which register) with exporting workers (which
//! look up and connect).

mod client;
pub mod protocol;
mod registry;
mod server;
mod target;

use std::time::Duration;

use thiserror::Error;

pub use client::{DirectoryClient, DIRECTORY_ENV};
pub use registry::{DirectoryEntry, Registry, StubPlan};
pub use server::{send_stub, DirectoryConfig, DirectoryServer};
pub use target::{parse_target, ReservedTarget, ReservedTemplate, Target};

use crate::wire::WireError;

pub const DEFAULT_LOOKUP_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Error)]
pub enum DirectoryError {
    #[error("invalid reserved target {target:?}: {reason}")]
    BadTarget { target: String, reason: String },
    #[error("reserved-name template {0:?} must contain [Name] after a non-empty prefix")]
    BadTemplate(String),
    #[error("worker {worker_index} of query {query_id:?} is already registered")]
    Duplicate { query_id: String, worker_index: u32 },
    #[error("worker {worker_index} of query {query_id:?} was already claimed by another exporter")]
    AlreadyClaimed { query_id: String, worker_index: u32 },
    #[error("no importer {worker_index} registered for query {query_id:?} before the deadline")]
    Timeout { query_id: String, worker_index: u32 },
    #[error("unsupported configuration: {exporters} exporters but only {importers} importers")]
    Unsupported { exporters: u32, importers: u32 },
    #[error("malformed directory message: {0}")]
    Malformed(String),
    #[error("directory service error: {0}")]
    Remote(String),
    #[error("no directory address configured (use --directory or PIPEGEN_DIRECTORY)")]
    NoDirectory,
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
