//! Request/response messages exchanged with the directory service.
//!
//! ```text
//! request   = op u8, query_id (u16 len + UTF-8), body
//!   REGISTER  (1): worker_index u32, hostname (u16 len + UTF-8), port u16
//!   LOOKUP    (2): worker_index u32
//!   RECONCILE (3): exporter_count u32, importer_count u32
//! response  = status u8, body
//!   OK            : LOOKUP -> hostname (u16 len + UTF-8), port u16
//!                   RECONCILE -> stubs sent u32
//!                   REGISTER -> empty
//!   anything else : message (u16 len + UTF-8)
//! ```

use std::io::{Read, Write};

use super::{DirectoryEntry, DirectoryError};
use crate::wire::{put_str_u16, WireError};

pub const OP_REGISTER: u8 = 1;
pub const OP_LOOKUP: u8 = 2;
pub const OP_RECONCILE: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Status {
    Ok = 0,
    Duplicate = 1,
    Malformed = 2,
    Timeout = 3,
    AlreadyClaimed = 4,
    Unsupported = 5,
    Failed = 6,
}

impl Status {
    fn from_code(c: u8) -> Result<Self, DirectoryError> {
        Ok(match c {
            0 => Status::Ok,
            1 => Status::Duplicate,
            2 => Status::Malformed,
            3 => Status::Timeout,
            4 => Status::AlreadyClaimed,
            5 => Status::Unsupported,
            6 => Status::Failed,
            other => return Err(DirectoryError::Malformed(format!("status code {other}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Request {
    Register(DirectoryEntry),
    Lookup { query_id: String, worker_index: u32 },
    Reconcile { query_id: String, exporter_count: u32, importer_count: u32 },
}

impl Request {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            Request::Register(e) => {
                out.push(OP_REGISTER);
                put_str_u16(&mut out, &e.query_id);
                out.extend_from_slice(&e.worker_index.to_le_bytes());
                put_str_u16(&mut out, &e.hostname);
                out.extend_from_slice(&e.port.to_le_bytes());
            }
            Request::Lookup { query_id, worker_index } => {
                out.push(OP_LOOKUP);
                put_str_u16(&mut out, query_id);
                out.extend_from_slice(&worker_index.to_le_bytes());
            }
            Request::Reconcile { query_id, exporter_count, importer_count } => {
                out.push(OP_RECONCILE);
                put_str_u16(&mut out, query_id);
                out.extend_from_slice(&exporter_count.to_le_bytes());
                out.extend_from_slice(&importer_count.to_le_bytes());
            }
        }
        out
    }

    pub fn read<R: Read>(r: &mut R) -> Result<Self, DirectoryError> {
        let op = read_u8(r)?;
        let query_id = read_str(r)?;
        Ok(match op {
            OP_REGISTER => {
                let worker_index = read_u32(r)?;
                let hostname = read_str(r)?;
                let port = read_u16(r)?;
                Request::Register(DirectoryEntry { query_id, worker_index, hostname, port })
            }
            OP_LOOKUP => Request::Lookup { query_id, worker_index: read_u32(r)? },
            OP_RECONCILE => Request::Reconcile { query_id, exporter_count: read_u32(r)?, importer_count: read_u32(r)? },
            other => return Err(DirectoryError::Malformed(format!("op code {other}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Response {
    Registered,
    Found { hostname: String, port: u16 },
    Reconciled { stubs: u32 },
    Error { status: Status, message: String },
}

impl Response {
    pub fn error(e: &DirectoryError) -> Self {
        let status = match e {
            DirectoryError::Duplicate { .. } => Status::Duplicate,
            DirectoryError::Malformed(_) => Status::Malformed,
            DirectoryError::Timeout { .. } => Status::Timeout,
            DirectoryError::AlreadyClaimed { .. } => Status::AlreadyClaimed,
            DirectoryError::Unsupported { .. } => Status::Unsupported,
            _ => Status::Failed,
        };
        Response::Error { status, message: e.to_string() }
    }

    pub fn write<W: Write>(&self, w: &mut W) -> Result<(), DirectoryError> {
        let mut out = Vec::new();
        match self {
            Response::Registered => out.push(Status::Ok as u8),
            Response::Found { hostname, port } => {
                out.push(Status::Ok as u8);
                put_str_u16(&mut out, hostname);
                out.extend_from_slice(&port.to_le_bytes());
            }
            Response::Reconciled { stubs } => {
                out.push(Status::Ok as u8);
                out.extend_from_slice(&stubs.to_le_bytes());
            }
            Response::Error { status, message } => {
                out.push(*status as u8);
                let m: String = message.chars().take(1024).collect();
                put_str_u16(&mut out, &m);
            }
        }
        w.write_all(&out)?;
        Ok(())
    }

    /// Reads the response to `req`.
    pub fn read<R: Read>(r: &mut R, req: &Request) -> Result<Self, DirectoryError> {
        let status = Status::from_code(read_u8(r)?)?;
        if status != Status::Ok {
            return Ok(Response::Error { status, message: read_str(r)? });
        }
        Ok(match req {
            Request::Register(_) => Response::Registered,
            Request::Lookup { .. } => Response::Found { hostname: read_str(r)?, port: read_u16(r)? },
            Request::Reconcile { .. } => Response::Reconciled { stubs: read_u32(r)? },
        })
    }
}

fn read_array<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N], DirectoryError> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => DirectoryError::Malformed("truncated message".into()),
        _ => DirectoryError::Io(e),
    })?;
    Ok(b)
}

fn read_u8<R: Read>(r: &mut R) -> Result<u8, DirectoryError> {
    Ok(read_array::<R, 1>(r)?[0])
}

fn read_u16<R: Read>(r: &mut R) -> Result<u16, DirectoryError> {
    read_array(r).map(u16::from_le_bytes)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, DirectoryError> {
    read_array(r).map(u32::from_le_bytes)
}

fn read_str<R: Read>(r: &mut R) -> Result<String, DirectoryError> {
    let n = read_u16(r)? as usize;
    let mut b = vec![0u8; n];
    r.read_exact(&mut b).map_err(|_| DirectoryError::Malformed("truncated string".into()))?;
    String::from_utf8(b).map_err(|_| DirectoryError::Wire(WireError::InvalidUtf8("directory message")))
}
