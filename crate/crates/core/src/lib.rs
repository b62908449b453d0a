//! Data pipes between data engines.
//!
//! Engines that only know how to export and import text files (CSV, JSON) are
//! connected through TCP sockets instead of intermediate files. Exported text
//! is intercepted as typed values ([`augtext`]), stripped of delimiters and
//! redundant keys ([`formatopt`]), optionally pivoted to columns and
//! compressed, and shipped in a compact binary format ([`wire`]). Importing and
//! exporting workers meet through a rendezvous service ([`directory`]); the
//! endpoints themselves live in [`pipe`], and [`harness`] holds mock engines and
//! the file-vs-pipe benchmark.

pub mod augtext;
pub mod directory;
pub mod formatopt;
pub mod harness;
pub mod pipe;
pub mod wire;
