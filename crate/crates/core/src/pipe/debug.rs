use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::PipeError;

/// Debug mode: the exporter also writes its first `records` records as text
/// to `path`, and the importer checks what it received against that file.
/// Both sides must see the same path. `records == 0` disables the check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DebugMirror {
    pub records: usize,
    pub path: PathBuf,
}

impl DebugMirror {
    pub fn new(records: usize, path: impl Into<PathBuf>) -> Self {
        DebugMirror { records, path: path.into() }
    }

    /// The mirror file for one worker of a multi-worker transfer.
    pub fn for_worker(&self, worker: u32, workers: u32) -> DebugMirror {
        DebugMirror {
            records: self.records,
            path: super::partition_path(&self.path.to_string_lossy(), worker, workers),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Ok { compared: usize },
    Mismatch { record: usize, expected: Option<String>, found: Option<String> },
}

impl Verdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, Verdict::Ok { .. })
    }

    pub(crate) fn into_result(self) -> Result<usize, PipeError> {
        match self {
            Verdict::Ok { compared } => Ok(compared),
            Verdict::Mismatch { record, expected, found } => Err(PipeError::Verification {
                record,
                detail: format!(
                    "mirror has {}, stream has {}",
                    expected.map_or("nothing".into(), |s| format!("{s:?}")),
                    found.map_or("nothing".into(), |s| format!("{s:?}")),
                ),
            }),
        }
    }
}

/// Compares received records with the mirror file. The file must hold
/// exactly `min(records, received)` lines, where a stream that ended early
/// has fewer than `records`.
pub fn debug_compare(path: &Path, received: &[String]) -> Result<Verdict, PipeError> {
    let reader = BufReader::new(File::open(path)?);
    let mut compared = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        match received.get(i) {
            Some(r) if *r == line => compared += 1,
            other => {
                return Ok(Verdict::Mismatch { record: i, expected: Some(line), found: other.cloned() });
            }
        }
    }
    if compared < received.len() {
        return Ok(Verdict::Mismatch { record: compared, expected: None, found: Some(received[compared].clone()) });
    }
    Ok(Verdict::Ok { compared })
}

/// Exporter half: copies the first `remaining` records to disk.
pub(crate) struct MirrorWriter {
    file: Option<BufWriter<File>>,
    remaining: usize,
}

impl MirrorWriter {
    pub(crate) fn create(m: &DebugMirror) -> Result<Option<MirrorWriter>, PipeError> {
        if m.records == 0 {
            return Ok(None);
        }
        Ok(Some(MirrorWriter { file: Some(BufWriter::new(File::create(&m.path)?)), remaining: m.records }))
    }

    pub(crate) fn active(&self) -> bool {
        self.file.is_some()
    }

    /// Raw exported text, which may hold partial or several records.
    pub(crate) fn text(&mut self, s: &str) -> Result<(), PipeError> {
        let Some(f) = self.file.as_mut() else {
            return Ok(());
        };
        let mut rest = s;
        while self.remaining > 0 && !rest.is_empty() {
            match rest.find('\n') {
                Some(i) => {
                    f.write_all(&rest.as_bytes()[..=i])?;
                    rest = &rest[i + 1..];
                    self.remaining -= 1;
                }
                None => {
                    f.write_all(rest.as_bytes())?;
                    rest = "";
                }
            }
        }
        if self.remaining == 0 {
            self.finish()?;
        }
        Ok(())
    }

    /// One whole record, without terminator.
    pub(crate) fn record(&mut self, s: &str) -> Result<(), PipeError> {
        if self.file.is_none() {
            return Ok(());
        }
        self.text(s)?;
        self.text("\n")
    }

    /// Makes everything mirrored so far visible to the importer. Called
    /// before any frame leaves, so the file is ahead of the stream.
    pub(crate) fn sync(&mut self) -> Result<(), PipeError> {
        if let Some(f) = self.file.as_mut() {
            f.flush()?;
        }
        Ok(())
    }

    pub(crate) fn finish(&mut self) -> Result<(), PipeError> {
        if let Some(mut f) = self.file.take() {
            f.flush()?;
        }
        Ok(())
    }
}

/// Importer half: holds back the first `records` records until they are checked.
pub(crate) struct MirrorCheck {
    path: PathBuf,
    records: usize,
    seen: Vec<String>,
    done: bool,
}

impl MirrorCheck {
    pub(crate) fn new(m: &DebugMirror) -> Option<MirrorCheck> {
        (m.records > 0).then(|| MirrorCheck { path: m.path.clone(), records: m.records, seen: Vec::new(), done: false })
    }

    pub(crate) fn wants(&self) -> bool {
        !self.done && self.seen.len() < self.records
    }

    pub(crate) fn saw(&mut self, record: String) {
        if self.wants() {
            self.seen.push(record);
        }
    }

    pub(crate) fn is_done(&self) -> bool {
        self.done
    }

    pub(crate) fn verify(&mut self) -> Result<(), PipeError> {
        if self.done {
            return Ok(());
        }
        self.done = true;
        let seen = std::mem::take(&mut self.seen);
        debug_compare(&self.path, &seen)?.into_result()?;
        log::debug!("debug mirror verified {} records", seen.len());
        Ok(())
    }
}
