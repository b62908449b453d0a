use std::collections::BTreeMap;

use super::FormatError;
use crate::augtext::{AugText, Part};

/// Outcome of delimiter inference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelimiterReport {
    pub delimiter: char,
    pub candidate_counts: BTreeMap<char, usize>,
    /// More than one candidate shared the maximal count.
    pub ambiguous: bool,
}

/// Infers the value delimiter from the parts of exported records.
pub fn infer_delimiter<'a, I>(records: I) -> Result<DelimiterReport, FormatError>
where
    I: IntoIterator<Item = &'a AugText>,
{
    let mut counter = Counter::default();
    for r in records {
        r.parts().for_each(|p| counter.observe(p));
    }
    counter.finish()
}

pub fn infer_delimiter_parts<'a, I>(parts: I) -> Result<DelimiterReport, FormatError>
where
    I: IntoIterator<Item = Part<'a>>,
{
    let mut counter = Counter::default();
    parts.into_iter().for_each(|p| counter.observe(p));
    counter.finish()
}

#[derive(Default)]
struct Counter {
    counts: BTreeMap<char, usize>,
    first_seen: Vec<char>,
}

impl Counter {
    fn observe(&mut self, part: Part<'_>) {
        // numeric parts are not candidates, only one-character text parts
        let Part::Text(s) = part else { return };
        let mut chars = s.chars();
        let (Some(c), None) = (chars.next(), chars.next()) else {
            return;
        };
        if c == '\n' || c == '\r' {
            return;
        }
        let n = self.counts.entry(c).or_insert(0);
        if *n == 0 {
            self.first_seen.push(c);
        }
        *n += 1;
    }

    fn finish(self) -> Result<DelimiterReport, FormatError> {
        let max = *self.counts.values().max().ok_or(FormatError::NoDelimiterCandidate)?;
        // tied candidates in first-occurrence order
        let tied: Vec<char> = self.first_seen.iter().copied().filter(|c| self.counts[c] == max).collect();
        let ambiguous = tied.len() > 1;
        let delimiter = tied.iter().copied().find(|c| !c.is_alphanumeric()).unwrap_or(tied[0]);
        Ok(DelimiterReport { delimiter, candidate_counts: self.counts, ambiguous })
    }
}
