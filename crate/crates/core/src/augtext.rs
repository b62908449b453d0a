//! Augmented text: a string-like value that keeps the typed components it was
//! built from.
//!
//! An exporter that concatenates `1`, `","` and `"a"` ends up holding the parts
//! `[1, ",", "a"]` instead of the characters `"1,a"`. The pipe reads the typed
//! parts directly and never pays for number formatting; an importer that splits
//! and parses such a value gets the original primitives back without touching
//! text. The character form is produced (once) only when someone asks for it.
//!
//! Parts live in one flat byte arena tagged by type, so building a record costs
//! a single growing allocation regardless of how many values it holds.

use std::fmt::{self, Write as _};
use std::ops::Add;
use std::sync::OnceLock;

use thiserror::Error;

use crate::wire::Value;

const TAG_INT32: u8 = 1;
const TAG_INT64: u8 = 2;
const TAG_FLOAT64: u8 = 3;
const TAG_BOOL: u8 = 4;
const TAG_TEXT: u8 = 5;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AugTextError {
    #[error("not a number: {0:?}")]
    NotNumeric(String),
    #[error("{parts} parts do not reduce to one number: {text:?}")]
    NotSingleValue { parts: usize, text: String },
}

/// One component of an [`AugText`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Part<'a> {
    Int32(i32),
    Int64(i64),
    Float64(f64),
    Bool(bool),
    Text(&'a str),
}

impl Part<'_> {
    pub fn is_primitive(&self) -> bool {
        !matches!(self, Part::Text(_))
    }

    pub fn render(&self, out: &mut String) {
        match *self {
            Part::Int32(x) => write!(out, "{x}").unwrap(),
            Part::Int64(x) => write!(out, "{x}").unwrap(),
            Part::Float64(x) => render_float(x, out),
            Part::Bool(x) => out.push_str(if x { "true" } else { "false" }),
            Part::Text(s) => out.push_str(s),
        }
    }

    pub fn to_value(&self) -> Value {
        match *self {
            Part::Int32(x) => Value::Int32(x),
            Part::Int64(x) => Value::Int64(x),
            Part::Float64(x) => Value::Float64(x),
            Part::Bool(x) => Value::Bool(x),
            Part::Text(s) => Value::Text(s.to_owned()),
        }
    }
}

/// Shortest decimal text that parses back to the same bits. Positional for
/// magnitudes in `[1e-5, 1e16)`, scientific otherwise.
pub fn render_float(x: f64, out: &mut String) {
    let a = x.abs();
    if x.is_finite() && a != 0.0 && !(1e-5..1e16).contains(&a) {
        write!(out, "{x:e}").unwrap();
    } else {
        write!(out, "{x}").unwrap();
    }
}

/// Canonical text rendering of a value, as written to CSV.
pub fn render_value(v: &Value, out: &mut String) {
    match v {
        Value::Int32(x) => Part::Int32(*x).render(out),
        Value::Int64(x) => Part::Int64(*x).render(out),
        Value::Float64(x) => render_float(*x, out),
        Value::Bool(x) => Part::Bool(*x).render(out),
        Value::Text(s) => out.push_str(s),
    }
}

#[derive(Clone, Default)]
pub struct AugText {
    arena: Vec<u8>,
    parts: usize,
    memo: OnceLock<String>,
}

impl AugText {
    pub fn new() -> Self {
        AugText::default()
    }

    pub fn with_capacity(bytes: usize) -> Self {
        AugText { arena: Vec::with_capacity(bytes), parts: 0, memo: OnceLock::new() }
    }

    /// Renders a non-primitive value to text immediately, so later changes to
    /// the source object cannot leak into this value.
    pub fn from_display(v: impl fmt::Display) -> Self {
        AugText::from(v.to_string().as_str())
    }

    pub fn from_value(v: &Value) -> Self {
        let mut a = AugText::new();
        a.push_value(v);
        a
    }

    /// Drops all parts, keeping the arena's capacity.
    pub fn clear(&mut self) {
        self.arena.clear();
        self.parts = 0;
        self.memo = OnceLock::new();
    }

    pub fn part_count(&self) -> usize {
        self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.materialize().is_empty()
    }

    pub fn is_materialized(&self) -> bool {
        self.memo.get().is_some()
    }

    fn touch(&mut self) {
        if self.memo.get().is_some() {
            self.memo = OnceLock::new();
        }
    }

    pub fn push_int32(&mut self, x: i32) -> &mut Self {
        self.touch();
        self.arena.push(TAG_INT32);
        self.arena.extend_from_slice(&x.to_le_bytes());
        self.parts += 1;
        self
    }

    pub fn push_int64(&mut self, x: i64) -> &mut Self {
        self.touch();
        self.arena.push(TAG_INT64);
        self.arena.extend_from_slice(&x.to_le_bytes());
        self.parts += 1;
        self
    }

    pub fn push_float64(&mut self, x: f64) -> &mut Self {
        self.touch();
        self.arena.push(TAG_FLOAT64);
        self.arena.extend_from_slice(&x.to_le_bytes());
        self.parts += 1;
        self
    }

    pub fn push_bool(&mut self, x: bool) -> &mut Self {
        self.touch();
        self.arena.push(TAG_BOOL);
        self.arena.push(x as u8);
        self.parts += 1;
        self
    }

    /// Appends a text fragment. Empty fragments are dropped.
    pub fn push_str(&mut self, s: &str) -> &mut Self {
        if s.is_empty() {
            return self;
        }
        self.touch();
        self.arena.push(TAG_TEXT);
        self.arena.extend_from_slice(&(s.len() as u32).to_le_bytes());
        self.arena.extend_from_slice(s.as_bytes());
        self.parts += 1;
        self
    }

    pub fn push_value(&mut self, v: &Value) -> &mut Self {
        match v {
            Value::Int32(x) => self.push_int32(*x),
            Value::Int64(x) => self.push_int64(*x),
            Value::Float64(x) => self.push_float64(*x),
            Value::Bool(x) => self.push_bool(*x),
            Value::Text(s) => self.push_str(s),
        }
    }

    pub fn push_part(&mut self, p: Part<'_>) -> &mut Self {
        match p {
            Part::Int32(x) => self.push_int32(x),
            Part::Int64(x) => self.push_int64(x),
            Part::Float64(x) => self.push_float64(x),
            Part::Bool(x) => self.push_bool(x),
            Part::Text(s) => self.push_str(s),
        }
    }

    /// Appends the parts of `other` without materializing either side.
    pub fn append(&mut self, other: &AugText) -> &mut Self {
        if other.parts == 0 {
            return self;
        }
        self.touch();
        self.arena.extend_from_slice(&other.arena);
        self.parts += other.parts;
        self
    }

    pub fn concat(a: &AugText, b: &AugText) -> AugText {
        let mut out = AugText::with_capacity(a.arena.len() + b.arena.len());
        out.append(a).append(b);
        out
    }

    pub fn parts(&self) -> Parts<'_> {
        Parts { arena: &self.arena, pos: 0 }
    }

    /// The character form, computed on first use and cached.
    pub fn materialize(&self) -> &str {
        self.memo.get_or_init(|| {
            let mut out = String::with_capacity(self.arena.len() * 2);
            self.render_into(&mut out);
            out
        })
    }

    /// Appends the character form to `out` without caching it.
    pub fn render_into(&self, out: &mut String) {
        match self.memo.get() {
            Some(s) => out.push_str(s),
            None => self.parts().for_each(|p| p.render(out)),
        }
    }

    fn sole_part(&self) -> Option<Part<'_>> {
        if self.parts == 1 {
            self.parts().next()
        } else {
            None
        }
    }

    fn numeric_error(&self) -> AugTextError {
        let text = self.materialize().to_owned();
        if self.parts > 1 {
            AugTextError::NotSingleValue { parts: self.parts, text }
        } else {
            AugTextError::NotNumeric(text)
        }
    }

    /// Integer value. A sole integer part is returned as is; anything else is
    /// parsed from the character form.
    pub fn parse_int(&self) -> Result<i64, AugTextError> {
        match self.sole_part() {
            Some(Part::Int32(x)) => Ok(x as i64),
            Some(Part::Int64(x)) => Ok(x),
            _ => self.materialize().parse().map_err(|_| self.numeric_error()),
        }
    }

    pub fn parse_float(&self) -> Result<f64, AugTextError> {
        match self.sole_part() {
            Some(Part::Float64(x)) => Ok(x),
            _ => self.materialize().parse().map_err(|_| self.numeric_error()),
        }
    }

    pub fn parse_bool(&self) -> Result<bool, AugTextError> {
        match self.sole_part() {
            Some(Part::Bool(x)) => Ok(x),
            _ => match self.materialize() {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(self.numeric_error()),
            },
        }
    }

    /// Splits on `delim`.
    ///
    /// When every text part is either exactly the delimiter or free of it, and
    /// no primitive rendering can contain the delimiter, the split happens on
    /// parts and primitives pass through untouched. Otherwise the character
    /// form is split.
    pub fn split(&self, delim: char) -> Vec<AugText> {
        if !self.splits_structurally(delim) {
            return self.materialize().split(delim).map(AugText::from).collect();
        }
        let mut buf = [0u8; 4];
        let delim_str: &str = delim.encode_utf8(&mut buf);
        let mut out = Vec::new();
        let mut current = AugText::new();
        for p in self.parts() {
            match p {
                Part::Text(s) if s == delim_str => out.push(std::mem::take(&mut current)),
                other => {
                    current.push_part(other);
                }
            }
        }
        out.push(current);
        out
    }

    /// Whether [`split`](Self::split) on `delim` works on parts rather than
    /// on the character form.
    pub fn splits_structurally(&self, delim: char) -> bool {
        !self.is_materialized() && self.can_split_structurally(delim)
    }

    fn can_split_structurally(&self, delim: char) -> bool {
        // digits, signs, '.', exponent markers and the letters of
        // true/false/NaN/inf can all appear inside rendered primitives
        if delim.is_alphanumeric() || matches!(delim, '-' | '+' | '.') {
            let has_primitive = self.parts().any(|p| p.is_primitive());
            if has_primitive {
                return false;
            }
        }
        let mut buf = [0u8; 4];
        let delim_str: &str = delim.encode_utf8(&mut buf);
        self.parts().all(|p| match p {
            Part::Text(s) => s == delim_str || !s.contains(delim),
            _ => true,
        })
    }

    /// Byte-range substring; always goes through the character form.
    pub fn substring(&self, start: usize, end: usize) -> Option<AugText> {
        self.materialize().get(start..end).map(AugText::from)
    }

    pub fn char_at(&self, index: usize) -> Option<char> {
        self.materialize().chars().nth(index)
    }

    /// Byte length of the character form.
    pub fn len(&self) -> usize {
        self.materialize().len()
    }
}

pub struct Parts<'a> {
    arena: &'a [u8],
    pos: usize,
}

impl<'a> Iterator for Parts<'a> {
    type Item = Part<'a>;

    fn next(&mut self) -> Option<Part<'a>> {
        let tag = *self.arena.get(self.pos)?;
        let body = &self.arena[self.pos + 1..];
        let (part, len) = match tag {
            TAG_INT32 => (Part::Int32(i32::from_le_bytes(body[..4].try_into().unwrap())), 4),
            TAG_INT64 => (Part::Int64(i64::from_le_bytes(body[..8].try_into().unwrap())), 8),
            TAG_FLOAT64 => (Part::Float64(f64::from_le_bytes(body[..8].try_into().unwrap())), 8),
            TAG_BOOL => (Part::Bool(body[0] != 0), 1),
            TAG_TEXT => {
                let n = u32::from_le_bytes(body[..4].try_into().unwrap()) as usize;
                // SAFETY: text parts are only ever copied in from a &str by push_str
                let s = unsafe { std::str::from_utf8_unchecked(&body[4..4 + n]) };
                (Part::Text(s), 4 + n)
            }
            _ => unreachable!("corrupt arena tag {tag}"),
        };
        self.pos += 1 + len;
        Some(part)
    }
}

impl PartialEq for AugText {
    /// Structural equality over parts; floats compare bitwise.
    fn eq(&self, other: &Self) -> bool {
        self.parts == other.parts && self.arena == other.arena
    }
}

impl fmt::Debug for AugText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.parts()).finish()
    }
}

impl fmt::Display for AugText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.materialize())
    }
}

impl From<i32> for AugText {
    fn from(x: i32) -> Self {
        let mut a = AugText::with_capacity(5);
        a.push_int32(x);
        a
    }
}

impl From<i64> for AugText {
    fn from(x: i64) -> Self {
        let mut a = AugText::with_capacity(9);
        a.push_int64(x);
        a
    }
}

impl From<f64> for AugText {
    fn from(x: f64) -> Self {
        let mut a = AugText::with_capacity(9);
        a.push_float64(x);
        a
    }
}

impl From<bool> for AugText {
    fn from(x: bool) -> Self {
        let mut a = AugText::with_capacity(2);
        a.push_bool(x);
        a
    }
}

impl From<&str> for AugText {
    fn from(s: &str) -> Self {
        let mut a = AugText::with_capacity(5 + s.len());
        a.push_str(s);
        a
    }
}

impl From<String> for AugText {
    fn from(s: String) -> Self {
        AugText::from(s.as_str())
    }
}

impl From<&Value> for AugText {
    fn from(v: &Value) -> Self {
        AugText::from_value(v)
    }
}

impl Add for AugText {
    type Output = AugText;

    fn add(mut self, rhs: AugText) -> AugText {
        self.append(&rhs);
        self
    }
}

impl Add<&AugText> for AugText {
    type Output = AugText;

    fn add(mut self, rhs: &AugText) -> AugText {
        self.append(rhs);
        self
    }
}
