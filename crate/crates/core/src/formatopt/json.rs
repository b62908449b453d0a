//! Key-header deduplication for streams of flat JSON objects.
//!
//! The first object's keys go out once in a `KEY_HEADER` frame. Objects with
//! exactly those keys travel as bare values, batched into `DATA` frames. An
//! object that adds keys after the header keys extends the header
//! (`KEY_EXTEND`, one frame per new key) and is sent as a `BITMAP_ROW`; so is
//! an object carrying only some of the header keys. Anything else (disjoint
//! keys, reordered keys, nested values) is sent verbatim with its keys.
//!
//! Row value encoding: a tag byte, then
//! `0` null, `1` false, `2` true, `3` signed integer (zigzag LEB128),
//! `4` unsigned integer above `i64::MAX` (LEB128), `5` float64 (8 bytes LE),
//! `6` string (LEB128 length + UTF-8).

use serde_json::{Map, Number, Value as Json};

use super::FormatError;
use crate::wire::{Frame, FrameType};

const TAG_NULL: u8 = 0;
const TAG_FALSE: u8 = 1;
const TAG_TRUE: u8 = 2;
const TAG_INT: u8 = 3;
const TAG_UINT: u8 = 4;
const TAG_FLOAT: u8 = 5;
const TAG_STRING: u8 = 6;

/// Keys transmitted once per stream, in first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyHeader {
    pub keys: Vec<String>,
    /// Whether any key was appended after the header was first sent.
    pub extended: bool,
}

impl KeyHeader {
    fn position(&self, key: &str) -> Option<usize> {
        self.keys.iter().position(|k| k == key)
    }

    fn bitmap_len(&self) -> usize {
        self.keys.len().div_ceil(8)
    }
}

enum Shape {
    Bare,
    Bitmap { new_keys: Vec<String> },
    Verbatim,
}

pub struct JsonDedupEncoder {
    header: Option<KeyHeader>,
    pending: Vec<u8>,
    pending_rows: usize,
    block_rows: usize,
}

impl Default for JsonDedupEncoder {
    fn default() -> Self {
        JsonDedupEncoder::new(4096)
    }
}

impl JsonDedupEncoder {
    pub fn new(block_rows: usize) -> Self {
        JsonDedupEncoder { header: None, pending: Vec::new(), pending_rows: 0, block_rows: block_rows.max(1) }
    }

    pub fn header(&self) -> Option<&KeyHeader> {
        self.header.as_ref()
    }

    pub fn encode(&mut self, doc: &Json, out: &mut Vec<Frame>) -> Result<(), FormatError> {
        let obj = doc.as_object().ok_or(FormatError::NotAnObject)?;
        if obj.values().any(|v| v.is_object() || v.is_array()) {
            self.flush(out);
            out.push(Frame::new(FrameType::VerbatimRow, serde_json::to_vec(doc)?));
            return Ok(());
        }
        let Some(header) = &self.header else {
            let header = KeyHeader { keys: obj.keys().cloned().collect(), extended: false };
            out.push(Frame::new(FrameType::KeyHeader, encode_key_header(&header.keys)));
            self.header = Some(header);
            return self.push_bare(obj, out);
        };
        match classify(header, obj) {
            Shape::Bare => self.push_bare(obj, out),
            Shape::Bitmap { new_keys } => {
                self.flush(out);
                let header = self.header.as_mut().unwrap();
                for k in new_keys {
                    out.push(Frame::new(FrameType::KeyExtend, k.as_bytes().to_vec()));
                    header.keys.push(k);
                    header.extended = true;
                }
                let mut payload = vec![0u8; header.bitmap_len()];
                for (i, k) in header.keys.iter().enumerate() {
                    if let Some(v) = obj.get(k) {
                        payload[i / 8] |= 1 << (i % 8);
                        put_json_value(&mut payload, v);
                    }
                }
                out.push(Frame::new(FrameType::BitmapRow, payload));
                Ok(())
            }
            Shape::Verbatim => {
                self.flush(out);
                out.push(Frame::new(FrameType::VerbatimRow, serde_json::to_vec(doc)?));
                Ok(())
            }
        }
    }

    fn push_bare(&mut self, obj: &Map<String, Json>, out: &mut Vec<Frame>) -> Result<(), FormatError> {
        for v in obj.values() {
            put_json_value(&mut self.pending, v);
        }
        self.pending_rows += 1;
        if self.pending_rows >= self.block_rows {
            self.flush(out);
        }
        Ok(())
    }

    /// Emits buffered bare rows as one `DATA` frame.
    pub fn flush(&mut self, out: &mut Vec<Frame>) {
        if self.pending_rows == 0 {
            return;
        }
        let mut payload = Vec::with_capacity(self.pending.len() + 5);
        put_varint(&mut payload, self.pending_rows as u64);
        payload.append(&mut self.pending);
        self.pending_rows = 0;
        out.push(Frame::new(FrameType::Data, payload));
    }
}

fn classify(header: &KeyHeader, obj: &Map<String, Json>) -> Shape {
    let keys: Vec<&String> = obj.keys().collect();
    if keys.len() == header.keys.len() && keys.iter().zip(&header.keys).all(|(a, b)| *a == b) {
        return Shape::Bare;
    }
    let positions: Vec<Option<usize>> = keys.iter().map(|k| header.position(k)).collect();
    let known = positions.iter().filter(|p| p.is_some()).count();
    if known == 0 && !keys.is_empty() {
        return Shape::Verbatim;
    }
    // known keys must come first, in header order, for the bitmap row to
    // decode back to the same key order
    let in_order = positions[..known].iter().all(Option::is_some) && positions[..known].windows(2).all(|w| w[0] < w[1]);
    if !in_order {
        return Shape::Verbatim;
    }
    if known == keys.len() {
        return Shape::Bitmap { new_keys: Vec::new() };
    }
    if known == header.keys.len() {
        return Shape::Bitmap { new_keys: keys[known..].iter().map(|k| (*k).clone()).collect() };
    }
    Shape::Verbatim
}

fn encode_key_header(keys: &[String]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&(keys.len() as u16).to_le_bytes());
    for k in keys {
        crate::wire::put_str_u16(&mut out, k);
    }
    out
}

fn put_varint(out: &mut Vec<u8>, mut x: u64) {
    while x >= 0x80 {
        out.push((x as u8) | 0x80);
        x >>= 7;
    }
    out.push(x as u8);
}

fn put_json_value(out: &mut Vec<u8>, v: &Json) {
    match v {
        Json::Null => out.push(TAG_NULL),
        Json::Bool(false) => out.push(TAG_FALSE),
        Json::Bool(true) => out.push(TAG_TRUE),
        Json::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push(TAG_INT);
                put_varint(out, ((i << 1) ^ (i >> 63)) as u64);
            } else if let Some(u) = n.as_u64() {
                out.push(TAG_UINT);
                put_varint(out, u);
            } else {
                out.push(TAG_FLOAT);
                out.extend_from_slice(&n.as_f64().unwrap_or(f64::NAN).to_le_bytes());
            }
        }
        Json::String(s) => {
            out.push(TAG_STRING);
            put_varint(out, s.len() as u64);
            out.extend_from_slice(s.as_bytes());
        }
        Json::Array(_) | Json::Object(_) => unreachable!("nested documents are sent verbatim"),
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn bad(msg: &str) -> FormatError {
        FormatError::BadPayload(msg.to_owned())
    }

    fn byte(&mut self) -> Result<u8, FormatError> {
        let b = *self.buf.get(self.pos).ok_or_else(|| Self::bad("truncated"))?;
        self.pos += 1;
        Ok(b)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        if self.buf.len() - self.pos < n {
            return Err(Self::bad("truncated"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn varint(&mut self) -> Result<u64, FormatError> {
        let mut x = 0u64;
        for shift in (0..64).step_by(7) {
            let b = self.byte()?;
            x |= u64::from(b & 0x7f) << shift;
            if b & 0x80 == 0 {
                return Ok(x);
            }
        }
        Err(Self::bad("varint overflow"))
    }

    fn value(&mut self) -> Result<Json, FormatError> {
        Ok(match self.byte()? {
            TAG_NULL => Json::Null,
            TAG_FALSE => Json::Bool(false),
            TAG_TRUE => Json::Bool(true),
            TAG_INT => {
                let z = self.varint()?;
                Json::from(((z >> 1) as i64) ^ -((z & 1) as i64))
            }
            TAG_UINT => Json::from(self.varint()?),
            TAG_FLOAT => {
                let x = f64::from_le_bytes(self.take(8)?.try_into().unwrap());
                Json::Number(Number::from_f64(x).ok_or_else(|| Self::bad("non-finite float"))?)
            }
            TAG_STRING => {
                let n = self.varint()? as usize;
                let s = std::str::from_utf8(self.take(n)?).map_err(|_| Self::bad("invalid UTF-8"))?;
                Json::String(s.to_owned())
            }
            t => return Err(FormatError::BadPayload(format!("unknown value tag {t}"))),
        })
    }

    fn done(&self) -> Result<(), FormatError> {
        if self.pos == self.buf.len() {
            Ok(())
        } else {
            Err(Self::bad("trailing bytes"))
        }
    }
}

/// Rebuilds the object stream from deduplicated frames.
#[derive(Default)]
pub struct JsonDedupDecoder {
    header: Option<KeyHeader>,
    finished: bool,
}

impl JsonDedupDecoder {
    pub fn new() -> Self {
        JsonDedupDecoder::default()
    }

    pub fn header(&self) -> Option<&KeyHeader> {
        self.header.as_ref()
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn decode(&mut self, frame: &Frame, out: &mut Vec<Json>) -> Result<(), FormatError> {
        if self.finished {
            return Err(FormatError::AfterEndOfStream);
        }
        let mut c = Cursor { buf: &frame.payload, pos: 0 };
        match frame.frame_type {
            FrameType::KeyHeader => {
                if self.header.is_some() {
                    return Err(FormatError::DuplicateKeyHeader);
                }
                let mut r = crate::wire::ByteReader::new(&frame.payload);
                let n = r.u16()? as usize;
                let mut keys = Vec::with_capacity(n);
                for _ in 0..n {
                    keys.push(r.str_u16("key")?.to_owned());
                }
                r.finish()?;
                self.header = Some(KeyHeader { keys, extended: false });
            }
            FrameType::KeyExtend => {
                let header = self.header.as_mut().ok_or(FormatError::RowBeforeHeader("KEY_EXTEND"))?;
                let key = std::str::from_utf8(&frame.payload)
                    .map_err(|_| FormatError::BadPayload("invalid UTF-8 key".into()))?;
                if header.position(key).is_some() {
                    return Err(FormatError::DuplicateKey(key.to_owned()));
                }
                header.keys.push(key.to_owned());
                header.extended = true;
            }
            FrameType::Data => {
                let header = self.header.as_ref().ok_or(FormatError::RowBeforeHeader("DATA"))?;
                let rows = c.varint()?;
                for _ in 0..rows {
                    let mut obj = Map::with_capacity(header.keys.len());
                    for k in &header.keys {
                        obj.insert(k.clone(), c.value()?);
                    }
                    out.push(Json::Object(obj));
                }
                c.done()?;
            }
            FrameType::BitmapRow => {
                let header = self.header.as_ref().ok_or(FormatError::RowBeforeHeader("BITMAP_ROW"))?;
                let n = header.bitmap_len();
                if frame.payload.len() < n {
                    return Err(FormatError::BitmapMismatch { expected: n, found: frame.payload.len() });
                }
                let bitmap = c.take(n)?;
                let k = header.keys.len();
                if k % 8 != 0 && n > 0 && bitmap[n - 1] >> (k % 8) != 0 {
                    return Err(FormatError::BitmapMismatch { expected: n, found: n });
                }
                let mut obj = Map::new();
                for (i, key) in header.keys.iter().enumerate() {
                    if bitmap[i / 8] & (1 << (i % 8)) != 0 {
                        obj.insert(key.clone(), c.value()?);
                    }
                }
                c.done()?;
                out.push(Json::Object(obj));
            }
            FrameType::VerbatimRow => out.push(serde_json::from_slice(&frame.payload)?),
            FrameType::EndOfStream => self.finished = true,
        }
        Ok(())
    }
}

/// Encodes a whole document stream, ending with `END_OF_STREAM`.
pub fn json_dedup_encode<'a, I>(docs: I) -> Result<Vec<Frame>, FormatError>
where
    I: IntoIterator<Item = &'a Json>,
{
    let mut enc = JsonDedupEncoder::default();
    let mut out = Vec::new();
    for d in docs {
        enc.encode(d, &mut out)?;
    }
    enc.flush(&mut out);
    out.push(Frame::end_of_stream());
    Ok(out)
}

pub fn json_dedup_decode<'a, I>(frames: I) -> Result<Vec<Json>, FormatError>
where
    I: IntoIterator<Item = &'a Frame>,
{
    let mut dec = JsonDedupDecoder::new();
    let mut out = Vec::new();
    for f in frames {
        dec.decode(f, &mut out)?;
    }
    Ok(out)
}
