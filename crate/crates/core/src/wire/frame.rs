use std::io::{Read, Write};

use super::header::read_full;
use super::WireError;

/// Bytes of envelope around each frame payload: type u8 + length u32.
pub const FRAME_OVERHEAD: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum FrameType {
    Data = 0,
    KeyHeader = 1,
    KeyExtend = 2,
    VerbatimRow = 3,
    BitmapRow = 4,
    EndOfStream = 5,
}

impl FrameType {
    pub fn from_code(code: u8) -> Result<Self, WireError> {
        Ok(match code {
            0 => FrameType::Data,
            1 => FrameType::KeyHeader,
            2 => FrameType::KeyExtend,
            3 => FrameType::VerbatimRow,
            4 => FrameType::BitmapRow,
            5 => FrameType::EndOfStream,
            other => return Err(WireError::UnknownFrameType(other)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub frame_type: FrameType,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(frame_type: FrameType, payload: Vec<u8>) -> Self {
        Frame { frame_type, payload }
    }

    pub fn end_of_stream() -> Self {
        Frame { frame_type: FrameType::EndOfStream, payload: Vec::new() }
    }

    pub fn encoded_len(&self) -> usize {
        FRAME_OVERHEAD + self.payload.len()
    }
}

/// Writes one frame, returning the number of bytes written.
pub fn write_frame<W: Write>(w: &mut W, frame_type: FrameType, payload: &[u8]) -> Result<usize, WireError> {
    if payload.len() > u32::MAX as usize {
        return Err(WireError::FrameTooLarge(payload.len()));
    }
    if frame_type == FrameType::EndOfStream && !payload.is_empty() {
        return Err(WireError::EndOfStreamPayload(payload.len()));
    }
    let mut envelope = [0u8; FRAME_OVERHEAD];
    envelope[0] = frame_type as u8;
    envelope[1..].copy_from_slice(&(payload.len() as u32).to_le_bytes());
    w.write_all(&envelope)?;
    w.write_all(payload)?;
    Ok(FRAME_OVERHEAD + payload.len())
}

/// Reads one frame. A stream that ends anywhere, including between frames,
/// yields [`WireError::PrematureClose`]: every stream must end with `END_OF_STREAM`.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Frame, WireError> {
    let mut envelope = [0u8; FRAME_OVERHEAD];
    read_full(r, &mut envelope)?;
    let frame_type = FrameType::from_code(envelope[0])?;
    let len = u32::from_le_bytes(envelope[1..].try_into().unwrap()) as usize;
    if frame_type == FrameType::EndOfStream && len != 0 {
        return Err(WireError::EndOfStreamPayload(len));
    }
    // Grow incrementally so a corrupted length cannot force a 4 GiB allocation up front.
    let mut payload = Vec::with_capacity(len.min(1 << 20));
    let got = r.take(len as u64).read_to_end(&mut payload)?;
    if got != len {
        return Err(WireError::PrematureClose);
    }
    Ok(Frame { frame_type, payload })
}
