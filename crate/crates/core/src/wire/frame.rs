//! Length-prefixed framing: a 4-byte little-endian length, then the payload.

use std::io::{self, Read, Write};

use thiserror::Error;

use super::codec::{self, DecodeError, EncodeError, WireMessage};

/// Frames above this size are refused on read.
pub const MAX_FRAME: usize = 64 << 20;

#[derive(Debug, Error)]
pub enum WireError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("frame of {0} bytes exceeds the {MAX_FRAME}-byte limit")]
    FrameTooLarge(usize),
}

pub fn frame(payload: &[u8]) -> Result<Vec<u8>, EncodeError> {
    let len =
        u32::try_from(payload.len()).map_err(|_| EncodeError::ValueTooLarge(payload.len()))?;
    let mut out = Vec::with_capacity(4 + payload.len());
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(payload);
    Ok(out)
}

/// Reads one frame; `Ok(None)` on a clean end of stream before any byte.
pub fn read_frame<R: Read + ?Sized>(r: &mut R) -> Result<Option<Vec<u8>>, WireError> {
    let mut len = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut len[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(io::Error::from(io::ErrorKind::UnexpectedEof).into()),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let len = u32::from_le_bytes(len) as usize;
    if len > MAX_FRAME {
        return Err(WireError::FrameTooLarge(len));
    }
    let mut payload = vec![0u8; len];
    r.read_exact(&mut payload)?;
    Ok(Some(payload))
}

/// Splits a buffer of concatenated frames. Returns the payloads and the
/// unconsumed tail (an incomplete frame, if any).
pub fn split_frames(mut buf: &[u8]) -> (Vec<&[u8]>, &[u8]) {
    let mut out = Vec::new();
    while buf.len() >= 4 {
        let len = u32::from_le_bytes(buf[..4].try_into().expect("4 bytes")) as usize;
        if buf.len() - 4 < len {
            break;
        }
        out.push(&buf[4..4 + len]);
        buf = &buf[4 + len..];
    }
    (out, buf)
}

/// Encodes, frames and writes a message in one `write_all`. Returns the
/// number of bytes put on the stream.
pub fn send<W: Write + ?Sized>(w: &mut W, msg: &WireMessage) -> Result<usize, WireError> {
    let bytes = frame(&codec::encode(msg)?)?;
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(bytes.len())
}

/// Reads and decodes one message with its framed size.
pub fn recv<R: Read + ?Sized>(r: &mut R) -> Result<Option<(WireMessage, usize)>, WireError> {
    match read_frame(r)? {
        None => Ok(None),
        Some(payload) => Ok(Some((codec::decode(&payload)?, payload.len() + 4))),
    }
}
