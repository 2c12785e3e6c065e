use thiserror::Error;

use super::value::{Tag, TypedValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum MessageKind {
    Call = 1,
    Return = 2,
    Oneway = 3,
    Event = 4,
    Error = 5,
    Hello = 6,
    Load = 7,
    Ok = 8,
}

impl MessageKind {
    pub fn from_u8(byte: u8) -> Option<MessageKind> {
        use MessageKind::*;
        [Call, Return, Oneway, Event, Error, Hello, Load, Ok]
            .get(byte.wrapping_sub(1) as usize)
            .copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireMessage {
    pub kind: MessageKind,
    pub correlation_id: u64,
    pub fqname: String,
    pub method: String,
    pub values: Vec<TypedValue>,
}

impl WireMessage {
    pub fn new(
        kind: MessageKind,
        correlation_id: u64,
        fqname: impl Into<String>,
        method: impl Into<String>,
        values: Vec<TypedValue>,
    ) -> Self {
        Self {
            kind,
            correlation_id,
            fqname: fqname.into(),
            method: method.into(),
            values,
        }
    }

    /// An ERROR reply carrying `[Str(code), Str(detail)]`.
    pub fn error(correlation_id: u64, code: &str, detail: impl Into<String>) -> Self {
        Self::new(
            MessageKind::Error,
            correlation_id,
            "",
            "",
            vec![TypedValue::str(code), TypedValue::Str(detail.into())],
        )
    }

    /// Splits an ERROR message into (code, detail).
    pub fn error_parts(&self) -> Option<(&str, &str)> {
        match (self.kind, self.values.as_slice()) {
            (MessageKind::Error, [TypedValue::Str(code), TypedValue::Str(detail)]) => {
                Some((code, detail))
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("length {0} does not fit in 32 bits")]
    ValueTooLarge(usize),
    #[error("vector declared {expected} elements but holds a {found}")]
    ElementTagMismatch { expected: Tag, found: Tag },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("message truncated at byte {at}: needed {needed} more")]
    TruncatedMessage { at: usize, needed: usize },
    #[error("unknown value tag 0x{0:02x}")]
    UnknownTag(u8),
    #[error("unknown message kind 0x{0:02x}")]
    UnknownKind(u8),
    #[error("{0} trailing bytes after message")]
    TrailingBytes(usize),
    #[error("invalid UTF-8 string at byte {at}")]
    InvalidUtf8 { at: usize },
    #[error("invalid bool byte 0x{0:02x}")]
    InvalidBool(u8),
    #[error("values nested deeper than {MAX_DEPTH}")]
    TooDeep,
}

/// Nesting bound for decoded values; keeps hostile input off the stack.
pub const MAX_DEPTH: usize = 64;

fn len_u32(len: usize) -> Result<u32, EncodeError> {
    u32::try_from(len).map_err(|_| EncodeError::ValueTooLarge(len))
}

fn put_str(out: &mut Vec<u8>, s: &str) -> Result<(), EncodeError> {
    out.extend_from_slice(&len_u32(s.len())?.to_le_bytes());
    out.extend_from_slice(s.as_bytes());
    Ok(())
}

/// Writes a value's body: everything after the tag byte.
fn put_payload(out: &mut Vec<u8>, v: &TypedValue) -> Result<(), EncodeError> {
    match v {
        TypedValue::Bool(b) => out.push(u8::from(*b)),
        TypedValue::Int32(x) => out.extend_from_slice(&x.to_le_bytes()),
        TypedValue::Int64(x) => out.extend_from_slice(&x.to_le_bytes()),
        TypedValue::UInt32(x) => out.extend_from_slice(&x.to_le_bytes()),
        TypedValue::UInt64(x) => out.extend_from_slice(&x.to_le_bytes()),
        TypedValue::Float32(x) => out.extend_from_slice(&x.to_le_bytes()),
        TypedValue::Float64(x) => out.extend_from_slice(&x.to_le_bytes()),
        TypedValue::Str(s) => put_str(out, s)?,
        TypedValue::Vec { elem, items } => {
            out.push(*elem as u8);
            out.extend_from_slice(&len_u32(items.len())?.to_le_bytes());
            for item in items {
                if item.tag() != *elem {
                    return Err(EncodeError::ElementTagMismatch {
                        expected: *elem,
                        found: item.tag(),
                    });
                }
                put_payload(out, item)?;
            }
        }
        TypedValue::Struct { name, fields } => {
            put_str(out, name)?;
            out.extend_from_slice(&len_u32(fields.len())?.to_le_bytes());
            for (fname, value) in fields {
                put_str(out, fname)?;
                encode_value_into(out, value)?;
            }
        }
        TypedValue::Enum { name, ordinal } => {
            put_str(out, name)?;
            out.extend_from_slice(&ordinal.to_le_bytes());
        }
        TypedValue::Handle(h) => out.extend_from_slice(&h.to_le_bytes()),
    }
    Ok(())
}

pub fn encode_value_into(out: &mut Vec<u8>, v: &TypedValue) -> Result<(), EncodeError> {
    out.push(v.tag() as u8);
    put_payload(out, v)
}

pub fn encode_value(v: &TypedValue) -> Result<Vec<u8>, EncodeError> {
    let mut out = Vec::new();
    encode_value_into(&mut out, v)?;
    Ok(out)
}

/// Encodes a message payload (no length prefix).
pub fn encode(msg: &WireMessage) -> Result<Vec<u8>, EncodeError> {
    let mut out = Vec::with_capacity(32 + msg.fqname.len() + msg.method.len());
    out.push(msg.kind as u8);
    out.extend_from_slice(&msg.correlation_id.to_le_bytes());
    put_str(&mut out, &msg.fqname)?;
    put_str(&mut out, &msg.method)?;
    out.extend_from_slice(&len_u32(msg.values.len())?.to_le_bytes());
    for v in &msg.values {
        encode_value_into(&mut out, v)?;
    }
    Ok(out)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        let rest = self.buf.len() - self.pos;
        if rest < n {
            return Err(DecodeError::TruncatedMessage {
                at: self.pos,
                needed: n - rest,
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], DecodeError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, DecodeError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn string(&mut self) -> Result<String, DecodeError> {
        let len = self.u32()? as usize;
        let at = self.pos;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| DecodeError::InvalidUtf8 { at })
    }

    fn tag(&mut self) -> Result<Tag, DecodeError> {
        let b = self.u8()?;
        Tag::from_u8(b).ok_or(DecodeError::UnknownTag(b))
    }

    fn value(&mut self, depth: usize) -> Result<TypedValue, DecodeError> {
        let tag = self.tag()?;
        self.payload(tag, depth)
    }

    fn payload(&mut self, tag: Tag, depth: usize) -> Result<TypedValue, DecodeError> {
        if depth > MAX_DEPTH {
            return Err(DecodeError::TooDeep);
        }
        Ok(match tag {
            Tag::Bool => match self.u8()? {
                0 => TypedValue::Bool(false),
                1 => TypedValue::Bool(true),
                b => return Err(DecodeError::InvalidBool(b)),
            },
            Tag::Int32 => TypedValue::Int32(i32::from_le_bytes(self.array()?)),
            Tag::Int64 => TypedValue::Int64(i64::from_le_bytes(self.array()?)),
            Tag::UInt32 => TypedValue::UInt32(u32::from_le_bytes(self.array()?)),
            Tag::UInt64 => TypedValue::UInt64(u64::from_le_bytes(self.array()?)),
            Tag::Float32 => TypedValue::Float32(f32::from_le_bytes(self.array()?)),
            Tag::Float64 => TypedValue::Float64(f64::from_le_bytes(self.array()?)),
            Tag::Str => TypedValue::Str(self.string()?),
            Tag::Vec => {
                let elem = self.tag()?;
                let count = self.u32()? as usize;
                // Every element occupies at least one byte, so the remaining
                // length bounds the allocation.
                let mut items = Vec::with_capacity(count.min(self.buf.len() - self.pos));
                for _ in 0..count {
                    items.push(self.payload(elem, depth + 1)?);
                }
                TypedValue::Vec { elem, items }
            }
            Tag::Struct => {
                let name = self.string()?;
                let count = self.u32()? as usize;
                let mut fields = Vec::with_capacity(count.min(self.buf.len() - self.pos));
                for _ in 0..count {
                    let fname = self.string()?;
                    fields.push((fname, self.value(depth + 1)?));
                }
                TypedValue::Struct { name, fields }
            }
            Tag::Enum => {
                let name = self.string()?;
                TypedValue::Enum {
                    name,
                    ordinal: i32::from_le_bytes(self.array()?),
                }
            }
            Tag::Handle => TypedValue::Handle(u64::from_le_bytes(self.array()?)),
        })
    }

    fn finish(&self) -> Result<(), DecodeError> {
        match self.buf.len() - self.pos {
            0 => Ok(()),
            n => Err(DecodeError::TrailingBytes(n)),
        }
    }
}

pub fn decode_value(bytes: &[u8]) -> Result<TypedValue, DecodeError> {
    let mut c = Cursor { buf: bytes, pos: 0 };
    let v = c.value(0)?;
    c.finish()?;
    Ok(v)
}

/// Decodes one complete message payload.
pub fn decode(bytes: &[u8]) -> Result<WireMessage, DecodeError> {
    let mut c = Cursor { buf: bytes, pos: 0 };
    let kind_byte = c.u8()?;
    let kind = MessageKind::from_u8(kind_byte).ok_or(DecodeError::UnknownKind(kind_byte))?;
    let correlation_id = u64::from_le_bytes(c.array()?);
    let fqname = c.string()?;
    let method = c.string()?;
    let count = c.u32()? as usize;
    let mut values = Vec::with_capacity(count.min(bytes.len()));
    for _ in 0..count {
        values.push(c.value(0)?);
    }
    c.finish()?;
    Ok(WireMessage {
        kind,
        correlation_id,
        fqname,
        method,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn int32_layout() {
        assert_eq!(
            encode_value(&TypedValue::Int32(5)).unwrap(),
            [0x02, 5, 0, 0, 0]
        );
    }

    #[test]
    fn vec_int32_layout() {
        let v = TypedValue::vec(Tag::Int32, vec![TypedValue::Int32(1), TypedValue::Int32(2)]);
        assert_eq!(
            encode_value(&v).unwrap(),
            [0x09, 0x02, 2, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0]
        );
    }

    #[test]
    fn message_header_layout() {
        let m = WireMessage::new(
            MessageKind::Call,
            0x0102,
            "a",
            "bc",
            vec![TypedValue::Bool(true)],
        );
        assert_eq!(
            encode(&m).unwrap(),
            [
                1, 0x02, 0x01, 0, 0, 0, 0, 0, 0, // kind, correlation id
                1, 0, 0, 0, b'a', // fqname
                2, 0, 0, 0, b'b', b'c', // method
                1, 0, 0, 0, // value count
                0x01, 1, // Bool(true)
            ]
        );
    }

    #[test]
    fn struct_and_enum_layout() {
        let v = TypedValue::Struct {
            name: "S".into(),
            fields: vec![(
                "e".into(),
                TypedValue::Enum {
                    name: "E".into(),
                    ordinal: -1,
                },
            )],
        };
        assert_eq!(
            encode_value(&v).unwrap(),
            [
                0x0A, 1, 0, 0, 0, b'S', 1, 0, 0, 0, // name, field count
                1, 0, 0, 0, b'e', // field name
                0x0B, 1, 0, 0, 0, b'E', 0xff, 0xff, 0xff, 0xff,
            ]
        );
    }

    #[test]
    fn mixed_vector_is_rejected() {
        let v = TypedValue::vec(Tag::Int32, vec![TypedValue::Int64(1)]);
        assert_eq!(
            encode_value(&v),
            Err(EncodeError::ElementTagMismatch {
                expected: Tag::Int32,
                found: Tag::Int64
            })
        );
    }

    #[test]
    fn oversized_length_is_rejected() {
        assert_eq!(len_u32(u32::MAX as usize), Ok(u32::MAX));
        assert_eq!(
            len_u32(u32::MAX as usize + 1),
            Err(EncodeError::ValueTooLarge(1 << 32))
        );
    }

    #[test]
    fn decode_errors() {
        assert_eq!(
            decode_value(&[0x02, 5, 0]),
            Err(DecodeError::TruncatedMessage { at: 1, needed: 2 })
        );
        assert_eq!(decode_value(&[0x0D]), Err(DecodeError::UnknownTag(0x0D)));
        assert_eq!(
            decode_value(&[0x02, 5, 0, 0, 0, 9]),
            Err(DecodeError::TrailingBytes(1))
        );
        assert_eq!(decode_value(&[0x01, 2]), Err(DecodeError::InvalidBool(2)));
        assert_eq!(decode(&[0x09]), Err(DecodeError::UnknownKind(9)));
        assert_eq!(
            decode_value(&[0x08, 1, 0, 0, 0, 0xff]),
            Err(DecodeError::InvalidUtf8 { at: 5 })
        );
    }

    #[test]
    fn deep_nesting_is_bounded() {
        let mut bytes = vec![0x09];
        for _ in 0..200 {
            bytes.extend_from_slice(&[0x09, 1, 0, 0, 0]);
        }
        assert_eq!(decode_value(&bytes), Err(DecodeError::TooDeep));
    }

    #[test]
    fn huge_count_does_not_preallocate() {
        assert!(matches!(
            decode_value(&[0x09, 0x02, 0xff, 0xff, 0xff, 0xff]),
            Err(DecodeError::TruncatedMessage { .. })
        ));
    }
}
