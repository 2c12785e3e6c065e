use std::fmt;

/// One-byte type tag preceding every encoded value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Tag {
    Bool = 0x01,
    Int32 = 0x02,
    Int64 = 0x03,
    UInt32 = 0x04,
    UInt64 = 0x05,
    Float32 = 0x06,
    Float64 = 0x07,
    Str = 0x08,
    Vec = 0x09,
    Struct = 0x0A,
    Enum = 0x0B,
    Handle = 0x0C,
}

impl Tag {
    pub const ALL: [Tag; 12] = [
        Tag::Bool,
        Tag::Int32,
        Tag::Int64,
        Tag::UInt32,
        Tag::UInt64,
        Tag::Float32,
        Tag::Float64,
        Tag::Str,
        Tag::Vec,
        Tag::Struct,
        Tag::Enum,
        Tag::Handle,
    ];

    pub fn from_u8(byte: u8) -> Option<Tag> {
        Tag::ALL.get(byte.wrapping_sub(1) as usize).copied()
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Self-describing runtime value.
///
/// Equality compares floats bit-for-bit, so a value always equals its own
/// decoded copy, NaN payloads included.
#[derive(Debug, Clone)]
pub enum TypedValue {
    Bool(bool),
    Int32(i32),
    Int64(i64),
    UInt32(u32),
    UInt64(u64),
    Float32(f32),
    Float64(f64),
    Str(String),
    Vec {
        elem: Tag,
        items: Vec<TypedValue>,
    },
    Struct {
        name: String,
        fields: Vec<(String, TypedValue)>,
    },
    Enum {
        name: String,
        ordinal: i32,
    },
    Handle(u64),
}

impl TypedValue {
    pub fn tag(&self) -> Tag {
        match self {
            TypedValue::Bool(_) => Tag::Bool,
            TypedValue::Int32(_) => Tag::Int32,
            TypedValue::Int64(_) => Tag::Int64,
            TypedValue::UInt32(_) => Tag::UInt32,
            TypedValue::UInt64(_) => Tag::UInt64,
            TypedValue::Float32(_) => Tag::Float32,
            TypedValue::Float64(_) => Tag::Float64,
            TypedValue::Str(_) => Tag::Str,
            TypedValue::Vec { .. } => Tag::Vec,
            TypedValue::Struct { .. } => Tag::Struct,
            TypedValue::Enum { .. } => Tag::Enum,
            TypedValue::Handle(_) => Tag::Handle,
        }
    }

    pub fn str(s: impl Into<String>) -> Self {
        TypedValue::Str(s.into())
    }

    pub fn vec(elem: Tag, items: Vec<TypedValue>) -> Self {
        TypedValue::Vec { elem, items }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            TypedValue::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_items(&self) -> Option<&[TypedValue]> {
        match self {
            TypedValue::Vec { items, .. } => Some(items),
            _ => None,
        }
    }

    /// Field of a struct value, by name.
    pub fn field(&self, name: &str) -> Option<&TypedValue> {
        match self {
            TypedValue::Struct { fields, .. } => {
                fields.iter().find(|(n, _)| n == name).map(|(_, v)| v)
            }
            _ => None,
        }
    }

    /// Any integer-like value (including enum ordinals and handles) widened
    /// to i128.
    pub fn as_integer(&self) -> Option<i128> {
        Some(match *self {
            TypedValue::Int32(v) => v.into(),
            TypedValue::Int64(v) => v.into(),
            TypedValue::UInt32(v) => v.into(),
            TypedValue::UInt64(v) => v.into(),
            TypedValue::Enum { ordinal, .. } => ordinal.into(),
            TypedValue::Handle(v) => v.into(),
            _ => return None,
        })
    }
}

impl PartialEq for TypedValue {
    fn eq(&self, other: &Self) -> bool {
        use TypedValue::*;
        match (self, other) {
            (Bool(a), Bool(b)) => a == b,
            (Int32(a), Int32(b)) => a == b,
            (Int64(a), Int64(b)) => a == b,
            (UInt32(a), UInt32(b)) => a == b,
            (UInt64(a), UInt64(b)) => a == b,
            (Float32(a), Float32(b)) => a.to_bits() == b.to_bits(),
            (Float64(a), Float64(b)) => a.to_bits() == b.to_bits(),
            (Str(a), Str(b)) => a == b,
            (
                Vec {
                    elem: ea,
                    items: ia,
                },
                Vec {
                    elem: eb,
                    items: ib,
                },
            ) => ea == eb && ia == ib,
            (
                Struct {
                    name: na,
                    fields: fa,
                },
                Struct {
                    name: nb,
                    fields: fb,
                },
            ) => na == nb && fa == fb,
            (
                Enum {
                    name: na,
                    ordinal: oa,
                },
                Enum {
                    name: nb,
                    ordinal: ob,
                },
            ) => na == nb && oa == ob,
            (Handle(a), Handle(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for TypedValue {}

impl fmt::Display for TypedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypedValue::Bool(v) => write!(f, "{v}"),
            TypedValue::Int32(v) => write!(f, "{v}"),
            TypedValue::Int64(v) => write!(f, "{v}"),
            TypedValue::UInt32(v) => write!(f, "{v}"),
            TypedValue::UInt64(v) => write!(f, "{v}"),
            TypedValue::Float32(v) => write!(f, "{v:?}"),
            TypedValue::Float64(v) => write!(f, "{v:?}"),
            TypedValue::Str(s) => write!(f, "{s:?}"),
            TypedValue::Vec { items, .. } => {
                f.write_str("[")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str("]")
            }
            TypedValue::Struct { fields, .. } => {
                f.write_str("{")?;
                for (i, (name, value)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{name}: {value}")?;
                }
                f.write_str("}")
            }
            TypedValue::Enum { name, ordinal } => {
                let short = name.rsplit("::").next().unwrap_or(name);
                write!(f, "{short}({ordinal})")
            }
            TypedValue::Handle(h) => write!(f, "handle#{h}"),
        }
    }
}
