//! Values written by hand: `name=value` command-line tokens and value
//! documents in block text.
//!
//! A token covers scalars, strings, enums (by enumerator name or number)
//! and flat vectors of those, comma-separated. A value document has one
//! entry per variable; vectors are blocks of repeated `item` entries and
//! structs are blocks keyed by field name.

use thiserror::Error;

use crate::blocktext::{self, Block, Value};
use crate::idl::Scalar;
use crate::ir::{VarSpec, VarType};

use super::conform::tag_for;
use super::value::TypedValue;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValueTextError {
    #[error("`{0}` is not of the form name=value")]
    NotAnAssignment(String),
    #[error("no argument named `{0}`")]
    UnknownName(String),
    #[error("argument `{0}` given twice")]
    Duplicate(String),
    #[error("missing argument `{0}`")]
    Missing(String),
    #[error("{path}: cannot read `{text}` as {expected}")]
    BadValue {
        path: String,
        text: String,
        expected: String,
    },
    #[error("{0}: structured values need a value file")]
    NeedsFile(String),
    #[error(transparent)]
    Syntax(#[from] blocktext::SyntaxError),
}

fn bad(path: &str, text: &str, expected: impl Into<String>) -> ValueTextError {
    ValueTextError::BadValue {
        path: path.to_string(),
        text: text.to_string(),
        expected: expected.into(),
    }
}

fn parse_int<T: TryFrom<i128>>(
    path: &str,
    text: &str,
    expected: &str,
) -> Result<T, ValueTextError> {
    let (neg, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let magnitude = match digits
        .strip_prefix("0x")
        .or_else(|| digits.strip_prefix("0X"))
    {
        Some(hex) => i128::from_str_radix(hex, 16),
        None => digits.parse::<i128>(),
    }
    .map_err(|_| bad(path, text, expected))?;
    let n = if neg { -magnitude } else { magnitude };
    T::try_from(n).map_err(|_| bad(path, text, expected))
}

fn scalar_from_text(path: &str, text: &str, s: Scalar) -> Result<TypedValue, ValueTextError> {
    let expected = s.as_str();
    Ok(match s {
        Scalar::Bool => match text {
            "true" => TypedValue::Bool(true),
            "false" => TypedValue::Bool(false),
            _ => return Err(bad(path, text, expected)),
        },
        Scalar::Int32 => TypedValue::Int32(parse_int(path, text, expected)?),
        Scalar::Int64 => TypedValue::Int64(parse_int(path, text, expected)?),
        Scalar::UInt32 => TypedValue::UInt32(parse_int(path, text, expected)?),
        Scalar::UInt64 => TypedValue::UInt64(parse_int(path, text, expected)?),
        Scalar::Float => TypedValue::Float32(text.parse().map_err(|_| bad(path, text, expected))?),
        Scalar::Double => TypedValue::Float64(text.parse().map_err(|_| bad(path, text, expected))?),
    })
}

/// Reads one leaf (non-vector, non-struct) value.
fn leaf_from_text(path: &str, text: &str, ty: &VarType) -> Result<TypedValue, ValueTextError> {
    match ty {
        VarType::Scalar(s) => scalar_from_text(path, text, *s),
        VarType::String => Ok(TypedValue::Str(text.to_string())),
        VarType::Enum(e) => {
            let value = match e.enumerators.iter().find(|(n, _)| n == text) {
                Some((_, v)) => *v,
                None => parse_int::<i64>(path, text, &e.name)?,
            };
            let ordinal = i32::try_from(value).map_err(|_| bad(path, text, &e.name))?;
            Ok(TypedValue::Enum {
                name: e.name.clone(),
                ordinal,
            })
        }
        VarType::Interface(fq) => Ok(TypedValue::Handle(parse_int(path, text, &fq.to_string())?)),
        VarType::Vector(_) | VarType::Struct(_) => Err(ValueTextError::NeedsFile(path.to_string())),
    }
}

/// Coerces the text after `name=` to `ty`.
pub fn value_from_token(
    path: &str,
    text: &str,
    ty: &VarType,
) -> Result<TypedValue, ValueTextError> {
    match ty {
        VarType::Vector(elem) if !matches!(**elem, VarType::Vector(_) | VarType::Struct(_)) => {
            let items = if text.is_empty() {
                vec![]
            } else {
                text.split(',')
                    .enumerate()
                    .map(|(i, part)| leaf_from_text(&format!("{path}[{i}]"), part.trim(), elem))
                    .collect::<Result<_, _>>()?
            };
            Ok(TypedValue::Vec {
                elem: tag_for(elem),
                items,
            })
        }
        _ => leaf_from_text(path, text, ty),
    }
}

/// Builds an argument list from `name=value` tokens. Every variable must be
/// given exactly once; order does not matter.
pub fn values_from_tokens<S: AsRef<str>>(
    tokens: &[S],
    vars: &[VarSpec],
) -> Result<Vec<TypedValue>, ValueTextError> {
    let mut slots: Vec<Option<TypedValue>> = vec![None; vars.len()];
    for token in tokens {
        let token = token.as_ref();
        let (name, text) = token
            .split_once('=')
            .ok_or_else(|| ValueTextError::NotAnAssignment(token.to_string()))?;
        let i = vars
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| ValueTextError::UnknownName(name.to_string()))?;
        if slots[i].is_some() {
            return Err(ValueTextError::Duplicate(name.to_string()));
        }
        slots[i] = Some(value_from_token(name, text, &vars[i].ty)?);
    }
    slots
        .into_iter()
        .zip(vars)
        .map(|(slot, var)| slot.ok_or_else(|| ValueTextError::Missing(var.name.clone())))
        .collect()
}

fn from_block_value(path: &str, value: &Value, ty: &VarType) -> Result<TypedValue, ValueTextError> {
    match (ty, value) {
        (VarType::String, Value::Str(s)) => Ok(TypedValue::Str(s.clone())),
        (VarType::String, Value::Token(t)) => Err(bad(path, t, "a quoted string")),
        (VarType::Vector(elem), Value::Block(b)) => {
            let mut items = Vec::new();
            for (i, (key, v)) in b.entries.iter().enumerate() {
                if key != "item" {
                    return Err(ValueTextError::UnknownName(format!("{path}.{key}")));
                }
                items.push(from_block_value(&format!("{path}[{i}]"), v, elem)?);
            }
            Ok(TypedValue::Vec {
                elem: tag_for(elem),
                items,
            })
        }
        (VarType::Struct(s), Value::Block(b)) => {
            for key in b.keys() {
                if !s.fields.iter().any(|f| f.name == key) {
                    return Err(ValueTextError::UnknownName(format!("{path}.{key}")));
                }
            }
            let fields = s
                .fields
                .iter()
                .map(|f| {
                    let fpath = format!("{path}.{}", f.name);
                    let mut given = b.get_all(&f.name);
                    let v = given
                        .next()
                        .ok_or_else(|| ValueTextError::Missing(fpath.clone()))?;
                    if given.next().is_some() {
                        return Err(ValueTextError::Duplicate(fpath));
                    }
                    Ok((f.name.clone(), from_block_value(&fpath, v, &f.ty)?))
                })
                .collect::<Result<_, _>>()?;
            Ok(TypedValue::Struct {
                name: s.name.clone(),
                fields,
            })
        }
        (VarType::Vector(_) | VarType::Struct(_), _) => {
            Err(bad(path, "a plain value", "a { ... } block"))
        }
        (_, Value::Token(t)) => leaf_from_text(path, t, ty),
        (_, Value::Str(s)) => Err(bad(path, s, "an unquoted value")),
        (_, Value::Block(_)) => Err(bad(path, "a block", "a plain value")),
    }
}

/// Reads a value document with one entry per variable of `vars`.
pub fn values_from_text(text: &str, vars: &[VarSpec]) -> Result<Vec<TypedValue>, ValueTextError> {
    let doc = blocktext::parse(text)?;
    for key in doc.keys() {
        if !vars.iter().any(|v| v.name == key) {
            return Err(ValueTextError::UnknownName(key.to_string()));
        }
    }
    vars.iter()
        .map(|var| {
            let mut given = doc.get_all(&var.name);
            let v = given
                .next()
                .ok_or_else(|| ValueTextError::Missing(var.name.clone()))?;
            if given.next().is_some() {
                return Err(ValueTextError::Duplicate(var.name.clone()));
            }
            from_block_value(&var.name, v, &var.ty)
        })
        .collect()
}

fn float_token(text: String) -> String {
    // Keep a decimal point so the token reads back as a float.
    if text.contains(['.', 'e', 'E', 'i', 'N']) {
        text
    } else {
        format!("{text}.0")
    }
}

fn to_block_value(value: &TypedValue, ty: Option<&VarType>) -> Value {
    match value {
        TypedValue::Bool(b) => Value::Token(b.to_string()),
        TypedValue::Int32(n) => Value::Token(n.to_string()),
        TypedValue::Int64(n) => Value::Token(n.to_string()),
        TypedValue::UInt32(n) => Value::Token(n.to_string()),
        TypedValue::UInt64(n) => Value::Token(n.to_string()),
        TypedValue::Float32(x) => Value::Token(float_token(x.to_string())),
        TypedValue::Float64(x) => Value::Token(float_token(x.to_string())),
        TypedValue::Str(s) => Value::Str(s.clone()),
        TypedValue::Handle(h) => Value::Token(h.to_string()),
        TypedValue::Enum { ordinal, .. } => {
            let named = match ty {
                Some(VarType::Enum(e)) => e
                    .enumerators
                    .iter()
                    .find(|(_, v)| *v == i64::from(*ordinal)),
                _ => None,
            };
            Value::Token(named.map_or_else(|| ordinal.to_string(), |(n, _)| n.clone()))
        }
        TypedValue::Vec { items, .. } => {
            let elem = match ty {
                Some(VarType::Vector(e)) => Some(&**e),
                _ => None,
            };
            let mut b = Block::new();
            for item in items {
                b.push("item", to_block_value(item, elem));
            }
            Value::Block(b)
        }
        TypedValue::Struct { fields, .. } => {
            let mut b = Block::new();
            for (name, v) in fields {
                let fty = match ty {
                    Some(VarType::Struct(s)) => {
                        s.fields.iter().find(|f| &f.name == name).map(|f| &f.ty)
                    }
                    _ => None,
                };
                b.push(name.clone(), to_block_value(v, fty));
            }
            Value::Block(b)
        }
    }
}

/// Renders `values` as a value document that [`values_from_text`] reads
/// back. Enums are written by enumerator name where one matches.
pub fn values_to_text(values: &[TypedValue], vars: &[VarSpec]) -> String {
    let mut doc = Block::new();
    for (i, value) in values.iter().enumerate() {
        let var = vars.get(i);
        let name = var.map_or_else(|| format!("value{i}"), |v| v.name.clone());
        doc.push(name, to_block_value(value, var.map(|v| &v.ty)));
    }
    doc.render()
}
