//! Checking values against spec types, and the zero value of each type.

use std::fmt;

use crate::idl::Scalar;
use crate::ir::{VarSpec, VarType};

use super::value::{Tag, TypedValue};

/// Where and how a value failed to match its declared type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub path: String,
    pub expected: String,
    pub found: String,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: expected {}, found {}",
            self.path, self.expected, self.found
        )
    }
}

impl std::error::Error for Mismatch {}

pub fn scalar_tag(s: Scalar) -> Tag {
    match s {
        Scalar::Bool => Tag::Bool,
        Scalar::Int32 => Tag::Int32,
        Scalar::Int64 => Tag::Int64,
        Scalar::UInt32 => Tag::UInt32,
        Scalar::UInt64 => Tag::UInt64,
        Scalar::Float => Tag::Float32,
        Scalar::Double => Tag::Float64,
    }
}

/// The wire tag values of this type carry.
pub fn tag_for(ty: &VarType) -> Tag {
    match ty {
        VarType::Scalar(s) => scalar_tag(*s),
        VarType::String => Tag::Str,
        VarType::Vector(_) => Tag::Vec,
        VarType::Struct(_) => Tag::Struct,
        VarType::Enum(_) => Tag::Enum,
        VarType::Interface(_) => Tag::Handle,
    }
}

fn describe(ty: &VarType) -> String {
    match ty {
        VarType::Scalar(s) => s.as_str().to_string(),
        VarType::String => "string".into(),
        VarType::Vector(e) => format!("vec<{}>", describe(e)),
        VarType::Struct(s) => s.name.clone(),
        VarType::Enum(e) => e.name.clone(),
        VarType::Interface(fq) => fq.to_string(),
    }
}

fn found(v: &TypedValue) -> String {
    match v {
        TypedValue::Struct { name, .. } | TypedValue::Enum { name, .. } => {
            format!("{} {name}", v.tag())
        }
        TypedValue::Vec { elem, .. } => format!("Vec of {elem}"),
        other => other.tag().to_string(),
    }
}

fn check_at(path: &mut String, v: &TypedValue, ty: &VarType) -> Result<(), Mismatch> {
    let fail = |path: &String, expected: String, found: String| {
        Err(Mismatch {
            path: path.clone(),
            expected,
            found,
        })
    };
    if v.tag() != tag_for(ty) {
        return fail(path, describe(ty), found(v));
    }
    match (v, ty) {
        (TypedValue::Vec { elem, items }, VarType::Vector(elem_ty)) => {
            if *elem != tag_for(elem_ty) {
                return fail(path, describe(ty), found(v));
            }
            for (i, item) in items.iter().enumerate() {
                let len = path.len();
                path.push_str(&format!("[{i}]"));
                check_at(path, item, elem_ty)?;
                path.truncate(len);
            }
        }
        (TypedValue::Struct { name, fields }, VarType::Struct(spec)) => {
            if *name != spec.name {
                return fail(path, describe(ty), found(v));
            }
            if fields.len() != spec.fields.len() {
                return fail(
                    path,
                    format!("{} fields", spec.fields.len()),
                    format!("{} fields", fields.len()),
                );
            }
            for ((fname, fv), fs) in fields.iter().zip(&spec.fields) {
                let len = path.len();
                path.push('.');
                path.push_str(&fs.name);
                if *fname != fs.name {
                    return fail(
                        path,
                        format!("field `{}`", fs.name),
                        format!("field `{fname}`"),
                    );
                }
                check_at(path, fv, &fs.ty)?;
                path.truncate(len);
            }
        }
        (TypedValue::Enum { name, ordinal }, VarType::Enum(spec)) => {
            if *name != spec.name {
                return fail(path, describe(ty), found(v));
            }
            let fits = spec
                .scalar
                .integer_range()
                .is_some_and(|(lo, hi)| (lo..=hi).contains(&i128::from(*ordinal)));
            if !fits {
                return fail(
                    path,
                    format!("{} ordinal", spec.scalar.as_str()),
                    ordinal.to_string(),
                );
            }
        }
        _ => {}
    }
    Ok(())
}

pub fn check_value(v: &TypedValue, ty: &VarType) -> Result<(), Mismatch> {
    check_at(&mut String::from("value"), v, ty)
}

/// Checks a full argument or return list, count first.
pub fn check_values(values: &[TypedValue], vars: &[VarSpec]) -> Result<(), Mismatch> {
    if values.len() != vars.len() {
        return Err(Mismatch {
            path: "values".into(),
            expected: format!("{} values", vars.len()),
            found: format!("{} values", values.len()),
        });
    }
    for (v, var) in values.iter().zip(vars) {
        check_at(&mut var.name.clone(), v, &var.ty)?;
    }
    Ok(())
}

/// Zero scalars, empty strings and vectors, structs of defaults. Enums take
/// their first declared enumerator; handles are 0 (no callback).
pub fn default_value(ty: &VarType) -> TypedValue {
    match ty {
        VarType::Scalar(s) => match s {
            Scalar::Bool => TypedValue::Bool(false),
            Scalar::Int32 => TypedValue::Int32(0),
            Scalar::Int64 => TypedValue::Int64(0),
            Scalar::UInt32 => TypedValue::UInt32(0),
            Scalar::UInt64 => TypedValue::UInt64(0),
            Scalar::Float => TypedValue::Float32(0.0),
            Scalar::Double => TypedValue::Float64(0.0),
        },
        VarType::String => TypedValue::Str(String::new()),
        VarType::Vector(elem) => TypedValue::Vec {
            elem: tag_for(elem),
            items: vec![],
        },
        VarType::Struct(s) => TypedValue::Struct {
            name: s.name.clone(),
            fields: s
                .fields
                .iter()
                .map(|f| (f.name.clone(), default_value(&f.ty)))
                .collect(),
        },
        VarType::Enum(e) => TypedValue::Enum {
            name: e.name.clone(),
            ordinal: e.enumerators.first().map_or(0, |(_, v)| *v as i32),
        },
        VarType::Interface(_) => TypedValue::Handle(0),
    }
}

pub fn default_values(vars: &[VarSpec]) -> Vec<TypedValue> {
    vars.iter().map(|v| default_value(&v.ty)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{EnumSpec, StructSpec};

    fn point() -> VarType {
        VarType::Struct(StructSpec {
            name: "p@1.0::Point".into(),
            fields: vec![
                VarSpec::new("x", VarType::Scalar(Scalar::Int32)),
                VarSpec::new("tags", VarType::Vector(Box::new(VarType::String))),
            ],
        })
    }

    #[test]
    fn defaults_conform() {
        let ty = VarType::Vector(Box::new(point()));
        check_value(&default_value(&ty), &ty).unwrap();
        check_value(&default_value(&point()), &point()).unwrap();
    }

    #[test]
    fn nested_mismatch_reports_path() {
        let v = TypedValue::Struct {
            name: "p@1.0::Point".into(),
            fields: vec![
                ("x".into(), TypedValue::Int32(1)),
                (
                    "tags".into(),
                    TypedValue::vec(Tag::Str, vec![TypedValue::str("a"), TypedValue::str("b")]),
                ),
            ],
        };
        check_value(&v, &point()).unwrap();
        let bad = TypedValue::Struct {
            name: "p@1.0::Point".into(),
            fields: vec![
                ("x".into(), TypedValue::Int64(1)),
                ("tags".into(), TypedValue::vec(Tag::Str, vec![])),
            ],
        };
        let err = check_value(&bad, &point()).unwrap_err();
        assert_eq!(err.path, "value.x");
        assert_eq!(err.expected, "int32_t");
    }

    #[test]
    fn enum_ordinal_must_fit_underlying_type() {
        let ty = VarType::Enum(EnumSpec {
            name: "E".into(),
            scalar: Scalar::UInt32,
            enumerators: vec![("A".into(), 0)],
        });
        let ok = TypedValue::Enum {
            name: "E".into(),
            ordinal: 5,
        };
        let neg = TypedValue::Enum {
            name: "E".into(),
            ordinal: -1,
        };
        let other = TypedValue::Enum {
            name: "F".into(),
            ordinal: 0,
        };
        assert!(check_value(&ok, &ty).is_ok());
        assert!(check_value(&neg, &ty).is_err());
        assert!(check_value(&other, &ty).is_err());
    }

    #[test]
    fn argument_count_is_checked() {
        let vars = [VarSpec::new("a", VarType::Scalar(Scalar::Bool))];
        assert!(check_values(&[], &vars).is_err());
        assert!(check_values(&[TypedValue::Bool(true)], &vars).is_ok());
    }
}
