use std::fmt;
use std::str::FromStr;

use super::PackageId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scalar {
    Int32,
    Int64,
    UInt32,
    UInt64,
    Bool,
    Float,
    Double,
}

impl Scalar {
    pub const ALL: [Scalar; 7] = [
        Scalar::Int32,
        Scalar::Int64,
        Scalar::UInt32,
        Scalar::UInt64,
        Scalar::Bool,
        Scalar::Float,
        Scalar::Double,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scalar::Int32 => "int32_t",
            Scalar::Int64 => "int64_t",
            Scalar::UInt32 => "uint32_t",
            Scalar::UInt64 => "uint64_t",
            Scalar::Bool => "bool",
            Scalar::Float => "float",
            Scalar::Double => "double",
        }
    }

    pub fn is_integer(self) -> bool {
        matches!(
            self,
            Scalar::Int32 | Scalar::Int64 | Scalar::UInt32 | Scalar::UInt64
        )
    }

    /// Inclusive value range of an integer scalar, as i128.
    pub fn integer_range(self) -> Option<(i128, i128)> {
        match self {
            Scalar::Int32 => Some((i32::MIN as i128, i32::MAX as i128)),
            Scalar::Int64 => Some((i64::MIN as i128, i64::MAX as i128)),
            Scalar::UInt32 => Some((0, u32::MAX as i128)),
            Scalar::UInt64 => Some((0, u64::MAX as i128)),
            _ => None,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scalar {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scalar::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s)
            .ok_or(())
    }
}

/// Reference to a named declaration, optionally qualified by package.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NamedRef {
    pub package: Option<PackageId>,
    pub name: String,
}

impl fmt::Display for NamedRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.package {
            Some(p) => write!(f, "{p}::{}", self.name),
            None => f.write_str(&self.name),
        }
    }
}

/// Unresolved type as written in source. Struct, enum and interface
/// references are told apart by [`super::resolve`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TypeRef {
    Scalar(Scalar),
    String,
    Vec(Box<TypeRef>),
    Named(NamedRef),
}

impl fmt::Display for TypeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeRef::Scalar(s) => write!(f, "{s}"),
            TypeRef::String => f.write_str("string"),
            TypeRef::Vec(e) => write!(f, "vec<{e}>"),
            TypeRef::Named(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Field {
    pub name: String,
    pub ty: TypeRef,
}

impl Field {
    pub fn new(ty: TypeRef, name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ty,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructDecl {
    pub name: String,
    pub fields: Vec<Field>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumVariant {
    pub name: String,
    /// Explicit value; `None` means previous + 1 (or 0 for the first).
    pub value: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumDecl {
    pub name: String,
    pub underlying: Scalar,
    pub variants: Vec<EnumVariant>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeDecl {
    Struct(StructDecl),
    Enum(EnumDecl),
}

impl TypeDecl {
    pub fn name(&self) -> &str {
        match self {
            TypeDecl::Struct(s) => &s.name,
            TypeDecl::Enum(e) => &e.name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodDecl {
    pub name: String,
    pub args: Vec<Field>,
    pub returns: Vec<Field>,
    pub oneway: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterfaceDecl {
    pub name: String,
    pub extends: Option<NamedRef>,
    pub methods: Vec<MethodDecl>,
}

impl InterfaceDecl {
    pub fn method(&self, name: &str) -> Option<&MethodDecl> {
        self.methods.iter().find(|m| m.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackageAst {
    pub id: PackageId,
    pub imports: Vec<PackageId>,
    pub types: Vec<TypeDecl>,
    pub interfaces: Vec<InterfaceDecl>,
}

impl PackageAst {
    pub fn interface(&self, name: &str) -> Option<&InterfaceDecl> {
        self.interfaces.iter().find(|i| i.name == name)
    }

    pub fn type_decl(&self, name: &str) -> Option<&TypeDecl> {
        self.types.iter().find(|t| t.name() == name)
    }
}

/// One named `.hal` document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFile {
    pub name: String,
    pub text: String,
}

impl SourceFile {
    pub fn new(name: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            text: text.into(),
        }
    }
}
