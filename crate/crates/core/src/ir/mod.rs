//! Per-interface specification IR.
//!
//! [`compile`] turns a resolved package into one [`InterfaceSpec`] per
//! interface. Struct and enum definitions are inlined at every use, so a
//! spec is self-contained: a driver can load it with no other file.

mod text;

pub use text::{emit_spec_text, parse_spec_text, SpecError};

use crate::idl::{FqName, PackageId, ResolvedPackage, ResolvedType, Scalar, Ty, Version};

#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceSpec {
    pub component_name: String,
    pub package: String,
    pub version: Version,
    pub apis: Vec<ApiSpec>,
}

impl InterfaceSpec {
    pub fn package_id(&self) -> PackageId {
        PackageId {
            name: self.package.clone(),
            version: self.version,
        }
    }

    pub fn fqname(&self) -> FqName {
        FqName::new(self.package_id(), &self.component_name)
    }

    pub fn api(&self, name: &str) -> Option<&ApiSpec> {
        self.apis.iter().find(|a| a.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiSpec {
    pub name: String,
    pub is_inherited: bool,
    pub oneway: bool,
    pub args: Vec<VarSpec>,
    pub returns: Vec<VarSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarSpec {
    pub name: String,
    pub ty: VarType,
}

impl VarSpec {
    pub fn new(name: impl Into<String>, ty: VarType) -> Self {
        Self {
            name: name.into(),
            ty,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VarType {
    Scalar(Scalar),
    String,
    Vector(Box<VarType>),
    Struct(StructSpec),
    Enum(EnumSpec),
    Interface(FqName),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructSpec {
    /// Fully-qualified `package@M.m::Name`.
    pub name: String,
    pub fields: Vec<VarSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnumSpec {
    pub name: String,
    pub scalar: Scalar,
    pub enumerators: Vec<(String, i64)>,
}

impl EnumSpec {
    pub fn contains(&self, ordinal: i64) -> bool {
        self.enumerators.iter().any(|(_, v)| *v == ordinal)
    }
}

impl VarType {
    pub fn type_tag(&self) -> &'static str {
        match self {
            VarType::Scalar(_) => "TYPE_SCALAR",
            VarType::String => "TYPE_STRING",
            VarType::Vector(_) => "TYPE_VECTOR",
            VarType::Struct(_) => "TYPE_STRUCT",
            VarType::Enum(_) => "TYPE_ENUM",
            VarType::Interface(_) => "TYPE_HIDL_INTERFACE",
        }
    }
}

/// Lowers one resolved type; struct and enum definitions are looked up in
/// the package's type table and inlined.
fn lower(ty: &Ty, pkg: &ResolvedPackage) -> VarType {
    match ty {
        Ty::Scalar(s) => VarType::Scalar(*s),
        Ty::String => VarType::String,
        Ty::Vec(elem) => VarType::Vector(Box::new(lower(elem, pkg))),
        Ty::Interface(fq) => VarType::Interface(fq.clone()),
        Ty::Struct(fq) => match pkg.types.get(fq) {
            Some(ResolvedType::Struct { fields, .. }) => VarType::Struct(StructSpec {
                name: fq.to_string(),
                fields: fields
                    .iter()
                    .map(|f| VarSpec::new(&f.name, lower(&f.ty, pkg)))
                    .collect(),
            }),
            _ => unreachable!("resolved package is missing struct {fq}"),
        },
        Ty::Enum(fq) => match pkg.types.get(fq) {
            Some(ResolvedType::Enum {
                underlying,
                variants,
                ..
            }) => VarType::Enum(EnumSpec {
                name: fq.to_string(),
                scalar: *underlying,
                enumerators: variants.clone(),
            }),
            _ => unreachable!("resolved package is missing enum {fq}"),
        },
    }
}

/// Compiles every interface of a resolved package, in declaration order.
pub fn compile(pkg: &ResolvedPackage) -> Vec<InterfaceSpec> {
    pkg.interfaces
        .iter()
        .map(|iface| InterfaceSpec {
            component_name: iface.fqname.name.clone(),
            package: iface.fqname.package.name.clone(),
            version: iface.fqname.package.version,
            apis: iface
                .methods
                .iter()
                .map(|m| ApiSpec {
                    name: m.name.clone(),
                    is_inherited: m.is_inherited,
                    oneway: m.oneway,
                    args: m
                        .args
                        .iter()
                        .map(|f| VarSpec::new(&f.name, lower(&f.ty, pkg)))
                        .collect(),
                    returns: m
                        .returns
                        .iter()
                        .map(|f| VarSpec::new(&f.name, lower(&f.ty, pkg)))
                        .collect(),
                })
                .collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::idl::{parse_package, resolve, SourceFile};
    use std::collections::BTreeMap;

    #[test]
    fn empty_interface_compiles_to_no_apis() {
        let id = PackageId::new("demo.e", 1, 0);
        let ast = parse_package(
            &[SourceFile::new(
                "e.hal",
                "package demo.e@1.0; interface IEmpty {};",
            )],
            &id,
        )
        .unwrap();
        let specs = compile(&resolve(&ast, &BTreeMap::new()).unwrap());
        assert_eq!(specs.len(), 1);
        assert_eq!(specs[0].component_name, "IEmpty");
        assert!(specs[0].apis.is_empty());
        assert_eq!(
            emit_spec_text(&specs[0]),
            "component_name: \"IEmpty\"\npackage: \"demo.e\"\nversion: \"1.0\"\ninterface: { }\n"
        );
    }

    // Every resolved type kind lowers to exactly one spec type tag.
    #[test]
    fn type_kinds_map_one_to_one() {
        let fq: FqName = "demo.t@1.0::X".parse().unwrap();
        let mut pkg = ResolvedPackage {
            ast: crate::idl::PackageAst {
                id: fq.package.clone(),
                imports: vec![],
                types: vec![],
                interfaces: vec![],
            },
            interfaces: vec![],
            types: BTreeMap::new(),
        };
        pkg.types.insert(
            "demo.t@1.0::S".parse().unwrap(),
            ResolvedType::Struct {
                name: "demo.t@1.0::S".parse().unwrap(),
                fields: vec![],
            },
        );
        pkg.types.insert(
            "demo.t@1.0::E".parse().unwrap(),
            ResolvedType::Enum {
                name: "demo.t@1.0::E".parse().unwrap(),
                underlying: Scalar::Int32,
                variants: vec![("A".into(), 0)],
            },
        );
        let cases = [
            (Ty::Scalar(Scalar::Bool), "TYPE_SCALAR"),
            (Ty::String, "TYPE_STRING"),
            (Ty::Vec(Box::new(Ty::String)), "TYPE_VECTOR"),
            (Ty::Struct("demo.t@1.0::S".parse().unwrap()), "TYPE_STRUCT"),
            (Ty::Enum("demo.t@1.0::E".parse().unwrap()), "TYPE_ENUM"),
            (Ty::Interface(fq), "TYPE_HIDL_INTERFACE"),
        ];
        let mut tags: Vec<_> = cases
            .iter()
            .map(|(t, _)| lower(t, &pkg).type_tag())
            .collect();
        for ((_, want), got) in cases.iter().zip(&tags) {
            assert_eq!(want, got);
        }
        tags.sort();
        tags.dedup();
        assert_eq!(tags.len(), cases.len());
    }
}
