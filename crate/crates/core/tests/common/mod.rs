#![allow(dead_code)]

pub mod oracle;

use proptest::prelude::*;
use treble::idl::*;
use treble::ir::*;

pub fn scalar() -> impl Strategy<Value = Scalar> {
    prop::sample::select(Scalar::ALL.to_vec())
}

fn package_name() -> impl Strategy<Value = String> {
    prop::collection::vec("[a-z][a-z0-9_]{0,5}", 1..4)
        .prop_map(|segs| segs.join("."))
        .prop_filter("not a keyword", |n| {
            n.split('.').all(|s| {
                !matches!(
                    s,
                    "package"
                        | "import"
                        | "interface"
                        | "extends"
                        | "generates"
                        | "oneway"
                        | "struct"
                        | "enum"
                        | "vec"
                        | "string"
                        | "bool"
                        | "float"
                        | "double"
                        | "int32_t"
                        | "int64_t"
                        | "uint32_t"
                        | "uint64_t"
                )
            })
        })
}

pub fn package_id() -> impl Strategy<Value = PackageId> {
    (package_name(), 0u32..20, 0u32..20).prop_map(|(n, a, b)| PackageId::new(n, a, b))
}

fn type_ref(named: Vec<String>) -> impl Strategy<Value = TypeRef> {
    let leaf = prop_oneof![
        scalar().prop_map(TypeRef::Scalar),
        Just(TypeRef::String),
        (prop::sample::select(named), prop::option::of(package_id()))
            .prop_map(|(name, package)| { TypeRef::Named(NamedRef { package, name }) }),
    ];
    leaf.prop_recursive(3, 8, 1, |inner| {
        inner.prop_map(|t| TypeRef::Vec(Box::new(t)))
    })
}

fn fields(
    prefix: &'static str,
    named: Vec<String>,
    min: usize,
) -> impl Strategy<Value = Vec<Field>> {
    prop::collection::vec(type_ref(named), min..4).prop_map(move |tys| {
        tys.into_iter()
            .enumerate()
            .map(|(i, ty)| Field::new(ty, format!("{prefix}{i}")))
            .collect()
    })
}

fn method(i: usize, named: Vec<String>) -> impl Strategy<Value = MethodDecl> {
    (
        any::<bool>(),
        fields("a", named.clone(), 0),
        fields("r", named, 1),
    )
        .prop_map(move |(oneway, args, returns)| MethodDecl {
            name: format!("m{i}"),
            args,
            returns: if oneway { vec![] } else { returns },
            oneway,
        })
}

fn enum_decl(i: usize) -> impl Strategy<Value = TypeDecl> {
    (
        prop::sample::select(vec![
            Scalar::Int32,
            Scalar::UInt32,
            Scalar::Int64,
            Scalar::UInt64,
        ]),
        prop::collection::vec(prop::option::of(-1000i64..1000), 1..5),
    )
        .prop_map(move |(underlying, vals)| {
            TypeDecl::Enum(EnumDecl {
                name: format!("E{i}"),
                underlying,
                variants: vals
                    .into_iter()
                    .enumerate()
                    .map(|(j, value)| EnumVariant {
                        name: format!("V{j}"),
                        value,
                    })
                    .collect(),
            })
        })
}

/// Well-formed (syntactically) package ASTs; names are not necessarily
/// resolvable.
pub fn package_ast() -> impl Strategy<Value = PackageAst> {
    (
        package_id(),
        prop::collection::vec(package_id(), 0..3),
        0usize..3,
        0usize..3,
        0usize..3,
    )
        .prop_flat_map(|(id, mut imports, n_struct, n_enum, n_iface)| {
            imports.dedup();
            let mut named: Vec<String> = (0..n_struct).map(|i| format!("S{i}")).collect();
            named.extend((0..n_enum).map(|i| format!("E{i}")));
            named.extend((0..n_iface).map(|i| format!("I{i}")));
            named.push("External".into());
            let structs = prop::collection::vec(fields("f", named.clone(), 0), n_struct);
            let enums = (0..n_enum).map(enum_decl).collect::<Vec<_>>();
            let ifaces = (0..n_iface)
                .map(|i| {
                    let named = named.clone();
                    (
                        prop::option::of(prop::sample::select(named.clone())),
                        prop::option::of(package_id()),
                        (0usize..4).prop_flat_map(move |n| {
                            (0..n).map(|j| method(j, named.clone())).collect::<Vec<_>>()
                        }),
                    )
                        .prop_map(move |(ext, pkg, methods)| InterfaceDecl {
                            name: format!("I{i}"),
                            extends: ext.map(|name| NamedRef { package: pkg, name }),
                            methods,
                        })
                })
                .collect::<Vec<_>>();
            (Just(id), Just(imports), structs, enums, ifaces)
        })
        .prop_map(|(id, imports, structs, enums, interfaces)| {
            let mut types: Vec<TypeDecl> = structs
                .into_iter()
                .enumerate()
                .map(|(i, fields)| {
                    TypeDecl::Struct(StructDecl {
                        name: format!("S{i}"),
                        fields,
                    })
                })
                .collect();
            types.extend(enums);
            let imports = imports.into_iter().filter(|p| *p != id).collect();
            PackageAst {
                id,
                imports,
                types,
                interfaces,
            }
        })
}

fn any_text() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-zA-Z_][a-zA-Z0-9_]{0,8}",
        any::<String>(),
        Just("quote\"back\\slash\nnl\ttab".to_string()),
    ]
}

pub fn var_type() -> impl Strategy<Value = VarType> {
    let leaf = prop_oneof![
        scalar().prop_map(VarType::Scalar),
        Just(VarType::String),
        (package_id(), "I[A-Za-z0-9_]{0,6}")
            .prop_map(|(p, n)| VarType::Interface(FqName::new(p, n))),
        (
            any_text(),
            scalar(),
            prop::collection::vec((any_text(), any::<i64>()), 0..4)
        )
            .prop_map(|(name, scalar, enumerators)| VarType::Enum(EnumSpec {
                name,
                scalar,
                enumerators
            })),
    ];
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|t| VarType::Vector(Box::new(t))),
            (any_text(), prop::collection::vec((any_text(), inner), 0..3)).prop_map(
                |(name, fields)| VarType::Struct(StructSpec {
                    name,
                    fields: fields
                        .into_iter()
                        .map(|(n, t)| VarSpec::new(n, t))
                        .collect(),
                })
            ),
        ]
    })
}

fn var_spec() -> impl Strategy<Value = VarSpec> {
    (any_text(), var_type()).prop_map(|(n, t)| VarSpec::new(n, t))
}

pub fn interface_spec() -> impl Strategy<Value = InterfaceSpec> {
    (
        "I[A-Za-z0-9]{0,6}",
        package_id(),
        prop::collection::vec(
            (
                any::<bool>(),
                any::<bool>(),
                prop::collection::vec(var_spec(), 0..3),
                prop::collection::vec(var_spec(), 0..3),
            ),
            0..4,
        ),
    )
        .prop_map(|(component_name, pkg, apis)| InterfaceSpec {
            component_name,
            package: pkg.name,
            version: pkg.version,
            apis: apis
                .into_iter()
                .enumerate()
                .map(|(i, (is_inherited, oneway, args, returns))| ApiSpec {
                    name: format!("api{i}"),
                    is_inherited,
                    oneway,
                    args,
                    returns: if oneway { vec![] } else { returns },
                })
                .collect(),
        })
}
