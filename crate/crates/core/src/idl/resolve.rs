use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use super::ast::*;
use super::{FqName, PackageId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("unresolved name `{name}` in package {package}")]
    UnresolvedName { package: PackageId, name: String },
    #[error("name `{name}` in package {package} is ambiguous between {candidates:?}")]
    AmbiguousName {
        package: PackageId,
        name: String,
        candidates: Vec<String>,
    },
    #[error("package {0} is not available")]
    ImportMissing(PackageId),
    #[error("cyclic inheritance: {}", .0.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(" -> "))]
    CyclicInheritance(Vec<FqName>),
    #[error("type {0} contains itself")]
    RecursiveType(FqName),
    #[error("method `{method}` of {interface} is already declared by an ancestor")]
    MethodRedefined { interface: FqName, method: String },
    #[error("{context}: {message}")]
    InvalidType { context: String, message: String },
}

/// A fully resolved type reference.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Ty {
    Scalar(Scalar),
    String,
    Vec(Box<Ty>),
    Struct(FqName),
    Enum(FqName),
    Interface(FqName),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedField {
    pub name: String,
    pub ty: Ty,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResolvedType {
    Struct {
        name: FqName,
        fields: Vec<ResolvedField>,
    },
    Enum {
        name: FqName,
        underlying: Scalar,
        variants: Vec<(String, i64)>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedMethod {
    pub name: String,
    pub args: Vec<ResolvedField>,
    pub returns: Vec<ResolvedField>,
    pub oneway: bool,
    pub is_inherited: bool,
    /// Interface that declares the method.
    pub origin: FqName,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedInterface {
    pub fqname: FqName,
    pub extends: Option<FqName>,
    /// Inherited methods first, root ancestor first, then local methods.
    pub methods: Vec<ResolvedMethod>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedPackage {
    pub ast: PackageAst,
    pub interfaces: Vec<ResolvedInterface>,
    /// Every struct and enum reachable from this package, keyed by
    /// fully-qualified name (may include types of dependency packages).
    pub types: BTreeMap<FqName, ResolvedType>,
}

impl ResolvedPackage {
    pub fn interface(&self, name: &str) -> Option<&ResolvedInterface> {
        self.interfaces.iter().find(|i| i.fqname.name == name)
    }
}

/// Resolves every name of `ast` against itself and `deps`, materializing
/// inherited methods.
pub fn resolve(
    ast: &PackageAst,
    deps: &BTreeMap<PackageId, PackageAst>,
) -> Result<ResolvedPackage, ResolveError> {
    for imp in &ast.imports {
        if imp != &ast.id && !deps.contains_key(imp) {
            return Err(ResolveError::ImportMissing(imp.clone()));
        }
    }
    let mut r = Resolver {
        root: ast,
        deps,
        types: BTreeMap::new(),
        type_stack: Vec::new(),
        interfaces: HashMap::new(),
        iface_stack: Vec::new(),
    };
    for decl in &ast.types {
        let fq = FqName::new(ast.id.clone(), decl.name());
        r.define_type(fq, decl, ast)?;
    }
    let mut interfaces = Vec::with_capacity(ast.interfaces.len());
    for iface in &ast.interfaces {
        interfaces.push(r.interface(&FqName::new(ast.id.clone(), &iface.name))?);
    }
    Ok(ResolvedPackage {
        ast: ast.clone(),
        interfaces,
        types: r.types,
    })
}

enum Decl<'a> {
    Type(&'a TypeDecl),
    Interface,
}

struct Resolver<'a> {
    root: &'a PackageAst,
    deps: &'a BTreeMap<PackageId, PackageAst>,
    types: BTreeMap<FqName, ResolvedType>,
    type_stack: Vec<FqName>,
    interfaces: HashMap<FqName, ResolvedInterface>,
    iface_stack: Vec<FqName>,
}

fn find<'p>(pkg: &'p PackageAst, name: &str) -> Option<Decl<'p>> {
    if let Some(t) = pkg.type_decl(name) {
        return Some(Decl::Type(t));
    }
    pkg.interface(name).map(|_| Decl::Interface)
}

impl<'a> Resolver<'a> {
    fn package(&self, id: &PackageId) -> Result<&'a PackageAst, ResolveError> {
        if *id == self.root.id {
            Ok(self.root)
        } else {
            self.deps
                .get(id)
                .ok_or_else(|| ResolveError::ImportMissing(id.clone()))
        }
    }

    fn lookup(
        &self,
        ctx: &'a PackageAst,
        r: &NamedRef,
    ) -> Result<(FqName, Decl<'a>, &'a PackageAst), ResolveError> {
        let unresolved = || ResolveError::UnresolvedName {
            package: ctx.id.clone(),
            name: r.to_string(),
        };
        if let Some(pid) = &r.package {
            let pkg = self.package(pid)?;
            let decl = find(pkg, &r.name).ok_or_else(unresolved)?;
            return Ok((FqName::new(pid.clone(), &r.name), decl, pkg));
        }
        if let Some(decl) = find(ctx, &r.name) {
            return Ok((FqName::new(ctx.id.clone(), &r.name), decl, ctx));
        }
        let mut hits = Vec::new();
        for imp in &ctx.imports {
            let pkg = self.package(imp)?;
            if let Some(decl) = find(pkg, &r.name) {
                hits.push((FqName::new(imp.clone(), &r.name), decl, pkg));
            }
        }
        match hits.len() {
            0 => Err(unresolved()),
            1 => Ok(hits.pop().unwrap()),
            _ => Err(ResolveError::AmbiguousName {
                package: ctx.id.clone(),
                name: r.name.clone(),
                candidates: hits.iter().map(|(fq, _, _)| fq.to_string()).collect(),
            }),
        }
    }

    fn ty(&mut self, ctx: &'a PackageAst, t: &TypeRef, context: &str) -> Result<Ty, ResolveError> {
        Ok(match t {
            TypeRef::Scalar(s) => Ty::Scalar(*s),
            TypeRef::String => Ty::String,
            TypeRef::Vec(elem) => {
                let elem = self.ty(ctx, elem, context)?;
                if let Ty::Interface(fq) = &elem {
                    return Err(ResolveError::InvalidType {
                        context: context.to_string(),
                        message: format!("vector element cannot be interface {fq}"),
                    });
                }
                Ty::Vec(Box::new(elem))
            }
            TypeRef::Named(r) => {
                let (fq, decl, pkg) = self.lookup(ctx, r)?;
                match decl {
                    Decl::Interface => Ty::Interface(fq),
                    Decl::Type(d) => {
                        self.define_type(fq.clone(), d, pkg)?;
                        match d {
                            TypeDecl::Struct(_) => Ty::Struct(fq),
                            TypeDecl::Enum(_) => Ty::Enum(fq),
                        }
                    }
                }
            }
        })
    }

    fn define_type(
        &mut self,
        fq: FqName,
        decl: &TypeDecl,
        pkg: &'a PackageAst,
    ) -> Result<(), ResolveError> {
        if self.types.contains_key(&fq) {
            return Ok(());
        }
        if self.type_stack.contains(&fq) {
            return Err(ResolveError::RecursiveType(fq));
        }
        let resolved = match decl {
            TypeDecl::Struct(s) => {
                self.type_stack.push(fq.clone());
                let mut fields = Vec::with_capacity(s.fields.len());
                for f in &s.fields {
                    let ty = self.ty(pkg, &f.ty, &format!("{fq}.{}", f.name))?;
                    fields.push(ResolvedField {
                        name: f.name.clone(),
                        ty,
                    });
                }
                self.type_stack.pop();
                ResolvedType::Struct {
                    name: fq.clone(),
                    fields,
                }
            }
            TypeDecl::Enum(e) => {
                let (lo, hi) =
                    e.underlying
                        .integer_range()
                        .ok_or_else(|| ResolveError::InvalidType {
                            context: fq.to_string(),
                            message: "enum underlying type must be an integer".to_string(),
                        })?;
                let mut next: i128 = 0;
                let mut variants = Vec::with_capacity(e.variants.len());
                for v in &e.variants {
                    let value = v.value.map(i128::from).unwrap_or(next);
                    if value < lo.max(i32::MIN as i128) || value > hi.min(i32::MAX as i128) {
                        return Err(ResolveError::InvalidType {
                            context: format!("{fq}.{}", v.name),
                            message: format!(
                                "value {value} does not fit {} and a 32-bit ordinal",
                                e.underlying
                            ),
                        });
                    }
                    variants.push((v.name.clone(), value as i64));
                    next = value + 1;
                }
                ResolvedType::Enum {
                    name: fq.clone(),
                    underlying: e.underlying,
                    variants,
                }
            }
        };
        self.types.insert(fq, resolved);
        Ok(())
    }

    fn fields(
        &mut self,
        ctx: &'a PackageAst,
        fields: &[Field],
        context: &str,
    ) -> Result<Vec<ResolvedField>, ResolveError> {
        fields
            .iter()
            .map(|f| {
                Ok(ResolvedField {
                    name: f.name.clone(),
                    ty: self.ty(ctx, &f.ty, &format!("{context}({})", f.name))?,
                })
            })
            .collect()
    }

    fn interface(&mut self, fq: &FqName) -> Result<ResolvedInterface, ResolveError> {
        if let Some(done) = self.interfaces.get(fq) {
            return Ok(done.clone());
        }
        if let Some(pos) = self.iface_stack.iter().position(|x| x == fq) {
            let mut cycle = self.iface_stack[pos..].to_vec();
            cycle.push(fq.clone());
            return Err(ResolveError::CyclicInheritance(cycle));
        }
        let pkg = self.package(&fq.package)?;
        let decl = pkg
            .interface(&fq.name)
            .ok_or_else(|| ResolveError::UnresolvedName {
                package: fq.package.clone(),
                name: fq.name.clone(),
            })?;
        self.iface_stack.push(fq.clone());
        let mut methods = Vec::new();
        let mut extends = None;
        if let Some(parent_ref) = &decl.extends {
            let (parent_fq, parent_decl, _) = self.lookup(pkg, parent_ref)?;
            if !matches!(parent_decl, Decl::Interface) {
                return Err(ResolveError::InvalidType {
                    context: fq.to_string(),
                    message: format!("`{parent_ref}` is not an interface"),
                });
            }
            let parent = self.interface(&parent_fq)?;
            methods.extend(parent.methods.into_iter().map(|mut m| {
                m.is_inherited = true;
                m
            }));
            extends = Some(parent_fq);
        }
        for m in &decl.methods {
            if methods.iter().any(|x: &ResolvedMethod| x.name == m.name) {
                return Err(ResolveError::MethodRedefined {
                    interface: fq.clone(),
                    method: m.name.clone(),
                });
            }
            let context = format!("{fq}::{}", m.name);
            let args = self.fields(pkg, &m.args, &context)?;
            let returns = self.fields(pkg, &m.returns, &context)?;
            methods.push(ResolvedMethod {
                name: m.name.clone(),
                args,
                returns,
                oneway: m.oneway,
                is_inherited: false,
                origin: fq.clone(),
            });
        }
        self.iface_stack.pop();
        let resolved = ResolvedInterface {
            fqname: fq.clone(),
            extends,
            methods,
        };
        self.interfaces.insert(fq.clone(), resolved.clone());
        Ok(resolved)
    }
}
