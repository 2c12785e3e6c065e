//! `.hal` sources in, interface specs out.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::idl::{self, PackageAst, PackageId, ParseError, ResolveError, SourceFile};
use crate::ir::{self, InterfaceSpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{package}: {source}")]
    Resolve {
        package: PackageId,
        source: ResolveError,
    },
}

/// Groups documents by their declared package and parses each package.
pub fn parse_all(files: &[SourceFile]) -> Result<BTreeMap<PackageId, PackageAst>, ParseError> {
    let mut grouped: BTreeMap<PackageId, Vec<SourceFile>> = BTreeMap::new();
    for f in files {
        grouped
            .entry(idl::declared_package(f)?)
            .or_default()
            .push(f.clone());
    }
    grouped
        .into_iter()
        .map(|(id, docs)| Ok((id.clone(), idl::parse_package(&docs, &id)?)))
        .collect()
}

/// Compiles every package found in `files`, each resolved against the
/// others. Specs come out ordered by package, then declaration order.
pub fn compile_sources(files: &[SourceFile]) -> Result<Vec<InterfaceSpec>, CompileError> {
    let packages = parse_all(files)?;
    let mut specs = Vec::new();
    for (id, ast) in &packages {
        let resolved = idl::resolve(ast, &packages).map_err(|source| CompileError::Resolve {
            package: id.clone(),
            source,
        })?;
        specs.extend(ir::compile(&resolved));
    }
    Ok(specs)
}
