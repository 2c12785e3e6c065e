//! Interface definition language: lexing, parsing and name resolution.
//!
//! A package is a set of `.hal` documents that all start with the same
//! `package name@M.m;` line. Interfaces may extend interfaces of the same
//! package or of another package/version, in which case the inherited
//! methods are materialized by [`resolve`].

mod ast;
mod lexer;
mod parser;
mod render;
mod resolve;

pub use ast::*;
pub use parser::{declared_package, parse_package, ParseError};
pub use render::render_package;
pub use resolve::{
    resolve, ResolveError, ResolvedField, ResolvedInterface, ResolvedMethod, ResolvedPackage,
    ResolvedType, Ty,
};

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// `major.minor` interface or snapshot version.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Version {
    pub major: u32,
    pub minor: u32,
}

impl Version {
    pub const fn new(major: u32, minor: u32) -> Self {
        Self { major, minor }
    }
}

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.major, self.minor)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid name `{input}`: {reason}")]
pub struct NameError {
    pub input: String,
    pub reason: &'static str,
}

fn name_error(input: &str, reason: &'static str) -> NameError {
    NameError {
        input: input.to_string(),
        reason,
    }
}

impl FromStr for Version {
    type Err = NameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (major, minor) = s
            .split_once('.')
            .ok_or_else(|| name_error(s, "expected major.minor"))?;
        let parse = |p: &str| {
            if p.is_empty() || !p.bytes().all(|b| b.is_ascii_digit()) {
                return Err(name_error(s, "version components must be decimal integers"));
            }
            p.parse::<u32>()
                .map_err(|_| name_error(s, "version component out of range"))
        };
        Ok(Version::new(parse(major)?, parse(minor)?))
    }
}

/// A versioned package such as `hardware.automotive.vehicle@2.0`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PackageId {
    pub name: String,
    pub version: Version,
}

impl PackageId {
    pub fn new(name: impl Into<String>, major: u32, minor: u32) -> Self {
        Self {
            name: name.into(),
            version: Version::new(major, minor),
        }
    }

    pub fn major(&self) -> u32 {
        self.version.major
    }

    pub fn minor(&self) -> u32 {
        self.version.minor
    }
}

/// Checks the dotted package-name grammar: segments `[a-z][a-z0-9_]*`.
pub fn is_valid_package_name(name: &str) -> bool {
    !name.is_empty()
        && name.split('.').all(|seg| {
            let mut bytes = seg.bytes();
            matches!(bytes.next(), Some(b'a'..=b'z'))
                && bytes.all(|b| matches!(b, b'a'..=b'z' | b'0'..=b'9' | b'_'))
        })
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl fmt::Display for PackageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.name, self.version)
    }
}

impl FromStr for PackageId {
    type Err = NameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, version) = s
            .split_once('@')
            .ok_or_else(|| name_error(s, "expected name@major.minor"))?;
        if !is_valid_package_name(name) {
            return Err(name_error(s, "package segments must match [a-z][a-z0-9_]*"));
        }
        Ok(PackageId {
            name: name.to_string(),
            version: version.parse()?,
        })
    }
}

/// Fully-qualified declaration name: `package@M.m::Name`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FqName {
    pub package: PackageId,
    pub name: String,
}

impl FqName {
    pub fn new(package: PackageId, name: impl Into<String>) -> Self {
        Self {
            package,
            name: name.into(),
        }
    }

    /// Same package name and declaration name, ignoring the version.
    pub fn same_family(&self, other: &FqName) -> bool {
        self.package.name == other.package.name && self.name == other.name
    }
}

impl fmt::Display for FqName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}::{}", self.package, self.name)
    }
}

impl FromStr for FqName {
    type Err = NameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (pkg, name) = s
            .split_once("::")
            .ok_or_else(|| name_error(s, "expected package@M.m::Name"))?;
        if !is_identifier(name) {
            return Err(name_error(s, "declaration name is not an identifier"));
        }
        Ok(FqName {
            package: pkg.parse()?,
            name: name.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn package_id_renders_name_at_version() {
        let id = PackageId::new("hardware.automotive.vehicle", 2, 0);
        assert_eq!(id.to_string(), "hardware.automotive.vehicle@2.0");
        assert_eq!(
            "hardware.automotive.vehicle@2.0"
                .parse::<PackageId>()
                .unwrap(),
            id
        );
    }

    #[test]
    fn package_id_rejects_bad_segments() {
        for bad in [
            "Hardware.x@1.0",
            "a..b@1.0",
            "a@1",
            "a@1.x",
            "1a@1.0",
            "a@-1.0",
            "a@1.0-rc1",
        ] {
            assert!(bad.parse::<PackageId>().is_err(), "{bad}");
        }
        assert!("a_1.b2@10.3".parse::<PackageId>().is_ok());
    }

    #[test]
    fn fqname_round_trips() {
        let fq: FqName = "vendor.bestmfr.light@1.0::ILight".parse().unwrap();
        assert_eq!(fq.package.name, "vendor.bestmfr.light");
        assert_eq!(fq.name, "ILight");
        assert_eq!(fq.to_string(), "vendor.bestmfr.light@1.0::ILight");
        assert!("vendor.light@1.0".parse::<FqName>().is_err());
    }
}
