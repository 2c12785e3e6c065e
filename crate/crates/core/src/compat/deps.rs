//! Library dependency rules. Each library declares a category and its
//! direct dependencies; an edge is legal when the category of the
//! dependency is allowed for the category of the dependent.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::blocktext::{self, Block, Value};

use super::{CompatReport, Rule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    LlNdk,
    Ndk,
    Vndk,
    Vendor,
    SystemPrivate,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::LlNdk,
        Category::Ndk,
        Category::Vndk,
        Category::Vendor,
        Category::SystemPrivate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::LlNdk => "LL_NDK",
            Category::Ndk => "NDK",
            Category::Vndk => "VNDK",
            Category::Vendor => "VENDOR",
            Category::SystemPrivate => "SYSTEM_PRIVATE",
        }
    }

    /// Partition the library ships in.
    pub fn namespace(self) -> Namespace {
        match self {
            Category::Vendor => Namespace::Vendor,
            _ => Namespace::System,
        }
    }

    /// Whether a library of this category may link against one of `dep`.
    pub fn may_depend_on(self, dep: Category) -> bool {
        use Category::*;
        match self {
            LlNdk => dep == LlNdk,
            Ndk => matches!(dep, LlNdk | Ndk),
            Vndk => matches!(dep, LlNdk | Ndk | Vndk),
            Vendor => dep != SystemPrivate,
            SystemPrivate => dep != Vendor,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown library category `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Namespace {
    System,
    Vendor,
}

impl fmt::Display for Namespace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Namespace::System => "SYSTEM",
            Namespace::Vendor => "VENDOR",
        })
    }
}

impl FromStr for Namespace {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "SYSTEM" => Ok(Namespace::System),
            "VENDOR" => Ok(Namespace::Vendor),
            _ => Err(format!("unknown namespace `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LibraryManifest {
    pub name: String,
    pub category: Category,
    pub deps: Vec<String>,
}

impl LibraryManifest {
    pub fn new(name: impl Into<String>, category: Category, deps: &[&str]) -> Self {
        Self {
            name: name.into(),
            category,
            deps: deps.iter().map(|d| d.to_string()).collect(),
        }
    }

    pub fn to_block(&self) -> Block {
        let mut b = Block::new();
        b.push_str("name", &self.name)
            .push_token("category", self.category)
            .push_str("deps", self.deps.join(","));
        b
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LibraryManifestError {
    #[error(transparent)]
    Syntax(#[from] blocktext::SyntaxError),
    #[error("invalid library manifest: {0}")]
    Invalid(String),
}

/// Reads `lib: { name: "libfoo" category: VNDK deps: "liba,libb" }`
/// entries. Library names must be unique.
pub fn parse_library_manifests(text: &str) -> Result<Vec<LibraryManifest>, LibraryManifestError> {
    let invalid = |m: String| LibraryManifestError::Invalid(m);
    let doc = blocktext::parse(text)?;
    let mut libs = Vec::new();
    let mut names = BTreeSet::new();
    for (key, value) in &doc.entries {
        let block = match (key.as_str(), value) {
            ("lib", Value::Block(b)) => b,
            _ => return Err(invalid(format!("expected `lib` blocks, found `{key}`"))),
        };
        for k in block.keys() {
            if !["name", "category", "deps"].contains(&k) {
                return Err(invalid(format!("unexpected key `{k}` in lib")));
            }
        }
        let name = block
            .get("name")
            .and_then(Value::as_str)
            .filter(|n| !n.is_empty())
            .ok_or_else(|| invalid("lib needs a quoted name".into()))?;
        let category = block
            .get("category")
            .and_then(Value::as_token)
            .ok_or_else(|| invalid(format!("{name} needs a category")))?
            .parse()
            .map_err(invalid)?;
        let deps = match block.get("deps") {
            None => vec![],
            Some(v) => v
                .as_str()
                .ok_or_else(|| invalid(format!("{name}: deps must be a quoted list")))?
                .split(',')
                .map(str::trim)
                .filter(|d| !d.is_empty())
                .map(str::to_string)
                .collect(),
        };
        if !names.insert(name.to_string()) {
            return Err(invalid(format!("library {name} declared twice")));
        }
        libs.push(LibraryManifest {
            name: name.to_string(),
            category,
            deps,
        });
    }
    Ok(libs)
}

/// Checks every dependency edge reachable from the libraries of `origin`.
///
/// A dependency absent from `libs` is `MISSING_DEP`. A vendor library
/// reaching a system-private one is `NAMESPACE_VIOLATION`; any other edge
/// the category matrix forbids is `DISALLOWED_DEP`. Violations come out
/// sorted, so the input order does not matter.
pub fn check_dependency_closure(libs: &[LibraryManifest], origin: Namespace) -> CompatReport {
    let by_name: BTreeMap<&str, &LibraryManifest> =
        libs.iter().map(|l| (l.name.as_str(), l)).collect();
    let mut reached: BTreeSet<&str> = by_name
        .values()
        .filter(|l| l.category.namespace() == origin)
        .map(|l| l.name.as_str())
        .collect();
    let mut queue: VecDeque<&str> = reached.iter().copied().collect();
    while let Some(name) = queue.pop_front() {
        for dep in &by_name[name].deps {
            if by_name.contains_key(dep.as_str()) && reached.insert(dep) {
                queue.push_back(dep);
            }
        }
    }

    let mut report = CompatReport::default();
    for name in &reached {
        let lib = by_name[name];
        let deps: BTreeSet<&str> = lib.deps.iter().map(String::as_str).collect();
        for dep in deps {
            let edge = format!("{name} -> {dep}");
            match by_name.get(dep) {
                None => report.push(
                    Rule::MissingDep,
                    edge,
                    format!("{dep} is not in the library set"),
                ),
                Some(target) if !lib.category.may_depend_on(target.category) => {
                    let rule = if lib.category == Category::Vendor
                        && target.category == Category::SystemPrivate
                    {
                        Rule::NamespaceViolation
                    } else {
                        Rule::DisallowedDep
                    };
                    report.push(
                        rule,
                        edge,
                        format!("{} may not depend on {}", lib.category, target.category),
                    );
                }
                Some(_) => {}
            }
        }
    }
    report.violations.sort();
    report
}
