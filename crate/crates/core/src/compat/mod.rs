//! Version semantics: interface diffs, the VNDK snapshot window, library
//! dependency rules and device manifests checked against framework needs.

mod deps;
mod iface;
mod versions;

use std::fmt;

use crate::blocktext::Block;

pub use deps::{
    check_dependency_closure, parse_library_manifests, Category, LibraryManifest,
    LibraryManifestError, Namespace,
};
pub use iface::{check_interface_compat, PackageMismatch};
pub use versions::{
    check_manifest_against_framework, check_snapshots, snapshot_supported, Requirement,
    SnapshotPolicy,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    MajorMismatch,
    MinorDowngrade,
    RemovedMethod,
    SignatureChanged,
    OnewayChanged,
    MethodReordered,
    EnumValueRemoved,
    EnumValueRenumbered,
    StructChanged,
    MissingDep,
    NamespaceViolation,
    DisallowedDep,
    MissingHal,
    MinorTooLow,
    SnapshotUnsupported,
}

impl Rule {
    pub fn id(self) -> &'static str {
        match self {
            Rule::MajorMismatch => "MAJOR_MISMATCH",
            Rule::MinorDowngrade => "MINOR_DOWNGRADE",
            Rule::RemovedMethod => "REMOVED_METHOD",
            Rule::SignatureChanged => "SIGNATURE_CHANGED",
            Rule::OnewayChanged => "ONEWAY_CHANGED",
            Rule::MethodReordered => "METHOD_REORDERED",
            Rule::EnumValueRemoved => "ENUM_VALUE_REMOVED",
            Rule::EnumValueRenumbered => "ENUM_VALUE_RENUMBERED",
            Rule::StructChanged => "STRUCT_CHANGED",
            Rule::MissingDep => "MISSING_DEP",
            Rule::NamespaceViolation => "NAMESPACE_VIOLATION",
            Rule::DisallowedDep => "DISALLOWED_DEP",
            Rule::MissingHal => "MISSING_HAL",
            Rule::MinorTooLow => "MINOR_TOO_LOW",
            Rule::SnapshotUnsupported => "SNAPSHOT_UNSUPPORTED",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Violation {
    pub rule: Rule,
    /// What the rule is about: a method, a type path, a library edge.
    pub subject: String,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Compatible,
    Incompatible,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Compatible => "COMPATIBLE",
            Verdict::Incompatible => "INCOMPATIBLE",
        })
    }
}

/// Violations found by one check; compatible exactly when there are none.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CompatReport {
    pub violations: Vec<Violation>,
}

impl CompatReport {
    pub fn verdict(&self) -> Verdict {
        if self.violations.is_empty() {
            Verdict::Compatible
        } else {
            Verdict::Incompatible
        }
    }

    pub fn is_compatible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }

    pub fn rules(&self) -> Vec<Rule> {
        self.violations.iter().map(|v| v.rule).collect()
    }

    fn push(&mut self, rule: Rule, subject: impl Into<String>, detail: impl Into<String>) {
        self.violations.push(Violation {
            rule,
            subject: subject.into(),
            detail: detail.into(),
        });
    }

    pub fn to_block_text(&self) -> String {
        let mut doc = Block::new();
        doc.push_token("verdict", self.verdict());
        for v in &self.violations {
            let mut b = Block::new();
            b.push_token("rule", v.rule)
                .push_str("subject", &v.subject)
                .push_str("detail", &v.detail);
            doc.push_block("violation", b);
        }
        doc.render()
    }
}

impl fmt::Display for CompatReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.verdict())?;
        for v in &self.violations {
            writeln!(f, "  {} {}: {}", v.rule, v.subject, v.detail)?;
        }
        Ok(())
    }
}
