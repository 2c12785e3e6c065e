use std::fmt;
use std::str::FromStr;

use crate::idl::{NameError, PackageId, Version};
use crate::runtime::VendorManifest;

use super::{CompatReport, Rule};

/// How many framework majors keep their VNDK snapshot supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SnapshotPolicy {
    pub window: u32,
}

impl Default for SnapshotPolicy {
    fn default() -> Self {
        Self { window: 3 }
    }
}

/// Whether a framework of `platform_major` still supports `snapshot`:
/// `platform_major - window < snapshot.major <= platform_major`. The minor
/// (patch level) never matters.
pub fn snapshot_supported(platform_major: u32, snapshot: Version, policy: SnapshotPolicy) -> bool {
    snapshot.major <= platform_major
        && u64::from(snapshot.major) + u64::from(policy.window) > u64::from(platform_major)
}

/// One `SNAPSHOT_UNSUPPORTED` violation per snapshot outside the window.
pub fn check_snapshots(
    platform_major: u32,
    snapshots: &[Version],
    policy: SnapshotPolicy,
) -> CompatReport {
    let mut report = CompatReport::default();
    for s in snapshots {
        if !snapshot_supported(platform_major, *s, policy) {
            report.push(
                Rule::SnapshotUnsupported,
                format!("vndk@{s}"),
                format!(
                    "platform {platform_major} supports majors {}..={platform_major}",
                    (platform_major + 1).saturating_sub(policy.window)
                ),
            );
        }
    }
    report
}

/// A HAL package the framework needs, at a minimum version.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Requirement {
    pub package: String,
    pub version: Version,
}

impl fmt::Display for Requirement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.package, self.version)
    }
}

impl FromStr for Requirement {
    type Err = NameError;

    /// Accepts `pkg@M.m` or a full `pkg@M.m::IFoo`.
    fn from_str(s: &str) -> Result<Self, NameError> {
        let pkg: PackageId = s.split_once("::").map_or(s, |(p, _)| p).parse()?;
        Ok(Requirement {
            package: pkg.name,
            version: pkg.version,
        })
    }
}

/// Every requirement needs a manifest entry of the same major with at
/// least the required minor.
pub fn check_manifest_against_framework(
    manifest: &VendorManifest,
    requirements: &[Requirement],
) -> CompatReport {
    let mut report = CompatReport::default();
    for req in requirements {
        let offered: Vec<Version> = manifest
            .entries()
            .iter()
            .filter(|e| e.name == req.package)
            .map(|e| e.version)
            .collect();
        let same_major = offered
            .iter()
            .filter(|v| v.major == req.version.major)
            .max();
        match same_major {
            _ if offered.is_empty() => report.push(
                Rule::MissingHal,
                req.to_string(),
                "device ships no such HAL",
            ),
            None => {
                let list: Vec<String> = offered.iter().map(Version::to_string).collect();
                report.push(
                    Rule::MajorMismatch,
                    req.to_string(),
                    format!("device ships {}", list.join(", ")),
                );
            }
            Some(v) if v.minor < req.version.minor => report.push(
                Rule::MinorTooLow,
                req.to_string(),
                format!("device ships {v}"),
            ),
            Some(_) => {}
        }
    }
    report
}
