//! The vendor interface object: which HAL versions a device ships, how each
//! is reached, and the VNDK snapshot it was built against.

use std::fmt;

use thiserror::Error;

use crate::blocktext::{self, Block, Value};
use crate::idl::{is_valid_package_name, Version};
use crate::wire::Transport;

pub const MANIFEST_FILE: &str = "manifest.tspec";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalEntry {
    /// Package name, e.g. `demo.light`.
    pub name: String,
    pub version: Version,
    pub transport: Transport,
}

impl fmt::Display for HalEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}/{}", self.name, self.version, self.transport)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VendorManifest {
    entries: Vec<HalEntry>,
    vndk: Version,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ManifestError {
    #[error(transparent)]
    Syntax(#[from] blocktext::SyntaxError),
    #[error("invalid manifest: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ManifestError {
    ManifestError::Invalid(msg.into())
}

impl VendorManifest {
    /// Entries are kept in canonical (sorted) order whatever the input order.
    pub fn new(mut entries: Vec<HalEntry>, vndk: Version) -> Self {
        entries.sort();
        entries.dedup();
        Self { entries, vndk }
    }

    pub fn entries(&self) -> &[HalEntry] {
        &self.entries
    }

    pub fn vndk(&self) -> Version {
        self.vndk
    }

    /// `name@M.m/TRANSPORT;...;vndk@M.m`.
    pub fn version_string(&self) -> String {
        let mut parts: Vec<String> = self.entries.iter().map(HalEntry::to_string).collect();
        parts.push(format!("vndk@{}", self.vndk));
        parts.join(";")
    }

    /// Highest version of package `name` the device ships.
    pub fn lookup(&self, name: &str) -> Option<&HalEntry> {
        self.entries
            .iter()
            .filter(|e| e.name == name)
            .max_by_key(|e| e.version)
    }

    pub fn to_text(&self) -> String {
        let mut doc = Block::new();
        for e in &self.entries {
            let mut b = Block::new();
            b.push_str("name", &e.name)
                .push_str("version", e.version.to_string())
                .push_token("transport", e.transport);
            doc.push_block("hal", b);
        }
        let mut v = Block::new();
        v.push_str("version", self.vndk.to_string());
        doc.push_block("vndk", v);
        doc.render()
    }

    pub fn parse(text: &str) -> Result<Self, ManifestError> {
        let doc = blocktext::parse(text)?;
        let mut entries = Vec::new();
        let mut vndk = None;
        for (key, value) in &doc.entries {
            let block = value
                .as_block()
                .ok_or_else(|| invalid(format!("`{key}` must be a block")))?;
            match key.as_str() {
                "hal" => entries.push(parse_hal(block)?),
                "vndk" => {
                    if vndk.is_some() {
                        return Err(invalid("more than one `vndk` block"));
                    }
                    vndk = Some(version_field(block, "vndk")?);
                }
                other => return Err(invalid(format!("unexpected key `{other}`"))),
            }
        }
        let vndk = vndk.ok_or_else(|| invalid("missing `vndk` block"))?;
        Ok(Self::new(entries, vndk))
    }
}

fn version_field(block: &Block, context: &str) -> Result<Version, ManifestError> {
    block
        .get("version")
        .and_then(Value::as_str)
        .ok_or_else(|| invalid(format!("`{context}` needs a quoted version")))?
        .parse()
        .map_err(|e| invalid(format!("{context}: {e}")))
}

fn parse_hal(block: &Block) -> Result<HalEntry, ManifestError> {
    for key in block.keys() {
        if !["name", "version", "transport"].contains(&key) {
            return Err(invalid(format!("unexpected key `{key}` in hal")));
        }
    }
    let name = block
        .get("name")
        .and_then(Value::as_str)
        .ok_or_else(|| invalid("hal needs a quoted name"))?;
    if !is_valid_package_name(name) {
        return Err(invalid(format!("bad package name `{name}`")));
    }
    let transport = block
        .get("transport")
        .and_then(Value::as_token)
        .ok_or_else(|| invalid(format!("hal {name} needs a transport")))?
        .parse()
        .map_err(invalid)?;
    Ok(HalEntry {
        name: name.to_string(),
        version: version_field(block, name)?,
        transport,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(name: &str, major: u32, minor: u32, transport: Transport) -> HalEntry {
        HalEntry {
            name: name.into(),
            version: Version { major, minor },
            transport,
        }
    }

    #[test]
    fn version_string_examples() {
        let v10 = Version {
            major: 10,
            minor: 0,
        };
        let m = VendorManifest::new(vec![entry("demo.light", 1, 1, Transport::Binderized)], v10);
        assert_eq!(m.version_string(), "demo.light@1.1/BINDERIZED;vndk@10.0");
        assert_eq!(
            VendorManifest::new(vec![], v10).version_string(),
            "vndk@10.0"
        );
    }

    #[test]
    fn input_order_does_not_matter() {
        let v = Version { major: 9, minor: 0 };
        let a = entry("demo.light", 1, 1, Transport::Binderized);
        let b = entry("demo.graphics.mapper", 1, 0, Transport::Passthrough);
        let one = VendorManifest::new(vec![a.clone(), b.clone()], v);
        let two = VendorManifest::new(vec![b, a], v);
        assert_eq!(one.version_string(), two.version_string());
        assert_eq!(
            one.version_string(),
            "demo.graphics.mapper@1.0/PASSTHROUGH;demo.light@1.1/BINDERIZED;vndk@9.0"
        );
    }

    #[test]
    fn text_round_trip() {
        let m = VendorManifest::new(
            vec![
                entry("demo.light", 1, 1, Transport::Binderized),
                entry("demo.graphics.mapper", 1, 0, Transport::Passthrough),
            ],
            Version {
                major: 10,
                minor: 0,
            },
        );
        let text = m.to_text();
        assert!(text.starts_with("hal: {\n  name: \"demo.graphics.mapper\"\n"));
        assert_eq!(VendorManifest::parse(&text).unwrap(), m);
        assert_eq!(
            m.lookup("demo.light").unwrap().version,
            Version { major: 1, minor: 1 }
        );
    }

    #[test]
    fn bad_manifests_are_rejected() {
        assert!(VendorManifest::parse(
            "hal: { name: \"x\" version: \"1.0\" transport: BINDERIZED }"
        )
        .is_err());
        assert!(VendorManifest::parse("vndk: { version: \"10\" }").is_err());
        assert!(VendorManifest::parse(
            "hal: { name: \"x\" version: \"1.0\" transport: WIRED }\nvndk: { version: \"10.0\" }"
        )
        .is_err());
    }
}
