use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Subcommand;
use treble::compat::{
    check_dependency_closure, check_interface_compat, check_manifest_against_framework,
    check_snapshots, parse_library_manifests, CompatReport, Namespace, Requirement, SnapshotPolicy,
};
use treble::idl::{SourceFile, Version};
use treble::ir::{emit_spec_text, parse_spec_text, InterfaceSpec};
use treble::pipeline::compile_sources;
use treble::runtime::VendorManifest;

use crate::exit::{io, read, usage, Failure};
use crate::{Format, Globals};

#[derive(Debug, Subcommand)]
pub enum CheckMode {
    /// Can clients of OLD use NEW? Both are .spec files.
    Iface { old: PathBuf, new: PathBuf },
    /// Dependency rules over a library manifest file.
    Deps {
        manifest: PathBuf,
        /// Namespace whose libraries the closure starts from.
        #[arg(long, default_value = "vendor")]
        origin: Namespace,
    },
    /// Does a vendor manifest satisfy the framework's HAL requirements?
    Manifest {
        manifest: PathBuf,
        /// `package@major.minor`, repeatable.
        #[arg(long = "require")]
        requirements: Vec<Requirement>,
    },
    /// Is each snapshot version inside the platform's support window?
    Snapshot {
        #[arg(long)]
        platform: u32,
        snapshots: Vec<Version>,
        /// Also check the snapshot a vendor manifest was built against.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, default_value_t = SnapshotPolicy::default().window)]
        window: u32,
    },
}

pub fn compile(inputs: &[PathBuf], out: &Path) -> Result<(), Failure> {
    if inputs.is_empty() {
        return Err(usage("compile needs at least one .hal file"));
    }
    let files = inputs
        .iter()
        .map(|p| Ok(SourceFile::new(p.display().to_string(), read(p)?)))
        .collect::<Result<Vec<_>, Failure>>()?;
    let specs = compile_sources(&files).map_err(|e| Failure::Check(Some(e.to_string())))?;
    // `<Name>.spec`, qualified with the package when two packages share a name.
    let mut per_name: BTreeMap<&str, usize> = BTreeMap::new();
    for spec in &specs {
        *per_name.entry(spec.component_name.as_str()).or_default() += 1;
    }
    let by_file: BTreeMap<String, &InterfaceSpec> = specs
        .iter()
        .map(|spec| {
            let name = if per_name[spec.component_name.as_str()] > 1 {
                format!("{}-{}.spec", spec.package_id(), spec.component_name)
            } else {
                format!("{}.spec", spec.component_name)
            };
            (name, spec)
        })
        .collect();
    std::fs::create_dir_all(out).map_err(|e| io(format!("{}: {e}", out.display())))?;
    for (name, spec) in by_file {
        let path = out.join(name);
        std::fs::write(&path, emit_spec_text(spec))
            .map_err(|e| io(format!("{}: {e}", path.display())))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn load_spec(path: &Path) -> Result<InterfaceSpec, Failure> {
    parse_spec_text(&read(path)?).map_err(|e| io(format!("{}: {e}", path.display())))
}

fn load_manifest(path: &Path) -> Result<VendorManifest, Failure> {
    VendorManifest::parse(&read(path)?).map_err(|e| io(format!("{}: {e}", path.display())))
}

fn report(report: &CompatReport, globals: &Globals) -> Result<(), Failure> {
    match globals.format_or(Format::Text) {
        Format::Spec => print!("{}", report.to_block_text()),
        Format::Csv => {
            println!("rule,subject,detail");
            for v in &report.violations {
                println!(
                    "{},{},{}",
                    v.rule.id(),
                    csv_field(&v.subject),
                    csv_field(&v.detail)
                );
            }
        }
        Format::Text => print!("{report}"),
    }
    if report.is_compatible() {
        Ok(())
    } else {
        Err(Failure::Check(None))
    }
}

pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn check(mode: CheckMode, globals: &Globals) -> Result<(), Failure> {
    let result = match mode {
        CheckMode::Iface { old, new } => {
            let (old, new) = (load_spec(&old)?, load_spec(&new)?);
            check_interface_compat(&old, &new).map_err(|e| Failure::Check(Some(e.to_string())))?
        }
        CheckMode::Deps { manifest, origin } => {
            let libs = parse_library_manifests(&read(&manifest)?)
                .map_err(|e| io(format!("{}: {e}", manifest.display())))?;
            check_dependency_closure(&libs, origin)
        }
        CheckMode::Manifest {
            manifest,
            requirements,
        } => check_manifest_against_framework(&load_manifest(&manifest)?, &requirements),
        CheckMode::Snapshot {
            platform,
            mut snapshots,
            manifest,
            window,
        } => {
            if window == 0 {
                return Err(usage("--window must be at least 1"));
            }
            if let Some(path) = manifest {
                snapshots.push(load_manifest(&path)?.vndk());
            }
            if snapshots.is_empty() {
                return Err(usage("give at least one snapshot version or --manifest"));
            }
            check_snapshots(platform, &snapshots, SnapshotPolicy { window })
        }
    };
    report(&result, globals)
}
