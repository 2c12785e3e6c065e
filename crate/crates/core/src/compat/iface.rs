use std::collections::HashMap;

use thiserror::Error;

use crate::ir::{ApiSpec, InterfaceSpec, VarSpec, VarType};

use super::{CompatReport, Rule};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot compare {old} with {new}: different interfaces")]
pub struct PackageMismatch {
    pub old: String,
    pub new: String,
}

/// `pkg@M.m::Name` without the version, so a type carried unchanged into a
/// later minor still compares equal.
fn unversioned(name: &str) -> String {
    match (name.split_once('@'), name.split_once("::")) {
        (Some((pkg, _)), Some((_, decl))) => format!("{pkg}::{decl}"),
        _ => name.to_string(),
    }
}

fn describe(ty: &VarType) -> String {
    match ty {
        VarType::Scalar(s) => s.as_str().to_string(),
        VarType::String => "string".into(),
        VarType::Vector(e) => format!("vec<{}>", describe(e)),
        VarType::Struct(s) => s.name.clone(),
        VarType::Enum(e) => e.name.clone(),
        VarType::Interface(fq) => fq.to_string(),
    }
}

/// Walks two types in parallel. Outside any struct a shape change is a
/// signature change; inside one it is a struct change.
fn compare_type(
    report: &mut CompatReport,
    path: &str,
    old: &VarType,
    new: &VarType,
    in_struct: bool,
) {
    let shape = if in_struct {
        Rule::StructChanged
    } else {
        Rule::SignatureChanged
    };
    let changed = |report: &mut CompatReport| {
        report.push(
            shape,
            path,
            format!("{} became {}", describe(old), describe(new)),
        );
    };
    match (old, new) {
        (VarType::Scalar(a), VarType::Scalar(b)) if a == b => {}
        (VarType::String, VarType::String) => {}
        // A sibling interface moves with its package; only the major must hold.
        (VarType::Interface(a), VarType::Interface(b))
            if a.same_family(b) && a.package.version.major == b.package.version.major => {}
        (VarType::Vector(a), VarType::Vector(b)) => {
            compare_type(report, &format!("{path}[]"), a, b, in_struct)
        }
        (VarType::Enum(a), VarType::Enum(b)) if unversioned(&a.name) == unversioned(&b.name) => {
            if a.scalar != b.scalar {
                return changed(report);
            }
            let mut new_values: HashMap<&str, Vec<i64>> = HashMap::new();
            for (n, v) in &b.enumerators {
                new_values.entry(n.as_str()).or_default().push(*v);
            }
            for (name, value) in &a.enumerators {
                match new_values.get(name.as_str()) {
                    None => report.push(
                        Rule::EnumValueRemoved,
                        format!("{path}: {}", a.name),
                        format!("{name} = {value} removed"),
                    ),
                    Some(vs) if !vs.contains(value) => report.push(
                        Rule::EnumValueRenumbered,
                        format!("{path}: {}", a.name),
                        format!("{name} changed from {value} to {}", vs[0]),
                    ),
                    Some(_) => {}
                }
            }
        }
        (VarType::Struct(a), VarType::Struct(b))
            if unversioned(&a.name) == unversioned(&b.name) =>
        {
            let names = |fs: &[VarSpec]| fs.iter().map(|f| f.name.clone()).collect::<Vec<_>>();
            if names(&a.fields) != names(&b.fields) {
                report.push(
                    Rule::StructChanged,
                    format!("{path}: {}", a.name),
                    format!(
                        "fields [{}] became [{}]",
                        names(&a.fields).join(", "),
                        names(&b.fields).join(", ")
                    ),
                );
                return;
            }
            for (fa, fb) in a.fields.iter().zip(&b.fields) {
                compare_type(report, &format!("{path}.{}", fa.name), &fa.ty, &fb.ty, true);
            }
        }
        _ => changed(report),
    }
}

fn compare_vars(
    report: &mut CompatReport,
    method: &str,
    what: &str,
    old: &[VarSpec],
    new: &[VarSpec],
) {
    let names = |vs: &[VarSpec]| vs.iter().map(|v| v.name.clone()).collect::<Vec<_>>();
    if names(old) != names(new) {
        report.push(
            Rule::SignatureChanged,
            method,
            format!(
                "{what} ({}) became ({})",
                names(old).join(", "),
                names(new).join(", ")
            ),
        );
        return;
    }
    for (o, n) in old.iter().zip(new) {
        compare_type(
            report,
            &format!("{method}.{what}.{}", o.name),
            &o.ty,
            &n.ty,
            false,
        );
    }
}

fn compare_api(report: &mut CompatReport, old: &ApiSpec, new: &ApiSpec) {
    if old.oneway != new.oneway {
        report.push(
            Rule::OnewayChanged,
            &old.name,
            format!("oneway was {}, now {}", old.oneway, new.oneway),
        );
    }
    compare_vars(report, &old.name, "args", &old.args, &new.args);
    compare_vars(report, &old.name, "returns", &old.returns, &new.returns);
}

/// Whether a client built against `old` keeps working against `new`.
///
/// Methods of `old` must survive in `new` unchanged and in the same order,
/// with new methods only after them. Enums may gain enumerators; structs
/// must keep their exact fields.
pub fn check_interface_compat(
    old: &InterfaceSpec,
    new: &InterfaceSpec,
) -> Result<CompatReport, PackageMismatch> {
    let (of, nf) = (old.fqname(), new.fqname());
    if !of.same_family(&nf) {
        return Err(PackageMismatch {
            old: of.to_string(),
            new: nf.to_string(),
        });
    }
    let mut report = CompatReport::default();
    if old.version.major != new.version.major {
        report.push(
            Rule::MajorMismatch,
            nf.to_string(),
            format!(
                "major {} cannot replace major {}",
                new.version.major, old.version.major
            ),
        );
        return Ok(report);
    }
    if new.version.minor < old.version.minor {
        report.push(
            Rule::MinorDowngrade,
            nf.to_string(),
            format!("{} is older than {}", new.version, old.version),
        );
    }

    let new_index: HashMap<&str, usize> = new
        .apis
        .iter()
        .enumerate()
        .map(|(i, a)| (a.name.as_str(), i))
        .collect();
    let mut kept = Vec::new();
    for api in &old.apis {
        match new_index.get(api.name.as_str()) {
            None => report.push(
                Rule::RemovedMethod,
                &api.name,
                format!("{} no longer declares it", nf),
            ),
            Some(&i) => {
                compare_api(&mut report, api, &new.apis[i]);
                kept.push((api.name.as_str(), i));
            }
        }
    }
    // Surviving methods keep their relative order...
    for pair in kept.windows(2) {
        if pair[1].1 < pair[0].1 {
            report.push(
                Rule::MethodReordered,
                pair[1].0,
                format!("now placed before {}", pair[0].0),
            );
        }
    }
    // ...and every added method comes after all of them.
    let last_kept = kept.iter().map(|(_, i)| *i).max();
    let old_names: Vec<&str> = old.apis.iter().map(|a| a.name.as_str()).collect();
    for (i, api) in new.apis.iter().enumerate() {
        if !old_names.contains(&api.name.as_str()) && last_kept.is_some_and(|last| i < last) {
            report.push(
                Rule::MethodReordered,
                &api.name,
                "added method placed before existing ones",
            );
        }
    }
    Ok(report)
}
