//! Independent oracles shared by the unit suites and the acceptance run.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use treble::compat::{Category, CompatReport, LibraryManifest, Namespace};
use treble::testkit::ModuleTrace;

/// The dependency matrix spelled out pair by pair.
pub const ALLOWED: &[(&str, &str)] = &[
    ("LL_NDK", "LL_NDK"),
    ("NDK", "LL_NDK"),
    ("NDK", "NDK"),
    ("VNDK", "LL_NDK"),
    ("VNDK", "NDK"),
    ("VNDK", "VNDK"),
    ("VENDOR", "LL_NDK"),
    ("VENDOR", "NDK"),
    ("VENDOR", "VNDK"),
    ("VENDOR", "VENDOR"),
    ("SYSTEM_PRIVATE", "LL_NDK"),
    ("SYSTEM_PRIVATE", "NDK"),
    ("SYSTEM_PRIVATE", "VNDK"),
    ("SYSTEM_PRIVATE", "SYSTEM_PRIVATE"),
];

/// Exhaustive scan: reachability by fixpoint over a boolean matrix, then
/// every edge out of a reachable node checked against the pair table.
pub fn closure_oracle(libs: &[LibraryManifest], origin: Namespace) -> BTreeSet<(String, String)> {
    let n = libs.len();
    let index = |name: &str| libs.iter().position(|l| l.name == name);
    let mut reach: Vec<bool> = libs
        .iter()
        .map(|l| (l.category == Category::Vendor) == (origin == Namespace::Vendor))
        .collect();
    loop {
        let mut changed = false;
        for i in 0..n {
            if !reach[i] {
                continue;
            }
            for d in &libs[i].deps {
                if let Some(j) = index(d) {
                    if !reach[j] {
                        reach[j] = true;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut out = BTreeSet::new();
    for i in (0..n).filter(|&i| reach[i]) {
        let from = &libs[i];
        for d in &from.deps {
            let edge = format!("{} -> {d}", from.name);
            let rule = match index(d) {
                None => "MISSING_DEP",
                Some(j) => {
                    let (a, b) = (from.category.as_str(), libs[j].category.as_str());
                    if ALLOWED.contains(&(a, b)) {
                        continue;
                    } else if (a, b) == ("VENDOR", "SYSTEM_PRIVATE") {
                        "NAMESPACE_VIOLATION"
                    } else {
                        "DISALLOWED_DEP"
                    }
                }
            };
            out.insert((rule.to_string(), edge));
        }
    }
    out
}

pub fn random_graph(rng: &mut ChaCha8Rng, nodes: usize) -> Vec<LibraryManifest> {
    let names: Vec<String> = (0..nodes).map(|i| format!("lib{i}")).collect();
    names
        .iter()
        .map(|name| {
            let deps: Vec<String> = (0..rng.gen_range(0..5))
                .map(|_| {
                    if rng.gen_bool(0.05) {
                        format!("libmissing{}", rng.gen_range(0..3))
                    } else {
                        names.choose(rng).unwrap().clone()
                    }
                })
                .collect();
            LibraryManifest {
                name: name.clone(),
                category: *Category::ALL.choose(rng).unwrap(),
                deps,
            }
        })
        .collect()
}

pub fn as_set(report: &CompatReport) -> BTreeSet<(String, String)> {
    report
        .violations
        .iter()
        .map(|v| (v.rule.id().to_string(), v.subject.clone()))
        .collect()
}

/// Literal reading of the selection rule: try every module against every
/// noise entry, then sort with an explicit comparator.
pub fn select_oracle(modules: &[ModuleTrace], noise: &BTreeMap<String, u64>) -> Vec<String> {
    let mut picked: Vec<(&ModuleTrace, u64)> = Vec::new();
    'modules: for m in modules {
        let mut overlap = 0u64;
        for (hal, &bytes) in &m.sizes {
            let Some(&n) = noise.get(hal) else {
                continue 'modules;
            };
            let (lo, hi) = if bytes < n { (bytes, n) } else { (n, bytes) };
            if (hi as f64) > 10.0 * lo as f64 {
                continue 'modules;
            }
            overlap += lo;
        }
        picked.push((m, overlap));
    }
    picked.sort_by(|a, b| {
        b.0.duration
            .cmp(&a.0.duration)
            .then(b.1.cmp(&a.1))
            .then(a.0.name.cmp(&b.0.name))
    });
    picked.into_iter().map(|(m, _)| m.name.clone()).collect()
}

pub fn six_modules() -> (Vec<ModuleTrace>, BTreeMap<String, u64>) {
    let s = Duration::from_secs;
    let modules = vec![
        ModuleTrace::new("camera_cts", s(600)).with("camera", 50_000),
        ModuleTrace::new("light_vts", s(30)).with("light", 900),
        ModuleTrace::new("vehicle_vts", s(120))
            .with("vehicle", 4_000)
            .with("light", 100),
        ModuleTrace::new("media_cts", s(900)).with("media", 10),
        ModuleTrace::new("sensors_vts", s(120)).with("sensors", 2_000),
        ModuleTrace::new("wifi_vts", s(45)).with("wifi", 1),
    ];
    let noise = BTreeMap::from([
        ("camera".to_string(), 20_000),
        ("light".to_string(), 1_000),
        ("vehicle".to_string(), 40_000),
        ("media".to_string(), 1_000_000),
        ("sensors".to_string(), 2_000),
    ]);
    (modules, noise)
}
