mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treble::compat::*;
use treble::demo;
use treble::idl::{Scalar, SourceFile, Version};
use treble::ir::{ApiSpec, InterfaceSpec, VarSpec, VarType};
use treble::pipeline::compile_sources;
use treble::runtime::{HalEntry, VendorManifest};
use treble::wire::{select, ServiceRecord, Transport};

use common::oracle::{as_set, closure_oracle, random_graph};

fn light_source(dir: &str) -> String {
    std::fs::read_to_string(format!(
        "{}/hal/{dir}/ILight.hal",
        env!("CARGO_MANIFEST_DIR")
    ))
    .unwrap()
}

/// Compiles an edited copy of the light 1.0 document as a later minor.
fn edited_light(edit: impl Fn(String) -> String) -> InterfaceSpec {
    let text = edit(light_source("light10").replace("demo.light@1.0", "demo.light@1.1"));
    let specs = compile_sources(&[SourceFile::new("edited.hal", text)]).unwrap();
    specs
        .into_iter()
        .find(|s| s.component_name == "ILight")
        .unwrap()
}

fn vehicle_edit(edit: impl Fn(String) -> String) -> InterfaceSpec {
    let mut files = demo::vehicle_sources();
    for f in &mut files {
        f.text = edit(f.text.replace("vehicle@2.0", "vehicle@2.1"));
    }
    compile_sources(&files)
        .unwrap()
        .into_iter()
        .find(|s| s.component_name == "IVehicle")
        .unwrap()
}

fn rules(old: &InterfaceSpec, new: &InterfaceSpec) -> Vec<Rule> {
    let mut r = check_interface_compat(old, new).unwrap().rules();
    r.dedup();
    r
}

#[test]
fn additive_minor_is_compatible() {
    let old = demo::spec(demo::LIGHT_1_0);
    let new = demo::spec(demo::LIGHT_1_1);
    let report = check_interface_compat(&old, &new).unwrap();
    assert_eq!(report.verdict(), Verdict::Compatible, "{report}");
    // The reverse direction is a downgrade that also loses a method.
    assert_eq!(
        rules(&new, &old),
        [Rule::MinorDowngrade, Rule::RemovedMethod]
    );
}

#[test]
fn removed_method_is_flagged() {
    let old = demo::spec(demo::VEHICLE);
    let new = vehicle_edit(|t| {
        t.replace(
            "getPropConfigs(vec<int32_t> props) generates (StatusCode status, vec<VehiclePropConfig> propConfigs);",
            "",
        )
    });
    let report = check_interface_compat(&old, &new).unwrap();
    assert_eq!(report.rules(), [Rule::RemovedMethod]);
    assert_eq!(report.violations[0].subject, "getPropConfigs");
}

#[test]
fn changed_argument_type_is_flagged() {
    let old = demo::spec(demo::VEHICLE);
    let new = vehicle_edit(|t| {
        t.replace(
            "getPropConfigs(vec<int32_t> props)",
            "getPropConfigs(vec<int64_t> props)",
        )
    });
    let report = check_interface_compat(&old, &new).unwrap();
    assert_eq!(report.rules(), [Rule::SignatureChanged]);
    assert_eq!(report.violations[0].subject, "getPropConfigs.args.props[]");
}

#[test]
fn changed_oneway_flag_is_flagged() {
    let old = demo::spec(demo::ECHO);
    let mut new = (*old).clone();
    new.version.minor = 1;
    new.apis
        .iter_mut()
        .find(|a| a.name == "notify")
        .unwrap()
        .oneway = false;
    let report = check_interface_compat(&old, &new).unwrap();
    assert_eq!(report.rules(), [Rule::OnewayChanged]);
    assert_eq!(report.violations[0].subject, "notify");
}

#[test]
fn removed_enum_value_is_flagged() {
    let old = demo::spec(demo::LIGHT_1_0);
    let new = edited_light(|t| t.replace("    UNKNOWN = 3,\n", ""));
    assert_eq!(rules(&old, &new), [Rule::EnumValueRemoved]);
}

#[test]
fn renumbered_and_appended_enum_values() {
    let old = demo::spec(demo::LIGHT_1_0);
    let renumbered = edited_light(|t| t.replace("UNKNOWN = 3", "UNKNOWN = 9"));
    assert_eq!(rules(&old, &renumbered), [Rule::EnumValueRenumbered]);
    let appended = edited_light(|t| t.replace("UNKNOWN = 3,", "UNKNOWN = 3,\n    OVERHEATED = 4,"));
    assert!(check_interface_compat(&old, &appended)
        .unwrap()
        .is_compatible());
}

#[test]
fn struct_and_order_changes_are_flagged() {
    let old = demo::spec(demo::LIGHT_1_0);
    let grown =
        edited_light(|t| t.replace("int32_t offMs;", "int32_t offMs;\n    int32_t rampMs;"));
    assert_eq!(rules(&old, &grown), [Rule::StructChanged]);
    let retyped = edited_light(|t| t.replace("int32_t offMs;", "uint32_t offMs;"));
    let report = check_interface_compat(&old, &retyped).unwrap();
    assert_eq!(report.rules(), [Rule::StructChanged]);
    assert_eq!(report.violations[0].subject, "setLight.args.state.offMs");

    let mut swapped = (*old).clone();
    swapped.version.minor = 1;
    swapped.apis.swap(0, 1);
    assert_eq!(rules(&old, &swapped), [Rule::MethodReordered]);

    let mut inserted = (*demo::spec(demo::LIGHT_1_1)).clone();
    let ramp = inserted.apis.pop().unwrap();
    inserted.apis.insert(0, ramp);
    assert_eq!(rules(&old, &inserted), [Rule::MethodReordered]);
}

#[test]
fn different_interfaces_cannot_be_compared() {
    let err =
        check_interface_compat(&demo::spec(demo::LIGHT_1_0), &demo::spec(demo::ECHO)).unwrap_err();
    assert_eq!(err.old, demo::LIGHT_1_0);
    assert!(rules(&demo::spec(demo::ANDROID_LIGHT), &{
        let mut s = (*demo::spec(demo::ANDROID_LIGHT)).clone();
        s.version.major = 2;
        s
    })
    .contains(&Rule::MajorMismatch));
}

/// Every scalar leaf of a var list as (path, type name), found by a plain
/// recursive walk that knows nothing of the rule engine.
fn flatten(vars: &[VarSpec]) -> Vec<(String, String)> {
    fn walk(out: &mut Vec<(String, String)>, path: String, ty: &VarType) {
        match ty {
            VarType::Scalar(s) => out.push((path, s.as_str().into())),
            VarType::String => out.push((path, "string".into())),
            VarType::Interface(fq) => out.push((path, fq.to_string())),
            VarType::Enum(e) => out.push((
                path,
                format!("enum {} {:?} {:?}", e.name, e.scalar, e.enumerators),
            )),
            VarType::Vector(e) => walk(out, format!("{path}[]"), e),
            VarType::Struct(s) => {
                out.push((path.clone(), format!("struct {}", s.name)));
                for f in &s.fields {
                    walk(out, format!("{path}.{}", f.name), &f.ty);
                }
            }
        }
    }
    let mut out = Vec::new();
    for v in vars {
        walk(&mut out, v.name.clone(), &v.ty);
    }
    out
}

/// Replaces the `n`-th scalar leaf (in walk order) of `ty` with `to`.
fn replace_nth_scalar(ty: &mut VarType, n: &mut usize, to: Scalar) -> bool {
    match ty {
        VarType::Scalar(s) => {
            if *n == 0 {
                *s = to;
                return true;
            }
            *n -= 1;
            false
        }
        VarType::Vector(e) => replace_nth_scalar(e, n, to),
        VarType::Struct(s) => s
            .fields
            .iter_mut()
            .any(|f| replace_nth_scalar(&mut f.ty, n, to)),
        _ => false,
    }
}

#[test]
fn scalar_edits_match_a_structural_diff_oracle() {
    let mut checked = 0;
    for old in demo::specs().values() {
        for (ai, api) in old.apis.iter().enumerate() {
            for (vi, var) in api.args.iter().chain(&api.returns).enumerate() {
                for leaf in 0.. {
                    let mut probe = var.ty.clone();
                    if !replace_nth_scalar(&mut probe, &mut { leaf }, Scalar::Int32) {
                        break;
                    }
                    for to in Scalar::ALL {
                        let mut new = (**old).clone();
                        new.version.minor += 1;
                        let target = if vi < api.args.len() {
                            &mut new.apis[ai].args[vi].ty
                        } else {
                            &mut new.apis[ai].returns[vi - api.args.len()].ty
                        };
                        replace_nth_scalar(target, &mut { leaf }, to);
                        let diff_old = [flatten(&api.args), flatten(&api.returns)];
                        let diff_new =
                            [flatten(&new.apis[ai].args), flatten(&new.apis[ai].returns)];
                        let report = check_interface_compat(old, &new).unwrap();
                        assert_eq!(
                            report.is_compatible(),
                            diff_old == diff_new,
                            "{} {}: {report}",
                            old.fqname(),
                            api.name
                        );
                        if diff_old != diff_new {
                            let nested = flatten(std::slice::from_ref(var))
                                .iter()
                                .any(|(_, t)| t.starts_with("struct"));
                            let want = if nested {
                                Rule::StructChanged
                            } else {
                                Rule::SignatureChanged
                            };
                            assert_eq!(report.rules(), [want]);
                        }
                        checked += 1;
                    }
                }
            }
        }
    }
    assert!(checked > 100, "only {checked} edits");
}

#[test]
fn snapshot_window_table() {
    let p = SnapshotPolicy::default();
    assert_eq!(p.window, 3);
    for s in [
        Version::new(8, 0),
        Version::new(8, 1),
        Version::new(9, 0),
        Version::new(10, 0),
    ] {
        assert!(snapshot_supported(10, s, p), "platform 10 must support {s}");
    }
    assert!(!snapshot_supported(11, Version::new(8, 1), p));
    assert!(!snapshot_supported(11, Version::new(8, 0), p));
    assert!(snapshot_supported(11, Version::new(9, 0), p));
    assert!(snapshot_supported(11, Version::new(11, 0), p));
    assert!(!snapshot_supported(10, Version::new(11, 0), p));
    assert!(!snapshot_supported(10, Version::new(7, 9), p));
    let report = check_snapshots(11, &[Version::new(8, 1), Version::new(10, 0)], p);
    assert_eq!(report.rules(), [Rule::SnapshotUnsupported]);
    assert_eq!(report.violations[0].subject, "vndk@8.1");
}

proptest! {
    #[test]
    fn current_major_is_always_supported(major in 0u32..1000, minor in any::<u32>(), window in 1u32..10) {
        let policy = SnapshotPolicy { window };
        prop_assert!(snapshot_supported(major, Version::new(major, minor), policy));
    }

    #[test]
    fn minors_never_matter(platform in 0u32..50, major in 0u32..50, a in any::<u32>(), b in any::<u32>()) {
        let p = SnapshotPolicy::default();
        prop_assert_eq!(
            snapshot_supported(platform, Version::new(major, a), p),
            snapshot_supported(platform, Version::new(major, b), p)
        );
    }
}

fn manifest(entries: &[(&str, u32, u32)]) -> VendorManifest {
    VendorManifest::new(
        entries
            .iter()
            .map(|(n, a, b)| HalEntry {
                name: n.to_string(),
                version: Version::new(*a, *b),
                transport: Transport::Binderized,
            })
            .collect(),
        Version::new(10, 0),
    )
}

#[test]
fn framework_requirements() {
    let device = manifest(&[("demo.light", 1, 1), ("hardware.automotive.vehicle", 1, 1)]);
    let req = |s: &str| s.parse::<Requirement>().unwrap();
    assert!(check_manifest_against_framework(&device, &[req("demo.light@1.0")]).is_compatible());
    assert!(
        check_manifest_against_framework(&device, &[req("demo.light@1.0::ILight")]).is_compatible()
    );
    assert_eq!(
        check_manifest_against_framework(&device, &[req("hardware.automotive.vehicle@2.0")])
            .rules(),
        [Rule::MajorMismatch]
    );
    assert!(check_manifest_against_framework(&device, &[]).is_compatible());
    assert_eq!(
        check_manifest_against_framework(&device, &[req("demo.light@1.2"), req("demo.echo@1.0")])
            .rules(),
        [Rule::MinorTooLow, Rule::MissingHal]
    );
}

#[test]
fn lookup_results_are_always_compatible() {
    let specs: Vec<_> = [demo::LIGHT_1_0, demo::LIGHT_1_1].map(demo::spec).to_vec();
    let records: Vec<ServiceRecord> = specs
        .iter()
        .map(|s| ServiceRecord {
            fqname: s.fqname(),
            instance: "default".into(),
            endpoint: "/tmp/x".parse().unwrap(),
            transport: Transport::Binderized,
        })
        .collect();
    for req in &specs {
        for offered in 0..=records.len() {
            if let Some(r) = select(&records[..offered], &req.fqname(), "default") {
                let served = specs.iter().find(|s| s.fqname() == r.fqname).unwrap();
                assert!(check_interface_compat(req, served).unwrap().is_compatible());
            }
        }
    }
}

// Dependency closure.

#[test]
fn dependency_examples() {
    let libs = [
        LibraryManifest::new("libc", Category::LlNdk, &[]),
        LibraryManifest::new("libbase", Category::Vndk, &["libc"]),
        LibraryManifest::new("libgui_private", Category::SystemPrivate, &["libc"]),
        LibraryManifest::new(
            "libcamera_hal",
            Category::Vendor,
            &["libbase", "libgui_private", "libghost"],
        ),
    ];
    let report = check_dependency_closure(&libs, Namespace::Vendor);
    let found: Vec<(Rule, &str)> = report
        .violations
        .iter()
        .map(|v| (v.rule, v.subject.as_str()))
        .collect();
    assert_eq!(
        found,
        [
            (Rule::MissingDep, "libcamera_hal -> libghost"),
            (Rule::NamespaceViolation, "libcamera_hal -> libgui_private"),
        ]
    );
    let vndk_ok = [
        LibraryManifest::new("libc", Category::Ndk, &[]),
        LibraryManifest::new("libbase", Category::Vndk, &["libc"]),
    ];
    assert!(check_dependency_closure(&vndk_ok, Namespace::System).is_compatible());
}

#[test]
fn library_manifest_text() {
    let text = "lib: { name: \"libfoo\" category: VNDK deps: \"liba, libb\" }\nlib: { name: \"liba\" category: NDK }\n";
    let libs = parse_library_manifests(text).unwrap();
    assert_eq!(
        libs[0],
        LibraryManifest::new("libfoo", Category::Vndk, &["liba", "libb"])
    );
    assert_eq!(libs[1], LibraryManifest::new("liba", Category::Ndk, &[]));
    assert!(parse_library_manifests(
        "lib: { name: \"a\" category: NDK }\nlib: { name: \"a\" category: NDK }"
    )
    .is_err());
    assert!(parse_library_manifests("lib: { name: \"a\" category: KERNEL }").is_err());
    let round = libs
        .iter()
        .map(|l| format!("lib: {}", l.to_block().render().replace('\n', " ")))
        .collect::<Vec<_>>();
    assert!(!round.is_empty());
}

#[test]
fn closure_matches_the_edge_scan_oracle_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    for g in 0..100 {
        let libs = random_graph(&mut rng, 50);
        for origin in [Namespace::System, Namespace::Vendor] {
            let report = check_dependency_closure(&libs, origin);
            assert_eq!(
                report.violations.len(),
                as_set(&report).len(),
                "duplicate violations"
            );
            assert_eq!(
                as_set(&report),
                closure_oracle(&libs, origin),
                "graph {g} from {origin}"
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closure_report_ignores_input_order(seed in any::<u64>(), shuffle in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let libs = random_graph(&mut rng, 20);
        let mut shuffled = libs.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle));
        for lib in &mut shuffled {
            lib.deps.reverse();
        }
        for origin in [Namespace::System, Namespace::Vendor] {
            prop_assert_eq!(
                check_dependency_closure(&libs, origin),
                check_dependency_closure(&shuffled, origin)
            );
        }
    }

    #[test]
    fn interface_compat_is_reflexive(spec in common::interface_spec()) {
        let report = check_interface_compat(&spec, &spec).unwrap();
        prop_assert!(report.is_compatible(), "{}", report);
    }

    #[test]
    fn compatible_minor_chains_are_transitive(
        base in common::interface_spec(),
        seeds in prop::collection::vec(any::<u64>(), 2),
    ) {
        let second = evolve(&base, seeds[0]);
        let third = evolve(&second, seeds[1]);
        let ab = check_interface_compat(&base, &second).unwrap().is_compatible();
        let bc = check_interface_compat(&second, &third).unwrap().is_compatible();
        let ac = check_interface_compat(&base, &third).unwrap().is_compatible();
        prop_assert!(!(ab && bc) || ac);
    }
}

/// A next version of `spec`: usually additive, sometimes breaking.
fn evolve(spec: &InterfaceSpec, seed: u64) -> InterfaceSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut next = spec.clone();
    next.version.minor += rng.gen_range(0..2);
    for _ in 0..rng.gen_range(0..3) {
        match rng.gen_range(0..10) {
            0..=4 => next.apis.push(ApiSpec {
                name: format!("added{}", next.apis.len()),
                is_inherited: false,
                oneway: false,
                args: vec![VarSpec::new("x", VarType::Scalar(Scalar::Int32))],
                returns: vec![],
            }),
            5 if !next.apis.is_empty() => {
                let i = rng.gen_range(0..next.apis.len());
                next.apis.remove(i);
            }
            6 if !next.apis.is_empty() => {
                let i = rng.gen_range(0..next.apis.len());
                next.apis[i].oneway = !next.apis[i].oneway;
            }
            7 if next.apis.len() > 1 => next.apis.swap(0, 1),
            8 => next.version.minor = next.version.minor.saturating_sub(1),
            _ => {
                if let Some(api) = next.apis.iter_mut().find(|a| !a.args.is_empty()) {
                    api.args[0].ty = VarType::Vector(Box::new(api.args[0].ty.clone()));
                }
            }
        }
    }
    next
}

#[test]
fn report_text_forms() {
    let old = demo::spec(demo::LIGHT_1_1);
    let report = check_interface_compat(&old, &demo::spec(demo::LIGHT_1_0)).unwrap();
    let text = report.to_string();
    assert!(text.starts_with("INCOMPATIBLE\n  MINOR_DOWNGRADE "));
    let block = report.to_block_text();
    assert!(block.starts_with("verdict: INCOMPATIBLE\nviolation: {\n  rule: MINOR_DOWNGRADE\n"));
    assert_eq!(
        CompatReport::default().to_block_text(),
        "verdict: COMPATIBLE\n"
    );
}
