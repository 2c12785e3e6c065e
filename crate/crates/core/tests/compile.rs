mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use treble::demo;
use treble::idl::{self, PackageId, Scalar, SourceFile};
use treble::ir::{self, emit_spec_text, parse_spec_text, EnumSpec, StructSpec, VarSpec, VarType};
use treble::pipeline::{compile_sources, parse_all};

const VEHICLE_PKG: &str = "hardware.automotive.vehicle@2.0";

fn scalar(s: Scalar) -> VarType {
    VarType::Scalar(s)
}

fn vec_of(t: VarType) -> VarType {
    VarType::Vector(Box::new(t))
}

fn hand_written_prop_config() -> VarType {
    VarType::Struct(StructSpec {
        name: format!("{VEHICLE_PKG}::VehiclePropConfig"),
        fields: vec![
            VarSpec::new("prop", scalar(Scalar::Int32)),
            VarSpec::new(
                "access",
                VarType::Enum(EnumSpec {
                    name: format!("{VEHICLE_PKG}::VehiclePropertyAccess"),
                    scalar: Scalar::Int32,
                    enumerators: vec![
                        ("NONE".into(), 0),
                        ("READ".into(), 1),
                        ("WRITE".into(), 2),
                        ("READ_WRITE".into(), 3),
                    ],
                }),
            ),
            VarSpec::new("changeMode", scalar(Scalar::Int32)),
            VarSpec::new("configString", VarType::String),
            VarSpec::new("minSampleRate", scalar(Scalar::Float)),
            VarSpec::new("maxSampleRate", scalar(Scalar::Float)),
        ],
    })
}

fn hand_written_status() -> VarType {
    VarType::Enum(EnumSpec {
        name: format!("{VEHICLE_PKG}::StatusCode"),
        scalar: Scalar::Int32,
        enumerators: [
            "OK",
            "TRY_AGAIN",
            "INVALID_ARG",
            "NOT_AVAILABLE",
            "ACCESS_DENIED",
            "INTERNAL_ERROR",
        ]
        .iter()
        .enumerate()
        .map(|(i, n)| (n.to_string(), i as i64))
        .collect(),
    })
}

#[test]
fn vehicle_get_prop_configs_matches_hand_written_spec() {
    let specs = compile_sources(&demo::vehicle_sources()).unwrap();
    let vehicle = specs
        .iter()
        .find(|s| s.component_name == "IVehicle")
        .unwrap();
    assert_eq!(vehicle.package, "hardware.automotive.vehicle");
    assert_eq!(vehicle.version.to_string(), "2.0");
    let names: Vec<_> = vehicle.apis.iter().map(|a| a.name.as_str()).collect();
    assert_eq!(names, ["getAllPropConfigs", "getPropConfigs", "subscribe"]);

    let api = vehicle.api("getPropConfigs").unwrap();
    assert!(!api.is_inherited);
    assert!(!api.oneway);
    assert_eq!(
        api.args,
        vec![VarSpec::new("props", vec_of(scalar(Scalar::Int32)))]
    );
    assert_eq!(
        api.returns,
        vec![
            VarSpec::new("status", hand_written_status()),
            VarSpec::new("propConfigs", vec_of(hand_written_prop_config())),
        ]
    );

    let subscribe = vehicle.api("subscribe").unwrap();
    assert_eq!(
        subscribe.args[0].ty,
        VarType::Interface(format!("{VEHICLE_PKG}::IVehicleCallback").parse().unwrap())
    );
}

#[test]
fn vehicle_spec_text_is_byte_stable() {
    let golden = include_str!("golden/IVehicle.spec");
    let spec = demo::spec(demo::VEHICLE);
    assert_eq!(emit_spec_text(&spec), golden);
    for _ in 0..3 {
        let again = compile_sources(&demo::vehicle_sources()).unwrap();
        let v = again
            .iter()
            .find(|s| s.component_name == "IVehicle")
            .unwrap();
        assert_eq!(emit_spec_text(v), golden);
    }
    assert_eq!(&parse_spec_text(golden).unwrap(), &*spec);
}

#[test]
fn vendor_extension_lists_inherited_methods_first() {
    let spec = demo::spec(demo::BESTMFR_LIGHT);
    let got: Vec<(&str, bool, bool)> = spec
        .apis
        .iter()
        .map(|a| (a.name.as_str(), a.is_inherited, a.oneway))
        .collect();
    assert_eq!(
        got,
        [
            ("setLight", true, false),
            ("getSupportedTypes", true, false),
            ("setPattern", false, false),
            ("pulse", false, true),
        ]
    );
    // `Status` in the vendor package resolves through the import.
    let ret = &spec.api("setPattern").unwrap().returns[0].ty;
    match ret {
        VarType::Enum(e) => assert_eq!(e.name, "android.hardware.light@1.0::Status"),
        other => panic!("expected enum, got {other:?}"),
    }
}

#[test]
fn minor_upgrade_inherits_previous_minor() {
    let spec = demo::spec(demo::LIGHT_1_1);
    let base = demo::spec(demo::LIGHT_1_0);
    let inherited: Vec<_> = spec
        .apis
        .iter()
        .filter(|a| a.is_inherited)
        .map(|a| &a.name)
        .collect();
    let base_names: Vec<_> = base.apis.iter().map(|a| &a.name).collect();
    assert_eq!(inherited, base_names);
    assert_eq!(spec.apis.last().unwrap().name, "setBrightnessRamp");
}

#[test]
fn every_demo_spec_round_trips_through_text() {
    for spec in demo::specs().values() {
        let text = emit_spec_text(spec);
        assert_eq!(&parse_spec_text(&text).unwrap(), &**spec);
    }
}

#[test]
fn compile_ignores_document_order() {
    let keyed = |files: &[SourceFile]| -> BTreeMap<String, String> {
        compile_sources(files)
            .unwrap()
            .iter()
            .map(|s| (s.fqname().to_string(), emit_spec_text(s)))
            .collect()
    };
    let mut files = demo::sources();
    let forward = keyed(&files);
    files.reverse();
    assert_eq!(keyed(&files), forward);
}

#[test]
fn resolving_twice_gives_the_same_package() {
    let packages = parse_all(&demo::sources()).unwrap();
    for ast in packages.values() {
        let once = idl::resolve(ast, &packages).unwrap();
        let twice = idl::resolve(&once.ast, &packages).unwrap();
        assert_eq!(ir::compile(&once), ir::compile(&twice));
    }
}

#[test]
fn missing_import_is_reported() {
    let files = [SourceFile::new(
        "x.hal",
        "package demo.x@1.0;\ninterface IX { f(Unknown u) generates (int32_t r); };",
    )];
    assert!(compile_sources(&files).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(600))]

    #[test]
    fn rendered_package_parses_back(ast in common::package_ast()) {
        let text = idl::render_package(&ast);
        let doc = SourceFile::new("gen.hal", text.clone());
        let parsed = idl::parse_package(&[doc], &ast.id)
            .map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(parsed, ast);
    }

    #[test]
    fn spec_text_round_trips(spec in common::interface_spec()) {
        let text = emit_spec_text(&spec);
        let parsed = parse_spec_text(&text)
            .map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&parsed, &spec);
        prop_assert_eq!(emit_spec_text(&parsed), text);
    }

    #[test]
    fn imports_can_be_reordered(seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let packages = parse_all(&demo::sources()).unwrap();
        let baseline: BTreeMap<PackageId, _> = packages
            .iter()
            .map(|(id, ast)| (id.clone(), ir::compile(&idl::resolve(ast, &packages).unwrap())))
            .collect();
        for (id, ast) in &packages {
            let mut shuffled = ast.clone();
            shuffled.imports.shuffle(&mut rng);
            let got = ir::compile(&idl::resolve(&shuffled, &packages).unwrap());
            prop_assert_eq!(&got, &baseline[id]);
        }
    }
}
