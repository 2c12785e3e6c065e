//! Demo HAL packages and implementations used by the examples, tests and
//! the command-line tool.

mod echo;
mod light;
mod mapper;
mod suite;
mod vehicle;

pub use echo::{echo_service, echo_with_log, faulty_echo, NotifyLog, FAULTY_MODE};
pub use light::{inproc_light, ledstrip_light, light_1_1, reference_light};
pub use mapper::mapper_service;
pub use suite::{framework_suite, CheckOutcome, SuiteReport};
pub use vehicle::{vehicle_service, VehicleOptions};

/// Value builders and constants for talking to the demo services.
pub mod values {
    pub use super::light::*;
    pub use super::mapper::{descriptor_info, error_code, BAD_BUFFER, BAD_DESCRIPTOR, NONE};
    pub use super::vehicle::{
        event_sequence, prop_value, status_code, subscribe_options, GEAR_SELECTION, INFO_MAKE,
        PERF_VEHICLE_SPEED, STATUS_INVALID_ARG, STATUS_OK,
    };
}

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use crate::idl::SourceFile;
use crate::ir::InterfaceSpec;
use crate::pipeline;

macro_rules! hal {
    ($path:literal) => {
        SourceFile::new($path, include_str!(concat!("../../hal/", $path)))
    };
}

pub const VEHICLE: &str = "hardware.automotive.vehicle@2.0::IVehicle";
pub const VEHICLE_CALLBACK: &str = "hardware.automotive.vehicle@2.0::IVehicleCallback";
pub const LIGHT_1_0: &str = "demo.light@1.0::ILight";
pub const LIGHT_1_1: &str = "demo.light@1.1::ILight";
pub const ECHO: &str = "demo.echo@1.0::IEcho";
pub const MAPPER: &str = "demo.graphics.mapper@1.0::IMapper";
pub const ANDROID_LIGHT: &str = "android.hardware.light@1.0::ILight";
pub const BESTMFR_LIGHT: &str = "vendor.bestmfr.light@1.0::ILight";

pub fn vehicle_sources() -> Vec<SourceFile> {
    vec![
        hal!("vehicle/types.hal"),
        hal!("vehicle/IVehicle.hal"),
        hal!("vehicle/IVehicleCallback.hal"),
    ]
}

/// Every demo `.hal` document.
pub fn sources() -> Vec<SourceFile> {
    let mut all = vehicle_sources();
    all.extend([
        hal!("light10/ILight.hal"),
        hal!("light11/ILight.hal"),
        hal!("android_light/ILight.hal"),
        hal!("bestmfr_light/ILight.hal"),
        hal!("echo/IEcho.hal"),
        hal!("mapper/IMapper.hal"),
    ]);
    all
}

/// Compiled specs of every demo interface, keyed by fully-qualified name.
pub fn specs() -> &'static BTreeMap<String, Arc<InterfaceSpec>> {
    static SPECS: OnceLock<BTreeMap<String, Arc<InterfaceSpec>>> = OnceLock::new();
    SPECS.get_or_init(|| {
        pipeline::compile_sources(&sources())
            .expect("demo sources compile")
            .into_iter()
            .map(|s| (s.fqname().to_string(), Arc::new(s)))
            .collect()
    })
}

pub fn spec(fqname: &str) -> Arc<InterfaceSpec> {
    specs()
        .get(fqname)
        .unwrap_or_else(|| panic!("no demo spec {fqname}"))
        .clone()
}
