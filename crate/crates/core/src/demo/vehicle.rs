//! A vehicle HAL with three properties and a publisher thread per
//! subscription.

use std::sync::{Arc, Weak};
use std::thread;
use std::time::{Duration, Instant};

use crate::runtime::{CallbackProxy, Service, ServiceBuilder};
use crate::wire::{Tag, TypedValue};

use super::{spec, VEHICLE};

const PKG: &str = "hardware.automotive.vehicle@2.0";

pub const STATUS_OK: i32 = 0;
pub const STATUS_INVALID_ARG: i32 = 2;

pub const PERF_VEHICLE_SPEED: i32 = 0x1160_0207;
pub const GEAR_SELECTION: i32 = 0x1140_0400;
pub const INFO_MAKE: i32 = 0x1110_0101;

struct PropInfo {
    prop: i32,
    access: i32,
    change_mode: i32,
    config: &'static str,
    min_rate: f32,
    max_rate: f32,
}

const PROPS: [PropInfo; 3] = [
    PropInfo {
        prop: INFO_MAKE,
        access: 1,
        change_mode: 0,
        config: "treble-demo",
        min_rate: 0.0,
        max_rate: 0.0,
    },
    PropInfo {
        prop: GEAR_SELECTION,
        access: 3,
        change_mode: 1,
        config: "",
        min_rate: 0.0,
        max_rate: 0.0,
    },
    PropInfo {
        prop: PERF_VEHICLE_SPEED,
        access: 1,
        change_mode: 2,
        config: "",
        min_rate: 1.0,
        max_rate: 100.0,
    },
];

pub fn status_code(code: i32) -> TypedValue {
    TypedValue::Enum {
        name: format!("{PKG}::StatusCode"),
        ordinal: code,
    }
}

fn config(p: &PropInfo) -> TypedValue {
    TypedValue::Struct {
        name: format!("{PKG}::VehiclePropConfig"),
        fields: vec![
            ("prop".into(), TypedValue::Int32(p.prop)),
            (
                "access".into(),
                TypedValue::Enum {
                    name: format!("{PKG}::VehiclePropertyAccess"),
                    ordinal: p.access,
                },
            ),
            ("changeMode".into(), TypedValue::Int32(p.change_mode)),
            ("configString".into(), TypedValue::str(p.config)),
            ("minSampleRate".into(), TypedValue::Float32(p.min_rate)),
            ("maxSampleRate".into(), TypedValue::Float32(p.max_rate)),
        ],
    }
}

/// One `VehiclePropValue`; `seq` is carried as the sole int32 value so
/// receivers can check ordering.
pub fn prop_value(prop: i32, seq: i32, timestamp: i64) -> TypedValue {
    TypedValue::Struct {
        name: format!("{PKG}::VehiclePropValue"),
        fields: vec![
            ("timestamp".into(), TypedValue::Int64(timestamp)),
            ("prop".into(), TypedValue::Int32(prop)),
            ("areaId".into(), TypedValue::Int32(0)),
            (
                "value".into(),
                TypedValue::Struct {
                    name: format!("{PKG}::RawValue"),
                    fields: vec![
                        (
                            "int32Values".into(),
                            TypedValue::vec(Tag::Int32, vec![TypedValue::Int32(seq)]),
                        ),
                        (
                            "floatValues".into(),
                            TypedValue::vec(
                                Tag::Float32,
                                vec![TypedValue::Float32(seq as f32 * 0.5)],
                            ),
                        ),
                        ("stringValue".into(), TypedValue::str("")),
                    ],
                },
            ),
        ],
    }
}

pub fn subscribe_options(prop: i32, rate: f32) -> TypedValue {
    TypedValue::Struct {
        name: format!("{PKG}::SubscribeOptions"),
        fields: vec![
            ("propId".into(), TypedValue::Int32(prop)),
            ("sampleRate".into(), TypedValue::Float32(rate)),
            ("flags".into(), TypedValue::Int32(0)),
        ],
    }
}

/// The sequence number a receiver finds in one event value.
pub fn event_sequence(value: &TypedValue) -> Option<i32> {
    match value.field("value")?.field("int32Values")?.as_items()? {
        [TypedValue::Int32(seq)] => Some(*seq),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VehicleOptions {
    /// Time between events of one subscription.
    pub period: Duration,
    /// Events per subscription before the publisher stops; unlimited if
    /// unset.
    pub max_events: Option<u32>,
}

impl Default for VehicleOptions {
    fn default() -> Self {
        Self {
            period: Duration::from_millis(20),
            max_events: None,
        }
    }
}

/// Lives as long as the service; publishers stop once it is gone.
struct Alive;

fn publish(callback: CallbackProxy, props: Vec<i32>, options: VehicleOptions, alive: Weak<Alive>) {
    let start = Instant::now();
    let mut seq = 0i32;
    while options.max_events.map_or(true, |m| (seq as u32) < m) {
        if alive.upgrade().is_none() || !callback.is_alive() {
            return;
        }
        let ts = start.elapsed().as_nanos() as i64;
        let values = props.iter().map(|&p| prop_value(p, seq, ts)).collect();
        if callback
            .emit(
                "onPropertyEvent",
                vec![TypedValue::vec(Tag::Struct, values)],
            )
            .is_err()
        {
            return;
        }
        seq += 1;
        thread::sleep(options.period);
    }
}

pub fn vehicle_service(options: VehicleOptions) -> Arc<Service> {
    let alive = Arc::new(Alive);
    ServiceBuilder::new(spec(VEHICLE))
        .method("getAllPropConfigs", |_, _| {
            Ok(vec![TypedValue::vec(
                Tag::Struct,
                PROPS.iter().map(config).collect(),
            )])
        })
        .method("getPropConfigs", |_, args| {
            let wanted = args[0].as_items().unwrap_or_default();
            let found: Option<Vec<TypedValue>> = wanted
                .iter()
                .map(|id| {
                    PROPS
                        .iter()
                        .find(|p| id.as_integer() == Some(p.prop.into()))
                        .map(config)
                })
                .collect();
            Ok(match found {
                Some(configs) => vec![
                    status_code(STATUS_OK),
                    TypedValue::vec(Tag::Struct, configs),
                ],
                None => vec![
                    status_code(STATUS_INVALID_ARG),
                    TypedValue::vec(Tag::Struct, vec![]),
                ],
            })
        })
        .method("subscribe", move |ctx, args| {
            let Some(callback) = ctx.callback(&args[0]) else {
                return Ok(vec![status_code(STATUS_INVALID_ARG)]);
            };
            let requested: Option<Vec<i32>> = args[1]
                .as_items()
                .unwrap_or_default()
                .iter()
                .map(|o| {
                    let id = o.field("propId")?.as_integer()?;
                    PROPS
                        .iter()
                        .find(|p| i128::from(p.prop) == id)
                        .map(|p| p.prop)
                })
                .collect();
            let props = match requested {
                Some(props) if !props.is_empty() => props,
                _ => return Ok(vec![status_code(STATUS_INVALID_ARG)]),
            };
            let alive = Arc::downgrade(&alive);
            thread::Builder::new()
                .name("vehicle-publisher".into())
                .spawn(move || publish(callback, props, options, alive))
                .map_err(|e| crate::runtime::ServiceError::new("INTERNAL_ERROR", e.to_string()))?;
            Ok(vec![status_code(STATUS_OK)])
        })
        .build()
        .expect("vehicle service is complete")
}
