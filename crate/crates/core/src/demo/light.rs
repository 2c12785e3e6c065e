//! Three vendors' takes on `demo.light@1.0` plus one `@1.1` implementation.
//!
//! They share the contract the framework suite checks but keep their state
//! differently and support different light types.

use std::sync::atomic::{AtomicI32, Ordering};
use std::sync::{Arc, Mutex};

use crate::runtime::{Service, ServiceBuilder, ServiceError};
use crate::wire::{Tag, TypedValue};

use super::{spec, LIGHT_1_0, LIGHT_1_1};

pub const STATUS: &str = "demo.light@1.0::Status";
pub const TYPE: &str = "demo.light@1.0::Type";

pub const SUCCESS: i32 = 0;
pub const LIGHT_NOT_SUPPORTED: i32 = 1;
pub const BRIGHTNESS_NOT_SUPPORTED: i32 = 2;

/// Every `Type` enumerator, BACKLIGHT through ATTENTION.
pub const ALL_TYPES: [i32; 6] = [0, 1, 2, 3, 4, 5];
pub const BACKLIGHT: i32 = 0;
pub const MAX_BRIGHTNESS: i32 = 255;

pub fn status(code: i32) -> TypedValue {
    TypedValue::Enum {
        name: STATUS.into(),
        ordinal: code,
    }
}

pub fn light_type(ordinal: i32) -> TypedValue {
    TypedValue::Enum {
        name: TYPE.into(),
        ordinal,
    }
}

/// `LightState` with the given colour and no blinking.
pub fn steady_state(color: u32) -> TypedValue {
    TypedValue::Struct {
        name: "demo.light@1.0::LightState".into(),
        fields: vec![
            ("color".into(), TypedValue::UInt32(color)),
            ("onMs".into(), TypedValue::Int32(0)),
            ("offMs".into(), TypedValue::Int32(0)),
        ],
    }
}

fn ordinal(v: &TypedValue) -> Result<i32, ServiceError> {
    match v {
        TypedValue::Enum { ordinal, .. } => Ok(*ordinal),
        other => Err(ServiceError::new(
            "BAD_ARG",
            format!("expected enum, got {other}"),
        )),
    }
}

fn int(v: &TypedValue) -> i32 {
    v.as_integer()
        .map_or(-1, |i| i32::try_from(i).unwrap_or(-1))
}

fn in_range(level: i32) -> bool {
    (0..=MAX_BRIGHTNESS).contains(&level)
}

/// Where a light keeps its brightness; the variants deliberately differ.
trait Dimmer: Send + Sync + 'static {
    fn set(&self, level: i32);
    fn get(&self) -> i32;
}

struct Atomic(AtomicI32);

impl Dimmer for Atomic {
    fn set(&self, level: i32) {
        self.0.store(level, Ordering::SeqCst);
    }
    fn get(&self) -> i32 {
        self.0.load(Ordering::SeqCst)
    }
}

/// Keeps every level ever set; the current one is the last.
struct History(Mutex<Vec<i32>>);

impl Dimmer for History {
    fn set(&self, level: i32) {
        self.0.lock().expect("history poisoned").push(level);
    }
    fn get(&self) -> i32 {
        self.0
            .lock()
            .expect("history poisoned")
            .last()
            .copied()
            .unwrap_or(0)
    }
}

/// Stores a 16-bit PWM duty cycle and converts back on read.
struct Pwm(Mutex<u16>);

impl Dimmer for Pwm {
    fn set(&self, level: i32) {
        *self.0.lock().expect("pwm poisoned") = (level as u16) * 257;
    }
    fn get(&self) -> i32 {
        i32::from(*self.0.lock().expect("pwm poisoned") / 257)
    }
}

fn light_service(
    spec_name: &str,
    supported: &'static [i32],
    dimmer: Arc<dyn Dimmer>,
) -> ServiceBuilder {
    let (d1, d2) = (dimmer.clone(), dimmer);
    ServiceBuilder::new(spec(spec_name))
        .method("setLight", move |_, args| {
            let t = ordinal(&args[0])?;
            let code = if supported.contains(&t) {
                SUCCESS
            } else {
                LIGHT_NOT_SUPPORTED
            };
            Ok(vec![status(code)])
        })
        .method("getSupportedTypes", move |_, _| {
            let types = supported.iter().map(|&t| light_type(t)).collect();
            Ok(vec![TypedValue::vec(Tag::Enum, types)])
        })
        .method("setBrightness", move |_, args| {
            let level = int(&args[0]);
            if !in_range(level) {
                return Ok(vec![status(BRIGHTNESS_NOT_SUPPORTED)]);
            }
            d1.set(level);
            Ok(vec![status(SUCCESS)])
        })
        .method("getBrightness", move |_, _| {
            Ok(vec![TypedValue::Int32(d2.get())])
        })
}

/// Supports every light type.
pub fn reference_light() -> Arc<Service> {
    light_service(LIGHT_1_0, &ALL_TYPES, Arc::new(Atomic(AtomicI32::new(0))))
        .build()
        .expect("reference light is complete")
}

/// An LED-strip vendor: backlight, notifications and attention only.
pub fn ledstrip_light() -> Arc<Service> {
    light_service(
        LIGHT_1_0,
        &[0, 4, 5],
        Arc::new(History(Mutex::new(Vec::new()))),
    )
    .build()
    .expect("ledstrip light is complete")
}

/// A minimal in-process light meant to be served pass-through.
pub fn inproc_light() -> Arc<Service> {
    light_service(LIGHT_1_0, &[0, 3], Arc::new(Pwm(Mutex::new(0))))
        .build()
        .expect("inproc light is complete")
}

/// `demo.light@1.1`: the reference light plus `setBrightnessRamp`, which
/// jumps straight to the target level.
pub fn light_1_1() -> Arc<Service> {
    let dimmer: Arc<dyn Dimmer> = Arc::new(Atomic(AtomicI32::new(0)));
    let ramp = dimmer.clone();
    light_service(LIGHT_1_1, &ALL_TYPES, dimmer)
        .method("setBrightnessRamp", move |_, args| {
            let level = int(&args[0]);
            if !in_range(level) {
                return Ok(vec![status(BRIGHTNESS_NOT_SUPPORTED)]);
            }
            ramp.set(level);
            Ok(vec![status(SUCCESS)])
        })
        .build()
        .expect("light 1.1 is complete")
}
