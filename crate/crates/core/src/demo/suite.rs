//! The framework-side light client suite. It only uses the `@1.0` contract,
//! so it must pass against any conforming vendor implementation, served
//! either way.

use std::fmt;

use crate::runtime::{CallError, Proxy};
use crate::wire::TypedValue;

use super::light::{
    light_type, status, steady_state, ALL_TYPES, BACKLIGHT, BRIGHTNESS_NOT_SUPPORTED,
    LIGHT_NOT_SUPPORTED, MAX_BRIGHTNESS, SUCCESS,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SuiteReport {
    pub checks: Vec<CheckOutcome>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.failure.is_none())
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| c.failure.is_some())
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            match &c.failure {
                None => writeln!(f, "ok   {}", c.name)?,
                Some(why) => writeln!(f, "FAIL {}: {why}", c.name)?,
            }
        }
        Ok(())
    }
}

type Check = Result<(), String>;

fn call(p: &Proxy, method: &str, args: Vec<TypedValue>) -> Result<Vec<TypedValue>, String> {
    p.call(method, args)
        .map_err(|e: CallError| format!("{method}: {e}"))
}

fn expect_status(p: &Proxy, method: &str, args: Vec<TypedValue>, want: i32) -> Check {
    let got = call(p, method, args)?;
    if got != [status(want)] {
        return Err(format!("{method}: expected status {want}, got {got:?}"));
    }
    Ok(())
}

fn supported(p: &Proxy) -> Result<Vec<i32>, String> {
    let got = call(p, "getSupportedTypes", vec![])?;
    let items = got
        .first()
        .and_then(TypedValue::as_items)
        .ok_or("getSupportedTypes returned no vector")?;
    items
        .iter()
        .map(|v| match v {
            TypedValue::Enum { ordinal, .. } => Ok(*ordinal),
            other => Err(format!("not a Type: {other}")),
        })
        .collect()
}

fn supported_types_include_backlight(p: &Proxy) -> Check {
    let types = supported(p)?;
    if !types.contains(&BACKLIGHT) {
        return Err(format!("BACKLIGHT missing from {types:?}"));
    }
    if types.iter().any(|t| !ALL_TYPES.contains(t)) {
        return Err(format!("unknown light type in {types:?}"));
    }
    Ok(())
}

fn set_light_on_supported_types(p: &Proxy) -> Check {
    for t in supported(p)? {
        expect_status(
            p,
            "setLight",
            vec![light_type(t), steady_state(0xff00_ff00)],
            SUCCESS,
        )?;
    }
    Ok(())
}

fn set_light_on_unsupported_types(p: &Proxy) -> Check {
    let types = supported(p)?;
    for t in ALL_TYPES.iter().filter(|t| !types.contains(t)) {
        expect_status(
            p,
            "setLight",
            vec![light_type(*t), steady_state(0xffff_ffff)],
            LIGHT_NOT_SUPPORTED,
        )?;
    }
    Ok(())
}

fn get_brightness(p: &Proxy) -> Result<TypedValue, String> {
    call(p, "getBrightness", vec![])?
        .pop()
        .ok_or_else(|| "getBrightness returned nothing".to_string())
}

fn brightness_round_trips(p: &Proxy) -> Check {
    for level in [0, 17, 128, MAX_BRIGHTNESS] {
        expect_status(p, "setBrightness", vec![TypedValue::Int32(level)], SUCCESS)?;
        let got = get_brightness(p)?;
        if got != TypedValue::Int32(level) {
            return Err(format!("set {level}, read back {got}"));
        }
    }
    Ok(())
}

fn out_of_range_brightness_is_refused(p: &Proxy) -> Check {
    expect_status(p, "setBrightness", vec![TypedValue::Int32(40)], SUCCESS)?;
    for level in [-1, MAX_BRIGHTNESS + 1, i32::MAX] {
        expect_status(
            p,
            "setBrightness",
            vec![TypedValue::Int32(level)],
            BRIGHTNESS_NOT_SUPPORTED,
        )?;
    }
    let got = get_brightness(p)?;
    if got != TypedValue::Int32(40) {
        return Err(format!("refused levels changed brightness to {got}"));
    }
    Ok(())
}

fn wrong_argument_types_never_leave_the_client(p: &Proxy) -> Check {
    let sent = p.bytes_sent();
    match p.call("setBrightness", vec![TypedValue::str("bright")]) {
        Err(CallError::TypeMismatch(_)) if p.bytes_sent() == sent => Ok(()),
        Err(CallError::TypeMismatch(_)) => Err("mismatched call reached the transport".into()),
        other => Err(format!("expected a type mismatch, got {other:?}")),
    }
}

/// Runs every check against `proxy`, which must speak `demo.light@1.0` or a
/// later minor version.
pub fn framework_suite(proxy: &Proxy) -> SuiteReport {
    let checks: [(&'static str, fn(&Proxy) -> Check); 6] = [
        (
            "supported_types_include_backlight",
            supported_types_include_backlight,
        ),
        ("set_light_on_supported_types", set_light_on_supported_types),
        (
            "set_light_on_unsupported_types",
            set_light_on_unsupported_types,
        ),
        ("brightness_round_trips", brightness_round_trips),
        (
            "out_of_range_brightness_is_refused",
            out_of_range_brightness_is_refused,
        ),
        (
            "wrong_argument_types_never_leave_the_client",
            wrong_argument_types_never_leave_the_client,
        ),
    ];
    SuiteReport {
        checks: checks
            .into_iter()
            .map(|(name, check)| CheckOutcome {
                name,
                failure: check(proxy).err(),
            })
            .collect(),
    }
}
