//! Random spec-conformant values, types and messages.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::idl::{FqName, Scalar};
use crate::ir::{ApiSpec, EnumSpec, StructSpec, VarSpec, VarType};
use crate::wire::{tag_for, MessageKind, TypedValue, WireMessage};

const MAX_VEC: usize = 6;
const MAX_STR: usize = 12;
const ALPHABET: &[char] = &[
    'a', 'z', 'Q', '0', ' ', '"', '\\', '\n', '\t', 'é', 'λ', '漢', '🚗', '\0',
];

fn random_string<R: Rng + ?Sized>(rng: &mut R) -> String {
    let len = rng.gen_range(0..=MAX_STR);
    (0..len)
        .map(|_| *ALPHABET.choose(rng).expect("alphabet"))
        .collect()
}

/// An integer in `lo..=hi`, biased towards the bounds and zero.
fn integer<R: Rng + ?Sized>(rng: &mut R, lo: i128, hi: i128) -> i128 {
    match rng.gen_range(0..8) {
        0 => lo,
        1 => hi,
        2 => 0.clamp(lo, hi),
        3 => 1.clamp(lo, hi),
        _ => rng.gen_range(lo..=hi),
    }
}

fn scalar<R: Rng + ?Sized>(s: Scalar, rng: &mut R) -> TypedValue {
    let (lo, hi) = s.integer_range().unwrap_or((0, 0));
    match s {
        Scalar::Bool => TypedValue::Bool(rng.gen()),
        Scalar::Int32 => TypedValue::Int32(integer(rng, lo, hi) as i32),
        Scalar::Int64 => TypedValue::Int64(integer(rng, lo, hi) as i64),
        Scalar::UInt32 => TypedValue::UInt32(integer(rng, lo, hi) as u32),
        Scalar::UInt64 => TypedValue::UInt64(integer(rng, lo, hi) as u64),
        Scalar::Float => TypedValue::Float32(match rng.gen_range(0..4) {
            0 => f32::from_bits(rng.gen()),
            _ => rng.gen_range(-1e6..1e6),
        }),
        Scalar::Double => TypedValue::Float64(match rng.gen_range(0..4) {
            0 => f64::from_bits(rng.gen()),
            _ => rng.gen_range(-1e9..1e9),
        }),
    }
}

/// A value conforming to `ty`. Enum values are drawn uniformly from the
/// declared enumerators; interface arguments are the null handle.
pub fn random_value<R: Rng + ?Sized>(ty: &VarType, rng: &mut R) -> TypedValue {
    match ty {
        VarType::Scalar(s) => scalar(*s, rng),
        VarType::String => TypedValue::Str(random_string(rng)),
        VarType::Vector(elem) => {
            let len = rng.gen_range(0..=MAX_VEC);
            TypedValue::vec(
                tag_for(elem),
                (0..len).map(|_| random_value(elem, rng)).collect(),
            )
        }
        VarType::Struct(s) => TypedValue::Struct {
            name: s.name.clone(),
            fields: s
                .fields
                .iter()
                .map(|f| (f.name.clone(), random_value(&f.ty, rng)))
                .collect(),
        },
        VarType::Enum(e) => TypedValue::Enum {
            name: e.name.clone(),
            ordinal: e.enumerators.choose(rng).map_or(0, |(_, v)| *v as i32),
        },
        VarType::Interface(_) => TypedValue::Handle(0),
    }
}

pub fn random_values<R: Rng + ?Sized>(vars: &[VarSpec], rng: &mut R) -> Vec<TypedValue> {
    vars.iter().map(|v| random_value(&v.ty, rng)).collect()
}

/// Arguments for a random call: a method of `apis` and values for it.
pub fn random_call<'a, R: Rng + ?Sized>(
    apis: &'a [ApiSpec],
    rng: &mut R,
) -> (&'a ApiSpec, Vec<TypedValue>) {
    let api = apis.choose(rng).expect("interface has methods");
    (api, random_values(&api.args, rng))
}

const SCALARS: [Scalar; 7] = [
    Scalar::Bool,
    Scalar::Int32,
    Scalar::Int64,
    Scalar::UInt32,
    Scalar::UInt64,
    Scalar::Float,
    Scalar::Double,
];

/// A random type at most `depth` levels deep.
pub fn random_type<R: Rng + ?Sized>(rng: &mut R, depth: u32) -> VarType {
    let leaf = depth == 0 || rng.gen_bool(0.5);
    if leaf {
        return match rng.gen_range(0..4) {
            0 => VarType::String,
            1 => {
                let n = rng.gen_range(1..=5);
                VarType::Enum(EnumSpec {
                    name: format!("gen.types@1.0::E{n}"),
                    scalar: Scalar::Int32,
                    enumerators: (0..n)
                        .map(|i| (format!("V{i}"), i64::from(i) * 3 - 2))
                        .collect(),
                })
            }
            2 => VarType::Interface(FqName::new(
                crate::idl::PackageId::new("gen.types", 1, 0),
                "ICallback",
            )),
            _ => VarType::Scalar(*SCALARS.choose(rng).expect("scalars")),
        };
    }
    if rng.gen_bool(0.5) {
        VarType::Vector(Box::new(random_type(rng, depth - 1)))
    } else {
        let n = rng.gen_range(0..=4);
        VarType::Struct(StructSpec {
            name: format!("gen.types@1.0::S{}", rng.gen_range(0..100)),
            fields: (0..n)
                .map(|i| VarSpec::new(format!("f{i}"), random_type(rng, depth - 1)))
                .collect(),
        })
    }
}

/// A random message whose values conform to a list of random types.
pub fn random_message<R: Rng + ?Sized>(rng: &mut R) -> WireMessage {
    let kinds = [
        MessageKind::Call,
        MessageKind::Return,
        MessageKind::Oneway,
        MessageKind::Event,
        MessageKind::Hello,
        MessageKind::Load,
        MessageKind::Ok,
    ];
    let types: Vec<VarType> = (0..rng.gen_range(0..=5))
        .map(|_| random_type(rng, 3))
        .collect();
    WireMessage::new(
        *kinds.choose(rng).expect("kinds"),
        rng.gen(),
        random_string(rng),
        random_string(rng),
        types.iter().map(|t| random_value(t, rng)).collect(),
    )
}
