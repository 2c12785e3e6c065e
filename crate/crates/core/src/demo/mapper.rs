//! A graphics buffer mapper that tracks imported buffers.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use crate::runtime::{Service, ServiceBuilder};
use crate::wire::{Tag, TypedValue};

use super::{spec, MAPPER};

pub const NONE: i32 = 0;
pub const BAD_DESCRIPTOR: i32 = 1;
pub const BAD_BUFFER: i32 = 2;

pub fn error_code(code: i32) -> TypedValue {
    TypedValue::Enum {
        name: "demo.graphics.mapper@1.0::Error".into(),
        ordinal: code,
    }
}

pub fn descriptor_info(
    width: u32,
    height: u32,
    layers: u32,
    format: i32,
    usage: u64,
) -> TypedValue {
    TypedValue::Struct {
        name: "demo.graphics.mapper@1.0::BufferDescriptorInfo".into(),
        fields: vec![
            ("width".into(), TypedValue::UInt32(width)),
            ("height".into(), TypedValue::UInt32(height)),
            ("layerCount".into(), TypedValue::UInt32(layers)),
            ("format".into(), TypedValue::Int32(format)),
            ("usage".into(), TypedValue::UInt64(usage)),
        ],
    }
}

fn u32_field(info: &TypedValue, name: &str) -> u32 {
    info.field(name)
        .and_then(TypedValue::as_integer)
        .map_or(0, |v| v as u32)
}

pub fn mapper_service() -> Arc<Service> {
    let next = Arc::new(AtomicU64::new(1));
    let live: Arc<Mutex<BTreeSet<u64>>> = Arc::default();
    let freeing = live.clone();
    ServiceBuilder::new(spec(MAPPER))
        .method("createDescriptor", |_, args| {
            let info = &args[0];
            let dims = ["width", "height", "layerCount"].map(|f| u32_field(info, f));
            if dims.contains(&0) {
                return Ok(vec![
                    error_code(BAD_DESCRIPTOR),
                    TypedValue::vec(Tag::UInt32, vec![]),
                ]);
            }
            let usage = info
                .field("usage")
                .and_then(TypedValue::as_integer)
                .unwrap_or(0) as u64;
            let words = [
                dims[0],
                dims[1],
                dims[2],
                u32_field(info, "format"),
                usage as u32,
                (usage >> 32) as u32,
            ];
            let descriptor = words.into_iter().map(TypedValue::UInt32).collect();
            Ok(vec![
                error_code(NONE),
                TypedValue::vec(Tag::UInt32, descriptor),
            ])
        })
        .method("importBuffer", move |_, args| {
            if args[0] == TypedValue::UInt64(0) {
                return Ok(vec![error_code(BAD_BUFFER), TypedValue::UInt64(0)]);
            }
            let id = next.fetch_add(1, Ordering::SeqCst);
            live.lock().expect("buffers poisoned").insert(id);
            Ok(vec![error_code(NONE), TypedValue::UInt64(id)])
        })
        .method("freeBuffer", move |_, args| {
            let id = args[0].as_integer().unwrap_or(0) as u64;
            let known = freeing.lock().expect("buffers poisoned").remove(&id);
            Ok(vec![error_code(if known { NONE } else { BAD_BUFFER })])
        })
        .build()
        .expect("mapper is complete")
}
