//! Hosting services, calling them, the fast message queue and the vendor
//! manifest.
//!
//! A [`Service`] pairs an interface spec with one handler per method.
//! [`serve`] exposes it either binderized (own socket endpoint, separate
//! address space semantics) or pass-through (direct in-process calls). A
//! [`Proxy`] hides the difference from callers.

pub mod fmq;
mod manifest;
mod proxy;
mod server;
mod service;

pub use fmq::{FastQueue, QueueError, QueueReader, QueueWriter};
pub use manifest::{HalEntry, ManifestError, VendorManifest, MANIFEST_FILE};
pub use proxy::{CallError, Callbacks, Proxy};
pub use server::{serve, ServeError, ServeOptions, ServiceHandle};
pub use service::{
    BuildError, CallContext, CallbackProxy, MethodResult, Service, ServiceBuilder, ServiceError,
};
