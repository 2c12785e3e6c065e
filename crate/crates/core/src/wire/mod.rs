//! Values, messages, framing, endpoints and the service registry.

mod codec;
mod conform;
mod endpoint;
pub mod frame;
mod registry;
mod text;
mod value;

pub use codec::{
    decode, decode_value, encode, encode_value, encode_value_into, DecodeError, EncodeError,
    MessageKind, WireMessage, MAX_DEPTH,
};
pub use conform::{
    check_value, check_values, default_value, default_values, scalar_tag, tag_for, Mismatch,
};
pub use endpoint::{Conn, Endpoint, Listener};
pub use frame::WireError;
pub use registry::{
    open_registry, registry_address, select, version_satisfies, LocalRegistry, Registry,
    RegistryClient, RegistryError, RegistryServer, ServiceRecord, Transport, DEFAULT_INSTANCE,
    DEFAULT_REGISTRY, REGISTRY_ENV,
};
pub use text::{
    value_from_token, values_from_text, values_from_tokens, values_to_text, ValueTextError,
};
pub use value::{Tag, TypedValue};
