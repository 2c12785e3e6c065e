//! The dynamic driver: turns a CALL message into a runtime call and the
//! outcome back into a RETURN or ERROR message.

use thiserror::Error;

use crate::runtime::{CallError, Proxy};
use crate::wire::{MessageKind, Mismatch, WireMessage};

#[derive(Debug, Error)]
pub enum DriveError {
    #[error("not a call: {0:?}")]
    NotACall(MessageKind),
    #[error("{iface} has no method `{method}`")]
    UnknownMethod { iface: String, method: String },
    #[error("type mismatch: {0}")]
    TypeMismatch(Mismatch),
    #[error("transport: {0}")]
    Transport(CallError),
}

impl DriveError {
    /// Code used when the error travels as an ERROR message.
    pub fn code(&self) -> &'static str {
        match self {
            DriveError::NotACall(_) => "PROTOCOL",
            DriveError::UnknownMethod { .. } => "UnknownMethod",
            DriveError::TypeMismatch(_) => "TypeMismatch",
            DriveError::Transport(_) => "TransportError",
        }
    }

    pub fn to_message(&self, correlation_id: u64) -> WireMessage {
        WireMessage::error(correlation_id, self.code(), self.to_string())
    }
}

/// Executes `request` through `proxy`. Failures raised by the service come
/// back as an ERROR message; failures before or in transit are errors.
pub fn drive(proxy: &Proxy, request: WireMessage) -> Result<WireMessage, DriveError> {
    if !matches!(request.kind, MessageKind::Call | MessageKind::Oneway) {
        return Err(DriveError::NotACall(request.kind));
    }
    let id = request.correlation_id;
    match proxy.call(&request.method, request.values) {
        Ok(values) => Ok(WireMessage::new(
            MessageKind::Return,
            id,
            request.fqname,
            request.method,
            values,
        )),
        Err(CallError::Remote { code, detail }) => Ok(WireMessage::error(id, &code, detail)),
        Err(CallError::UnknownMethod(method)) => Err(DriveError::UnknownMethod {
            iface: proxy.spec().fqname().to_string(),
            method,
        }),
        Err(CallError::TypeMismatch(m)) => Err(DriveError::TypeMismatch(m)),
        Err(other) => Err(DriveError::Transport(other)),
    }
}
