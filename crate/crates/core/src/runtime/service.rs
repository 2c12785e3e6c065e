use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use thiserror::Error;

use crate::idl::FqName;
use crate::ir::{InterfaceSpec, VarType};
use crate::wire::{check_values, TypedValue};

use super::CallError;

/// Failure raised by a service method; travels to the caller as
/// `CallError::Remote`.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{code}: {detail}")]
pub struct ServiceError {
    pub code: String,
    pub detail: String,
}

impl ServiceError {
    pub fn new(code: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            code: code.into(),
            detail: detail.into(),
        }
    }
}

pub type MethodResult = Result<Vec<TypedValue>, ServiceError>;

type Handler = dyn Fn(&CallContext, Vec<TypedValue>) -> MethodResult + Send + Sync;

/// Delivers EVENT messages for callback handles back to the client side.
pub(crate) trait EventSink: Send + Sync {
    fn emit(
        &self,
        handle: u64,
        fqname: &FqName,
        method: &str,
        values: Vec<TypedValue>,
    ) -> Result<(), CallError>;
    fn is_open(&self) -> bool;
}

/// A client-supplied callback, usable after the call that carried it has
/// returned.
#[derive(Clone)]
pub struct CallbackProxy {
    handle: u64,
    fqname: FqName,
    sink: Arc<dyn EventSink>,
}

impl CallbackProxy {
    pub fn handle(&self) -> u64 {
        self.handle
    }

    pub fn interface(&self) -> &FqName {
        &self.fqname
    }

    pub fn emit(&self, method: &str, values: Vec<TypedValue>) -> Result<(), CallError> {
        self.sink.emit(self.handle, &self.fqname, method, values)
    }

    /// False once the client connection that owns the handle has gone.
    pub fn is_alive(&self) -> bool {
        self.sink.is_open()
    }
}

impl fmt::Debug for CallbackProxy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CallbackProxy({} #{})", self.fqname, self.handle)
    }
}

/// Per-call view handed to method implementations.
pub struct CallContext {
    callbacks: Vec<(u64, FqName)>,
    sink: Arc<dyn EventSink>,
}

impl CallContext {
    /// The callback behind an interface-typed argument of this call.
    pub fn callback(&self, arg: &TypedValue) -> Option<CallbackProxy> {
        let TypedValue::Handle(h) = arg else {
            return None;
        };
        self.callbacks
            .iter()
            .find(|(handle, _)| handle == h)
            .map(|(handle, fqname)| CallbackProxy {
                handle: *handle,
                fqname: fqname.clone(),
                sink: self.sink.clone(),
            })
    }
}

/// An interface implementation: one handler per api of the spec.
pub struct Service {
    spec: Arc<InterfaceSpec>,
    handlers: HashMap<String, Arc<Handler>>,
    clients: AtomicUsize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("{iface} lacks implementations for {}", missing.join(", "))]
    Incomplete { iface: String, missing: Vec<String> },
    #[error("{iface} has no method `{method}`")]
    UnknownMethod { iface: String, method: String },
}

pub struct ServiceBuilder {
    spec: Arc<InterfaceSpec>,
    handlers: HashMap<String, Arc<Handler>>,
    unknown: BTreeSet<String>,
}

impl ServiceBuilder {
    pub fn new(spec: Arc<InterfaceSpec>) -> Self {
        Self {
            spec,
            handlers: HashMap::new(),
            unknown: BTreeSet::new(),
        }
    }

    pub fn method<F>(mut self, name: &str, handler: F) -> Self
    where
        F: Fn(&CallContext, Vec<TypedValue>) -> MethodResult + Send + Sync + 'static,
    {
        if self.spec.api(name).is_none() {
            self.unknown.insert(name.to_string());
        }
        self.handlers.insert(name.to_string(), Arc::new(handler));
        self
    }

    /// Fails unless every api, inherited ones included, has a handler.
    pub fn build(self) -> Result<Arc<Service>, BuildError> {
        let iface = self.spec.fqname().to_string();
        if let Some(method) = self.unknown.into_iter().next() {
            return Err(BuildError::UnknownMethod { iface, method });
        }
        let missing: Vec<String> = self
            .spec
            .apis
            .iter()
            .filter(|a| !self.handlers.contains_key(&a.name))
            .map(|a| a.name.clone())
            .collect();
        if !missing.is_empty() {
            return Err(BuildError::Incomplete { iface, missing });
        }
        Ok(Arc::new(Service {
            spec: self.spec,
            handlers: self.handlers,
            clients: AtomicUsize::new(0),
        }))
    }
}

pub(crate) const UNKNOWN_METHOD: &str = "UNKNOWN_METHOD";
pub(crate) const TYPE_MISMATCH: &str = "TYPE_MISMATCH";
pub(crate) const BAD_RETURN: &str = "BAD_RETURN";

impl Service {
    pub fn spec(&self) -> &Arc<InterfaceSpec> {
        &self.spec
    }

    /// Connected clients right now.
    pub fn client_count(&self) -> usize {
        self.clients.load(Ordering::SeqCst)
    }

    pub(crate) fn attach(&self) {
        self.clients.fetch_add(1, Ordering::SeqCst);
    }

    pub(crate) fn detach(&self) {
        self.clients.fetch_sub(1, Ordering::SeqCst);
    }

    /// Whether a client compiled against `requested` may talk to this
    /// service.
    pub fn accepts(&self, requested: &str) -> bool {
        requested
            .parse::<FqName>()
            .is_ok_and(|fq| crate::wire::version_satisfies(&fq, &self.spec.fqname()))
    }

    pub(crate) fn dispatch(
        &self,
        method: &str,
        args: Vec<TypedValue>,
        sink: Arc<dyn EventSink>,
    ) -> MethodResult {
        let api = self.spec.api(method).ok_or_else(|| {
            ServiceError::new(
                UNKNOWN_METHOD,
                format!("{} has no method `{method}`", self.spec.fqname()),
            )
        })?;
        check_values(&args, &api.args)
            .map_err(|m| ServiceError::new(TYPE_MISMATCH, m.to_string()))?;
        let callbacks = api
            .args
            .iter()
            .zip(&args)
            .filter_map(|(var, value)| match (&var.ty, value) {
                (VarType::Interface(fq), TypedValue::Handle(h)) if *h != 0 => {
                    Some((*h, fq.clone()))
                }
                _ => None,
            })
            .collect();
        let ctx = CallContext { callbacks, sink };
        let handler = &self.handlers[method];
        let returns = handler(&ctx, args)?;
        if api.oneway {
            return Ok(vec![]);
        }
        check_values(&returns, &api.returns)
            .map_err(|m| ServiceError::new(BAD_RETURN, format!("{method} returned {m}")))?;
        Ok(returns)
    }
}

impl fmt::Debug for Service {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Service({})", self.spec.fqname())
    }
}
