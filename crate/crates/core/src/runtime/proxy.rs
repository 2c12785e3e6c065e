use std::collections::HashMap;
use std::fmt;
use std::panic::{self, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::{Arc, Mutex, RwLock, Weak};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use thiserror::Error;

use crate::idl::FqName;
use crate::ir::{ApiSpec, InterfaceSpec};
use crate::wire::{
    check_values, frame, Conn, Endpoint, MessageKind, Mismatch, Registry, RegistryError,
    ServiceRecord, Transport, TypedValue, WireMessage,
};

use super::server;
use super::service::{EventSink, Service};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CallError {
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(Mismatch),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("remote error {code}: {detail}")]
    Remote { code: String, detail: String },
    #[error("no reply within {0:?}")]
    Timeout(Duration),
    #[error("connection lost: {0}")]
    Disconnected(String),
    #[error(transparent)]
    Lookup(#[from] RegistryError),
}

pub(crate) const PROTOCOL_BANNER: &str = "treble/1";

type EventHandler = Box<dyn Fn(Vec<TypedValue>) + Send + Sync>;

/// Client-side implementation of a callback interface.
pub struct Callbacks {
    spec: Arc<InterfaceSpec>,
    handlers: HashMap<String, EventHandler>,
}

impl Callbacks {
    pub fn new(spec: Arc<InterfaceSpec>) -> Self {
        Self {
            spec,
            handlers: HashMap::new(),
        }
    }

    pub fn on<F>(mut self, method: &str, handler: F) -> Self
    where
        F: Fn(Vec<TypedValue>) + Send + Sync + 'static,
    {
        self.handlers.insert(method.to_string(), Box::new(handler));
        self
    }
}

static NEXT_HANDLE: AtomicU64 = AtomicU64::new(1);

/// Callbacks registered through one proxy, keyed by handle.
#[derive(Default)]
pub(crate) struct CallbackTable {
    entries: RwLock<HashMap<u64, Arc<Callbacks>>>,
    unhandled: AtomicU64,
}

impl CallbackTable {
    fn insert(&self, callbacks: Callbacks) -> u64 {
        let handle = NEXT_HANDLE.fetch_add(1, Ordering::Relaxed);
        self.entries
            .write()
            .expect("callback table poisoned")
            .insert(handle, Arc::new(callbacks));
        handle
    }

    /// Runs the handler for an event; events with no matching handler or
    /// ill-typed values are counted and dropped.
    fn deliver(&self, handle: u64, method: &str, values: Vec<TypedValue>) {
        let entry = self
            .entries
            .read()
            .expect("callback table poisoned")
            .get(&handle)
            .cloned();
        let handled = entry.is_some_and(|cb| {
            let typed = cb
                .spec
                .api(method)
                .is_some_and(|api| check_values(&values, &api.args).is_ok());
            match cb.handlers.get(method) {
                Some(h) if typed => {
                    h(values);
                    true
                }
                _ => false,
            }
        });
        if !handled {
            self.unhandled.fetch_add(1, Ordering::Relaxed);
        }
    }
}

/// Pass-through event path: the service calls straight into the client's
/// table, for as long as the proxy lives.
pub(crate) struct LocalSink {
    table: Weak<CallbackTable>,
}

impl EventSink for LocalSink {
    fn emit(
        &self,
        handle: u64,
        _: &FqName,
        method: &str,
        values: Vec<TypedValue>,
    ) -> Result<(), CallError> {
        let table = self
            .table
            .upgrade()
            .ok_or_else(|| CallError::Disconnected("client proxy dropped".into()))?;
        table.deliver(handle, method, values);
        Ok(())
    }

    fn is_open(&self) -> bool {
        self.table.strong_count() > 0
    }
}

struct Remote {
    conn: Conn,
    writer: Mutex<Conn>,
    pending: Arc<Mutex<HashMap<u64, mpsc::Sender<WireMessage>>>>,
    dead: Arc<Mutex<Option<String>>>,
    sent: AtomicU64,
    received: Arc<AtomicU64>,
    reader: Option<JoinHandle<()>>,
}

struct Local {
    service: Arc<Service>,
    sink: Arc<LocalSink>,
}

enum Link {
    Remote(Remote),
    Local(Local),
}

/// Client end of one interface. One outstanding call at a time per proxy is
/// the supported pattern; open one proxy per concurrent caller.
pub struct Proxy {
    spec: Arc<InterfaceSpec>,
    fqname: String,
    link: Link,
    callbacks: Arc<CallbackTable>,
    timeout: Option<Duration>,
    next_id: AtomicU64,
    closed: AtomicBool,
}

impl fmt::Debug for Proxy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match self.link {
            Link::Remote(_) => "remote",
            Link::Local(_) => "local",
        };
        write!(f, "Proxy({} {mode})", self.fqname)
    }
}

fn reader_loop(
    mut conn: Conn,
    pending: Arc<Mutex<HashMap<u64, mpsc::Sender<WireMessage>>>>,
    dead: Arc<Mutex<Option<String>>>,
    received: Arc<AtomicU64>,
    callbacks: Weak<CallbackTable>,
) {
    let reason = loop {
        match frame::recv(&mut conn) {
            Ok(Some((msg, size))) => {
                received.fetch_add(size as u64, Ordering::Relaxed);
                match msg.kind {
                    MessageKind::Event => {
                        if let Some(table) = callbacks.upgrade() {
                            table.deliver(msg.correlation_id, &msg.method, msg.values);
                        }
                    }
                    _ => {
                        let tx = pending
                            .lock()
                            .expect("pending poisoned")
                            .remove(&msg.correlation_id);
                        if let Some(tx) = tx {
                            let _ = tx.send(msg);
                        }
                    }
                }
            }
            Ok(None) => break "service closed the connection".to_string(),
            Err(e) => break e.to_string(),
        }
    };
    *dead.lock().expect("dead flag poisoned") = Some(reason);
    // Dropping the senders wakes every waiting caller.
    pending.lock().expect("pending poisoned").clear();
}

impl Proxy {
    /// Looks up a service for `spec` and connects to it.
    pub fn connect(
        registry: &dyn Registry,
        spec: Arc<InterfaceSpec>,
        instance: &str,
    ) -> Result<Proxy, CallError> {
        let record = registry.lookup(&spec.fqname(), instance)?;
        Self::connect_record(&record, spec)
    }

    pub fn connect_record(
        record: &ServiceRecord,
        spec: Arc<InterfaceSpec>,
    ) -> Result<Proxy, CallError> {
        match (record.transport, &record.endpoint) {
            (Transport::Passthrough, Endpoint::InProc(id)) => {
                let service = server::passthrough_service(id).ok_or_else(|| {
                    CallError::Transport(format!(
                        "pass-through service {} is not loaded in this process",
                        record.fqname
                    ))
                })?;
                Ok(Self::local(service, spec))
            }
            (_, endpoint) => Self::connect_endpoint(endpoint, spec),
        }
    }

    pub fn connect_endpoint(
        endpoint: &Endpoint,
        spec: Arc<InterfaceSpec>,
    ) -> Result<Proxy, CallError> {
        let conn = endpoint
            .connect()
            .map_err(|e| CallError::Transport(format!("{endpoint}: {e}")))?;
        let clone = |c: &Conn| {
            c.try_clone()
                .map_err(|e| CallError::Transport(e.to_string()))
        };
        let reader_conn = clone(&conn)?;
        let writer = clone(&conn)?;
        let pending: Arc<Mutex<HashMap<u64, mpsc::Sender<WireMessage>>>> = Default::default();
        let dead: Arc<Mutex<Option<String>>> = Default::default();
        let received = Arc::new(AtomicU64::new(0));
        let callbacks = Arc::new(CallbackTable::default());
        let reader = {
            let (pending, dead, received) = (pending.clone(), dead.clone(), received.clone());
            let table = Arc::downgrade(&callbacks);
            thread::Builder::new()
                .name("treble-proxy-reader".into())
                .spawn(move || reader_loop(reader_conn, pending, dead, received, table))
                .map_err(|e| CallError::Transport(e.to_string()))?
        };
        Ok(Proxy {
            fqname: spec.fqname().to_string(),
            spec,
            link: Link::Remote(Remote {
                conn,
                writer: Mutex::new(writer),
                pending,
                dead,
                sent: AtomicU64::new(0),
                received,
                reader: Some(reader),
            }),
            callbacks,
            timeout: None,
            next_id: AtomicU64::new(1),
            closed: AtomicBool::new(false),
        })
    }

    /// Direct in-process calls, no transport involved.
    pub fn local(service: Arc<Service>, spec: Arc<InterfaceSpec>) -> Proxy {
        service.attach();
        let callbacks = Arc::new(CallbackTable::default());
        let sink = Arc::new(LocalSink {
            table: Arc::downgrade(&callbacks),
        });
        Proxy {
            fqname: spec.fqname().to_string(),
            spec,
            link: Link::Local(Local { service, sink }),
            callbacks,
            timeout: None,
            next_id: AtomicU64::new(1),
            closed: AtomicBool::new(false),
        }
    }

    pub fn spec(&self) -> &Arc<InterfaceSpec> {
        &self.spec
    }

    pub fn is_passthrough(&self) -> bool {
        matches!(self.link, Link::Local(_))
    }

    /// Bound on how long a blocking call waits for its reply.
    pub fn set_timeout(&mut self, timeout: Option<Duration>) {
        self.timeout = timeout;
    }

    /// Bytes written to the transport so far.
    pub fn bytes_sent(&self) -> u64 {
        match &self.link {
            Link::Remote(r) => r.sent.load(Ordering::Relaxed),
            Link::Local(_) => 0,
        }
    }

    pub fn bytes_received(&self) -> u64 {
        match &self.link {
            Link::Remote(r) => r.received.load(Ordering::Relaxed),
            Link::Local(_) => 0,
        }
    }

    /// Events that arrived with no matching handler.
    pub fn unhandled_events(&self) -> u64 {
        self.callbacks.unhandled.load(Ordering::Relaxed)
    }

    /// Makes `callbacks` reachable from the service. The returned handle is
    /// passed as an interface-typed argument.
    pub fn register_callback(&self, callbacks: Callbacks) -> Result<TypedValue, CallError> {
        if let Link::Remote(r) = &self.link {
            if let Some(reason) = r.dead.lock().expect("dead flag poisoned").clone() {
                return Err(CallError::Transport(reason));
            }
        }
        Ok(TypedValue::Handle(self.callbacks.insert(callbacks)))
    }

    fn api(&self, method: &str) -> Result<&ApiSpec, CallError> {
        self.spec
            .api(method)
            .ok_or_else(|| CallError::UnknownMethod(method.to_string()))
    }

    /// Invokes `method`. Oneway methods return an empty list as soon as
    /// the request is written.
    pub fn call(&self, method: &str, args: Vec<TypedValue>) -> Result<Vec<TypedValue>, CallError> {
        let api = self.api(method)?;
        check_values(&args, &api.args).map_err(CallError::TypeMismatch)?;
        match &self.link {
            Link::Local(l) => {
                let sink: Arc<dyn EventSink> = l.sink.clone();
                let outcome = panic::catch_unwind(AssertUnwindSafe(|| {
                    l.service.dispatch(method, args, sink)
                }));
                match outcome {
                    Ok(Ok(rets)) => Ok(rets),
                    Ok(Err(e)) => Err(CallError::Remote {
                        code: e.code,
                        detail: e.detail,
                    }),
                    Err(_) => Err(CallError::Disconnected("service panicked".into())),
                }
            }
            Link::Remote(r) => {
                let kind = if api.oneway {
                    MessageKind::Oneway
                } else {
                    MessageKind::Call
                };
                let reply = self.exchange(r, kind, method, args, !api.oneway)?;
                let Some(reply) = reply else {
                    return Ok(vec![]);
                };
                match reply.kind {
                    MessageKind::Return => {
                        check_values(&reply.values, &api.returns)
                            .map_err(CallError::TypeMismatch)?;
                        Ok(reply.values)
                    }
                    MessageKind::Error => Err(remote_error(&reply)),
                    other => Err(CallError::Transport(format!("unexpected {other:?} reply"))),
                }
            }
        }
    }

    /// Liveness probe. Returns how many other clients the service has.
    pub fn hello(&self) -> Result<u32, CallError> {
        match &self.link {
            Link::Local(l) => Ok(l.service.client_count().saturating_sub(1) as u32),
            Link::Remote(r) => {
                let reply = self
                    .exchange(
                        r,
                        MessageKind::Hello,
                        "",
                        vec![TypedValue::str(PROTOCOL_BANNER)],
                        true,
                    )?
                    .expect("hello awaits a reply");
                match (reply.kind, reply.values.as_slice()) {
                    (MessageKind::Ok, [TypedValue::Str(banner), TypedValue::UInt32(others)])
                        if banner == PROTOCOL_BANNER =>
                    {
                        Ok(*others)
                    }
                    (MessageKind::Error, _) => Err(remote_error(&reply)),
                    _ => Err(CallError::Transport("malformed HELLO reply".into())),
                }
            }
        }
    }

    fn exchange(
        &self,
        r: &Remote,
        kind: MessageKind,
        method: &str,
        values: Vec<TypedValue>,
        await_reply: bool,
    ) -> Result<Option<WireMessage>, CallError> {
        if let Some(reason) = r.dead.lock().expect("dead flag poisoned").clone() {
            return Err(CallError::Disconnected(reason));
        }
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let rx = if await_reply {
            let (tx, rx) = mpsc::channel();
            r.pending.lock().expect("pending poisoned").insert(id, tx);
            Some(rx)
        } else {
            None
        };
        let msg = WireMessage::new(kind, id, self.fqname.as_str(), method, values);
        let sent = {
            let mut w = r.writer.lock().expect("writer poisoned");
            frame::send(&mut *w, &msg)
        };
        match sent {
            Ok(n) => {
                r.sent.fetch_add(n as u64, Ordering::Relaxed);
            }
            Err(e) => {
                r.pending.lock().expect("pending poisoned").remove(&id);
                return Err(CallError::Transport(e.to_string()));
            }
        }
        let Some(rx) = rx else {
            return Ok(None);
        };
        let outcome = match self.timeout {
            Some(t) => rx.recv_timeout(t),
            None => rx.recv().map_err(|_| RecvTimeoutError::Disconnected),
        };
        match outcome {
            Ok(m) => Ok(Some(m)),
            Err(RecvTimeoutError::Timeout) => {
                r.pending.lock().expect("pending poisoned").remove(&id);
                Err(CallError::Timeout(self.timeout.unwrap_or_default()))
            }
            Err(RecvTimeoutError::Disconnected) => {
                let reason = r.dead.lock().expect("dead flag poisoned").clone();
                Err(CallError::Disconnected(
                    reason.unwrap_or_else(|| "connection closed".into()),
                ))
            }
        }
    }

    /// Closes the connection; later calls fail with `Disconnected`.
    pub fn close(&mut self) {
        if self.closed.swap(true, Ordering::SeqCst) {
            return;
        }
        match &mut self.link {
            Link::Remote(r) => {
                r.conn.shutdown();
                if let Some(t) = r.reader.take() {
                    let _ = t.join();
                }
            }
            Link::Local(l) => l.service.detach(),
        }
    }
}

fn remote_error(reply: &WireMessage) -> CallError {
    match reply.error_parts() {
        Some((code, detail)) => CallError::Remote {
            code: code.to_string(),
            detail: detail.to_string(),
        },
        None => CallError::Transport("malformed ERROR reply".into()),
    }
}

impl Drop for Proxy {
    fn drop(&mut self) {
        self.close();
    }
}
