use std::collections::HashMap;
use std::io;
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock};
use std::thread::{self, JoinHandle};

use thiserror::Error;

use crate::idl::FqName;
use crate::wire::{
    frame, Conn, Endpoint, Listener, MessageKind, Registry, RegistryError, ServiceRecord,
    Transport, TypedValue, WireMessage, DEFAULT_INSTANCE,
};

use super::proxy::{CallError, PROTOCOL_BANNER};
use super::service::{EventSink, Service, UNKNOWN_METHOD};

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("registry unavailable: {0}")]
    RegistryUnavailable(#[from] RegistryError),
    #[error("address in use: {0}")]
    AddressInUse(String),
    #[error("cannot listen on {endpoint}: {source}")]
    Listen { endpoint: String, source: io::Error },
}

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub instance: String,
    /// Listen address for binderized services; a fresh unix socket in the
    /// temp directory when unset.
    pub endpoint: Option<Endpoint>,
}

impl Default for ServeOptions {
    fn default() -> Self {
        Self {
            instance: DEFAULT_INSTANCE.to_string(),
            endpoint: None,
        }
    }
}

impl ServeOptions {
    pub fn instance(name: &str) -> Self {
        Self {
            instance: name.to_string(),
            endpoint: None,
        }
    }
}

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

fn passthrough_table() -> &'static Mutex<HashMap<String, Arc<Service>>> {
    static TABLE: OnceLock<Mutex<HashMap<String, Arc<Service>>>> = OnceLock::new();
    TABLE.get_or_init(Default::default)
}

pub(crate) fn passthrough_service(id: &str) -> Option<Arc<Service>> {
    passthrough_table()
        .lock()
        .expect("pass-through table poisoned")
        .get(id)
        .cloned()
}

fn fresh_socket_path() -> PathBuf {
    std::env::temp_dir().join(format!(
        "treble-{}-{}.sock",
        std::process::id(),
        NEXT_ID.fetch_add(1, Ordering::Relaxed)
    ))
}

/// Sends EVENT frames on a server-side connection.
struct ConnSink {
    writer: Mutex<Conn>,
    open: AtomicBool,
}

impl EventSink for ConnSink {
    fn emit(
        &self,
        handle: u64,
        fqname: &FqName,
        method: &str,
        values: Vec<TypedValue>,
    ) -> Result<(), CallError> {
        if !self.is_open() {
            return Err(CallError::Disconnected("client connection closed".into()));
        }
        let msg = WireMessage::new(
            MessageKind::Event,
            handle,
            fqname.to_string(),
            method,
            values,
        );
        let mut w = self.writer.lock().expect("writer poisoned");
        frame::send(&mut *w, &msg).map(drop).map_err(|e| {
            self.open.store(false, Ordering::Release);
            CallError::Disconnected(e.to_string())
        })
    }

    fn is_open(&self) -> bool {
        self.open.load(Ordering::Acquire)
    }
}

fn reply(sink: &ConnSink, msg: &WireMessage) -> bool {
    let mut w = sink.writer.lock().expect("writer poisoned");
    frame::send(&mut *w, msg).is_ok()
}

fn serve_connection(
    service: Arc<Service>,
    mut reader: Conn,
    sink: Arc<ConnSink>,
    conn_id: u64,
    connections: Connections,
) {
    while let Ok(Some((msg, _))) = frame::recv(&mut reader) {
        let id = msg.correlation_id;
        match msg.kind {
            MessageKind::Hello => {
                let others = service.client_count().saturating_sub(1) as u32;
                let ok = WireMessage::new(
                    MessageKind::Ok,
                    id,
                    service.spec().fqname().to_string(),
                    "",
                    vec![TypedValue::str(PROTOCOL_BANNER), TypedValue::UInt32(others)],
                );
                if !reply(&sink, &ok) {
                    break;
                }
            }
            MessageKind::Call | MessageKind::Oneway => {
                let oneway = msg.kind == MessageKind::Oneway;
                if !service.accepts(&msg.fqname) {
                    let err = WireMessage::error(
                        id,
                        UNKNOWN_METHOD,
                        format!("{} does not serve {}", service.spec().fqname(), msg.fqname),
                    );
                    if !oneway && !reply(&sink, &err) {
                        break;
                    }
                    continue;
                }
                let events: Arc<dyn EventSink> = sink.clone();
                let outcome = panic::catch_unwind(AssertUnwindSafe(|| {
                    service.dispatch(&msg.method, msg.values, events)
                }));
                let response = match outcome {
                    // A panicking implementation takes its connection down,
                    // as a crashing HAL process would.
                    Err(_) => break,
                    Ok(Ok(values)) => {
                        WireMessage::new(MessageKind::Return, id, msg.fqname, msg.method, values)
                    }
                    Ok(Err(e)) => WireMessage::error(id, &e.code, e.detail),
                };
                if !oneway && !reply(&sink, &response) {
                    break;
                }
            }
            other => {
                let err = WireMessage::error(id, "PROTOCOL", format!("unexpected {other:?}"));
                if !reply(&sink, &err) {
                    break;
                }
            }
        }
    }
    sink.open.store(false, Ordering::Release);
    reader.shutdown();
    connections
        .lock()
        .expect("connections poisoned")
        .remove(&conn_id);
    service.detach();
}

type Connections = Arc<Mutex<HashMap<u64, Conn>>>;

struct Binderized {
    endpoint: Endpoint,
    stop: Arc<AtomicBool>,
    connections: Connections,
    acceptor: Option<JoinHandle<()>>,
}

/// A running service. Dropping it stops the service and unregisters it.
pub struct ServiceHandle {
    record: ServiceRecord,
    registry: Arc<dyn Registry>,
    service: Arc<Service>,
    binderized: Option<Binderized>,
    stopped: bool,
}

impl ServiceHandle {
    pub fn record(&self) -> &ServiceRecord {
        &self.record
    }

    pub fn endpoint(&self) -> &Endpoint {
        &self.record.endpoint
    }

    pub fn service(&self) -> &Arc<Service> {
        &self.service
    }

    /// Unregisters, stops accepting, and closes live connections.
    pub fn stop(&mut self) {
        if std::mem::replace(&mut self.stopped, true) {
            return;
        }
        // Leave a replacement registered by someone else alone.
        let ours = self
            .registry
            .list()
            .is_ok_and(|all| all.iter().any(|r| *r == self.record));
        if ours {
            let _ = self
                .registry
                .unregister(&self.record.fqname, &self.record.instance);
        }
        match self.binderized.take() {
            Some(mut b) => {
                b.stop.store(true, Ordering::Release);
                let _ = b.endpoint.connect();
                if let Some(t) = b.acceptor.take() {
                    let _ = t.join();
                }
                for (_, c) in b.connections.lock().expect("connections poisoned").drain() {
                    c.shutdown();
                }
                if let Endpoint::Unix(path) = &b.endpoint {
                    let _ = std::fs::remove_file(path);
                }
            }
            None => {
                if let Endpoint::InProc(id) = &self.record.endpoint {
                    passthrough_table()
                        .lock()
                        .expect("pass-through table poisoned")
                        .remove(id);
                }
            }
        }
    }
}

impl Drop for ServiceHandle {
    fn drop(&mut self) {
        self.stop();
    }
}

fn accept_loop(
    listener: Listener,
    service: Arc<Service>,
    stop: Arc<AtomicBool>,
    connections: Connections,
) {
    loop {
        let conn = listener.accept();
        if stop.load(Ordering::Acquire) {
            break;
        }
        let Ok(conn) = conn else { continue };
        let (Ok(writer), Ok(tracked)) = (conn.try_clone(), conn.try_clone()) else {
            continue;
        };
        let conn_id = NEXT_ID.fetch_add(1, Ordering::Relaxed);
        connections
            .lock()
            .expect("connections poisoned")
            .insert(conn_id, tracked);
        service.attach();
        let sink = Arc::new(ConnSink {
            writer: Mutex::new(writer),
            open: AtomicBool::new(true),
        });
        let (service, connections) = (service.clone(), connections.clone());
        let spawned = thread::Builder::new()
            .name("treble-service-conn".into())
            .spawn(move || serve_connection(service, conn, sink, conn_id, connections));
        if spawned.is_err() {
            break;
        }
    }
}

/// Starts `service` and registers it.
///
/// Binderized services listen on their own endpoint with one thread per
/// client connection. Pass-through services are only entered in a
/// process-wide table and called directly by [`super::Proxy`].
pub fn serve(
    service: Arc<Service>,
    mode: Transport,
    registry: Arc<dyn Registry>,
    options: ServeOptions,
) -> Result<ServiceHandle, ServeError> {
    let fqname = service.spec().fqname();
    let (endpoint, binderized) = match mode {
        Transport::Binderized => {
            let endpoint = options
                .endpoint
                .clone()
                .unwrap_or_else(|| Endpoint::Unix(fresh_socket_path()));
            let listener = endpoint.bind().map_err(|source| match source.kind() {
                io::ErrorKind::AddrInUse => ServeError::AddressInUse(endpoint.to_string()),
                _ => ServeError::Listen {
                    endpoint: endpoint.to_string(),
                    source,
                },
            })?;
            let endpoint = listener.local_endpoint().unwrap_or(endpoint);
            let stop = Arc::new(AtomicBool::new(false));
            let connections: Connections = Default::default();
            let acceptor = {
                let (service, stop, connections) =
                    (service.clone(), stop.clone(), connections.clone());
                thread::Builder::new()
                    .name("treble-service-accept".into())
                    .spawn(move || accept_loop(listener, service, stop, connections))
                    .map_err(|source| ServeError::Listen {
                        endpoint: endpoint.to_string(),
                        source,
                    })?
            };
            let b = Binderized {
                endpoint: endpoint.clone(),
                stop,
                connections,
                acceptor: Some(acceptor),
            };
            (endpoint, Some(b))
        }
        Transport::Passthrough => {
            let id = format!(
                "{}/{}#{}",
                fqname,
                options.instance,
                NEXT_ID.fetch_add(1, Ordering::Relaxed)
            );
            passthrough_table()
                .lock()
                .expect("pass-through table poisoned")
                .insert(id.clone(), service.clone());
            (Endpoint::InProc(id), None)
        }
    };
    let record = ServiceRecord {
        fqname,
        instance: options.instance,
        endpoint,
        transport: mode,
    };
    let handle = ServiceHandle {
        record: record.clone(),
        registry: registry.clone(),
        service,
        binderized,
        stopped: false,
    };
    if let Err(e) = registry.register(record) {
        drop(handle);
        return Err(e.into());
    }
    Ok(handle)
}
