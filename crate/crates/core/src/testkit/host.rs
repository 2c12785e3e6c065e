//! Host side of an agent session.

use std::collections::HashMap;
use std::io;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{mpsc, Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use thiserror::Error;

use crate::ir::{parse_spec_text, InterfaceSpec};
use crate::wire::{
    check_values, frame, Conn, Endpoint, MessageKind, Mismatch, TypedValue, WireMessage,
};

use super::agent::{AGENT_BANNER, LOAD_FAILED};

#[derive(Debug, Error)]
pub enum HostError {
    #[error("connection refused: {0}")]
    ConnectionRefused(io::Error),
    #[error("agent speaks a different protocol: {0}")]
    ProtocolMismatch(String),
    #[error("cannot load {fqname}: {detail}")]
    LoadFailed { fqname: String, detail: String },
    #[error("{0} was not loaded")]
    NotLoaded(String),
    #[error("{fqname} has no method `{method}`")]
    UnknownMethod { fqname: String, method: String },
    #[error("type mismatch: {0}")]
    TypeMismatch(Mismatch),
    #[error("{code}: {detail}")]
    Remote { code: String, detail: String },
    #[error("session lost: {0}")]
    Disconnected(String),
    #[error("no reply within {0:?}")]
    Timeout(Duration),
}

/// One callback invocation pushed by the agent.
#[derive(Debug, Clone, PartialEq)]
pub struct HostEvent {
    pub method: String,
    pub values: Vec<TypedValue>,
}

/// Reply slots by correlation id; `None` once the session has ended.
type Pending = Arc<Mutex<Option<HashMap<u64, mpsc::Sender<WireMessage>>>>>;
type EventRoutes = Arc<Mutex<HashMap<u64, mpsc::Sender<HostEvent>>>>;

pub struct AgentClient {
    conn: Conn,
    writer: Mutex<Conn>,
    pending: Pending,
    events: EventRoutes,
    specs: Mutex<HashMap<String, Arc<InterfaceSpec>>>,
    next_id: AtomicU64,
    timeout: Duration,
    reader: Option<JoinHandle<()>>,
}

fn read_loop(mut conn: Conn, pending: Pending, events: EventRoutes) {
    while let Ok(Some((msg, _))) = frame::recv(&mut conn) {
        if msg.kind == MessageKind::Event {
            if let Some(tx) = events
                .lock()
                .expect("event routes poisoned")
                .get(&msg.correlation_id)
            {
                let _ = tx.send(HostEvent {
                    method: msg.method,
                    values: msg.values,
                });
            }
            continue;
        }
        let slot = pending
            .lock()
            .expect("pending poisoned")
            .as_mut()
            .and_then(|p| p.remove(&msg.correlation_id));
        if let Some(tx) = slot {
            let _ = tx.send(msg);
        }
    }
    pending.lock().expect("pending poisoned").take();
    events.lock().expect("event routes poisoned").clear();
}

fn remote(msg: &WireMessage) -> HostError {
    let (code, detail) = msg.error_parts().unwrap_or(("PROTOCOL", "malformed ERROR"));
    HostError::Remote {
        code: code.to_string(),
        detail: detail.to_string(),
    }
}

impl AgentClient {
    /// Connects to the agent at `host:port` and completes the handshake.
    pub fn connect(addr: &str) -> Result<AgentClient, HostError> {
        let conn = Endpoint::Tcp(addr.to_string())
            .connect()
            .map_err(HostError::ConnectionRefused)?;
        let clone = |c: &Conn| {
            c.try_clone()
                .map_err(|e| HostError::Disconnected(e.to_string()))
        };
        let (reader_conn, writer) = (clone(&conn)?, clone(&conn)?);
        let pending: Pending = Arc::new(Mutex::new(Some(HashMap::new())));
        let events: EventRoutes = Default::default();
        let reader = {
            let (p, e) = (pending.clone(), events.clone());
            thread::Builder::new()
                .name("treble-host-reader".into())
                .spawn(move || read_loop(reader_conn, p, e))
                .map_err(|e| HostError::Disconnected(e.to_string()))?
        };
        let client = AgentClient {
            conn,
            writer: Mutex::new(writer),
            pending,
            events,
            specs: Mutex::default(),
            next_id: AtomicU64::new(1),
            timeout: Duration::from_secs(10),
            reader: Some(reader),
        };
        // Whatever answers without a well-formed banner is not an agent.
        let reply = client
            .request(
                MessageKind::Hello,
                "",
                "",
                vec![TypedValue::str(AGENT_BANNER)],
            )
            .map_err(|e| match e {
                HostError::Disconnected(why) => HostError::ProtocolMismatch(why),
                HostError::Timeout(t) => {
                    HostError::ProtocolMismatch(format!("no banner within {t:?}"))
                }
                other => other,
            })?;
        match (reply.kind, reply.values.first()) {
            (MessageKind::Ok, Some(TypedValue::Str(b))) if b == AGENT_BANNER => Ok(client),
            _ => Err(HostError::ProtocolMismatch(format!(
                "{:?} {:?}",
                reply.kind, reply.values
            ))),
        }
    }

    pub fn set_timeout(&mut self, timeout: Duration) {
        self.timeout = timeout;
    }

    fn send(&self, msg: &WireMessage) -> Result<(), HostError> {
        frame::send(&mut *self.writer.lock().expect("writer poisoned"), msg)
            .map(drop)
            .map_err(|e| HostError::Disconnected(e.to_string()))
    }

    fn request(
        &self,
        kind: MessageKind,
        fqname: &str,
        method: &str,
        values: Vec<TypedValue>,
    ) -> Result<WireMessage, HostError> {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let (tx, rx) = mpsc::channel();
        match self.pending.lock().expect("pending poisoned").as_mut() {
            Some(p) => p.insert(id, tx),
            None => return Err(HostError::Disconnected("agent closed the session".into())),
        };
        if let Err(e) = self.send(&WireMessage::new(kind, id, fqname, method, values)) {
            self.forget(id);
            return Err(e);
        }
        match rx.recv_timeout(self.timeout) {
            Ok(m) => Ok(m),
            Err(mpsc::RecvTimeoutError::Timeout) => {
                self.forget(id);
                Err(HostError::Timeout(self.timeout))
            }
            Err(mpsc::RecvTimeoutError::Disconnected) => {
                Err(HostError::Disconnected("agent closed the session".into()))
            }
        }
    }

    fn forget(&self, id: u64) {
        if let Some(p) = self.pending.lock().expect("pending poisoned").as_mut() {
            p.remove(&id);
        }
    }

    fn load_raw(&self, fqname: &str) -> Result<(Arc<InterfaceSpec>, Vec<TypedValue>), HostError> {
        let reply = self.request(MessageKind::Load, fqname, "", vec![])?;
        let failed = |detail: String| HostError::LoadFailed {
            fqname: fqname.to_string(),
            detail,
        };
        match reply.kind {
            MessageKind::Ok => {}
            MessageKind::Error => {
                let (code, detail) = reply.error_parts().unwrap_or((LOAD_FAILED, ""));
                return Err(failed(format!("{code}: {detail}")));
            }
            other => {
                return Err(HostError::ProtocolMismatch(format!(
                    "{other:?} answering LOAD"
                )))
            }
        }
        let mut values = reply.values.into_iter();
        let text = values.next().and_then(|v| v.as_str().map(str::to_string));
        let spec = parse_spec_text(&text.ok_or_else(|| failed("no spec in reply".into()))?)
            .map_err(|e| failed(e.to_string()))?;
        let spec = Arc::new(spec);
        self.specs
            .lock()
            .expect("specs poisoned")
            .insert(fqname.to_string(), spec.clone());
        Ok((spec, values.collect()))
    }

    /// Loads a service interface so it can be called.
    pub fn load(&self, fqname: &str) -> Result<Arc<InterfaceSpec>, HostError> {
        self.load_raw(fqname).map(|(spec, _)| spec)
    }

    /// Loads a callback interface. Pass the handle as the callback
    /// argument of a call; its events arrive on the receiver in the order
    /// the service emitted them.
    pub fn load_callback(
        &self,
        fqname: &str,
    ) -> Result<(TypedValue, mpsc::Receiver<HostEvent>), HostError> {
        let (_, rest) = self.load_raw(fqname)?;
        let Some(TypedValue::Handle(h)) = rest.first() else {
            return Err(HostError::LoadFailed {
                fqname: fqname.to_string(),
                detail: "not a callback interface".into(),
            });
        };
        let (tx, rx) = mpsc::channel();
        self.events
            .lock()
            .expect("event routes poisoned")
            .insert(*h, tx);
        Ok((TypedValue::Handle(*h), rx))
    }

    pub fn spec(&self, fqname: &str) -> Option<Arc<InterfaceSpec>> {
        self.specs
            .lock()
            .expect("specs poisoned")
            .get(fqname)
            .cloned()
    }

    pub fn call(
        &self,
        fqname: &str,
        method: &str,
        args: Vec<TypedValue>,
    ) -> Result<Vec<TypedValue>, HostError> {
        let spec = self
            .spec(fqname)
            .ok_or_else(|| HostError::NotLoaded(fqname.to_string()))?;
        let api = spec.api(method).ok_or_else(|| HostError::UnknownMethod {
            fqname: fqname.to_string(),
            method: method.to_string(),
        })?;
        check_values(&args, &api.args).map_err(HostError::TypeMismatch)?;
        if api.oneway {
            let id = self.next_id.fetch_add(1, Ordering::Relaxed);
            self.send(&WireMessage::new(
                MessageKind::Oneway,
                id,
                fqname,
                method,
                args,
            ))?;
            return Ok(vec![]);
        }
        let reply = self.request(MessageKind::Call, fqname, method, args)?;
        match reply.kind {
            MessageKind::Return => Ok(reply.values),
            MessageKind::Error => Err(remote(&reply)),
            other => Err(HostError::ProtocolMismatch(format!(
                "{other:?} answering CALL"
            ))),
        }
    }
}

impl Drop for AgentClient {
    fn drop(&mut self) {
        self.conn.shutdown();
        if let Some(r) = self.reader.take() {
            let _ = r.join();
        }
    }
}
