//! The on-target test agent. A host connects over TCP, says HELLO, LOADs
//! interfaces by name and then CALLs them; the agent drives the calls
//! against the real services and streams callback EVENTs back.
//!
//! LOAD of a service interface answers `OK [spec text]`. LOAD of an
//! interface that only ever appears as a callback argument answers
//! `OK [spec text, Handle]`; the host passes that handle in later CALLs and
//! receives the resulting EVENTs tagged with it.

use std::collections::{BTreeMap, HashMap};
use std::io;
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

use thiserror::Error;

use crate::ir::{emit_spec_text, parse_spec_text, InterfaceSpec, VarType};
use crate::runtime::{Callbacks, Proxy};
use crate::wire::{frame, Conn, Endpoint, MessageKind, Registry, TypedValue, WireMessage};

use super::drive::drive;

pub const DEFAULT_AGENT_PORT: u16 = 5731;
pub const AGENT_BANNER: &str = "treble/1";
pub const LOAD_FAILED: &str = "LoadFailed";
pub const NOT_LOADED: &str = "NotLoaded";

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("cannot read spec directory {path}: {source}")]
    SpecDir { path: String, source: io::Error },
    #[error("bad spec file {path}: {detail}")]
    BadSpec { path: String, detail: String },
    #[error("cannot listen on {addr}: {source}")]
    Listen { addr: String, source: io::Error },
}

pub struct AgentConfig {
    pub specs: BTreeMap<String, Arc<InterfaceSpec>>,
    pub registry: Arc<dyn Registry>,
    pub instance: String,
}

impl AgentConfig {
    pub fn new(
        specs: impl IntoIterator<Item = Arc<InterfaceSpec>>,
        registry: Arc<dyn Registry>,
    ) -> Self {
        Self {
            specs: specs
                .into_iter()
                .map(|s| (s.fqname().to_string(), s))
                .collect(),
            registry,
            instance: crate::wire::DEFAULT_INSTANCE.to_string(),
        }
    }

    /// Loads every `*.spec` file in `dir`.
    pub fn from_spec_dir(dir: &Path, registry: Arc<dyn Registry>) -> Result<Self, AgentError> {
        let dir_err = |source| AgentError::SpecDir {
            path: dir.display().to_string(),
            source,
        };
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(dir_err)?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()
            .map_err(dir_err)?;
        paths.retain(|p| p.extension().is_some_and(|e| e == "spec"));
        paths.sort();
        let mut specs = Vec::new();
        for p in paths {
            let bad = |detail: String| AgentError::BadSpec {
                path: p.display().to_string(),
                detail,
            };
            let text = std::fs::read_to_string(&p).map_err(|e| bad(e.to_string()))?;
            specs.push(Arc::new(
                parse_spec_text(&text).map_err(|e| bad(e.to_string()))?,
            ));
        }
        Ok(Self::new(specs, registry))
    }

    fn is_callback_interface(&self, fqname: &str) -> bool {
        fn mentions(ty: &VarType, fqname: &str) -> bool {
            match ty {
                VarType::Interface(fq) => fq.to_string() == fqname,
                VarType::Vector(e) => mentions(e, fqname),
                VarType::Struct(s) => s.fields.iter().any(|f| mentions(&f.ty, fqname)),
                _ => false,
            }
        }
        self.specs
            .values()
            .flat_map(|s| &s.apis)
            .flat_map(|a| &a.args)
            .any(|v| mentions(&v.ty, fqname))
    }
}

type Writer = Arc<Mutex<Conn>>;
type Conns = Arc<Mutex<HashMap<u64, Conn>>>;

fn send(writer: &Writer, msg: &WireMessage) -> bool {
    frame::send(&mut *writer.lock().expect("agent writer poisoned"), msg).is_ok()
}

struct Session {
    config: Arc<AgentConfig>,
    writer: Writer,
    services: HashMap<String, Proxy>,
    /// Host handle -> callback interface.
    callbacks: HashMap<u64, Arc<InterfaceSpec>>,
    /// (service fqname, host handle) -> handle registered on that proxy.
    bindings: HashMap<(String, u64), TypedValue>,
    next_handle: u64,
}

impl Session {
    fn load(&mut self, msg: &WireMessage) -> WireMessage {
        let fq = msg.fqname.clone();
        let Some(spec) = self.config.specs.get(&fq).cloned() else {
            return WireMessage::error(
                msg.correlation_id,
                LOAD_FAILED,
                format!("unknown interface {fq}"),
            );
        };
        let text = TypedValue::str(emit_spec_text(&spec));
        let values = if self.config.is_callback_interface(&fq) {
            self.next_handle += 1;
            self.callbacks.insert(self.next_handle, spec);
            vec![text, TypedValue::Handle(self.next_handle)]
        } else {
            if !self.services.contains_key(&fq) {
                match Proxy::connect(&*self.config.registry, spec, &self.config.instance) {
                    Ok(p) => {
                        self.services.insert(fq.clone(), p);
                    }
                    Err(e) => {
                        return WireMessage::error(
                            msg.correlation_id,
                            LOAD_FAILED,
                            format!("{fq}: {e}"),
                        )
                    }
                }
            }
            vec![text]
        };
        WireMessage::new(MessageKind::Ok, msg.correlation_id, fq, "", values)
    }

    /// Swaps host callback handles in top-level arguments for handles
    /// registered on the target proxy, whose events go back to the host.
    fn bind_callbacks(&mut self, msg: &mut WireMessage) -> Result<(), String> {
        let proxy = &self.services[&msg.fqname];
        let Some(api) = proxy.spec().api(&msg.method) else {
            return Ok(());
        };
        for (var, value) in api.args.iter().zip(msg.values.iter_mut()) {
            let (VarType::Interface(_), TypedValue::Handle(host)) = (&var.ty, &*value) else {
                continue;
            };
            let host = *host;
            let Some(cb_spec) = self.callbacks.get(&host).cloned() else {
                continue;
            };
            let key = (msg.fqname.clone(), host);
            if let Some(bound) = self.bindings.get(&key) {
                *value = bound.clone();
                continue;
            }
            let cb_fq = cb_spec.fqname().to_string();
            let mut callbacks = Callbacks::new(cb_spec.clone());
            for api in &cb_spec.apis {
                let (writer, fq, method) = (self.writer.clone(), cb_fq.clone(), api.name.clone());
                callbacks = callbacks.on(&api.name, move |values| {
                    let event = WireMessage::new(
                        MessageKind::Event,
                        host,
                        fq.as_str(),
                        method.as_str(),
                        values,
                    );
                    send(&writer, &event);
                });
            }
            let bound = proxy
                .register_callback(callbacks)
                .map_err(|e| e.to_string())?;
            self.bindings.insert(key, bound.clone());
            *value = bound;
        }
        Ok(())
    }

    fn call(&mut self, mut msg: WireMessage) -> Option<WireMessage> {
        let id = msg.correlation_id;
        let oneway = msg.kind == MessageKind::Oneway;
        if !self.services.contains_key(&msg.fqname) {
            return Some(WireMessage::error(
                id,
                NOT_LOADED,
                format!("{} was not loaded", msg.fqname),
            ));
        }
        if let Err(e) = self.bind_callbacks(&mut msg) {
            return Some(WireMessage::error(id, "TransportError", e));
        }
        let reply = match drive(&self.services[&msg.fqname], msg) {
            Ok(reply) => reply,
            Err(e) => e.to_message(id),
        };
        (!oneway || reply.kind == MessageKind::Error).then_some(reply)
    }
}

fn serve_session(
    config: Arc<AgentConfig>,
    mut reader: Conn,
    writer: Writer,
    sessions: Arc<AtomicU64>,
    (conn_id, conns): (u64, Conns),
) {
    let mut session = Session {
        config,
        writer: writer.clone(),
        services: HashMap::new(),
        callbacks: HashMap::new(),
        bindings: HashMap::new(),
        next_handle: 0,
    };
    while let Ok(Some((msg, _))) = frame::recv(&mut reader) {
        let id = msg.correlation_id;
        let (reply, close) = match msg.kind {
            MessageKind::Hello => {
                let others = sessions.load(Ordering::SeqCst).saturating_sub(1) as u32;
                let ok = WireMessage::new(
                    MessageKind::Ok,
                    id,
                    "",
                    "",
                    vec![TypedValue::str(AGENT_BANNER), TypedValue::UInt32(others)],
                );
                (Some(ok), false)
            }
            MessageKind::Load => (Some(session.load(&msg)), false),
            MessageKind::Call | MessageKind::Oneway => (session.call(msg), false),
            other => (
                Some(WireMessage::error(
                    id,
                    "PROTOCOL",
                    format!("hosts may not send {other:?}"),
                )),
                true,
            ),
        };
        if let Some(r) = reply {
            if !send(&writer, &r) {
                break;
            }
        }
        if close {
            break;
        }
    }
    drop(session);
    reader.shutdown();
    conns.lock().expect("agent conns poisoned").remove(&conn_id);
    sessions.fetch_sub(1, Ordering::SeqCst);
}

/// A running agent; dropping it stops accepting and ends open sessions.
pub struct AgentHandle {
    endpoint: Endpoint,
    stop: Arc<AtomicBool>,
    conns: Conns,
    acceptor: Option<JoinHandle<()>>,
}

impl AgentHandle {
    /// `host:port` the agent listens on.
    pub fn address(&self) -> String {
        match &self.endpoint {
            Endpoint::Tcp(a) => a.clone(),
            other => other.to_string(),
        }
    }

    pub fn stop(&mut self) {
        let Some(acceptor) = self.acceptor.take() else {
            return;
        };
        self.stop.store(true, Ordering::Release);
        let _ = self.endpoint.connect();
        let _ = acceptor.join();
        for (_, c) in self.conns.lock().expect("agent conns poisoned").drain() {
            c.shutdown();
        }
    }
}

impl Drop for AgentHandle {
    fn drop(&mut self) {
        self.stop();
    }
}

/// Listens on TCP `addr` (`host:port`; port 0 picks a free one).
pub fn agent_serve(addr: &str, config: AgentConfig) -> Result<AgentHandle, AgentError> {
    let listen_err = |source| AgentError::Listen {
        addr: addr.to_string(),
        source,
    };
    let listener = Endpoint::Tcp(addr.to_string()).bind().map_err(listen_err)?;
    let endpoint = listener.local_endpoint().map_err(listen_err)?;
    let stop = Arc::new(AtomicBool::new(false));
    let conns: Conns = Default::default();
    let config = Arc::new(config);
    let sessions = Arc::new(AtomicU64::new(0));
    let acceptor = {
        let (stop, conns) = (stop.clone(), conns.clone());
        thread::Builder::new()
            .name("treble-agent-accept".into())
            .spawn(move || {
                let mut next_conn = 0u64;
                loop {
                    let conn = listener.accept();
                    if stop.load(Ordering::Acquire) {
                        break;
                    }
                    let Ok(conn) = conn else { continue };
                    let (Ok(w), Ok(tracked)) = (conn.try_clone(), conn.try_clone()) else {
                        continue;
                    };
                    next_conn += 1;
                    conns
                        .lock()
                        .expect("agent conns poisoned")
                        .insert(next_conn, tracked);
                    sessions.fetch_add(1, Ordering::SeqCst);
                    let (config, sessions) = (config.clone(), sessions.clone());
                    let tracking = (next_conn, conns.clone());
                    let writer = Arc::new(Mutex::new(w));
                    let _ = thread::Builder::new()
                        .name("treble-agent-session".into())
                        .spawn(move || serve_session(config, conn, writer, sessions, tracking));
                }
            })
            .map_err(listen_err)?
    };
    Ok(AgentHandle {
        endpoint,
        stop,
        conns,
        acceptor: Some(acceptor),
    })
}
