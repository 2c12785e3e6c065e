//! Service registry: records keyed by (fqname, instance), looked up with
//! minor-version fallback.
//!
//! A lookup for `pkg@M.m::IFoo` accepts any record of the same package and
//! interface with major `M` and minor `>= m`; the highest minor wins. The
//! registry itself is a [`LocalRegistry`] map, either used directly in
//! process or exported over a unix socket by [`RegistryServer`] and reached
//! through [`RegistryClient`].

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io;
use std::os::unix::net::{UnixListener, UnixStream};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, OnceLock, RwLock};
use std::thread::{self, JoinHandle};

use thiserror::Error;

use crate::idl::FqName;

use super::codec::{MessageKind, WireMessage};
use super::endpoint::Endpoint;
use super::frame::{self, WireError};
use super::value::TypedValue;

pub const REGISTRY_ENV: &str = "TREBLE_REGISTRY";
pub const DEFAULT_REGISTRY: &str = "./treble-registry.sock";
pub const DEFAULT_INSTANCE: &str = "default";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Transport {
    Binderized,
    Passthrough,
}

impl fmt::Display for Transport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Transport::Binderized => "BINDERIZED",
            Transport::Passthrough => "PASSTHROUGH",
        })
    }
}

impl FromStr for Transport {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "BINDERIZED" => Ok(Transport::Binderized),
            "PASSTHROUGH" => Ok(Transport::Passthrough),
            other => Err(format!("unknown transport `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceRecord {
    pub fqname: FqName,
    pub instance: String,
    pub endpoint: Endpoint,
    pub transport: Transport,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("no service matches {fqname}/{instance}")]
    NotFound { fqname: String, instance: String },
    #[error("registry unavailable: {0}")]
    Unavailable(String),
    #[error("registry protocol error: {0}")]
    Protocol(String),
}

pub trait Registry: Send + Sync {
    /// Inserts or atomically replaces the record for (fqname, instance).
    fn register(&self, record: ServiceRecord) -> Result<(), RegistryError>;
    fn unregister(&self, fqname: &FqName, instance: &str) -> Result<(), RegistryError>;
    fn lookup(&self, fqname: &FqName, instance: &str) -> Result<ServiceRecord, RegistryError>;
    /// Every record, ordered by (fqname, instance).
    fn list(&self) -> Result<Vec<ServiceRecord>, RegistryError>;
}

/// Whether `offered` can serve a client asking for `requested`.
pub fn version_satisfies(requested: &FqName, offered: &FqName) -> bool {
    requested.same_family(offered)
        && offered.package.major() == requested.package.major()
        && offered.package.minor() >= requested.package.minor()
}

/// The lookup rule over any record set.
pub fn select<'a>(
    records: impl IntoIterator<Item = &'a ServiceRecord>,
    requested: &FqName,
    instance: &str,
) -> Option<&'a ServiceRecord> {
    records
        .into_iter()
        .filter(|r| r.instance == instance && version_satisfies(requested, &r.fqname))
        .max_by_key(|r| r.fqname.package.minor())
}

#[derive(Debug, Default)]
pub struct LocalRegistry {
    records: RwLock<BTreeMap<(FqName, String), ServiceRecord>>,
}

impl LocalRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// A process-wide registry shared by every `inproc:<name>` address.
    pub fn named(name: &str) -> Arc<LocalRegistry> {
        static NAMED: OnceLock<Mutex<HashMap<String, Arc<LocalRegistry>>>> = OnceLock::new();
        NAMED
            .get_or_init(Default::default)
            .lock()
            .expect("registry table poisoned")
            .entry(name.to_string())
            .or_default()
            .clone()
    }
}

impl Registry for LocalRegistry {
    fn register(&self, record: ServiceRecord) -> Result<(), RegistryError> {
        let key = (record.fqname.clone(), record.instance.clone());
        self.records
            .write()
            .expect("registry poisoned")
            .insert(key, record);
        Ok(())
    }

    fn unregister(&self, fqname: &FqName, instance: &str) -> Result<(), RegistryError> {
        self.records
            .write()
            .expect("registry poisoned")
            .remove(&(fqname.clone(), instance.to_string()));
        Ok(())
    }

    fn lookup(&self, fqname: &FqName, instance: &str) -> Result<ServiceRecord, RegistryError> {
        let records = self.records.read().expect("registry poisoned");
        select(records.values(), fqname, instance)
            .cloned()
            .ok_or_else(|| RegistryError::NotFound {
                fqname: fqname.to_string(),
                instance: instance.to_string(),
            })
    }

    fn list(&self) -> Result<Vec<ServiceRecord>, RegistryError> {
        Ok(self
            .records
            .read()
            .expect("registry poisoned")
            .values()
            .cloned()
            .collect())
    }
}

const RECORD_TYPE: &str = "treble.ServiceRecord";
const REGISTRY_FQNAME: &str = "treble.registry";

fn record_to_value(r: &ServiceRecord) -> TypedValue {
    TypedValue::Struct {
        name: RECORD_TYPE.into(),
        fields: vec![
            ("fqname".into(), TypedValue::Str(r.fqname.to_string())),
            ("instance".into(), TypedValue::Str(r.instance.clone())),
            ("endpoint".into(), TypedValue::Str(r.endpoint.to_string())),
            ("transport".into(), TypedValue::Str(r.transport.to_string())),
        ],
    }
}

fn record_from_value(v: &TypedValue) -> Result<ServiceRecord, RegistryError> {
    let text = |key: &str| {
        v.field(key)
            .and_then(TypedValue::as_str)
            .ok_or_else(|| RegistryError::Protocol(format!("record without `{key}`")))
    };
    let bad = |e: String| RegistryError::Protocol(e);
    Ok(ServiceRecord {
        fqname: text("fqname")?.parse().map_err(|e| bad(format!("{e}")))?,
        instance: text("instance")?.to_string(),
        endpoint: text("endpoint")?.parse().map_err(bad)?,
        transport: text("transport")?.parse().map_err(bad)?,
    })
}

fn two_strings(msg: &WireMessage) -> Result<(FqName, String), String> {
    match msg.values.as_slice() {
        [TypedValue::Str(fq), TypedValue::Str(inst)] => {
            Ok((fq.parse().map_err(|e| format!("{e}"))?, inst.clone()))
        }
        _ => Err(format!("`{}` expects (fqname, instance)", msg.method)),
    }
}

fn handle_request(registry: &LocalRegistry, msg: &WireMessage) -> WireMessage {
    let id = msg.correlation_id;
    let reply = |values| {
        WireMessage::new(
            MessageKind::Return,
            id,
            REGISTRY_FQNAME,
            &msg.method,
            values,
        )
    };
    let result: Result<Vec<TypedValue>, (String, String)> = (|| {
        let proto = |e: String| ("PROTOCOL".to_string(), e);
        match msg.method.as_str() {
            "register" => {
                let rec = msg
                    .values
                    .first()
                    .ok_or_else(|| proto("register expects a record".into()))
                    .and_then(|v| record_from_value(v).map_err(|e| proto(e.to_string())))?;
                registry.register(rec).map_err(|e| proto(e.to_string()))?;
                Ok(vec![])
            }
            "unregister" => {
                let (fq, inst) = two_strings(msg).map_err(proto)?;
                registry
                    .unregister(&fq, &inst)
                    .map_err(|e| proto(e.to_string()))?;
                Ok(vec![])
            }
            "lookup" => {
                let (fq, inst) = two_strings(msg).map_err(proto)?;
                match registry.lookup(&fq, &inst) {
                    Ok(r) => Ok(vec![record_to_value(&r)]),
                    Err(e) => Err(("NOT_FOUND".into(), e.to_string())),
                }
            }
            "list" => Ok(registry
                .list()
                .map_err(|e| proto(e.to_string()))?
                .iter()
                .map(record_to_value)
                .collect()),
            other => Err(proto(format!("unknown registry method `{other}`"))),
        }
    })();
    match result {
        Ok(values) => reply(values),
        Err((code, detail)) => WireMessage::error(id, &code, detail),
    }
}

fn serve_connection(registry: &LocalRegistry, mut stream: UnixStream) {
    while let Ok(Some((msg, _))) = frame::recv(&mut stream) {
        let reply = handle_request(registry, &msg);
        if frame::send(&mut stream, &reply).is_err() {
            break;
        }
    }
}

/// Exports a [`LocalRegistry`] on a unix socket until dropped.
pub struct RegistryServer {
    path: PathBuf,
    registry: Arc<LocalRegistry>,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl RegistryServer {
    /// Binds `path`, replacing a stale socket file nobody listens on.
    pub fn bind(path: impl AsRef<Path>) -> io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        if path.exists() {
            if UnixStream::connect(&path).is_ok() {
                return Err(io::Error::new(
                    io::ErrorKind::AddrInUse,
                    format!("a registry already listens on {}", path.display()),
                ));
            }
            std::fs::remove_file(&path)?;
        }
        let listener = UnixListener::bind(&path)?;
        let registry = Arc::new(LocalRegistry::new());
        let stop = Arc::new(AtomicBool::new(false));
        let thread = {
            let registry = registry.clone();
            let stop = stop.clone();
            thread::Builder::new()
                .name("treble-registry".into())
                .spawn(move || {
                    for conn in listener.incoming() {
                        if stop.load(Ordering::Acquire) {
                            break;
                        }
                        let Ok(conn) = conn else { continue };
                        let registry = registry.clone();
                        thread::spawn(move || serve_connection(&registry, conn));
                    }
                })?
        };
        Ok(Self {
            path,
            registry,
            stop,
            thread: Some(thread),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn registry(&self) -> &Arc<LocalRegistry> {
        &self.registry
    }
}

impl Drop for RegistryServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Release);
        let _ = UnixStream::connect(&self.path);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
        let _ = std::fs::remove_file(&self.path);
    }
}

/// Talks to a [`RegistryServer`]; one short connection per request.
#[derive(Debug, Clone)]
pub struct RegistryClient {
    path: PathBuf,
}

impl RegistryClient {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into() }
    }

    fn request(
        &self,
        method: &str,
        values: Vec<TypedValue>,
    ) -> Result<Vec<TypedValue>, RegistryError> {
        let unavailable =
            |e: WireError| RegistryError::Unavailable(format!("{}: {e}", self.path.display()));
        let mut stream = UnixStream::connect(&self.path)
            .map_err(|e| RegistryError::Unavailable(format!("{}: {e}", self.path.display())))?;
        let msg = WireMessage::new(MessageKind::Call, 1, REGISTRY_FQNAME, method, values);
        frame::send(&mut stream, &msg).map_err(unavailable)?;
        let (reply, _) = frame::recv(&mut stream)
            .map_err(unavailable)?
            .ok_or_else(|| RegistryError::Unavailable("registry closed the connection".into()))?;
        match reply.kind {
            MessageKind::Return => Ok(reply.values),
            MessageKind::Error => Err(match reply.error_parts() {
                Some(("NOT_FOUND", _)) => {
                    let (fq, inst) = match msg.values.as_slice() {
                        [TypedValue::Str(f), TypedValue::Str(i)] => (f.clone(), i.clone()),
                        _ => Default::default(),
                    };
                    RegistryError::NotFound {
                        fqname: fq,
                        instance: inst,
                    }
                }
                Some((code, detail)) => RegistryError::Protocol(format!("{code}: {detail}")),
                None => RegistryError::Protocol("malformed error reply".into()),
            }),
            other => Err(RegistryError::Protocol(format!(
                "unexpected {other:?} reply"
            ))),
        }
    }
}

impl Registry for RegistryClient {
    fn register(&self, record: ServiceRecord) -> Result<(), RegistryError> {
        self.request("register", vec![record_to_value(&record)])
            .map(drop)
    }

    fn unregister(&self, fqname: &FqName, instance: &str) -> Result<(), RegistryError> {
        self.request(
            "unregister",
            vec![
                TypedValue::Str(fqname.to_string()),
                TypedValue::str(instance),
            ],
        )
        .map(drop)
    }

    fn lookup(&self, fqname: &FqName, instance: &str) -> Result<ServiceRecord, RegistryError> {
        let values = self.request(
            "lookup",
            vec![
                TypedValue::Str(fqname.to_string()),
                TypedValue::str(instance),
            ],
        )?;
        let first = values
            .first()
            .ok_or_else(|| RegistryError::Protocol("empty lookup reply".into()))?;
        record_from_value(first)
    }

    fn list(&self) -> Result<Vec<ServiceRecord>, RegistryError> {
        self.request("list", vec![])?
            .iter()
            .map(record_from_value)
            .collect()
    }
}

/// Registry address from `TREBLE_REGISTRY`, else the default socket path.
pub fn registry_address() -> String {
    std::env::var(REGISTRY_ENV).unwrap_or_else(|_| DEFAULT_REGISTRY.to_string())
}

/// Opens a registry by address: `inproc:<name>` for a process-local one,
/// otherwise a unix socket path (optionally `unix:`-prefixed).
pub fn open_registry(addr: &str) -> Result<Arc<dyn Registry>, RegistryError> {
    match addr.parse::<Endpoint>() {
        Ok(Endpoint::InProc(name)) => Ok(LocalRegistry::named(&name)),
        Ok(Endpoint::Unix(path)) => Ok(Arc::new(RegistryClient::new(path))),
        Ok(Endpoint::Tcp(_)) => Err(RegistryError::Unavailable(
            "the registry listens on unix sockets only".into(),
        )),
        Err(e) => Err(RegistryError::Unavailable(e)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(fq: &str, instance: &str, ep: &str) -> ServiceRecord {
        ServiceRecord {
            fqname: fq.parse().unwrap(),
            instance: instance.into(),
            endpoint: ep.parse().unwrap(),
            transport: Transport::Binderized,
        }
    }

    #[test]
    fn newer_minor_serves_older_request() {
        let reg = LocalRegistry::new();
        reg.register(rec("demo.light@1.1::ILight", "default", "inproc:a"))
            .unwrap();
        let got = reg
            .lookup(&"demo.light@1.0::ILight".parse().unwrap(), "default")
            .unwrap();
        assert_eq!(got.fqname.to_string(), "demo.light@1.1::ILight");
        assert!(matches!(
            reg.lookup(&"demo.light@2.0::ILight".parse().unwrap(), "default"),
            Err(RegistryError::NotFound { .. })
        ));
        assert!(reg
            .lookup(&"demo.light@1.2::ILight".parse().unwrap(), "default")
            .is_err());
        assert!(reg
            .lookup(&"demo.light@1.0::ILight".parse().unwrap(), "other")
            .is_err());
    }

    #[test]
    fn highest_minor_wins_and_reregistering_replaces() {
        let reg = LocalRegistry::new();
        for m in ["1.0", "1.3", "1.1"] {
            reg.register(rec(
                &format!("demo.light@{m}::ILight"),
                "default",
                "inproc:x",
            ))
            .unwrap();
        }
        let q: FqName = "demo.light@1.0::ILight".parse().unwrap();
        assert_eq!(reg.lookup(&q, "default").unwrap().fqname.package.minor(), 3);
        reg.register(rec("demo.light@1.0::ILight", "default", "inproc:y"))
            .unwrap();
        assert_eq!(reg.list().unwrap().len(), 3);
        let exact: FqName = "demo.light@1.0::ILight".parse().unwrap();
        let all = reg.list().unwrap();
        let r = all.iter().find(|r| r.fqname == exact).unwrap();
        assert_eq!(r.endpoint.to_string(), "inproc:y");
    }

    #[test]
    fn named_registries_are_shared() {
        let a = LocalRegistry::named("registry-unit-test");
        a.register(rec("demo.x@1.0::IX", "default", "inproc:q"))
            .unwrap();
        let b = open_registry("inproc:registry-unit-test").unwrap();
        assert_eq!(b.list().unwrap().len(), 1);
    }
}
