//! Call profiling: a proxy wrapper that forwards every call unchanged and
//! logs one trace record per call.

use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;
use std::time::Instant;

use thiserror::Error;

use crate::runtime::{CallError, Proxy};
use crate::wire::{encode, MessageKind, TypedValue, WireMessage};

pub const TRACE_HEADER: &str = "treble-trace v1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CallStatus {
    Ok,
    Error(String),
}

impl fmt::Display for CallStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CallStatus::Ok => f.write_str("OK"),
            CallStatus::Error(code) => write!(f, "ERROR:{code}"),
        }
    }
}

impl FromStr for CallStatus {
    type Err = TraceError;

    fn from_str(s: &str) -> Result<Self, TraceError> {
        match s {
            "OK" => Ok(CallStatus::Ok),
            _ => match s.strip_prefix("ERROR:") {
                Some(code) if !code.is_empty() => Ok(CallStatus::Error(code.to_string())),
                _ => Err(TraceError::Malformed(format!("bad status `{s}`"))),
            },
        }
    }
}

/// Status recorded for a call outcome.
pub fn call_status(result: &Result<Vec<TypedValue>, CallError>) -> CallStatus {
    match result {
        Ok(_) => CallStatus::Ok,
        Err(e) => CallStatus::Error(
            match e {
                CallError::Remote { code, .. } => code.as_str(),
                CallError::UnknownMethod(_) => "UNKNOWN_METHOD",
                CallError::TypeMismatch(_) => "TYPE_MISMATCH",
                CallError::Transport(_) => "TRANSPORT",
                CallError::Timeout(_) => "TIMEOUT",
                CallError::Disconnected(_) => "DISCONNECTED",
                CallError::Lookup(_) => "LOOKUP",
            }
            .to_string(),
        ),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    /// Nanoseconds since the profiling session started.
    pub ts_ns: u64,
    pub fqname: String,
    pub method: String,
    /// Encoded size of the request message.
    pub req_bytes: u64,
    pub latency_ns: u64,
    pub status: CallStatus,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("malformed trace: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn write_to(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "{TRACE_HEADER}")?;
        for r in &self.records {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}",
                r.ts_ns, r.fqname, r.method, r.req_bytes, r.latency_ns, r.status
            )?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to memory");
        String::from_utf8(out).expect("trace is UTF-8")
    }

    pub fn read_from(r: impl BufRead) -> Result<Trace, TraceError> {
        let mut lines = r.lines();
        match lines.next().transpose()? {
            Some(h) if h == TRACE_HEADER => {}
            other => return Err(TraceError::Malformed(format!("bad header {other:?}"))),
        }
        let mut records = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line?;
            let cols: Vec<&str> = line.split('\t').collect();
            let bad = |what: &str| TraceError::Malformed(format!("line {}: {what}", n + 2));
            let [ts, fqname, method, req, latency, status] = cols[..] else {
                return Err(bad("expected 6 columns"));
            };
            let num = |s: &str| s.parse::<u64>().map_err(|_| bad("bad number"));
            records.push(TraceRecord {
                ts_ns: num(ts)?,
                fqname: fqname.to_string(),
                method: method.to_string(),
                req_bytes: num(req)?,
                latency_ns: num(latency)?,
                status: status.parse()?,
            });
        }
        Ok(Trace { records })
    }

    pub fn parse(text: &str) -> Result<Trace, TraceError> {
        Self::read_from(text.as_bytes())
    }

    /// Total request bytes per interface.
    pub fn bytes_per_interface(&self) -> std::collections::BTreeMap<String, u64> {
        let mut sizes = std::collections::BTreeMap::new();
        for r in &self.records {
            *sizes.entry(r.fqname.clone()).or_insert(0) += r.req_bytes;
        }
        sizes
    }
}

/// Wraps a proxy; results pass through untouched.
pub struct Profiler {
    inner: Proxy,
    started: Instant,
    trace: Trace,
}

impl Profiler {
    pub fn new(inner: Proxy) -> Self {
        Self {
            inner,
            started: Instant::now(),
            trace: Trace::default(),
        }
    }

    pub fn proxy(&self) -> &Proxy {
        &self.inner
    }

    pub fn call(
        &mut self,
        method: &str,
        args: Vec<TypedValue>,
    ) -> Result<Vec<TypedValue>, CallError> {
        let fqname = self.inner.spec().fqname().to_string();
        let request = WireMessage::new(MessageKind::Call, 0, fqname.as_str(), method, args);
        let req_bytes = encode(&request).map_or(0, |b| b.len() as u64);
        let ts_ns = self.started.elapsed().as_nanos() as u64;
        let start = Instant::now();
        let result = self.inner.call(method, request.values);
        let latency_ns = start.elapsed().as_nanos() as u64;
        self.trace.records.push(TraceRecord {
            ts_ns,
            fqname,
            method: method.to_string(),
            req_bytes,
            latency_ns,
            status: call_status(&result),
        });
        result
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn finish(self) -> (Proxy, Trace) {
        (self.inner, self.trace)
    }
}
