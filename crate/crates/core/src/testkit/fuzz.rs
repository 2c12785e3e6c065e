//! Greybox fuzzer driven by response novelty.
//!
//! Each iteration sends either a fresh random call or a mutation of a
//! corpus entry. An input joins the corpus when its (method, status class)
//! pair has not been seen before. The campaign is single-threaded and
//! seeded, so a given seed against a given build always yields the same
//! findings.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ir::{InterfaceSpec, VarType};
use crate::runtime::{CallError, Proxy};
use crate::wire::{MessageKind, ServiceRecord, TypedValue, WireMessage};

use super::gen::{random_call, random_value};

pub const HANG_TIMEOUT: Duration = Duration::from_secs(2);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FailureClass {
    /// The service dropped the connection (a panic, in-process).
    Crash,
    /// The service answered with an ERROR message.
    Error,
    /// No reply within the hang timeout.
    Hang,
}

impl fmt::Display for FailureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureClass::Crash => "CRASH",
            FailureClass::Error => "ERROR",
            FailureClass::Hang => "HANG",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzFinding {
    /// The CALL or ONEWAY message that triggered the failure.
    pub reproducer: WireMessage,
    pub class: FailureClass,
    pub iteration: u64,
    pub seed: u64,
    pub detail: String,
}

impl fmt::Display for FuzzFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<String> = self
            .reproducer
            .values
            .iter()
            .map(ToString::to_string)
            .collect();
        write!(
            f,
            "{} {}({}) at iteration {} seed {}: {}",
            self.class,
            self.reproducer.method,
            args.join(", "),
            self.iteration,
            self.seed,
            self.detail
        )
    }
}

#[derive(Debug, Clone)]
pub struct FuzzConfig {
    pub budget: u64,
    pub seed: u64,
    pub hang_timeout: Duration,
    /// End the campaign at the first finding.
    pub stop_on_first: bool,
}

impl FuzzConfig {
    pub fn new(budget: u64, seed: u64) -> Self {
        Self {
            budget,
            seed,
            hang_timeout: HANG_TIMEOUT,
            stop_on_first: false,
        }
    }
}

/// How one call ended, coarse enough to be deterministic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Outcome {
    /// Normal return; carries the leading status enum, if any.
    Ok(Option<(String, i32)>),
    Failed(FailureClass, String),
}

impl Outcome {
    fn status_class(&self) -> String {
        match self {
            Outcome::Ok(None) => "OK".into(),
            Outcome::Ok(Some((name, ordinal))) => format!("OK {name}={ordinal}"),
            Outcome::Failed(class, detail) if *class == FailureClass::Error => {
                format!("ERROR {detail}")
            }
            Outcome::Failed(class, _) => class.to_string(),
        }
    }
}

struct Session<'a> {
    spec: Arc<InterfaceSpec>,
    target: &'a ServiceRecord,
    timeout: Duration,
    proxy: Option<Proxy>,
}

impl Session<'_> {
    fn proxy(&mut self) -> Result<&Proxy, CallError> {
        if self.proxy.is_none() {
            let mut p = Proxy::connect_record(self.target, self.spec.clone())?;
            p.set_timeout(Some(self.timeout));
            self.proxy = Some(p);
        }
        Ok(self.proxy.as_ref().expect("just connected"))
    }

    fn run(&mut self, method: &str, args: Vec<TypedValue>) -> Result<Outcome, CallError> {
        let oneway = self.spec.api(method).is_some_and(|a| a.oneway);
        let proxy = self.proxy()?;
        let mut result = proxy.call(method, args);
        if oneway && result.is_ok() {
            // A oneway call has no reply; a ping afterwards tells whether
            // the service survived it.
            result = proxy.hello().map(|_| vec![]);
        }
        let outcome = match result {
            Ok(values) => Outcome::Ok(match values.first() {
                Some(TypedValue::Enum { name, ordinal }) => Some((name.clone(), *ordinal)),
                _ => None,
            }),
            Err(CallError::Remote { code, detail }) => {
                Outcome::Failed(FailureClass::Error, format!("{code}: {detail}"))
            }
            Err(CallError::Timeout(t)) => {
                Outcome::Failed(FailureClass::Hang, format!("no reply within {t:?}"))
            }
            Err(CallError::Disconnected(_)) | Err(CallError::Transport(_)) => {
                Outcome::Failed(FailureClass::Crash, "service connection lost".into())
            }
            Err(other) => return Err(other),
        };
        if matches!(
            outcome,
            Outcome::Failed(FailureClass::Crash | FailureClass::Hang, _)
        ) {
            self.proxy = None;
        }
        Ok(outcome)
    }
}

/// Replaces one randomly chosen node of `value` (of type `ty`) with a
/// fresh random value of the same type.
fn mutate<R: Rng>(value: &mut TypedValue, ty: &VarType, rng: &mut R) {
    match (value, ty) {
        (TypedValue::Vec { items, .. }, VarType::Vector(elem))
            if !items.is_empty() && rng.gen_bool(0.6) =>
        {
            match rng.gen_range(0..3) {
                0 => {
                    items.remove(rng.gen_range(0..items.len()));
                }
                1 => items.push(random_value(elem, rng)),
                _ => {
                    let i = rng.gen_range(0..items.len());
                    mutate(&mut items[i], elem, rng);
                }
            }
        }
        (TypedValue::Struct { fields, .. }, VarType::Struct(s))
            if !fields.is_empty() && rng.gen_bool(0.7) =>
        {
            let i = rng.gen_range(0..fields.len());
            mutate(&mut fields[i].1, &s.fields[i].ty, rng);
        }
        (v, ty) => *v = random_value(ty, rng),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FuzzError {
    #[error("budget must be at least 1")]
    ZeroBudget,
    #[error("{0} has no methods")]
    NoMethods(String),
    #[error("cannot reach the service: {0}")]
    Unavailable(CallError),
}

/// Runs one campaign against the service at `target`.
pub fn fuzz(
    spec: Arc<InterfaceSpec>,
    target: &ServiceRecord,
    config: &FuzzConfig,
) -> Result<Vec<FuzzFinding>, FuzzError> {
    if config.budget == 0 {
        return Err(FuzzError::ZeroBudget);
    }
    if spec.apis.is_empty() {
        return Err(FuzzError::NoMethods(spec.fqname().to_string()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut session = Session {
        spec: spec.clone(),
        target,
        timeout: config.hang_timeout,
        proxy: None,
    };
    session.proxy().map_err(FuzzError::Unavailable)?;

    let mut corpus: Vec<(String, Vec<TypedValue>)> = Vec::new();
    let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
    let mut reported: BTreeSet<(FailureClass, String)> = BTreeSet::new();
    let mut findings = Vec::new();
    let fqname = spec.fqname().to_string();

    for iteration in 0..config.budget {
        let (method, args) = if !corpus.is_empty() && rng.gen_bool(0.5) {
            let (method, mut args) = corpus.choose(&mut rng).expect("non-empty").clone();
            let api = spec
                .api(&method)
                .expect("corpus methods come from the spec");
            if !args.is_empty() {
                let i = rng.gen_range(0..args.len());
                mutate(&mut args[i], &api.args[i].ty, &mut rng);
            }
            (method, args)
        } else {
            let (api, args) = random_call(&spec.apis, &mut rng);
            (api.name.clone(), args)
        };
        let outcome = match session.run(&method, args.clone()) {
            Ok(o) => o,
            Err(e) => return Err(FuzzError::Unavailable(e)),
        };
        if seen.insert((method.clone(), outcome.status_class())) {
            corpus.push((method.clone(), args.clone()));
        }
        if let Outcome::Failed(class, detail) = outcome {
            if reported.insert((class, method.clone())) {
                let kind = if spec.api(&method).is_some_and(|a| a.oneway) {
                    MessageKind::Oneway
                } else {
                    MessageKind::Call
                };
                findings.push(FuzzFinding {
                    reproducer: WireMessage::new(kind, iteration, fqname.as_str(), method, args),
                    class,
                    iteration,
                    seed: config.seed,
                    detail,
                });
                if config.stop_on_first {
                    break;
                }
            }
        }
    }
    Ok(findings)
}

/// Sends a finding's reproducer once on a fresh connection and reports the
/// failure class it produced, if any.
pub fn replay(
    spec: Arc<InterfaceSpec>,
    target: &ServiceRecord,
    finding: &FuzzFinding,
) -> Result<Option<FailureClass>, FuzzError> {
    let mut session = Session {
        spec,
        target,
        timeout: HANG_TIMEOUT,
        proxy: None,
    };
    let outcome = session
        .run(
            &finding.reproducer.method,
            finding.reproducer.values.clone(),
        )
        .map_err(FuzzError::Unavailable)?;
    Ok(match outcome {
        Outcome::Ok(_) => None,
        Outcome::Failed(class, _) => Some(class),
    })
}
