//! Compliance smoke test: every method once, with default arguments.

use std::fmt;

use thiserror::Error;

use crate::ir::InterfaceSpec;
use crate::runtime::Proxy;
use crate::wire::{default_values, ServiceRecord};

use std::sync::Arc;

#[derive(Debug, Error)]
pub enum StructuralError {
    #[error("service unavailable: {0}")]
    ServiceUnavailable(String),
    #[error("ISOLATION_VIOLATION: {others} other client(s) attached")]
    IsolationViolation { others: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodOutcome {
    pub method: String,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuralReport {
    pub fqname: String,
    pub methods: Vec<MethodOutcome>,
}

impl StructuralReport {
    pub fn passed(&self) -> bool {
        self.methods.iter().all(|m| m.failure.is_none())
    }
}

impl fmt::Display for StructuralReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.fqname)?;
        for m in &self.methods {
            match &m.failure {
                None => writeln!(f, "  PASS {}", m.method)?,
                Some(why) => writeln!(f, "  FAIL {}: {why}", m.method)?,
            }
        }
        Ok(())
    }
}

/// Calls each method of `spec` on the service at `target` with zero values.
///
/// With `isolation`, refuses to run while another client is attached to
/// the service, so that nothing else perturbs it during the test.
pub fn structural_test(
    spec: Arc<InterfaceSpec>,
    target: &ServiceRecord,
    isolation: bool,
) -> Result<StructuralReport, StructuralError> {
    let proxy = Proxy::connect_record(target, spec.clone())
        .map_err(|e| StructuralError::ServiceUnavailable(e.to_string()))?;
    let others = proxy
        .hello()
        .map_err(|e| StructuralError::ServiceUnavailable(e.to_string()))?;
    if isolation && others > 0 {
        return Err(StructuralError::IsolationViolation { others });
    }
    let methods = spec
        .apis
        .iter()
        .map(|api| MethodOutcome {
            method: api.name.clone(),
            failure: proxy
                .call(&api.name, default_values(&api.args))
                .err()
                .map(|e| e.to_string()),
        })
        .collect();
    Ok(StructuralReport {
        fqname: spec.fqname().to_string(),
        methods,
    })
}
