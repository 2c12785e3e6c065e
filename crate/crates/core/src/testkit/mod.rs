//! Test tooling driven entirely by interface specs: a dynamic call driver,
//! structural compliance tests, a fuzzer, a call profiler, test-subset
//! selection from traces, and the agent that serves host-driven sessions.

pub mod agent;
mod drive;
pub mod fuzz;
pub mod gen;
pub mod host;
pub mod profile;
mod select;
mod structural;

pub use agent::{agent_serve, AgentConfig, AgentError, AgentHandle, DEFAULT_AGENT_PORT};
pub use drive::{drive, DriveError};
pub use fuzz::{fuzz, replay, FailureClass, FuzzConfig, FuzzError, FuzzFinding};
pub use host::{AgentClient, HostError, HostEvent};
pub use profile::{CallStatus, Profiler, Trace, TraceError, TraceRecord, TRACE_HEADER};
pub use select::{same_magnitude, select_removable, ModuleTrace};
pub use structural::{structural_test, MethodOutcome, StructuralError, StructuralReport};
