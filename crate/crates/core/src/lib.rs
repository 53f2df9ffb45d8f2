//! Population protocols under one-way and omissive interaction models:
//! an execution engine, three simulators of two-way protocols, and the
//! machinery that verifies simulations and builds counterexample runs.

pub mod analysis;
pub mod engine;
pub mod error;
pub mod models;
pub mod protocol;
pub mod protocols;
pub mod run;
pub mod scheduling;
pub mod simulators;
pub mod trace;

pub use engine::{project, replay, AgentState, Engine, ReplayDiff, Simulator};
pub use error::{Error, Result};
pub use models::{ModelName, Rules};
pub use protocol::{ProtocolSpec, StateId};
pub use run::{count_omissions, Omission, Run, RunStep};
pub use trace::{EventAnnotation, ProjectedTrace, Provenance, Trace, TraceHeader};
