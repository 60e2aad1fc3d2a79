//! Cost model and burst-communication simulator comparing a shared pool of
//! two-qubit gate modules against per-node dedicated communication qubits in
//! distributed quantum computing.

pub mod config;
pub mod cost_model;
pub mod error;
pub mod experiments;
pub mod report;
pub mod rng;
pub mod sched_sim;
pub mod workload;

pub use cost_model::{CommBudget, CostParams, PairingSpec, SystemShape};
pub use error::{Error, Result};
pub use experiments::{CsrPoint, CsrReport, CsrSweep, StatSummary};
pub use sched_sim::{Architecture, ResourceModel, ScheduleResult};
pub use workload::{Batch, BurstLevel, GateRequest, QubitAddr, WorkloadSpec};
