//! Online dynamic data replication across geo-distributed servers.
//!
//! The crate models a single data object that may be copied to, stored at
//! and dropped from `n` servers with per-server storage rates and a uniform
//! transfer cost. It provides three online policies driven by an
//! event-based simulator, an exact offline optimum computed by dynamic
//! programming over holder subsets, per-request cost allocation for the
//! copy-kind policy, instance generators (worst cases, tight cases, an
//! adaptive adversary, random instances) and a trace-driven sweep harness.

pub mod allocation;
pub mod experiments;
pub mod generators;
pub mod model;
pub mod offline;
pub mod policy;
pub mod verify;

pub use model::{
    compute_cost, validate_schedule, CopyInterval, CopyKind, CostBreakdown, Instance,
    ReplicationSchedule, ServerId, Transfer, TransferPurpose, Violation,
};
pub use offline::{opt_full, opt_restricted, DpSolution, OracleConfig, OracleMode};
pub use policy::{simulate, AnnotatedRun, Policy, PolicyKind, SimOutcome};
