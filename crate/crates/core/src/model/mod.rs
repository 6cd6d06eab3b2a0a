//! Problem instances, replication schedules, feasibility checks and the cost engine.

mod cost;
mod format;
mod instance;
mod schedule;

pub use cost::{compute_cost, costs_match, CostBreakdown, CostError};
pub use format::{instance_to_json, parse_instance, read_instance, write_instance, FormatError};
pub use instance::{
    gamma, strictly_before, Environment, Instance, InstanceError, Request, Server, ServerId,
};
pub use schedule::{
    validate_schedule, CopyInterval, CopyKind, ReplicationSchedule, Transfer, TransferPurpose,
    Violation, ViolationKind,
};

/// Absolute tolerance for time and cost comparisons.
pub const TIME_EPS: f64 = 1e-9;
