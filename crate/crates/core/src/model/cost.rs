use thiserror::Error;

use super::instance::Instance;
use super::schedule::ReplicationSchedule;
use super::TIME_EPS;

#[derive(Debug, Clone, PartialEq)]
pub struct CostBreakdown {
    pub storage: f64,
    pub transfer: f64,
    pub total: f64,
    /// Storage cost per server, indexed by zero-based server id.
    pub per_server_storage: Vec<f64>,
    pub transfer_count: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error("horizon must be a nonnegative number, got {0}")]
    NegativeHorizon(f64),
}

/// Storage accrued over `[0, horizon]` plus `lambda` per transfer at or before `horizon`.
pub fn compute_cost(
    instance: &Instance,
    schedule: &ReplicationSchedule,
    horizon: f64,
) -> Result<CostBreakdown, CostError> {
    if !(horizon >= 0.0) {
        return Err(CostError::NegativeHorizon(horizon));
    }
    let mut per_server_storage = vec![0.0; instance.n()];
    for c in &schedule.copies {
        let start = c.start.max(0.0);
        let end = c.end.min(horizon);
        if end > start {
            per_server_storage[c.server.0] += instance.rate(c.server) * (end - start);
        }
    }
    let transfer_count = schedule
        .transfers
        .iter()
        .filter(|x| x.time <= horizon + TIME_EPS)
        .count();
    let storage: f64 = per_server_storage.iter().sum();
    let transfer = instance.lambda() * transfer_count as f64;
    Ok(CostBreakdown {
        storage,
        transfer,
        total: storage + transfer,
        per_server_storage,
        transfer_count,
    })
}

/// Absolute tolerance 1e-9, widened proportionally once magnitudes exceed 1.
pub fn costs_match(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIME_EPS * a.abs().max(b.abs()).max(1.0)
}
