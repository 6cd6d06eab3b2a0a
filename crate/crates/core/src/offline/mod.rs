//! Exact offline optimum by dynamic programming over holder subsets.
//!
//! Placements only change at request instants, so a schedule is a sequence
//! of holder sets `H_0, H_1, ..., H_{m-1}`, where `H_i` stores the object
//! during `(t_i, t_{i+1})`. Moving from `S = H_{i-1}` to `S' = H_i` at `t_i`
//! costs the storage of `S` over `[t_{i-1}, t_i]`, one transfer if the
//! requesting server is outside `S`, and one transfer per other server new
//! in `S'`. After the final request nothing is stored.
//!
//! [`OracleMode::Full`] lets `S'` be any nonempty subset (`4^n` work per
//! request). [`OracleMode::Restricted`] only lets new copies appear at the
//! requesting server and at `s1`, which brings the work down to `n * 2^n`.

mod validate;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{CopyInterval, CopyKind, Instance, ReplicationSchedule, ServerId, Transfer, TransferPurpose};

pub use validate::{validate_offline_structure, StructureViolation};

pub const MAX_SERVERS: usize = 12;
pub const DEFAULT_BUDGET: u64 = 5_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OracleMode {
    Full,
    Restricted,
}

impl OracleMode {
    pub fn name(self) -> &'static str {
        match self {
            OracleMode::Full => "full",
            OracleMode::Restricted => "restricted",
        }
    }

    /// Elementary transition evaluations for `m` requests over `n` servers.
    pub fn work(self, n: usize, m: usize) -> u128 {
        let steps = m as u128 + 1;
        match self {
            OracleMode::Full => steps << (2 * n),
            OracleMode::Restricted => steps * n as u128 * (1u128 << n),
        }
    }
}

impl fmt::Display for OracleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OracleMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(OracleMode::Full),
            "restricted" => Ok(OracleMode::Restricted),
            other => Err(format!("unknown oracle `{other}` (expected full or restricted)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleConfig {
    pub mode: OracleMode,
    pub budget: u64,
    /// Rebuild the optimal schedule; costs alone need far less memory.
    pub reconstruct: bool,
}

impl OracleConfig {
    pub fn new(mode: OracleMode) -> Self {
        Self {
            mode,
            budget: DEFAULT_BUDGET,
            reconstruct: true,
        }
    }

    pub fn cost_only(mut self) -> Self {
        self.reconstruct = false;
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self::new(OracleMode::Restricted)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("{mode} oracle supports at most {max} servers, instance has {n}")]
    TooManyServers { mode: OracleMode, n: usize, max: usize },
    #[error("{mode} oracle needs {required} transition evaluations, budget is {budget}")]
    BudgetExceeded {
        mode: OracleMode,
        required: u128,
        budget: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpSolution {
    pub opt_cost: f64,
    /// Present when reconstruction was requested.
    pub schedule: Option<ReplicationSchedule>,
    /// `prefix_costs[i]` is the optimum for `r1..ri`; `prefix_costs[0] = 0`.
    pub prefix_costs: Vec<f64>,
    /// `H_0..H_{m-1}` as bitmasks over zero-based servers, when reconstructed.
    pub holders: Vec<u32>,
}

pub fn opt_full(instance: &Instance) -> Result<DpSolution, OracleError> {
    solve(instance, OracleConfig::new(OracleMode::Full))
}

pub fn opt_restricted(instance: &Instance) -> Result<DpSolution, OracleError> {
    solve(instance, OracleConfig::new(OracleMode::Restricted))
}

/// Runs the oracle in the configured mode, refusing work beyond the budget.
pub fn solve(instance: &Instance, config: OracleConfig) -> Result<DpSolution, OracleError> {
    let n = instance.n();
    if n > MAX_SERVERS {
        return Err(OracleError::TooManyServers {
            mode: config.mode,
            n,
            max: MAX_SERVERS,
        });
    }
    let required = config.mode.work(n, instance.m());
    if required > config.budget as u128 {
        return Err(OracleError::BudgetExceeded {
            mode: config.mode,
            required,
            budget: config.budget,
        });
    }
    Ok(Dp::new(instance, config).run())
}

/// Tie-break order on subsets: fewer members first, then smaller mask.
fn key(mask: u32) -> (u32, u32) {
    (mask.count_ones(), mask)
}

fn better(cost: f64, mask: u32, best_cost: f64, best_mask: u32) -> bool {
    cost < best_cost || (cost == best_cost && key(mask) < key(best_mask))
}

struct Dp<'a> {
    instance: &'a Instance,
    config: OracleConfig,
    size: usize,
    lambda: f64,
    rate_sum: Vec<f64>,
    /// Subsets in tie-break order.
    ordered: Vec<u32>,
}

impl<'a> Dp<'a> {
    fn new(instance: &'a Instance, config: OracleConfig) -> Self {
        let n = instance.n();
        let size = 1usize << n;
        let mut rate_sum = vec![0.0; size];
        for mask in 1..size {
            let low = mask.trailing_zeros() as usize;
            rate_sum[mask] = rate_sum[mask & (mask - 1)] + instance.rates()[low];
        }
        let mut ordered: Vec<u32> = (0..size as u32).collect();
        ordered.sort_by_key(|&m| key(m));
        Self {
            instance,
            config,
            size,
            lambda: instance.lambda(),
            rate_sum,
            ordered,
        }
    }

    /// `DP(S) + A(S)`: holding `S` until `t_i` and serving `r_i`.
    fn arrive(&self, dp: &[f64], i: usize) -> Vec<f64> {
        let requests = self.instance.requests();
        let dt = if i == 0 {
            0.0
        } else {
            requests[i].time - requests[i - 1].time
        };
        let bit = 1u32 << requests[i].server.0;
        dp.iter()
            .enumerate()
            .map(|(s, &v)| {
                if v.is_infinite() {
                    return f64::INFINITY;
                }
                let serve = if s as u32 & bit == 0 { self.lambda } else { 0.0 };
                v + self.rate_sum[s] * dt + serve
            })
            .collect()
    }

    fn run(&self) -> DpSolution {
        let requests = self.instance.requests();
        let m = self.instance.m();
        let g = self.instance.initial();
        let mut dp = vec![f64::INFINITY; self.size];
        dp[1usize << g.0] = 0.0;
        let mut prefix_costs = vec![0.0; m + 1];
        let mut preds: Vec<Vec<u16>> = Vec::new();
        let mut final_state = 1u32 << g.0;
        for i in 0..=m {
            let base = self.arrive(&dp, i);
            if i >= 1 {
                let (cost, state) = self.best(&base);
                prefix_costs[i] = cost;
                final_state = state;
            }
            if i == m {
                break;
            }
            let bit = 1u32 << requests[i].server.0;
            let (next, pred) = match self.config.mode {
                OracleMode::Full => self.step_full(&base, bit),
                OracleMode::Restricted => self.step_restricted(&base, bit),
            };
            if self.config.reconstruct {
                preds.push(pred);
            }
            dp = next;
        }
        let opt_cost = prefix_costs[m];
        if !self.config.reconstruct {
            return DpSolution {
                opt_cost,
                schedule: None,
                prefix_costs,
                holders: Vec::new(),
            };
        }
        let mut holders = vec![0u32; m];
        if m > 0 {
            let mut state = final_state;
            for i in (0..m).rev() {
                holders[i] = state;
                state = preds[i][state as usize] as u32;
            }
        }
        let schedule = self.schedule(&holders);
        DpSolution {
            opt_cost,
            schedule: Some(schedule),
            prefix_costs,
            holders,
        }
    }

    fn best(&self, values: &[f64]) -> (f64, u32) {
        let mut best = (f64::INFINITY, 0u32);
        for &s in &self.ordered {
            if values[s as usize] < best.0 {
                best = (values[s as usize], s);
            }
        }
        best
    }

    fn step_full(&self, base: &[f64], bit: u32) -> (Vec<f64>, Vec<u16>) {
        let live: Vec<u32> = self
            .ordered
            .iter()
            .copied()
            .filter(|&s| base[s as usize].is_finite())
            .collect();
        let lambda = self.lambda;
        let (next, pred): (Vec<f64>, Vec<u16>) = (0..self.size as u32)
            .into_par_iter()
            .map(|target| {
                if target == 0 {
                    return (f64::INFINITY, 0);
                }
                let mut best = (f64::INFINITY, 0u32);
                for &s in &live {
                    let created = (target & !(s | bit)).count_ones();
                    let cost = base[s as usize] + lambda * created as f64;
                    if cost < best.0 {
                        best = (cost, s);
                    }
                }
                (best.0, best.1 as u16)
            })
            .unzip();
        (next, pred)
    }

    fn step_restricted(&self, base: &[f64], bit: u32) -> (Vec<f64>, Vec<u16>) {
        let size = self.size;
        // b[u] = best S with S | bit == u.
        let mut b = vec![(f64::INFINITY, 0u32); size];
        for s in 0..size as u32 {
            let cost = base[s as usize];
            if cost.is_infinite() {
                continue;
            }
            let u = (s | bit) as usize;
            if better(cost, s, b[u].0, b[u].1) {
                b[u] = (cost, s);
            }
        }
        // Superset minimum: h[t] = best b[u] over u containing t.
        let mut h = b;
        let n = self.instance.n();
        for k in 0..n {
            let kb = 1usize << k;
            for t in 0..size {
                if t & kb == 0 {
                    let up = h[t | kb];
                    if better(up.0, up.1, h[t].0, h[t].1) {
                        h[t] = up;
                    }
                }
            }
        }
        let cheapest = 1usize << ServerId::CHEAPEST.0;
        let mut next = vec![f64::INFINITY; size];
        let mut pred = vec![0u16; size];
        for t in 1..size {
            let mut best = h[t];
            if t & cheapest != 0 {
                let via = h[t & !cheapest];
                let cost = via.0 + self.lambda;
                if better(cost, via.1, best.0, best.1) {
                    best = (cost, via.1);
                }
            }
            next[t] = best.0;
            pred[t] = best.1 as u16;
        }
        (next, pred)
    }

    fn schedule(&self, holders: &[u32]) -> ReplicationSchedule {
        let requests = self.instance.requests();
        let m = self.instance.m();
        let n = self.instance.n();
        let g = self.instance.initial();
        let mut transfers = Vec::new();
        let mut spans: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
        let lowest = |mask: u32| ServerId(mask.trailing_zeros() as usize);
        let mut prev = 1u32 << g.0;
        for i in 0..=m {
            let t = requests[i].time;
            let s = requests[i].server;
            let bit = 1u32 << s.0;
            if prev & bit == 0 {
                transfers.push(Transfer {
                    time: t,
                    src: lowest(prev),
                    dst: s,
                    purpose: TransferPurpose::ServeRequest,
                });
            }
            let present = prev | bit;
            spans[s.0].push((t, t));
            if i < m {
                let next = holders[i];
                let src = lowest(present);
                let mut created = next & !present;
                while created != 0 {
                    let dst = lowest(created);
                    created &= created - 1;
                    transfers.push(Transfer {
                        time: t,
                        src,
                        dst,
                        purpose: TransferPurpose::CreateCopy,
                    });
                }
                let t_next = requests[i + 1].time;
                for (x, list) in spans.iter_mut().enumerate() {
                    if next & (1 << x) != 0 {
                        list.push((t, t_next));
                    }
                }
                prev = next;
            }
        }
        let mut copies = Vec::new();
        for (x, mut list) in spans.into_iter().enumerate() {
            list.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
            let mut merged: Vec<(f64, f64)> = Vec::new();
            for (a, b) in list {
                match merged.last_mut() {
                    Some(last) if a <= last.1 => last.1 = last.1.max(b),
                    _ => merged.push((a, b)),
                }
            }
            copies.extend(
                merged
                    .into_iter()
                    .map(|(a, b)| CopyInterval::new(ServerId(x), a, b, CopyKind::Offline)),
            );
        }
        copies.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.server.cmp(&b.server)));
        ReplicationSchedule::new(copies, transfers)
    }
}
