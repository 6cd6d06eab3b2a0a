//! Per-request cost allocation for copy-kind runs.
//!
//! Every request of a run is put into one of six types by how it was served
//! (transfer or local) and which kind of copy served it (regular, resident
//! special, relocated special). Each request is then charged the storage and
//! transfers that its service caused, so the charges add up to the run's
//! total cost at the final request.
//!
//! Charges per type, with `reg = lambda` when the request has a predecessor
//! at its own server (the predecessor's regular copy ran its full window),
//! and `t'` the instant the serving copy turned special:
//!
//! | type | served by | copy | charge |
//! |---|---|---|---|
//! | 1 | transfer | regular | `lambda + reg` |
//! | 2 | transfer | resident special | `lambda + reg + rate(q) * (t - t')` |
//! | 3 | transfer | relocated special | `2 lambda + reg + rate(s1) * (t - t')` |
//! | 4 | local | regular | `rate * (t - t_p)` |
//! | 5 | local | resident special | `reg + rate(q) * (t - t')` |
//! | 6 | local | relocated special | `lambda + reg + rate(s1) * (t - t')` |
//!
//! The regular copy left behind by the last request at each server has no
//! later request to pay for it. Its storage, clipped at the horizon, is
//! charged as a surcharge to the first request at that server; the initial
//! server's trailing copy goes to the first request at the server of the
//! final request.

use std::fmt;
use std::io;

use thiserror::Error;

use crate::model::{compute_cost, costs_match, CopyKind, Instance, ServerId, TIME_EPS};
use crate::policy::{AnnotatedRun, ServeMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RequestType {
    T1 = 1,
    T2 = 2,
    T3 = 3,
    T4 = 4,
    T5 = 5,
    T6 = 6,
}

impl RequestType {
    pub fn classify(mode: ServeMode, kind: CopyKind) -> Option<Self> {
        Some(match (mode.is_local(), kind) {
            (false, CopyKind::Regular) => RequestType::T1,
            (false, CopyKind::ResidentSpecial) => RequestType::T2,
            (false, CopyKind::RelocatedSpecial) => RequestType::T3,
            (true, CopyKind::Regular) => RequestType::T4,
            (true, CopyKind::ResidentSpecial) => RequestType::T5,
            (true, CopyKind::RelocatedSpecial) => RequestType::T6,
            (_, CopyKind::Offline) => return None,
        })
    }

    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn served_locally(self) -> bool {
        matches!(self, RequestType::T4 | RequestType::T5 | RequestType::T6)
    }

    /// Served by a special copy, so `t'` is defined.
    pub fn uses_special(self) -> bool {
        !matches!(self, RequestType::T1 | RequestType::T4)
    }
}

impl fmt::Display for RequestType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RequestTyping {
    pub j: usize,
    pub kind: RequestType,
    /// `q(j)`: request whose copy served `r_j`.
    pub q: Option<usize>,
    /// Switch instant of the serving special copy; `None` for types 1 and 4.
    pub t_prime: Option<f64>,
    pub served_by: ServeMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocatedRequest {
    pub typing: RequestTyping,
    /// Full charge, surcharge included.
    pub allocated_cost: f64,
    pub surcharge: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationReport {
    /// One entry per real request, `entries[j - 1]` for `r_j`.
    pub entries: Vec<AllocatedRequest>,
    /// Natural storage of copies lying beyond the horizon (possibly infinite).
    pub excluded_cost: f64,
    pub first_request_surcharges: Vec<(usize, f64)>,
    /// Cost of the run at the horizon.
    pub online_total: f64,
}

impl AllocationReport {
    pub fn total_allocated(&self) -> f64 {
        self.entries.iter().map(|e| e.allocated_cost).sum()
    }

    /// `Online(i, j)`: allocations of requests `i..=j`.
    pub fn partial_sum(&self, i: usize, j: usize) -> f64 {
        self.entries
            .iter()
            .filter(|e| (i..=j).contains(&e.typing.j))
            .map(|e| e.allocated_cost)
            .sum()
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["j", "type", "q", "t_prime", "allocated_cost", "surcharge"])?;
        for e in &self.entries {
            w.write_record([
                e.typing.j.to_string(),
                e.typing.kind.to_string(),
                e.typing.q.map_or(String::new(), |q| q.to_string()),
                e.typing.t_prime.map_or(String::new(), |t| t.to_string()),
                e.allocated_cost.to_string(),
                e.surcharge.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AllocationError {
    #[error("run of `{0}` carries no copy-kind annotations")]
    NotAnnotated(&'static str),
    #[error("run has {runs} served requests but the instance has {expected}")]
    Mismatch { runs: usize, expected: usize },
    #[error("request #{0} was served by a copy without a known origin")]
    MissingOrigin(usize),
    #[error("request #{0} was served by an offline copy")]
    OfflineCopy(usize),
}

pub fn classify_and_allocate(
    instance: &Instance,
    run: &AnnotatedRun,
) -> Result<AllocationReport, AllocationError> {
    if !run.kinds_annotated {
        return Err(AllocationError::NotAnnotated(run.policy));
    }
    if run.serves.len() != instance.m() {
        return Err(AllocationError::Mismatch {
            runs: run.serves.len(),
            expected: instance.m(),
        });
    }
    let lambda = instance.lambda();
    let horizon = instance.horizon();
    let min_rate = instance.env().min_rate();
    let prev = instance.prev_same_server_table();

    let mut entries = Vec::with_capacity(instance.m());
    for s in &run.serves {
        let j = s.request;
        let kind = RequestType::classify(s.mode, s.copy_kind).ok_or(AllocationError::OfflineCopy(j))?;
        let q = s.copy_origin;
        let t_j = instance.request(j).time;
        let reg = if prev[j].is_some() && kind != RequestType::T4 {
            lambda
        } else {
            0.0
        };
        let special = |rate: f64| -> Result<(f64, f64), AllocationError> {
            let q = q.ok_or(AllocationError::MissingOrigin(j))?;
            let r_q = instance.request(q);
            let t_prime = r_q.time + instance.window(r_q.server);
            Ok((t_prime, rate * (t_j - t_prime)))
        };
        let q_rate = |q: Option<usize>| q.map_or(0.0, |q| instance.request_rate(q));
        let (t_prime, base) = match kind {
            RequestType::T1 => (None, lambda + reg),
            RequestType::T2 => {
                let (tp, stored) = special(q_rate(q))?;
                (Some(tp), lambda + reg + stored)
            }
            RequestType::T3 => {
                let (tp, stored) = special(min_rate)?;
                (Some(tp), 2.0 * lambda + reg + stored)
            }
            RequestType::T4 => {
                let t_p = prev[j].map_or(0.0, |p| instance.request(p).time);
                (None, instance.request_rate(j) * (t_j - t_p))
            }
            RequestType::T5 => {
                let (tp, stored) = special(q_rate(q))?;
                (Some(tp), reg + stored)
            }
            RequestType::T6 => {
                let (tp, stored) = special(min_rate)?;
                (Some(tp), lambda + reg + stored)
            }
        };
        entries.push(AllocatedRequest {
            typing: RequestTyping {
                j,
                kind,
                q,
                t_prime,
                served_by: s.mode,
            },
            allocated_cost: base,
            surcharge: 0.0,
        });
    }

    let first_requests = first_request_per_server(instance);
    let mut first_request_surcharges = Vec::new();
    let mut charge = |j: usize, amount: f64, entries: &mut Vec<AllocatedRequest>| {
        let e = &mut entries[j - 1];
        e.surcharge += amount;
        e.allocated_cost += amount;
        first_request_surcharges.push((j, amount));
    };
    let g = instance.initial();
    let final_server = instance.request(instance.m()).server;
    for (x, trailing) in trailing_copy_costs(instance).into_iter().enumerate() {
        let x = ServerId(x);
        let Some(trailing) = trailing else { continue };
        let target = if x == g { final_server } else { x };
        if x == g && final_server == g {
            continue;
        }
        if let Some(j) = first_requests[target.0] {
            charge(j, trailing, &mut entries);
        }
    }
    first_request_surcharges.sort_by_key(|&(j, _)| j);

    let online_total = compute_cost(instance, &run.schedule, horizon)
        .expect("horizon is nonnegative")
        .total;
    Ok(AllocationReport {
        entries,
        excluded_cost: run.excluded_storage(instance),
        first_request_surcharges,
        online_total,
    })
}

/// First real request at each server.
fn first_request_per_server(instance: &Instance) -> Vec<Option<usize>> {
    let mut first = vec![None; instance.n()];
    for r in instance.real_requests() {
        first[r.server.0].get_or_insert(r.index);
    }
    first
}

/// Clipped storage of the regular copy after the last request at each
/// server that ever had one (`r0` included).
fn trailing_copy_costs(instance: &Instance) -> Vec<Option<f64>> {
    let horizon = instance.horizon();
    let mut last = vec![None; instance.n()];
    for r in instance.requests() {
        last[r.server.0] = Some(r.time);
    }
    last.iter()
        .enumerate()
        .map(|(x, t)| {
            t.map(|t| {
                let x = ServerId(x);
                instance.rate(x) * ((t + instance.window(x)).min(horizon) - t)
            })
        })
        .collect()
}

/// Structural checks of a report against the run and instance it came from.
pub fn allocation_violations(
    instance: &Instance,
    run: &AnnotatedRun,
    report: &AllocationReport,
) -> Vec<String> {
    let mut out = Vec::new();
    let prev = instance.prev_same_server_table();
    let min_rate = instance.env().min_rate();
    let mut special_spans = Vec::new();
    for e in &report.entries {
        let t = &e.typing;
        let r_j = instance.request(t.j);
        if t.kind.served_locally() != t.served_by.is_local() {
            out.push(format!("r{} is type {} but served by {:?}", t.j, t.kind, t.served_by));
        }
        if let Some(p) = prev[t.j] {
            let gap = r_j.time - instance.request(p).time;
            let window = instance.window(r_j.server);
            let close = gap <= window + TIME_EPS;
            let far = gap > window - TIME_EPS;
            if t.kind == RequestType::T4 && !close {
                out.push(format!("type-4 r{} is {gap} after its predecessor (window {window})", t.j));
            }
            if t.kind != RequestType::T4 && !far {
                out.push(format!("type-{} r{} is only {gap} after its predecessor (window {window})", t.kind, t.j));
            }
        }
        if let (Some(q), Some(tp)) = (t.q, t.t_prime) {
            let r_q = instance.request(q);
            let expected = r_q.time + instance.window(r_q.server);
            if (tp - expected).abs() > TIME_EPS * expected.abs().max(1.0) {
                out.push(format!("r{}: t' = {tp}, expected {expected}", t.j));
            }
            let serving = run.serves[t.j - 1].copy_since;
            if (serving - tp).abs() > TIME_EPS * tp.abs().max(1.0) {
                out.push(format!("r{}: serving copy began at {serving}, t' = {tp}", t.j));
            }
            match t.kind {
                RequestType::T2 | RequestType::T5 => {
                    if instance.rate(r_q.server) > 3.0 * min_rate + TIME_EPS {
                        out.push(format!("r{}: resident copy at {} above the threshold", t.j, r_q.server));
                    }
                }
                RequestType::T3 | RequestType::T6 => {
                    let at = match t.served_by {
                        ServeMode::Transfer { src } => src,
                        ServeMode::Local => r_j.server,
                    };
                    if instance.rate(at) > min_rate {
                        out.push(format!("r{}: relocated copy at non-cheapest {at}", t.j));
                    }
                    if instance.gamma() <= 3.0 {
                        out.push(format!("r{}: relocated copy with gamma <= 3", t.j));
                    }
                }
                _ => {}
            }
            special_spans.push((tp, r_j.time, t.j));
        } else if t.kind.uses_special() {
            out.push(format!("type-{} r{} lacks q or t'", t.kind, t.j));
        }
    }
    special_spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in special_spans.windows(2) {
        if w[1].0 < w[0].1 - TIME_EPS {
            out.push(format!("special spans of r{} and r{} overlap", w[0].2, w[1].2));
        }
    }
    let total = report.total_allocated();
    if !costs_match(total, report.online_total) {
        out.push(format!(
            "allocations sum to {total}, online cost is {}",
            report.online_total
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{simulate, Alg1Policy, WangPolicy};

    fn s(ordinal: usize) -> ServerId {
        ServerId::from_ordinal(ordinal).unwrap()
    }

    #[test]
    fn close_local_repeat_pays_its_gap() {
        let inst = Instance::new(vec![1.0, 2.0], 1.0, s(1), [(1.0, s(2)), (1.3, s(2))]).unwrap();
        let out = simulate(Alg1Policy::new(), &inst).unwrap();
        let report = classify_and_allocate(&inst, &out.run).unwrap();
        let e = &report.entries[1];
        assert_eq!(e.typing.kind, RequestType::T4);
        assert!((e.allocated_cost - 0.6).abs() < 1e-12);
        assert!(allocation_violations(&inst, &out.run, &report).is_empty());
    }

    #[test]
    fn unannotated_runs_are_rejected() {
        let inst = Instance::new(vec![1.0, 2.0], 1.0, s(1), [(1.0, s(2))]).unwrap();
        let out = simulate(WangPolicy::new(), &inst).unwrap();
        assert_eq!(
            classify_and_allocate(&inst, &out.run),
            Err(AllocationError::NotAnnotated("wang"))
        );
    }

    #[test]
    fn csv_has_fixed_header() {
        let inst = Instance::new(vec![1.0, 4.0], 1.0, s(2), [(0.5, s(2))]).unwrap();
        let out = simulate(Alg1Policy::new(), &inst).unwrap();
        let report = classify_and_allocate(&inst, &out.run).unwrap();
        let csv = report.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("j,type,q,t_prime,allocated_cost,surcharge"));
        assert_eq!(lines.next(), Some("1,3,0,0.25,3.25,0"));
        assert!(costs_match(report.total_allocated(), out.cost.total));
    }
}
