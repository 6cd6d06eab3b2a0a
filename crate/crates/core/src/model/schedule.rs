use std::fmt;
use std::str::FromStr;

use super::instance::{Instance, ServerId};
use super::TIME_EPS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CopyKind {
    Regular,
    ResidentSpecial,
    RelocatedSpecial,
    Offline,
}

impl CopyKind {
    pub fn is_special(self) -> bool {
        matches!(self, CopyKind::ResidentSpecial | CopyKind::RelocatedSpecial)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CopyKind::Regular => "regular",
            CopyKind::ResidentSpecial => "resident_special",
            CopyKind::RelocatedSpecial => "relocated_special",
            CopyKind::Offline => "offline",
        }
    }
}

impl fmt::Display for CopyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CopyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "regular" => CopyKind::Regular,
            "resident_special" => CopyKind::ResidentSpecial,
            "relocated_special" => CopyKind::RelocatedSpecial,
            "offline" => CopyKind::Offline,
            other => return Err(format!("unknown copy kind `{other}`")),
        })
    }
}

/// A maximal period during which one server stores a copy of a given kind.
///
/// Both endpoints are held. `end` may be infinite for a copy that is never
/// dropped. `origin` names the request whose service produced this copy
/// lineage (for special copies, the request `r_q` whose regular copy
/// turned special).
#[derive(Debug, Clone, PartialEq)]
pub struct CopyInterval {
    pub server: ServerId,
    pub start: f64,
    pub end: f64,
    pub kind: CopyKind,
    pub origin: Option<usize>,
    /// Lies entirely beyond the final request and only exists to keep a copy alive afterwards.
    pub excluded: bool,
}

impl CopyInterval {
    pub fn new(server: ServerId, start: f64, end: f64, kind: CopyKind) -> Self {
        Self {
            server,
            start,
            end,
            kind,
            origin: None,
            excluded: false,
        }
    }

    pub fn holds_at(&self, t: f64) -> bool {
        self.start - TIME_EPS <= t && t <= self.end + TIME_EPS
    }

    /// `true` when the interiors of the two intervals intersect.
    pub fn overlaps(&self, other: &CopyInterval) -> bool {
        self.start.max(other.start) < self.end.min(other.end) - TIME_EPS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransferPurpose {
    ServeRequest,
    CreateCopy,
    Relocate,
}

impl TransferPurpose {
    pub fn as_str(self) -> &'static str {
        match self {
            TransferPurpose::ServeRequest => "serve_request",
            TransferPurpose::CreateCopy => "create_copy",
            TransferPurpose::Relocate => "relocate",
        }
    }
}

impl fmt::Display for TransferPurpose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transfer {
    pub time: f64,
    pub src: ServerId,
    pub dst: ServerId,
    pub purpose: TransferPurpose,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplicationSchedule {
    pub copies: Vec<CopyInterval>,
    pub transfers: Vec<Transfer>,
}

impl ReplicationSchedule {
    pub fn new(copies: Vec<CopyInterval>, transfers: Vec<Transfer>) -> Self {
        Self { copies, transfers }
    }

    pub fn holds(&self, server: ServerId, t: f64) -> bool {
        self.copies
            .iter()
            .any(|c| c.server == server && c.holds_at(t))
    }

    pub fn copies_at(&self, server: ServerId) -> impl Iterator<Item = &CopyInterval> {
        self.copies.iter().filter(move |c| c.server == server)
    }

    /// Per-server holding periods with touching intervals merged, sorted by start.
    pub fn holdings(&self, n: usize) -> Vec<Vec<(f64, f64)>> {
        let mut per_server: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
        for c in &self.copies {
            if c.server.0 < n {
                per_server[c.server.0].push((c.start, c.end));
            }
        }
        for spans in &mut per_server {
            spans.sort_by(|a, b| a.0.total_cmp(&b.0));
            *spans = merge_spans(spans);
        }
        per_server
    }
}

fn merge_spans(spans: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(spans.len());
    for &(start, end) in spans {
        match merged.last_mut() {
            Some(last) if start <= last.1 + TIME_EPS => last.1 = last.1.max(end),
            _ => merged.push((start, end)),
        }
    }
    merged
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    MalformedInterval,
    CoverageGap,
    UnservedRequest,
    UnsourcedCopy,
    TransferFromNonHolder,
    SelfTransfer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub time: f64,
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t={}: {}", self.time, self.message)
    }
}

/// Checks feasibility of a schedule over `[0, t_m]`.
///
/// Reports coverage gaps, unserved requests, copies that appear without an
/// inbound transfer, and transfers whose source holds nothing.
pub fn validate_schedule(instance: &Instance, schedule: &ReplicationSchedule) -> Vec<Violation> {
    let mut out = Vec::new();
    let horizon = instance.horizon();

    for c in &schedule.copies {
        if c.server.0 >= instance.n() || !(c.start <= c.end) || c.start < -TIME_EPS {
            out.push(Violation {
                time: c.start,
                kind: ViolationKind::MalformedInterval,
                message: format!(
                    "malformed copy interval at {} [{}, {}]",
                    c.server, c.start, c.end
                ),
            });
        }
    }

    // At-least-one-copy over [0, horizon].
    let mut spans: Vec<(f64, f64)> = schedule
        .copies
        .iter()
        .filter(|c| c.start <= horizon + TIME_EPS)
        .map(|c| (c.start, c.end))
        .collect();
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    let merged = merge_spans(&spans);
    if merged.is_empty() {
        out.push(gap(0.0, horizon));
    }
    let mut covered_to = 0.0_f64;
    for &(start, end) in &merged {
        if start > covered_to + TIME_EPS {
            out.push(gap(covered_to, start));
        }
        covered_to = covered_to.max(end);
        if covered_to >= horizon - TIME_EPS {
            break;
        }
    }
    if !merged.is_empty() && covered_to < horizon - TIME_EPS {
        out.push(gap(covered_to, horizon));
    }

    for r in instance.real_requests() {
        if !schedule.holds(r.server, r.time) {
            out.push(Violation {
                time: r.time,
                kind: ViolationKind::UnservedRequest,
                message: format!("request #{} at {} finds no copy", r.index, r.server),
            });
        }
    }

    for (i, spans) in schedule.holdings(instance.n()).iter().enumerate() {
        let server = ServerId(i);
        for &(start, _) in spans {
            let initial = server == instance.initial() && start.abs() <= TIME_EPS;
            if initial {
                continue;
            }
            let sourced = schedule
                .transfers
                .iter()
                .any(|x| x.dst == server && (x.time - start).abs() <= TIME_EPS);
            if !sourced {
                out.push(Violation {
                    time: start,
                    kind: ViolationKind::UnsourcedCopy,
                    message: format!("copy at {server} appears at {start} without an inbound transfer"),
                });
            }
        }
    }

    for x in &schedule.transfers {
        if x.src == x.dst {
            out.push(Violation {
                time: x.time,
                kind: ViolationKind::SelfTransfer,
                message: format!("transfer from {} to itself", x.src),
            });
        } else if !schedule.holds(x.src, x.time) {
            out.push(Violation {
                time: x.time,
                kind: ViolationKind::TransferFromNonHolder,
                message: format!("transfer {} -> {} from a server without a copy", x.src, x.dst),
            });
        }
    }

    out
}

fn gap(from: f64, to: f64) -> Violation {
    Violation {
        time: from,
        kind: ViolationKind::CoverageGap,
        message: format!("coverage gap ({from}, {to})"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(ordinal: usize) -> ServerId {
        ServerId::from_ordinal(ordinal).unwrap()
    }

    #[test]
    fn single_interval_is_feasible() {
        let inst = Instance::new(vec![1.0, 2.0], 1.0, s(1), [(1.0, s(1)), (4.0, s(1))]).unwrap();
        let sched = ReplicationSchedule::new(
            vec![CopyInterval::new(s(1), 0.0, 4.0, CopyKind::Offline)],
            vec![],
        );
        assert!(validate_schedule(&inst, &sched).is_empty());
    }

    #[test]
    fn reports_coverage_gap() {
        let inst = Instance::new(vec![1.0, 1.0], 1.0, s(1), [(8.0, s(2)), (9.0, s(2))]).unwrap();
        let sched = ReplicationSchedule::new(
            vec![
                CopyInterval::new(s(1), 0.0, 5.0, CopyKind::Offline),
                CopyInterval::new(s(2), 7.0, 9.0, CopyKind::Offline),
            ],
            vec![],
        );
        let v = validate_schedule(&inst, &sched);
        let gaps: Vec<_> = v
            .iter()
            .filter(|v| v.kind == ViolationKind::CoverageGap)
            .collect();
        assert_eq!(gaps.len(), 1);
        assert_eq!(gaps[0].message, "coverage gap (5, 7)");
    }

    #[test]
    fn reports_unsourced_copy() {
        let inst = Instance::new(vec![1.0, 1.0], 1.0, s(1), [(9.0, s(2))]).unwrap();
        let sched = ReplicationSchedule::new(
            vec![
                CopyInterval::new(s(1), 0.0, 9.0, CopyKind::Offline),
                CopyInterval::new(s(2), 3.0, 9.0, CopyKind::Offline),
            ],
            vec![],
        );
        let v = validate_schedule(&inst, &sched);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::UnsourcedCopy);
        assert_eq!(v[0].time, 3.0);
    }

    #[test]
    fn transfer_at_interval_end_is_legal() {
        let inst = Instance::new(vec![1.0, 1.0], 1.0, s(1), [(2.0, s(2))]).unwrap();
        let sched = ReplicationSchedule::new(
            vec![
                CopyInterval::new(s(1), 0.0, 2.0, CopyKind::Offline),
                CopyInterval::new(s(2), 2.0, 2.0, CopyKind::Offline),
            ],
            vec![Transfer {
                time: 2.0,
                src: s(1),
                dst: s(2),
                purpose: TransferPurpose::ServeRequest,
            }],
        );
        assert!(validate_schedule(&inst, &sched).is_empty());
    }

    #[test]
    fn unserved_and_bad_source() {
        let inst = Instance::new(vec![1.0, 1.0, 1.0], 1.0, s(1), [(2.0, s(2))]).unwrap();
        let sched = ReplicationSchedule::new(
            vec![CopyInterval::new(s(1), 0.0, 2.0, CopyKind::Offline)],
            vec![Transfer {
                time: 1.0,
                src: s(3),
                dst: s(2),
                purpose: TransferPurpose::CreateCopy,
            }],
        );
        let kinds: Vec<_> = validate_schedule(&inst, &sched).iter().map(|v| v.kind).collect();
        assert_eq!(
            kinds,
            vec![ViolationKind::UnservedRequest, ViolationKind::TransferFromNonHolder]
        );
    }

    #[test]
    fn copy_kind_round_trips_through_text() {
        for k in [
            CopyKind::Regular,
            CopyKind::ResidentSpecial,
            CopyKind::RelocatedSpecial,
            CopyKind::Offline,
        ] {
            assert_eq!(k.as_str().parse::<CopyKind>().unwrap(), k);
        }
    }
}
