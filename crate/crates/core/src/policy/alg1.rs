use crate::model::{CopyKind, Environment, Instance, ServerId, TransferPurpose, TIME_EPS};

use super::{AnnotatedRun, Policy, PolicyAction, PolicyEvent, Response};

/// The copy-kind policy with a `3 * min rate` relocation threshold.
///
/// Every server keeps a regular copy for `lambda / rate` after each local
/// request. When the only copy in the system expires it either stays where
/// it is indefinitely (resident special copy, cheap servers) or moves to the
/// cheapest server (relocated special copy, servers above the threshold).
/// A special copy is dropped right after it serves an outward transfer.
#[derive(Debug, Clone, Default)]
pub struct Alg1Policy {
    env: Option<Environment>,
    /// `E_i`; `-inf` when no copy, `+inf` for special copies.
    expiry: Vec<f64>,
    /// `R_i`, time of the most recent local request.
    last_request_time: Vec<f64>,
    last_request: Vec<Option<usize>>,
    held: Vec<bool>,
    /// `c`, number of servers currently holding a copy.
    copies: usize,
}

impl Alg1Policy {
    pub fn new() -> Self {
        Self::default()
    }

    fn env(&self) -> &Environment {
        self.env.as_ref().expect("start() precedes events")
    }

    fn first_holder(&self) -> Option<ServerId> {
        self.held.iter().position(|&h| h).map(ServerId)
    }

    fn on_request(&mut self, index: usize, t: f64, i: ServerId) -> Response {
        let window = self.env().window(i);
        let mut actions = Vec::new();
        if self.held[i.0] {
            actions.push(PolicyAction::Retag {
                server: i,
                kind: CopyKind::Regular,
                origin: Some(index),
            });
        } else {
            let src = self.first_holder().expect("some server holds a copy");
            actions.push(PolicyAction::Transfer {
                src,
                dst: i,
                purpose: TransferPurpose::ServeRequest,
                kind: CopyKind::Regular,
                origin: Some(index),
            });
            self.held[i.0] = true;
            self.copies += 1;
            // The source held a special copy if its last local request is a full window back.
            if t - self.last_request_time[src.0] >= self.env().window(src) - TIME_EPS {
                actions.push(PolicyAction::Drop { server: src });
                self.held[src.0] = false;
                self.expiry[src.0] = t;
                self.copies -= 1;
            }
        }
        self.expiry[i.0] = t + window;
        self.last_request_time[i.0] = t;
        self.last_request[i.0] = Some(index);
        Response {
            actions,
            alarms: vec![(t + window, i)],
        }
    }

    fn on_expiry(&mut self, t: f64, i: ServerId) -> Response {
        if !self.held[i.0] || self.expiry[i.0] != t {
            return Response::default();
        }
        let origin = self.last_request[i.0];
        let cheapest = ServerId::CHEAPEST;
        let mut actions = Vec::new();
        if self.copies == 1 {
            if self.env().rate(i) <= 3.0 * self.env().min_rate() {
                self.expiry[i.0] = f64::INFINITY;
                actions.push(PolicyAction::Retag {
                    server: i,
                    kind: CopyKind::ResidentSpecial,
                    origin,
                });
            } else {
                actions.push(PolicyAction::Transfer {
                    src: i,
                    dst: cheapest,
                    purpose: TransferPurpose::Relocate,
                    kind: CopyKind::RelocatedSpecial,
                    origin,
                });
                actions.push(PolicyAction::Drop { server: i });
                self.held[cheapest.0] = true;
                self.expiry[cheapest.0] = f64::INFINITY;
                self.held[i.0] = false;
            }
        } else {
            actions.push(PolicyAction::Drop { server: i });
            self.held[i.0] = false;
            self.copies -= 1;
        }
        Response {
            actions,
            alarms: vec![],
        }
    }
}

impl Policy for Alg1Policy {
    fn name(&self) -> &'static str {
        "alg1"
    }

    fn annotates_copy_kinds(&self) -> bool {
        true
    }

    fn start(&mut self, env: &Environment) -> Response {
        let n = env.n();
        let g = env.initial;
        self.expiry = vec![f64::NEG_INFINITY; n];
        self.last_request_time = vec![f64::NEG_INFINITY; n];
        self.last_request = vec![None; n];
        self.held = vec![false; n];
        // The dummy request r0 at the initial server.
        self.expiry[g.0] = env.window(g);
        self.last_request_time[g.0] = 0.0;
        self.last_request[g.0] = Some(0);
        self.held[g.0] = true;
        self.copies = 1;
        self.env = Some(env.clone());
        Response {
            actions: vec![],
            alarms: vec![(env.window(g), g)],
        }
    }

    fn on_event(&mut self, event: PolicyEvent) -> Response {
        match event {
            PolicyEvent::Request {
                index,
                time,
                server,
            } => self.on_request(index, time, server),
            PolicyEvent::Alarm { time, server } => self.on_expiry(time, server),
        }
    }
}

/// Structural properties of a copy-kind run: special copies never overlap
/// each other or any regular copy, and relocated copies only sit at a
/// cheapest server and only appear when some rate exceeds three times the
/// cheapest.
pub fn special_copy_violations(instance: &Instance, run: &AnnotatedRun) -> Vec<String> {
    let mut out = Vec::new();
    // Zero-length intervals have empty interiors and cannot overlap anything.
    let mut spans: Vec<_> = run
        .schedule
        .copies
        .iter()
        .filter(|c| c.kind != CopyKind::Offline && c.end - c.start > TIME_EPS)
        .collect();
    spans.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.end.total_cmp(&b.end)));
    let mut reach = f64::NEG_INFINITY;
    let mut reach_idx = 0;
    for (k, a) in spans.iter().enumerate() {
        if a.kind.is_special() {
            let mut clash = None;
            if reach > a.start + TIME_EPS {
                clash = Some(spans[reach_idx]);
            } else if let Some(b) = spans.get(k + 1) {
                if b.start < a.end - TIME_EPS {
                    clash = Some(b);
                }
            }
            if let Some(b) = clash {
                out.push(format!(
                    "{} copy at {} [{}, {}] overlaps {} copy at {} [{}, {}]",
                    a.kind, a.server, a.start, a.end, b.kind, b.server, b.start, b.end
                ));
            }
        }
        if a.end > reach {
            reach = a.end;
            reach_idx = k;
        }
    }
    for a in run.special_copies() {
        if a.kind == CopyKind::RelocatedSpecial {
            if instance.rate(a.server) > instance.env().min_rate() {
                out.push(format!("relocated copy at non-cheapest {}", a.server));
            }
            if instance.gamma() <= 3.0 {
                out.push(format!(
                    "relocated copy at {} although gamma = {} <= 3",
                    a.server,
                    instance.gamma()
                ));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_schedule;
    use crate::policy::{simulate, ServeMode};

    fn s(ordinal: usize) -> ServerId {
        ServerId::from_ordinal(ordinal).unwrap()
    }

    #[test]
    fn close_repeat_is_served_locally() {
        let lambda = 2.0;
        let inst = Instance::new(vec![1.0, 4.0], lambda, s(1), [(1.0, s(2)), (1.4, s(2))]).unwrap();
        let out = simulate(Alg1Policy::new(), &inst).unwrap();
        assert_eq!(out.run.serves[1].mode, ServeMode::Local);
        assert_eq!(out.cost.transfer_count, 1);
    }

    #[test]
    fn lone_cheapest_copy_is_kept_forever() {
        let inst = Instance::new(vec![1.0, 2.0], 1.0, s(1), [(5.0, s(1))]).unwrap();
        let out = simulate(Alg1Policy::new(), &inst).unwrap();
        assert_eq!(out.cost.transfer_count, 0);
        assert_eq!(out.cost.total, 5.0);
        let kinds: Vec<_> = out.run.schedule.copies.iter().map(|c| c.kind).collect();
        assert_eq!(
            kinds,
            vec![CopyKind::Regular, CopyKind::ResidentSpecial, CopyKind::Regular, CopyKind::ResidentSpecial]
        );
        assert!(out.run.schedule.copies.last().unwrap().end.is_infinite());
    }

    #[test]
    fn expensive_lone_copy_relocates() {
        let eps = 0.01;
        let inst = Instance::new(vec![1.0, 4.0], 1.0, s(2), [(0.25 + eps, s(2))]).unwrap();
        let out = simulate(Alg1Policy::new(), &inst).unwrap();
        assert!(validate_schedule(&inst, &out.run.schedule).is_empty());
        assert!((out.cost.total - (3.0 + eps)).abs() < 1e-9, "{}", out.cost.total);
        let served = &out.run.serves[0];
        assert_eq!(served.mode, ServeMode::Transfer { src: s(1) });
        assert_eq!(served.copy_kind, CopyKind::RelocatedSpecial);
        assert_eq!(served.copy_origin, Some(0));
        assert!(special_copy_violations(&inst, &out.run).is_empty());
    }
}
