use crate::model::{CopyKind, Environment, ServerId, TransferPurpose, TIME_EPS};

use super::{Policy, PolicyAction, PolicyEvent, Response};

/// Fixed-window renewals with a timed fallback to the cheapest server.
///
/// After each local request a server keeps its copy for `lambda / rate`.
/// A lone copy at the cheapest server is renewed for another window each
/// time it expires. A lone copy elsewhere is renewed once if it expired a
/// single window after the last local request; after two silent windows it
/// moves to the cheapest server. Sources never drop after serving a transfer.
#[derive(Debug, Clone, Default)]
pub struct WangPolicy {
    env: Option<Environment>,
    expiry: Vec<f64>,
    last_request_time: Vec<f64>,
    last_request: Vec<Option<usize>>,
    held: Vec<bool>,
}

impl WangPolicy {
    pub fn new() -> Self {
        Self::default()
    }

    fn env(&self) -> &Environment {
        self.env.as_ref().expect("start() precedes events")
    }

    fn holder_count(&self) -> usize {
        self.held.iter().filter(|&&h| h).count()
    }

    fn on_request(&mut self, index: usize, t: f64, i: ServerId) -> Response {
        let mut actions = Vec::new();
        if self.held[i.0] {
            actions.push(PolicyAction::Retag {
                server: i,
                kind: CopyKind::Regular,
                origin: Some(index),
            });
        } else {
            let src = ServerId(self.held.iter().position(|&h| h).expect("a copy exists"));
            actions.push(PolicyAction::Transfer {
                src,
                dst: i,
                purpose: TransferPurpose::ServeRequest,
                kind: CopyKind::Regular,
                origin: Some(index),
            });
            self.held[i.0] = true;
        }
        let until = t + self.env().window(i);
        self.expiry[i.0] = until;
        self.last_request_time[i.0] = t;
        self.last_request[i.0] = Some(index);
        Response {
            actions,
            alarms: vec![(until, i)],
        }
    }

    fn on_expiry(&mut self, t: f64, i: ServerId) -> Response {
        if !self.held[i.0] || self.expiry[i.0] != t {
            return Response::default();
        }
        let cheapest = ServerId::CHEAPEST;
        let window = self.env().window(i);
        let sole = self.holder_count() == 1;
        if !sole {
            self.held[i.0] = false;
            return Response {
                actions: vec![PolicyAction::Drop { server: i }],
                alarms: vec![],
            };
        }
        if i == cheapest || t - self.last_request_time[i.0] <= window + TIME_EPS {
            self.expiry[i.0] = t + window;
            return Response {
                actions: vec![],
                alarms: vec![(t + window, i)],
            };
        }
        // Two silent windows: hand the copy to the cheapest server.
        let until = t + self.env().window(cheapest);
        self.held[i.0] = false;
        self.held[cheapest.0] = true;
        self.expiry[cheapest.0] = until;
        Response {
            actions: vec![
                PolicyAction::Transfer {
                    src: i,
                    dst: cheapest,
                    purpose: TransferPurpose::Relocate,
                    kind: CopyKind::Regular,
                    origin: self.last_request[i.0],
                },
                PolicyAction::Drop { server: i },
            ],
            alarms: vec![(until, cheapest)],
        }
    }
}

impl Policy for WangPolicy {
    fn name(&self) -> &'static str {
        "wang"
    }

    fn start(&mut self, env: &Environment) -> Response {
        let n = env.n();
        let g = env.initial;
        self.expiry = vec![f64::NEG_INFINITY; n];
        self.last_request_time = vec![f64::NEG_INFINITY; n];
        self.last_request = vec![None; n];
        self.held = vec![false; n];
        self.expiry[g.0] = env.window(g);
        self.last_request_time[g.0] = 0.0;
        self.last_request[g.0] = Some(0);
        self.held[g.0] = true;
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Instance;
    use crate::policy::{simulate, ServeMode};

    fn s(ordinal: usize) -> ServerId {
        ServerId::from_ordinal(ordinal).unwrap()
    }

    #[test]
    fn request_inside_first_window_is_local() {
        let inst = Instance::new(vec![2.0, 3.0], 1.0, s(1), [(0.3, s(1))]).unwrap();
        let out = simulate(WangPolicy::new(), &inst).unwrap();
        assert_eq!(out.run.serves[0].mode, ServeMode::Local);
        assert!((out.cost.total - 2.0 * 0.3).abs() < 1e-12);
    }

    #[test]
    fn lone_expensive_copy_falls_back_after_two_windows() {
        let inst = Instance::new(vec![1.0, 2.0], 1.0, s(2), [(10.0, s(1))]).unwrap();
        let out = simulate(WangPolicy::new(), &inst).unwrap();
        let relocations: Vec<_> = out
            .run
            .schedule
            .transfers
            .iter()
            .filter(|x| x.purpose == TransferPurpose::Relocate)
            .collect();
        assert_eq!(relocations.len(), 1);
        assert_eq!(relocations[0].time, 1.0);
        // s2 holds [0, 1] at rate 2, s1 holds [1, 10] at rate 1, plus the relocation.
        assert!((out.cost.total - (2.0 + 9.0 + 1.0)).abs() < 1e-12);
    }
}
