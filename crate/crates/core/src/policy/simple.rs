use crate::model::{CopyKind, Environment, ServerId, TransferPurpose};

use super::{Policy, PolicyAction, PolicyEvent, Response};

/// Permanent copy at the cheapest server; fixed windows everywhere else.
///
/// When the initial copy is elsewhere it is moved to the cheapest server at
/// time 0 and the original is dropped.
#[derive(Debug, Clone, Default)]
pub struct SimplePolicy {
    window: Vec<f64>,
    expiry: Vec<f64>,
    held: Vec<bool>,
}

impl SimplePolicy {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Policy for SimplePolicy {
    fn name(&self) -> &'static str {
        "simple"
    }

    fn start(&mut self, env: &Environment) -> Response {
        let n = env.n();
        let cheapest = ServerId::CHEAPEST;
        self.window = (0..n).map(|i| env.window(ServerId(i))).collect();
        self.expiry = vec![f64::NEG_INFINITY; n];
        self.held = vec![false; n];
        self.held[cheapest.0] = true;
        if env.initial == cheapest {
            return Response::default();
        }
        Response {
            actions: vec![
                PolicyAction::Transfer {
                    src: env.initial,
                    dst: cheapest,
                    purpose: TransferPurpose::CreateCopy,
                    kind: CopyKind::Regular,
                    origin: Some(0),
                },
                PolicyAction::Drop {
                    server: env.initial,
                },
            ],
            alarms: vec![],
        }
    }

    fn on_event(&mut self, event: PolicyEvent) -> Response {
        match event {
            PolicyEvent::Request {
                index,
                time,
                server,
            } => {
                let mut response = Response::default();
                if self.held[server.0] {
                    response.actions.push(PolicyAction::Retag {
                        server,
                        kind: CopyKind::Regular,
                        origin: Some(index),
                    });
                } else {
                    response.actions.push(PolicyAction::Transfer {
                        src: ServerId::CHEAPEST,
                        dst: server,
                        purpose: TransferPurpose::ServeRequest,
                        kind: CopyKind::Regular,
                        origin: Some(index),
                    });
                    self.held[server.0] = true;
                }
                if server != ServerId::CHEAPEST {
                    let until = time + self.window[server.0];
                    self.expiry[server.0] = until;
                    response.alarms.push((until, server));
                }
                response
            }
            PolicyEvent::Alarm { time, server } => {
                if server == ServerId::CHEAPEST
                    || !self.held[server.0]
                    || self.expiry[server.0] != time
                {
                    return Response::default();
                }
                self.held[server.0] = false;
                Response {
                    actions: vec![PolicyAction::Drop { server }],
                    alarms: vec![],
                }
            }
        }
    }
}
