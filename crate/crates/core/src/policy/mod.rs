//! Online policies and the event-driven simulator that runs them.
//!
//! A policy sees requests one at a time in time order and may schedule
//! alarms for itself (copy expiry timers). In response to each event it
//! returns actions: transfers, drops, and retags that relabel the kind of a
//! held copy. The [`Simulator`] applies those actions, enforces feasibility,
//! and records the resulting schedule.

mod alg1;
mod log;
mod simple;
mod wang;

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::{
    compute_cost, strictly_before, CopyInterval, CopyKind, CostBreakdown, Environment, Instance,
    InstanceError, ReplicationSchedule, ServerId, Transfer, TransferPurpose, TIME_EPS,
};

pub use alg1::{special_copy_violations, Alg1Policy};
pub use log::{run_event_log, schedule_event_log};
pub use simple::SimplePolicy;
pub use wang::WangPolicy;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyEvent {
    Request {
        index: usize,
        time: f64,
        server: ServerId,
    },
    /// A timer the policy scheduled for itself.
    Alarm { time: f64, server: ServerId },
}

impl PolicyEvent {
    pub fn time(&self) -> f64 {
        match *self {
            PolicyEvent::Request { time, .. } | PolicyEvent::Alarm { time, .. } => time,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyAction {
    /// Copy the object from `src` to `dst`; `dst` starts a copy of `kind`.
    Transfer {
        src: ServerId,
        dst: ServerId,
        purpose: TransferPurpose,
        kind: CopyKind,
        origin: Option<usize>,
    },
    Drop { server: ServerId },
    /// Keep the copy at `server` but start a new interval of `kind`.
    Retag {
        server: ServerId,
        kind: CopyKind,
        origin: Option<usize>,
    },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Response {
    pub actions: Vec<PolicyAction>,
    /// `(time, server)` pairs delivered back as [`PolicyEvent::Alarm`].
    pub alarms: Vec<(f64, ServerId)>,
}

pub trait Policy {
    fn name(&self) -> &'static str;

    /// Whether copy intervals carry regular/special kinds usable for cost allocation.
    fn annotates_copy_kinds(&self) -> bool {
        false
    }

    /// Called once at time 0, with the initial copy already at `env.initial`.
    fn start(&mut self, env: &Environment) -> Response;

    fn on_event(&mut self, event: PolicyEvent) -> Response;
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn name(&self) -> &'static str {
        (**self).name()
    }

    fn annotates_copy_kinds(&self) -> bool {
        (**self).annotates_copy_kinds()
    }

    fn start(&mut self, env: &Environment) -> Response {
        (**self).start(env)
    }

    fn on_event(&mut self, event: PolicyEvent) -> Response {
        (**self).on_event(event)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    Alg1,
    Wang,
    Simple,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::Alg1, PolicyKind::Wang, PolicyKind::Simple];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Alg1 => "alg1",
            PolicyKind::Wang => "wang",
            PolicyKind::Simple => "simple",
        }
    }

    pub fn build(self) -> Box<dyn Policy + Send> {
        match self {
            PolicyKind::Alg1 => Box::new(Alg1Policy::new()),
            PolicyKind::Wang => Box::new(WangPolicy::new()),
            PolicyKind::Simple => Box::new(SimplePolicy::new()),
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "alg1" => Ok(PolicyKind::Alg1),
            "wang" => Ok(PolicyKind::Wang),
            "simple" => Ok(PolicyKind::Simple),
            other => Err(format!(
                "unknown policy `{other}` (expected alg1, wang or simple)"
            )),
        }
    }
}

pub fn algorithm1_policy() -> Alg1Policy {
    Alg1Policy::new()
}

pub fn wang_policy() -> WangPolicy {
    WangPolicy::new()
}

pub fn simple_policy() -> SimplePolicy {
    SimplePolicy::new()
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("policy `{policy}` fault at t={time}: {detail}")]
    PolicyFault {
        policy: &'static str,
        time: f64,
        detail: String,
    },
    #[error("invalid request at t={time}: {detail}")]
    BadRequest { time: f64, detail: String },
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServeMode {
    Local,
    Transfer { src: ServerId },
}

impl ServeMode {
    pub fn is_local(self) -> bool {
        matches!(self, ServeMode::Local)
    }
}

/// How one request was served, and by which copy.
#[derive(Debug, Clone, PartialEq)]
pub struct ServeRecord {
    pub request: usize,
    pub time: f64,
    pub server: ServerId,
    pub mode: ServeMode,
    /// Kind of the copy that provided the data.
    pub copy_kind: CopyKind,
    /// `r_q(j)`: the request whose retained copy served this one.
    pub copy_origin: Option<usize>,
    /// When the serving copy interval began (the switch instant for special copies).
    pub copy_since: f64,
}

/// A simulated schedule plus per-request service annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedRun {
    pub policy: &'static str,
    pub kinds_annotated: bool,
    pub schedule: ReplicationSchedule,
    /// One record per real request, in order (`serves[j - 1]` is `r_j`).
    pub serves: Vec<ServeRecord>,
    pub horizon: f64,
}

impl AnnotatedRun {
    /// Natural storage cost of the intervals lying beyond the horizon (may be infinite).
    pub fn excluded_storage(&self, instance: &Instance) -> f64 {
        self.schedule
            .copies
            .iter()
            .filter(|c| c.excluded)
            .map(|c| instance.rate(c.server) * (c.end - c.start))
            .sum()
    }

    pub fn special_copies(&self) -> impl Iterator<Item = &CopyInterval> {
        self.schedule.copies.iter().filter(|c| c.kind.is_special())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub run: AnnotatedRun,
    pub cost: CostBreakdown,
}

#[derive(Debug, Clone, Copy)]
struct PendingAlarm {
    time: f64,
    server: ServerId,
    seq: u64,
}

impl PartialEq for PendingAlarm {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for PendingAlarm {}

impl PartialOrd for PendingAlarm {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PendingAlarm {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.server.cmp(&other.server))
            .then(self.seq.cmp(&other.seq))
    }
}

#[derive(Debug, Clone, Copy)]
struct OpenCopy {
    start: f64,
    kind: CopyKind,
    origin: Option<usize>,
}

/// Steps a policy through time. Requests may be injected one by one, which
/// lets an adaptive adversary inspect placements between events.
pub struct Simulator<P: Policy> {
    env: Environment,
    policy: P,
    now: f64,
    alarms: BinaryHeap<Reverse<PendingAlarm>>,
    seq: u64,
    open: Vec<Option<OpenCopy>>,
    copies: Vec<CopyInterval>,
    transfers: Vec<Transfer>,
    serves: Vec<ServeRecord>,
    requests: Vec<(f64, ServerId)>,
}

impl<P: Policy> Simulator<P> {
    pub fn new(policy: P, env: Environment) -> Result<Self, SimError> {
        let n = env.n();
        let mut sim = Self {
            policy,
            now: 0.0,
            alarms: BinaryHeap::new(),
            seq: 0,
            open: vec![None; n],
            copies: Vec::new(),
            transfers: Vec::new(),
            serves: Vec::new(),
            requests: Vec::new(),
            env,
        };
        sim.open[sim.env.initial.0] = Some(OpenCopy {
            start: 0.0,
            kind: CopyKind::Regular,
            origin: Some(0),
        });
        let response = sim.policy.start(&sim.env);
        sim.apply(response, None)?;
        Ok(sim)
    }

    pub fn env(&self) -> &Environment {
        &self.env
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn holds(&self, server: ServerId) -> bool {
        self.open[server.0].is_some()
    }

    pub fn holders(&self) -> Vec<ServerId> {
        (0..self.open.len())
            .filter(|&i| self.open[i].is_some())
            .map(ServerId)
            .collect()
    }

    pub fn next_alarm(&self) -> Option<f64> {
        self.alarms.peek().map(|Reverse(a)| a.time)
    }

    /// Delivers the earliest pending alarm. Returns its time, or `None` if none is pending.
    pub fn step_alarm(&mut self) -> Result<Option<f64>, SimError> {
        let Some(Reverse(alarm)) = self.alarms.pop() else {
            return Ok(None);
        };
        self.now = self.now.max(alarm.time);
        let response = self.policy.on_event(PolicyEvent::Alarm {
            time: alarm.time,
            server: alarm.server,
        });
        self.apply(response, None)?;
        Ok(Some(alarm.time))
    }

    /// Delivers every alarm strictly before `t`. Alarms at `t` itself wait
    /// until after a request at `t` has been handled.
    pub fn advance_before(&mut self, t: f64) -> Result<(), SimError> {
        while let Some(next) = self.next_alarm() {
            if !strictly_before(next, t) {
                break;
            }
            self.step_alarm()?;
        }
        Ok(())
    }

    /// Injects the next request and returns how it was served.
    pub fn request(&mut self, time: f64, server: ServerId) -> Result<ServeRecord, SimError> {
        if server.0 >= self.env.n() {
            return Err(SimError::BadRequest {
                time,
                detail: format!("{server} does not exist"),
            });
        }
        let previous = self.requests.last().map_or(0.0, |r| r.0);
        let coincides_with_dummy =
            self.requests.is_empty() && time == 0.0 && server == self.env.initial;
        if !(time.is_finite() && (time > previous || coincides_with_dummy)) {
            return Err(SimError::BadRequest {
                time,
                detail: format!("requests must arrive in strictly increasing time (previous {previous})"),
            });
        }
        self.advance_before(time)?;
        self.now = self.now.max(time);
        let index = self.requests.len() + 1;
        self.requests.push((time, server));
        let response = self.policy.on_event(PolicyEvent::Request {
            index,
            time,
            server,
        });
        let record = self.apply(response, Some((index, server)))?;
        let record = record.expect("request service is recorded");
        self.serves.push(record.clone());
        Ok(record)
    }

    fn fault(&self, detail: String) -> SimError {
        SimError::PolicyFault {
            policy: self.policy.name(),
            time: self.now,
            detail,
        }
    }

    fn apply(
        &mut self,
        response: Response,
        request: Option<(usize, ServerId)>,
    ) -> Result<Option<ServeRecord>, SimError> {
        let now = self.now;
        let mut record = request.and_then(|(index, server)| {
            self.open[server.0].map(|c| ServeRecord {
                request: index,
                time: now,
                server,
                mode: ServeMode::Local,
                copy_kind: c.kind,
                copy_origin: c.origin,
                copy_since: c.start,
            })
        });

        for action in response.actions {
            match action {
                PolicyAction::Transfer {
                    src,
                    dst,
                    purpose,
                    kind,
                    origin,
                } => {
                    if src.0 >= self.open.len() || dst.0 >= self.open.len() || src == dst {
                        return Err(self.fault(format!("invalid transfer {src} -> {dst}")));
                    }
                    let Some(source) = self.open[src.0] else {
                        return Err(self.fault(format!("transfer from {src}, which holds no copy")));
                    };
                    if self.open[dst.0].is_some() {
                        return Err(self.fault(format!("transfer into {dst}, which already holds a copy")));
                    }
                    if let Some((index, server)) = request {
                        if server == dst && record.is_none() {
                            record = Some(ServeRecord {
                                request: index,
                                time: now,
                                server,
                                mode: ServeMode::Transfer { src },
                                copy_kind: source.kind,
                                copy_origin: source.origin,
                                copy_since: source.start,
                            });
                        }
                    }
                    self.transfers.push(Transfer {
                        time: now,
                        src,
                        dst,
                        purpose,
                    });
                    self.open[dst.0] = Some(OpenCopy {
                        start: now,
                        kind,
                        origin,
                    });
                }
                PolicyAction::Drop { server } => {
                    if !self.close(server, now) {
                        return Err(self.fault(format!("drop at {server}, which holds no copy")));
                    }
                }
                PolicyAction::Retag {
                    server,
                    kind,
                    origin,
                } => {
                    if !self.close(server, now) {
                        return Err(self.fault(format!("retag at {server}, which holds no copy")));
                    }
                    self.open[server.0] = Some(OpenCopy {
                        start: now,
                        kind,
                        origin,
                    });
                }
            }
        }

        if let Some((index, server)) = request {
            if record.is_none() || self.open[server.0].is_none() {
                return Err(self.fault(format!("request #{index} at {server} left unserved")));
            }
        }
        if self.open.iter().all(Option::is_none) {
            return Err(self.fault("no copy left in the system".into()));
        }

        for (time, server) in response.alarms {
            if strictly_before(time, now) || server.0 >= self.open.len() {
                return Err(self.fault(format!("alarm for {server} at {time} is in the past")));
            }
            if time.is_finite() {
                self.seq += 1;
                self.alarms.push(Reverse(PendingAlarm {
                    time,
                    server,
                    seq: self.seq,
                }));
            }
        }
        Ok(record)
    }

    fn close(&mut self, server: ServerId, at: f64) -> bool {
        match self.open.get_mut(server.0).and_then(Option::take) {
            Some(c) => {
                self.copies.push(CopyInterval {
                    server,
                    start: c.start,
                    end: at,
                    kind: c.kind,
                    origin: c.origin,
                    excluded: false,
                });
                true
            }
            None => false,
        }
    }

    /// Ends the run at the final injected request.
    ///
    /// Alarms beyond the horizon keep firing for a bounded number of steps
    /// so trailing copies reach their natural expiry. Copies still open
    /// afterwards end at their next pending alarm, or never.
    pub fn finish(mut self) -> Result<(Instance, AnnotatedRun), SimError> {
        let horizon = self.requests.last().map_or(0.0, |r| r.0);
        let mut budget = 8 * self.env.n() + 16;
        while budget > 0 && self.next_alarm().is_some() {
            self.step_alarm()?;
            budget -= 1;
        }
        let mut next_alarm = vec![f64::INFINITY; self.env.n()];
        for Reverse(a) in self.alarms.iter() {
            let slot = &mut next_alarm[a.server.0];
            *slot = slot.min(a.time);
        }
        for i in 0..self.env.n() {
            if let Some(c) = self.open[i].take() {
                self.copies.push(CopyInterval {
                    server: ServerId(i),
                    start: c.start,
                    end: next_alarm[i].max(c.start),
                    kind: c.kind,
                    origin: c.origin,
                    excluded: false,
                });
            }
        }
        for c in &mut self.copies {
            c.excluded = c.start >= horizon - TIME_EPS;
        }
        self.copies.sort_by(|a, b| {
            a.start
                .total_cmp(&b.start)
                .then(a.server.cmp(&b.server))
                .then(a.end.total_cmp(&b.end))
        });
        let instance = Instance::new(
            self.env.rates.clone(),
            self.env.lambda,
            self.env.initial,
            self.requests.iter().copied(),
        )?;
        let run = AnnotatedRun {
            policy: self.policy.name(),
            kinds_annotated: self.policy.annotates_copy_kinds(),
            schedule: ReplicationSchedule::new(self.copies, self.transfers),
            serves: self.serves,
            horizon,
        };
        Ok((instance, run))
    }
}

/// Runs `policy` over every request of `instance` and prices the result at the final request.
pub fn simulate<P: Policy>(policy: P, instance: &Instance) -> Result<SimOutcome, SimError> {
    let mut sim = Simulator::new(policy, instance.env().clone())?;
    for r in instance.real_requests() {
        sim.request(r.time, r.server)?;
    }
    let (_, run) = sim.finish()?;
    let cost = compute_cost(instance, &run.schedule, instance.horizon())
        .expect("horizon is nonnegative");
    Ok(SimOutcome { run, cost })
}

pub fn simulate_kind(kind: PolicyKind, instance: &Instance) -> Result<SimOutcome, SimError> {
    simulate(kind.build(), instance)
}
