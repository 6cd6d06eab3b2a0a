use std::fmt;

use thiserror::Error;

use super::TIME_EPS;

/// Position of a server in the ascending-rate ordering, stored zero-based.
///
/// `ServerId(0)` is the cheapest server (`s1` in the one-based notation used
/// by instance files and event logs).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ServerId(pub usize);

impl ServerId {
    pub const CHEAPEST: ServerId = ServerId(0);

    /// Builds an id from a one-based ordinal. Returns `None` for 0.
    pub fn from_ordinal(ordinal: usize) -> Option<Self> {
        ordinal.checked_sub(1).map(ServerId)
    }

    pub fn ordinal(self) -> usize {
        self.0 + 1
    }

    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ServerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.ordinal())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Server {
    pub id: ServerId,
    pub rate: f64,
}

/// A data access request. Index 0 is the dummy request at the initial server.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Request {
    pub index: usize,
    pub time: f64,
    pub server: ServerId,
}

impl Request {
    pub fn is_dummy(&self) -> bool {
        self.index == 0
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InstanceError {
    #[error("at least one server is required")]
    NoServers,
    #[error("storage rate of server #{ordinal} must be finite and positive, got {rate}")]
    BadRate { ordinal: usize, rate: f64 },
    #[error("storage rates must be ascending: server #{ordinal} has rate {rate} below its predecessor {previous}")]
    RatesNotAscending {
        ordinal: usize,
        rate: f64,
        previous: f64,
    },
    #[error("transfer cost must be finite and positive, got {0}")]
    BadLambda(f64),
    #[error("server #{ordinal} does not exist (n = {n})")]
    UnknownServer { ordinal: usize, n: usize },
    #[error("request #{index} has invalid time {time}")]
    BadTime { index: usize, time: f64 },
    #[error("request #{index} at time {time} does not come strictly after the previous request at {previous}")]
    TimesNotIncreasing {
        index: usize,
        time: f64,
        previous: f64,
    },
    #[error("request #{index} at time 0 must arise at the initial server")]
    ZeroTimeOffInitial { index: usize },
}

/// Static parameters an online policy is allowed to know up front.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub rates: Vec<f64>,
    pub lambda: f64,
    pub initial: ServerId,
}

impl Environment {
    pub fn new(rates: Vec<f64>, lambda: f64, initial: ServerId) -> Result<Self, InstanceError> {
        validate_rates(&rates)?;
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(InstanceError::BadLambda(lambda));
        }
        if initial.0 >= rates.len() {
            return Err(InstanceError::UnknownServer {
                ordinal: initial.ordinal(),
                n: rates.len(),
            });
        }
        Ok(Self {
            rates,
            lambda,
            initial,
        })
    }

    pub fn n(&self) -> usize {
        self.rates.len()
    }

    pub fn rate(&self, s: ServerId) -> f64 {
        self.rates[s.0]
    }

    pub fn min_rate(&self) -> f64 {
        self.rates[0]
    }

    /// Length of a regular copy at `s`, the time over which its storage cost equals one transfer.
    pub fn window(&self, s: ServerId) -> f64 {
        self.lambda / self.rate(s)
    }

    pub fn gamma(&self) -> f64 {
        self.rates[self.rates.len() - 1] / self.rates[0]
    }
}

fn validate_rates(rates: &[f64]) -> Result<(), InstanceError> {
    if rates.is_empty() {
        return Err(InstanceError::NoServers);
    }
    for (i, &rate) in rates.iter().enumerate() {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(InstanceError::BadRate {
                ordinal: i + 1,
                rate,
            });
        }
        if i > 0 && rate < rates[i - 1] {
            return Err(InstanceError::RatesNotAscending {
                ordinal: i + 1,
                rate,
                previous: rates[i - 1],
            });
        }
    }
    Ok(())
}

/// A replication problem: servers, transfer cost, initial copy and the request sequence.
///
/// `requests()[0]` is always the dummy request `r0` at the initial server at
/// time 0; real requests start at index 1. A real request may share time 0
/// only if it arises at the initial server, where it coincides with `r0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    env: Environment,
    servers: Vec<Server>,
    requests: Vec<Request>,
}

impl Instance {
    pub fn new(
        rates: Vec<f64>,
        lambda: f64,
        initial: ServerId,
        requests: impl IntoIterator<Item = (f64, ServerId)>,
    ) -> Result<Self, InstanceError> {
        let env = Environment::new(rates, lambda, initial)?;
        let mut reqs = vec![Request {
            index: 0,
            time: 0.0,
            server: initial,
        }];
        for (time, server) in requests {
            let index = reqs.len();
            if !(time.is_finite() && time >= 0.0) {
                return Err(InstanceError::BadTime { index, time });
            }
            if server.0 >= env.n() {
                return Err(InstanceError::UnknownServer {
                    ordinal: server.ordinal(),
                    n: env.n(),
                });
            }
            let previous = reqs[index - 1].time;
            if index == 1 && time == 0.0 {
                if server != initial {
                    return Err(InstanceError::ZeroTimeOffInitial { index });
                }
            } else if time <= previous {
                return Err(InstanceError::TimesNotIncreasing {
                    index,
                    time,
                    previous,
                });
            }
            reqs.push(Request {
                index,
                time,
                server,
            });
        }
        let servers = env
            .rates
            .iter()
            .enumerate()
            .map(|(i, &rate)| Server {
                id: ServerId(i),
                rate,
            })
            .collect();
        Ok(Self {
            env,
            servers,
            requests: reqs,
        })
    }

    pub fn env(&self) -> &Environment {
        &self.env
    }

    pub fn servers(&self) -> &[Server] {
        &self.servers
    }

    pub fn n(&self) -> usize {
        self.servers.len()
    }

    /// Number of real requests (excluding `r0`).
    pub fn m(&self) -> usize {
        self.requests.len() - 1
    }

    pub fn lambda(&self) -> f64 {
        self.env.lambda
    }

    pub fn initial(&self) -> ServerId {
        self.env.initial
    }

    pub fn rate(&self, s: ServerId) -> f64 {
        self.env.rate(s)
    }

    pub fn rates(&self) -> &[f64] {
        &self.env.rates
    }

    pub fn window(&self, s: ServerId) -> f64 {
        self.env.window(s)
    }

    pub fn gamma(&self) -> f64 {
        self.env.gamma()
    }

    /// All requests including the dummy `r0`.
    pub fn requests(&self) -> &[Request] {
        &self.requests
    }

    /// Real requests `r1..rm`.
    pub fn real_requests(&self) -> &[Request] {
        &self.requests[1..]
    }

    pub fn request(&self, j: usize) -> &Request {
        &self.requests[j]
    }

    /// Storage rate of the server where `r_j` arises.
    pub fn request_rate(&self, j: usize) -> f64 {
        self.rate(self.requests[j].server)
    }

    /// Time of the final request, or 0 when there are none.
    pub fn horizon(&self) -> f64 {
        self.requests[self.requests.len() - 1].time
    }

    /// Index of the preceding request at the same server, `p(j)`. `r0` counts.
    pub fn prev_same_server(&self, j: usize) -> Option<usize> {
        let server = self.requests[j].server;
        self.requests[..j]
            .iter()
            .rev()
            .find(|r| r.server == server)
            .map(|r| r.index)
    }

    /// `p(j)` for every request, computed in one pass.
    pub fn prev_same_server_table(&self) -> Vec<Option<usize>> {
        let mut last = vec![None; self.n()];
        self.requests
            .iter()
            .map(|r| last[r.server.0].replace(r.index))
            .collect()
    }

    /// Copy of this instance keeping only the first `k` real requests.
    pub fn prefix(&self, k: usize) -> Instance {
        let k = k.min(self.m());
        Instance {
            env: self.env.clone(),
            servers: self.servers.clone(),
            requests: self.requests[..=k].to_vec(),
        }
    }
}

pub fn gamma(instance: &Instance) -> f64 {
    instance.gamma()
}

/// `a < b` beyond the shared time tolerance.
pub fn strictly_before(a: f64, b: f64) -> bool {
    a < b - TIME_EPS
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(ordinal: usize) -> ServerId {
        ServerId::from_ordinal(ordinal).unwrap()
    }

    #[test]
    fn gamma_examples() {
        let one = Instance::new(vec![1.0, 1.0, 1.0], 1.0, s(1), []).unwrap();
        assert_eq!(gamma(&one), 1.0);
        let set3 = vec![1.0, 1.1, 1.2, 1.5, 1.6, 2.1, 2.3, 2.7, 3.1, 4.0];
        let inst = Instance::new(set3, 1.0, s(1), []).unwrap();
        assert_eq!(gamma(&inst), 4.0);
        let inst = Instance::new(vec![2.0, 5.0], 1.0, s(1), []).unwrap();
        assert_eq!(gamma(&inst), 2.5);
    }

    #[test]
    fn dummy_request_is_materialized() {
        let inst = Instance::new(vec![1.0, 2.0], 3.0, s(2), [(1.0, s(1))]).unwrap();
        assert_eq!(inst.m(), 1);
        let r0 = inst.request(0);
        assert!(r0.is_dummy());
        assert_eq!((r0.time, r0.server), (0.0, s(2)));
        assert_eq!(inst.horizon(), 1.0);
        assert_eq!(inst.prev_same_server(1), None);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(
            Instance::new(vec![], 1.0, s(1), []).unwrap_err(),
            InstanceError::NoServers
        );
        assert!(matches!(
            Instance::new(vec![2.0, 1.0], 1.0, s(1), []),
            Err(InstanceError::RatesNotAscending { ordinal: 2, .. })
        ));
        assert!(matches!(
            Instance::new(vec![1.0], 0.0, s(1), []),
            Err(InstanceError::BadLambda(_))
        ));
        assert!(matches!(
            Instance::new(vec![1.0], 1.0, s(2), []),
            Err(InstanceError::UnknownServer { .. })
        ));
        assert!(matches!(
            Instance::new(vec![1.0, 1.0], 1.0, s(1), [(1.0, s(1)), (1.0, s(2))]),
            Err(InstanceError::TimesNotIncreasing { index: 2, .. })
        ));
        assert!(matches!(
            Instance::new(vec![1.0, 1.0], 1.0, s(1), [(0.0, s(2))]),
            Err(InstanceError::ZeroTimeOffInitial { index: 1 })
        ));
    }

    #[test]
    fn first_request_may_coincide_with_dummy_at_initial_server() {
        let inst = Instance::new(vec![1.0, 1.5], 1.0, s(1), [(0.0, s(1)), (0.1, s(2))]).unwrap();
        assert_eq!(inst.prev_same_server(1), Some(0));
        assert_eq!(inst.prev_same_server_table(), vec![None, Some(0), None]);
    }
}
