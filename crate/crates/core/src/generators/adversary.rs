use crate::model::{compute_cost, Environment, Instance, ServerId, TIME_EPS};
use crate::policy::{Policy, PolicyKind, SimError, Simulator};

use super::{require, GeneratorError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AdversaryBranch {
    /// The copy at `s2` lasted until `T*`; the request came at `s1`.
    Survived { t_star: f64 },
    /// The policy stopped holding at `s2` at `t`; the request came back there.
    Abandoned { t: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdversaryOutcome {
    pub instance: Instance,
    pub branch: AdversaryBranch,
    pub online_cost: f64,
    /// Cost of the fixed comparison strategy for the realized request.
    pub comparison_cost: f64,
    pub ratio: f64,
}

/// Ratio forced when the policy keeps `s2` until `T* = lambda/mu + 4 lambda/mu^2`.
pub fn branch1_ratio(mu: f64) -> f64 {
    (2.0 * mu * mu + 4.0 * mu) / (mu * mu + mu + 4.0)
}

/// Lower bound on the ratio when the policy abandons `s2` at `t`; the
/// policy paid at least `t mu` storage plus two transfers.
pub fn branch2_ratio(mu: f64, lambda: f64, t: f64, epsilon: f64) -> f64 {
    (t * mu + epsilon + 2.0 * lambda) / ((t + epsilon) * mu)
}

/// Plays a single adaptive request against `policy` on servers with rates
/// `1` and `mu`, starting from a copy at `s2`.
pub fn run_adversary<P: Policy>(
    policy: P,
    mu: f64,
    lambda: f64,
    epsilon: f64,
) -> Result<AdversaryOutcome, AdversaryError> {
    require(mu > 4.0 && mu.is_finite(), || format!("mu > 4 required, got {mu}"))?;
    require(lambda > 0.0 && lambda.is_finite(), || format!("lambda > 0 required, got {lambda}"))?;
    require(epsilon > 0.0 && epsilon.is_finite(), || format!("epsilon > 0 required, got {epsilon}"))?;
    let s1 = ServerId(0);
    let s2 = ServerId(1);
    let env = Environment::new(vec![1.0, mu], lambda, s2).map_err(GeneratorError::from)?;
    let t_star = lambda / mu + 4.0 * lambda / (mu * mu);
    let mut sim = Simulator::new(policy, env)?;

    let mut abandoned = (!sim.holds(s2)).then_some(0.0);
    while abandoned.is_none() {
        match sim.next_alarm() {
            Some(t) if t < t_star - TIME_EPS => {
                sim.step_alarm()?;
                if !sim.holds(s2) {
                    abandoned = Some(t);
                }
            }
            _ => break,
        }
    }
    let (branch, comparison_cost) = match abandoned {
        Some(t) => {
            sim.request(t + epsilon, s2)?;
            (AdversaryBranch::Abandoned { t }, (t + epsilon) * mu)
        }
        None => {
            sim.request(t_star, s1)?;
            (AdversaryBranch::Survived { t_star }, t_star + lambda)
        }
    };
    let (instance, run) = sim.finish()?;
    let online_cost = compute_cost(&instance, &run.schedule, instance.horizon())
        .expect("horizon is nonnegative")
        .total;
    Ok(AdversaryOutcome {
        instance,
        branch,
        online_cost,
        comparison_cost,
        ratio: online_cost / comparison_cost,
    })
}

pub fn run_adversary_kind(
    kind: PolicyKind,
    mu: f64,
    lambda: f64,
    epsilon: f64,
) -> Result<AdversaryOutcome, AdversaryError> {
    run_adversary(kind.build(), mu, lambda, epsilon)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AdversaryError {
    #[error(transparent)]
    Params(#[from] GeneratorError),
    #[error(transparent)]
    Sim(#[from] SimError),
}
