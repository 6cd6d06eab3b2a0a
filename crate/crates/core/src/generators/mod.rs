//! Instance generators: worst cases for the fixed-window policy, tight cases
//! for the copy-kind policy, the adaptive adversary, and random instances.
//!
//! Structured generators return closed-form expected costs alongside the
//! instance so tests can compare simulated costs against formulas.

mod adversary;
mod random;

use thiserror::Error;

use crate::model::{Instance, InstanceError, ServerId};

pub use adversary::{
    branch1_ratio, branch2_ratio, run_adversary, run_adversary_kind, AdversaryBranch,
    AdversaryOutcome,
};
pub use random::{gen_random, small_random_instance, InitialPlacement, RandomParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeneratorError {
    #[error("parameter out of range: {0}")]
    Range(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

fn require(ok: bool, what: impl FnOnce() -> String) -> Result<(), GeneratorError> {
    if ok {
        Ok(())
    } else {
        Err(GeneratorError::Range(what()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub instance: Instance,
    /// Exact online cost for tight cases; a lower bound for the worst cases.
    pub expected_online: f64,
    pub expected_opt: f64,
}

impl Generated {
    pub fn expected_ratio(&self) -> f64 {
        self.expected_online / self.expected_opt
    }
}

fn s(ordinal: usize) -> ServerId {
    ServerId::from_ordinal(ordinal).expect("ordinal is one-based")
}

/// Two servers with rates `1` and `1 + delta`. After one request at `s1`
/// at time 0, requests at `s2` arrive every `lambda`, each just after the
/// fixed-window policy has let its copy there lapse.
pub fn gen_fig1(m: usize, lambda: f64, delta: f64, epsilon: f64) -> Result<Generated, GeneratorError> {
    require(m >= 3, || format!("m >= 3 required, got {m}"))?;
    require(lambda > 0.0 && lambda.is_finite(), || format!("lambda > 0 required, got {lambda}"))?;
    require(delta > 0.0 && delta.is_finite(), || format!("delta > 0 required, got {delta}"))?;
    let upper = lambda - lambda / (1.0 + delta);
    require(epsilon > 0.0 && epsilon < upper, || {
        format!("0 < epsilon < lambda - lambda/(1+delta) = {upper} required, got {epsilon}")
    })?;
    let mut requests = vec![(0.0, s(1))];
    requests.extend((2..=m).map(|k| (epsilon + (k - 2) as f64 * lambda, s(2))));
    let instance = Instance::new(vec![1.0, 1.0 + delta], lambda, s(1), requests)?;
    let cycles = (m - 2) as f64;
    Ok(Generated {
        instance,
        expected_online: cycles * 3.0 * lambda + lambda + epsilon,
        expected_opt: cycles * lambda * (1.0 + delta) + lambda + epsilon,
    })
}

/// Two servers with rates `1` and `mu2`. Requests at `s2` are spaced
/// `lambda + lambda/mu2 + epsilon` apart, so the fixed-window policy pays a
/// renewal, a fallback and a transfer back for every one of them.
pub fn gen_fig2(m: usize, lambda: f64, mu2: f64, epsilon: f64) -> Result<Generated, GeneratorError> {
    require(m >= 3, || format!("m >= 3 required, got {m}"))?;
    require(lambda > 0.0 && lambda.is_finite(), || format!("lambda > 0 required, got {lambda}"))?;
    require(mu2 >= 1.0 && mu2.is_finite(), || format!("mu2 >= 1 required, got {mu2}"))?;
    require(epsilon > 0.0 && epsilon.is_finite(), || format!("epsilon > 0 required, got {epsilon}"))?;
    let spacing = lambda + lambda / mu2 + epsilon;
    let t2 = lambda - lambda / mu2 + epsilon;
    let mut requests = vec![(0.0, s(1))];
    requests.extend((2..=m).map(|k| (t2 + (k - 2) as f64 * spacing, s(2))));
    let instance = Instance::new(vec![1.0, mu2], lambda, s(1), requests)?;
    let cycles = (m - 2) as f64;
    let head = 2.0 * lambda - lambda / mu2 + epsilon;
    Ok(Generated {
        instance,
        expected_online: cycles * 5.0 * lambda + head,
        expected_opt: cycles * mu2 * spacing + head,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TightCase {
    /// `1 < mu2 <= 2`.
    Low { mu2: f64 },
    /// `2 < mu2 <= 3`; the resident copy idles for `tau`.
    Mid { mu2: f64, tau: f64 },
    /// `mu2 > 3`.
    High { mu2: f64 },
}

/// Two-server instances on which the copy-kind policy meets its bound.
pub fn gen_tight(case: TightCase, lambda: f64, epsilon: f64) -> Result<Generated, GeneratorError> {
    require(lambda > 0.0 && lambda.is_finite(), || format!("lambda > 0 required, got {lambda}"))?;
    require(epsilon > 0.0 && epsilon.is_finite(), || format!("epsilon > 0 required, got {epsilon}"))?;
    match case {
        TightCase::Low { mu2 } => {
            require(mu2 > 1.0 && mu2 <= 2.0, || format!("1 < mu2 <= 2 required, got {mu2}"))?;
            let t1 = (1.0 - 1.0 / mu2) * lambda + epsilon;
            require(t1 < lambda, || format!("epsilon < lambda/mu2 required, got {epsilon}"))?;
            let instance = Instance::new(vec![1.0, mu2], lambda, s(1), [(t1, s(2)), (lambda + epsilon, s(1))])?;
            Ok(Generated {
                instance,
                expected_online: 4.0 * lambda,
                expected_opt: 2.0 * lambda + epsilon,
            })
        }
        TightCase::Mid { mu2, tau } => {
            require(mu2 > 2.0 && mu2 <= 3.0, || format!("2 < mu2 <= 3 required, got {mu2}"))?;
            require(tau > 0.0 && tau.is_finite(), || format!("tau > 0 required, got {tau}"))?;
            let t1 = (1.0 - 1.0 / mu2) * lambda + epsilon;
            require(t1 < lambda, || format!("epsilon < lambda/mu2 required, got {epsilon}"))?;
            let instance = Instance::new(
                vec![1.0, mu2],
                lambda,
                s(1),
                [(t1, s(2)), (lambda + tau + epsilon, s(1))],
            )?;
            Ok(Generated {
                instance,
                expected_online: 4.0 * lambda + mu2 * tau,
                expected_opt: 2.0 * lambda + tau + epsilon,
            })
        }
        TightCase::High { mu2 } => {
            require(mu2 > 3.0 && mu2.is_finite(), || format!("mu2 > 3 required, got {mu2}"))?;
            let instance = Instance::new(vec![1.0, mu2], lambda, s(2), [(lambda / mu2 + epsilon, s(2))])?;
            Ok(Generated {
                instance,
                expected_online: 3.0 * lambda + epsilon,
                expected_opt: lambda + mu2 * epsilon,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig1_times_and_closed_forms() {
        let g = gen_fig1(4, 1.0, 0.5, 0.1).unwrap();
        let times: Vec<f64> = g.instance.real_requests().iter().map(|r| r.time).collect();
        assert_eq!(times.len(), 4);
        for (a, b) in times.iter().zip([0.0, 0.1, 1.1, 2.1]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((g.expected_opt - 4.1).abs() < 1e-12);

        let g = gen_fig1(3, 2.0, 0.25, 0.2).unwrap();
        assert!((g.expected_opt - 4.7).abs() < 1e-12);
    }

    #[test]
    fn fig1_rejects_large_epsilon() {
        let err = gen_fig1(4, 1.0, 0.5, 0.5).unwrap_err();
        assert!(err.to_string().contains("lambda - lambda/(1+delta)"), "{err}");
        assert!(gen_fig1(2, 1.0, 0.5, 0.1).is_err());
    }

    #[test]
    fn fig2_times() {
        let g = gen_fig2(3, 1.0, 1.0, 0.01).unwrap();
        let times: Vec<f64> = g.instance.real_requests().iter().map(|r| r.time).collect();
        for (a, b) in times.iter().zip([0.0, 0.01, 2.02]) {
            assert!((a - b).abs() < 1e-12);
        }
        let g = gen_fig2(100_000, 1.0, 1.4, 1e-9).unwrap();
        assert!((g.expected_ratio() - 5.0 / 2.4).abs() < 1e-3);
    }

    #[test]
    fn tight_brackets_are_enforced() {
        assert!(gen_tight(TightCase::Low { mu2: 2.5 }, 1.0, 0.01).is_err());
        assert!(gen_tight(TightCase::Mid { mu2: 2.0, tau: 1.0 }, 1.0, 0.01).is_err());
        assert!(gen_tight(TightCase::High { mu2: 3.0 }, 1.0, 0.01).is_err());
        let g = gen_tight(TightCase::Low { mu2: 2.0 }, 1.0, 0.01).unwrap();
        assert!((g.expected_ratio() - 4.0 / 2.01).abs() < 1e-12);
    }
}
