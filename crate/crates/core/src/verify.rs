//! Invariant suites over single instances and seeded random batches.

use rayon::prelude::*;

use crate::allocation::{allocation_violations, classify_and_allocate};
use crate::generators::small_random_instance;
use crate::model::{compute_cost, costs_match, validate_schedule, Instance, TIME_EPS};
use crate::offline::{solve, validate_offline_structure, OracleConfig, OracleMode};
use crate::policy::{simulate_kind, special_copy_violations, PolicyKind};

/// `a <= b` up to the shared cost tolerance.
pub fn at_most(a: f64, b: f64) -> bool {
    a <= b + TIME_EPS * a.abs().max(b.abs()).max(1.0)
}

/// Competitive bound of the copy-kind policy for a given rate spread.
pub fn alg1_bound(gamma: f64) -> f64 {
    gamma.clamp(2.0, 3.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceCheck {
    pub label: String,
    pub opt_full: Option<f64>,
    pub opt_restricted: f64,
    /// `(policy, online cost)` for every policy.
    pub online: Vec<(PolicyKind, f64)>,
    pub failures: Vec<String>,
    /// Findings that are not violations, such as the restricted oracle
    /// missing the optimum.
    pub notes: Vec<String>,
}

impl InstanceCheck {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Runs every policy and both oracles (the full one when `full_budget`
/// allows) on `instance` and checks every invariant that applies.
pub fn check_instance(label: impl Into<String>, instance: &Instance, full_budget: u64) -> InstanceCheck {
    let mut failures = Vec::new();
    let mut fail = |msg: String| failures.push(msg);

    let restricted = solve(instance, OracleConfig::new(OracleMode::Restricted));
    let full = solve(instance, OracleConfig::new(OracleMode::Full).with_budget(full_budget)).ok();
    let restricted = match restricted {
        Ok(r) => r,
        Err(e) => {
            return InstanceCheck {
                label: label.into(),
                opt_full: None,
                opt_restricted: f64::NAN,
                online: Vec::new(),
                failures: vec![format!("restricted oracle: {e}")],
                notes: Vec::new(),
            }
        }
    };
    for (name, sol) in [("restricted", Some(&restricted)), ("full", full.as_ref())] {
        let Some(sol) = sol else { continue };
        let sched = sol.schedule.as_ref().expect("reconstructed");
        for v in validate_schedule(instance, sched) {
            fail(format!("{name} oracle schedule: {v}"));
        }
        for v in validate_offline_structure(instance, sched) {
            fail(format!("{name} oracle structure: {v}"));
        }
        let cost = compute_cost(instance, sched, instance.horizon()).expect("horizon").total;
        if !costs_match(cost, sol.opt_cost) {
            fail(format!("{name} oracle schedule costs {cost}, DP says {}", sol.opt_cost));
        }
        if sol.prefix_costs.windows(2).any(|w| !at_most(w[0], w[1])) {
            fail(format!("{name} oracle prefix costs decrease"));
        }
    }
    let mut notes = Vec::new();
    if let Some(full) = &full {
        if !at_most(full.opt_cost, restricted.opt_cost) {
            fail(format!(
                "restricted oracle {} is below the full optimum {}",
                restricted.opt_cost, full.opt_cost
            ));
        } else if !costs_match(full.opt_cost, restricted.opt_cost) {
            notes.push(format!(
                "restricted oracle {} exceeds the full optimum {}",
                restricted.opt_cost, full.opt_cost
            ));
        }
    }
    let opt = full.as_ref().map_or(restricted.opt_cost, |f| f.opt_cost);

    let mut online = Vec::new();
    for kind in PolicyKind::ALL {
        let out = match simulate_kind(kind, instance) {
            Ok(out) => out,
            Err(e) => {
                fail(format!("{kind}: {e}"));
                continue;
            }
        };
        let cost = out.cost.total;
        online.push((kind, cost));
        for v in validate_schedule(instance, &out.run.schedule) {
            fail(format!("{kind} schedule: {v}"));
        }
        if !at_most(opt, cost) {
            fail(format!("{kind} cost {cost} is below the optimum {opt}"));
        }
        match kind {
            PolicyKind::Alg1 => {
                let bound = alg1_bound(instance.gamma());
                if !at_most(cost, bound * opt) {
                    fail(format!("alg1 cost {cost} exceeds {bound} x {opt}"));
                }
                for v in special_copy_violations(instance, &out.run) {
                    fail(format!("alg1 special copies: {v}"));
                }
                match classify_and_allocate(instance, &out.run) {
                    Ok(report) => {
                        for v in allocation_violations(instance, &out.run, &report) {
                            fail(format!("allocation: {v}"));
                        }
                    }
                    Err(e) => fail(format!("allocation: {e}")),
                }
            }
            PolicyKind::Simple => {
                let cheapest_start = instance.rate(instance.initial()) == instance.env().min_rate();
                if cheapest_start && !at_most(cost, 3.0 * opt) {
                    fail(format!("simple cost {cost} exceeds 3 x {opt}"));
                }
            }
            PolicyKind::Wang => {}
        }
    }
    InstanceCheck {
        label: label.into(),
        opt_full: full.map(|f| f.opt_cost),
        opt_restricted: restricted.opt_cost,
        online,
        failures,
        notes,
    }
}

/// Seed of the `k`-th instance in a batch.
pub fn batch_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k as u64)
}

/// Checks `count` small random instances derived from `seed`, in order.
pub fn check_random_batch(seed: u64, count: usize) -> Vec<InstanceCheck> {
    (0..count)
        .into_par_iter()
        .map(|k| {
            let s = batch_seed(seed, k);
            check_instance(format!("random seed {s}"), &small_random_instance(s), u64::MAX)
        })
        .collect()
}
