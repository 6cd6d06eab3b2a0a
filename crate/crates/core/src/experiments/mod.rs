//! Trace-driven sweeps over transfer costs and rate sets.
//!
//! A sweep takes one request sequence (an ingested trace or a synthetic
//! Poisson trace), spreads it over the servers, and for every
//! `(rate set, lambda)` cell prices each policy against the offline oracle.

mod trace;

use std::fmt;
use std::io;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{Instance, InstanceError, ServerId};
use crate::offline::{solve, OracleConfig, OracleMode};
use crate::policy::{simulate_kind, PolicyKind, SimError};

pub use trace::{
    assign_servers, gen_poisson_trace, ingest_trace, is_read_op, untie, ColumnMap, TraceError, TIE_STEP,
};

#[derive(Debug, Clone, PartialEq)]
pub enum RateSet {
    /// Ten equal rates.
    Set1,
    /// Ten rates bounded by 3.
    Set2,
    /// Ten rates up to 4.
    Set3,
    /// Ten rates up to 15.
    Set4,
    Custom(Vec<f64>),
}

impl RateSet {
    pub const STANDARD: [RateSet; 4] = [RateSet::Set1, RateSet::Set2, RateSet::Set3, RateSet::Set4];

    pub fn rates(&self) -> Vec<f64> {
        match self {
            RateSet::Set1 => vec![1.0; 10],
            RateSet::Set2 => vec![1.0, 1.1, 1.2, 1.3, 1.3, 1.4, 1.5, 1.7, 2.1, 2.3],
            RateSet::Set3 => vec![1.0, 1.1, 1.2, 1.5, 1.6, 2.1, 2.3, 2.7, 3.1, 4.0],
            RateSet::Set4 => vec![1.0, 1.1, 1.2, 1.3, 1.5, 2.1, 3.0, 6.0, 10.0, 15.0],
            RateSet::Custom(rates) => rates.clone(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RateSet::Set1 => "set1",
            RateSet::Set2 => "set2",
            RateSet::Set3 => "set3",
            RateSet::Set4 => "set4",
            RateSet::Custom(_) => "custom",
        }
    }
}

impl fmt::Display for RateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RateSet {
    type Err = String;

    /// `set1`..`set4`, or a comma-separated ascending list of rates.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "set1" => Ok(RateSet::Set1),
            "set2" => Ok(RateSet::Set2),
            "set3" => Ok(RateSet::Set3),
            "set4" => Ok(RateSet::Set4),
            list => list
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map(RateSet::Custom)
                .map_err(|_| format!("unknown rate set `{s}` (expected set1..set4 or a rate list)")),
        }
    }
}

/// Default sweep over transfer costs: 50, 75, ..., 1200.
pub fn default_lambdas() -> Vec<f64> {
    lambda_range(50.0, 1200.0, 25.0)
}

pub fn lambda_range(min: f64, max: f64, step: f64) -> Vec<f64> {
    assert!(step > 0.0, "positive step");
    let count = ((max - min) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|k| min + k as f64 * step).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum RequestSource {
    /// Request times, already ingested.
    Times(Vec<f64>),
    Poisson { total: usize, mean_gap: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub rate_sets: Vec<RateSet>,
    pub lambda_values: Vec<f64>,
    pub n_servers: usize,
    /// Drives both the synthetic trace and the server assignment.
    pub seed: u64,
    pub policies: Vec<PolicyKind>,
    pub oracle: OracleMode,
    pub budget: u64,
    pub source: RequestSource,
    /// Keep only the first `k` requests.
    pub prefix: Option<usize>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            rate_sets: RateSet::STANDARD.to_vec(),
            lambda_values: default_lambdas(),
            n_servers: 10,
            seed: 1,
            policies: PolicyKind::ALL.to_vec(),
            oracle: OracleMode::Restricted,
            budget: crate::offline::DEFAULT_BUDGET,
            source: RequestSource::Poisson {
                total: 11_683,
                mean_gap: 50.0,
            },
            prefix: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub rate_set: String,
    pub lambda: f64,
    pub policy: PolicyKind,
    pub online_cost: f64,
    /// `None` when the oracle refused the cell.
    pub opt_cost: Option<f64>,
    pub ratio: Option<f64>,
    pub requests: usize,
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("rate set {set} has {got} rates but the sweep uses {want} servers")]
    ServerCount { set: String, got: usize, want: usize },
    #[error("lambda values must be positive, got {0}")]
    BadLambda(f64),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Requests of a sweep, shared by every cell.
pub fn sweep_requests(spec: &ExperimentSpec) -> Vec<(f64, ServerId)> {
    let mut times = match &spec.source {
        RequestSource::Times(times) => times.clone(),
        RequestSource::Poisson { total, mean_gap } => gen_poisson_trace(spec.seed, *total, *mean_gap),
    };
    if let Some(k) = spec.prefix {
        times.truncate(k);
    }
    assign_servers(&times, spec.n_servers, spec.seed)
}

pub fn run_sweep(spec: &ExperimentSpec) -> Result<Vec<SweepRow>, ExperimentError> {
    for set in &spec.rate_sets {
        let got = set.rates().len();
        if got != spec.n_servers {
            return Err(ExperimentError::ServerCount {
                set: set.name().to_string(),
                got,
                want: spec.n_servers,
            });
        }
    }
    if let Some(&bad) = spec.lambda_values.iter().find(|&&l| !(l > 0.0)) {
        return Err(ExperimentError::BadLambda(bad));
    }
    let requests = sweep_requests(spec);
    let cells: Vec<(usize, f64)> = (0..spec.rate_sets.len())
        .flat_map(|k| spec.lambda_values.iter().map(move |&l| (k, l)))
        .collect();
    let results: Vec<Vec<SweepRow>> = cells
        .par_iter()
        .map(|&(k, lambda)| run_cell(spec, &spec.rate_sets[k], lambda, &requests))
        .collect::<Result<_, _>>()?;
    let mut rows: Vec<SweepRow> = results.into_iter().flatten().collect();
    rows.sort_by(|a, b| {
        a.rate_set
            .cmp(&b.rate_set)
            .then(a.lambda.total_cmp(&b.lambda))
            .then(a.policy.name().cmp(b.policy.name()))
    });
    Ok(rows)
}

fn run_cell(
    spec: &ExperimentSpec,
    set: &RateSet,
    lambda: f64,
    requests: &[(f64, ServerId)],
) -> Result<Vec<SweepRow>, ExperimentError> {
    let instance = Instance::new(set.rates(), lambda, ServerId::CHEAPEST, requests.iter().copied())?;
    let config = OracleConfig::new(spec.oracle).with_budget(spec.budget).cost_only();
    let opt = solve(&instance, config).ok().map(|s| s.opt_cost);
    spec.policies
        .iter()
        .map(|&policy| {
            let online = simulate_kind(policy, &instance)?.cost.total;
            Ok(SweepRow {
                rate_set: set.name().to_string(),
                lambda,
                policy,
                online_cost: online,
                opt_cost: opt,
                ratio: opt.map(|o| if o > 0.0 { online / o } else { 1.0 }),
                requests: instance.m(),
                seed: spec.seed,
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: io::Write>(rows: &[SweepRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rate_set", "lambda", "policy", "online_cost", "opt_cost", "ratio", "requests", "seed"])?;
    let na = |v: Option<f64>| v.map_or("NA".to_string(), |x| x.to_string());
    for r in rows {
        w.write_record([
            r.rate_set.clone(),
            r.lambda.to_string(),
            r.policy.name().to_string(),
            r.online_cost.to_string(),
            na(r.opt_cost),
            na(r.ratio),
            r.requests.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_grid() {
        let l = default_lambdas();
        assert_eq!(l.len(), 47);
        assert_eq!(l[0], 50.0);
        assert_eq!(*l.last().unwrap(), 1200.0);
    }

    #[test]
    fn rate_sets_parse() {
        assert_eq!("set3".parse::<RateSet>().unwrap(), RateSet::Set3);
        assert_eq!("1,2.5".parse::<RateSet>().unwrap(), RateSet::Custom(vec![1.0, 2.5]));
        assert!("setx".parse::<RateSet>().is_err());
        for set in RateSet::STANDARD {
            let rates = set.rates();
            assert_eq!(rates.len(), 10);
            assert!(rates.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn small_sweep_is_sorted_and_dominated() {
        let spec = ExperimentSpec {
            rate_sets: vec![RateSet::Set4, RateSet::Custom(vec![1.0, 2.0, 7.0])],
            lambda_values: vec![20.0, 5.0],
            n_servers: 3,
            source: RequestSource::Poisson {
                total: 200,
                mean_gap: 3.0,
            },
            ..ExperimentSpec::default()
        };
        assert!(matches!(run_sweep(&spec), Err(ExperimentError::ServerCount { .. })));
        let spec = ExperimentSpec {
            rate_sets: vec![RateSet::Custom(vec![1.0, 2.0, 7.0])],
            ..spec
        };
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].lambda, 5.0);
        assert_eq!(rows[0].policy, PolicyKind::Alg1);
        for r in &rows {
            assert!(r.ratio.unwrap() >= 1.0 - 1e-9, "{r:?}");
        }
        let mut csv = Vec::new();
        write_sweep_csv(&rows, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("rate_set,lambda,policy,online_cost,opt_cost,ratio,requests,seed\n"));
    }
}
