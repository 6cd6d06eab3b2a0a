use georep_core::experiments::{run_sweep, ExperimentSpec, RateSet, RequestSource};
use georep_core::verify::{alg1_bound, at_most};
use georep_core::{OracleMode, PolicyKind};

fn spec(sets: Vec<RateSet>, lambdas: Vec<f64>) -> ExperimentSpec {
    ExperimentSpec {
        rate_sets: sets,
        lambda_values: lambdas,
        source: RequestSource::Poisson { total: 3000, mean_gap: 50.0 },
        ..ExperimentSpec::default()
    }
}

#[test]
fn cells_respect_the_bounds() {
    let rows = run_sweep(&spec(RateSet::STANDARD.to_vec(), vec![50.0, 400.0, 1200.0])).unwrap();
    assert_eq!(rows.len(), 4 * 3 * 3);
    for r in &rows {
        let opt = r.opt_cost.expect("restricted oracle fits the default budget");
        assert!(r.ratio.unwrap() >= 1.0 - 1e-9, "{r:?}");
        let gamma = match r.rate_set.as_str() {
            "set1" => 1.0,
            "set2" => 2.3,
            "set3" => 4.0,
            _ => 15.0,
        };
        match r.policy {
            PolicyKind::Alg1 => assert!(at_most(r.online_cost, alg1_bound(gamma) * opt), "{r:?}"),
            PolicyKind::Simple => assert!(at_most(r.online_cost, 3.0 * opt), "{r:?}"),
            PolicyKind::Wang => {}
        }
    }
}

#[test]
fn copy_kind_policy_leads_on_set2_at_low_transfer_cost() {
    let rows = run_sweep(&spec(vec![RateSet::Set2], vec![100.0])).unwrap();
    let cost = |k| rows.iter().find(|r| r.policy == k).unwrap().online_cost;
    assert!(cost(PolicyKind::Alg1) <= cost(PolicyKind::Wang));
    assert!(cost(PolicyKind::Alg1) <= cost(PolicyKind::Simple));
}

#[test]
fn equal_rates_converge_at_high_transfer_cost() {
    let rows = run_sweep(&spec(vec![RateSet::Set1], vec![1200.0])).unwrap();
    let costs: Vec<f64> = rows.iter().map(|r| r.online_cost).collect();
    let lo = costs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = costs.iter().cloned().fold(0.0, f64::max);
    assert!(hi <= 1.1 * lo, "{costs:?}");
}

#[test]
fn prefix_and_budget_controls() {
    let mut s = spec(vec![RateSet::Set3], vec![200.0]);
    s.prefix = Some(40);
    s.oracle = OracleMode::Full;
    s.budget = 10;
    let rows = run_sweep(&s).unwrap();
    assert!(rows.iter().all(|r| r.requests == 40 && r.opt_cost.is_none() && r.ratio.is_none()));
    assert_eq!(run_sweep(&s).unwrap(), rows);
}
