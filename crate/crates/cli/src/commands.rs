use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use georep_core::allocation::{allocation_violations, classify_and_allocate};
use georep_core::experiments::{
    ingest_trace, lambda_range, run_sweep, write_sweep_csv, ColumnMap, ExperimentSpec, RateSet,
    RequestSource,
};
use georep_core::generators::{
    gen_fig1, gen_fig2, gen_random, gen_tight, run_adversary_kind, AdversaryBranch, InitialPlacement,
    RandomParams, TightCase,
};
use georep_core::model::{instance_to_json, read_instance};
use georep_core::offline::solve;
use georep_core::policy::{run_event_log, schedule_event_log, simulate_kind};
use georep_core::verify::{check_instance, check_random_batch, InstanceCheck};
use georep_core::{Instance, OracleConfig, PolicyKind};

use crate::args::{parse_rate_set, Cli, Command, GenCommand, SweepArgs};
use crate::Outcome;

/// Prints a cost with at most ten decimals and no trailing zeros.
fn num(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{x:.10}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn load(path: &Path) -> Result<Instance> {
    Ok(read_instance(path)?)
}

pub fn run(cli: Cli) -> Result<Outcome> {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let outcome = match cli.command {
        Command::Simulate { policy, instance, log } => simulate(&mut out, policy, &instance, log)?,
        Command::Opt { oracle, instance, log } => {
            let inst = load(&instance)?;
            let mut config = OracleConfig::new(oracle.oracle).with_budget(oracle.budget);
            if !log {
                config = config.cost_only();
            }
            let sol = solve(&inst, config).with_context(|| instance.display().to_string())?;
            writeln!(out, "oracle {}", oracle.oracle)?;
            writeln!(out, "total {}", num(sol.opt_cost))?;
            if let Some(schedule) = &sol.schedule {
                write!(out, "{}", schedule_event_log(schedule))?;
            }
            Outcome::Ok
        }
        Command::Allocate { instance } => {
            let inst = load(&instance)?;
            let sim = simulate_kind(PolicyKind::Alg1, &inst)?;
            let report = classify_and_allocate(&inst, &sim.run)?;
            report.write_csv(&mut out)?;
            let violations = allocation_violations(&inst, &sim.run, &report);
            for v in &violations {
                eprintln!("violation: {v}");
            }
            if violations.is_empty() { Outcome::Ok } else { Outcome::Violated }
        }
        Command::Verify { instance, random, seed, count } => {
            let checks = if random {
                check_random_batch(seed, count)
            } else {
                let path = instance.expect("clap requires --instance without --random");
                let inst = load(&path)?;
                vec![check_instance(path.display().to_string(), &inst, georep_core::offline::DEFAULT_BUDGET)]
            };
            report_checks(&mut out, &checks)?
        }
        Command::Gen { which, out: path } => {
            let instance = generate(which)?;
            let text = instance_to_json(&instance);
            match path {
                Some(path) => std::fs::write(&path, text).with_context(|| format!("{}: cannot write", path.display()))?,
                None => out.write_all(text.as_bytes())?,
            }
            Outcome::Ok
        }
        Command::Adversary { params, policies } => {
            writeln!(out, "policy,branch,time,online_cost,comparison_cost,ratio")?;
            for kind in policies {
                let res = run_adversary_kind(kind, params.mu, params.lambda, params.epsilon)?;
                let (branch, t) = match res.branch {
                    AdversaryBranch::Survived { t_star } => ("survived", t_star),
                    AdversaryBranch::Abandoned { t } => ("abandoned", t),
                };
                writeln!(
                    out,
                    "{kind},{branch},{},{},{},{}",
                    num(t),
                    num(res.online_cost),
                    num(res.comparison_cost),
                    num(res.ratio)
                )?;
            }
            Outcome::Ok
        }
        Command::Sweep(args) => sweep(&mut out, args)?,
    };
    out.flush()?;
    Ok(outcome)
}

fn simulate(out: &mut impl Write, policy: PolicyKind, path: &Path, log: bool) -> Result<Outcome> {
    let inst = load(path)?;
    let sim = simulate_kind(policy, &inst)?;
    writeln!(out, "policy {policy}")?;
    writeln!(out, "total {}", num(sim.cost.total))?;
    writeln!(out, "storage {}", num(sim.cost.storage))?;
    writeln!(out, "transfer {}", num(sim.cost.transfer))?;
    writeln!(out, "transfers {}", sim.cost.transfer_count)?;
    if log {
        write!(out, "{}", run_event_log(&sim.run))?;
    }
    Ok(Outcome::Ok)
}

fn report_checks(out: &mut impl Write, checks: &[InstanceCheck]) -> Result<Outcome> {
    let mut failed = 0;
    let mut notes = 0;
    for c in checks {
        for f in &c.failures {
            writeln!(out, "FAIL {}: {f}", c.label)?;
        }
        for n in &c.notes {
            writeln!(out, "note {}: {n}", c.label)?;
        }
        failed += usize::from(!c.passed());
        notes += c.notes.len();
    }
    if let [c] = checks {
        if let Some(full) = c.opt_full {
            writeln!(out, "opt full {}", num(full))?;
        }
        writeln!(out, "opt restricted {}", num(c.opt_restricted))?;
        for (kind, cost) in &c.online {
            writeln!(out, "{kind} {}", num(*cost))?;
        }
    }
    writeln!(out, "checked {} instances: {failed} failed, {notes} notes", checks.len())?;
    Ok(if failed == 0 { Outcome::Ok } else { Outcome::Violated })
}

fn generate(which: GenCommand) -> Result<Instance> {
    let generated = match which {
        GenCommand::Fig1 { m, lambda, delta, epsilon } => gen_fig1(m, lambda, delta, epsilon)?,
        GenCommand::Fig2 { m, lambda, mu2, epsilon } => gen_fig2(m, lambda, mu2, epsilon)?,
        GenCommand::Tight1 { mu2, lambda, epsilon } => gen_tight(TightCase::Low { mu2 }, lambda, epsilon)?,
        GenCommand::Tight2 { mu2, tau, lambda, epsilon } => {
            gen_tight(TightCase::Mid { mu2, tau }, lambda, epsilon)?
        }
        GenCommand::Tight3 { mu2, lambda, epsilon } => gen_tight(TightCase::High { mu2 }, lambda, epsilon)?,
        GenCommand::Random { seed, n, m, rate_min, rate_max, lambda, horizon, random_initial } => {
            if n == 0 {
                bail!("--n must be at least 1");
            }
            if !(rate_min > 0.0 && rate_min <= rate_max && rate_max.is_finite()) {
                bail!("rates need 0 < --rate-min <= --rate-max, got {rate_min}..{rate_max}");
            }
            if !(lambda > 0.0 && lambda.is_finite()) || !(horizon > 0.0 && horizon.is_finite()) {
                bail!("--lambda and --horizon must be positive");
            }
            let params = RandomParams {
                n,
                m,
                rate_min,
                rate_max,
                lambda,
                horizon,
                initial: if random_initial { InitialPlacement::Random } else { InitialPlacement::Cheapest },
            };
            return Ok(gen_random(seed, &params));
        }
        GenCommand::Adversary { policy, params } => {
            return Ok(run_adversary_kind(policy, params.mu, params.lambda, params.epsilon)?.instance);
        }
    };
    Ok(generated.instance)
}

fn sweep(out: &mut impl Write, args: SweepArgs) -> Result<Outcome> {
    if !(args.lambda_step > 0.0) || !(args.lambda_min > 0.0) || args.lambda_max < args.lambda_min {
        bail!("need 0 < --lambda-min <= --lambda-max and --lambda-step > 0");
    }
    let rate_sets = if args.rates.is_empty() {
        RateSet::STANDARD.to_vec()
    } else {
        args.rates.iter().map(|r| parse_rate_set(r)).collect::<Result<_>>()?
    };
    let source = match &args.trace {
        Some(path) => {
            let object = args.object_id.as_deref().context("--trace needs --object-id")?;
            if !args.delimiter.is_ascii() {
                bail!("--delimiter must be a single ASCII character");
            }
            let columns = ColumnMap {
                timestamp: args.ts_column.clone(),
                op: args.op_column.clone(),
                object: args.object_column.clone(),
                units_per_second: args.time_units,
                delimiter: args.delimiter as u8,
            };
            RequestSource::Times(ingest_trace(path, object, &columns)?)
        }
        None => {
            if !(args.mean_gap > 0.0) {
                bail!("--mean-gap must be positive");
            }
            RequestSource::Poisson { total: args.total, mean_gap: args.mean_gap }
        }
    };
    let spec = ExperimentSpec {
        rate_sets,
        lambda_values: lambda_range(args.lambda_min, args.lambda_max, args.lambda_step),
        n_servers: args.servers,
        seed: args.seed,
        policies: args.policies,
        oracle: args.oracle,
        budget: args.budget,
        source,
        prefix: args.prefix,
    };
    let rows = run_sweep(&spec)?;
    match &args.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("{}: cannot create", path.display()))?;
            write_sweep_csv(&rows, BufWriter::new(file))?;
        }
        None => write_sweep_csv(&rows, &mut *out)?,
    }
    Ok(Outcome::Ok)
}
