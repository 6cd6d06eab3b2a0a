use georep_core::allocation::classify_and_allocate;
use georep_core::generators::small_random_instance;
use georep_core::model::{costs_match, instance_to_json, parse_instance};
use georep_core::policy::simulate_kind;
use georep_core::{compute_cost, opt_full, opt_restricted, validate_schedule, PolicyKind};
use proptest::prelude::*;

fn le(a: f64, b: f64) -> bool {
    a <= b + 1e-9 * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn policy_schedules_are_feasible_and_dominate_the_optimum(seed in any::<u64>()) {
        let inst = small_random_instance(seed);
        let opt = opt_full(&inst).unwrap().opt_cost;
        for kind in PolicyKind::ALL {
            let out = simulate_kind(kind, &inst).unwrap();
            let violations = validate_schedule(&inst, &out.run.schedule);
            prop_assert!(violations.is_empty(), "{kind}: {violations:?}");
            let recomputed = compute_cost(&inst, &out.run.schedule, inst.horizon()).unwrap().total;
            prop_assert!(costs_match(recomputed, out.cost.total));
            prop_assert!(le(opt, out.cost.total), "{kind}: {} < {opt}", out.cost.total);
        }
    }

    #[test]
    fn restricted_oracle_never_undercuts_the_full_one(seed in any::<u64>()) {
        let inst = small_random_instance(seed);
        let full = opt_full(&inst).unwrap();
        let restricted = opt_restricted(&inst).unwrap();
        prop_assert!(le(full.opt_cost, restricted.opt_cost));
        for sol in [&full, &restricted] {
            prop_assert!(sol.prefix_costs.windows(2).all(|w| le(w[0], w[1])));
            prop_assert!(costs_match(*sol.prefix_costs.last().unwrap(), sol.opt_cost));
            let sched = sol.schedule.as_ref().unwrap();
            prop_assert!(validate_schedule(&inst, sched).is_empty());
        }
    }

    #[test]
    fn allocation_adds_up_to_the_run_cost(seed in any::<u64>()) {
        let inst = small_random_instance(seed);
        let out = simulate_kind(PolicyKind::Alg1, &inst).unwrap();
        let report = classify_and_allocate(&inst, &out.run).unwrap();
        prop_assert_eq!(report.entries.len(), inst.m());
        prop_assert!(costs_match(report.total_allocated(), out.cost.total),
            "{} vs {}", report.total_allocated(), out.cost.total);
    }

    #[test]
    fn simulation_is_deterministic(seed in any::<u64>()) {
        let inst = small_random_instance(seed);
        prop_assert_eq!(&inst, &small_random_instance(seed));
        for kind in PolicyKind::ALL {
            prop_assert_eq!(simulate_kind(kind, &inst).unwrap(), simulate_kind(kind, &inst).unwrap());
        }
    }

    #[test]
    fn instance_files_round_trip(seed in any::<u64>()) {
        let inst = small_random_instance(seed);
        let back = parse_instance(&instance_to_json(&inst), "round trip").unwrap();
        prop_assert_eq!(back, inst);
    }
}
