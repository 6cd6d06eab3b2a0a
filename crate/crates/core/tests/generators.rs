use georep_core::generators::{gen_fig1, gen_fig2, gen_random, RandomParams};
use georep_core::model::costs_match;
use georep_core::policy::simulate_kind;
use georep_core::{opt_full, opt_restricted, PolicyKind};

#[test]
fn fixed_window_policy_meets_the_worst_case_formulas() {
    for m in [3, 10, 200] {
        let g = gen_fig1(m, 1.0, 0.01, 0.001).unwrap();
        let wang = simulate_kind(PolicyKind::Wang, &g.instance).unwrap().cost.total;
        assert!(wang >= g.expected_online - 1e-9, "m={m}: {wang} < {}", g.expected_online);
        let opt = opt_full(&g.instance).unwrap().opt_cost;
        assert!(opt <= g.expected_opt + 1e-9, "m={m}: opt {opt} > {}", g.expected_opt);

        let g = gen_fig2(m, 1.0, 1.0, 0.001).unwrap();
        let wang = simulate_kind(PolicyKind::Wang, &g.instance).unwrap().cost.total;
        assert!(wang >= g.expected_online - 1e-9, "m={m}: {wang} < {}", g.expected_online);
    }
}

#[test]
fn copy_kind_policy_stays_within_two_on_the_first_worst_case() {
    let mut last = f64::INFINITY;
    for m in [3, 4, 8, 50, 400] {
        let g = gen_fig1(m, 1.0, 0.01, 0.001).unwrap();
        let alg1 = simulate_kind(PolicyKind::Alg1, &g.instance).unwrap().cost.total;
        let ratio = alg1 / opt_full(&g.instance).unwrap().opt_cost;
        assert!(ratio <= 2.0 + 1e-9, "m={m}: {ratio}");
        assert!(ratio <= last + 1e-9, "m={m}: ratio rose to {ratio}");
        last = ratio;
    }
    assert!(last < 1.05);
}

#[test]
fn random_generator_contract() {
    let params = RandomParams { n: 4, m: 12, ..RandomParams::default() };
    let a = gen_random(7, &params);
    assert_eq!(a, gen_random(7, &params));
    assert!(a.rates().windows(2).all(|w| w[0] <= w[1]));
    assert!(a.requests().windows(2).all(|w| w[0].time < w[1].time));
    assert_eq!(a.m(), 12);
    let full = opt_full(&a).unwrap().opt_cost;
    let restricted = opt_restricted(&a).unwrap().opt_cost;
    assert!(costs_match(full, restricted), "{full} vs {restricted}");
}
