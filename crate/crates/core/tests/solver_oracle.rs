use std::time::Duration;

use maxband::instance::generate_instance;
use maxband::model::{audit_solution, build_model};
use maxband::network::{build_grid, fundamental_cycle_basis, GridNetwork};
use maxband::scalar::Scalar;
use maxband::solver::{
    branch_and_bound, brute_force_oracle, solve_lp, OracleError, OracleOptions, SolveLimits, SolveStatus,
};
use maxband::{ExactModel, Model};
use proptest::prelude::*;

fn build(net: &GridNetwork, seed: u64) -> Model {
    build_model(&generate_instance(net, seed), &fundamental_cycle_basis(net), true).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn branch_and_bound_matches_the_oracle_on_small_grids(seed in any::<u64>()) {
        let m = build(&build_grid(2, 2).unwrap(), seed);
        let bb = branch_and_bound(&m, &SolveLimits::none());
        let or = brute_force_oracle(&m, &OracleOptions::default()).unwrap();
        prop_assert_eq!(bb.status, SolveStatus::Optimal);
        prop_assert_eq!(or.status, SolveStatus::Optimal);
        prop_assert!((bb.objective - or.objective).abs() <= 1e-6, "{} vs {}", bb.objective, or.objective);
        prop_assert!(audit_solution(&m, &bb, 1e-6).passed);
        prop_assert!(audit_solution(&m, &or, 1e-6).passed);
        let lp = solve_lp(&m);
        prop_assert!(lp.objective + 1e-9 >= bb.objective);
    }
}

#[test]
fn single_artery_pruned_and_full_enumeration_agree() {
    let net = GridNetwork::single_artery(3).unwrap();
    for seed in 0..3 {
        let m = build(&net, seed);
        let pruned = brute_force_oracle(&m, &OracleOptions::default()).unwrap();
        let full = brute_force_oracle(
            &m,
            &OracleOptions {
                prune: false,
                ..Default::default()
            },
        )
        .unwrap();
        let bb = branch_and_bound(&m, &SolveLimits::none());
        assert!((pruned.objective - full.objective).abs() <= 1e-9);
        assert!((bb.objective - full.objective).abs() <= 1e-6);
        assert!(full.stats.nodes >= pruned.stats.nodes);
    }
}

#[test]
fn oracle_refuses_large_boxes() {
    let m = build(&build_grid(6, 6).unwrap(), 0);
    let err = brute_force_oracle(&m, &OracleOptions::default()).unwrap_err();
    assert!(matches!(err, OracleError::TooLarge { .. }));
}

#[test]
fn exact_arithmetic_agrees_with_floating_point() {
    let net = build_grid(2, 2).unwrap();
    let inst = generate_instance(&net, 5);
    let basis = fundamental_cycle_basis(&net);
    let f: Model = build_model(&inst, &basis, true).unwrap();
    let q: ExactModel = build_model(&inst, &basis, true).unwrap();
    let sf = branch_and_bound(&f, &SolveLimits::none());
    let sq = branch_and_bound(&q, &SolveLimits::none());
    assert_eq!(sq.status, SolveStatus::Optimal);
    assert!((sf.objective - Scalar::to_f64(&sq.objective)).abs() <= 1e-6);
    assert!(audit_solution(&f, &sq, 1e-9).passed);
}

#[test]
fn limits_and_cutoff_report_budget_status() {
    let m = build(&build_grid(3, 3).unwrap(), 2);
    let opt = branch_and_bound(&m, &SolveLimits::none());
    assert_eq!(opt.status, SolveStatus::Optimal);
    assert!(!opt.stats.incumbents.is_empty());
    assert!(opt.stats.incumbents.windows(2).all(|w| w[1].1 > w[0].1));

    let one = branch_and_bound(&m, &SolveLimits::none().with_node_limit(1));
    assert!(matches!(one.status, SolveStatus::LimitReached | SolveStatus::Feasible));

    let cut = branch_and_bound(&m, &SolveLimits::none().with_cutoff(opt.objective + 1.0));
    assert_eq!(cut.status, SolveStatus::LimitReached);
    assert!(cut.values.is_empty());

    let quick = branch_and_bound(&m, &SolveLimits::none().with_time_limit(Duration::ZERO));
    assert_eq!(quick.status, SolveStatus::LimitReached);

    let first = branch_and_bound(&m, &SolveLimits::none().stop_at_first_feasible());
    assert!(first.status.has_solution());
    assert!(first.objective <= opt.objective + 1e-9);
    assert!(audit_solution(&m, &first, 1e-6).passed);
}
