use maxband::heuristic::{
    local_search, make_candidates, tsilp, HeuristicConfig, HeuristicError, IntegerGroups, TabuState, Variant,
};
use maxband::instance::generate_instance;
use maxband::model::{audit_solution, build_model};
use maxband::network::{build_grid, fundamental_cycle_basis};
use maxband::solver::{branch_and_bound, SolveLimits};
use maxband::Model;
use rand_xoshiro::rand_core::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

fn build(r: usize, c: usize, seed: u64) -> Model {
    let net = build_grid(r, c).unwrap();
    build_model(&generate_instance(&net, seed), &fundamental_cycle_basis(&net), true).unwrap()
}

fn first(m: &Model) -> maxband::Solution {
    let s = maxband::heuristic::first_feasible(m, None);
    assert!(s.status.has_solution());
    s
}

#[test]
fn zero_iterations_return_the_first_feasible_solution() {
    let m = build(3, 3, 0);
    let cfg = HeuristicConfig::new(Variant::Lsvns, [0, 10, 3, 10, 4, 4, 4], 1);
    let res = tsilp(&m, &cfg).unwrap();
    assert_eq!(res.best.values, res.first.values);
    assert_eq!(res.trace.len(), 1);
    assert!(audit_solution(&m, &res.best, 1e-6).passed);
}

#[test]
fn zero_local_rounds_return_the_input() {
    let m = build(3, 3, 1);
    let start = first(&m);
    let tabu = TabuState::new(m.num_variables());
    for v in [Variant::Lsf, Variant::Lsu, Variant::Lsvns] {
        let cfg = HeuristicConfig::new(v, [1, 1, 3, 0, 2, 2, 2], 0);
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(0);
        let out = local_search(&m, &start, &tabu, &cfg, &mut rng);
        assert_eq!(out.values, start.values);
    }
}

#[test]
fn local_search_never_gets_worse_and_stays_feasible() {
    let m = build(3, 3, 2);
    let start = first(&m);
    let tabu = TabuState::new(m.num_variables());
    for v in [Variant::Lsf, Variant::Lsu, Variant::Lsvns] {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(9);
        let mut current = start.clone();
        for rounds in 1..=3 {
            let cfg = HeuristicConfig::new(v, [1, 1, 3, rounds, 3, 3, 2], 0);
            let next = local_search(&m, &current, &tabu, &cfg, &mut rng);
            assert!(next.objective >= current.objective - 1e-12, "{v:?}");
            assert!(audit_solution(&m, &next, 1e-6).passed, "{v:?}");
            current = next;
        }
    }
}

#[test]
fn releasing_everything_reaches_the_optimum() {
    let m = build(2, 2, 4);
    let groups = IntegerGroups::of(&m);
    let cfg = HeuristicConfig::new(
        Variant::Lsu,
        [1, 1, 3, 1, groups.arterial.len(), groups.left_turn.len(), groups.cycle.len()],
        0,
    );
    let start = first(&m);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(0);
    let out = local_search(&m, &start, &TabuState::new(m.num_variables()), &cfg, &mut rng);
    let opt = branch_and_bound(&m, &SolveLimits::none());
    assert!((out.objective - opt.objective).abs() <= 1e-6);
}

#[test]
fn empty_selection_gives_copies_of_current() {
    let m = build(3, 3, 3);
    let current = first(&m);
    let cfg = HeuristicConfig::new(Variant::Lsu, [1, 4, 3, 1, 0, 0, 0], 0);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(0);
    let cands = make_candidates(&m, &current, &TabuState::new(m.num_variables()), &cfg, &mut rng);
    assert_eq!(cands.len(), 4);
    for (c, sel) in &cands {
        assert!(sel.is_empty());
        assert!((c.objective - current.objective).abs() <= 1e-9);
    }
}

#[test]
fn candidates_are_sorted_feasible_moves() {
    let m = build(3, 3, 5);
    let current = first(&m);
    let cfg = HeuristicConfig::new(Variant::Lsu, [1, 5, 3, 1, 4, 4, 4], 0);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
    let cands = make_candidates(&m, &current, &TabuState::new(m.num_variables()), &cfg, &mut rng);
    assert!(!cands.is_empty() && cands.len() <= 5);
    assert!(cands.windows(2).all(|w| w[0].0.objective >= w[1].0.objective));
    for (c, sel) in &cands {
        assert!(audit_solution(&m, c, 1e-6).passed);
        let ints = m.integer_variables();
        let changed: Vec<usize> = ints
            .iter()
            .copied()
            .filter(|&j| (c.values[j] - current.values[j]).abs() > 0.5)
            .collect();
        assert!(!changed.is_empty(), "candidate did not move");
        assert!(changed.iter().all(|j| sel.contains(j)), "moved outside the selection");
    }
}

#[test]
fn runs_are_reproducible_and_traces_monotone() {
    let m = build(3, 3, 6);
    let cfg = HeuristicConfig::new(Variant::Lsvns, [6, 4, 2, 3, 3, 3, 2], 17);
    let a = tsilp(&m, &cfg).unwrap();
    let b = tsilp(&m, &cfg).unwrap();
    let strip = |t: &[maxband::heuristic::TraceEntry]| {
        t.iter()
            .map(|e| (e.iteration, e.best, e.current, e.modified.clone()))
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&a.trace), strip(&b.trace));
    assert_eq!(a.best.values, b.best.values);
    assert_eq!(a.trace.len(), 7);
    assert!(a.trace.windows(2).all(|w| w[1].best >= w[0].best));
    assert!(a.trace.iter().all(|e| e.current <= e.best + 1e-12));
    assert!(audit_solution(&m, &a.best, 1e-6).passed);
    assert_eq!(a.audit_failures, 0);

    let par = tsilp(
        &m,
        &HeuristicConfig {
            parallel: true,
            ..cfg.clone()
        },
    )
    .unwrap();
    assert_eq!(strip(&par.trace), strip(&a.trace));
}

#[test]
fn tenure_is_respected_along_a_run() {
    let m = build(3, 3, 7);
    let cfg = HeuristicConfig::new(Variant::Lsu, [20, 3, 3, 1, 2, 2, 1], 5);
    let res = tsilp(&m, &cfg).unwrap();
    let mut tabu = TabuState::new(m.num_variables());
    for e in &res.trace[1..] {
        for &j in &e.modified {
            assert!(!tabu.is_tabu(j), "variable {j} modified at iteration {} while tabu", e.iteration);
        }
        tabu.update(&e.modified, cfg.maxtt);
    }
    assert!(res.trace.iter().any(|e| !e.modified.is_empty()));
}

#[test]
fn oversized_requests_and_empty_models_are_errors() {
    let m = build(2, 2, 0);
    let cfg = HeuristicConfig::new(Variant::Lsu, [1, 1, 1, 1, 99, 1, 1], 0);
    assert!(matches!(tsilp(&m, &cfg), Err(HeuristicError::TooMany { .. })));

    let net = build_grid(2, 2).unwrap();
    let mut inst = generate_instance(&net, 0);
    inst.period_min = 99.0;
    inst.period_max = 99.0;
    for g in &mut inst.segments {
        g.length = 297.0;
        g.length_in = 297.0;
        g.speed_min = 12.0;
        g.speed_max = 12.0;
        g.speed_min_in = 12.0;
        g.speed_max_in = 12.0;
    }
    for s in &mut inst.signals {
        s.red = 0.95;
        s.red_in = 0.95;
        s.left_turn = 0.0;
        s.left_turn_in = 0.0;
    }
    let m: Model = build_model(&inst, &fundamental_cycle_basis(&net), true).unwrap();
    let cfg = HeuristicConfig::new(Variant::Lsvns, [1, 1, 1, 1, 1, 1, 1], 0);
    assert!(matches!(tsilp(&m, &cfg), Err(HeuristicError::NoFeasible(_))));
}
