//! Tabu search over integer assignments with fix/unfix neighbourhoods.
//!
//! Each iteration builds a candidate list by releasing a few random non-tabu
//! integers around the current solution and re-optimising them exactly, then
//! runs a local search from the best candidate. Local search rounds either
//! fix random integers to random values (`Lsf`), release random integers
//! (`Lsu`), or do both in sequence (`Lsvns`).

mod trace;

pub use trace::{read_trace, write_trace, TraceEntry};

use std::time::{Duration, Instant};

use log::{debug, info};
use rand::seq::index::sample;
use rand::RngExt;
use rand_xoshiro::rand_core::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{audit_solution, MilpModel, Role};
use crate::scalar::Scalar;
use crate::solver::{model_lp, search, search_excluding, LpSolver, LpStatus, Solution, SolveLimits, SolveStats, SolveStatus};

/// Strict improvement threshold for accepting a solution.
pub const IMPROVEMENT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Lsf,
    Lsu,
    Lsvns,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Lsf => "lsf",
            Variant::Lsu => "lsu",
            Variant::Lsvns => "lsvns",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "lsf" => Ok(Variant::Lsf),
            "lsu" => Ok(Variant::Lsu),
            "lsvns" => Ok(Variant::Lsvns),
            other => Err(format!("unknown variant `{other}` (expected lsf, lsu or lsvns)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicConfig {
    /// Tabu iterations.
    pub iter: usize,
    /// Candidate list length.
    pub size_list: usize,
    /// Tenure given to modified variables.
    pub maxtt: usize,
    /// Local search rounds per iteration.
    pub ils: usize,
    /// Arterial loop integers selected per move.
    pub rm: usize,
    /// Left-turn bits selected per move.
    pub rd: usize,
    /// Cycle integers selected per move.
    pub rc: usize,
    pub variant: Variant,
    pub seed: u64,
    /// Seconds per candidate sub-solve.
    #[serde(default = "default_candidate_seconds")]
    pub candidate_seconds: f64,
    /// Seconds per release round in local search.
    #[serde(default = "default_release_seconds")]
    pub release_seconds: f64,
    /// Seconds for the initial feasible search; `None` is unlimited.
    #[serde(default)]
    pub first_seconds: Option<f64>,
    /// Evaluate candidates on the rayon pool.
    #[serde(default)]
    pub parallel: bool,
}

fn default_candidate_seconds() -> f64 {
    10.0
}

fn default_release_seconds() -> f64 {
    30.0
}

impl HeuristicConfig {
    /// `(iter, sl, maxtt, iLS, rm, rd, rC)` with default budgets.
    pub fn new(variant: Variant, params: [usize; 7], seed: u64) -> Self {
        let [iter, size_list, maxtt, ils, rm, rd, rc] = params;
        HeuristicConfig {
            iter,
            size_list,
            maxtt,
            ils,
            rm,
            rd,
            rc,
            variant,
            seed,
            candidate_seconds: default_candidate_seconds(),
            release_seconds: default_release_seconds(),
            first_seconds: None,
            parallel: false,
        }
    }

    pub fn params(&self) -> [usize; 7] {
        [self.iter, self.size_list, self.maxtt, self.ils, self.rm, self.rd, self.rc]
    }
}

#[derive(Debug, Error)]
pub enum HeuristicError {
    #[error("no feasible starting solution ({0:?})")]
    NoFeasible(SolveStatus),
    #[error("configuration asks for {asked} {kind} variables but the model has {available}")]
    TooMany {
        kind: &'static str,
        asked: usize,
        available: usize,
    },
}

/// Integer variables split by kind.
#[derive(Debug, Clone)]
pub struct IntegerGroups {
    pub arterial: Vec<usize>,
    pub left_turn: Vec<usize>,
    pub cycle: Vec<usize>,
}

impl IntegerGroups {
    pub fn of<T: Scalar>(model: &MilpModel<T>) -> Self {
        let mut g = IntegerGroups {
            arterial: Vec::new(),
            left_turn: Vec::new(),
            cycle: Vec::new(),
        };
        for (j, v) in model.variables.iter().enumerate() {
            match v.role {
                Role::ArterialLoop { .. } => g.arterial.push(j),
                Role::LeftTurn { .. } => g.left_turn.push(j),
                Role::CycleLoop { .. } => g.cycle.push(j),
                _ => {}
            }
        }
        g
    }

    pub fn all(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .arterial
            .iter()
            .chain(&self.left_turn)
            .chain(&self.cycle)
            .copied()
            .collect();
        v.sort_unstable();
        v
    }
}

/// Remaining tenure per variable id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TabuState {
    pub tenure: Vec<usize>,
}

impl TabuState {
    pub fn new(num_vars: usize) -> Self {
        TabuState {
            tenure: vec![0; num_vars],
        }
    }

    pub fn is_tabu(&self, j: usize) -> bool {
        self.tenure[j] > 0
    }

    /// Modified variables get `maxtt`; every other positive tenure drops by one.
    pub fn update(&mut self, modified: &[usize], maxtt: usize) {
        for t in self.tenure.iter_mut() {
            *t = t.saturating_sub(1);
        }
        for &j in modified {
            self.tenure[j] = maxtt;
        }
    }
}

/// Draws up to `rm`/`rd`/`rC` non-tabu variables of each kind; a pool smaller
/// than the request is taken whole.
pub fn select_variables<R: rand::Rng>(
    groups: &IntegerGroups,
    tabu: &TabuState,
    cfg: &HeuristicConfig,
    rng: &mut R,
) -> Vec<usize> {
    let mut out = Vec::new();
    for (pool, want) in [
        (&groups.arterial, cfg.rm),
        (&groups.left_turn, cfg.rd),
        (&groups.cycle, cfg.rc),
    ] {
        let free: Vec<usize> = pool.iter().copied().filter(|&j| !tabu.is_tabu(j)).collect();
        if want >= free.len() {
            out.extend(&free);
        } else {
            out.extend(sample(rng, free.len(), want).into_iter().map(|k| free[k]));
        }
    }
    out.sort_unstable();
    out
}

fn fix_all<T: Scalar>(lp: &mut LpSolver<T>, ints: &[usize], values: &[T]) {
    for &j in ints {
        lp.set_bounds(j, Some(values[j].clone()), Some(values[j].clone()));
    }
}

fn release<T: Scalar>(lp: &mut LpSolver<T>, model: &MilpModel<T>, vars: &[usize]) {
    for &j in vars {
        let v = &model.variables[j];
        lp.set_bounds(j, v.lower.clone(), v.upper.clone());
    }
}

fn integers_differ<T: Scalar>(a: &[T], b: &[T], ints: &[usize]) -> Vec<usize> {
    ints.iter()
        .copied()
        .filter(|&j| (a[j].clone() - b[j].clone()).abs() > T::half())
        .collect()
}

fn seconds(s: f64) -> Duration {
    Duration::from_secs_f64(s.max(0.0))
}

/// First incumbent of the deterministic branch-and-bound dive.
pub fn first_feasible<T: Scalar>(model: &MilpModel<T>, limit: Option<f64>) -> Solution<T> {
    let mut limits = SolveLimits::none().stop_at_first_feasible();
    if let Some(s) = limit {
        limits = limits.with_time_limit(seconds(s));
    }
    crate::solver::branch_and_bound(model, &limits)
}

/// Shared state for the moves around one solution.
struct Neighbourhood<'a, T> {
    model: &'a MilpModel<T>,
    ints: Vec<usize>,
    groups: IntegerGroups,
    /// LP with every integer fixed at the last solution handed to `anchor`.
    base: LpSolver<T>,
}

impl<'a, T: Scalar> Neighbourhood<'a, T> {
    fn new(model: &'a MilpModel<T>) -> Self {
        Neighbourhood {
            model,
            ints: model.integer_variables(),
            groups: IntegerGroups::of(model),
            base: model_lp(model),
        }
    }

    fn reanchored(&self, values: &[T]) -> Self {
        let mut other = Neighbourhood {
            model: self.model,
            ints: self.ints.clone(),
            groups: self.groups.clone(),
            base: self.base.clone(),
        };
        other.anchor(values);
        other
    }

    fn anchor(&mut self, values: &[T]) {
        fix_all(&mut self.base, &self.ints, values);
        let _ = self.base.solve();
    }

    /// Releases `vars` around the anchor and solves the sub-problem exactly.
    fn unfix(&self, vars: &[usize], limits: &SolveLimits) -> Solution<T> {
        let mut lp = self.base.clone();
        release(&mut lp, self.model, vars);
        search(&mut lp, vars, limits)
    }

    /// Best neighbour that differs from `anchor` on at least one of `vars`.
    fn move_from(&self, anchor: &[T], vars: &[usize], limits: &SolveLimits) -> Solution<T> {
        let mut lp = self.base.clone();
        release(&mut lp, self.model, vars);
        let point: Vec<(usize, T)> = vars.iter().map(|&j| (j, anchor[j].clone())).collect();
        search_excluding(&mut lp, vars, limits, &point)
    }

    /// Fixes `vars` to the given values around the anchor and solves the LP.
    fn fix(&self, assignment: &[(usize, T)]) -> Option<Solution<T>> {
        let start = Instant::now();
        let mut lp = self.base.clone();
        let iter0 = lp.iterations();
        for (j, v) in assignment {
            lp.set_bounds(*j, Some(v.clone()), Some(v.clone()));
        }
        if lp.solve() != LpStatus::Optimal {
            return None;
        }
        let mut values = lp.values().to_vec();
        for &j in &self.ints {
            values[j] = values[j].round();
        }
        Some(Solution {
            status: SolveStatus::Feasible,
            objective: lp.objective(),
            values,
            stats: SolveStats {
                nodes: 1,
                lp_iterations: lp.iterations() - iter0,
                wall_time: start.elapsed().as_secs_f64(),
                incumbents: Vec::new(),
            },
        })
    }

    fn random_assignment<R: rand::Rng>(&self, vars: &[usize], rng: &mut R) -> Vec<(usize, T)> {
        vars.iter()
            .map(|&j| {
                let b = self.model.integer_box(j).expect("integer variable");
                let lo = b.lower.ceil().to_f64() as i64;
                let hi = b.upper.floor().to_f64() as i64;
                let v = if hi <= lo { lo } else { rng.random_range(lo..=hi) };
                (j, T::from_i64(v))
            })
            .collect()
    }
}

/// Candidate list around `current`, sorted by objective (descending, ties by
/// draw order). Each entry carries the variables it was allowed to change.
pub fn make_candidates<T: Scalar, R: rand::Rng>(
    model: &MilpModel<T>,
    current: &Solution<T>,
    tabu: &TabuState,
    cfg: &HeuristicConfig,
    rng: &mut R,
) -> Vec<(Solution<T>, Vec<usize>)> {
    let mut hood = Neighbourhood::new(model);
    hood.anchor(&current.values);
    candidates_in(&hood, &current.values, tabu, cfg, rng)
}

fn candidates_in<T: Scalar, R: rand::Rng>(
    hood: &Neighbourhood<'_, T>,
    anchor: &[T],
    tabu: &TabuState,
    cfg: &HeuristicConfig,
    rng: &mut R,
) -> Vec<(Solution<T>, Vec<usize>)> {
    let selections: Vec<Vec<usize>> = (0..cfg.size_list)
        .map(|_| select_variables(&hood.groups, tabu, cfg, rng))
        .collect();
    let limits = SolveLimits::none().with_time_limit(seconds(cfg.candidate_seconds));
    let solve = |sel: &Vec<usize>| hood.move_from(anchor, sel, &limits);
    let solved: Vec<Solution<T>> = if cfg.parallel {
        selections.par_iter().map(solve).collect()
    } else {
        selections.iter().map(solve).collect()
    };
    let mut out: Vec<(usize, Solution<T>, Vec<usize>)> = solved
        .into_iter()
        .zip(selections)
        .enumerate()
        .filter_map(|(k, (sol, sel))| {
            if sol.status.has_solution() {
                Some((k, sol, sel))
            } else {
                debug!("candidate {k} dropped ({:?})", sol.status);
                None
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.1.objective
            .partial_cmp(&a.1.objective)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    out.into_iter().map(|(_, s, sel)| (s, sel)).collect()
}

/// `cfg.ils` rounds of the configured local search from `start`; returns
/// the best solution seen, which is `start` unless something strictly
/// better turned up.
pub fn local_search<T: Scalar, R: rand::Rng>(
    model: &MilpModel<T>,
    start: &Solution<T>,
    tabu: &TabuState,
    cfg: &HeuristicConfig,
    rng: &mut R,
) -> Solution<T> {
    let mut hood = Neighbourhood::new(model);
    local_search_in(&mut hood, start, tabu, cfg, rng)
}

fn local_search_in<T: Scalar, R: rand::Rng>(
    hood: &mut Neighbourhood<'_, T>,
    start: &Solution<T>,
    tabu: &TabuState,
    cfg: &HeuristicConfig,
    rng: &mut R,
) -> Solution<T> {
    let mut best = start.clone();
    let mut anchored = false;
    for _ in 0..cfg.ils {
        if !anchored {
            hood.anchor(&best.values);
            anchored = true;
        }
        let threshold = best.objective.to_f64() + IMPROVEMENT;
        let release_limits = SolveLimits::none()
            .with_time_limit(seconds(cfg.release_seconds))
            .with_cutoff(threshold);
        let outcome = match cfg.variant {
            Variant::Lsf => {
                let vars = select_variables(&hood.groups, tabu, cfg, rng);
                let assignment = hood.random_assignment(&vars, rng);
                hood.fix(&assignment)
            }
            Variant::Lsu => {
                let vars = select_variables(&hood.groups, tabu, cfg, rng);
                Some(hood.unfix(&vars, &release_limits))
            }
            Variant::Lsvns => {
                let vars = select_variables(&hood.groups, tabu, cfg, rng);
                let assignment = hood.random_assignment(&vars, rng);
                let shaken = hood.fix(&assignment);
                let vars = select_variables(&hood.groups, tabu, cfg, rng);
                let released = match &shaken {
                    Some(s) => hood.reanchored(&s.values).unfix(&vars, &release_limits),
                    None => hood.unfix(&vars, &release_limits),
                };
                match shaken {
                    Some(s) if !released.status.has_solution() || s.objective >= released.objective => Some(s),
                    _ => Some(released),
                }
            }
        };
        if let Some(sol) = outcome {
            if sol.status.has_solution() && sol.objective.to_f64() > threshold {
                debug!("local search improved to {:.9}", sol.objective.to_f64());
                best = sol;
                anchored = false;
            }
        }
    }
    best
}

#[derive(Debug, Clone)]
pub struct HeuristicResult<T> {
    pub best: Solution<T>,
    pub first: Solution<T>,
    pub trace: Vec<TraceEntry>,
    /// Wall seconds including the initial feasible search.
    pub wall_time: f64,
    /// Accepted solutions along the run (current and best) that failed the
    /// audit at [`AUDIT_TOL`].
    pub audit_failures: usize,
}

/// Tolerance for the in-run audit of accepted solutions.
pub const AUDIT_TOL: f64 = 1e-6;

/// Tabu search driver.
pub fn tsilp<T: Scalar>(model: &MilpModel<T>, cfg: &HeuristicConfig) -> Result<HeuristicResult<T>, HeuristicError> {
    let start = Instant::now();
    let groups = IntegerGroups::of(model);
    for (kind, asked, available) in [
        ("arterial loop", cfg.rm, groups.arterial.len()),
        ("left-turn", cfg.rd, groups.left_turn.len()),
        ("cycle", cfg.rc, groups.cycle.len()),
    ] {
        if asked > available {
            return Err(HeuristicError::TooMany { kind, asked, available });
        }
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(cfg.seed);
    let mut tabu = TabuState::new(model.num_variables());

    let first = first_feasible(model, cfg.first_seconds);
    if !first.status.has_solution() {
        return Err(HeuristicError::NoFeasible(first.status));
    }
    let first = Solution {
        status: SolveStatus::Feasible,
        ..first
    };
    info!("first feasible {:.9}", first.objective.to_f64());
    let mut audit_failures = usize::from(!audit_solution(model, &first, AUDIT_TOL).passed);
    let mut current = first.clone();
    let mut best = first.clone();
    let mut trace = vec![TraceEntry {
        iteration: 0,
        best: best.objective.to_f64(),
        current: current.objective.to_f64(),
        time: start.elapsed().as_secs_f64(),
        modified: Vec::new(),
    }];

    let mut hood = Neighbourhood::new(model);
    for it in 1..=cfg.iter {
        hood.anchor(&current.values);
        let candidates = candidates_in(&hood, &current.values, &tabu, cfg, &mut rng);
        let mut modified = Vec::new();
        if let Some((leader, _)) = candidates.first() {
            let refined = local_search_in(&mut hood, leader, &tabu, cfg, &mut rng);
            if refined.objective.to_f64() > best.objective.to_f64() + IMPROVEMENT {
                audit_failures += usize::from(!audit_solution(model, &refined, AUDIT_TOL).passed);
                best = refined;
            }
            modified = integers_differ(&current.values, &leader.values, &hood.ints);
            audit_failures += usize::from(!audit_solution(model, leader, AUDIT_TOL).passed);
            current = leader.clone();
        }
        tabu.update(&modified, cfg.maxtt);
        trace.push(TraceEntry {
            iteration: it,
            best: best.objective.to_f64(),
            current: current.objective.to_f64(),
            time: start.elapsed().as_secs_f64(),
            modified,
        });
    }
    best.status = SolveStatus::Feasible;
    Ok(HeuristicResult {
        best,
        first,
        trace,
        wall_time: start.elapsed().as_secs_f64(),
        audit_failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_xoshiro::rand_core::SeedableRng;

    #[test]
    fn tenure_refreshes_modified_and_decays_the_rest() {
        let mut t = TabuState::new(4);
        t.update(&[1], 3);
        assert_eq!(t.tenure, vec![0, 3, 0, 0]);
        t.update(&[2], 3);
        assert_eq!(t.tenure, vec![0, 2, 3, 0]);
        t.update(&[], 3);
        t.update(&[], 3);
        assert_eq!(t.tenure, vec![0, 0, 1, 0]);
    }

    #[test]
    fn selection_skips_tabu_and_takes_small_pools_whole() {
        let groups = IntegerGroups {
            arterial: vec![0, 1, 2],
            left_turn: vec![3, 4, 5, 6],
            cycle: vec![7],
        };
        let mut tabu = TabuState::new(8);
        tabu.tenure[0] = 2;
        tabu.tenure[1] = 1;
        let cfg = HeuristicConfig::new(Variant::Lsu, [1, 1, 1, 1, 2, 2, 2], 0);
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(5);
        for _ in 0..50 {
            let s = select_variables(&groups, &tabu, &cfg, &mut rng);
            assert!(s.contains(&2) && s.contains(&7));
            assert!(!s.contains(&0) && !s.contains(&1));
            assert_eq!(s.iter().filter(|&&j| (3..=6).contains(&j)).count(), 2);
        }
    }

    #[test]
    fn variant_names_parse() {
        for v in [Variant::Lsf, Variant::Lsu, Variant::Lsvns] {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("tabu".parse::<Variant>().is_err());
    }
}
