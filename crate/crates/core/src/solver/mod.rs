//! LP relaxations, branch-and-bound, and an exhaustive oracle for tiny models.

mod bnb;
mod oracle;
pub mod simplex;

pub use bnb::{branch_and_bound, search, search_excluding};
pub use oracle::{brute_force_oracle, OracleError, OracleOptions};
pub use simplex::{LpProblem, LpRow, LpSolver, LpStatus};

use std::time::Duration;

use serde::Serialize;

use crate::model::{MilpModel, Relation};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SolveStatus {
    Optimal,
    Feasible,
    Infeasible,
    Unbounded,
    /// A budget or the cutoff stopped the search before any incumbent, or
    /// the LP engine stalled.
    LimitReached,
}

impl SolveStatus {
    pub fn has_solution(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::Feasible)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolveStats {
    /// LP relaxations solved.
    pub nodes: u64,
    pub lp_iterations: u64,
    /// Seconds.
    pub wall_time: f64,
    /// `(node, objective)` each time the incumbent improved.
    pub incumbents: Vec<(u64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution<T> {
    pub status: SolveStatus,
    /// One value per model variable; empty when there is no assignment.
    pub values: Vec<T>,
    pub objective: T,
    pub stats: SolveStats,
}

impl<T: Scalar> Solution<T> {
    pub fn without_assignment(status: SolveStatus, stats: SolveStats) -> Self {
        Solution {
            status,
            values: Vec::new(),
            objective: T::zero(),
            stats,
        }
    }

    pub fn objective_f64(&self) -> f64 {
        self.objective.to_f64()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveLimits {
    pub time_limit: Option<Duration>,
    pub node_limit: Option<u64>,
    /// Nodes whose relaxation bound falls below this value are pruned.
    pub cutoff: Option<f64>,
    pub first_feasible: bool,
}

impl SolveLimits {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn with_time_limit(mut self, d: Duration) -> Self {
        self.time_limit = Some(d);
        self
    }

    pub fn with_node_limit(mut self, n: u64) -> Self {
        self.node_limit = Some(n);
        self
    }

    pub fn with_cutoff(mut self, c: f64) -> Self {
        self.cutoff = Some(c);
        self
    }

    pub fn stop_at_first_feasible(mut self) -> Self {
        self.first_feasible = true;
        self
    }
}

/// LP relaxation of `model` with its current variable bounds.
pub fn model_lp<T: Scalar>(model: &MilpModel<T>) -> LpSolver<T> {
    let n = model.variables.len();
    let mut objective = vec![T::zero(); n];
    for (j, c) in &model.objective {
        objective[*j] = objective[*j].clone() + c.clone();
    }
    let rows = model
        .constraints
        .iter()
        .map(|c| {
            let (lower, upper) = match c.relation {
                Relation::Le => (None, Some(c.rhs.clone())),
                Relation::Ge => (Some(c.rhs.clone()), None),
                Relation::Eq => (Some(c.rhs.clone()), Some(c.rhs.clone())),
            };
            LpRow {
                coeffs: c.coeffs.clone(),
                lower,
                upper,
            }
        })
        .collect();
    LpSolver::new(&LpProblem {
        objective,
        col_lower: model.variables.iter().map(|v| v.lower.clone()).collect(),
        col_upper: model.variables.iter().map(|v| v.upper.clone()).collect(),
        rows,
    })
}

/// Solves the LP relaxation (integers relaxed to their bounds).
pub fn solve_lp<T: Scalar>(model: &MilpModel<T>) -> Solution<T> {
    let start = std::time::Instant::now();
    let mut lp = model_lp(model);
    let status = lp.solve();
    let stats = SolveStats {
        nodes: 1,
        lp_iterations: lp.iterations(),
        wall_time: start.elapsed().as_secs_f64(),
        incumbents: Vec::new(),
    };
    match status {
        LpStatus::Optimal => Solution {
            status: SolveStatus::Optimal,
            values: lp.values().to_vec(),
            objective: lp.objective(),
            stats,
        },
        LpStatus::Infeasible => Solution::without_assignment(SolveStatus::Infeasible, stats),
        LpStatus::Unbounded => Solution::without_assignment(SolveStatus::Unbounded, stats),
        LpStatus::IterationLimit => Solution::without_assignment(SolveStatus::LimitReached, stats),
    }
}
