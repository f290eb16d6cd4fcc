//! Exhaustive enumeration of integer assignments for tiny models.
//!
//! Integer variables are fixed one at a time in id order, each running over
//! its whole box in ascending order; every complete assignment gets an LP
//! over the continuous variables. Optionally, a prefix is abandoned when its
//! relaxation is infeasible or cannot beat the best value found so far,
//! which keeps the search exact. No fractional values steer the order, so
//! the result is independent of the branch-and-bound path.

use std::time::Instant;

use thiserror::Error;

use super::{model_lp, LpSolver, LpStatus, Solution, SolveStats, SolveStatus};
use crate::model::MilpModel;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("integer box holds {size:.3e} assignments, above the limit of {limit:.3e}")]
    TooLarge { size: f64, limit: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Largest product of box widths accepted.
    pub max_assignments: f64,
    /// Abandon prefixes by relaxation infeasibility or bound.
    pub prune: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            max_assignments: 1e9,
            prune: true,
        }
    }
}

struct Enumeration<'a, T> {
    lp: LpSolver<T>,
    vars: &'a [usize],
    boxes: Vec<(i64, i64)>,
    prune: bool,
    best: Option<(Vec<T>, T)>,
    stats: SolveStats,
}

impl<T: Scalar> Enumeration<'_, T> {
    fn run(&mut self, depth: usize) {
        if self.prune || depth == self.vars.len() {
            self.stats.nodes += 1;
            match self.lp.solve() {
                LpStatus::Optimal => {}
                _ => return,
            }
            let value = self.lp.objective();
            if depth == self.vars.len() {
                let better = self.best.as_ref().is_none_or(|(_, b)| value > *b);
                if better {
                    self.stats.incumbents.push((self.stats.nodes, value.to_f64()));
                    self.best = Some((self.lp.values().to_vec(), value));
                }
                return;
            }
            if let Some((_, b)) = &self.best {
                if value.clone() - b.clone() <= T::from_f64(1e-9) {
                    return;
                }
            }
        }
        let j = self.vars[depth];
        let (lo, hi) = self.boxes[depth];
        let saved = self.lp.bounds(j);
        for v in lo..=hi {
            let x = T::from_i64(v);
            self.lp.set_bounds(j, Some(x.clone()), Some(x));
            self.run(depth + 1);
        }
        self.lp.set_bounds(j, saved.0, saved.1);
    }
}

/// Exact optimum by enumeration. Refuses models whose integer boxes hold
/// more than `opts.max_assignments` points.
pub fn brute_force_oracle<T: Scalar>(
    model: &MilpModel<T>,
    opts: &OracleOptions,
) -> Result<Solution<T>, OracleError> {
    let start = Instant::now();
    let vars = model.integer_variables();
    let mut boxes = Vec::with_capacity(vars.len());
    let mut size = 1.0f64;
    for &j in &vars {
        let b = model.integer_box(j).expect("integer variable");
        let lo = b.lower.ceil().to_f64() as i64;
        let hi = b.upper.floor().to_f64() as i64;
        size *= (hi - lo + 1).max(0) as f64;
        boxes.push((lo, hi));
    }
    if size > opts.max_assignments {
        return Err(OracleError::TooLarge {
            size,
            limit: opts.max_assignments,
        });
    }
    let mut stats = SolveStats::default();
    if !model.is_ready() || size == 0.0 {
        stats.wall_time = start.elapsed().as_secs_f64();
        return Ok(Solution::without_assignment(SolveStatus::Infeasible, stats));
    }
    let lp = model_lp(model);
    let mut search = Enumeration {
        lp,
        vars: &vars,
        boxes,
        prune: opts.prune,
        best: None,
        stats,
    };
    search.run(0);
    let mut stats = search.stats;
    stats.lp_iterations = search.lp.iterations();
    stats.wall_time = start.elapsed().as_secs_f64();
    Ok(match search.best {
        Some((values, objective)) => Solution {
            status: SolveStatus::Optimal,
            values,
            objective,
            stats,
        },
        None => Solution::without_assignment(SolveStatus::Infeasible, stats),
    })
}
