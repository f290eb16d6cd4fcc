//! Depth-first branch-and-bound over an [`LpSolver`].
//!
//! Branching picks the most fractional integer variable (ties to the
//! smallest id) and dives into the child on the side the relaxation leans
//! to. Every thousand nodes the open node with the best bound is moved to
//! the top of the stack. Integral relaxations are polished by fixing the
//! integers to their rounded values and re-solving, so incumbents are exact
//! integers with consistent continuous parts.

use std::time::Instant;

use log::{debug, trace};

use super::{model_lp, LpSolver, LpStatus, Solution, SolveLimits, SolveStats, SolveStatus};
use crate::model::MilpModel;
use crate::scalar::Scalar;

/// Absolute optimality gap.
const GAP: f64 = 1e-6;
const RESTART_EVERY: u64 = 1000;

struct Node<T> {
    /// `(var, lower, upper)` on top of the root bounds; later entries win.
    changes: Vec<(usize, T, T)>,
    /// Relaxation value of the parent.
    bound: f64,
    /// Entries of the excluded point already pinned by `changes`.
    pinned: usize,
}

pub fn branch_and_bound<T: Scalar>(model: &MilpModel<T>, limits: &SolveLimits) -> Solution<T> {
    let start = Instant::now();
    if !model.is_ready() {
        return Solution::without_assignment(
            SolveStatus::Infeasible,
            SolveStats {
                wall_time: start.elapsed().as_secs_f64(),
                ..Default::default()
            },
        );
    }
    let mut lp = model_lp(model);
    search(&mut lp, &model.integer_variables(), limits)
}

/// Branch-and-bound on `lp` with its current bounds as the root. `lp` is left
/// with the root bounds restored.
pub fn search<T: Scalar>(lp: &mut LpSolver<T>, integers: &[usize], limits: &SolveLimits) -> Solution<T> {
    search_excluding(lp, integers, limits, &[])
}

/// As [`search`], but the integer point `exclude` (`(var, value)` pairs) is
/// cut off: an integral node that matches it is split into `x < v`, `x > v`
/// and `x = v` on the first entry not yet pinned.
pub fn search_excluding<T: Scalar>(
    lp: &mut LpSolver<T>,
    integers: &[usize],
    limits: &SolveLimits,
    exclude: &[(usize, T)],
) -> Solution<T> {
    let start = Instant::now();
    let iter0 = lp.iterations();
    let root: Vec<(Option<T>, Option<T>)> = integers.iter().map(|&j| lp.bounds(j)).collect();
    let mut stats = SolveStats::default();
    let mut best: Option<(Vec<T>, T)> = None;
    let mut best_f = f64::NEG_INFINITY;
    let mut stack: Vec<Node<T>> = vec![Node {
        changes: Vec::new(),
        bound: f64::INFINITY,
        pinned: 0,
    }];
    let mut exhausted = true;
    let mut cut_by_cutoff = false;
    let mut unbounded = false;
    let mut stalled = false;
    let tol = T::int_tol();

    let restore = |lp: &mut LpSolver<T>| {
        for (k, &j) in integers.iter().enumerate() {
            lp.set_bounds(j, root[k].0.clone(), root[k].1.clone());
        }
    };

    while let Some(node) = stack.pop() {
        if let Some(limit) = limits.time_limit {
            if start.elapsed() >= limit {
                exhausted = false;
                stack.push(node);
                break;
            }
        }
        if let Some(limit) = limits.node_limit {
            if stats.nodes >= limit {
                exhausted = false;
                stack.push(node);
                break;
            }
        }
        if node.bound <= best_f + GAP {
            continue;
        }
        if let Some(c) = limits.cutoff {
            if node.bound < c {
                cut_by_cutoff = true;
                continue;
            }
        }

        restore(lp);
        for (j, lo, hi) in &node.changes {
            lp.set_bounds(*j, Some(lo.clone()), Some(hi.clone()));
        }
        stats.nodes += 1;
        let status = lp.solve();
        match status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                unbounded = true;
                break;
            }
            LpStatus::IterationLimit => {
                stalled = true;
                debug!("lp stalled at node {}", stats.nodes);
                continue;
            }
            LpStatus::Optimal => {}
        }
        let value = lp.objective().to_f64();
        trace!("node {} depth {} bound {:.9}", stats.nodes, node.changes.len(), value);
        if value <= best_f + GAP {
            continue;
        }
        if let Some(c) = limits.cutoff {
            if value < c {
                cut_by_cutoff = true;
                continue;
            }
        }

        // Most fractional, ties to the smallest id.
        let mut pick: Option<(usize, T, T)> = None;
        for &j in integers {
            let x = lp.value(j);
            let frac = x.clone() - x.floor();
            let dist = Scalar::min_of(frac.clone(), T::one() - frac);
            if dist > tol && pick.as_ref().is_none_or(|(_, _, d)| dist > *d) {
                pick = Some((j, x, dist));
            }
        }

        let Some((j, x, _)) = pick else {
            let matches = !exclude.is_empty()
                && exclude[node.pinned..]
                    .iter()
                    .all(|(k, v)| (lp.value(*k) - v.clone()).abs() <= T::half());
            if matches {
                let (k, v) = &exclude[node.pinned];
                let (lo, hi) = current_bounds(lp, *k);
                let below = v.clone() - T::one();
                let above = v.clone() + T::one();
                let mut children = Vec::new();
                if lo.as_ref().is_none_or(|l| *l <= below) {
                    let mut c = node.changes.clone();
                    c.push((*k, lo.clone().unwrap_or_else(|| below.clone() - big()), below));
                    children.push((c, node.pinned));
                }
                if hi.as_ref().is_none_or(|u| *u >= above) {
                    let mut c = node.changes.clone();
                    c.push((*k, above.clone(), hi.clone().unwrap_or_else(|| above.clone() + big())));
                    children.push((c, node.pinned));
                }
                if node.pinned + 1 < exclude.len() {
                    let mut c = node.changes.clone();
                    c.push((*k, v.clone(), v.clone()));
                    children.push((c, node.pinned + 1));
                }
                for (changes, pinned) in children.into_iter().rev() {
                    stack.push(Node {
                        changes,
                        bound: value,
                        pinned,
                    });
                }
                continue;
            }
            if let Some((values, obj)) = polish(lp, integers) {
                let of = obj.to_f64();
                if of > best_f + GAP || best.is_none() {
                    debug!("incumbent {:.9} at node {}", of, stats.nodes);
                    best_f = of;
                    stats.incumbents.push((stats.nodes, of));
                    best = Some((values, obj));
                }
            }
            if limits.first_feasible && best.is_some() {
                exhausted = stack.is_empty();
                break;
            }
            continue;
        };

        let down = x.floor();
        let up = down.clone() + T::one();
        let (lo, hi) = current_bounds(lp, j);
        let mut down_node = node.changes.clone();
        down_node.push((j, lo.clone().unwrap_or_else(|| down.clone() - big()), down.clone()));
        let mut up_node = node.changes.clone();
        up_node.push((j, up.clone(), hi.unwrap_or_else(|| up.clone() + big())));
        let frac = (x - down).to_f64();
        let (first, second) = if frac <= 0.5 { (down_node, up_node) } else { (up_node, down_node) };
        stack.push(Node {
            changes: second,
            bound: value,
            pinned: node.pinned,
        });
        stack.push(Node {
            changes: first,
            bound: value,
            pinned: node.pinned,
        });

        if stats.nodes % RESTART_EVERY == 0 && stack.len() > 1 {
            let (k, _) = stack
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (k, n)| if n.bound > acc.1 { (k, n.bound) } else { acc });
            let node = stack.remove(k);
            stack.push(node);
        }
    }
    restore(lp);

    stats.lp_iterations = lp.iterations() - iter0;
    stats.wall_time = start.elapsed().as_secs_f64();
    if unbounded {
        return Solution::without_assignment(SolveStatus::Unbounded, stats);
    }
    match best {
        Some((values, objective)) => Solution {
            status: if exhausted && !stalled {
                SolveStatus::Optimal
            } else {
                SolveStatus::Feasible
            },
            values,
            objective,
            stats,
        },
        None => {
            let status = if exhausted && !cut_by_cutoff && !stalled {
                SolveStatus::Infeasible
            } else {
                SolveStatus::LimitReached
            };
            Solution::without_assignment(status, stats)
        }
    }
}

fn big<T: Scalar>() -> T {
    T::from_f64(1e9)
}

fn current_bounds<T: Scalar>(lp: &LpSolver<T>, j: usize) -> (Option<T>, Option<T>) {
    lp.bounds(j)
}

/// Fixes the integers at their rounded values and re-solves. Falls back to
/// the relaxation with rounded integers if the fixed LP fails on tolerance
/// noise.
fn polish<T: Scalar>(lp: &mut LpSolver<T>, integers: &[usize]) -> Option<(Vec<T>, T)> {
    let relaxed: Vec<T> = lp.values().to_vec();
    let relaxed_obj = lp.objective();
    if T::is_exact() {
        return Some((relaxed, relaxed_obj));
    }
    let saved: Vec<(Option<T>, Option<T>)> = integers.iter().map(|&j| lp.bounds(j)).collect();
    for &j in integers {
        let v = lp.value(j).round();
        lp.set_bounds(j, Some(v.clone()), Some(v));
    }
    let status = lp.solve();
    let out = if status == LpStatus::Optimal {
        let mut values = lp.values().to_vec();
        for &j in integers {
            values[j] = values[j].round();
        }
        Some((values, lp.objective()))
    } else {
        debug!("polish failed ({status:?}); keeping rounded relaxation");
        let mut values = relaxed;
        for &j in integers {
            values[j] = values[j].round();
        }
        Some((values, relaxed_obj))
    };
    for (k, &j) in integers.iter().enumerate() {
        lp.set_bounds(j, saved[k].0.clone(), saved[k].1.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{LpProblem, LpRow};

    // max 3x + 2y, x + y <= 4, x <= 3, x, y in [0, 4] integer.
    fn small() -> LpSolver<f64> {
        LpSolver::new(&LpProblem {
            objective: vec![3.0, 2.0],
            col_lower: vec![Some(0.0), Some(0.0)],
            col_upper: vec![Some(4.0), Some(4.0)],
            rows: vec![
                LpRow {
                    coeffs: vec![(0, 1.0), (1, 1.0)],
                    lower: None,
                    upper: Some(4.0),
                },
                LpRow {
                    coeffs: vec![(0, 1.0)],
                    lower: None,
                    upper: Some(3.0),
                },
            ],
        })
    }

    #[test]
    fn plain_search_finds_the_optimum() {
        let mut lp = small();
        let s = search(&mut lp, &[0, 1], &SolveLimits::none());
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective - 11.0).abs() < 1e-9);
        assert_eq!(lp.bounds(0), (Some(0.0), Some(4.0)));
    }

    #[test]
    fn excluding_the_optimum_gives_the_runner_up() {
        let mut lp = small();
        let s = search_excluding(&mut lp, &[0, 1], &SolveLimits::none(), &[(0, 3.0), (1, 1.0)]);
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective - 10.0).abs() < 1e-9);
        assert_eq!((s.values[0], s.values[1]), (2.0, 2.0));
    }

    #[test]
    fn excluding_another_point_changes_nothing() {
        let mut lp = small();
        let s = search_excluding(&mut lp, &[0, 1], &SolveLimits::none(), &[(0, 0.0), (1, 0.0)]);
        assert!((s.objective - 11.0).abs() < 1e-9);
    }

    #[test]
    fn excluding_the_only_point_is_infeasible() {
        let mut lp = small();
        lp.set_bounds(0, Some(1.0), Some(1.0));
        lp.set_bounds(1, Some(2.0), Some(2.0));
        let s = search_excluding(&mut lp, &[0, 1], &SolveLimits::none(), &[(0, 1.0), (1, 2.0)]);
        assert_eq!(s.status, SolveStatus::Infeasible);
    }

    #[test]
    fn first_feasible_stops_early() {
        let mut lp = small();
        let s = search(&mut lp, &[0, 1], &SolveLimits::none().stop_at_first_feasible());
        assert!(s.status.has_solution());
        assert_eq!(s.stats.incumbents.len(), 1);
    }
}
