//! Independent feasibility check of an assignment, in `f64`.
//!
//! Besides re-evaluating every stored row, the network loops are recomputed
//! straight from the instance data and the cycle basis, so an error in the
//! row assembly cannot hide itself.

use serde::Serialize;

use super::patterns::psi_value;
use super::{MilpModel, Relation};
use crate::network::Direction;
use crate::scalar::Scalar;
use crate::solver::Solution;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub passed: bool,
    pub tolerance: f64,
    /// Variable ids without a finite value.
    pub missing: Vec<usize>,
    pub max_row_violation: f64,
    pub worst_row: Option<String>,
    pub max_bound_violation: f64,
    pub worst_bound: Option<String>,
    /// `(name, value)` of integer variables off an integer by more than the tolerance.
    pub integrality_failures: Vec<(String, f64)>,
    pub max_integrality_residual: f64,
    /// Per basis cycle: distance of the recomputed loop sum from the nearest integer.
    pub cycle_integrality: Vec<f64>,
    /// Largest gap between a recomputed loop sum and its `C` value.
    pub max_cycle_residual: f64,
    pub objective: f64,
    pub reported_objective: Option<f64>,
}

impl AuditReport {
    pub fn summary(&self) -> String {
        if self.passed {
            return format!("audit ok (objective {:.9})", self.objective);
        }
        let mut parts = Vec::new();
        if !self.missing.is_empty() {
            parts.push(format!("missing values for ids {:?}", self.missing));
        }
        if self.max_row_violation > self.tolerance {
            parts.push(format!(
                "row {} violated by {:.3e}",
                self.worst_row.as_deref().unwrap_or("?"),
                self.max_row_violation
            ));
        }
        if self.max_bound_violation > self.tolerance {
            parts.push(format!(
                "bound of {} violated by {:.3e}",
                self.worst_bound.as_deref().unwrap_or("?"),
                self.max_bound_violation
            ));
        }
        if !self.integrality_failures.is_empty() {
            let names: Vec<&str> = self.integrality_failures.iter().map(|(n, _)| n.as_str()).collect();
            parts.push(format!("non-integral {}", names.join(", ")));
        }
        if self.max_cycle_residual > self.tolerance {
            parts.push(format!("network loop residual {:.3e}", self.max_cycle_residual));
        }
        if let Some(r) = self.reported_objective {
            if (r - self.objective).abs() > self.tolerance * (1.0 + r.abs()) {
                parts.push(format!("objective reported {r} but evaluates to {}", self.objective));
            }
        }
        format!("audit failed: {}", parts.join("; "))
    }
}

/// Left-hand side of each network loop (without `C`), recomputed from the
/// instance: the signed red-centre offsets along every run plus the
/// intranode offsets at every turn.
pub fn cycle_lhs<T: Scalar>(model: &MilpModel<T>, values: &[f64]) -> Vec<f64> {
    let inst = &model.instance;
    let net = &inst.network;
    let lay = &model.layout;
    let bit = |j: usize| values[j].round() != 0.0;
    model
        .basis
        .cycles
        .iter()
        .map(|cyc| {
            let mut total = 0.0;
            for sg in &cyc.segments {
                let a = sg.artery;
                let p = net.signal_index(a, sg.first);
                let q = net.signal_index(a, sg.last);
                let mut phi = 0.5 * inst.signals[p].red + values[lay.green_offset[p][0]]
                    - 0.5 * inst.signals[q].red
                    - values[lay.green_offset[q][0]];
                for k in sg.first..sg.last {
                    phi += values[lay.travel[net.segment_index(a, k)][0]];
                }
                for k in sg.first + 1..=sg.last {
                    phi -= inst.signals[net.signal_index(a, k)].advance;
                }
                match sg.direction {
                    Direction::Forward => total += phi,
                    Direction::Backward => total -= phi,
                }
            }
            for j in &cyc.junctions {
                let f = net.signal_index(j.from_artery, j.from_signal);
                let t = net.signal_index(j.to_artery, j.to_signal);
                total += psi_value(
                    bit(lay.left_turn[f][1]),
                    inst.signals[f].left_turn_in,
                    bit(lay.left_turn[t][1]),
                    inst.signals[t].left_turn_in,
                );
            }
            total
        })
        .collect()
}

/// Audits a full assignment given in `f64`.
pub fn audit_values<T: Scalar>(
    model: &MilpModel<T>,
    values: &[f64],
    reported_objective: Option<f64>,
    tol: f64,
) -> AuditReport {
    let n = model.variables.len();
    let missing: Vec<usize> = (0..n)
        .filter(|&j| values.get(j).is_none_or(|v| !v.is_finite()))
        .collect();
    let mut report = AuditReport {
        passed: false,
        tolerance: tol,
        missing: missing.clone(),
        max_row_violation: 0.0,
        worst_row: None,
        max_bound_violation: 0.0,
        worst_bound: None,
        integrality_failures: Vec::new(),
        max_integrality_residual: 0.0,
        cycle_integrality: Vec::new(),
        max_cycle_residual: 0.0,
        objective: f64::NAN,
        reported_objective,
    };
    if !missing.is_empty() {
        return report;
    }

    for row in &model.constraints {
        let lhs: f64 = row.coeffs.iter().map(|(j, c)| c.to_f64() * values[*j]).sum();
        let rhs = row.rhs.to_f64();
        let v = match row.relation {
            Relation::Le => (lhs - rhs).max(0.0),
            Relation::Ge => (rhs - lhs).max(0.0),
            Relation::Eq => (lhs - rhs).abs(),
        };
        if v > report.max_row_violation {
            report.max_row_violation = v;
            report.worst_row = Some(row.name.clone());
        }
    }

    for (j, var) in model.variables.iter().enumerate() {
        let x = values[j];
        let below = var.lower.as_ref().map_or(0.0, |l| (l.to_f64() - x).max(0.0));
        let above = var.upper.as_ref().map_or(0.0, |u| (x - u.to_f64()).max(0.0));
        let v = below.max(above);
        if v > report.max_bound_violation {
            report.max_bound_violation = v;
            report.worst_bound = Some(var.name.clone());
        }
        if var.is_integer() {
            let r = (x - x.round()).abs();
            report.max_integrality_residual = report.max_integrality_residual.max(r);
            if r > tol {
                report.integrality_failures.push((var.name.clone(), x));
            }
        }
    }

    let lhs = cycle_lhs(model, values);
    for (c, total) in lhs.iter().enumerate() {
        report.cycle_integrality.push((total - total.round()).abs());
        let diff = (total - values[model.layout.cycle_loop[c]]).abs();
        report.max_cycle_residual = report.max_cycle_residual.max(diff);
    }

    report.objective = model
        .objective
        .iter()
        .map(|(j, c)| c.to_f64() * values[*j])
        .sum();
    let objective_ok = reported_objective
        .is_none_or(|r| (r - report.objective).abs() <= tol * (1.0 + r.abs()));
    report.passed = report.max_row_violation <= tol
        && report.max_bound_violation <= tol
        && report.integrality_failures.is_empty()
        && report.cycle_integrality.iter().all(|r| *r <= tol)
        && report.max_cycle_residual <= tol
        && objective_ok;
    report
}

/// Audits a solver result. Solutions without an assignment report every id
/// as missing.
pub fn audit_solution<T: Scalar, S: Scalar>(model: &MilpModel<T>, sol: &Solution<S>, tol: f64) -> AuditReport {
    let values: Vec<f64> = sol.values.iter().map(|v| v.to_f64()).collect();
    let reported = if sol.values.is_empty() {
        None
    } else {
        Some(sol.objective.to_f64())
    };
    audit_values(model, &values, reported, tol)
}
