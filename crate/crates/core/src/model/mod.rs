//! The MAXBAND mixed-integer program.

mod audit;
mod bounds;
mod build;
mod export;
mod patterns;

pub use audit::{audit_solution, audit_values, cycle_lhs, AuditReport};
pub use bounds::{
    arterial_bounds, compute_bounds, BoundTable, CrossedBound, CycleBounds, Interval, SpanBounds,
};
pub use build::{build_model, ModelError};
pub use export::{format_number, write_mps};
pub use patterns::{
    delta_affine, delta_value, psi_affine, psi_value, DeltaAffine, LeftTurnPattern, PsiAffine,
};

use std::sync::Arc;

use serde::Serialize;

use crate::instance::Instance;
use crate::network::CycleBasis;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Role {
    /// `z`: signal frequency, the reciprocal of the common period.
    Frequency,
    /// `b_a` / `b̄_a`.
    Band { artery: usize, inbound: bool },
    /// `w` / `w̄`: time from the end of red to the band edge.
    GreenOffset { artery: usize, signal: usize, inbound: bool },
    /// `t` / `t̄`: travel time on a segment, in periods.
    TravelTime { artery: usize, segment: usize, inbound: bool },
    /// `m`: integer of the arterial loop between two consecutive signals.
    ArterialLoop { artery: usize, segment: usize },
    /// `δ` / `δ̄`: left-turn arrangement bit.
    LeftTurn { artery: usize, signal: usize, inbound: bool },
    /// `C`: integer of a network loop.
    CycleLoop { cycle: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Domain {
    Continuous,
    Integer,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Variable<T> {
    pub name: String,
    pub role: Role,
    pub domain: Domain,
    pub lower: Option<T>,
    pub upper: Option<T>,
}

impl<T> Variable<T> {
    pub fn is_integer(&self) -> bool {
        self.domain != Domain::Continuous
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RowKind {
    Green,
    ArterialLoop,
    SpeedWindow,
    SpeedChange,
    CycleLoop,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constraint<T> {
    pub name: String,
    pub kind: RowKind,
    pub coeffs: Vec<(usize, T)>,
    pub relation: Relation,
    pub rhs: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ModelStatus {
    Ready,
    /// Some integer box is empty, so no integer point exists.
    InfeasibleByBounds(Vec<CrossedBound>),
}

/// Variable ids by role.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Layout {
    pub frequency: usize,
    /// `[outbound, inbound]` per artery.
    pub band: Vec<[usize; 2]>,
    /// Per global signal index.
    pub green_offset: Vec<[usize; 2]>,
    /// Per edge id.
    pub travel: Vec<[usize; 2]>,
    /// Per edge id.
    pub arterial_loop: Vec<usize>,
    /// Per global signal index.
    pub left_turn: Vec<[usize; 2]>,
    /// Per basis cycle.
    pub cycle_loop: Vec<usize>,
}

/// Size summary in the usual reporting form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ModelSize {
    pub equalities: usize,
    pub arterial_loops: usize,
    pub cycle_loops: usize,
    pub left_turn_bits: usize,
    pub integer_variables: usize,
    pub variables: usize,
    pub constraints: usize,
}

#[derive(Debug, Clone)]
pub struct MilpModel<T> {
    pub variables: Vec<Variable<T>>,
    pub constraints: Vec<Constraint<T>>,
    /// Maximised.
    pub objective: Vec<(usize, T)>,
    pub bounds: BoundTable<T>,
    pub tightened: bool,
    pub status: ModelStatus,
    pub layout: Layout,
    pub instance: Arc<Instance>,
    pub basis: Arc<CycleBasis>,
}

impl<T: Scalar> MilpModel<T> {
    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    /// Integer and binary ids in ascending order.
    pub fn integer_variables(&self) -> Vec<usize> {
        (0..self.variables.len())
            .filter(|&j| self.variables[j].is_integer())
            .collect()
    }

    pub fn is_ready(&self) -> bool {
        self.status == ModelStatus::Ready
    }

    pub fn size(&self) -> ModelSize {
        ModelSize {
            equalities: self
                .constraints
                .iter()
                .filter(|c| c.relation == Relation::Eq)
                .count(),
            arterial_loops: self.layout.arterial_loop.len(),
            cycle_loops: self.layout.cycle_loop.len(),
            left_turn_bits: 2 * self.layout.left_turn.len(),
            integer_variables: self.integer_variables().len(),
            variables: self.variables.len(),
            constraints: self.constraints.len(),
        }
    }

    /// Finite integer box for an integer variable: explicit bounds first, then
    /// the bound table. `None` for continuous variables.
    pub fn integer_box(&self, j: usize) -> Option<Interval<T>> {
        let v = &self.variables[j];
        if !v.is_integer() {
            return None;
        }
        let from_table = match v.role {
            Role::ArterialLoop { artery, segment } => {
                let e = self.instance.network.segment_index(artery, segment);
                Some(self.bounds.arterial[e].clone())
            }
            Role::CycleLoop { cycle } => Some(self.bounds.cycles[cycle].cycle.clone()),
            _ => Some(Interval {
                lower: T::zero(),
                upper: T::one(),
            }),
        }?;
        Some(Interval {
            lower: match &v.lower {
                Some(l) => Scalar::max_of(l.clone(), from_table.lower),
                None => from_table.lower,
            },
            upper: match &v.upper {
                Some(u) => Scalar::min_of(u.clone(), from_table.upper),
                None => from_table.upper,
            },
        })
    }

    /// Objective at the given values.
    pub fn objective_value(&self, values: &[T]) -> T {
        self.objective
            .iter()
            .fold(T::zero(), |acc, (j, c)| acc + c.clone() * values[*j].clone())
    }

    pub fn variable_id(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }
}
