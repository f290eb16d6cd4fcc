use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use super::bounds::compute_bounds;
use super::patterns::{delta_affine, psi_affine};
use super::{
    Constraint, Domain, Layout, MilpModel, ModelStatus, Relation, Role, RowKind, Variable,
};
use crate::instance::{Instance, InstanceError};
use crate::network::{CycleBasis, Direction};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("cycle basis does not belong to this network: {0}")]
    BasisMismatch(String),
}

/// Linear expression under construction: sparse coefficients plus a constant.
struct Expr<T> {
    coeffs: BTreeMap<usize, T>,
    constant: T,
}

impl<T: Scalar> Expr<T> {
    fn new() -> Self {
        Expr {
            coeffs: BTreeMap::new(),
            constant: T::zero(),
        }
    }

    fn add(&mut self, var: usize, c: T) {
        let slot = self.coeffs.entry(var).or_insert_with(T::zero);
        *slot = slot.clone() + c;
    }

    fn add_const(&mut self, c: T) {
        self.constant = self.constant.clone() + c;
    }

    /// `expr (rel) 0` as a row with the constant moved to the right.
    fn into_row(self, name: String, kind: RowKind, relation: Relation) -> Constraint<T> {
        Constraint {
            name,
            kind,
            coeffs: self.coeffs.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
            relation,
            rhs: -self.constant,
        }
    }
}

fn s<T: Scalar>(x: f64) -> T {
    T::from_f64(x)
}

fn check_basis(inst: &Instance, basis: &CycleBasis) -> Result<(), ModelError> {
    let net = &inst.network;
    let bad = |msg: String| Err(ModelError::BasisMismatch(msg));
    if basis.len() != net.cycle_rank() {
        return bad(format!(
            "{} cycles given, the network has cycle rank {}",
            basis.len(),
            net.cycle_rank()
        ));
    }
    for (c, cyc) in basis.cycles.iter().enumerate() {
        if cyc.segments.len() != cyc.junctions.len() || cyc.segments.is_empty() {
            return bad(format!("cycle {c}: segment and turn counts differ"));
        }
        for sg in &cyc.segments {
            let Some(a) = net.arteries().get(sg.artery) else {
                return bad(format!("cycle {c}: unknown artery {}", sg.artery));
            };
            if sg.first >= sg.last || sg.last >= a.num_signals() {
                return bad(format!("cycle {c}: run {}..{} on artery {}", sg.first, sg.last, sg.artery));
            }
        }
        for j in &cyc.junctions {
            let ok = j.from_artery < net.arteries().len()
                && j.to_artery < net.arteries().len()
                && net.index_on(j.from_artery, j.node) == Some(j.from_signal)
                && net.index_on(j.to_artery, j.node) == Some(j.to_signal);
            if !ok {
                return bad(format!("cycle {c}: turn at node {} not on its arteries", j.node));
            }
        }
    }
    Ok(())
}

/// Assembles the mixed-integer program for `inst` with one network loop row
/// per cycle of `basis`. With `tighten`, the integer boxes from the bound
/// table become explicit variable bounds.
pub fn build_model<T: Scalar>(
    inst: &Instance,
    basis: &CycleBasis,
    tighten: bool,
) -> Result<MilpModel<T>, ModelError> {
    inst.validate()?;
    check_basis(inst, basis)?;
    let net = &inst.network;
    let table = compute_bounds::<T>(inst, basis);
    let crossed = table.crossed(inst);

    let mut vars: Vec<Variable<T>> = Vec::new();
    let mut push = |name: String, role: Role, domain: Domain, lower: Option<T>, upper: Option<T>| {
        vars.push(Variable {
            name,
            role,
            domain,
            lower,
            upper,
        });
        vars.len() - 1
    };

    let frequency = push(
        "z".into(),
        Role::Frequency,
        Domain::Continuous,
        Some(T::one() / s::<T>(inst.period_max)),
        Some(T::one() / s::<T>(inst.period_min)),
    );
    let band: Vec<[usize; 2]> = (0..net.arteries().len())
        .map(|a| {
            [false, true].map(|inb| {
                let name = if inb { format!("b_in[{a}]") } else { format!("b[{a}]") };
                push(
                    name,
                    Role::Band { artery: a, inbound: inb },
                    Domain::Continuous,
                    Some(T::zero()),
                    None,
                )
            })
        })
        .collect();
    let signal_ids: Vec<_> = net.signals().collect();
    let green_offset: Vec<[usize; 2]> = signal_ids
        .iter()
        .map(|sid| {
            [false, true].map(|inb| {
                let tag = if inb { "w_in" } else { "w" };
                push(
                    format!("{tag}[{},{}]", sid.artery, sid.index),
                    Role::GreenOffset {
                        artery: sid.artery,
                        signal: sid.index,
                        inbound: inb,
                    },
                    Domain::Continuous,
                    Some(T::zero()),
                    None,
                )
            })
        })
        .collect();
    let travel: Vec<[usize; 2]> = net
        .edges()
        .iter()
        .map(|e| {
            [false, true].map(|inb| {
                let tag = if inb { "t_in" } else { "t" };
                push(
                    format!("{tag}[{},{}]", e.artery, e.segment),
                    Role::TravelTime {
                        artery: e.artery,
                        segment: e.segment,
                        inbound: inb,
                    },
                    Domain::Continuous,
                    Some(T::zero()),
                    None,
                )
            })
        })
        .collect();
    let arterial_loop: Vec<usize> = net
        .edges()
        .iter()
        .enumerate()
        .map(|(id, e)| {
            let (lo, hi) = if tighten {
                let b = &table.arterial[id];
                (Some(b.lower.clone()), Some(b.upper.clone()))
            } else {
                (None, None)
            };
            push(
                format!("m[{},{}]", e.artery, e.segment),
                Role::ArterialLoop {
                    artery: e.artery,
                    segment: e.segment,
                },
                Domain::Integer,
                lo,
                hi,
            )
        })
        .collect();
    let left_turn: Vec<[usize; 2]> = signal_ids
        .iter()
        .map(|sid| {
            [false, true].map(|inb| {
                let tag = if inb { "delta_in" } else { "delta" };
                push(
                    format!("{tag}[{},{}]", sid.artery, sid.index),
                    Role::LeftTurn {
                        artery: sid.artery,
                        signal: sid.index,
                        inbound: inb,
                    },
                    Domain::Binary,
                    Some(T::zero()),
                    Some(T::one()),
                )
            })
        })
        .collect();
    let cycle_loop: Vec<usize> = (0..basis.len())
        .map(|c| {
            let (lo, hi) = if tighten {
                let b = &table.cycles[c].cycle;
                (Some(b.lower.clone()), Some(b.upper.clone()))
            } else {
                (None, None)
            };
            push(format!("C[{c}]"), Role::CycleLoop { cycle: c }, Domain::Integer, lo, hi)
        })
        .collect();

    let layout = Layout {
        frequency,
        band,
        green_offset,
        travel,
        arterial_loop,
        left_turn,
        cycle_loop,
    };
    let sig = |a: usize, i: usize| net.signal_index(a, i);
    let seg = |a: usize, i: usize| net.segment_index(a, i);

    let mut rows: Vec<Constraint<T>> = Vec::new();

    // Band inside green, both directions.
    for sid in &signal_ids {
        let g = sig(sid.artery, sid.index);
        let timing = &inst.signals[g];
        for (dir, red) in [(0, timing.red), (1, timing.red_in)] {
            let mut e = Expr::new();
            e.add(layout.green_offset[g][dir], T::one());
            e.add(layout.band[sid.artery][dir], T::one());
            e.add_const(s::<T>(red) - T::one());
            let tag = if dir == 0 { "green" } else { "green_in" };
            rows.push(e.into_row(format!("{tag}[{},{}]", sid.artery, sid.index), RowKind::Green, Relation::Le));
        }
    }

    // Arterial loops between consecutive signals.
    for edge in net.edges() {
        let (a, i) = (edge.artery, edge.segment);
        let (gi, gj) = (sig(a, i), sig(a, i + 1));
        let (si, sj) = (&inst.signals[gi], &inst.signals[gj]);
        let e_id = seg(a, i);
        let mut e = Expr::new();
        e.add(layout.green_offset[gi][0], T::one());
        e.add(layout.green_offset[gi][1], T::one());
        e.add(layout.green_offset[gj][0], -T::one());
        e.add(layout.green_offset[gj][1], -T::one());
        e.add(layout.travel[e_id][0], T::one());
        e.add(layout.travel[e_id][1], T::one());
        let di = delta_affine(s::<T>(si.left_turn), s::<T>(si.left_turn_in));
        let dj = delta_affine(s::<T>(sj.left_turn), s::<T>(sj.left_turn_in));
        e.add(layout.left_turn[gi][0], di.coef);
        e.add(layout.left_turn[gi][1], di.coef_in);
        e.add(layout.left_turn[gj][0], -dj.coef);
        e.add(layout.left_turn[gj][1], -dj.coef_in);
        e.add(layout.arterial_loop[e_id], -T::one());
        let half = T::half();
        e.add_const(half.clone() * (s::<T>(si.red) + s::<T>(si.red_in)));
        e.add_const(-(half * (s::<T>(sj.red) + s::<T>(sj.red_in))));
        e.add_const(-(s::<T>(sj.advance) + s::<T>(si.advance_in)));
        e.add_const(di.constant - dj.constant);
        rows.push(e.into_row(format!("loop[{a},{i}]"), RowKind::ArterialLoop, Relation::Eq));
    }

    // Speed windows: (d/f) z <= t <= (d/e) z per direction.
    for edge in net.edges() {
        let (a, i) = (edge.artery, edge.segment);
        let e_id = seg(a, i);
        let d = &inst.segments[e_id];
        for (dir, len, lo_speed, hi_speed) in [
            (0, d.length, d.speed_min, d.speed_max),
            (1, d.length_in, d.speed_min_in, d.speed_max_in),
        ] {
            let tag = if dir == 0 { "speed" } else { "speed_in" };
            let mut lo = Expr::new();
            lo.add(layout.travel[e_id][dir], T::one());
            lo.add(frequency, -(s::<T>(len) / s::<T>(hi_speed)));
            rows.push(lo.into_row(format!("{tag}_lo[{a},{i}]"), RowKind::SpeedWindow, Relation::Ge));
            let mut hi = Expr::new();
            hi.add(layout.travel[e_id][dir], T::one());
            hi.add(frequency, -(s::<T>(len) / s::<T>(lo_speed)));
            rows.push(hi.into_row(format!("{tag}_hi[{a},{i}]"), RowKind::SpeedWindow, Relation::Le));
        }
    }

    // Speed change between consecutive segments of an artery.
    for (a, artery) in net.arteries().iter().enumerate() {
        let segments = artery.num_segments();
        for i in 0..segments.saturating_sub(1) {
            let (e_i, e_k) = (seg(a, i), seg(a, i + 1));
            let (cur, next) = (&inst.segments[e_i], &inst.segments[e_k]);
            for (dir, d_i, d_k, rmin, rmax) in [
                (0, cur.length, next.length, cur.recip_change_min, cur.recip_change_max),
                (
                    1,
                    cur.length_in,
                    next.length_in,
                    cur.recip_change_min_in,
                    cur.recip_change_max_in,
                ),
            ] {
                let tag = if dir == 0 { "change" } else { "change_in" };
                let ratio = s::<T>(d_i) / s::<T>(d_k);
                let build = |limit: f64| {
                    let mut e = Expr::new();
                    e.add(layout.travel[e_k][dir], ratio.clone());
                    e.add(layout.travel[e_i][dir], -T::one());
                    e.add(frequency, -(s::<T>(d_i) * s::<T>(limit)));
                    e
                };
                rows.push(build(rmin).into_row(
                    format!("{tag}_lo[{a},{i}]"),
                    RowKind::SpeedChange,
                    Relation::Ge,
                ));
                rows.push(build(rmax).into_row(
                    format!("{tag}_hi[{a},{i}]"),
                    RowKind::SpeedChange,
                    Relation::Le,
                ));
            }
        }
    }

    // Network loops.
    for (c, cyc) in basis.cycles.iter().enumerate() {
        let mut e = Expr::new();
        for sg in &cyc.segments {
            let sign = match sg.direction {
                Direction::Forward => T::one(),
                Direction::Backward => -T::one(),
            };
            let a = sg.artery;
            let (gp, gq) = (sig(a, sg.first), sig(a, sg.last));
            e.add(layout.green_offset[gp][0], sign.clone());
            e.add(layout.green_offset[gq][0], -sign.clone());
            for k in sg.first..sg.last {
                e.add(layout.travel[seg(a, k)][0], sign.clone());
            }
            let mut constant = T::half() * (s::<T>(inst.signals[gp].red) - s::<T>(inst.signals[gq].red));
            for k in sg.first + 1..=sg.last {
                constant = constant - s::<T>(inst.signals[sig(a, k)].advance);
            }
            e.add_const(sign * constant);
        }
        for j in &cyc.junctions {
            let (gf, gt) = (sig(j.from_artery, j.from_signal), sig(j.to_artery, j.to_signal));
            let p = psi_affine(
                s::<T>(inst.signals[gf].left_turn_in),
                s::<T>(inst.signals[gt].left_turn_in),
            );
            e.add(layout.left_turn[gf][1], p.coef_from);
            e.add(layout.left_turn[gt][1], p.coef_to);
            e.add_const(p.constant);
        }
        e.add(layout.cycle_loop[c], -T::one());
        rows.push(e.into_row(format!("cycle[{c}]"), RowKind::CycleLoop, Relation::Eq));
    }

    let mut objective = Vec::new();
    for (a, w) in inst.weights.iter().enumerate() {
        for (dir, k) in [(0, w.outbound), (1, w.inbound)] {
            if k != 0.0 {
                objective.push((layout.band[a][dir], s::<T>(k)));
            }
        }
    }

    let status = if crossed.is_empty() {
        ModelStatus::Ready
    } else {
        ModelStatus::InfeasibleByBounds(crossed)
    };
    Ok(MilpModel {
        variables: vars,
        constraints: rows,
        objective,
        bounds: table,
        tightened: tighten,
        status,
        layout,
        instance: Arc::new(inst.clone()),
        basis: Arc::new(basis.clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::generate_instance;
    use crate::network::{build_grid, fundamental_cycle_basis};

    #[test]
    fn sizes_follow_closed_forms() {
        for (r, c) in [(2, 2), (3, 3), (3, 5), (5, 4)] {
            let net = build_grid(r, c).unwrap();
            let inst = generate_instance(&net, 7);
            let basis = fundamental_cycle_basis(&net);
            let m = build_model::<f64>(&inst, &basis, true).unwrap();
            let size = m.size();
            assert_eq!(size.arterial_loops, 2 * r * c - r - c);
            assert_eq!(size.cycle_loops, (r - 1) * (c - 1));
            assert_eq!(size.left_turn_bits, 4 * r * c);
            assert_eq!(size.equalities, size.arterial_loops + size.cycle_loops);
            assert_eq!(
                size.integer_variables,
                size.arterial_loops + size.cycle_loops + size.left_turn_bits
            );
        }
    }

    #[test]
    fn tightening_bounds_every_integer() {
        let net = build_grid(3, 3).unwrap();
        let inst = generate_instance(&net, 1);
        let basis = fundamental_cycle_basis(&net);
        let m = build_model::<f64>(&inst, &basis, true).unwrap();
        for j in m.integer_variables() {
            assert!(m.variables[j].lower.is_some() && m.variables[j].upper.is_some());
        }
        let loose = build_model::<f64>(&inst, &basis, false).unwrap();
        let m0 = loose.layout.arterial_loop[0];
        assert!(loose.variables[m0].lower.is_none());
        assert!(loose.integer_box(m0).is_some());
    }

    #[test]
    fn rejects_foreign_basis() {
        let inst = generate_instance(&build_grid(3, 3).unwrap(), 1);
        let other = fundamental_cycle_basis(&build_grid(2, 2).unwrap());
        assert!(matches!(
            build_model::<f64>(&inst, &other, true),
            Err(ModelError::BasisMismatch(_))
        ));
    }

    #[test]
    fn speed_change_rows_only_on_long_arteries() {
        let net = build_grid(2, 3).unwrap();
        let inst = generate_instance(&net, 3);
        let basis = fundamental_cycle_basis(&net);
        let m = build_model::<f64>(&inst, &basis, true).unwrap();
        let changes = m
            .constraints
            .iter()
            .filter(|c| c.kind == RowKind::SpeedChange)
            .count();
        // Two horizontal arteries of three signals, one pair each, four rows per pair.
        assert_eq!(changes, 2 * 4);
    }
}
