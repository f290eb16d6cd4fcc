//! Valid integer boxes for the loop integers `m` and the cycle integers `C`.
//!
//! Every bound follows from the green-containment rows (`0 ≤ w ≤ 1 − r`),
//! the speed windows at the extreme periods, and the extreme left-turn bits.

use serde::Serialize;

use crate::instance::Instance;
use crate::network::{CycleBasis, CycleSegment, Direction, Junction};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Interval<T> {
    pub lower: T,
    pub upper: T,
}

impl<T: Scalar> Interval<T> {
    pub fn is_crossed(&self) -> bool {
        self.lower > self.upper
    }

    /// Number of integers in the box, zero when crossed.
    pub fn width(&self) -> u64 {
        if self.is_crossed() {
            0
        } else {
            (self.upper.clone() - self.lower.clone()).to_f64().round() as u64 + 1
        }
    }

    pub fn contains(&self, v: &T) -> bool {
        *v >= self.lower && *v <= self.upper
    }
}

/// Intermediate bounds for one straight run of a cycle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpanBounds<T> {
    pub segment: CycleSegment,
    /// Travel time from the first to the last signal, net of advancements.
    pub travel: Interval<T>,
    /// Offset between the first and last signal's red centres.
    pub offset: Interval<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleBounds<T> {
    pub spans: Vec<SpanBounds<T>>,
    /// Intranode offset range at each turn.
    pub turns: Vec<Interval<T>>,
    pub cycle: Interval<T>,
}

/// Boxes for every `m` (by edge id) and every `C` (by cycle).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundTable<T> {
    pub arterial: Vec<Interval<T>>,
    pub cycles: Vec<CycleBounds<T>>,
}

/// Identifies an integer box that came out empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CrossedBound {
    Arterial { artery: usize, segment: usize },
    Cycle { cycle: usize },
}

impl<T: Scalar> BoundTable<T> {
    pub fn crossed(&self, inst: &Instance) -> Vec<CrossedBound> {
        let net = &inst.network;
        let mut out = Vec::new();
        for (e, b) in self.arterial.iter().enumerate() {
            if b.is_crossed() {
                let edge = &net.edges()[e];
                out.push(CrossedBound::Arterial {
                    artery: edge.artery,
                    segment: edge.segment,
                });
            }
        }
        for (c, b) in self.cycles.iter().enumerate() {
            if b.cycle.is_crossed() {
                out.push(CrossedBound::Cycle { cycle: c });
            }
        }
        out
    }
}

fn s<T: Scalar>(x: f64) -> T {
    T::from_f64(x)
}

/// Travel-time bounds of segment `i` on `artery` over both directions, at the
/// extreme periods.
fn segment_travel<T: Scalar>(inst: &Instance, artery: usize, i: usize) -> (T, T) {
    let seg = inst.segment(artery, i);
    let t1 = s::<T>(inst.period_min);
    let t2 = s::<T>(inst.period_max);
    let hi = s::<T>(seg.length) / (s::<T>(seg.speed_min) * t1.clone())
        + s::<T>(seg.length_in) / (s::<T>(seg.speed_min_in) * t1);
    let lo = s::<T>(seg.length) / (s::<T>(seg.speed_max) * t2.clone())
        + s::<T>(seg.length_in) / (s::<T>(seg.speed_max_in) * t2);
    (lo, hi)
}

/// Box for the loop integer of segment `i` on `artery`.
pub fn arterial_bounds<T: Scalar>(inst: &Instance, artery: usize, i: usize) -> Interval<T> {
    let a = inst.signal(artery, i);
    let b = inst.signal(artery, i + 1);
    let half = T::half();
    let two = T::one() + T::one();
    let reds = half.clone() * (s::<T>(a.red) + s::<T>(a.red_in))
        + half.clone() * (s::<T>(b.red) + s::<T>(b.red_in));
    let lefts = half.clone() * (s::<T>(a.left_turn) + s::<T>(a.left_turn_in))
        + half * (s::<T>(b.left_turn) + s::<T>(b.left_turn_in));
    let advance = s::<T>(b.advance) + s::<T>(a.advance_in);
    let (travel_lo, travel_hi) = segment_travel::<T>(inst, artery, i);
    let upper = two.clone() - reds.clone() + lefts.clone() - advance.clone() + travel_hi;
    let lower = -two + reds - lefts - advance + travel_lo;
    Interval {
        lower: lower.guarded_ceil(),
        upper: upper.guarded_floor(),
    }
}

fn span_bounds<T: Scalar>(inst: &Instance, seg: &CycleSegment) -> SpanBounds<T> {
    let t1 = s::<T>(inst.period_min);
    let t2 = s::<T>(inst.period_max);
    let mut lo = T::zero();
    let mut hi = T::zero();
    for k in seg.first..seg.last {
        let d = inst.segment(seg.artery, k);
        hi = hi + s::<T>(d.length) / (s::<T>(d.speed_min) * t1.clone());
        lo = lo + s::<T>(d.length) / (s::<T>(d.speed_max) * t2.clone());
    }
    for k in seg.first + 1..=seg.last {
        let tau = s::<T>(inst.signal(seg.artery, k).advance);
        hi = hi - tau.clone();
        lo = lo - tau;
    }
    let rp = s::<T>(inst.signal(seg.artery, seg.first).red);
    let rq = s::<T>(inst.signal(seg.artery, seg.last).red);
    let reds = T::half() * (rp + rq);
    let offset = Interval {
        lower: reds.clone() + lo.clone() - T::one(),
        upper: -reds + hi.clone() + T::one(),
    };
    SpanBounds {
        segment: *seg,
        travel: Interval { lower: lo, upper: hi },
        offset,
    }
}

fn turn_bounds<T: Scalar>(inst: &Instance, j: &Junction) -> Interval<T> {
    let from = s::<T>(inst.signal(j.from_artery, j.from_signal).left_turn_in);
    let to = s::<T>(inst.signal(j.to_artery, j.to_signal).left_turn_in);
    Interval {
        lower: T::half() * (T::one() - to.clone() - from.clone()),
        upper: T::half() * (T::one() + to + from),
    }
}

pub fn compute_bounds<T: Scalar>(inst: &Instance, basis: &CycleBasis) -> BoundTable<T> {
    let net = &inst.network;
    let arterial = net
        .edges()
        .iter()
        .map(|e| arterial_bounds::<T>(inst, e.artery, e.segment))
        .collect();
    let cycles = basis
        .cycles
        .iter()
        .map(|cyc| {
            let spans: Vec<SpanBounds<T>> = cyc.segments.iter().map(|sg| span_bounds(inst, sg)).collect();
            let turns: Vec<Interval<T>> = cyc.junctions.iter().map(|j| turn_bounds(inst, j)).collect();
            let mut lo = T::zero();
            let mut hi = T::zero();
            for sp in &spans {
                match sp.segment.direction {
                    Direction::Forward => {
                        hi = hi + sp.offset.upper.clone();
                        lo = lo + sp.offset.lower.clone();
                    }
                    Direction::Backward => {
                        hi = hi - sp.offset.lower.clone();
                        lo = lo - sp.offset.upper.clone();
                    }
                }
            }
            for t in &turns {
                hi = hi + t.upper.clone();
                lo = lo + t.lower.clone();
            }
            CycleBounds {
                spans,
                turns,
                cycle: Interval {
                    lower: lo.guarded_ceil(),
                    upper: hi.guarded_floor(),
                },
            }
        })
        .collect();
    BoundTable { arterial, cycles }
}
