//! Left-turn phase patterns and the offsets they induce.
//!
//! A signal's left-turn arrangement is encoded by two bits: `δ` (outbound)
//! and `δ̄` (inbound). The arterial equations need the offset `Δ` between the
//! centres of the two directions' red times, and the network loop equations
//! need the intranode offset `Ψ` at every turn of a cycle.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// The four left-turn arrangements at a signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LeftTurnPattern {
    /// Lead inbound, lag outbound: `(δ, δ̄) = (0, 1)`.
    P1,
    /// `(1, 0)`.
    P2,
    /// `(0, 0)`.
    P3,
    /// `(1, 1)`.
    P4,
}

impl LeftTurnPattern {
    pub const ALL: [LeftTurnPattern; 4] = [Self::P1, Self::P2, Self::P3, Self::P4];

    /// `(δ, δ̄)`.
    pub fn bits(self) -> (bool, bool) {
        match self {
            Self::P1 => (false, true),
            Self::P2 => (true, false),
            Self::P3 => (false, false),
            Self::P4 => (true, true),
        }
    }

    pub fn from_bits(delta: bool, delta_in: bool) -> Self {
        match (delta, delta_in) {
            (false, true) => Self::P1,
            (true, false) => Self::P2,
            (false, false) => Self::P3,
            (true, true) => Self::P4,
        }
    }
}

fn bit<T: Scalar>(b: bool) -> T {
    if b {
        T::one()
    } else {
        T::zero()
    }
}

/// `Δ = ½[(2δ−1)ℓ − (2δ̄−1)ℓ̄]`, in periods.
pub fn delta_value<T: Scalar>(delta: bool, delta_in: bool, left: T, left_in: T) -> T {
    let two = T::one() + T::one();
    let s = two.clone() * bit::<T>(delta) - T::one();
    let s_in = two * bit::<T>(delta_in) - T::one();
    T::half() * (s * left - s_in * left_in)
}

/// `Ψ = ½ − ½[(2δ̄_ck−1)ℓ̄_ck − (2δ̄_mj−1)ℓ̄_mj]` for a turn from signal `mj`
/// onto signal `ck` at the same junction.
pub fn psi_value<T: Scalar>(delta_in_from: bool, left_in_from: T, delta_in_to: bool, left_in_to: T) -> T {
    let two = T::one() + T::one();
    let s_to = two.clone() * bit::<T>(delta_in_to) - T::one();
    let s_from = two * bit::<T>(delta_in_from) - T::one();
    T::half() - T::half() * (s_to * left_in_to - s_from * left_in_from)
}

/// `Δ` written as `constant + coef·δ + coef_in·δ̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaAffine<T> {
    pub constant: T,
    pub coef: T,
    pub coef_in: T,
}

pub fn delta_affine<T: Scalar>(left: T, left_in: T) -> DeltaAffine<T> {
    DeltaAffine {
        constant: T::half() * (left_in.clone() - left.clone()),
        coef: left,
        coef_in: -left_in,
    }
}

/// `Ψ` written as `constant + coef_from·δ̄_mj + coef_to·δ̄_ck`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiAffine<T> {
    pub constant: T,
    pub coef_from: T,
    pub coef_to: T,
}

pub fn psi_affine<T: Scalar>(left_in_from: T, left_in_to: T) -> PsiAffine<T> {
    PsiAffine {
        constant: T::half() + T::half() * (left_in_to.clone() - left_in_from.clone()),
        coef_from: left_in_from,
        coef_to: -left_in_to,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn delta_rows_by_pattern() {
        let (l, lb) = (q(3, 20), q(7, 50));
        let half = q(1, 2);
        let expect = |p: LeftTurnPattern| match p {
            LeftTurnPattern::P1 => -(l.clone() + lb.clone()) * half.clone(),
            LeftTurnPattern::P2 => (l.clone() + lb.clone()) * half.clone(),
            LeftTurnPattern::P3 => -(l.clone() - lb.clone()) * half.clone(),
            LeftTurnPattern::P4 => (l.clone() - lb.clone()) * half.clone(),
        };
        for p in LeftTurnPattern::ALL {
            let (d, db) = p.bits();
            assert_eq!(delta_value(d, db, l.clone(), lb.clone()), expect(p), "{p:?}");
            assert_eq!(LeftTurnPattern::from_bits(d, db), p);
        }
    }

    #[test]
    fn delta_vanishes_without_left_turns() {
        for p in LeftTurnPattern::ALL {
            let (d, db) = p.bits();
            assert_eq!(delta_value(d, db, 0.0, 0.0), 0.0);
        }
    }

    #[test]
    fn psi_matches_every_pattern_pair() {
        let (lm, lc) = (q(11, 100), q(9, 50));
        let half = q(1, 2);
        let one = q(1, 1);
        // Four groups keyed by (δ̄_mj, δ̄_ck).
        let group = |dm: bool, dc: bool| match (dm, dc) {
            (true, true) => half.clone() * (one.clone() - lc.clone() + lm.clone()),
            (false, true) => half.clone() * (one.clone() - lc.clone() - lm.clone()),
            (true, false) => half.clone() * (one.clone() + lc.clone() + lm.clone()),
            (false, false) => half.clone() * (one.clone() + lc.clone() - lm.clone()),
        };
        for pm in LeftTurnPattern::ALL {
            for pc in LeftTurnPattern::ALL {
                let dm = pm.bits().1;
                let dc = pc.bits().1;
                let v = psi_value(dm, lm.clone(), dc, lc.clone());
                assert_eq!(v, group(dm, dc), "{pm:?}/{pc:?}");
                // Only the inbound bits matter.
                for other in LeftTurnPattern::ALL {
                    if other.bits().1 == dc {
                        assert_eq!(psi_value(dm, lm.clone(), other.bits().1, lc.clone()), v);
                    }
                }
            }
        }
    }

    #[test]
    fn psi_is_half_without_left_turns() {
        for dm in [false, true] {
            for dc in [false, true] {
                assert_eq!(psi_value(dm, 0.0, dc, 0.0), 0.5);
            }
        }
    }

    #[test]
    fn affine_forms_agree_with_values() {
        let (l, lb) = (q(1, 7), q(2, 9));
        for p in LeftTurnPattern::ALL {
            let (d, db) = p.bits();
            let a = delta_affine(l.clone(), lb.clone());
            let bit = |b: bool| if b { q(1, 1) } else { q(0, 1) };
            let v = a.constant + a.coef * bit(d) + a.coef_in * bit(db);
            assert_eq!(v, delta_value(d, db, l.clone(), lb.clone()));
        }
        for dm in [false, true] {
            for dc in [false, true] {
                let a = psi_affine(l.clone(), lb.clone());
                let bit = |b: bool| if b { q(1, 1) } else { q(0, 1) };
                let v = a.constant + a.coef_from * bit(dm) + a.coef_to * bit(dc);
                assert_eq!(v, psi_value(dm, l.clone(), dc, lb.clone()));
            }
        }
    }
}
