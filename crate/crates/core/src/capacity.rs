//! Exact dyadic fixed-point numbers.
//!
//! A [`Capacity`] is `numerator / 2^log2_den`. Splitting a graph halves the
//! capacities shared between two subgraphs, so every value that flows through
//! the split/merge machinery must survive halving without rounding. Floats do
//! not, dyadic rationals do.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// Largest denominator exponent we accept. Anything beyond this is a bug in
/// the caller (each split adds one bit, each step halving adds at most one).
pub const MAX_LOG2_DEN: u32 = 48;

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct Capacity {
    num: i64,
    log2_den: u32,
}

impl Capacity {
    pub const ZERO: Capacity = Capacity { num: 0, log2_den: 0 };
    pub const ONE: Capacity = Capacity { num: 1, log2_den: 0 };

    pub fn new(num: i64, log2_den: u32) -> Self {
        assert!(log2_den <= MAX_LOG2_DEN, "denominator 2^{log2_den} out of range");
        Capacity { num, log2_den }
    }

    pub fn from_int(v: i64) -> Self {
        Capacity { num: v, log2_den: 0 }
    }

    pub fn numerator(&self) -> i64 {
        self.num
    }

    pub fn log2_den(&self) -> u32 {
        self.log2_den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn is_negative(&self) -> bool {
        self.num < 0
    }

    pub fn signum(&self) -> i64 {
        self.num.signum()
    }

    /// Smallest denominator representing the same value.
    pub fn normalized(self) -> Self {
        if self.num == 0 {
            return Capacity::ZERO;
        }
        let tz = self.num.trailing_zeros().min(self.log2_den);
        Capacity { num: self.num >> tz, log2_den: self.log2_den - tz }
    }

    /// Exact half. Odd numerators move to the next denominator bit.
    pub fn halve(self) -> Self {
        if self.num % 2 == 0 {
            Capacity { num: self.num / 2, log2_den: self.log2_den }
        } else {
            Capacity::new(self.num, self.log2_den + 1)
        }
    }

    pub fn double(self) -> Self {
        if self.log2_den > 0 {
            Capacity { num: self.num, log2_den: self.log2_den - 1 }
        } else {
            Capacity { num: self.num.checked_mul(2).expect("capacity overflow"), log2_den: 0 }
        }
    }

    pub fn abs(self) -> Self {
        Capacity { num: self.num.abs(), log2_den: self.log2_den }
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Numerator at denominator `2^scale`, if the value is representable there.
    pub fn at_scale(&self, scale: u32) -> Option<i64> {
        if scale >= self.log2_den {
            let shift = scale - self.log2_den;
            if shift >= 63 {
                return (self.num == 0).then_some(0);
            }
            self.num.checked_mul(1i64 << shift)
        } else {
            let shift = self.log2_den - scale;
            let div = 1i64 << shift;
            (self.num % div == 0).then(|| self.num / div)
        }
    }

    /// Numerator at `2^scale`, widening to 128 bits. Panics if inexact.
    pub(crate) fn wide_at(&self, scale: u32) -> i128 {
        if scale >= self.log2_den {
            (self.num as i128) << (scale - self.log2_den)
        } else {
            let n = self.normalized();
            assert!(n.log2_den <= scale, "value not representable at scale {scale}");
            (n.num as i128) << (scale - n.log2_den)
        }
    }

    /// Inverse of [`Capacity::wide_at`]; normalizes and checks range.
    pub(crate) fn from_wide(num: i128, scale: u32) -> Self {
        let mut num = num;
        let mut scale = scale;
        while scale > 0 && num % 2 == 0 {
            num /= 2;
            scale -= 1;
        }
        if num == 0 {
            return Capacity::ZERO;
        }
        let num = i64::try_from(num).expect("capacity overflow");
        Capacity::new(num, scale)
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / (1u64 << self.log2_den) as f64
    }

    /// Nearest representable value at `2^scale`, rounding half away from zero.
    pub fn round_from_f64(v: f64, scale: u32) -> Self {
        assert!(v.is_finite(), "cannot convert {v} to a capacity");
        let scaled = (v * (1u64 << scale) as f64).round();
        Capacity::new(scaled as i64, scale).normalized()
    }

    fn aligned(a: Self, b: Self) -> (i128, i128, u32) {
        let s = a.log2_den.max(b.log2_den);
        (a.wide_at(s), b.wide_at(s), s)
    }
}

impl PartialEq for Capacity {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Capacity {}

impl PartialOrd for Capacity {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Capacity {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = Capacity::aligned(*self, *other);
        a.cmp(&b)
    }
}

impl Hash for Capacity {
    fn hash<H: Hasher>(&self, state: &mut H) {
        let n = self.normalized();
        n.num.hash(state);
        n.log2_den.hash(state);
    }
}

impl Add for Capacity {
    type Output = Capacity;
    fn add(self, rhs: Self) -> Self {
        let (a, b, s) = Capacity::aligned(self, rhs);
        Capacity::from_wide(a + b, s)
    }
}

impl Sub for Capacity {
    type Output = Capacity;
    fn sub(self, rhs: Self) -> Self {
        let (a, b, s) = Capacity::aligned(self, rhs);
        Capacity::from_wide(a - b, s)
    }
}

impl Neg for Capacity {
    type Output = Capacity;
    fn neg(self) -> Self {
        Capacity { num: -self.num, log2_den: self.log2_den }
    }
}

impl AddAssign for Capacity {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl SubAssign for Capacity {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl Sum for Capacity {
    fn sum<I: Iterator<Item = Capacity>>(iter: I) -> Self {
        iter.fold(Capacity::ZERO, |a, b| a + b)
    }
}

impl From<i64> for Capacity {
    fn from(v: i64) -> Self {
        Capacity::from_int(v)
    }
}

impl fmt::Display for Capacity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.normalized();
        if n.log2_den == 0 {
            write!(f, "{}", n.num)
        } else {
            write!(f, "{}/{}", n.num, 1u64 << n.log2_den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn odd_halving_bumps_denominator() {
        let c = Capacity::from_int(3).halve();
        assert_eq!(c.numerator(), 3);
        assert_eq!(c.log2_den(), 1);
        assert_eq!(c + c, Capacity::from_int(3));
        assert_eq!(Capacity::from_int(4).halve(), Capacity::from_int(2));
    }

    #[test]
    fn equality_ignores_representation() {
        assert_eq!(Capacity::new(2, 1), Capacity::ONE);
        assert_eq!(Capacity::new(6, 2).normalized(), Capacity::new(3, 1));
        assert!(Capacity::new(1, 2) < Capacity::new(1, 1));
        assert_eq!(Capacity::new(-5, 3).to_string(), "-5/8");
    }

    #[test]
    fn scale_conversion() {
        assert_eq!(Capacity::new(3, 1).at_scale(3), Some(12));
        assert_eq!(Capacity::new(3, 1).at_scale(0), None);
        assert_eq!(Capacity::new(4, 2).at_scale(0), Some(1));
    }

    #[test]
    fn rounding_from_float() {
        assert_eq!(Capacity::round_from_f64(1.0, 0), Capacity::ONE);
        assert_eq!(Capacity::round_from_f64(0.3, 2), Capacity::new(1, 2));
    }

    fn arb_cap() -> impl Strategy<Value = Capacity> {
        (-1_000_000i64..1_000_000, 0u32..20).prop_map(|(n, d)| Capacity::new(n, d))
    }

    proptest! {
        #[test]
        fn halve_then_double_is_identity(c in arb_cap()) {
            prop_assert_eq!(c.halve().double(), c);
            prop_assert_eq!(c.double().halve(), c);
        }

        #[test]
        fn add_sub_roundtrip(a in arb_cap(), b in arb_cap()) {
            prop_assert_eq!((a + b) - b, a);
            prop_assert_eq!(a.halve() + a.halve(), a);
        }
    }
}
