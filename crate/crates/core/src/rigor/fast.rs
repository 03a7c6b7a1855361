//! Hardware-double intervals for hot loops.
//!
//! Results are computed with round-to-nearest and then pushed one ulp
//! outward, which covers the at most half-ulp error of each IEEE operation.

use std::ops::{Add, Mul, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F64Interval {
    lo: f64,
    hi: f64,
}

impl F64Interval {
    pub const ZERO: F64Interval = F64Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: F64Interval = F64Interval { lo: 1.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo.is_finite() && hi.is_finite() && lo <= hi, "bad endpoints [{lo}, {hi}]");
        F64Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Self::new(x, x)
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn is_nonnegative(self) -> bool {
        self.lo >= 0.0
    }

    pub fn contains(self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn hull(self, other: F64Interval) -> Self {
        F64Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn width(self) -> f64 {
        self.hi - self.lo
    }

    fn widen(lo: f64, hi: f64) -> Self {
        F64Interval {
            lo: lo.next_down(),
            hi: hi.next_up(),
        }
    }

    /// Replaces a negative lower endpoint by zero, for quantities known to be
    /// nonnegative.
    pub fn clamp_nonneg(self) -> Self {
        F64Interval {
            lo: self.lo.max(0.0),
            hi: self.hi.max(0.0),
        }
    }

    /// `self + a * b` for nonnegative operands, the inner step of the
    /// convolution.
    #[inline]
    pub fn add_mul_nonneg(self, a: F64Interval, b: F64Interval) -> Self {
        debug_assert!(self.lo >= 0.0 && a.lo >= 0.0 && b.lo >= 0.0);
        if a.hi == 0.0 || b.hi == 0.0 {
            return self;
        }
        let plo = (a.lo * b.lo).next_down().max(0.0);
        let phi = (a.hi * b.hi).next_up();
        F64Interval {
            lo: (self.lo + plo).next_down().max(0.0),
            hi: (self.hi + phi).next_up(),
        }
    }
}

impl Add for F64Interval {
    type Output = F64Interval;
    fn add(self, rhs: F64Interval) -> F64Interval {
        F64Interval::widen(self.lo + rhs.lo, self.hi + rhs.hi)
    }
}

impl Sub for F64Interval {
    type Output = F64Interval;
    fn sub(self, rhs: F64Interval) -> F64Interval {
        F64Interval::widen(self.lo - rhs.hi, self.hi - rhs.lo)
    }
}

impl Mul for F64Interval {
    type Output = F64Interval;
    fn mul(self, rhs: F64Interval) -> F64Interval {
        let p = [
            self.lo * rhs.lo,
            self.lo * rhs.hi,
            self.hi * rhs.lo,
            self.hi * rhs.hi,
        ];
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        F64Interval::widen(lo, hi)
    }
}
