//! Interval arithmetic with outward rounding.
//!
//! An [`Interval`] is a pair of MPFR floats `[lo, hi]` with `lo <= hi`.  Every
//! operation rounds the lower endpoint toward `-inf` and the upper endpoint
//! toward `+inf`, so the result always contains the exact image of the inputs.
//! Endpoints are always finite: operations that would overflow, divide by an
//! interval containing zero, or leave a function's domain return a
//! [`RigorError`] instead of an unbounded or NaN enclosure.
//!
//! Precision is carried by the values themselves.  Binary operations produce
//! results at the larger of the two input precisions; constructors take an
//! explicit precision in bits.

mod fast;

pub use fast::F64Interval;

use std::cmp::Ordering;
use std::fmt;

use rug::float::{Constant, Round};
use rug::ops::NegAssign;
use rug::{Float, Integer, Rational};
use thiserror::Error;

/// Default working precision, in bits, for the contour and penalty stages.
pub const DEFAULT_PREC: u32 = 256;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum RigorError {
    #[error("division by an interval containing zero (divisor {0})")]
    DivisionByZero(String),
    #[error("{op}: argument {arg} is outside the domain")]
    Domain { op: &'static str, arg: String },
    #[error("{op}: result overflows the floating-point range")]
    Overflow { op: &'static str },
    #[error("invalid endpoints: {0}")]
    InvalidEndpoints(String),
    #[error("cannot parse {0:?} as a decimal literal")]
    Parse(String),
}

pub type Result<T, E = RigorError> = std::result::Result<T, E>;

#[derive(Clone, PartialEq)]
pub struct Interval {
    lo: Float,
    hi: Float,
}

/// Ring operations accepted by [`iv_ring`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Elementary functions accepted by [`iv_elementary`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Elementary {
    Exp,
    Log,
    Cos,
    Sin,
    Sqrt,
    Abs,
    Neg,
}

/// Order relations accepted by [`certainly`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    Lt,
    Le,
    Gt,
    Ge,
}

pub fn iv_ring(a: &Interval, b: &Interval, op: RingOp) -> Result<Interval> {
    Ok(match op {
        RingOp::Add => a.add(b),
        RingOp::Sub => a.sub(b),
        RingOp::Mul => a.mul(b),
        RingOp::Div => a.div(b)?,
    })
}

pub fn iv_elementary(x: &Interval, f: Elementary) -> Result<Interval> {
    match f {
        Elementary::Exp => x.exp(),
        Elementary::Log => x.ln(),
        Elementary::Cos => Ok(x.cos()),
        Elementary::Sin => Ok(x.sin()),
        Elementary::Sqrt => x.sqrt(),
        Elementary::Abs => Ok(x.abs()),
        Elementary::Neg => Ok(x.neg()),
    }
}

pub fn nearest_int_distance(x: &Interval) -> Interval {
    x.nearest_int_distance()
}

/// Returns `true` only if `a rel b` holds for every pair of points of `a` and
/// `b`.  A `false` answer means "not certified".
pub fn certainly(a: &Interval, rel: Rel, b: &Interval) -> bool {
    match rel {
        Rel::Lt => a.hi < b.lo,
        Rel::Le => a.hi <= b.lo,
        Rel::Gt => a.lo > b.hi,
        Rel::Ge => a.lo >= b.hi,
    }
}

/// Parses a decimal literal such as `-12.5e-3` into an exact rational.
pub fn parse_decimal(s: &str) -> Result<Rational> {
    let t = s.trim();
    let bad = || RigorError::Parse(t.to_string());
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, body) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((a, b)) => (a, b),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let mut num = Integer::from_str_radix(&digits, 10).map_err(|_| bad())?;
    if neg {
        num = -num;
    }
    let scale = exp - frac_part.len() as i32;
    let pow10 = |k: u32| Integer::from(Integer::u_pow_u(10, k));
    let q = if scale >= 0 {
        Rational::from(num * pow10(scale as u32))
    } else {
        Rational::from((num, pow10(scale.unsigned_abs())))
    };
    Ok(q)
}

fn down<T>(prec: u32, val: T) -> Float
where
    Float: rug::Assign<T> + rug::ops::AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(prec, val, Round::Down).0
}

fn up<T>(prec: u32, val: T) -> Float
where
    Float: rug::Assign<T> + rug::ops::AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(prec, val, Round::Up).0
}

fn min_float(a: Float, b: Float) -> Float {
    if b < a {
        b
    } else {
        a
    }
}

fn max_float(a: Float, b: Float) -> Float {
    if b > a {
        b
    } else {
        a
    }
}

impl Interval {
    /// Builds `[lo, hi]`, rejecting reversed or non-finite endpoints.
    pub fn new(lo: Float, hi: Float) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(RigorError::InvalidEndpoints(format!("[{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    /// Construction for internally computed endpoints; only checks finiteness.
    fn checked(lo: Float, hi: Float, op: &'static str) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(RigorError::Overflow { op });
        }
        debug_assert!(lo <= hi);
        Ok(Interval { lo, hi })
    }

    pub fn point(x: Float) -> Self {
        assert!(x.is_finite(), "point interval needs a finite value");
        Interval { hi: x.clone(), lo: x }
    }

    pub fn zero(prec: u32) -> Self {
        Self::point(Float::new(prec))
    }

    pub fn one(prec: u32) -> Self {
        Self::from_i64(1, prec)
    }

    pub fn from_f64(x: f64, prec: u32) -> Self {
        Self::from_f64_bounds(x, x, prec)
    }

    pub fn from_f64_bounds(lo: f64, hi: f64, prec: u32) -> Self {
        assert!(lo.is_finite() && hi.is_finite() && lo <= hi);
        Interval {
            lo: down(prec, lo),
            hi: up(prec, hi),
        }
    }

    pub fn from_i64(x: i64, prec: u32) -> Self {
        Interval {
            lo: down(prec, x),
            hi: up(prec, x),
        }
    }

    pub fn from_integer(x: &Integer, prec: u32) -> Self {
        Interval {
            lo: down(prec, x),
            hi: up(prec, x),
        }
    }

    pub fn from_rational(x: &Rational, prec: u32) -> Self {
        Interval {
            lo: down(prec, x),
            hi: up(prec, x),
        }
    }

    /// `num / den` as an enclosure; `den` must be nonzero.
    pub fn from_ratio(num: i64, den: i64, prec: u32) -> Self {
        Self::from_rational(&Rational::from((num, den)), prec)
    }

    /// Parses a decimal literal (optionally with exponent) and rounds it
    /// outward; no binary floating-point parsing is involved.
    pub fn from_decimal(s: &str, prec: u32) -> Result<Self> {
        Ok(Self::from_rational(&parse_decimal(s)?, prec))
    }

    /// Enclosure of pi, widened by one ulp on each side.
    pub fn pi(prec: u32) -> Self {
        let mut lo = down(prec, Constant::Pi);
        let mut hi = up(prec, Constant::Pi);
        lo.next_down();
        hi.next_up();
        Interval { lo, hi }
    }

    pub fn two_pi(prec: u32) -> Self {
        Self::pi(prec).mul_i64(2)
    }

    pub fn lo(&self) -> &Float {
        &self.lo
    }

    pub fn hi(&self) -> &Float {
        &self.hi
    }

    pub fn into_endpoints(self) -> (Float, Float) {
        (self.lo, self.hi)
    }

    pub fn prec(&self) -> u32 {
        self.lo.prec().max(self.hi.prec())
    }

    /// Re-rounds both endpoints outward to `prec` bits.
    pub fn with_prec(&self, prec: u32) -> Self {
        Interval {
            lo: down(prec, &self.lo),
            hi: up(prec, &self.hi),
        }
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    /// Midpoint, rounded to nearest at the interval's precision.
    pub fn mid(&self) -> Float {
        let p = self.prec();
        let mut m = Float::with_val(p + 1, &self.lo + &self.hi);
        m /= 2;
        Float::with_val(p, m)
    }

    /// Upper bound on `hi - lo`.
    pub fn width(&self) -> Float {
        up(self.prec(), &self.hi - &self.lo)
    }

    /// Upper bound on `max |x|`.
    pub fn mag(&self) -> Float {
        let a = Float::with_val(self.lo.prec(), self.lo.abs_ref());
        let b = Float::with_val(self.hi.prec(), self.hi.abs_ref());
        max_float(a, b)
    }

    /// Outward conversion to a hardware-double interval.
    pub fn to_f64_interval(&self) -> F64Interval {
        F64Interval::new(self.lo.to_f64_round(Round::Down), self.hi.to_f64_round(Round::Up))
    }

    pub fn from_f64_interval(x: F64Interval, prec: u32) -> Self {
        Self::from_f64_bounds(x.lo(), x.hi(), prec.max(53))
    }

    pub fn to_f64(&self) -> f64 {
        self.mid().to_f64()
    }

    pub fn contains_float(&self, x: &Float) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    /// `self ⊇ other`.
    pub fn contains(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.lo.cmp0() != Some(Ordering::Greater) && self.hi.cmp0() != Some(Ordering::Less)
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        let p = self.prec().max(other.prec());
        Interval {
            lo: down(p, if self.lo <= other.lo { &self.lo } else { &other.lo }),
            hi: up(p, if self.hi >= other.hi { &self.hi } else { &other.hi }),
        }
    }

    pub fn is_positive(&self) -> bool {
        self.lo.cmp0() == Some(Ordering::Greater)
    }

    pub fn is_negative(&self) -> bool {
        self.hi.cmp0() == Some(Ordering::Less)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.lo.cmp0() != Some(Ordering::Less)
    }

    pub fn certainly_lt(&self, other: &Interval) -> bool {
        certainly(self, Rel::Lt, other)
    }

    pub fn certainly_le(&self, other: &Interval) -> bool {
        certainly(self, Rel::Le, other)
    }

    pub fn certainly_gt(&self, other: &Interval) -> bool {
        certainly(self, Rel::Gt, other)
    }

    pub fn certainly_ge(&self, other: &Interval) -> bool {
        certainly(self, Rel::Ge, other)
    }

    // ---- ring operations ----

    pub fn add(&self, other: &Interval) -> Interval {
        let p = self.prec().max(other.prec());
        Interval {
            lo: down(p, &self.lo + &other.lo),
            hi: up(p, &self.hi + &other.hi),
        }
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        let p = self.prec().max(other.prec());
        Interval {
            lo: down(p, &self.lo - &other.hi),
            hi: up(p, &self.hi - &other.lo),
        }
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        let p = self.prec().max(other.prec());
        let (a, b) = (self, other);
        let a_nn = a.lo.cmp0() != Some(Ordering::Less);
        let b_nn = b.lo.cmp0() != Some(Ordering::Less);
        if a_nn && b_nn {
            return Interval {
                lo: down(p, &a.lo * &b.lo),
                hi: up(p, &a.hi * &b.hi),
            };
        }
        let lo = min_float(
            min_float(down(p, &a.lo * &b.lo), down(p, &a.lo * &b.hi)),
            min_float(down(p, &a.hi * &b.lo), down(p, &a.hi * &b.hi)),
        );
        let hi = max_float(
            max_float(up(p, &a.lo * &b.lo), up(p, &a.lo * &b.hi)),
            max_float(up(p, &a.hi * &b.lo), up(p, &a.hi * &b.hi)),
        );
        Interval { lo, hi }
    }

    pub fn div(&self, other: &Interval) -> Result<Interval> {
        Ok(self.mul(&other.recip()?))
    }

    pub fn recip(&self) -> Result<Interval> {
        if self.contains_zero() {
            return Err(RigorError::DivisionByZero(self.to_string()));
        }
        let p = self.prec();
        Interval::checked(down(p, 1 / &self.hi), up(p, 1 / &self.lo), "recip")
    }

    pub fn neg(&self) -> Interval {
        let mut lo = self.hi.clone();
        let mut hi = self.lo.clone();
        lo.neg_assign();
        hi.neg_assign();
        Interval { lo, hi }
    }

    pub fn abs(&self) -> Interval {
        if self.is_nonnegative() {
            self.clone()
        } else if self.hi.cmp0() != Some(Ordering::Greater) {
            self.neg()
        } else {
            let p = self.prec();
            let nlo = Float::with_val(p, -&self.lo);
            Interval {
                lo: Float::new(p),
                hi: max_float(nlo, self.hi.clone()),
            }
        }
    }

    pub fn sqr(&self) -> Interval {
        let a = self.abs();
        a.mul(&a)
    }

    pub fn mul_i64(&self, k: i64) -> Interval {
        self.mul(&Interval::from_i64(k, self.prec()))
    }

    pub fn mul_rational(&self, q: &Rational) -> Interval {
        self.mul(&Interval::from_rational(q, self.prec()))
    }

    /// Exact division by a power of two.
    pub fn div_2exp(&self, k: u32) -> Interval {
        let mut lo = self.lo.clone();
        let mut hi = self.hi.clone();
        lo >>= k;
        hi >>= k;
        Interval { lo, hi }
    }

    pub fn min(&self, other: &Interval) -> Interval {
        let p = self.prec().max(other.prec());
        Interval {
            lo: down(p, if self.lo <= other.lo { &self.lo } else { &other.lo }),
            hi: up(p, if self.hi <= other.hi { &self.hi } else { &other.hi }),
        }
    }

    pub fn max(&self, other: &Interval) -> Interval {
        let p = self.prec().max(other.prec());
        Interval {
            lo: down(p, if self.lo >= other.lo { &self.lo } else { &other.lo }),
            hi: up(p, if self.hi >= other.hi { &self.hi } else { &other.hi }),
        }
    }

    /// `[0, hi]` for an interval bounding a nonnegative quantity.
    pub fn clamp_lo_zero(&self) -> Interval {
        Interval {
            lo: Float::new(self.prec()),
            hi: self.hi.clone(),
        }
    }

    /// Intersection with `[0, inf)` for quantities known to be nonnegative.
    pub fn clamp_nonneg(&self) -> Interval {
        let zero = Float::new(self.prec());
        Interval {
            lo: max_float(self.lo.clone(), zero.clone()),
            hi: max_float(self.hi.clone(), zero),
        }
    }

    // ---- elementary functions ----

    pub fn exp(&self) -> Result<Interval> {
        let p = self.prec();
        Interval::checked(down(p, self.lo.exp_ref()), up(p, self.hi.exp_ref()), "exp")
    }

    pub fn ln(&self) -> Result<Interval> {
        if !self.is_positive() {
            return Err(RigorError::Domain {
                op: "log",
                arg: self.to_string(),
            });
        }
        let p = self.prec();
        Interval::checked(down(p, self.lo.ln_ref()), up(p, self.hi.ln_ref()), "log")
    }

    pub fn sqrt(&self) -> Result<Interval> {
        if !self.is_nonnegative() {
            return Err(RigorError::Domain {
                op: "sqrt",
                arg: self.to_string(),
            });
        }
        let p = self.prec();
        Ok(Interval {
            lo: down(p, self.lo.sqrt_ref()),
            hi: up(p, self.hi.sqrt_ref()),
        })
    }

    pub fn atan(&self) -> Interval {
        let p = self.prec();
        Interval {
            lo: down(p, self.lo.atan_ref()),
            hi: up(p, self.hi.atan_ref()),
        }
    }

    /// Integers `k` with `k*pi + shift*pi` possibly inside `self`, as the
    /// closed range `[first, last]` (empty when `first > last`).
    fn critical_range(&self, half_shift: bool) -> (Integer, Integer) {
        let q = self.div(&Interval::pi(self.prec())).expect("pi is positive");
        let q = if half_shift {
            q.sub(&Interval::from_ratio(1, 2, self.prec()))
        } else {
            q
        };
        let first = q.lo.to_integer_round(Round::Up).expect("finite").0;
        let last = q.hi.to_integer_round(Round::Down).expect("finite").0;
        (first, last)
    }

    /// Shared tail of `cos`/`sin`: `max_at_even` selects which parity of
    /// critical point is a maximum (+1) rather than a minimum (-1).
    fn periodic(&self, first: Integer, last: Integer, f_lo: Float, f_hi: Float, p: u32) -> Interval {
        let mut lo = min_float(f_lo.clone(), f_hi.clone());
        let mut hi = max_float(f_lo, f_hi);
        if first <= last {
            let span = Integer::from(&last - &first);
            if span >= 1 {
                return Interval {
                    lo: Float::with_val(p, -1),
                    hi: Float::with_val(p, 1),
                };
            }
            if first.is_even() {
                hi = Float::with_val(p, 1);
            } else {
                lo = Float::with_val(p, -1);
            }
        }
        let one = Float::with_val(p, 1);
        let neg_one = Float::with_val(p, -1);
        Interval {
            lo: max_float(lo, neg_one),
            hi: min_float(hi, one),
        }
    }

    fn endpoint_bounds(&self, f: impl Fn(&Float, Round) -> Float) -> (Float, Float) {
        // each endpoint value is bracketed separately, then combined
        let a_lo = f(&self.lo, Round::Down);
        let b_lo = f(&self.hi, Round::Down);
        let a_hi = f(&self.lo, Round::Up);
        let b_hi = f(&self.hi, Round::Up);
        (min_float(a_lo, b_lo), max_float(a_hi, b_hi))
    }

    pub fn cos(&self) -> Interval {
        let p = self.prec();
        if self.width() >= Interval::two_pi(p).lo {
            return Interval {
                lo: Float::with_val(p, -1),
                hi: Float::with_val(p, 1),
            };
        }
        let (first, last) = self.critical_range(false);
        let (lo, hi) = self.endpoint_bounds(|x, r| Float::with_val_round(p, x.cos_ref(), r).0);
        self.periodic(first, last, lo, hi, p)
    }

    pub fn sin(&self) -> Interval {
        let p = self.prec();
        if self.width() >= Interval::two_pi(p).lo {
            return Interval {
                lo: Float::with_val(p, -1),
                hi: Float::with_val(p, 1),
            };
        }
        // extrema of sin sit at pi/2 + k*pi: maxima for even k
        let (first, last) = self.critical_range(true);
        let (lo, hi) = self.endpoint_bounds(|x, r| Float::with_val_round(p, x.sin_ref(), r).0);
        self.periodic(first, last, lo, hi, p)
    }

    /// Enclosure of `‖t‖`, the distance from `t` to the nearest integer.
    pub fn nearest_int_distance(&self) -> Interval {
        let p = self.prec();
        let half = Float::with_val(p, 0.5);
        if self.width() >= 1 {
            return Interval {
                lo: Float::new(p),
                hi: half,
            };
        }
        let base = self.lo.to_integer_round(Round::Down).expect("finite").0;
        // shifted endpoints lie in [0, 2)
        let ylo = down(p, &self.lo - &base);
        let yhi = up(p, &self.hi - &base);
        let dist = |y: &Float, r: Round| -> Float {
            if *y <= 0.5 {
                Float::with_val_round(p, y, r).0
            } else if *y <= 1 {
                Float::with_val_round(p, 1 - y, r).0
            } else if *y <= 1.5 {
                Float::with_val_round(p, y - 1u32, r).0
            } else {
                Float::with_val_round(p, 2 - y, r).0
            }
        };
        let contains = |t: f64| ylo <= t && t <= yhi;
        let lo = if contains(0.0) || contains(1.0) || contains(2.0) {
            Float::new(p)
        } else {
            min_float(dist(&ylo, Round::Down), dist(&yhi, Round::Down))
        };
        let hi = if contains(0.5) || contains(1.5) {
            half.clone()
        } else {
            max_float(dist(&ylo, Round::Up), dist(&yhi, Round::Up))
        };
        Interval {
            lo: max_float(lo, Float::new(p)),
            hi: min_float(hi, half),
        }
    }

    /// Decimal rendering of the endpoints, each rounded outward to `digits`
    /// significant digits.
    pub fn to_decimal_pair(&self, digits: usize) -> (String, String) {
        (
            self.lo.to_string_radix_round(10, Some(digits), Round::Down),
            self.hi.to_string_radix_round(10, Some(digits), Round::Up),
        )
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(20);
        let (lo, hi) = self.to_decimal_pair(digits);
        write!(f, "[{lo}, {hi}]")
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Interval{}", self)
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident) => {
        impl std::ops::$trait<&Interval> for &Interval {
            type Output = Interval;
            fn $method(self, rhs: &Interval) -> Interval {
                Interval::$method(self, rhs)
            }
        }
        impl std::ops::$trait<Interval> for Interval {
            type Output = Interval;
            fn $method(self, rhs: Interval) -> Interval {
                Interval::$method(&self, &rhs)
            }
        }
        impl std::ops::$trait<&Interval> for Interval {
            type Output = Interval;
            fn $method(self, rhs: &Interval) -> Interval {
                Interval::$method(&self, rhs)
            }
        }
    };
}

impl_binop!(Add, add);
impl_binop!(Sub, sub);
impl_binop!(Mul, mul);

impl std::ops::Neg for &Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval::neg(self)
    }
}

impl std::ops::Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval::neg(&self)
    }
}
