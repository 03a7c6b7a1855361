//! Fixed-point reference arithmetic on big integers, independent of MPFR.
//!
//! A value `x` is held as the integer `round(x * 2^WORK)`.  Results are
//! accurate to a few units in the last place at `WORK` bits and are
//! compared at `SCALE` bits, leaving a wide guard band.

use num_bigint::BigInt;
use num_integer::Integer as _;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rug::float::Round;
use rug::Float;
use std::sync::OnceLock;

/// Comparison scale in bits.
pub const SCALE: u32 = 720;
const GUARD: u32 = 64;
const WORK: u32 = SCALE + GUARD;

fn one() -> BigInt {
    BigInt::one() << WORK
}

fn mul(a: &BigInt, b: &BigInt) -> BigInt {
    (a * b) >> WORK
}

fn div(a: &BigInt, b: &BigInt) -> BigInt {
    (a << WORK) / b
}

/// Exact fixed-point image of a finite double (inputs are kept well inside
/// the exponent range where this is exact).
pub fn from_f64(x: f64) -> BigInt {
    let (mantissa, exp, sign) = num_traits::float::FloatCore::integer_decode(x);
    let m = BigInt::from(mantissa) * i64::from(sign);
    let shift = i64::from(exp) + i64::from(WORK);
    assert!(shift >= 0, "input {x} too small for the oracle scale");
    m << shift as u32
}

fn to_f64(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits > 900 {
        let s = bits - 900;
        return (x >> s).to_f64().unwrap() * 2f64.powi(s as i32 - WORK as i32);
    }
    x.to_f64().unwrap() / 2f64.powi(WORK as i32)
}

fn atan_series(x: &BigInt) -> BigInt {
    let x2 = mul(x, x);
    let mut term = x.clone();
    let mut sum = x.clone();
    let mut k = 1u32;
    while !term.is_zero() {
        term = -mul(&term, &x2);
        sum += &term / BigInt::from(2 * k + 1);
        k += 1;
    }
    sum
}

pub fn pi() -> BigInt {
    static PI: OnceLock<BigInt> = OnceLock::new();
    PI.get_or_init(|| {
        let a = atan_series(&(one() / 5));
        let b = atan_series(&(one() / 239));
        a * 16 - b * 4
    })
    .clone()
}

pub fn sqrt(x: &BigInt) -> BigInt {
    assert!(!x.is_negative());
    (x << WORK).sqrt()
}

pub fn exp(x: &BigInt) -> BigInt {
    // bring |r| below 2^-32, then square back
    let s = (x.bits() as i64 - WORK as i64 + 32).max(0) as u32;
    let r = x >> s;
    let mut term = one();
    let mut sum = one();
    let mut k = 1u32;
    while !term.is_zero() {
        term = mul(&term, &r) / BigInt::from(k);
        sum += &term;
        k += 1;
    }
    for _ in 0..s {
        sum = mul(&sum, &sum);
    }
    sum
}

pub fn ln(x: &BigInt) -> BigInt {
    assert!(x.is_positive());
    let mut y = from_f64(to_f64(x).ln());
    // Halley iteration for exp(y) = x triples the correct bits
    for _ in 0..4 {
        let e = exp(&y);
        y += div(&((x - &e) * 2), &(x + &e));
    }
    y
}

pub fn atan(x: &BigInt) -> BigInt {
    if x.is_negative() {
        return -atan(&-x);
    }
    if *x > one() {
        return (pi() >> 1u32) - atan(&div(&one(), x));
    }
    // atan x = 2 atan(x / (1 + sqrt(1 + x^2)))
    let mut r = x.clone();
    let halvings = 8;
    for _ in 0..halvings {
        let root = sqrt(&(one() + mul(&r, &r)));
        r = div(&r, &(one() + root));
    }
    atan_series(&r) << halvings
}

/// `(sin x, cos x)`.
pub fn sin_cos(x: &BigInt) -> (BigInt, BigInt) {
    let two_pi = pi() << 1u32;
    let k = (x + (&two_pi >> 1u32)).div_floor(&two_pi);
    let r = x - k * &two_pi;
    let halvings = 16u32;
    let t = r >> halvings;
    let t2 = mul(&t, &t);
    let (mut s, mut c) = (t.clone(), one());
    let (mut ts, mut tc) = (t, one());
    let mut k = 1u32;
    while !ts.is_zero() || !tc.is_zero() {
        ts = -mul(&ts, &t2) / BigInt::from((2 * k) * (2 * k + 1));
        tc = -mul(&tc, &t2) / BigInt::from((2 * k - 1) * (2 * k));
        s += &ts;
        c += &tc;
        k += 1;
    }
    for _ in 0..halvings {
        let s2 = mul(&s, &c) << 1u32;
        let c2 = (mul(&c, &c) << 1u32) - one();
        s = s2;
        c = c2;
    }
    (s, c)
}

pub fn nearest_int_distance(x: &BigInt) -> BigInt {
    let frac = x.mod_floor(&one());
    let other = one() - &frac;
    frac.min(other)
}

pub fn add(a: &BigInt, b: &BigInt) -> BigInt {
    a + b
}

pub fn sub(a: &BigInt, b: &BigInt) -> BigInt {
    a - b
}

pub fn product(a: &BigInt, b: &BigInt) -> BigInt {
    mul(a, b)
}

pub fn quotient(a: &BigInt, b: &BigInt) -> BigInt {
    div(a, b)
}

/// `floor(x * 2^SCALE)` or `ceil(...)` of an MPFR endpoint.
pub fn endpoint(x: &Float, up: bool) -> BigInt {
    let shifted = Float::with_val(x.prec(), x << SCALE);
    let round = if up { Round::Up } else { Round::Down };
    let (i, _) = shifted.to_integer_round(round).expect("finite endpoint");
    i.to_string().parse().expect("decimal integer")
}

/// Does `[lo, hi]` fail to meet `value +- tolerance`?  `value` is at the
/// working scale; the tolerance is `2^-704` absolute plus `2^-600` relative,
/// far below the width of any 256-bit enclosure.
pub fn excludes(lo: &Float, hi: &Float, value: &BigInt) -> bool {
    let v = value >> GUARD;
    let tol = BigInt::from(1u32 << 16) + (v.abs() >> 600u32);
    endpoint(lo, false) > &v + &tol || endpoint(hi, true) < &v - &tol
}

#[cfg(test)]
mod self_checks {
    use super::*;

    fn close(a: &BigInt, b: f64) -> bool {
        (to_f64(a) - b).abs() <= 1e-15 * b.abs().max(1.0)
    }

    #[test]
    fn constants_and_functions_match_doubles() {
        assert!(close(&pi(), std::f64::consts::PI));
        assert!(close(&exp(&from_f64(1.5)), 1.5f64.exp()));
        assert!(close(&ln(&from_f64(7.25)), 7.25f64.ln()));
        assert!(close(&atan(&from_f64(3.0)), 3f64.atan()));
        let (s, c) = sin_cos(&from_f64(10.0));
        assert!(close(&s, 10f64.sin()) && close(&c, 10f64.cos()));
        assert!(close(&sqrt(&from_f64(2.0)), 2f64.sqrt()));
        let z = sub(&exp(&ln(&from_f64(3.0))), &from_f64(3.0));
        // exp squares its reduced argument ~33 times, each doubling the error
        assert!(z.abs() < BigInt::from(1u64 << 48));
    }
}
