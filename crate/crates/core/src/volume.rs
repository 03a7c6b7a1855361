//! Lower bound for the volume of the admissible set and the resulting
//! density increment.
//!
//! Each weight function `w_n` is inverted on the levels `i / ell`, giving
//! grid points `x_{n,i}` with `w_n(eps + x_{n,i}) <= i / ell`.  Every tuple
//! `(k_1, .., k_N)` with `sum k_n <= ell` then contributes the box
//! `prod [x_{n,k_n - 1}, x_{n,k_n}]`, and the sum of their volumes is a
//! truncated convolution computed by dynamic programming.

use rayon::prelude::*;
use rug::Rational;

use crate::error::{Error, Result};
use crate::penalty::PenaltyFamily;
use crate::rigor::{F64Interval, Interval};

/// Bisection stops once the bracket is narrower than this.
pub const INVERSION_TOLERANCE: f64 = 1.0 / (1u64 << 40) as f64;

#[derive(Debug, Clone)]
pub struct GridFamily {
    pub ell: usize,
    pub eps: Interval,
    /// `rows[n - 1][i] = x_{n,i}` for `i = 0..=ell`, exact doubles.
    pub rows: Vec<Vec<f64>>,
}

impl GridFamily {
    pub fn n_count(&self) -> usize {
        self.rows.len()
    }

    /// `x_{n,k} - x_{n,k-1}` for `k = 1..=ell`.
    pub fn steps(&self, n: usize) -> Vec<F64Interval> {
        self.rows[n - 1]
            .windows(2)
            .map(|w| {
                if w[1] == w[0] {
                    F64Interval::ZERO
                } else {
                    (F64Interval::point(w[1]) - F64Interval::point(w[0])).clamp_nonneg()
                }
            })
            .collect()
    }

    /// Rows whose largest point is zero.
    pub fn zero_rows(&self) -> usize {
        self.rows.iter().filter(|r| r[self.ell] == 0.0).count()
    }

    /// Re-checks ordering, the upper limit and every level inequality with
    /// the fast evaluator.
    pub fn verify(&self, family: &PenaltyFamily) -> Result<()> {
        let limit = upper_limit(&self.eps)?;
        let eps = self.eps.to_f64_interval();
        for (idx, row) in self.rows.iter().enumerate() {
            let n = idx + 1;
            if row.len() != self.ell + 1 || row[0] != 0.0 {
                return Err(Error::certification("volume", format!("grid row {n} is malformed")));
            }
            for i in 1..=self.ell {
                if row[i] < row[i - 1] || row[i] > limit {
                    return Err(Error::certification(
                        "volume",
                        format!("grid row {n} breaks the ordering at i = {i}"),
                    ));
                }
                if row[i] > 0.0 && !level_holds(family, n, eps, row[i], i, self.ell) {
                    return Err(Error::certification(
                        "volume",
                        format!("w_{n}(eps + x_{{{n},{i}}}) <= {i}/{} is not certified", self.ell),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Largest double certainly at most `1/2 - eps`.
fn upper_limit(eps: &Interval) -> Result<f64> {
    let half = Interval::from_ratio(1, 2, eps.prec().max(64));
    if !eps.is_positive() || !eps.certainly_lt(&half) {
        return Err(Error::Argument(format!("eps = {eps} is not certainly in (0, 1/2)")));
    }
    let e = eps.to_f64_interval();
    Ok((F64Interval::point(0.5) - F64Interval::point(e.hi())).lo())
}

fn level_holds(family: &PenaltyFamily, n: usize, eps: F64Interval, x: f64, i: usize, ell: usize) -> bool {
    let arg = eps + F64Interval::point(x);
    let w = family.w_fast(n, arg);
    // i / ell rounded down
    let level = (i as f64 / ell as f64).next_down();
    w.hi() <= level
}

/// Largest `x` (to within the tolerance) in `[0, limit]` with a certified
/// `w_n(eps + x) <= i / ell`, or zero if none is found.
fn invert_level(family: &PenaltyFamily, n: usize, eps: F64Interval, limit: f64, i: usize, ell: usize) -> f64 {
    if level_holds(family, n, eps, limit, i, ell) {
        return limit;
    }
    if !level_holds(family, n, eps, 0.0, i, ell) {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0f64, limit);
    while hi - lo > INVERSION_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if level_holds(family, n, eps, mid, i, ell) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Grid points for every `n` and level `i = 1..=ell`, made monotone by a
/// running maximum.
pub fn invert_w(family: &PenaltyFamily, ell: usize, eps: &Interval) -> Result<GridFamily> {
    if ell == 0 {
        return Err(Error::Argument("ell must be positive".into()));
    }
    let limit = upper_limit(eps)?;
    let e = eps.to_f64_interval();
    let n_count = family.n_count();
    let raw: Vec<f64> = (0..n_count * ell)
        .into_par_iter()
        .map(|t| invert_level(family, t / ell + 1, e, limit, t % ell + 1, ell))
        .collect();
    let rows = raw
        .chunks(ell)
        .map(|levels| {
            let mut row = Vec::with_capacity(ell + 1);
            row.push(0.0);
            let mut run = 0.0f64;
            for &x in levels {
                run = run.max(x);
                row.push(run);
            }
            row
        })
        .collect();
    Ok(GridFamily {
        ell,
        eps: eps.clone(),
        rows,
    })
}

/// Scalar types the convolution can run in.  All values are nonnegative.
pub trait DpValue: Clone + Send + Sync {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    /// `self += a * b`.
    fn add_mul(&mut self, a: &Self, b: &Self);
    fn add_ref(&mut self, other: &Self);
}

impl DpValue for F64Interval {
    fn zero_like(&self) -> Self {
        F64Interval::ZERO
    }
    fn one_like(&self) -> Self {
        F64Interval::ONE
    }
    #[inline]
    fn add_mul(&mut self, a: &Self, b: &Self) {
        *self = self.add_mul_nonneg(*a, *b);
    }
    fn add_ref(&mut self, other: &Self) {
        if other.hi() == 0.0 {
            return;
        }
        *self = (*self + *other).clamp_nonneg();
    }
}

impl DpValue for Interval {
    fn zero_like(&self) -> Self {
        Interval::zero(self.prec())
    }
    fn one_like(&self) -> Self {
        Interval::one(self.prec())
    }
    fn add_mul(&mut self, a: &Self, b: &Self) {
        *self = self.add(&a.mul(b));
    }
    fn add_ref(&mut self, other: &Self) {
        *self = self.add(other);
    }
}

impl DpValue for Rational {
    fn zero_like(&self) -> Self {
        Rational::new()
    }
    fn one_like(&self) -> Self {
        Rational::from(1)
    }
    fn add_mul(&mut self, a: &Self, b: &Self) {
        *self += Rational::from(a * b);
    }
    fn add_ref(&mut self, other: &Self) {
        *self += other;
    }
}

const CHUNK: usize = 256;

/// `sum_{i <= ell} r_i` where `r_i` sums `prod_n steps[n][k_n - 1]` over
/// `k_1 + .. + k_N = i` with every `k_n >= 1`.  Each output index is summed
/// in a fixed order, so the result does not depend on the thread count.
pub fn convolve_steps<T: DpValue>(steps: &[Vec<T>]) -> Result<T> {
    let first = steps
        .first()
        .and_then(|r| r.first())
        .ok_or_else(|| Error::Argument("empty grid".into()))?;
    let ell = steps[0].len();
    if steps.iter().any(|r| r.len() != ell) {
        return Err(Error::Argument("grid rows differ in length".into()));
    }
    let zero = first.zero_like();
    let mut g = vec![zero.clone(); ell + 1];
    g[0] = first.one_like();
    for row in steps {
        let mut next = vec![zero.clone(); ell + 1];
        next.par_chunks_mut(CHUNK).enumerate().for_each(|(c, out)| {
            for (off, slot) in out.iter_mut().enumerate() {
                let i = c * CHUNK + off;
                for k in 1..=i {
                    slot.add_mul(&g[i - k], &row[k - 1]);
                }
            }
        });
        g = next;
    }
    let mut total = zero;
    for v in &g {
        total.add_ref(v);
    }
    Ok(total)
}

/// Certified lower endpoint of the truncated convolution, in double
/// intervals.
pub fn convolve_volume(grid: &GridFamily) -> Result<Interval> {
    let steps: Vec<Vec<F64Interval>> = (1..=grid.n_count()).map(|n| grid.steps(n)).collect();
    let s = convolve_steps(&steps)?;
    Ok(Interval::from_f64_interval(s, 64))
}

/// Same sum evaluated with MPFR intervals at `prec` bits.
pub fn convolve_volume_mpfr(grid: &GridFamily, prec: u32) -> Result<Interval> {
    let steps: Vec<Vec<Interval>> = grid
        .rows
        .iter()
        .map(|row| {
            row.windows(2)
                .map(|w| {
                    Interval::from_f64(w[1], prec)
                        .sub(&Interval::from_f64(w[0], prec))
                        .clamp_nonneg()
                })
                .collect()
        })
        .collect();
    convolve_steps(&steps)
}

#[derive(Debug, Clone)]
pub struct VolumeResult {
    pub sum_r: Interval,
    /// `(2 / delta) 2^N sum_r`.
    pub kappa_increment: Interval,
    /// `gamma_0 / pi + kappa_increment`.
    pub kappa0_lower: Interval,
    /// `kappa_increment >= 1/60` is certified.
    pub meets_sixtieth: bool,
}

pub fn final_bound(sum_r: &Interval, delta: &Interval, n: usize, gamma0: &Interval) -> Result<VolumeResult> {
    let p = sum_r.prec().max(delta.prec()).max(gamma0.prec());
    let scale = Interval::from_i64(2, p).div(delta)?;
    let mut inc = scale.mul(sum_r);
    for _ in 0..n {
        inc = inc.mul_i64(2);
    }
    let inc = inc.clamp_nonneg();
    let kappa0 = gamma0.div(&Interval::pi(p))?.add(&inc);
    let meets = inc.certainly_ge(&Interval::from_ratio(1, 60, p));
    Ok(VolumeResult {
        sum_r: sum_r.clone(),
        kappa_increment: inc,
        kappa0_lower: kappa0,
        meets_sixtieth: meets,
    })
}
