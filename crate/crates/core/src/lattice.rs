//! Small integer combinations of the projected unit vectors.
//!
//! The unit vectors `e_j` are projected onto the hyperplane orthogonal to
//! `theta = omega / (2 pi)`.  A bounded LLL variant (size reduction,
//! Lovasz-type swap with `delta = 1/4`, tracked integer coefficients and an
//! early stop once a coefficient would exceed `M`) searches for integer
//! combinations with tiny entries on high-precision point values.  Its
//! output is then re-checked in interval arithmetic, together with an exact
//! determinant, to give the tiling certificate.

use rayon::prelude::*;
use rug::float::Round;
use rug::{Float, Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rigor::Interval;
use crate::zeta_data::WeightSet;

/// Bits needed to carry `digits` decimal digits.
pub fn digits_to_bits(digits: u32) -> u32 {
    (f64::from(digits) * std::f64::consts::LOG2_10).ceil() as u32
}

#[derive(Debug, Clone)]
pub struct ProjectionSet {
    pub theta: Vec<Interval>,
    pub mu: Vec<Interval>,
    /// `u[j][n]`: coordinate `n` of the projection of `e_j`.
    pub u: Vec<Vec<Interval>>,
    /// Point values of `u` used by the heuristic.
    pub shadow: Vec<Vec<Float>>,
    pub shadow_bits: u32,
    /// Largest `|u_j . theta|` upper endpoint.
    pub orthogonality_residual: Float,
}

impl ProjectionSet {
    pub fn n(&self) -> usize {
        self.theta.len()
    }
}

/// Projects `e_1..e_N` orthogonally to `theta`, in intervals at the
/// precision of `weights` and as point values with `digits` decimal digits.
pub fn make_projections(weights: &WeightSet, digits: u32) -> Result<ProjectionSet> {
    let omegas: Vec<Interval> = (1..=weights.n_active()).map(|n| weights.omega(n).clone()).collect();
    let prec = weights.prec();
    let two_pi = Interval::two_pi(prec);
    let theta = omegas.iter().map(|w| w.div(&two_pi)).collect::<std::result::Result<Vec<_>, _>>()?;
    projections_from_theta(theta, digits)
}

pub fn projections_from_theta(theta: Vec<Interval>, digits: u32) -> Result<ProjectionSet> {
    let n = theta.len();
    if n < 2 {
        return Err(Error::Argument("projections need N >= 2".into()));
    }
    let prec = theta.iter().map(Interval::prec).max().expect("n >= 2");
    let norm2 = theta.iter().fold(Interval::zero(prec), |acc, t| acc.add(&t.sqr()));
    let mu = theta.iter().map(|t| t.div(&norm2)).collect::<std::result::Result<Vec<_>, _>>()?;
    let u: Vec<Vec<Interval>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|i| {
                    let delta = Interval::from_i64(i64::from(i == j), prec);
                    delta.sub(&mu[j].mul(&theta[i]))
                })
                .collect()
        })
        .collect();
    let mut residual = Float::new(prec);
    for row in &u {
        let dot = row.iter().zip(&theta).fold(Interval::zero(prec), |acc, (a, b)| acc.add(&a.mul(b)));
        let m = dot.mag();
        if m > residual {
            residual = m;
        }
    }
    let shadow_bits = digits_to_bits(digits);
    let shadow = u
        .iter()
        .map(|row| row.iter().map(|x| Float::with_val(shadow_bits, x.mid())).collect())
        .collect();
    Ok(ProjectionSet {
        theta,
        mu,
        u,
        shadow,
        shadow_bits,
        orthogonality_residual: residual,
    })
}

/// One recorded row operation of the reduction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LllOp {
    /// `row k -= q * row j`.
    Subtract { k: usize, j: usize, q: String },
    /// Swap rows `k - 1` and `k`.
    Swap { k: usize },
}

#[derive(Debug, Clone)]
pub struct LllOutcome {
    pub c: Vec<Vec<Integer>>,
    /// `true` if the coefficient bound stopped the reduction.
    pub hit_bound: bool,
    pub ops: Vec<LllOp>,
    pub iterations: u64,
    /// Normal termination with the last Gram-Schmidt norm below the noise
    /// floor, which happens when the inputs are dependent over the rationals.
    pub final_norm_vanishes: bool,
}

/// Gram-Schmidt state with column recomputation deferred until a column is
/// read.  Deferred columns are recomputed in the same order and from the same
/// inputs as an immediate recomputation would use, so results are
/// bit-identical to the eager procedure.
struct Reducer<'a> {
    n: usize,
    bits: u32,
    u: &'a [Vec<Float>],
    c: Vec<Vec<Integer>>,
    v: Vec<Vec<Float>>,
    vstar: Vec<Vec<Float>>,
    b: Vec<Float>,
    mu: Vec<Vec<Float>>,
    /// Columns `>= stale_from` await recomputation.
    stale_from: usize,
    eager: bool,
    zero_floor: Float,
}

impl<'a> Reducer<'a> {
    fn new(u: &'a [Vec<Float>], bits: u32, bound: &Integer, eager: bool) -> Self {
        let n = u.len();
        let c = (0..n)
            .map(|k| (0..n).map(|j| Integer::from(u8::from(k == j))).collect())
            .collect();
        let v = u.to_vec();
        // rounding noise of a combination with coefficients up to `bound`
        let mut floor = Float::with_val(bits, bound);
        floor *= 16 * n as u32;
        floor >>= bits;
        floor.square_mut();
        Reducer {
            n,
            bits,
            u,
            c,
            v,
            vstar: vec![vec![Float::new(bits); n]; n],
            b: vec![Float::new(bits); n],
            mu: vec![vec![Float::new(bits); n]; n],
            stale_from: n,
            eager,
            zero_floor: floor,
        }
    }

    fn dot(&self, x: &[Float], y: &[Float]) -> Float {
        let mut s = Float::new(self.bits);
        for (a, b) in x.iter().zip(y) {
            s += Float::with_val(self.bits, a * b);
        }
        s
    }

    fn divisor(&self, a: usize) -> Result<&Float> {
        if self.b[a] <= self.zero_floor {
            return Err(Error::HeuristicFailure(format!(
                "division by a vanishing Gram-Schmidt norm B_{} (the inputs look rationally dependent)",
                a + 1
            )));
        }
        Ok(&self.b[a])
    }

    fn recompute_column(&mut self, a: usize) -> Result<()> {
        let mut vs = self.v[a].clone();
        for bb in 0..a {
            for i in 0..self.n {
                let t = Float::with_val(self.bits, &self.mu[a][bb] * &self.vstar[bb][i]);
                vs[i] -= t;
            }
        }
        self.b[a] = self.dot(&vs, &vs);
        self.vstar[a] = vs;
        for bb in a + 1..self.n {
            let num = self.dot(&self.v[bb], &self.vstar[a]);
            let q = Float::with_val(self.bits, num / self.divisor(a)?);
            self.mu[bb][a] = q;
        }
        Ok(())
    }

    fn ensure_column(&mut self, a: usize) -> Result<()> {
        while self.stale_from <= a {
            let col = self.stale_from;
            self.recompute_column(col)?;
            self.stale_from += 1;
        }
        Ok(())
    }

    /// Refreshes rows `l..=m` against the settled columns `< l` and marks
    /// columns `>= l` for recomputation.
    fn update(&mut self, l: usize, m: usize) -> Result<()> {
        if l > 0 {
            self.ensure_column(l - 1)?;
        }
        for a in 0..l {
            for bb in l..=m {
                let num = self.dot(&self.v[bb], &self.vstar[a]);
                let q = Float::with_val(self.bits, num / self.divisor(a)?);
                self.mu[bb][a] = q;
            }
        }
        self.stale_from = l;
        if self.eager {
            self.ensure_column(self.n - 1)?;
        }
        Ok(())
    }

    fn recompute_v(&mut self, k: usize) {
        let mut vk = vec![Float::new(self.bits); self.n];
        for (ci, ui) in self.c[k].iter().zip(self.u) {
            if *ci == 0 {
                continue;
            }
            for (slot, x) in vk.iter_mut().zip(ui) {
                *slot += Float::with_val(self.bits, x * ci);
            }
        }
        self.v[k] = vk;
    }
}

/// Bounded LLL on the point values `u` (rows), working at `bits` of
/// precision.  Returns the coefficient matrix at termination or at the
/// first reduction that would exceed `bound`.
pub fn lll_bounded_points(u: &[Vec<Float>], bits: u32, lll_delta: &Rational, bound: &Integer) -> Result<LllOutcome> {
    run_lll(u, bits, lll_delta, bound, false)
}

/// Same as [`lll_bounded_points`] with every Gram-Schmidt update performed
/// immediately; kept as a reference for the deferred variant.
pub fn lll_bounded_eager(u: &[Vec<Float>], bits: u32, lll_delta: &Rational, bound: &Integer) -> Result<LllOutcome> {
    run_lll(u, bits, lll_delta, bound, true)
}

fn run_lll(u: &[Vec<Float>], bits: u32, lll_delta: &Rational, bound: &Integer, eager: bool) -> Result<LllOutcome> {
    let n = u.len();
    if n < 2 {
        return Err(Error::Argument("need at least two vectors".into()));
    }
    let mut r = Reducer::new(u, bits, bound, eager);
    let delta = Float::with_val(bits, lll_delta);
    let mut ops = Vec::new();
    let mut iterations = 0u64;
    r.update(0, n - 1)?;
    let mut k = 1;
    while k < n {
        iterations += 1;
        for j in (0..k).rev() {
            r.ensure_column(j)?;
            let q = r.mu[k][j]
                .to_integer()
                .ok_or_else(|| Error::HeuristicFailure("non-finite Gram-Schmidt coefficient".into()))?;
            if q == 0 {
                // the row and every quantity derived from it stay the same
                continue;
            }
            let next: Vec<Integer> = (0..n).map(|i| Integer::from(&r.c[k][i] - &q * &r.c[j][i])).collect();
            if next.iter().any(|x| x.cmp_abs(bound) == std::cmp::Ordering::Greater) {
                return Ok(LllOutcome {
                    c: r.c,
                    hit_bound: true,
                    ops,
                    iterations,
                    final_norm_vanishes: false,
                });
            }
            r.c[k] = next;
            ops.push(LllOp::Subtract {
                k,
                j,
                q: q.to_string(),
            });
            r.recompute_v(k);
            r.update(k, k)?;
        }
        r.ensure_column(k)?;
        let mu2 = Float::with_val(bits, r.mu[k][k - 1].square_ref());
        let rhs = Float::with_val(bits, &delta - &mu2) * &r.b[k - 1];
        if r.b[k] >= rhs {
            k += 1;
        } else {
            r.c.swap(k - 1, k);
            r.v.swap(k - 1, k);
            ops.push(LllOp::Swap { k });
            r.update(k - 1, k)?;
            k = std::cmp::max(1, k - 1);
        }
    }
    r.ensure_column(n - 1)?;
    let final_norm_vanishes = r.b[n - 1] <= r.zero_floor;
    Ok(LllOutcome {
        c: r.c,
        hit_bound: false,
        ops,
        iterations,
        final_norm_vanishes,
    })
}

/// Runs the reduction on the shadow of `proj`.  A normal termination whose
/// last vector has vanished is reported as a heuristic failure.
pub fn lll_bounded(proj: &ProjectionSet, lll_delta: &Rational, bound: &Integer) -> Result<LllOutcome> {
    let out = lll_bounded_points(&proj.shadow, proj.shadow_bits, lll_delta, bound)?;
    if out.final_norm_vanishes {
        return Err(Error::HeuristicFailure(
            "reduction ended on a vanishing vector (the inputs look rationally dependent)".into(),
        ));
    }
    Ok(out)
}

/// Applies a recorded operation log to the identity matrix.
pub fn replay(n: usize, ops: &[LllOp]) -> Result<Vec<Vec<Integer>>> {
    let mut c: Vec<Vec<Integer>> = (0..n)
        .map(|k| (0..n).map(|j| Integer::from(u8::from(k == j))).collect())
        .collect();
    for op in ops {
        match op {
            LllOp::Subtract { k, j, q } => {
                let q: Integer = q
                    .parse()
                    .map_err(|_| Error::Argument(format!("bad multiplier {q} in operation log")))?;
                for i in 0..n {
                    let t = Integer::from(&q * &c[*j][i]);
                    c[*k][i] -= t;
                }
            }
            LllOp::Swap { k } => c.swap(k - 1, *k),
        }
    }
    Ok(c)
}

/// Exact determinant by fraction-free elimination.
pub fn determinant(c: &[Vec<Integer>]) -> Integer {
    let n = c.len();
    let mut a: Vec<Vec<Integer>> = c.to_vec();
    let mut sign = 1i32;
    let mut prev = Integer::from(1);
    for k in 0..n {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&r| a[r][k] != 0) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return Integer::new(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t = Integer::from(&a[i][j] * &a[k][k]) - Integer::from(&a[i][k] * &a[k][j]);
                a[i][j] = t / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    let det = a[n - 1][n - 1].clone();
    if sign < 0 {
        -det
    } else {
        det
    }
}

#[derive(Debug, Clone)]
pub struct TilingCertificate {
    pub c: Vec<Vec<Integer>>,
    pub d: Interval,
    pub det: Integer,
    /// `sum_k |sum_j c_{k,j} u_{j,n}|` for each coordinate `n`.
    pub sums: Vec<Interval>,
}

impl TilingCertificate {
    /// Largest upper endpoint among the coordinate sums.
    pub fn max_sum(&self) -> Float {
        self.sums
            .iter()
            .map(|s| s.hi().clone())
            .max_by(|a, b| a.partial_cmp(b).expect("finite"))
            .expect("N >= 1")
    }
}

/// `sum_k |sum_j c_{k,j} u_{j,n}|` for every `n`, in interval arithmetic.
pub fn coordinate_sums(c: &[Vec<Integer>], proj: &ProjectionSet) -> Vec<Interval> {
    let n = proj.n();
    let prec = proj.u[0][0].prec();
    (0..n)
        .into_par_iter()
        .map(|col| {
            let mut total = Interval::zero(prec);
            for row in c {
                let mut s = Interval::zero(prec);
                for (cj, uj) in row.iter().zip(&proj.u) {
                    if *cj != 0 {
                        s = s.add(&uj[col].mul(&Interval::from_integer(cj, prec)));
                    }
                }
                total = total.add(&s.abs());
            }
            total
        })
        .collect()
}

/// Smallest decimal with three significant digits that is at least `2 x`.
pub fn auto_target(sums: &[Interval]) -> Result<Interval> {
    let worst = sums
        .iter()
        .map(|s| s.hi().clone())
        .max_by(|a, b| a.partial_cmp(b).expect("finite"))
        .ok_or_else(|| Error::Argument("no sums".into()))?;
    let doubled = Float::with_val_round(64, &worst * 2u32, Round::Up).0;
    let text = doubled.to_string_radix_round(10, Some(3), Round::Up);
    Ok(Interval::from_decimal(&text, 64)?)
}

/// Checks the coordinate sums against `d_target` and that `C` is
/// non-singular.
pub fn certify(c: &[Vec<Integer>], proj: &ProjectionSet, d_target: &Interval) -> Result<TilingCertificate> {
    let n = proj.n();
    if c.len() != n || c.iter().any(|r| r.len() != n) {
        return Err(Error::Argument(format!("coefficient matrix must be {n} x {n}")));
    }
    let sums = coordinate_sums(c, proj);
    if let Some((worst, s)) = sums
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.certainly_lt(d_target))
        .max_by(|a, b| a.1.hi().partial_cmp(b.1.hi()).expect("finite"))
    {
        return Err(Error::certification(
            "lattice",
            format!(
                "coordinate {} sum {} is not certainly below d = {}",
                worst + 1,
                s,
                d_target
            ),
        ));
    }
    let det = determinant(c);
    if det == 0 {
        return Err(Error::certification("lattice", "coefficient matrix is singular"));
    }
    Ok(TilingCertificate {
        c: c.to_vec(),
        d: d_target.clone(),
        det,
        sums,
    })
}
