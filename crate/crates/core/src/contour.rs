//! The rectangular contour, its discretization into `m` straight segments and
//! the per-segment lower bounds `u_j` for the rotated truncated function.
//!
//! Mesh parameters `t_j = j/m` are exact rationals, and so are the affine
//! coordinates of every mesh point: `Re z = a*delta` and
//! `Im z = Y0*(1-b) + Y1*b`.  Only `delta`, `Y0`, `Y1` and the function values
//! are intervals.

use std::collections::BTreeMap;

use rayon::prelude::*;
use rug::Rational;

use crate::error::{Error, Result};
use crate::rigor::{Interval, RigorError};
use crate::tail::{tail_bound_detail, TailBound, TailBoundConfig};
use crate::zeta_data::WeightSet;

#[derive(Debug, Clone)]
pub struct ContourConfig {
    pub delta: Interval,
    pub y0: Interval,
    pub y1: Interval,
    pub m: usize,
    /// `(s, alpha(s))` for the piecewise-linear rotation profile on `[0, 1/2]`.
    pub breakpoints: Vec<(Rational, Interval)>,
}

impl ContourConfig {
    pub fn new(delta: Interval, y0: Interval, y1: Interval, m: usize, breakpoints: Vec<(Rational, Interval)>) -> Result<Self> {
        let cfg = ContourConfig {
            delta,
            y0,
            y1,
            m,
            breakpoints,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The published contour: `delta = 0.132737`, `Y0 = 0.0468918`,
    /// `Y1 = 0.14` and its rotation profile.
    pub fn published(m: usize, prec: u32) -> Result<Self> {
        let dec = |s: &str| Interval::from_decimal(s, prec);
        Self::new(
            dec("0.132737")?,
            dec("0.0468918")?,
            dec("0.14")?,
            m,
            published_breakpoints(prec)?,
        )
    }

    fn validate(&self) -> Result<()> {
        if !self.delta.is_positive() || !self.y0.is_positive() || !self.y0.certainly_lt(&self.y1) {
            return Err(Error::Argument("contour needs delta > 0 and 0 < Y0 < Y1".into()));
        }
        if self.m < 2 || self.m % 2 != 0 {
            return Err(Error::Argument(format!("m = {} must be even and at least 2", self.m)));
        }
        let bp = &self.breakpoints;
        if bp.len() < 2 {
            return Err(Error::Argument("need at least two alpha breakpoints".into()));
        }
        let (s0, v0) = &bp[0];
        let (s1, v1) = &bp[bp.len() - 1];
        let pi = Interval::pi(v1.prec());
        if *s0 != 0 || !v0.contains_zero() || *s1 != Rational::from((1, 2)) || !v1.overlaps(&pi) {
            return Err(Error::Argument("alpha breakpoints must run from (0, 0) to (1/2, pi)".into()));
        }
        if bp.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Argument("alpha breakpoint abscissas must increase".into()));
        }
        Ok(())
    }

    /// `alpha(s)` for rational `s` in `[0, 1/2]` by linear interpolation.
    pub fn alpha_profile(&self, s: &Rational) -> Result<Interval> {
        let bp = &self.breakpoints;
        if *s < 0 || *s > Rational::from((1, 2)) {
            return Err(Error::Argument(format!("alpha profile evaluated at {s} outside [0, 1/2]")));
        }
        let k = bp
            .windows(2)
            .position(|w| *s <= w[1].0)
            .expect("s is within the breakpoint range");
        let (sa, va) = &bp[k];
        let (sb, vb) = &bp[k + 1];
        let w = Rational::from(s - sa) / Rational::from(sb - sa);
        let one_minus = Rational::from(1 - &w);
        Ok(va.mul_rational(&one_minus).add(&vb.mul_rational(&w)))
    }
}

pub fn published_breakpoints(prec: u32) -> Result<Vec<(Rational, Interval)>> {
    let dec = |s: &str| Interval::from_decimal(s, prec);
    Ok(vec![
        (Rational::from(0), Interval::zero(prec)),
        (Rational::from((1, 32)), dec("0.489819")?),
        (Rational::from((1, 8)), dec("1.85802")?),
        (Rational::from((3, 16)), dec("2.04829")?),
        (Rational::from((3, 8)), dec("2.90189")?),
        (Rational::from((1, 2)), Interval::pi(prec)),
    ])
}

/// Affine coordinates `(a, b)` of `z1(t)`: `Re = a*delta`,
/// `Im = Y0 + b*(Y1 - Y0)`.
pub fn contour_coords(t: &Rational) -> Result<(Rational, Rational)> {
    if *t < 0 || *t > 1 {
        return Err(Error::Argument(format!("contour parameter {t} outside [0, 1]")));
    }
    let q = |n: i32, d: i32| Rational::from((n, d));
    let four_t = Rational::from(t * 4u32);
    Ok(if *t <= q(1, 8) {
        (four_t, q(0, 1))
    } else if *t <= q(3, 8) {
        (q(1, 2), four_t - q(1, 2))
    } else if *t <= q(5, 8) {
        (Rational::from(2 - four_t), q(1, 1))
    } else if *t <= q(7, 8) {
        (q(-1, 2), Rational::from(q(7, 2) - four_t))
    } else {
        (four_t - 4u32, q(0, 1))
    })
}

fn real_part(a: &Rational, cfg: &ContourConfig) -> Interval {
    cfg.delta.mul_rational(a)
}

fn imag_part(b: &Rational, cfg: &ContourConfig) -> Interval {
    if *b == 0 {
        return cfg.y0.clone();
    }
    if *b == 1 {
        return cfg.y1.clone();
    }
    let one_minus = Rational::from(1 - b);
    cfg.y0.mul_rational(&one_minus).add(&cfg.y1.mul_rational(b))
}

/// `z1(t)` as `(Re, Im)`.
pub fn z1_point(t: &Rational, cfg: &ContourConfig) -> Result<(Interval, Interval)> {
    let (a, b) = contour_coords(t)?;
    Ok((real_part(&a, cfg), imag_part(&b, cfg)))
}

/// `alpha_0 .. alpha_{m+1}`.
pub fn alpha_schedule(cfg: &ContourConfig) -> Result<Vec<Interval>> {
    let m = cfg.m;
    let prec = cfg.breakpoints[0].1.prec().max(cfg.delta.prec());
    let pi = Interval::pi(prec);
    let two_pi = pi.mul_i64(2);
    let mut alphas = vec![Interval::zero(prec); m + 2];
    for (j, slot) in alphas.iter_mut().enumerate().take(m + 1).skip(1) {
        *slot = if j <= m / 2 {
            let s = Rational::from(((2 * j - 1) as i64, (2 * m) as i64));
            pi.neg().add(&cfg.alpha_profile(&s)?)
        } else {
            let s = Rational::from(((2 * m + 1 - 2 * j) as i64, (2 * m) as i64));
            pi.sub(&cfg.alpha_profile(&s)?)
        };
    }
    alphas[m + 1] = two_pi.add(&alphas[1]);
    alphas[0] = alphas[m].sub(&two_pi);
    Ok(alphas)
}

/// A complex value as a pair of intervals.
#[derive(Debug, Clone)]
pub struct Complex {
    pub re: Interval,
    pub im: Interval,
}

impl Complex {
    /// `Re(self * e^{-i alpha})` given `cos alpha` and `sin alpha`.
    pub fn re_rotated(&self, cos_a: &Interval, sin_a: &Interval) -> Interval {
        self.re.mul(cos_a).add(&self.im.mul(sin_a))
    }
}

/// Values of the truncated function and its derivative at one point.
#[derive(Debug, Clone)]
pub struct PointValues {
    pub big_f: Complex,
    pub f: Complex,
}

fn require_upper_half(im: &Interval) -> Result<()> {
    if !im.is_positive() {
        return Err(RigorError::Domain {
            op: "truncated function",
            arg: format!("Im z = {im}"),
        }
        .into());
    }
    Ok(())
}

/// `F(z) = 1 - sum_{n<=N} amp_n e^{i omega_n z}` and
/// `f(z) = F'(z) = -sum i omega_n amp_n e^{i omega_n z}`.
pub fn eval_point(re: &Interval, im: &Interval, weights: &WeightSet) -> Result<PointValues> {
    require_upper_half(im)?;
    let p = weights.prec().max(re.prec());
    let mut s_re = Interval::zero(p);
    let mut s_im = Interval::zero(p);
    let mut d_re = Interval::zero(p);
    let mut d_im = Interval::zero(p);
    for n in 1..=weights.n_active() {
        let om = weights.omega(n);
        let mag = weights.amp(n).mul(&om.mul(im).neg().exp()?);
        let phase = om.mul(re);
        let c = mag.mul(&phase.cos());
        let s = mag.mul(&phase.sin());
        d_re = d_re.add(&om.mul(&s));
        d_im = d_im.sub(&om.mul(&c));
        s_re = s_re.add(&c);
        s_im = s_im.add(&s);
    }
    Ok(PointValues {
        big_f: Complex {
            re: Interval::one(p).sub(&s_re),
            im: s_im.neg(),
        },
        f: Complex { re: d_re, im: d_im },
    })
}

pub fn eval_fneta(re: &Interval, im: &Interval, weights: &WeightSet) -> Result<Complex> {
    Ok(eval_point(re, im, weights)?.big_f)
}

pub fn eval_f(re: &Interval, im: &Interval, weights: &WeightSet) -> Result<Complex> {
    Ok(eval_point(re, im, weights)?.f)
}

/// `M = sum_{n<=N} amp_n omega_n^2 e^{-omega_n y}`, which bounds `|f'(z)|`
/// for `Im z >= y`.
pub fn derivative_bound(y: &Interval, weights: &WeightSet) -> Result<Interval> {
    require_upper_half(y)?;
    let mut sum = Interval::zero(weights.prec());
    for n in 1..=weights.n_active() {
        let om = weights.omega(n);
        sum = sum.add(&weights.amp(n).mul(&om.sqr()).mul(&om.mul(y).neg().exp()?));
    }
    Ok(sum)
}

#[derive(Debug, Clone)]
pub struct MeshPoint {
    pub a: Rational,
    pub b: Rational,
    pub re: Interval,
    pub im: Interval,
    pub values: PointValues,
}

#[derive(Debug, Clone)]
pub struct Segment {
    /// Half the segment length.
    pub half_len: Interval,
    pub x_lo: Interval,
    pub x_hi: Interval,
    /// `(x'' - x')/delta` as an exact rational.
    pub dx_over_delta: Rational,
    pub y: Interval,
    pub y_coord: Rational,
    pub m_bound: Interval,
    pub tail: Interval,
    /// Lower bound for the rotated real part on the first half, before
    /// subtracting the curvature and tail terms.
    pub start_bound: Interval,
    pub end_bound: Interval,
    pub u: Interval,
}

/// Worst-case margins of the three mesh claims.
#[derive(Debug, Clone)]
pub struct MeshDiagnostics {
    /// `min_j (pi - |alpha_j - alpha_{j-1}|)`, lower endpoint.
    pub alpha_step_margin: Interval,
    pub alpha_step_worst_j: usize,
    /// `min_j (pi/omega_N - |z(t_j) - z(t_{j-1})|)`.
    pub length_margin: Interval,
    pub length_worst_j: usize,
    pub min_u: Interval,
    pub min_u_j: usize,
    pub tail_at_y0: TailBound,
}

#[derive(Debug, Clone)]
pub struct ContourMesh {
    pub cfg: ContourConfig,
    pub alphas: Vec<Interval>,
    pub cos_alpha: Vec<Interval>,
    pub sin_alpha: Vec<Interval>,
    pub points: Vec<MeshPoint>,
    /// Segment `j` is stored at index `j - 1`.
    pub segments: Vec<Segment>,
    pub diagnostics: MeshDiagnostics,
}

impl ContourMesh {
    pub fn m(&self) -> usize {
        self.cfg.m
    }

    pub fn segment(&self, j: usize) -> &Segment {
        &self.segments[j - 1]
    }

    /// Checks that `|alpha_j - alpha_{j-1}| < pi`, that every segment is
    /// shorter than `pi/omega_N`, and that every `u_j > 0`.
    pub fn certify(&self) -> Result<()> {
        let d = &self.diagnostics;
        if !d.alpha_step_margin.is_positive() {
            return Err(Error::certification(
                "mesh",
                format!(
                    "|alpha_j - alpha_(j-1)| < pi not certified at j = {} (margin {})",
                    d.alpha_step_worst_j, d.alpha_step_margin
                ),
            ));
        }
        if !d.length_margin.is_positive() {
            return Err(Error::certification(
                "mesh",
                format!(
                    "segment length < pi/omega_N not certified at j = {} (margin {})",
                    d.length_worst_j, d.length_margin
                ),
            ));
        }
        if !d.min_u.is_positive() {
            return Err(Error::certification(
                "mesh",
                format!("u_j > 0 not certified at j = {} (u_j = {})", d.min_u_j, d.min_u),
            ));
        }
        Ok(())
    }
}

/// Builds the mesh and all per-segment bounds without judging them.
pub fn build_mesh_uncertified(cfg: &ContourConfig, weights: &WeightSet, tail: &TailBoundConfig) -> Result<ContourMesh> {
    let m = cfg.m;
    let prec = weights.prec();
    let alphas = alpha_schedule(cfg)?;
    let cos_alpha: Vec<Interval> = alphas.par_iter().map(Interval::cos).collect();
    let sin_alpha: Vec<Interval> = alphas.par_iter().map(Interval::sin).collect();

    let points: Vec<MeshPoint> = (0..=m)
        .into_par_iter()
        .map(|j| -> Result<MeshPoint> {
            let t = Rational::from((j as i64, m as i64));
            let (a, b) = contour_coords(&t)?;
            let re = real_part(&a, cfg);
            let im = imag_part(&b, cfg);
            let values = eval_point(&re, &im, weights)?;
            Ok(MeshPoint { a, b, re, im, values })
        })
        .collect::<Result<_>>()?;

    // every segment's lowest point sits at one of the mesh ordinates, so the
    // tail and derivative bounds are shared between segments
    let mut y_keys: BTreeMap<Rational, ()> = BTreeMap::new();
    for j in 1..=m {
        let b = std::cmp::min(&points[j - 1].b, &points[j].b).clone();
        y_keys.insert(b, ());
    }
    let y_list: Vec<Rational> = y_keys.into_keys().collect();
    let per_y: Vec<(TailBound, Interval)> = y_list
        .par_iter()
        .map(|b| -> Result<(TailBound, Interval)> {
            let y = imag_part(b, cfg);
            Ok((tail_bound_detail(&y, weights, tail)?, derivative_bound(&y, weights)?))
        })
        .collect::<Result<_>>()?;
    let per_y: BTreeMap<Rational, (TailBound, Interval)> = y_list.into_iter().zip(per_y).collect();

    let segments: Vec<Segment> = (1..=m)
        .into_par_iter()
        .map(|j| -> Result<Segment> {
            let (p0, p1) = (&points[j - 1], &points[j]);
            let da = Rational::from(&p1.a - &p0.a);
            let db = Rational::from(&p1.b - &p0.b);
            let dre = cfg.delta.mul_rational(&da);
            let dim = cfg.y1.sub(&cfg.y0).mul_rational(&db);
            let half_len = dre.sqr().add(&dim.sqr()).sqrt()?.div_2exp(1);
            let (a_lo, a_hi) = if p0.a <= p1.a { (&p0.a, &p1.a) } else { (&p1.a, &p0.a) };
            let y_coord = std::cmp::min(&p0.b, &p1.b).clone();
            let y = imag_part(&y_coord, cfg);
            let (tb, m_bound) = &per_y[&y_coord];
            let (ca, sa) = (&cos_alpha[j], &sin_alpha[j]);
            let zero = Interval::zero(prec);
            let start_slope = p0.values.f.re_rotated(ca, sa).mul(&half_len);
            let start_bound = p0.values.big_f.re_rotated(ca, sa).add(&start_slope.min(&zero));
            let end_slope = p1.values.f.re_rotated(ca, sa).mul(&half_len).neg();
            let end_bound = p1.values.big_f.re_rotated(ca, sa).add(&end_slope.min(&zero));
            let curvature = half_len.sqr().mul(m_bound).div_2exp(1);
            let u = start_bound.min(&end_bound).sub(&curvature).sub(&tb.total);
            Ok(Segment {
                half_len,
                x_lo: real_part(a_lo, cfg),
                x_hi: real_part(a_hi, cfg),
                dx_over_delta: Rational::from(a_hi - a_lo),
                y,
                y_coord,
                m_bound: m_bound.clone(),
                tail: tb.total.clone(),
                start_bound,
                end_bound,
                u,
            })
        })
        .collect::<Result<_>>()?;

    let pi = Interval::pi(prec);
    let pi_over_omega = pi.div(weights.omega(weights.n_active()))?;
    let mut diag: Option<MeshDiagnostics> = None;
    let y0_tail = per_y[&Rational::from(0)].0.clone();
    for j in 1..=m {
        let step = pi.sub(&alphas[j].sub(&alphas[j - 1]).abs());
        let len = pi_over_omega.sub(&segments[j - 1].half_len.mul_i64(2));
        let u = &segments[j - 1].u;
        match &mut diag {
            None => {
                diag = Some(MeshDiagnostics {
                    alpha_step_margin: step,
                    alpha_step_worst_j: j,
                    length_margin: len,
                    length_worst_j: j,
                    min_u: u.clone(),
                    min_u_j: j,
                    tail_at_y0: y0_tail.clone(),
                })
            }
            Some(d) => {
                if step.lo() < d.alpha_step_margin.lo() {
                    d.alpha_step_margin = step;
                    d.alpha_step_worst_j = j;
                }
                if len.lo() < d.length_margin.lo() {
                    d.length_margin = len;
                    d.length_worst_j = j;
                }
                if u.lo() < d.min_u.lo() {
                    d.min_u = u.clone();
                    d.min_u_j = j;
                }
            }
        }
    }
    Ok(ContourMesh {
        cfg: cfg.clone(),
        alphas,
        cos_alpha,
        sin_alpha,
        points,
        segments,
        diagnostics: diag.expect("m >= 2"),
    })
}

/// Builds the mesh and certifies the segment-step, segment-length and
/// positivity claims.
pub fn build_mesh(cfg: &ContourConfig, weights: &WeightSet, tail: &TailBoundConfig) -> Result<ContourMesh> {
    let mesh = build_mesh_uncertified(cfg, weights, tail)?;
    mesh.certify()?;
    Ok(mesh)
}

/// How the phase band of one `(n, j)` pair was classified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandKind {
    /// An even multiple of `pi` lies in `[beta', beta'']`.
    EvenStraddle,
    /// An odd multiple of `pi` lies in `[beta', beta'']`.
    OddStraddle,
    /// No multiple of `pi` lies in the band.
    Clear,
    /// None of the above could be certified; the band is widened to
    /// `[0, pi]`.
    Fallback,
}

/// Bounds `phi' <= 2 pi ||phi_n(t)/(2 pi)|| <= phi''` on one segment.
#[derive(Debug, Clone)]
pub struct Band {
    pub phi_lo: Interval,
    pub phi_hi: Interval,
    pub kind: BandKind,
}

#[derive(Debug, Clone)]
pub struct BandTable {
    n_count: usize,
    bands: Vec<Band>,
    /// Smallest certified `pi - (beta'' - beta')` and where it occurs.
    pub width_margin: Interval,
    pub width_worst: (usize, usize),
    pub fallback_count: usize,
}

impl BandTable {
    pub fn get(&self, n: usize, j: usize) -> &Band {
        &self.bands[(j - 1) * self.n_count + (n - 1)]
    }

    pub fn n_count(&self) -> usize {
        self.n_count
    }

    pub fn m(&self) -> usize {
        self.bands.len() / self.n_count
    }
}

/// `2 pi ||beta/(2 pi)||`.
fn folded(beta: &Interval, two_pi: &Interval) -> Result<Interval> {
    Ok(two_pi.mul(&beta.div(two_pi)?.nearest_int_distance()))
}

/// Classifies one band `[beta', beta'']` and assigns `(phi', phi'')`.
pub fn classify_band(beta_lo: &Interval, beta_hi: &Interval) -> Result<Band> {
    let p = beta_lo.prec().max(beta_hi.prec());
    let pi = Interval::pi(p);
    let two_pi = pi.mul_i64(2);
    let q_lo = beta_lo.div(&pi)?;

    let k = q_lo.lo().to_integer_round(rug::float::Round::Down).expect("finite").0;
    let k_iv = Interval::from_integer(&k, p);
    let k1_iv = Interval::from_integer(&rug::Integer::from(&k + 1), p);
    let clear = k_iv.mul(&pi).certainly_lt(beta_lo) && beta_hi.certainly_lt(&k1_iv.mul(&pi));

    let candidate = q_lo.hi().to_integer_round(rug::float::Round::Up).expect("finite").0;
    let kpi = Interval::from_integer(&candidate, p).mul(&pi);
    let straddle = beta_lo.certainly_le(&kpi) && kpi.certainly_le(beta_hi);

    let f_lo = folded(beta_lo, &two_pi)?;
    let f_hi = folded(beta_hi, &two_pi)?;
    let band = if clear {
        Band {
            phi_lo: f_lo.min(&f_hi),
            phi_hi: f_lo.max(&f_hi),
            kind: BandKind::Clear,
        }
    } else if straddle && candidate.is_even() {
        Band {
            phi_lo: Interval::zero(p),
            phi_hi: f_lo.max(&f_hi),
            kind: BandKind::EvenStraddle,
        }
    } else if straddle {
        Band {
            phi_lo: f_lo.min(&f_hi),
            phi_hi: pi,
            kind: BandKind::OddStraddle,
        }
    } else {
        Band {
            phi_lo: Interval::zero(p),
            phi_hi: pi,
            kind: BandKind::Fallback,
        }
    };
    Ok(band)
}

/// Phase bands for `n = 1..N`, `j = 1..m`.  Fails unless every band is
/// certified narrower than `pi`.
pub fn band_angles(mesh: &ContourMesh, weights: &WeightSet) -> Result<BandTable> {
    let n_count = weights.n_active();
    let m = mesh.m();
    let prec = weights.prec();
    let pi = Interval::pi(prec);
    let rows: Vec<(Vec<Band>, Interval, usize)> = (1..=m)
        .into_par_iter()
        .map(|j| -> Result<(Vec<Band>, Interval, usize)> {
            let seg = mesh.segment(j);
            let alpha = &mesh.alphas[j];
            let dx = mesh.cfg.delta.mul_rational(&seg.dx_over_delta);
            let mut bands = Vec::with_capacity(n_count);
            let mut worst = None::<(Interval, usize)>;
            for n in 1..=n_count {
                let om = weights.omega(n);
                let width_margin = pi.sub(&om.mul(&dx));
                if worst.as_ref().is_none_or(|(w, _)| width_margin.lo() < w.lo()) {
                    worst = Some((width_margin, n));
                }
                let beta_lo = pi.add(&om.mul(&seg.x_lo)).sub(alpha);
                let beta_hi = pi.add(&om.mul(&seg.x_hi)).sub(alpha);
                bands.push(classify_band(&beta_lo, &beta_hi)?);
            }
            let (w, n) = worst.expect("N >= 1");
            Ok((bands, w, n))
        })
        .collect::<Result<_>>()?;

    let mut bands = Vec::with_capacity(m * n_count);
    let mut width_margin: Option<Interval> = None;
    let mut width_worst = (0, 0);
    for (j, (row, w, n)) in rows.into_iter().enumerate() {
        if width_margin.as_ref().is_none_or(|cur| w.lo() < cur.lo()) {
            width_margin = Some(w);
            width_worst = (n, j + 1);
        }
        bands.extend(row);
    }
    let width_margin = width_margin.expect("m >= 2");
    if !width_margin.is_positive() {
        return Err(Error::certification(
            "mesh",
            format!(
                "beta'' - beta' < pi not certified at n = {}, j = {} (margin {})",
                width_worst.0, width_worst.1, width_margin
            ),
        ));
    }
    let fallback_count = bands.iter().filter(|b| b.kind == BandKind::Fallback).count();
    Ok(BandTable {
        n_count,
        bands,
        width_margin,
        width_worst,
        fallback_count,
    })
}
