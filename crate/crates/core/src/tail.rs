//! Upper bounds for the contribution of the zeros left out of the truncated
//! function.
//!
//! The tail `sum_{n > N} |rho_0/rho_n| e^{-omega_n y}` is split at `N'`: the
//! terms `N < n <= N'` are summed directly and everything beyond is bounded
//! in closed form via the zero-counting estimate with a cut `T_1` strictly
//! between `gamma_{N'}` and `gamma_{N'+1}`.

use crate::error::{Error, Result};
use crate::rigor::{Interval, RigorError};
use crate::zeta_data::WeightSet;

#[derive(Debug, Clone)]
pub struct TailBoundConfig {
    n: usize,
    n_prime: usize,
    t1: Interval,
}

impl TailBoundConfig {
    /// Uses the midpoint `T_1 = (gamma_{N'} + gamma_{N'+1}) / 2`.
    pub fn new(weights: &WeightSet, n_prime: usize) -> Result<Self> {
        if n_prime + 1 > weights.len() {
            return Err(Error::Argument(format!(
                "N' = {n_prime} needs gamma_{} but the table stops at gamma_{}",
                n_prime + 1,
                weights.len()
            )));
        }
        let t1 = weights.gamma(n_prime).add(weights.gamma(n_prime + 1)).div_2exp(1);
        Self::with_t1(weights, n_prime, t1)
    }

    pub fn with_t1(weights: &WeightSet, n_prime: usize, t1: Interval) -> Result<Self> {
        let n = weights.n_active();
        if n_prime <= n {
            return Err(Error::Argument(format!("N' = {n_prime} must exceed N = {n}")));
        }
        if n_prime + 1 > weights.len() {
            return Err(Error::Argument(format!("N' = {n_prime} is beyond the zero table")));
        }
        if !weights.gamma(n_prime).certainly_lt(&t1) || !t1.certainly_lt(weights.gamma(n_prime + 1)) {
            return Err(Error::Validation(format!(
                "T1 = {t1} is not certainly between gamma_{n_prime} and gamma_{}",
                n_prime + 1
            )));
        }
        Ok(TailBoundConfig { n, n_prime, t1 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_prime(&self) -> usize {
        self.n_prime
    }

    pub fn t1(&self) -> &Interval {
        &self.t1
    }
}

/// Which closed-form estimate produced the smaller upper endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum TailBranch {
    /// The estimate valid for all `y > 0`.
    General,
    /// The estimate with `log^2 y` terms, valid when `T_1 y <= 1`.
    SmallY,
}

#[derive(Debug, Clone)]
pub struct TailBound {
    /// Finite sum over `N < n <= N'`.
    pub finite: Interval,
    /// Closed-form part, lower endpoint clamped to zero.
    pub beyond: Interval,
    pub branch: TailBranch,
    /// `finite + beyond`.
    pub total: Interval,
}

fn require_positive(y: &Interval, what: &'static str) -> Result<()> {
    if !y.is_positive() {
        return Err(RigorError::Domain {
            op: what,
            arg: y.to_string(),
        }
        .into());
    }
    Ok(())
}

/// Both closed-form estimates as computed enclosures, before clamping.  The
/// second is `None` unless `T_1 y <= 1` is certified.
pub fn lemma5_branches(
    y: &Interval,
    t1: &Interval,
    rho0_abs: &Interval,
    gamma0: &Interval,
) -> Result<(Interval, Option<Interval>)> {
    require_positive(y, "tail bound")?;
    require_positive(t1, "tail bound")?;
    let p = y.prec().max(t1.prec());
    let pi = Interval::pi(p);
    let two_pi = pi.mul_i64(2);
    let log_t1 = t1.ln()?;
    let t1y = t1.mul(y);
    // |rho_0| e^{gamma_0 y} / e^{T_1 y}
    let scale = rho0_abs.mul(&gamma0.mul(y).sub(&t1y).exp()?);

    let first_inner = log_t1
        .div(&two_pi.mul(y))?
        .add(&log_t1.mul_i64(4))
        .add(&Interval::from_i64(2, p).div(&t1y)?);
    let first = scale.div(t1)?.mul(&first_inner);

    let one = Interval::one(p);
    let second = if t1y.certainly_le(&one) {
        let log_y = y.ln()?;
        let inner = log_y
            .sqr()
            .div(&pi.mul_i64(4))?
            .add(&log_t1.mul_i64(4).div(t1)?)
            .add(&Interval::from_i64(2, p).div(t1)?);
        let extra = rho0_abs
            .mul(&gamma0.mul(y).sub(&one).exp()?)
            .mul(&log_y.abs())
            .div(&two_pi)?;
        Some(scale.mul(&inner).add(&extra))
    } else {
        None
    };
    Ok((first, second))
}

/// Closed-form upper bound for `sum_{n > N'} |rho_0/rho_n| e^{-omega_n y}`
/// given `gamma_{N'} < T_1 < gamma_{N'+1}`, as `[0, u]`.
pub fn lemma5_tail(y: &Interval, t1: &Interval, rho0_abs: &Interval, gamma0: &Interval) -> Result<Interval> {
    Ok(lemma5_tail_detail(y, t1, rho0_abs, gamma0)?.0)
}

fn lemma5_tail_detail(
    y: &Interval,
    t1: &Interval,
    rho0_abs: &Interval,
    gamma0: &Interval,
) -> Result<(Interval, TailBranch)> {
    let (first, second) = lemma5_branches(y, t1, rho0_abs, gamma0)?;
    let (best, branch) = match second {
        Some(s) if s.hi() < first.hi() => (s, TailBranch::SmallY),
        _ => (first, TailBranch::General),
    };
    Ok((best.clamp_lo_zero(), branch))
}

/// `sum_{n=from}^{to} amp_n e^{-omega_n y}`, stopping early once the
/// remaining terms are provably below the working precision; the skipped
/// terms are covered by `[0, count * last_term]` since the summands decrease
/// in `n`.
pub fn direct_sum(y: &Interval, weights: &WeightSet, from: usize, to: usize) -> Result<Interval> {
    require_positive(y, "tail sum")?;
    let p = y.prec().max(weights.prec());
    let mut sum = Interval::zero(p);
    let mut n = from;
    while n <= to {
        let term = weights.amp(n).mul(&weights.omega(n).mul(y).neg().exp()?);
        sum = sum.add(&term);
        let remaining = (to - n) as i64;
        if remaining > 0 && sum.is_positive() {
            let cap = term.mul_i64(remaining);
            let mut negligible = sum.lo().clone();
            negligible >>= p + 8;
            if *cap.hi() < negligible {
                sum = sum.add(&cap.clamp_lo_zero());
                break;
            }
        }
        n += 1;
    }
    Ok(sum)
}

pub fn tail_bound(y: &Interval, weights: &WeightSet, cfg: &TailBoundConfig) -> Result<Interval> {
    Ok(tail_bound_detail(y, weights, cfg)?.total)
}

pub fn tail_bound_detail(y: &Interval, weights: &WeightSet, cfg: &TailBoundConfig) -> Result<TailBound> {
    require_positive(y, "tail bound")?;
    let finite = direct_sum(y, weights, cfg.n + 1, cfg.n_prime)?;
    let (beyond, branch) = lemma5_tail_detail(y, &cfg.t1, weights.rho0_abs(), weights.gamma0())?;
    let total = finite.add(&beyond);
    Ok(TailBound {
        finite,
        beyond,
        branch,
        total,
    })
}
