//! Zero-ordinate tables and the amplitudes and frequencies derived from them.
//!
//! Table format: UTF-8 text, one decimal ordinate per line, lines starting
//! with `#` and blank lines ignored.  Ordinates are 0-based: the first data
//! line is `gamma_0 = 14.1347...`.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rug::{Integer, Rational};

use crate::error::{Error, Result};
use crate::rigor::{parse_decimal, Interval};

/// Half-width added around each printed ordinate.
#[derive(Debug, Clone, PartialEq)]
pub enum DeclaredUlp {
    /// One unit in the last printed decimal place of each line.
    LastPlace,
    /// The same half-width for every entry.
    Fixed(Rational),
}

impl DeclaredUlp {
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("last-place") || t.eq_ignore_ascii_case("auto") {
            return Ok(DeclaredUlp::LastPlace);
        }
        let q = parse_decimal(t)?;
        if q <= 0 {
            return Err(Error::Argument(format!("declared ulp must be positive, got {t}")));
        }
        Ok(DeclaredUlp::Fixed(q))
    }
}

#[derive(Debug, Clone)]
pub struct ZeroTable {
    ordinates: Vec<Interval>,
    sources: Vec<String>,
    declared_ulp: DeclaredUlp,
}

fn bits_for_digits(digits: usize) -> u32 {
    (digits as f64 * std::f64::consts::LOG2_10).ceil() as u32 + 16
}

fn enclose_line(text: &str, ulp: &DeclaredUlp, prec: u32) -> std::result::Result<Interval, String> {
    let center = parse_decimal(text).map_err(|e| e.to_string())?;
    let frac_digits = text.split_once('.').map_or(0, |(_, f)| f.len());
    let half = match ulp {
        DeclaredUlp::LastPlace => Rational::from((1, Integer::from(Integer::u_pow_u(10, frac_digits as u32)))),
        DeclaredUlp::Fixed(q) => q.clone(),
    };
    let digits = text.bytes().filter(u8::is_ascii_digit).count();
    let p = prec.max(bits_for_digits(digits));
    let lo = Interval::from_rational(&Rational::from(&center - &half), p);
    let hi = Interval::from_rational(&Rational::from(&center + &half), p);
    Ok(lo.hull(&hi))
}

/// Parses and validates a zero table.  Each entry is held at `prec` bits or
/// at the precision its printed digits need, whichever is larger.
pub fn load_zero_table<R: BufRead>(source: R, declared_ulp: &DeclaredUlp, prec: u32) -> Result<ZeroTable> {
    let mut ordinates = Vec::new();
    let mut sources = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: idx + 1,
            msg: e.to_string(),
        })?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let iv = enclose_line(text, declared_ulp, prec).map_err(|msg| Error::Parse { line: idx + 1, msg })?;
        ordinates.push(iv);
        sources.push(text.to_string());
    }
    let table = ZeroTable {
        ordinates,
        sources,
        declared_ulp: declared_ulp.clone(),
    };
    table.validate()?;
    Ok(table)
}

pub fn load_zero_file(path: &Path, declared_ulp: &DeclaredUlp, prec: u32) -> Result<ZeroTable> {
    let f = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    load_zero_table(BufReader::new(f), declared_ulp, prec)
}

impl ZeroTable {
    fn validate(&self) -> Result<()> {
        let first = self
            .ordinates
            .first()
            .ok_or_else(|| Error::Validation("zero table is empty".into()))?;
        let p = first.prec();
        let window = Interval::from_decimal("14.134625", p)?.hull(&Interval::from_decimal("14.134825", p)?);
        if !window.contains(first) {
            return Err(Error::Validation(format!(
                "first ordinate {first} is not within 1e-4 of 14.134725"
            )));
        }
        for (i, g) in self.ordinates.iter().enumerate() {
            if !g.is_positive() {
                return Err(Error::Validation(format!("ordinate {i} is not certainly positive")));
            }
        }
        for (i, w) in self.ordinates.windows(2).enumerate() {
            if !w[0].certainly_lt(&w[1]) {
                return Err(Error::Validation(format!(
                    "ordinates {i} and {} are not certainly increasing: {} vs {}",
                    i + 1,
                    w[0],
                    w[1]
                )));
            }
        }
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.ordinates.len()
    }

    pub fn gamma(&self, n: usize) -> &Interval {
        &self.ordinates[n]
    }

    pub fn ordinates(&self) -> &[Interval] {
        &self.ordinates
    }

    pub fn declared_ulp(&self) -> &DeclaredUlp {
        &self.declared_ulp
    }

    /// The first `k` entries.
    pub fn head(&self, k: usize) -> ZeroTable {
        let k = k.min(self.count());
        ZeroTable {
            ordinates: self.ordinates[..k].to_vec(),
            sources: self.sources[..k].to_vec(),
            declared_ulp: self.declared_ulp.clone(),
        }
    }

    /// Writes the table in the loader's format; reloading with the same
    /// declared ulp and precision reproduces identical intervals.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# {} zeta zero ordinates", self.count())?;
        for s in &self.sources {
            writeln!(out, "{s}")?;
        }
        Ok(())
    }
}

/// Amplitudes `|rho_0/rho_n|`, frequencies `gamma_n - gamma_0` and phases
/// for `n = 1..count-1`, with the first `n_active` used by the truncated
/// function.
#[derive(Debug, Clone)]
pub struct WeightSet {
    n_active: usize,
    gamma0: Interval,
    rho0_abs: Interval,
    gammas: Vec<Interval>,
    omegas: Vec<Interval>,
    amps: Vec<Interval>,
    etas: Vec<Interval>,
}

/// `|1/2 + i*gamma|`, the modulus of a zero on the critical line.
fn rho_abs(gamma: &Interval) -> Result<Interval> {
    let quarter = Interval::from_ratio(1, 4, gamma.prec());
    Ok(quarter.add(&gamma.sqr()).sqrt()?)
}

pub fn derive_weights(table: &ZeroTable, n_active: usize, prec: u32) -> Result<WeightSet> {
    if n_active == 0 || n_active >= table.count() {
        return Err(Error::Argument(format!(
            "N = {n_active} needs 1 <= N < {} (table size)",
            table.count()
        )));
    }
    let gamma0 = table.gamma(0).with_prec(prec);
    let rho0_abs = rho_abs(&gamma0)?;
    let pi = Interval::pi(prec);
    let arg0 = gamma0.mul_i64(2).atan();
    let mut gammas = Vec::with_capacity(table.count() - 1);
    let mut omegas = Vec::with_capacity(table.count() - 1);
    let mut amps = Vec::with_capacity(table.count() - 1);
    let mut etas = Vec::with_capacity(n_active);
    for n in 1..table.count() {
        let g = table.gamma(n).with_prec(prec);
        omegas.push(g.sub(&gamma0));
        amps.push(rho0_abs.div(&rho_abs(&g)?)?);
        if n <= n_active {
            // arg(rho_0/rho_n) = atan(2 gamma_0) - atan(2 gamma_n)
            let arg_ratio = arg0.sub(&g.mul_i64(2).atan());
            etas.push(pi.sub(&arg_ratio));
        }
        gammas.push(g);
    }
    let ws = WeightSet {
        n_active,
        gamma0,
        rho0_abs,
        gammas,
        omegas,
        amps,
        etas,
    };
    ws.validate()?;
    Ok(ws)
}

impl WeightSet {
    fn validate(&self) -> Result<()> {
        let one = Interval::one(self.gamma0.prec());
        for (i, (w, a)) in self.omegas.iter().zip(&self.amps).enumerate() {
            if !w.is_positive() {
                return Err(Error::Validation(format!("omega_{} is not certainly positive", i + 1)));
            }
            if !a.is_positive() || !a.certainly_lt(&one) {
                return Err(Error::Validation(format!("amp_{} = {a} is not certainly in (0, 1)", i + 1)));
            }
        }
        for i in 1..self.amps.len() {
            if !self.omegas[i - 1].certainly_lt(&self.omegas[i]) || !self.amps[i].certainly_lt(&self.amps[i - 1]) {
                return Err(Error::Validation(format!(
                    "frequencies or amplitudes at n = {} are not certainly monotone",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// `N`, the number of terms kept in the truncated function.
    pub fn n_active(&self) -> usize {
        self.n_active
    }

    /// Number of available frequencies (`table.count() - 1`).
    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn gamma0(&self) -> &Interval {
        &self.gamma0
    }

    pub fn rho0_abs(&self) -> &Interval {
        &self.rho0_abs
    }

    /// `gamma_n`, for `n >= 1`.
    pub fn gamma(&self, n: usize) -> &Interval {
        &self.gammas[n - 1]
    }

    /// `omega_n = gamma_n - gamma_0`, for `n >= 1`.
    pub fn omega(&self, n: usize) -> &Interval {
        &self.omegas[n - 1]
    }

    pub fn amp(&self, n: usize) -> &Interval {
        &self.amps[n - 1]
    }

    /// `eta_n = pi - arg(rho_0/rho_n)`, for `1 <= n <= N`.
    pub fn eta(&self, n: usize) -> &Interval {
        &self.etas[n - 1]
    }

    pub fn omegas(&self) -> &[Interval] {
        &self.omegas
    }

    pub fn amps(&self) -> &[Interval] {
        &self.amps
    }

    pub fn prec(&self) -> u32 {
        self.gamma0.prec()
    }
}
