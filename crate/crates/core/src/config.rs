//! Run configuration as flat `key = value` text.
//!
//! Decimal values are kept as exact literals and only turned into intervals
//! when a stage needs them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rug::{Integer, Rational};

use crate::contour::ContourConfig;
use crate::error::{Error, Result};
use crate::rigor::{parse_decimal, Interval, DEFAULT_PREC};
use crate::zeta_data::DeclaredUlp;

pub const PUBLISHED_BREAKPOINTS: &str = "0:0, 1/32:0.489819, 1/8:1.85802, 3/16:2.04829, 3/8:2.90189, 1/2:pi";

/// Either a fixed lattice target or twice the certified lattice sum.
#[derive(Debug, Clone, PartialEq)]
pub enum DTarget {
    Auto,
    Value(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub zeros_path: PathBuf,
    pub declared_ulp: String,
    pub n: usize,
    pub n_prime: usize,
    pub delta: String,
    pub y0: String,
    pub y1: String,
    pub m: usize,
    pub alpha_breakpoints: String,
    pub lll_digits: u32,
    pub lll_delta: String,
    /// Coefficient bound as an exact integer literal, `10^k` allowed.
    pub coeff_bound: String,
    pub d_target: DTarget,
    pub ell: usize,
    pub prec: u32,
    /// Worker threads; 0 leaves the choice to the runtime.
    pub threads: usize,
}

impl RunConfig {
    /// Published parameters.
    pub fn paper(zeros_path: impl Into<PathBuf>) -> Self {
        RunConfig {
            zeros_path: zeros_path.into(),
            declared_ulp: "last-place".into(),
            n: 21,
            n_prime: 9998,
            delta: "0.132737".into(),
            y0: "0.0468918".into(),
            y1: "0.14".into(),
            m: 12000,
            alpha_breakpoints: PUBLISHED_BREAKPOINTS.into(),
            lll_digits: 1000,
            lll_delta: "1/4".into(),
            coeff_bound: "10^300".into(),
            d_target: DTarget::Value("1.66e-13".into()),
            ell: 16000,
            prec: DEFAULT_PREC,
            threads: 0,
        }
    }

    /// Small parameters that run in seconds on the same contour.
    pub fn reduced(zeros_path: impl Into<PathBuf>) -> Self {
        RunConfig {
            n: 8,
            n_prime: 2000,
            m: 1500,
            lll_digits: 200,
            coeff_bound: "10^60".into(),
            d_target: DTarget::Auto,
            ell: 400,
            ..Self::paper(zeros_path)
        }
    }

    /// Reads a config file.  Relative `zeros` paths are taken relative to
    /// the file.  Keys not present keep their published values.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut cfg = Self::parse(&text)?;
        if cfg.zeros_path.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.zeros_path = dir.join(&cfg.zeros_path);
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::paper("zeta_zeros.txt");
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                msg: format!("expected `key = value`, found `{line}`"),
            })?;
            cfg.set(key.trim(), value.trim()).map_err(|e| Error::Parse {
                line: idx + 1,
                msg: e.to_string(),
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let int = |v: &str| -> Result<usize> {
            v.parse().map_err(|_| Error::Argument(format!("{key}: `{v}` is not a nonnegative integer")))
        };
        let dec = |v: &str| -> Result<String> {
            parse_decimal(v)?;
            Ok(v.to_string())
        };
        match key {
            "zeros" => self.zeros_path = PathBuf::from(value),
            "declared_ulp" => {
                DeclaredUlp::parse(value)?;
                self.declared_ulp = value.to_string();
            }
            "N" | "n" => self.n = int(value)?,
            "N_prime" | "n_prime" => self.n_prime = int(value)?,
            "delta" => self.delta = dec(value)?,
            "Y0" | "y0" => self.y0 = dec(value)?,
            "Y1" | "y1" => self.y1 = dec(value)?,
            "m" => self.m = int(value)?,
            "alpha_breakpoints" => {
                parse_breakpoints(value, 64)?;
                self.alpha_breakpoints = value.to_string();
            }
            "lll_digits" => self.lll_digits = int(value)? as u32,
            "lll_delta" => {
                parse_fraction(value)?;
                self.lll_delta = value.to_string();
            }
            "coeff_bound" => {
                parse_integer(value)?;
                self.coeff_bound = value.to_string();
            }
            "d_target" => {
                self.d_target = if value == "auto" {
                    DTarget::Auto
                } else {
                    DTarget::Value(dec(value)?)
                }
            }
            "ell" => self.ell = int(value)?,
            "prec" => self.prec = int(value)? as u32,
            "threads" => self.threads = int(value)?,
            _ => return Err(Error::Argument(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Validation("N must be at least 2".into()));
        }
        if self.n_prime <= self.n {
            return Err(Error::Validation(format!("N' = {} must exceed N = {}", self.n_prime, self.n)));
        }
        if self.ell == 0 || self.lll_digits == 0 || self.prec < 53 {
            return Err(Error::Validation("ell, lll_digits must be positive and prec at least 53".into()));
        }
        self.contour(64)?;
        let d = self.lll_delta()?;
        if d <= 0 || d >= 1 {
            return Err(Error::Validation(format!("lll_delta = {d} must lie in (0, 1)")));
        }
        if self.coeff_bound()? < 1 {
            return Err(Error::Validation("coeff_bound must be positive".into()));
        }
        Ok(())
    }

    pub fn contour(&self, prec: u32) -> Result<ContourConfig> {
        ContourConfig::new(
            Interval::from_decimal(&self.delta, prec)?,
            Interval::from_decimal(&self.y0, prec)?,
            Interval::from_decimal(&self.y1, prec)?,
            self.m,
            parse_breakpoints(&self.alpha_breakpoints, prec)?,
        )
    }

    pub fn declared_ulp(&self) -> Result<DeclaredUlp> {
        DeclaredUlp::parse(&self.declared_ulp)
    }

    pub fn lll_delta(&self) -> Result<Rational> {
        parse_fraction(&self.lll_delta)
    }

    pub fn coeff_bound(&self) -> Result<Integer> {
        parse_integer(&self.coeff_bound)
    }

    pub fn d_target(&self, prec: u32) -> Result<Option<Interval>> {
        match &self.d_target {
            DTarget::Auto => Ok(None),
            DTarget::Value(s) => Ok(Some(Interval::from_decimal(s, prec)?)),
        }
    }

    /// Key/value echo in file order, suitable for a report.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("zeros".into(), self.zeros_path.display().to_string());
        m.insert("declared_ulp".into(), self.declared_ulp.clone());
        m.insert("N".into(), self.n.to_string());
        m.insert("N_prime".into(), self.n_prime.to_string());
        m.insert("delta".into(), self.delta.clone());
        m.insert("Y0".into(), self.y0.clone());
        m.insert("Y1".into(), self.y1.clone());
        m.insert("m".into(), self.m.to_string());
        m.insert("alpha_breakpoints".into(), self.alpha_breakpoints.clone());
        m.insert("lll_digits".into(), self.lll_digits.to_string());
        m.insert("lll_delta".into(), self.lll_delta.clone());
        m.insert("coeff_bound".into(), self.coeff_bound.clone());
        m.insert(
            "d_target".into(),
            match &self.d_target {
                DTarget::Auto => "auto".into(),
                DTarget::Value(s) => s.clone(),
            },
        );
        m.insert("ell".into(), self.ell.to_string());
        m.insert("prec".into(), self.prec.to_string());
        m.insert("threads".into(), self.threads.to_string());
        m
    }

    /// Renders the config in the file format; `parse` reads it back.
    pub fn to_text(&self) -> String {
        self.echo().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// `p/q` or a plain integer.
pub fn parse_fraction(s: &str) -> Result<Rational> {
    let t = s.trim();
    let bad = || Error::Argument(format!("`{t}` is not a fraction"));
    match t.split_once('/') {
        Some((a, b)) => {
            let a: Integer = a.trim().parse().map_err(|_| bad())?;
            let b: Integer = b.trim().parse().map_err(|_| bad())?;
            if b == 0 {
                return Err(bad());
            }
            Ok(Rational::from((a, b)))
        }
        None => Ok(Rational::from(t.parse::<Integer>().map_err(|_| bad())?)),
    }
}

/// An integer literal or `b^k`.
pub fn parse_integer(s: &str) -> Result<Integer> {
    let t = s.trim();
    let bad = || Error::Argument(format!("`{t}` is not an integer"));
    match t.split_once('^') {
        Some((b, k)) => {
            let b: u32 = b.trim().parse().map_err(|_| bad())?;
            let k: u32 = k.trim().parse().map_err(|_| bad())?;
            Ok(Integer::from(Integer::u_pow_u(b, k)))
        }
        None => t.parse().map_err(|_| bad()),
    }
}

/// Comma-separated `s:value` pairs; `s` is a fraction, `value` a decimal or
/// `pi`.
pub fn parse_breakpoints(s: &str, prec: u32) -> Result<Vec<(Rational, Interval)>> {
    s.split(',')
        .map(|item| {
            let (a, v) = item
                .split_once(':')
                .ok_or_else(|| Error::Argument(format!("breakpoint `{}` lacks `:`", item.trim())))?;
            let value = match v.trim() {
                "pi" => Interval::pi(prec),
                other => Interval::from_decimal(other, prec)?,
            };
            Ok((parse_fraction(a)?, value))
        })
        .collect()
}
