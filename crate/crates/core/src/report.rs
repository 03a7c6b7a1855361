//! Certificate reports: a JSON document plus a plain-text rendering.
//!
//! Every number is written as a pair of decimal strings rounded outward, so
//! a report never claims more than was certified.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rug::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LllOutcome, TilingCertificate};
use crate::rigor::Interval;
use crate::volume::{GridFamily, VolumeResult};

/// Significant digits written for interval endpoints.
pub const REPORT_DIGITS: usize = 20;

pub const RH_FALSE_NOTE: &str = "This certificate covers the case in which the Riemann Hypothesis holds. \
If it fails, the density bound is obtained instead from the verified location of all nontrivial zeros \
with ordinates up to 3e12 combined with a zero-density argument; that branch needs no further \
computation and is not checked by this program.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalText {
    pub lo: String,
    pub hi: String,
}

impl IntervalText {
    pub fn of(x: &Interval) -> Self {
        let (lo, hi) = x.to_decimal_pair(REPORT_DIGITS);
        IntervalText { lo, hi }
    }

    /// Reads the endpoints back as an enclosing interval.
    pub fn to_interval(&self, prec: u32) -> Result<Interval> {
        let lo = Interval::from_decimal(&self.lo, prec)?;
        let hi = Interval::from_decimal(&self.hi, prec)?;
        Ok(lo.hull(&hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Certified,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimStatus {
    pub claim: u8,
    pub statement: String,
    pub certified: bool,
    /// Worst-case margins; positive lower endpoints mean the claim holds.
    pub margins: BTreeMap<String, IntervalText>,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeReport {
    pub n: usize,
    pub d: IntervalText,
    pub det: String,
    pub c: Vec<Vec<String>>,
    pub sums: Vec<IntervalText>,
    pub iterations: u64,
    pub operations: usize,
    pub hit_bound: bool,
}

impl LatticeReport {
    pub fn new(cert: &TilingCertificate, run: &LllOutcome) -> Self {
        LatticeReport {
            n: cert.c.len(),
            d: IntervalText::of(&cert.d),
            det: cert.det.to_string(),
            c: cert.c.iter().map(|r| r.iter().map(Integer::to_string).collect()).collect(),
            sums: cert.sums.iter().map(IntervalText::of).collect(),
            iterations: run.iterations,
            operations: run.ops.len(),
            hit_bound: run.hit_bound,
        }
    }

    pub fn coefficients(&self) -> Result<Vec<Vec<Integer>>> {
        self.c
            .iter()
            .map(|row| {
                row.iter()
                    .map(|s| s.parse().map_err(|_| Error::Validation(format!("bad coefficient `{s}`"))))
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeReport {
    pub ell: usize,
    pub eps: IntervalText,
    pub zero_rows: usize,
    pub sum_r: IntervalText,
    pub kappa_increment: IntervalText,
    pub kappa0_lower: IntervalText,
    pub meets_sixtieth: bool,
}

impl VolumeReport {
    pub fn new(grid: &GridFamily, v: &VolumeResult) -> Self {
        VolumeReport {
            ell: grid.ell,
            eps: IntervalText::of(&grid.eps),
            zero_rows: grid.zero_rows(),
            sum_r: IntervalText::of(&v.sum_r),
            kappa_increment: IntervalText::of(&v.kappa_increment),
            kappa0_lower: IntervalText::of(&v.kappa0_lower),
            meets_sixtieth: v.meets_sixtieth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub status: Status,
    pub config: BTreeMap<String, String>,
    pub claims: Vec<ClaimStatus>,
    pub lattice: Option<LatticeReport>,
    pub volume: Option<VolumeReport>,
    /// Wall time per stage in seconds.
    pub timing: BTreeMap<String, f64>,
    pub note: String,
}

impl CertificateReport {
    pub fn new(config: BTreeMap<String, String>) -> Self {
        CertificateReport {
            status: Status::Failed,
            config,
            claims: Vec::new(),
            lattice: None,
            volume: None,
            timing: BTreeMap::new(),
            note: RH_FALSE_NOTE.to_string(),
        }
    }

    /// Sets the overall status from the claims present.
    pub fn finish(&mut self, expected_claims: &[u8]) {
        let all = expected_claims
            .iter()
            .all(|c| self.claims.iter().any(|s| s.claim == *c && s.certified));
        self.status = if all { Status::Certified } else { Status::Failed };
    }

    pub fn is_certified(&self) -> bool {
        self.status == Status::Certified
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Validation(format!("malformed certificate: {e}")))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }

    /// The report without its timing fields, for comparing runs.
    pub fn without_timing(&self) -> Self {
        CertificateReport {
            timing: BTreeMap::new(),
            ..self.clone()
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let status = match self.status {
            Status::Certified => "CERTIFIED",
            Status::Failed => "FAILED",
        };
        let _ = writeln!(s, "status: {status}");
        let _ = writeln!(s, "\nconfiguration:");
        for (k, v) in &self.config {
            let _ = writeln!(s, "  {k} = {v}");
        }
        let _ = writeln!(s, "\nclaims:");
        for c in &self.claims {
            let mark = if c.certified { "ok  " } else { "FAIL" };
            let _ = writeln!(s, "  [{mark}] {}: {}", c.claim, c.statement);
            for (name, m) in &c.margins {
                let _ = writeln!(s, "         {name} in [{}, {}]", m.lo, m.hi);
            }
            if let Some(d) = &c.detail {
                let _ = writeln!(s, "         {d}");
            }
        }
        if let Some(l) = &self.lattice {
            let _ = writeln!(s, "\nlattice certificate (N = {}):", l.n);
            let _ = writeln!(s, "  d in [{}, {}]", l.d.lo, l.d.hi);
            let _ = writeln!(s, "  det C = {}", l.det);
            let _ = writeln!(
                s,
                "  reduction: {} iterations, {} row operations, coefficient bound reached: {}",
                l.iterations, l.operations, l.hit_bound
            );
            for (n, sum) in l.sums.iter().enumerate() {
                let _ = writeln!(s, "  coordinate {:>3}: sum in [{}, {}]", n + 1, sum.lo, sum.hi);
            }
        }
        if let Some(v) = &self.volume {
            let _ = writeln!(s, "\nvolume (ell = {}):", v.ell);
            let _ = writeln!(s, "  eps in [{}, {}]", v.eps.lo, v.eps.hi);
            let _ = writeln!(s, "  rows forced to zero: {}", v.zero_rows);
            let _ = writeln!(s, "  sum r_i in [{}, {}]", v.sum_r.lo, v.sum_r.hi);
            let _ = writeln!(s, "  kappa increment in [{}, {}]", v.kappa_increment.lo, v.kappa_increment.hi);
            let _ = writeln!(s, "  kappa_0 lower bound in [{}, {}]", v.kappa0_lower.lo, v.kappa0_lower.hi);
            let _ = writeln!(s, "  increment >= 1/60 certified: {}", v.meets_sixtieth);
        }
        if !self.timing.is_empty() {
            let _ = writeln!(s, "\ntiming:");
            for (k, t) in &self.timing {
                let _ = writeln!(s, "  {k}: {t:.1} s");
            }
        }
        let _ = writeln!(s, "\nnote: {}", self.note);
        s
    }
}
