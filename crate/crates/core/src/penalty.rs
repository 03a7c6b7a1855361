//! Penalty kernel `v(phi, psi)` and the per-frequency weight functions
//! `w_n(x) = max_j c_{n,j} max(v(phi'_{n,j}, 2 pi x), v(phi''_{n,j}, 2 pi x))`.
//!
//! Every weight function is a maximum of "atoms" `c * v(phi, 2 pi x)`, each
//! non-decreasing in `x`.  For fast evaluation the range `[0, 1/2]` is split
//! into cells and, per cell, atoms that are dominated throughout the cell by
//! another atom are dropped.  The dominance test is done in outward-rounded
//! arithmetic, so the pruned maximum is still an upper bound.

use rayon::prelude::*;
use rug::float::Round;

use crate::contour::{BandTable, ContourMesh};
use crate::error::{Error, Result};
use crate::rigor::{F64Interval, Interval};
use crate::zeta_data::WeightSet;

/// Precision used to store the family; the values only feed double-precision
/// interval evaluation afterwards.
const STORE_PREC: u32 = 64;

/// `v(phi, psi) = cos(phi) - cos(min(phi + psi, pi))` for
/// `phi, psi` in `[0, pi]`.
pub fn v_penalty(phi: &Interval, psi: &Interval) -> Result<Interval> {
    let p = phi.prec().max(psi.prec());
    let pi = Interval::pi(p);
    for (name, x) in [("phi", phi), ("psi", psi)] {
        if x.lo().is_sign_negative() && !x.lo().is_zero() || x.hi() > pi.hi() {
            return Err(Error::Argument(format!("{name} = {x} is not within [0, pi]")));
        }
    }
    let s = phi.add(psi);
    let cos_phi = phi.cos();
    Ok(if s.certainly_le(&pi) {
        cos_phi.sub(&s.cos())
    } else if s.certainly_ge(&pi) {
        cos_phi.add(&Interval::one(p))
    } else {
        cos_phi.sub(&s.min(&pi).cos())
    })
}

/// Which bound of the phase-band lemma produced `c_{n,j}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeCase {
    /// The synthetic `j = 0` entry at `phi = pi/2`.
    Aggregate,
    /// `phi'' <= pi/2`.
    Narrow,
    /// `phi' >= pi/2`.
    Upper,
    /// Neither of the above certified; `phi' <= pi/2 <= phi''` is assumed,
    /// which is the sound choice in every case.
    Mixed,
}

#[derive(Debug, Clone)]
pub struct Entry {
    pub phi_lo: Interval,
    pub phi_hi: Interval,
    pub c: Interval,
    pub case: EnvelopeCase,
}

#[derive(Debug, Clone, Copy)]
struct Atom {
    c: F64Interval,
    phi: F64Interval,
    cos_phi: F64Interval,
    sin_phi: F64Interval,
}

#[derive(Debug, Clone, Copy)]
struct Angle {
    psi: F64Interval,
    cos: F64Interval,
    sin: F64Interval,
}

impl Angle {
    /// `psi = 2 pi x`.
    fn of(x: F64Interval) -> Angle {
        let xi = Interval::from_f64_bounds(x.lo(), x.hi(), 64);
        let psi = xi.mul(&Interval::two_pi(64));
        Angle {
            psi: psi.to_f64_interval(),
            cos: psi.cos().to_f64_interval(),
            sin: psi.sin().to_f64_interval(),
        }
    }
}

fn pi_f64() -> F64Interval {
    F64Interval::new(std::f64::consts::PI, std::f64::consts::PI.next_up())
}

/// Outward-rounded `c * v(phi, psi)` via
/// `v = cos(phi)(1 - cos psi) + sin(phi) sin(psi)` below the cap.
fn atom_value(a: &Atom, ang: &Angle) -> F64Interval {
    let pi = pi_f64();
    let s = a.phi + ang.psi;
    let below = a.cos_phi * (F64Interval::ONE - ang.cos) + a.sin_phi * ang.sin;
    let capped = a.cos_phi + F64Interval::ONE;
    let v = if s.hi() <= pi.lo() {
        below
    } else if s.lo() >= pi.hi() {
        capped
    } else {
        below.hull(capped)
    };
    a.c * v
}

/// Cell structure over `x` in `[0, 1/2]` with per-cell surviving atoms.
#[derive(Debug, Clone)]
struct FastEnvelope {
    atoms: Vec<Atom>,
    /// Cell `k` covers `[k h, (k+1) h]` with `h = 1/(2 * cells.len())`.
    cells: Vec<Vec<u32>>,
}

const COARSE_CELLS: usize = 16;
const REFINE: usize = 4;
const LEVELS: usize = 4;

impl FastEnvelope {
    fn build(atoms: Vec<Atom>) -> Self {
        let mut cells: Vec<Vec<u32>> = vec![(0..atoms.len() as u32).collect()];
        let mut count = 1;
        for level in 0..LEVELS {
            let next = if level == 0 { COARSE_CELLS } else { count * REFINE };
            let per_parent = next / count;
            let h = 0.5 / next as f64;
            let bounds: Vec<Angle> = (0..=next).map(|k| Angle::of(F64Interval::point(k as f64 * h))).collect();
            let mut refined = Vec::with_capacity(next);
            for (parent_idx, parent) in cells.iter().enumerate() {
                for sub in 0..per_parent {
                    let k = parent_idx * per_parent + sub;
                    refined.push(prune(&atoms, parent, &bounds[k], &bounds[k + 1]));
                }
            }
            cells = refined;
            count = next;
        }
        FastEnvelope { atoms, cells }
    }

    fn eval_atoms<'a>(&self, idx: impl Iterator<Item = &'a u32>, ang: &Angle) -> F64Interval {
        let mut best: Option<F64Interval> = None;
        for &i in idx {
            let v = atom_value(&self.atoms[i as usize], ang);
            best = Some(match best {
                None => v,
                Some(b) => F64Interval::new(b.lo().max(v.lo()), b.hi().max(v.hi())),
            });
        }
        best.unwrap_or(F64Interval::ZERO)
    }

    fn eval(&self, x: F64Interval) -> F64Interval {
        let ang = Angle::of(x);
        let k = self.cells.len();
        if x.lo() < 0.0 || x.hi() > 0.5 {
            return self.eval_atoms(self.all_indices().iter(), &ang);
        }
        let scale = 2.0 * k as f64;
        let ka = ((x.lo() * scale).floor() as usize).min(k - 1);
        let kb = ((x.hi() * scale).floor() as usize).min(k - 1);
        if ka == kb {
            return self.eval_atoms(self.cells[ka].iter(), &ang);
        }
        let mut idx: Vec<u32> = self.cells[ka..=kb].iter().flatten().copied().collect();
        idx.sort_unstable();
        idx.dedup();
        self.eval_atoms(idx.iter(), &ang)
    }

    fn all_indices(&self) -> Vec<u32> {
        (0..self.atoms.len() as u32).collect()
    }

    fn max_active(&self) -> usize {
        self.cells.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Keeps the atoms that may attain the maximum somewhere in `[left, right]`.
fn prune(atoms: &[Atom], candidates: &[u32], left: &Angle, right: &Angle) -> Vec<u32> {
    let mut best_lo = f64::NEG_INFINITY;
    let mut best_idx = None;
    let mut uppers = Vec::with_capacity(candidates.len());
    for &i in candidates {
        let a = &atoms[i as usize];
        let lo = atom_value(a, left).lo();
        if lo > best_lo {
            best_lo = lo;
            best_idx = Some(i);
        }
        uppers.push(atom_value(a, right).hi());
    }
    candidates
        .iter()
        .zip(uppers)
        .filter(|&(&i, u)| u > best_lo || Some(i) == best_idx)
        .map(|(&i, _)| i)
        .collect()
}

#[derive(Debug, Clone)]
pub struct PenaltyRow {
    /// Entries `j = 0..=m`.
    pub entries: Vec<Entry>,
    fast: FastEnvelope,
}

#[derive(Debug, Clone, Default)]
pub struct CaseCounts {
    pub narrow: usize,
    pub upper: usize,
    pub mixed: usize,
}

#[derive(Debug, Clone)]
pub struct PenaltyFamily {
    rows: Vec<PenaltyRow>,
    pub counts: CaseCounts,
}

fn atoms_of(entries: &[Entry]) -> Vec<Atom> {
    let mut atoms = Vec::with_capacity(2 * entries.len());
    for e in entries {
        if e.c.hi().is_zero() {
            continue;
        }
        let phis = if e.phi_lo == e.phi_hi {
            vec![&e.phi_lo]
        } else {
            vec![&e.phi_lo, &e.phi_hi]
        };
        for phi in phis {
            atoms.push(Atom {
                c: e.c.to_f64_interval(),
                phi: phi.to_f64_interval(),
                cos_phi: phi.cos().to_f64_interval(),
                sin_phi: phi.sin().to_f64_interval(),
            });
        }
    }
    atoms
}

impl PenaltyFamily {
    /// Builds a family directly from entries (one vector per `n`).
    pub fn from_entries(rows: Vec<Vec<Entry>>) -> Self {
        let mut counts = CaseCounts::default();
        for e in rows.iter().flatten() {
            match e.case {
                EnvelopeCase::Narrow => counts.narrow += 1,
                EnvelopeCase::Upper => counts.upper += 1,
                EnvelopeCase::Mixed => counts.mixed += 1,
                EnvelopeCase::Aggregate => {}
            }
        }
        let rows = rows
            .into_par_iter()
            .map(|entries| {
                let fast = FastEnvelope::build(atoms_of(&entries));
                PenaltyRow { entries, fast }
            })
            .collect();
        PenaltyFamily { rows, counts }
    }

    pub fn n_count(&self) -> usize {
        self.rows.len()
    }

    /// Row for frequency `n >= 1`.
    pub fn row(&self, n: usize) -> &PenaltyRow {
        &self.rows[n - 1]
    }

    /// Upper-endpoint evaluation in double-precision intervals, the form
    /// used by the grid inversion.
    pub fn w_fast(&self, n: usize, x: F64Interval) -> F64Interval {
        self.rows[n - 1].fast.eval(x)
    }

    /// Largest number of atoms any cell keeps, over all rows.
    pub fn max_active_atoms(&self) -> usize {
        self.rows.iter().map(|r| r.fast.max_active()).max().unwrap_or(0)
    }

    pub fn atom_count(&self) -> usize {
        self.rows.iter().map(|r| r.fast.atoms.len()).sum()
    }
}

/// `w_n(x)`; the upper endpoint is a certified upper bound.
pub fn w_eval(family: &PenaltyFamily, n: usize, x: &Interval) -> Interval {
    let r = family.w_fast(n, x.to_f64_interval());
    Interval::from_f64_interval(r, 64)
}

/// `w_n(x)` straight from the definition over all entries, without pruning.
pub fn w_eval_reference(family: &PenaltyFamily, n: usize, x: &Interval) -> Result<Interval> {
    let psi = x.mul(&Interval::two_pi(x.prec()));
    let mut best: Option<Interval> = None;
    for e in &family.row(n).entries {
        let v = v_penalty(&e.phi_lo, &psi)?.max(&v_penalty(&e.phi_hi, &psi)?);
        let cv = e.c.mul(&v);
        best = Some(match best {
            None => cv,
            Some(b) => b.max(&cv),
        });
    }
    Ok(best.unwrap_or_else(|| Interval::zero(x.prec())))
}

/// Constant of the phase-band lemma for a band `[phi', phi'']`, given
/// `base = amp_n e^{-omega_n y_j} / u_j`.
pub fn envelope_entry(phi_lo: &Interval, phi_hi: &Interval, base: &Interval) -> Result<Entry> {
    let p = base.prec();
    let half_pi = Interval::pi(p).div_2exp(1);
    let (case, factor) = if phi_lo.certainly_ge(&half_pi) {
        (EnvelopeCase::Upper, Interval::one(p))
    } else if phi_hi.certainly_le(&half_pi) {
        let k = Interval::one(p).div(&phi_hi.sub(phi_lo).div_2exp(1).cos())?;
        (EnvelopeCase::Narrow, k)
    } else {
        let k = Interval::one(p).div(&half_pi.sub(phi_lo).div_2exp(1).cos())?;
        (EnvelopeCase::Mixed, k)
    };
    Ok(Entry {
        phi_lo: phi_lo.clone(),
        phi_hi: phi_hi.clone(),
        c: base.mul(&factor),
        case,
    })
}

/// Builds `c_{n,j}` for all `n <= N`, `j = 0..m` from a certified mesh.
pub fn envelope_constants(mesh: &ContourMesh, bands: &BandTable, weights: &WeightSet) -> Result<PenaltyFamily> {
    let m = mesh.m();
    let prec = weights.prec();
    let mut inv_u = Vec::with_capacity(m);
    for j in 1..=m {
        let u = &mesh.segment(j).u;
        if !u.is_positive() {
            return Err(Error::certification("penalty", format!("u_{j} = {u} is not certainly positive")));
        }
        // any positive lower bound for u_j is admissible
        let u_lo = Interval::point(rug::Float::with_val_round(prec, u.lo(), Round::Down).0);
        inv_u.push(Interval::one(prec).div(&u_lo)?);
    }
    let half_pi = Interval::pi(prec).div_2exp(1);
    let rows: Vec<Vec<Entry>> = (1..=weights.n_active())
        .into_par_iter()
        .map(|n| -> Result<Vec<Entry>> {
            let om = weights.omega(n);
            let amp = weights.amp(n);
            let mut entries = Vec::with_capacity(m + 1);
            entries.push(Entry {
                phi_lo: half_pi.clone(),
                phi_hi: half_pi.clone(),
                c: Interval::zero(prec),
                case: EnvelopeCase::Aggregate,
            });
            let mut aggregate: Option<Interval> = None;
            for j in 1..=m {
                let seg = mesh.segment(j);
                let base = amp.mul(&om.mul(&seg.y).neg().exp()?).mul(&inv_u[j - 1]);
                let band = bands.get(n, j);
                let e = envelope_entry(&band.phi_lo, &band.phi_hi, &base)?;
                if e.case == EnvelopeCase::Mixed {
                    aggregate = Some(match aggregate {
                        None => e.c.clone(),
                        Some(a) => a.max(&e.c),
                    });
                }
                entries.push(Entry {
                    phi_lo: e.phi_lo.with_prec(STORE_PREC),
                    phi_hi: e.phi_hi.with_prec(STORE_PREC),
                    c: e.c.with_prec(STORE_PREC),
                    case: e.case,
                });
            }
            if let Some(a) = aggregate {
                entries[0].c = a.with_prec(STORE_PREC);
            }
            entries[0].phi_lo = entries[0].phi_lo.with_prec(STORE_PREC);
            entries[0].phi_hi = entries[0].phi_hi.with_prec(STORE_PREC);
            entries[0].c = entries[0].c.with_prec(STORE_PREC);
            Ok(entries)
        })
        .collect::<Result<_>>()?;
    Ok(PenaltyFamily::from_entries(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    const P: u32 = 128;

    fn iv(x: f64) -> Interval {
        Interval::from_f64(x, P)
    }

    fn close(a: &Interval, x: f64, tol: f64) -> bool {
        (a.to_f64() - x).abs() < tol
    }

    #[test]
    fn kernel_examples() {
        let pi = Interval::pi(P);
        let v = v_penalty(&Interval::zero(P), &pi).unwrap();
        assert!(v.contains_float(&rug::Float::with_val(P, 2)));
        for phi in [0.0, 0.7, 2.0, 3.0] {
            let v = v_penalty(&iv(phi), &Interval::zero(P)).unwrap();
            assert!(v.contains_zero() && v.width() < rug::Float::with_val(P, 1e-30));
        }
        let two_thirds_pi = pi.mul_i64(2).div(&Interval::from_i64(3, P)).unwrap();
        let v = v_penalty(&two_thirds_pi, &two_thirds_pi).unwrap();
        assert!(close(&v, 0.5, 1e-30));
        assert!(v_penalty(&iv(-0.1), &iv(0.1)).is_err());
        assert!(v_penalty(&iv(0.1), &iv(3.2)).is_err());
    }

    #[test]
    fn case_factors() {
        let one = Interval::one(P);
        let e = envelope_entry(&iv(0.3), &iv(0.3), &one).unwrap();
        assert_eq!(e.case, EnvelopeCase::Narrow);
        assert!(close(&e.c, 1.0, 1e-30));
        let e = envelope_entry(&iv(2.0), &iv(2.5), &one).unwrap();
        assert_eq!(e.case, EnvelopeCase::Upper);
        assert!(e.c.contains_float(&rug::Float::with_val(P, 1)));
        let e = envelope_entry(&iv(1.0), &iv(2.0), &one).unwrap();
        assert_eq!(e.case, EnvelopeCase::Mixed);
        let expect = 1.0 / ((std::f64::consts::FRAC_PI_2 - 1.0) / 2.0).cos();
        assert!(close(&e.c, expect, 1e-14));
        assert!((expect - 1.042156).abs() < 1e-6);
    }

    fn toy_family() -> PenaltyFamily {
        let half_pi = Interval::pi(P).div_2exp(1);
        PenaltyFamily::from_entries(vec![vec![
            Entry {
                phi_lo: Interval::zero(P),
                phi_hi: Interval::zero(P),
                c: Interval::one(P),
                case: EnvelopeCase::Narrow,
            },
            Entry {
                phi_lo: half_pi.clone(),
                phi_hi: half_pi,
                c: Interval::from_ratio(1, 2, P),
                case: EnvelopeCase::Aggregate,
            },
        ]])
    }

    #[test]
    fn toy_family_hand_values() {
        let fam = toy_family();
        let w = w_eval(&fam, 1, &Interval::from_ratio(1, 4, P));
        assert!(w.contains_float(&rug::Float::with_val(P, 1)));
        assert!(w.width() < rug::Float::with_val(P, 1e-12));
        let w0 = w_eval(&fam, 1, &Interval::zero(P));
        assert!(w0.contains_zero() && w0.hi() < &rug::Float::with_val(P, 1e-15));
        let a = w_eval(&fam, 1, &iv(0.2));
        let b = w_eval(&fam, 1, &iv(0.3));
        assert!(a.hi() <= b.hi());
    }

    #[test]
    fn pruned_matches_reference_on_random_family() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let pi = std::f64::consts::PI;
        let mut entries = Vec::new();
        for _ in 0..300 {
            let a: f64 = rng.gen_range(0.0..pi);
            let b: f64 = rng.gen_range(0.0..pi);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let c: f64 = rng.gen_range(0.1..2.0);
            entries.push(Entry {
                phi_lo: iv(lo),
                phi_hi: iv(hi),
                c: iv(c),
                case: EnvelopeCase::Mixed,
            });
        }
        let fam = PenaltyFamily::from_entries(vec![entries]);
        let cells = &fam.row(1).fast.cells;
        assert!(cells[cells.len() / 2].len() * 4 < fam.atom_count());
        for _ in 0..400 {
            let x: f64 = rng.gen_range(0.0..0.5);
            let fast = w_eval(&fam, 1, &iv(x));
            let slow = w_eval_reference(&fam, 1, &iv(x)).unwrap();
            assert!(fast.hi() >= slow.lo(), "x = {x}: {fast} vs {slow}");
            assert!((fast.to_f64() - slow.to_f64()).abs() < 1e-12);
        }
    }
}
