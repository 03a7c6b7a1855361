//! The stages of a full run and their assembly into a report.
//!
//! Certification failures end the run but still produce a report with the
//! failing claim marked; configuration and input errors are returned as
//! errors.

use std::collections::BTreeMap;
use std::time::Instant;

use crate::config::RunConfig;
use crate::contour::{band_angles, build_mesh_uncertified, BandTable, ContourMesh};
use crate::error::{Error, Result};
use crate::lattice::{auto_target, certify, coordinate_sums, lll_bounded, make_projections, LllOutcome, TilingCertificate};
use crate::penalty::{envelope_constants, PenaltyFamily};
use crate::report::{CertificateReport, ClaimStatus, IntervalText, LatticeReport, VolumeReport};
use crate::rigor::Interval;
use crate::tail::TailBoundConfig;
use crate::volume::{convolve_volume, final_bound, invert_w, GridFamily, VolumeResult};
use crate::zeta_data::{derive_weights, load_zero_file, WeightSet, ZeroTable};

pub const MESH_CLAIMS: [u8; 3] = [1, 2, 3];
pub const LATTICE_CLAIMS: [u8; 1] = [4];
pub const ALL_CLAIMS: [u8; 5] = [1, 2, 3, 4, 5];

/// Runs `f` on a pool with the configured number of threads.
pub fn with_threads<T: Send>(cfg: &RunConfig, f: impl FnOnce() -> T + Send) -> Result<T> {
    if cfg.threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Argument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

pub fn load_table(cfg: &RunConfig) -> Result<ZeroTable> {
    load_zero_file(&cfg.zeros_path, &cfg.declared_ulp()?, cfg.prec)
}

pub fn load_weights(cfg: &RunConfig, table: &ZeroTable) -> Result<WeightSet> {
    derive_weights(table, cfg.n, cfg.prec)
}

fn margin(name: &str, x: &Interval) -> (String, IntervalText) {
    (name.to_string(), IntervalText::of(x))
}

pub struct MeshStage {
    pub mesh: ContourMesh,
    pub bands: Option<BandTable>,
    pub claims: Vec<ClaimStatus>,
}

/// Claims 1-3: rotation steps and segment lengths, positivity of every
/// `u_j`, and the width of every angle band.
pub fn mesh_stage(cfg: &RunConfig, weights: &WeightSet) -> Result<MeshStage> {
    let contour = cfg.contour(cfg.prec)?;
    let tail = TailBoundConfig::new(weights, cfg.n_prime)?;
    let mesh = build_mesh_uncertified(&contour, weights, &tail)?;
    let d = &mesh.diagnostics;
    let mut claims = vec![
        ClaimStatus {
            claim: 1,
            statement: "|alpha_j - alpha_(j-1)| < pi and |z(t_j) - z(t_(j-1))| < pi/omega_N for all j".into(),
            certified: d.alpha_step_margin.is_positive() && d.length_margin.is_positive(),
            margins: BTreeMap::from([
                margin("pi - max rotation step", &d.alpha_step_margin),
                margin("pi/omega_N - max segment length", &d.length_margin),
            ]),
            detail: Some(format!(
                "worst rotation step at j = {}, worst length at j = {}",
                d.alpha_step_worst_j, d.length_worst_j
            )),
        },
        ClaimStatus {
            claim: 2,
            statement: format!("u_j > 0 for j = 1..{}", contour.m),
            certified: d.min_u.is_positive(),
            margins: BTreeMap::from([margin("min u_j", &d.min_u), margin("tail bound at Y0", &d.tail_at_y0.total)]),
            detail: Some(format!("minimum at j = {}", d.min_u_j)),
        },
    ];
    let bands = if claims.iter().all(|c| c.certified) {
        match band_angles(&mesh, weights) {
            Ok(b) => {
                claims.push(ClaimStatus {
                    claim: 3,
                    statement: "beta''_(n,j) - beta'_(n,j) < pi for all n, j".into(),
                    certified: true,
                    margins: BTreeMap::from([margin("pi - max band width", &b.width_margin)]),
                    detail: Some(format!(
                        "worst at (n, j) = ({}, {}); {} bands fell back to [0, pi]",
                        b.width_worst.0, b.width_worst.1, b.fallback_count
                    )),
                });
                Some(b)
            }
            Err(Error::Certification { detail, .. }) => {
                claims.push(ClaimStatus {
                    claim: 3,
                    statement: "beta''_(n,j) - beta'_(n,j) < pi for all n, j".into(),
                    certified: false,
                    margins: BTreeMap::new(),
                    detail: Some(detail),
                });
                None
            }
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    Ok(MeshStage { mesh, bands, claims })
}

pub struct LatticeStage {
    pub run: LllOutcome,
    pub certificate: TilingCertificate,
}

/// Weights for the lattice step at a precision matching the heuristic's
/// digits, from the first `N + 1` ordinates only.
pub fn lattice_weights(cfg: &RunConfig, table: &ZeroTable) -> Result<WeightSet> {
    let bits = crate::lattice::digits_to_bits(cfg.lll_digits) + 64;
    let k = (cfg.n + 1).min(table.count());
    derive_weights(&table.head(k), cfg.n, bits.max(cfg.prec))
}

/// Claim 4: heuristic reduction followed by interval certification.
pub fn lattice_stage(cfg: &RunConfig, table: &ZeroTable) -> Result<LatticeStage> {
    let weights = lattice_weights(cfg, table)?;
    let proj = make_projections(&weights, cfg.lll_digits)?;
    let run = lll_bounded(&proj, &cfg.lll_delta()?, &cfg.coeff_bound()?)?;
    let d = match cfg.d_target(weights.prec())? {
        Some(d) => d,
        None => auto_target(&coordinate_sums(&run.c, &proj))?,
    };
    let certificate = certify(&run.c, &proj, &d)?;
    Ok(LatticeStage { run, certificate })
}

/// Re-checks a stored coefficient matrix against freshly derived weights.
pub fn recertify(cfg: &RunConfig, table: &ZeroTable, report: &LatticeReport) -> Result<TilingCertificate> {
    let weights = lattice_weights(cfg, table)?;
    let proj = make_projections(&weights, cfg.lll_digits)?;
    let d = report.d.to_interval(weights.prec())?;
    let d = Interval::point(d.hi().clone());
    certify(&report.coefficients()?, &proj, &d)
}

fn lattice_claim(res: &Result<LatticeStage>) -> ClaimStatus {
    let statement = "sum_k |sum_j c_(k,j) u_(j,n)| < d for every n, det C != 0".to_string();
    match res {
        Ok(s) => {
            let worst = s
                .certificate
                .sums
                .iter()
                .max_by(|a, b| a.hi().partial_cmp(b.hi()).expect("finite"))
                .expect("N >= 2");
            ClaimStatus {
                claim: 4,
                statement,
                certified: true,
                margins: BTreeMap::from([margin("d - max coordinate sum", &s.certificate.d.sub(worst))]),
                detail: Some(format!("det C = {}", s.certificate.det)),
            }
        }
        Err(e) => ClaimStatus {
            claim: 4,
            statement,
            certified: false,
            margins: BTreeMap::new(),
            detail: Some(e.to_string()),
        },
    }
}

pub struct VolumeStage {
    pub grid: GridFamily,
    pub result: VolumeResult,
}

/// Claim 5: grid inversion with `eps = 2 d`, convolution and final bound.
pub fn volume_stage(
    cfg: &RunConfig,
    family: &PenaltyFamily,
    weights: &WeightSet,
    cert: &TilingCertificate,
) -> Result<VolumeStage> {
    let eps = cert.d.mul_i64(2);
    let grid = invert_w(family, cfg.ell, &eps)?;
    grid.verify(family)?;
    let sum = convolve_volume(&grid)?;
    let delta = Interval::from_decimal(&cfg.delta, cfg.prec)?;
    let result = final_bound(&sum, &delta, cfg.n, weights.gamma0())?;
    Ok(VolumeStage { grid, result })
}

fn volume_claim(v: &VolumeStage) -> ClaimStatus {
    ClaimStatus {
        claim: 5,
        statement: "(2/delta) 2^N sum_i r_i > 0".into(),
        certified: v.result.kappa_increment.is_positive(),
        margins: BTreeMap::from([margin("kappa increment", &v.result.kappa_increment)]),
        detail: Some(format!("increment >= 1/60 certified: {}", v.result.meets_sixtieth)),
    }
}

fn elapsed(t: Instant) -> f64 {
    (t.elapsed().as_secs_f64() * 10.0).round() / 10.0
}

/// Mesh claims and penalty family, or the report so far if a claim fails.
pub fn run_mesh_and_penalty(
    cfg: &RunConfig,
    weights: &WeightSet,
    report: &mut CertificateReport,
) -> Result<Option<PenaltyFamily>> {
    let t = Instant::now();
    let stage = mesh_stage(cfg, weights)?;
    report.claims.extend(stage.claims.iter().cloned());
    report.timing.insert("mesh".into(), elapsed(t));
    let Some(bands) = stage.bands else {
        return Ok(None);
    };
    if !stage.claims.iter().all(|c| c.certified) {
        return Ok(None);
    }
    let t = Instant::now();
    let family = envelope_constants(&stage.mesh, &bands, weights)?;
    report.timing.insert("penalty".into(), elapsed(t));
    Ok(Some(family))
}

/// Full run: load, mesh, penalty, lattice, volume.
pub fn run_pipeline(cfg: &RunConfig) -> Result<CertificateReport> {
    with_threads(cfg, || run_inner(cfg))?
}

fn run_inner(cfg: &RunConfig) -> Result<CertificateReport> {
    let mut report = CertificateReport::new(cfg.echo());
    let t = Instant::now();
    let table = load_table(cfg)?;
    let weights = load_weights(cfg, &table)?;
    report.timing.insert("load".into(), elapsed(t));

    let Some(family) = run_mesh_and_penalty(cfg, &weights, &mut report)? else {
        report.finish(&ALL_CLAIMS);
        return Ok(report);
    };

    let t = Instant::now();
    let lattice = lattice_stage(cfg, &table);
    report.timing.insert("lattice".into(), elapsed(t));
    report.claims.push(lattice_claim(&lattice));
    let lattice = match lattice {
        Ok(l) => l,
        Err(Error::Certification { .. } | Error::HeuristicFailure(_)) => {
            report.finish(&ALL_CLAIMS);
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    report.lattice = Some(LatticeReport::new(&lattice.certificate, &lattice.run));

    let t = Instant::now();
    let volume = volume_stage(cfg, &family, &weights, &lattice.certificate)?;
    report.timing.insert("volume".into(), elapsed(t));
    report.claims.push(volume_claim(&volume));
    report.volume = Some(VolumeReport::new(&volume.grid, &volume.result));
    report.finish(&ALL_CLAIMS);
    Ok(report)
}

/// Mesh claims only.
pub fn run_mesh(cfg: &RunConfig) -> Result<CertificateReport> {
    with_threads(cfg, || {
        let mut report = CertificateReport::new(cfg.echo());
        let table = load_table(cfg)?;
        let weights = load_weights(cfg, &table)?;
        let t = Instant::now();
        let stage = mesh_stage(cfg, &weights)?;
        report.claims = stage.claims;
        report.timing.insert("mesh".into(), elapsed(t));
        report.finish(&MESH_CLAIMS);
        Ok(report)
    })?
}

/// Lattice heuristic and certificate only.
pub fn run_lattice(cfg: &RunConfig) -> Result<CertificateReport> {
    let mut report = CertificateReport::new(cfg.echo());
    let table = load_table(cfg)?;
    let t = Instant::now();
    let lattice = lattice_stage(cfg, &table);
    report.timing.insert("lattice".into(), elapsed(t));
    report.claims.push(lattice_claim(&lattice));
    match lattice {
        Ok(l) => report.lattice = Some(LatticeReport::new(&l.certificate, &l.run)),
        Err(Error::Certification { .. } | Error::HeuristicFailure(_)) => {}
        Err(e) => return Err(e),
    }
    report.finish(&LATTICE_CLAIMS);
    Ok(report)
}

/// Mesh, penalty and volume on top of a stored lattice certificate, which
/// is re-certified first.
pub fn run_volume(cfg: &RunConfig, stored: &CertificateReport) -> Result<CertificateReport> {
    let lattice = stored
        .lattice
        .as_ref()
        .ok_or_else(|| Error::Argument("the certificate file has no lattice section".into()))?;
    if lattice.n != cfg.n {
        return Err(Error::Argument(format!(
            "certificate is for N = {} but the config has N = {}",
            lattice.n, cfg.n
        )));
    }
    with_threads(cfg, || {
        let mut report = CertificateReport::new(cfg.echo());
        let table = load_table(cfg)?;
        let weights = load_weights(cfg, &table)?;
        let Some(family) = run_mesh_and_penalty(cfg, &weights, &mut report)? else {
            report.finish(&ALL_CLAIMS);
            return Ok(report);
        };
        let t = Instant::now();
        let cert = recertify(cfg, &table, lattice);
        report.timing.insert("lattice".into(), elapsed(t));
        let cert = match cert {
            Ok(c) => c,
            Err(e @ Error::Certification { .. }) => {
                report.claims.push(ClaimStatus {
                    claim: 4,
                    statement: "stored lattice certificate re-checks".into(),
                    certified: false,
                    margins: BTreeMap::new(),
                    detail: Some(e.to_string()),
                });
                report.finish(&ALL_CLAIMS);
                return Ok(report);
            }
            Err(e) => return Err(e),
        };
        report.claims.push(ClaimStatus {
            claim: 4,
            statement: "stored lattice certificate re-checks".into(),
            certified: true,
            margins: BTreeMap::new(),
            detail: Some(format!("det C = {}", cert.det)),
        });
        report.lattice = Some(lattice.clone());
        let t = Instant::now();
        let volume = volume_stage(cfg, &family, &weights, &cert)?;
        report.timing.insert("volume".into(), elapsed(t));
        report.claims.push(volume_claim(&volume));
        report.volume = Some(VolumeReport::new(&volume.grid, &volume.result));
        report.finish(&ALL_CLAIMS);
        Ok(report)
    })?
}
