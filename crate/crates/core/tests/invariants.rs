//! Property tests for the arithmetic, the volume DP, configuration parsing
//! and the solution-set boxes produced by the grid inversion.

use std::path::PathBuf;
use std::sync::OnceLock;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Rational;

use zerodensity::config::RunConfig;
use zerodensity::penalty::{envelope_constants, w_eval_reference, PenaltyFamily};
use zerodensity::pipeline;
use zerodensity::rigor::{F64Interval, Interval};
use zerodensity::volume::{convolve_steps, invert_w, GridFamily};

const PREC: u32 = 128;

fn iv(lo: f64, hi: f64) -> Interval {
    Interval::from_f64_bounds(lo.min(hi), lo.max(hi), PREC)
}

/// A subinterval of `[lo, hi]` picked by two fractions.
fn sub(lo: f64, hi: f64, s: f64, t: f64) -> Interval {
    let (lo, hi) = (lo.min(hi), lo.max(hi));
    let a = lo + (hi - lo) * s.min(t);
    let b = lo + (hi - lo) * s.max(t);
    iv(a.clamp(lo, hi), b.clamp(lo, hi))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn narrower_inputs_give_narrower_results(
        a in -50.0f64..50.0, wa in 0.0f64..10.0,
        b in -50.0f64..50.0, wb in 0.0f64..10.0,
        s in 0.0f64..1.0, t in 0.0f64..1.0,
    ) {
        let (x, y) = (iv(a, a + wa), iv(b, b + wb));
        let (xs, ys) = (sub(a, a + wa, s, t), sub(b, b + wb, t, s));
        prop_assert!(x.add(&y).contains(&xs.add(&ys)));
        prop_assert!(x.sub(&y).contains(&xs.sub(&ys)));
        prop_assert!(x.mul(&y).contains(&xs.mul(&ys)));
        prop_assert!(x.sqr().contains(&xs.sqr()));
        prop_assert!(x.exp().unwrap().contains(&xs.exp().unwrap()));
        prop_assert!(x.sin().contains(&xs.sin()));
        prop_assert!(x.cos().contains(&xs.cos()));
        prop_assert!(x.atan().contains(&xs.atan()));
        prop_assert!(x.nearest_int_distance().contains(&xs.nearest_int_distance()));
        if !y.contains_zero() {
            prop_assert!(x.div(&y).unwrap().contains(&xs.div(&ys).unwrap()));
        }
    }

    #[test]
    fn double_intervals_enclose_exact_results(
        a in -1e6f64..1e6, wa in 0.0f64..1.0,
        b in -1e6f64..1e6, wb in 0.0f64..1.0,
        s in 0.0f64..1.0, t in 0.0f64..1.0,
    ) {
        let (x, y) = (F64Interval::new(a, a + wa), F64Interval::new(b, b + wb));
        let p = a + wa * s;
        let q = b + wb * t;
        let (p, q) = (p.clamp(x.lo(), x.hi()), q.clamp(y.lo(), y.hi()));
        let exact = |r: Rational, z: F64Interval| {
            Rational::from_f64(z.lo()).unwrap() <= r && r <= Rational::from_f64(z.hi()).unwrap()
        };
        let (rp, rq) = (Rational::from_f64(p).unwrap(), Rational::from_f64(q).unwrap());
        prop_assert!(exact(Rational::from(&rp + &rq), x + y));
        prop_assert!(exact(Rational::from(&rp - &rq), x - y));
        prop_assert!(exact(Rational::from(&rp * &rq), x * y));
    }

    #[test]
    fn volume_grows_with_its_steps(
        n in 1usize..4, ell in 1usize..7, seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // dyadic steps, exact in doubles
        let mut steps: Vec<Vec<Rational>> = (0..n)
            .map(|_| (0..ell).map(|_| Rational::from((rng.gen_range(0..1024), 1024))).collect())
            .collect();
        let before = convolve_steps(&steps).unwrap();
        let (r, k) = (rng.gen_range(0..n), rng.gen_range(0..ell));
        steps[r][k] += Rational::from((rng.gen_range(1..64), 1024));
        let after = convolve_steps(&steps).unwrap();
        prop_assert!(after >= before);

        let fast: Vec<Vec<F64Interval>> = steps
            .iter()
            .map(|row| row.iter().map(|q| F64Interval::point(q.to_f64())).collect())
            .collect();
        let mpfr: Vec<Vec<Interval>> = steps
            .iter()
            .map(|row| row.iter().map(|q| Interval::from_rational(q, 200)).collect())
            .collect();
        let f = convolve_steps(&fast).unwrap();
        let m = convolve_steps(&mpfr).unwrap();
        prop_assert!(Rational::from_f64(f.lo()).unwrap() <= after);
        prop_assert!(after <= Rational::from_f64(f.hi()).unwrap());
        prop_assert!(Interval::from_rational(&after, 400).overlaps(&m));
        prop_assert!(m.width() < 1e-50);
    }

    #[test]
    fn config_text_round_trips(
        n in 2usize..30, half_m in 1usize..10000, ell in 1usize..2000,
        digits in 20u32..2000, threads in 0usize..8,
    ) {
        let mut cfg = RunConfig::reduced("zeros.txt");
        cfg.set("N", &n.to_string()).unwrap();
        cfg.set("m", &(2 * half_m).to_string()).unwrap();
        cfg.set("ell", &ell.to_string()).unwrap();
        cfg.set("lll_digits", &digits.to_string()).unwrap();
        cfg.set("threads", &threads.to_string()).unwrap();
        cfg.set("d_target", "1.5e-9").unwrap();
        let back = RunConfig::parse(&cfg.to_text()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

fn reduced() -> &'static (RunConfig, PenaltyFamily) {
    static CELL: OnceLock<(RunConfig, PenaltyFamily)> = OnceLock::new();
    CELL.get_or_init(|| {
        let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/reduced.cfg");
        let cfg = RunConfig::from_file(&path).unwrap();
        let table = pipeline::load_table(&cfg).unwrap();
        let weights = pipeline::load_weights(&cfg, &table).unwrap();
        let stage = pipeline::mesh_stage(&cfg, &weights).unwrap();
        let family = envelope_constants(&stage.mesh, stage.bands.as_ref().unwrap(), &weights).unwrap();
        (cfg, family)
    })
}

/// Every point of every box counted by the DP lies in the solution set:
/// `sum_n w_n(eps + x_n) <= 1`, re-evaluated from the unpruned definition.
#[test]
fn grid_boxes_lie_in_the_solution_set() {
    let (cfg, family) = reduced();
    let ell = 60;
    let eps = Interval::from_decimal("6.1e-8", 64).unwrap();
    let grid: GridFamily = invert_w(family, ell, &eps).unwrap();
    grid.verify(family).unwrap();
    let n = cfg.n;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 200 {
        // a random composition with sum k_n <= ell
        let k: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=2 * ell / n)).collect();
        if k.iter().sum::<usize>() > ell {
            continue;
        }
        let mut total = Interval::zero(64);
        for (idx, &kn) in k.iter().enumerate() {
            let (a, b) = (grid.rows[idx][kn - 1], grid.rows[idx][kn]);
            let x = a + (b - a) * rng.gen::<f64>();
            let at = eps.add(&Interval::from_f64(x.clamp(a, b), 64));
            total = total.add(&w_eval_reference(family, idx + 1, &at).unwrap());
        }
        assert!(
            total.lo().to_f64() <= 1.0,
            "box {k:?} leaves the solution set: sum w = {total}"
        );
        checked += 1;
    }
}

#[test]
fn grid_rows_are_monotone_and_deterministic() {
    let (_, family) = reduced();
    let eps = Interval::from_decimal("6.1e-8", 64).unwrap();
    let a = invert_w(family, 40, &eps).unwrap();
    let b = invert_w(family, 40, &eps).unwrap();
    assert_eq!(a.rows, b.rows);
    for row in &a.rows {
        assert_eq!(row[0], 0.0);
        assert!(row.windows(2).all(|w| w[0] <= w[1]));
        assert!(row[40] <= 0.5);
    }
}
