use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::*;
use crate::error::Error;
use crate::levy_measures::LevyModel;
use crate::noise::Budget;
use crate::rng::{Purpose, StreamId};
use crate::sobolev::TestFunction;
use crate::solver::{InitialProfile, MultiplicativeFunction, NoiseKind, SimConfig, Solver};

fn set(v: Vec<f64>) -> SampleSet {
    SampleSet::from_values(v).unwrap()
}

fn normals(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

#[test]
fn ks_examples() {
    let a = set(normals(1, 500));
    let r = ks_two_sample(&a, &a).unwrap();
    assert_eq!(r.statistic, 0.0);
    assert!(r.p_value > 0.99);
    let r = ks_two_sample(&set(vec![0.0; 50]), &set(vec![1.0; 70])).unwrap();
    assert_eq!(r.statistic, 1.0);
    let r = ks_two_sample(&set(normals(2, 10_000)), &set(normals(3, 10_000))).unwrap();
    assert!(r.statistic < 0.03, "{r:?}");
    assert_eq!(ks_two_sample(&set(vec![]), &a), Err(Error::EmptySample));
}

#[test]
fn ks_matches_brute_force() {
    let a = normals(4, 137);
    let b: Vec<f64> = normals(5, 211).into_iter().map(|x| 0.3 + x).collect();
    let cdf = |v: &[f64], x: f64| v.iter().filter(|&&y| y <= x).count() as f64 / v.len() as f64;
    let d = a.iter().chain(&b).map(|&x| (cdf(&a, x) - cdf(&b, x)).abs()).fold(0.0, f64::max);
    let r = ks_two_sample(&set(a), &set(b)).unwrap();
    assert!((r.statistic - d).abs() < 1e-15);
}

#[test]
fn kolmogorov_distribution_quantiles() {
    assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 1e-4);
    assert!((kolmogorov_survival(1.6276) - 0.01).abs() < 1e-4);
    assert_eq!(kolmogorov_survival(0.0), 1.0);
}

#[test]
fn normal_tail() {
    assert!((normal_two_sided_p(1.959963984540054) - 0.05).abs() < 1e-12);
    assert_eq!(normal_two_sided_p(0.0), 1.0);
}

#[test]
fn ecf_examples() {
    let a = normals(6, 20_000);
    let b: Vec<f64> = a.iter().map(|x| x + 10.0).collect();
    assert_eq!(ecf_distance(&set(a.clone()), &set(a.clone()), &DEFAULT_XI_GRID).unwrap(), 0.0);
    let grid: Vec<f64> = (1..=100).map(|i| i as f64 * 0.01).collect();
    let d = ecf_distance(&set(a), &set(b), &grid).unwrap();
    assert!(d > 1.85 && d <= 2.0, "{d}");
    assert_eq!(ecf_distance(&set(vec![1.0]), &set(vec![2.0]), &[]), Err(Error::EmptySample));
}

#[test]
fn sample_set_rejects_non_finite() {
    assert!(SampleSet::from_values(vec![1.0, f64::NAN]).is_err());
    let s = set(vec![1.0, 2.0, 3.0]);
    assert_eq!(s.mean(), 2.0);
    assert_eq!(s.variance(), 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ks_symmetric_and_monotone_invariant(
        a in prop::collection::vec(-5.0f64..5.0, 1..40),
        b in prop::collection::vec(-5.0f64..5.0, 1..40),
    ) {
        let (sa, sb) = (set(a.clone()), set(b.clone()));
        let ab = ks_two_sample(&sa, &sb).unwrap();
        let ba = ks_two_sample(&sb, &sa).unwrap();
        prop_assert_eq!(ab.statistic, ba.statistic);
        prop_assert!((0.0..=1.0).contains(&ab.statistic));
        let g = |x: f64| x.exp() + x.powi(3);
        let ta = ks_two_sample(&set(a.iter().map(|&x| g(x)).collect()), &set(b.iter().map(|&x| g(x)).collect())).unwrap();
        prop_assert_eq!(ab.statistic, ta.statistic);
    }

    #[test]
    fn ecf_bounded_by_two(
        a in prop::collection::vec(-50.0f64..50.0, 1..30),
        b in prop::collection::vec(-50.0f64..50.0, 1..30),
        xi in prop::collection::vec(-10.0f64..10.0, 1..6),
    ) {
        let d = ecf_distance(&set(a), &set(b), &xi).unwrap();
        prop_assert!((0.0..=2.0 + 1e-12).contains(&d));
    }
}

fn cp_model() -> LevyModel {
    LevyModel::compound_poisson(vec![(-1.0, 3.0), (1.0, 3.0)]).unwrap()
}

fn levy_paths(cfg: SimConfig, n: u64, seed: u64) -> Vec<crate::solver::FieldPath> {
    let solver = Solver::new(cfg).unwrap();
    (0..n).map(|p| solver.simulate(solver.stream(seed, p)).unwrap()).collect()
}

#[test]
fn martingale_trivial_cases() {
    let cfg = SimConfig::new(NoiseKind::levy(cp_model(), 1.0))
        .with_resolution(8, 16, 64)
        .with_f(MultiplicativeFunction::constant(0.0))
        .with_log();
    let paths = levy_paths(cfg, 5, 11);
    let probe = MartingaleProbe::new(1.0, TestFunction::standard_bump(), 0.25, 0.75);
    for r in martingale_residual(&paths, &probe).unwrap() {
        assert_eq!(r.estimate, (0.0, 0.0));
        assert_eq!(r.z_score, (0.0, 0.0));
    }
    let cfg = SimConfig::new(NoiseKind::levy(cp_model(), 1.0))
        .with_resolution(8, 16, 64)
        .with_f(MultiplicativeFunction::sine_shift(0.5, 1.0))
        .with_initial(InitialProfile::Modes(vec![0.5, 0.2]))
        .with_log();
    let paths = levy_paths(cfg, 5, 12);
    let probe = MartingaleProbe::new(2.0, TestFunction::Mode(1), 0.5, 0.5);
    for r in martingale_residual(&paths, &probe).unwrap() {
        assert_eq!(r.estimate, (0.0, 0.0));
    }
}

#[test]
fn martingale_property_holds() {
    let cfg = SimConfig::new(NoiseKind::levy(cp_model(), 1.0))
        .with_resolution(8, 16, 256)
        .with_f(MultiplicativeFunction::sine_shift(0.5, 1.0))
        .with_log();
    let paths = levy_paths(cfg, 400, 13);
    for xi in [0.5, 1.5] {
        let probe = MartingaleProbe::new(xi, TestFunction::standard_bump(), 0.25, 0.75);
        for r in martingale_residual(&paths, &probe).unwrap() {
            assert!(r.max_abs_z() <= 3.5, "{r:?}");
            assert!(r.std_error.0 > 0.0);
        }
    }
}

#[test]
fn martingale_errors() {
    let base = SimConfig::new(NoiseKind::levy(cp_model(), 1.0)).with_resolution(4, 8, 16).with_log();
    let mut paths = levy_paths(base.clone(), 1, 1);
    paths.extend(levy_paths(base.with_f(MultiplicativeFunction::constant(2.0)), 1, 1));
    let probe = MartingaleProbe::new(1.0, TestFunction::Mode(1), 0.0, 1.0);
    assert_eq!(martingale_residual(&paths, &probe), Err(Error::ConfigMismatch));
    let no_log = levy_paths(SimConfig::new(NoiseKind::levy(cp_model(), 1.0)).with_resolution(4, 8, 16), 1, 1);
    assert_eq!(martingale_residual(&no_log, &probe), Err(Error::MissingAtomLog));
    let g = levy_paths(SimConfig::new(NoiseKind::Gaussian).with_resolution(4, 8, 16), 1, 1);
    assert_eq!(martingale_residual(&g, &probe), Err(Error::NotLevyPath));
    let off = MartingaleProbe::new(1.0, TestFunction::Mode(1), 0.0, 0.33);
    assert!(matches!(martingale_residual(&paths[..1], &off), Err(Error::OutOfRange { .. })));
}

#[test]
fn characteristics_partition_and_limits() {
    let cfg = SimConfig::new(NoiseKind::levy(LevyModel::gamma(), 1e-2))
        .with_resolution(8, 16, 64)
        .with_f(MultiplicativeFunction::sine_shift(0.5, 1.0))
        .with_log();
    let phi = TestFunction::standard_bump();
    let paths = levy_paths(cfg, 60, 21);
    let mut with_big = 0;
    for p in &paths {
        let c = characteristics_estimate(p, &phi, 0.01 * phi.sup_norm()).unwrap();
        let lhs = c.final_quadratic() + c.big_sum;
        assert!((lhs - c.full_sum).abs() <= 1e-12 * c.full_sum.max(1.0));
        assert!(c.quadratic.windows(2).all(|w| w[0] <= w[1]));
        if c.big_jumps > 0 {
            with_big += 1;
        }
        let inf = characteristics_estimate(p, &phi, 1e300).unwrap();
        assert_eq!(inf.big_jumps, 0);
        assert_eq!(inf.final_quadratic(), inf.full_sum);
        assert!(inf.drift.iter().all(|&b| b == 0.0));
    }
    assert!(with_big as f64 >= 0.05 * paths.len() as f64, "{with_big}");
    assert!(matches!(characteristics_estimate(&paths[0], &phi, 0.0), Err(Error::OutOfRange { .. })));
}

#[test]
fn quadratic_sum_matches_closed_form() {
    let cfg = SimConfig::new(NoiseKind::levy(LevyModel::stable(0.5).unwrap(), 1e-2))
        .with_resolution(8, 16, 16)
        .with_log();
    let phi = TestFunction::Mode(1);
    let v: Vec<f64> = levy_paths(cfg, 300, 22)
        .iter()
        .map(|p| characteristics_estimate(p, &phi, 1.0).unwrap().final_quadratic())
        .collect();
    let s = set(v);
    // C̄_T = T ∫ φ₁² = 1
    assert!((s.mean() - 1.0).abs() < 3.0 * s.std_error(), "{} ± {}", s.mean(), s.std_error());
}

#[test]
fn dichotomy_report_shape() {
    let template = SimConfig::new(NoiseKind::Gaussian).with_resolution(4, 8, 16).final_only();
    let mut spec = DichotomySpec::new(
        vec![LevyModel::stable(0.5).unwrap(), LevyModel::stable(1.5).unwrap()],
        vec![1e-1, 1e-2],
        template,
        200,
        7,
    );
    spec.functionals = vec![Functional::Pairing(TestFunction::Mode(1)), Functional::SpatialL2];
    spec.budget = Budget { rho: 1e-3, atom_cap: 1e5 };
    spec.control = true;
    let report = dichotomy_experiment(&spec).unwrap();
    assert_eq!(report.rows.len(), 2 * (1 + 4));
    for r in report.select("gaussian_control", "pairing_phi1") {
        assert!(r.ks.unwrap().statistic < 0.2);
    }
    let stable15 = report.select("stable_a1.5", "l2_final");
    assert!(stable15.iter().any(|r| !r.is_valid()));
    for r in &report.rows {
        if let Some(k) = r.ks {
            assert!((0.0..=1.0).contains(&k.statistic));
            assert!(r.ecf.unwrap() >= 0.0);
            assert_eq!(r.paths, 200);
        }
    }
    let csv = report.to_csv();
    assert!(csv.starts_with("model,epsilon,kappa_ref,ar_stat,functional,ks,ks_p,ecf,paths,se\n"));
    assert_eq!(csv.lines().count(), 1 + report.rows.len());
    assert_eq!(dichotomy_experiment(&spec).unwrap(), report);
}

#[test]
fn stream_ids_distinct_per_purpose() {
    let a = StreamId::new(1, 0, Purpose::LevyNoise);
    let b = StreamId::new(1, 0, Purpose::GaussianNoise);
    assert_ne!(a, b);
}
