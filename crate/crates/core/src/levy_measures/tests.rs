use super::*;
use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

// Independent oracle: composite Simpson in log coordinates.
fn simpson_log<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let (la, lb) = (a.ln(), b.ln());
    let h = (lb - la) / n as f64;
    let g = |v: f64| {
        let z = v.exp();
        f(z) * z
    };
    let mut s = g(la) + g(lb);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * g(la + h * i as f64);
    }
    s * h / 3.0
}

fn gamma_ar_oracle(eps: f64, kappa: f64) -> f64 {
    let num_lo = 1e-30f64;
    let var = simpson_log(|z| z * (-z).exp(), num_lo, eps, 20_000);
    let s = var.sqrt();
    let tail = if kappa * s < eps { simpson_log(|z| z * (-z).exp(), kappa * s, eps, 20_000) } else { 0.0 };
    tail / var
}

#[test]
fn remark_variance_is_eps_plus_eps_squared() {
    let m = LevyModel::remark();
    assert_relative_eq!(m.variance(0.1).unwrap(), 0.11, max_relative = 1e-10);
    for eps in [1e-1f64, 1e-2, 1e-3] {
        assert_relative_eq!(m.variance_via(eps, Route::Quadrature).unwrap(), eps + eps * eps, max_relative = 1e-9);
    }
}

#[test]
fn remark_constant_matches_direct_integral() {
    let direct = simpson_log(|z| 1.0 / (z * (1.0 + z).ln().powi(2)), 1.0, 1e12, 200_000);
    // tail beyond 1e12 is 1/log(1e12) to leading order
    let tail = 1.0 / (1e12f64).ln();
    assert_relative_eq!(remark_constant(), direct + tail, max_relative = 1e-3);
}

#[test]
fn stable_variance_closed_form_matches_quadrature() {
    for alpha in [0.5, 1.0, 1.5, 1.9] {
        let m = LevyModel::stable(alpha).unwrap();
        for eps in [1e-1f64, 1e-3, 2.0] {
            let exact = 2.0 * eps.powf(2.0 - alpha) / (2.0 - alpha);
            assert_relative_eq!(m.variance(eps).unwrap(), exact, max_relative = 1e-12);
            assert_relative_eq!(m.variance_via(eps, Route::Quadrature).unwrap(), exact, max_relative = 1e-8);
        }
    }
}

#[test]
fn compound_poisson_examples() {
    let m = LevyModel::compound_poisson(vec![(1.0, 1.0)]).unwrap();
    assert_eq!(m.variance(2.0).unwrap(), 1.0);
    assert_eq!(m.delta_statistic(2.0, 1.0).unwrap(), 1.0);
    assert_eq!(m.restricted_mean(2.0, 0.5).unwrap(), 1.0);
    assert_eq!(m.variance(0.5), Err(Error::ZeroVariance { eps: 0.5 }));
    assert!(matches!(m.ar_statistic(0.5, 1.0), Err(Error::ZeroVariance { .. })));
}

#[test]
fn remark_ar_statistic_matches_tail_ratio() {
    let m = LevyModel::remark();
    let eps: f64 = 0.01;
    assert!((eps + eps * eps).sqrt() > eps);
    assert_relative_eq!(m.ar_statistic(eps, 1.0).unwrap(), eps * eps / (eps + eps * eps), max_relative = 1e-10);
    assert_relative_eq!(m.ar_statistic(eps, 1.0).unwrap(), 0.009_900_990_099_009_9, max_relative = 1e-10);
}

#[test]
fn remark_delta_statistic_diverges() {
    let m = LevyModel::remark();
    for eps in [0.1, 0.01] {
        for delta in [0.1, 0.5, 1.0] {
            assert_eq!(m.delta_statistic(eps, delta).unwrap(), f64::INFINITY);
            assert_eq!(m.delta_statistic_via(eps, delta, Route::Quadrature).unwrap(), f64::INFINITY);
        }
    }
}

#[test]
fn gamma_ar_statistic_tends_to_one_half() {
    let m = LevyModel::gamma();
    let oracle = gamma_ar_oracle(1e-4, 1.0);
    assert!((oracle - 0.5).abs() < 2e-2);
    let v = m.ar_statistic(1e-4, 1.0).unwrap();
    assert!((v - 0.5).abs() < 2e-2, "{v}");
    assert_relative_eq!(v, oracle, max_relative = 1e-6);
}

#[test]
fn gamma_closed_forms_match_quadrature() {
    let m = LevyModel::gamma();
    for eps in [1e-4, 1e-2, 0.1, 1.0] {
        let a = m.variance(eps).unwrap();
        let b = m.variance_via(eps, Route::Quadrature).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-8);
        let a = m.restricted_mean(eps, 0.0).unwrap();
        let b = m.restricted_mean_via(eps, 0.0, Route::Quadrature).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-8);
        for delta in [0.1, 0.5, 1.0] {
            let a = m.delta_statistic(eps, delta).unwrap();
            let b = m.delta_statistic_via(eps, delta, Route::Quadrature).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-8);
        }
    }
    assert_relative_eq!(m.restricted_mean(0.1, 0.0).unwrap(), 1.0 - (-0.1f64).exp(), max_relative = 1e-12);
    assert_relative_eq!(m.restricted_mean(0.1, 0.0).unwrap(), 0.095163, max_relative = 1e-5);
}

#[test]
fn stable_delta_statistic_closed_form() {
    let m = LevyModel::stable(1.5).unwrap();
    for eps in [1e-1f64, 1e-2, 1e-3] {
        let var: f64 = 2.0 * eps.powf(0.5) / 0.5;
        let exact = (2.0 * eps.powf(2.4 - 1.5) / (2.4 - 1.5)) / var.powf(1.2);
        assert_relative_eq!(m.delta_statistic(eps, 0.4).unwrap(), exact, max_relative = 1e-12);
        assert_relative_eq!(m.delta_statistic_via(eps, 0.4, Route::Quadrature).unwrap(), exact, max_relative = 1e-8);
    }
}

#[test]
fn stable_ar_vanishes_once_sigma_exceeds_eps() {
    let m = LevyModel::stable(1.5).unwrap();
    for eps in [1e-1f64, 1e-2, 1e-3] {
        let sigma = (2.0 / 0.5f64).sqrt() * eps.powf(1.0 - 0.75);
        assert!(sigma > eps);
        assert_eq!(m.ar_statistic(eps, 1.0).unwrap(), 0.0);
    }
    assert!(m.ar_statistic(1e-3, 1.0).unwrap() <= 1e-12);
}

#[test]
fn symmetric_means_are_exactly_zero() {
    let m = LevyModel::stable(1.2).unwrap();
    assert_eq!(m.restricted_mean(0.3, 0.01).unwrap(), 0.0);
    assert_eq!(m.restricted_mean(0.3, 0.0).unwrap(), 0.0);
    let cp = LevyModel::compound_poisson(vec![(-1.0, 0.5), (1.0, 0.5)]).unwrap();
    assert!(cp.is_symmetric());
    assert_eq!(cp.restricted_mean(2.0, 0.1).unwrap(), 0.0);
}

#[test]
fn restricted_mass_errors() {
    let m = LevyModel::stable(1.0).unwrap();
    assert!(matches!(m.restricted_mass(0.1, 0.0), Err(Error::InfiniteActivity { .. })));
    assert!(matches!(m.sample_marks(0.1, 0.0, 1, &mut ChaCha8Rng::seed_from_u64(1)), Err(Error::InfiniteActivity { .. })));
    assert!(matches!(m.sample_marks(0.1, 0.2, 1, &mut ChaCha8Rng::seed_from_u64(1)), Err(Error::EmptyRestriction { .. })));
}

#[test]
fn construction_rejects_bad_inputs() {
    assert!(LevyModel::stable(2.0).is_err());
    assert!(LevyModel::compound_poisson(vec![(0.0, 1.0)]).is_err());
    assert!(LevyModel::new(LevyBase::GammaSubordinator, TruncationScheme::FamilyIndex).is_err());
    let bad = CustomDensity {
        name: "cauchy_core".into(),
        density: Arc::new(|z: f64| 1.0 / (z * z * z.abs())),
        support: (-1.0, 1.0),
    };
    assert!(matches!(
        LevyModel::new(LevyBase::CustomDensity(bad), TruncationScheme::OuterCutoff),
        Err(Error::NonIntegrable { .. })
    ));
}

#[test]
fn custom_density_reproduces_stable() {
    let d = CustomDensity {
        name: "stable".into(),
        density: Arc::new(|z: f64| z.abs().powf(-2.5)),
        support: (f64::NEG_INFINITY, f64::INFINITY),
    };
    let m = LevyModel::new(LevyBase::CustomDensity(d), TruncationScheme::OuterCutoff).unwrap();
    let s = LevyModel::stable(1.5).unwrap();
    assert_relative_eq!(m.variance(0.1).unwrap(), s.variance(0.1).unwrap(), max_relative = 1e-8);
    assert_relative_eq!(m.ar_statistic(0.5, 0.3).unwrap(), s.ar_statistic(0.5, 0.3).unwrap(), max_relative = 1e-7);
    assert!(m.restricted_mean(0.1, 0.01).unwrap().abs() < 1e-10);
}

#[test]
fn empty_tail_gives_zero() {
    let m = LevyModel::compound_poisson(vec![(0.1, 1.0)]).unwrap();
    // σ = 0.1 so κ = 1 puts the single atom on the strict boundary
    assert_eq!(m.ar_statistic(1.0, 1.0).unwrap(), 0.0);
    assert_eq!(m.ar_statistic(1.0, 0.99).unwrap(), 1.0);
}

#[test]
fn ar_scan_examples() {
    let s = LevyModel::stable(1.5).unwrap();
    let r = ar_scan(&s, &[1e-1, 1e-2, 1e-3], &[1.0]).unwrap();
    assert!(r.cells.iter().all(|c| c.value == Ok(0.0)));
    let g = LevyModel::gamma();
    let r = ar_scan(&g, &[1e-4], &[0.5, 1.0, 1.4]).unwrap();
    for (c, expect) in r.cells.iter().zip([0.875, 0.5, 0.02]) {
        let v = c.value.clone().unwrap();
        assert!((v - expect).abs() < 2e-2, "{v} vs {expect}");
        assert!((v - gamma_ar_oracle(1e-4, c.kappa)).abs() < 1e-6);
    }
    let single = ar_scan(&g, &[0.3], &[0.7]).unwrap();
    assert_eq!(single.cells[0].value, g.ar_statistic(0.3, 0.7));
    assert!(ar_scan(&g, &[], &[1.0]).is_err());
    let cp = LevyModel::compound_poisson(vec![(1.0, 1.0)]).unwrap();
    let r = ar_scan(&cp, &[0.5, 2.0], &[1.0]).unwrap();
    assert!(matches!(r.cells[0].value, Err(Error::ZeroVariance { .. })));
    assert!(r.cells[1].value.is_ok());
}

#[test]
fn two_point_marks() {
    let m = LevyModel::compound_poisson(vec![(-1.0, 0.5), (1.0, 0.5)]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let z = m.sample_marks(2.0, 0.1, 10_000, &mut rng).unwrap();
    assert!(z.iter().all(|v| *v == 1.0 || *v == -1.0));
    let freq = z.iter().filter(|v| **v > 0.0).count() as f64 / 1e4;
    assert!((freq - 0.5).abs() < 0.02);
}

#[test]
fn gamma_marks_respect_support() {
    let m = LevyModel::gamma();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let z = m.sample_marks(0.1, 1e-4, 20_000, &mut rng).unwrap();
    assert!(z.iter().all(|v| *v > 1e-4 && *v <= 0.1));
}

#[test]
fn stable_marks_are_centered() {
    let m = LevyModel::stable(1.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let n = 100_000;
    let z = m.sample_marks(0.1, 0.01, n, &mut rng).unwrap();
    let mean = z.iter().sum::<f64>() / n as f64;
    let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!(mean.abs() < 3.0 * (var / n as f64).sqrt());
}

fn check_second_moment(m: &LevyModel, eps: f64, eta: f64, seed: u64) {
    let n = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = m.sample_marks(eps, eta, n, &mut rng).unwrap();
    let sq: Vec<f64> = z.iter().map(|v| v * v).collect();
    let mean = sq.iter().sum::<f64>() / n as f64;
    let var = sq.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let target = m.even_moment(eps, 2.0, eta, f64::INFINITY, Route::Auto).unwrap() / m.restricted_mass(eps, eta).unwrap();
    assert!((mean - target).abs() < 3.0 * (var / n as f64).sqrt(), "{mean} vs {target}");
}

#[test]
fn sampled_second_moments_match_measure() {
    check_second_moment(&LevyModel::stable(1.5).unwrap(), 0.1, 0.01, 21);
    check_second_moment(&LevyModel::stable(0.5).unwrap(), 1e-2, 1e-4, 22);
    check_second_moment(&LevyModel::gamma(), 1e-2, 1e-5, 23);
}

#[test]
fn remark_marks_hit_the_tail_at_the_right_rate() {
    let m = LevyModel::remark();
    let (eps, eta) = (0.1, 1e-3);
    let n = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let z = m.sample_marks(eps, eta, n, &mut rng).unwrap();
    let tail = m.even_moment(eps, 0.0, 1.0, f64::INFINITY, Route::Auto).unwrap() / m.restricted_mass(eps, eta).unwrap();
    let hits = z.iter().filter(|v| v.abs() > 1.0).count() as f64;
    let sd = (n as f64 * tail * (1.0 - tail)).sqrt();
    assert!((hits - n as f64 * tail).abs() < 3.0 * sd, "{hits} vs {}", n as f64 * tail);
    let inner: Vec<f64> = z.iter().filter(|v| v.abs() <= eps).map(|v| v * v).collect();
    let mean = inner.iter().sum::<f64>() / inner.len() as f64;
    let target = m.even_moment(eps, 2.0, eta, eps, Route::Auto).unwrap() / m.even_moment(eps, 0.0, eta, eps, Route::Auto).unwrap();
    let var = inner.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (inner.len() - 1) as f64;
    assert!((mean - target).abs() < 3.0 * (var / inner.len() as f64).sqrt());
}

#[test]
fn sampler_is_cached_and_deterministic() {
    let m = LevyModel::gamma();
    let a = m.sampler(0.1, 1e-3).unwrap();
    let b = m.clone().sampler(0.1, 1e-3).unwrap();
    assert!(Arc::ptr_eq(&a, &b));
    let x = m.sample_marks(0.1, 1e-3, 50, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    let y = m.sample_marks(0.1, 1e-3, 50, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    assert_eq!(x, y);
}

#[test]
fn mark_rule_integrates_moments() {
    let m = LevyModel::gamma();
    let rule = m.restricted_rule(1e-2, 1e-5).unwrap();
    let mass: f64 = rule.iter().map(|(_, w)| w).sum();
    let mean: f64 = rule.iter().map(|(z, w)| z * w).sum();
    assert_relative_eq!(mass, m.restricted_mass(1e-2, 1e-5).unwrap(), max_relative = 1e-9);
    assert_relative_eq!(mean, m.restricted_mean(1e-2, 1e-5).unwrap(), max_relative = 1e-9);
}

fn model_strategy() -> impl Strategy<Value = LevyModel> {
    prop_oneof![
        (0.05f64..1.95).prop_map(|a| LevyModel::stable(a).unwrap()),
        Just(LevyModel::gamma()),
        Just(LevyModel::remark()),
        proptest::collection::vec((0.01f64..3.0, 0.1f64..2.0, any::<bool>()), 1..6).prop_map(|v| {
            LevyModel::compound_poisson(v.into_iter().map(|(z, w, s)| (if s { z } else { -z }, w)).collect()).unwrap()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ar_statistic_in_unit_interval_and_monotone(m in model_strategy(), le in -4.0f64..0.5, k1 in 0.05f64..3.0, k2 in 0.05f64..3.0) {
        let eps = 10f64.powf(le);
        let (lo, hi) = if k1 < k2 { (k1, k2) } else { (k2, k1) };
        if let (Ok(a), Ok(b)) = (m.ar_statistic(eps, lo), m.ar_statistic(eps, hi)) {
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!((0.0..=1.0).contains(&b));
            prop_assert!(b <= a + 1e-12);
        }
    }

    #[test]
    fn delta_condition_implies_ar_bound(m in model_strategy(), le in -4.0f64..0.5, kappa in 0.05f64..3.0, delta in 0.05f64..2.0) {
        let eps = 10f64.powf(le);
        if let Ok(d) = m.delta_statistic(eps, delta) {
            if d.is_finite() {
                let ar = m.ar_statistic(eps, kappa).unwrap();
                prop_assert!(ar <= d / kappa.powf(delta) * (1.0 + 1e-9) + 1e-300);
            }
        }
    }
}
