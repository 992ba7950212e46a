use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ipcw::{
    band_halfwidth, confidence_band, log_theta_k, variance_estimate, BandConfig, BandwidthRule,
    BandwidthTable, Dataset, Estimator, GSpec, KernelSpec, KnownG, Region, StepFunction, Transform,
};

fn random_dataset(seed: u64, n: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
    let delta = (0..n).map(|_| rng.random_bool(0.7)).collect();
    let x = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    Dataset::univariate(z, delta, x).unwrap()
}

#[test]
fn log_theta_k_examples() {
    let k = KernelSpec::epanechnikov(1);
    assert_eq!(log_theta_k(0.5, &k, std::f64::consts::E), 1.0);
    assert!((log_theta_k(100.0, &k, std::f64::consts::E) - 60f64.ln()).abs() < 1e-12);
}

#[test]
fn four_point_halfwidth_by_hand() {
    let data = Dataset::univariate(
        vec![0.5, 1.0, 1.5, 2.0],
        vec![true, false, true, true],
        vec![-0.2, 0.1, 0.0, 0.3],
    )
    .unwrap();
    // G jumps to 1/3 at z = 1.0 (three at risk, one censored)
    let v = [0.5, 0.0, 1.5 * 1.5, 1.5 * 2.0];
    let k = [0.75 * (1.0 - 0.04), 0.75 * (1.0 - 0.01), 0.75, 0.75 * (1.0 - 0.09)];
    let sk: f64 = k.iter().sum();
    let m: f64 = k.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() / sk;
    let s2: f64 = k.iter().zip(&v).map(|(a, b)| a * (b - m) * (b - m)).sum::<f64>() / sk;
    let f = sk / 4.0;
    // log(max(e, 2 * 0.6)) = 1
    let expected = (2.0 / 4.0 * s2 / f).sqrt() * 0.6f64.sqrt();

    let kernel = KernelSpec::epanechnikov(1);
    let cfg = BandConfig::fixed(1.0, -1.0, 1.0).unwrap();
    let psi = Transform::identity();
    let var = variance_estimate(&data, &psi, &[0.0], 1.0, &kernel, &GSpec::KaplanMeier).unwrap();
    assert!((var.raw - s2).abs() < 1e-13);
    let hw = band_halfwidth(&data, &psi, &[0.0], 1.0, &kernel, &GSpec::KaplanMeier, &cfg).unwrap();
    assert!((hw - expected).abs() < 1e-13, "{hw} vs {expected}");
}

#[test]
fn doubling_psi_doubles_halfwidth() {
    let data = random_dataset(7, 300);
    let kernel = KernelSpec::epanechnikov(1);
    let cfg = BandConfig::fixed(0.3, -1.0, 1.0).unwrap();
    // 2 * 1{y <= 0.9}, as a right-continuous table
    let doubled = Transform::tabulated(StepFunction::new(vec![0.9 + 1e-12], vec![0.0], 2.0).unwrap());
    let single = Transform::indicator(0.9);
    for x in [-0.5, 0.0, 0.4] {
        let a = band_halfwidth(&data, &single, &[x], 0.3, &kernel, &GSpec::KaplanMeier, &cfg).unwrap();
        let b = band_halfwidth(&data, &doubled, &[x], 0.3, &kernel, &GSpec::KaplanMeier, &cfg).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-12 * a.max(1.0), "{b} vs 2 * {a}");
    }
}

#[test]
fn replicated_sample_shrinks_halfwidth_by_root_k() {
    let base = random_dataset(8, 120);
    let k = 4;
    let rep = |v: &[f64]| -> Vec<f64> { (0..k).flat_map(|_| v.iter().copied()).collect() };
    let delta: Vec<bool> = (0..k).flat_map(|_| base.delta().iter().copied()).collect();
    let big = Dataset::univariate(rep(base.z()), delta, rep(base.covariates())).unwrap();
    let kernel = KernelSpec::epanechnikov(1);
    let psi = Transform::indicator(1.0);
    let h = 0.4;
    // keep V / h^d below theta so the log factor does not move
    let cfg = BandConfig::fixed(h, -0.1, 0.1).unwrap();
    // a known G, since tied censored copies change the Kaplan-Meier factors
    let g = GSpec::Known(KnownG::Uniform { lo: 0.0, hi: 4.0 });
    let a = band_halfwidth(&base, &psi, &[0.0], h, &kernel, &g, &cfg).unwrap();
    let b = band_halfwidth(&big, &psi, &[0.0], h, &kernel, &g, &cfg).unwrap();
    assert!((b * (k as f64).sqrt() - a).abs() < 1e-10 * a, "{b} vs {a}");
}

#[test]
fn band_rejects_points_outside_region_and_bad_theta() {
    let data = random_dataset(9, 50);
    let kernel = KernelSpec::epanechnikov(1);
    let cfg = BandConfig::fixed(0.3, -1.0, 1.0).unwrap();
    let r = confidence_band(&data, &Transform::identity(), &[vec![2.0]], &kernel, &GSpec::KaplanMeier, &cfg);
    assert!(r.is_err());
    let bad = BandConfig::new(1.0, Region::interval(-1.0, 1.0).unwrap(), BandwidthRule::Fixed(0.3));
    assert!(bad.is_err());
    let bad_delta = BandConfig::new(
        2.0,
        Region::interval(-1.0, 1.0).unwrap(),
        BandwidthRule::PowerLaw { a: 1.0, delta0: 0.1 },
    );
    assert!(bad_delta.is_err());
}

#[test]
fn power_law_bandwidth_resolves_per_n() {
    let rule = BandwidthRule::PowerLaw { a: 1.0, delta0: 0.25 };
    assert!((rule.resolve(&[0.0], 10_000) - 0.1).abs() < 1e-15);
    assert!(rule.resolve(&[0.0], 500) > rule.resolve(&[0.0], 8000));
}

#[test]
fn per_point_table_warns_outside_reference_bounds() {
    let data = random_dataset(10, 200);
    let kernel = KernelSpec::epanechnikov(1);
    let table = BandwidthTable::new(vec![vec![-0.5], vec![0.5]], vec![0.2, 0.9])
        .unwrap()
        .with_reference(0.5, 2.0, 0.3);
    let cfg = BandConfig::new(
        std::f64::consts::E,
        Region::interval(-1.0, 1.0).unwrap(),
        BandwidthRule::PerPoint(table),
    )
    .unwrap();
    let grid: Vec<Vec<f64>> = vec![vec![-0.6], vec![0.6]];
    let curve = Estimator::new(&data, &kernel, &GSpec::KaplanMeier)
        .unwrap()
        .confidence_band(&Transform::identity(), &grid, &cfg)
        .unwrap();
    assert_eq!(curve.points[0].h, 0.2);
    assert_eq!(curve.points[1].h, 0.9);
    assert!(!curve.warnings.is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn bands_are_symmetric(seed in any::<u64>(), h in 0.2f64..0.8, theta in 1.5f64..10.0) {
        let data = random_dataset(seed, 40);
        let cfg = BandConfig::new(theta, Region::interval(-1.0, 1.0).unwrap(), BandwidthRule::Fixed(h)).unwrap();
        let grid: Vec<Vec<f64>> = ipcw::bands::linspace(-1.0, 1.0, 7).into_iter().map(|x| vec![x]).collect();
        if let Ok(curve) = confidence_band(&data, &Transform::indicator(1.0), &grid, &KernelSpec::epanechnikov(1), &GSpec::KaplanMeier, &cfg) {
            for b in curve.points.iter().filter_map(|p| p.band) {
                prop_assert!(((b.upper - b.estimate) - (b.estimate - b.lower)).abs() <= 1e-12 * b.estimate.abs().max(1.0));
                prop_assert!(b.halfwidth >= 0.0);
                prop_assert!(b.covers(b.estimate, 0.0));
            }
        }
    }

    #[test]
    fn halfwidth_grows_with_theta(seed in any::<u64>(), t1 in 1.1f64..5.0, dt in 0.0f64..20.0) {
        let data = random_dataset(seed, 60);
        let k = KernelSpec::epanechnikov(1);
        let cfg = |t| BandConfig::new(t, Region::interval(-1.0, 1.0).unwrap(), BandwidthRule::Fixed(0.5)).unwrap();
        let psi = Transform::identity();
        if let (Ok(a), Ok(b)) = (
            band_halfwidth(&data, &psi, &[0.0], 0.5, &k, &GSpec::KaplanMeier, &cfg(t1)),
            band_halfwidth(&data, &psi, &[0.0], 0.5, &k, &GSpec::KaplanMeier, &cfg(t1 + dt)),
        ) {
            prop_assert!(b >= a);
        }
    }
}
