use hsc_core::kahler::{hsc, KahlerJet, TangentVector};
use hsc_core::models::{catalog_model, ChartId, GridSpec};
use hsc_core::positivity::{
    certify_lambda, max_hsc_at_point, min_hsc_at_point, reduced_polynomial, scan, OptimizerOptions, ScanOptions,
};
use hsc_core::C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const PROBES: usize = 1000;

fn cvec(n: usize, r: f64) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-r..r, -r..r).prop_map(|(a, b)| C64::new(a, b)), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// The optimizer's minimum is below, and its maximum above, `H` at every
    /// one of 1000 random directions.
    #[test]
    fn optimizer_bounds_random_probes(
        id in prop::sample::select(vec!["f1", "f2", "sum21", "p1xp2", "p2sum10"]),
        z in cvec(3, 1.5), lambda in 2.0..30.0f64, seed in any::<u64>(),
    ) {
        let m = catalog_model(id).unwrap().unwrap();
        let chart = m.chart(ChartId::new(0, 0), lambda).unwrap();
        let dim = chart.dim();
        let Ok((g, r)) = KahlerJet::new(&chart.potential, dim).curvature(&z[..dim]) else { return Ok(()) };
        let opts = OptimizerOptions { seed, ..OptimizerOptions::default() };
        let lo = min_hsc_at_point(&r, &g, &opts).unwrap().value;
        let hi = max_hsc_at_point(&r, &g, &opts).unwrap().value;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        for _ in 0..PROBES {
            let v: Vec<C64> = (0..dim)
                .map(|_| C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
                .collect();
            let h = hsc(&r, &g, &TangentVector::new(v)).unwrap();
            let slack = 1e-9 * h.abs().max(1.0);
            prop_assert!(lo <= h + slack, "min {lo} above probe {h}");
            prop_assert!(hi >= h - slack, "max {hi} below probe {h}");
        }
    }

    /// `λ*` is sharp: slightly above it the reduced polynomial is positive on
    /// a dense grid, slightly below it some `s` makes it non-positive.
    #[test]
    fn certificate_is_sharp(h0 in 0.1..5.0f64, c in 1e-3..50.0f64) {
        let cert = certify_lambda(h0, c).unwrap();
        let above = cert.lambda_star * (1.0 + 1e-6);
        let below = cert.lambda_star * (1.0 - 1e-3);
        let top = 2.0 * cert.stationary_point + 10.0;
        let steps = 20_000;
        let grid = (0..=steps).map(|k| top * k as f64 / steps as f64);
        prop_assert!(grid.clone().all(|s| reduced_polynomial(above, h0, c, s) > 0.0));
        prop_assert!(reduced_polynomial(below, h0, c, cert.stationary_point) <= 0.0);
        prop_assert!((cert.grid_lambda_star - cert.lambda_star).abs() <= 1e-6 * cert.lambda_star.max(1.0));
    }
}

#[test]
fn certificate_values() {
    // independent values from a cubic-formula oracle
    for (c, want) in [
        (1.0, 7.443973062848109),
        (2.0, 25.23605826041129),
        (3.0, 52.55452810806263),
        (4.5, 110.79082582944352),
        (8.0, 324.9705567284401),
    ] {
        let cert = certify_lambda(2.0, c).unwrap();
        assert!(
            (cert.lambda_star - want).abs() < 1e-9 * want,
            "C={c}: {}",
            cert.lambda_star
        );
    }
    let cert = certify_lambda(2.0, 1.0).unwrap();
    assert!((cert.stationary_point - 1.5256871208655178).abs() < 1e-12);
    assert!((cert.inner_min + 13.887946125696217).abs() < 1e-10);
}

#[test]
fn scan_reports_product_pinching() {
    let f0 = catalog_model("f0").unwrap().unwrap();
    let rep = scan(&f0, 1.0, &GridSpec::new(5, 5, 2.0), &ScanOptions::default()).unwrap();
    assert!(rep.positive());
    assert!((rep.global_min_h.unwrap() - 1.0).abs() < 1e-6);
    assert!((rep.pinching.unwrap() - 0.5).abs() < 1e-6);
}

/// A rank-one bundle `O(a)` turns `λg` into `(λ − a)g`, so the minimum of
/// `H` is `2 / (λ − a)` over `P¹`.
#[test]
fn rank_one_scaling_law() {
    for (a, lambda) in [(0, 4.0), (1, 3.0), (2, 2.5), (-1, 1.0)] {
        let m = hsc_core::models::projective_sum(1, &[a]).unwrap();
        let rep = scan(&m, lambda, &GridSpec::new(7, 1, 2.0), &ScanOptions::default()).unwrap();
        let want = 2.0 / (lambda - a as f64);
        assert!(
            (rep.global_min_h.unwrap() - want).abs() < 1e-8,
            "a={a}: {:?}",
            rep.global_min_h
        );
        assert!((rep.global_max_h.unwrap() - want).abs() < 1e-8);
    }
}
