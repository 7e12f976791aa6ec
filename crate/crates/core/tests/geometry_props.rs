use hsc_core::kahler::{berger_average, hsc, scalar_curvature, sphere_average_hsc, KahlerJet, TangentVector};
use hsc_core::models::{catalog, catalog_model, fubini_study, BaseSpec, BundleSpec, ChartId, Model, ModelSpec};
use hsc_core::wirtinger::Expr;
use hsc_core::C64;
use proptest::prelude::*;

fn cvec(n: usize, r: f64) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-r..r, -r..r).prop_map(|(a, b)| C64::new(a, b)), n)
}

fn nonzero(n: usize) -> impl Strategy<Value = Vec<C64>> {
    cvec(n, 1.0).prop_filter("nonzero", |v| v.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-4)
}

fn model(id: &str) -> Model {
    catalog_model(id).unwrap().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fubini_study_has_constant_curvature(n in 1usize..4, z in cvec(3, 2.0), v in nonzero(3)) {
        let p = fubini_study(n).unwrap();
        let jet = KahlerJet::new(p.potential(0).unwrap(), n);
        let (g, r) = jet.curvature(&z[..n]).unwrap();
        prop_assert!((hsc(&r, &g, &TangentVector::new(v[..n].to_vec())).unwrap() - 2.0).abs() < 1e-9);
        prop_assert!((scalar_curvature(&r, &g).unwrap() - (n * (n + 1)) as f64).abs() < 1e-8);
    }

    #[test]
    fn curvature_has_kahler_symmetries(k in 0usize..15, z in cvec(4, 1.5), lambda in 2.0..20.0f64) {
        let m = &catalog()[k];
        let chart = m.chart(m.charts()[0], lambda).unwrap();
        let dim = chart.dim();
        if let Ok((_, r)) = KahlerJet::new(&chart.potential, dim).curvature(&z[..dim]) {
            prop_assert!(r.kahler_symmetry_defect() < 1e-12);
            prop_assert!(r.reality_defect() < 1e-12);
        }
    }

    /// `H` computed in two charts agrees at the same point and direction.
    #[test]
    fn chart_overlap_invariance(
        id in prop::sample::select(vec!["p2", "p1xp1", "f1", "f2", "sum21", "p2sum10"]),
        z in cvec(3, 0.9), v in nonzero(3), pick in 0usize..16,
    ) {
        let m = model(id);
        let charts = m.charts();
        let (from, to) = (charts[0], charts[1 + pick % (charts.len() - 1)]);
        let dim = m.dim();
        let (z, v) = (&z[..dim], &v[..dim]);
        let Ok((q, w)) = m.push_forward(from, to, z, v) else { return Ok(()) };
        if q.iter().any(|x| x.norm() > 50.0) {
            return Ok(());
        }
        let h = |id: ChartId, p: &[C64], v: &[C64]| {
            let chart = m.chart(id, 3.0).unwrap();
            let (g, r) = KahlerJet::new(&chart.potential, dim).curvature(p).unwrap();
            hsc(&r, &g, &TangentVector::new(v.to_vec())).unwrap()
        };
        let (a, b) = (h(from, z, v), h(to, &q, &w));
        prop_assert!((a - b).abs() < 1e-8 * a.abs().max(1.0), "{from}->{to}: {a} vs {b}");
    }

    /// Adding a pluriharmonic function to the potential changes nothing.
    #[test]
    fn potential_gauge_invariance(
        id in prop::sample::select(vec!["p1", "p2", "f1", "f3", "sum11"]),
        z in cvec(3, 1.0), v in nonzero(3), a in cvec(3, 1.0),
    ) {
        let m = model(id);
        let chart = m.chart(m.charts()[0], 4.0).unwrap();
        let dim = chart.dim();
        // f = Σ a_k w_k² + a_0 w_0 w_{dim-1}, holomorphic
        let f = Expr::sum((0..dim).map(|k| Expr::var(k).powi(2) * Expr::constant(a[k])))
            + Expr::var(0) * Expr::var(dim - 1) * Expr::constant(a[0]);
        let gauged = &chart.potential + &f + f.conj();
        let (z, v) = (&z[..dim], TangentVector::new(v[..dim].to_vec()));
        let (g0, r0) = KahlerJet::new(&chart.potential, dim).curvature(z).unwrap();
        let (g1, r1) = KahlerJet::new(&gauged, dim).curvature(z).unwrap();
        prop_assert!((g0.matrix() - g1.matrix()).norm() < 1e-9);
        let (h0, h1) = (hsc(&r0, &g0, &v).unwrap(), hsc(&r1, &g1, &v).unwrap());
        prop_assert!((h0 - h1).abs() < 1e-9, "{h0} vs {h1}");
    }

    /// Rescaling the bundle metric by `|1 + a z|²`, a holomorphic change of
    /// frame, leaves the metric on the projectivization unchanged.
    #[test]
    fn bundle_gauge_invariance(a in -0.5..0.5f64, z in cvec(2, 0.7), lambda in 1.5..6.0f64) {
        let spec = |scale: &str| ModelSpec {
            name: None,
            catalog: None,
            base: Some(BaseSpec::FubiniStudy { n: 1 }),
            bundle: Some(BundleSpec::Custom {
                metric: vec![
                    vec![
                        vec![format!("{scale}/(1 + z1*conj(z1))"), "0".into()],
                        vec!["0".into(), scale.to_string()],
                    ],
                    vec![vec!["1/(1 + z1*conj(z1))".into(), "0".into()], vec!["0".into(), "1".into()]],
                ],
                cocycles: Vec::new(),
            }),
        };
        let m0 = spec("1").build().unwrap();
        let m1 = spec(&format!("(1 + ({a})*z1)*(1 + ({a})*conj(z1))")).build().unwrap();
        let c0 = m0.chart(ChartId::new(0, 0), lambda).unwrap();
        let c1 = m1.chart(ChartId::new(0, 0), lambda).unwrap();
        let g0 = KahlerJet::new(&c0.potential, 2).metric(&z).unwrap();
        let g1 = KahlerJet::new(&c1.potential, 2).metric(&z).unwrap();
        prop_assert!((g0.matrix() - g1.matrix()).norm() < 1e-9);
    }
}

#[test]
fn berger_average_on_products_and_bundles() {
    for (id, lambda) in [("f0", 1.0), ("f2", 5.0), ("p1xp2", 1.0)] {
        let m = model(id);
        let chart = m.chart(m.charts()[0], lambda).unwrap();
        let dim = chart.dim();
        let p = vec![C64::new(0.3, -0.2); dim];
        let (g, r) = KahlerJet::new(&chart.potential, dim).curvature(&p).unwrap();
        let expected = berger_average(scalar_curvature(&r, &g).unwrap(), dim);
        let avg = sphere_average_hsc(&r, &g, 40_000, 17).unwrap();
        let z = (avg.mean - expected) / avg.std_error;
        assert!(z.abs() < 4.0, "{id}: mean {} expected {expected} z {z}", avg.mean);
    }
}

/// Along a fiber through `t = 0` the curvature is that of the fiberwise
/// Fubini–Study metric.
#[test]
fn fiber_directions_at_zero_have_curvature_two() {
    for (id, lambda) in [("f1", 4.0), ("f2", 5.0), ("f3", 9.0), ("sum21", 6.0)] {
        let m = model(id);
        for chart in m.charts() {
            for z in [0.0, 0.35, -0.7] {
                let p = [C64::new(z, 0.5 * z), C64::new(0.0, 0.0)];
                let v = [C64::new(0.0, 0.0), C64::new(0.6, -0.8)];
                let c = m.chart(chart, lambda).unwrap();
                let (g, r) = KahlerJet::new(&c.potential, 2).curvature(&p).unwrap();
                let h = hsc(&r, &g, &TangentVector::new(v.to_vec())).unwrap();
                assert!((h - 2.0).abs() < 1e-9, "{id} {chart} z={z}: {h}");
            }
        }
    }
}
