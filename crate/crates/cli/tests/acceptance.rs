//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. Runs in a few minutes on one core.

use std::process::Command;
use std::time::Instant;

use hsc_core::kahler::{berger_average, hsc, scalar_curvature, sphere_average_hsc, KahlerJet, TangentVector};
use hsc_core::linalg::PD_FLOOR;
use hsc_core::models::{bundle_catalog, catalog, catalog_model, fubini_study, ChartId, GridSpec, Model};
use hsc_core::papercheck::{run_suite, IdentityId, SuiteOptions};
use hsc_core::positivity::{certificate_consistency, scan, ConsistencyOptions, ConsistencyReport, ScanOptions};
use hsc_core::wirtinger::fd::richardson;
use hsc_core::wirtinger::{all_up_to, differentiate, Expr};
use hsc_core::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const FS_H_TOL: f64 = 1e-9;
const FS_SCALAR_TOL: f64 = 1e-8;
const FS_PAIRS: usize = 100;
const PRODUCT_TOL: f64 = 1e-6;
const IDENTITY_TOL: f64 = 1e-8;
const DECOMPOSITION_TOL: f64 = 1e-9;
const DECOMPOSITION_TRIALS: usize = 100;
const MIN_PAPERCHECK_MODELS: usize = 6;
const HIRZEBRUCH_GRID: (usize, usize) = (33, 17);
const LAMBDA_TOL: f64 = 0.01;
const BOUND_TRIALS: usize = 500;
const BERGER_SAMPLES: usize = 100_000;
const BERGER_MAX_Z: f64 = 4.0;
const OVERLAP_TOL: f64 = 1e-8;
const GAUGE_TOL: f64 = 1e-9;
const FD_TOL: f64 = 1e-6;
const SYMMETRY_TOL: f64 = 1e-12;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn gauss(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n)
        .map(|_| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect()
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<C64> {
    (0..n)
        .map(|_| C64::new(rng.random_range(-r..r), rng.random_range(-r..r)))
        .collect()
}

fn model(id: &str) -> Model {
    catalog_model(id).unwrap().unwrap()
}

fn h_at(m: &Model, chart: ChartId, lambda: f64, p: &[C64], v: &[C64]) -> f64 {
    let c = m.chart(chart, lambda).unwrap();
    let (g, r) = KahlerJet::new(&c.potential, m.dim()).curvature(p).unwrap();
    hsc(&r, &g, &TangentVector::new(v.to_vec())).unwrap()
}

fn constant_curvature() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut dh, mut ds) = (0.0f64, 0.0f64);
    for n in 1..=3 {
        let p = fubini_study(n).unwrap();
        let jet = KahlerJet::new(p.potential(0).unwrap(), n);
        for _ in 0..FS_PAIRS {
            let (g, r) = jet.curvature(&uniform(&mut rng, n, 2.0)).unwrap();
            let h = hsc(&r, &g, &TangentVector::new(gauss(&mut rng, n))).unwrap();
            dh = dh.max((h - 2.0).abs());
            ds = ds.max((scalar_curvature(&r, &g).unwrap() - (n * (n + 1)) as f64).abs());
        }
    }
    verdict(
        dh < FS_H_TOL && ds < FS_SCALAR_TOL,
        format!("P¹..P³, {FS_PAIRS} pairs each: max |H − 2| = {dh:.2e}, max |S − n(n+1)| = {ds:.2e}"),
    )
}

fn product_oracle() -> Verdict {
    let rep = scan(&model("f0"), 1.0, &GridSpec::default(), &ScanOptions::default()).unwrap();
    let min = rep.global_min_h.unwrap_or(f64::NAN);
    let pinch = rep.pinching.unwrap_or(f64::NAN);
    // c₁c₂/(c₁+c₂) with c₁ = c₂ = 2, over the maximum 2
    verdict(
        (min - 1.0).abs() <= PRODUCT_TOL && (pinch - 0.5).abs() <= PRODUCT_TOL,
        format!(
            "F0 λ=1, {} points: min H = {min:.9}, pinching = {pinch:.9}",
            rep.points_scanned
        ),
    )
}

fn paper_formulas() -> Verdict {
    let models = bundle_catalog();
    let rep = run_suite(
        &models,
        &SuiteOptions {
            decomposition_trials: DECOMPOSITION_TRIALS,
            ..SuiteOptions::default()
        },
    );
    let mut covered = std::collections::BTreeSet::new();
    let mut worst_identity = 0.0f64;
    let mut worst_decomposition = 0.0f64;
    let mut pass = rep.excluded.is_empty();
    for case in &rep.cases {
        match case.id {
            IdentityId::OriginValues => {}
            id if IdentityId::SECOND_DERIVATIVES.contains(&id) => {}
            IdentityId::CurvatureDecomposition => {
                worst_decomposition = worst_decomposition.max(case.deviation);
                pass &= case.pass && case.deviation < DECOMPOSITION_TOL;
                continue;
            }
            _ => continue,
        }
        covered.insert(case.model.clone());
        worst_identity = worst_identity.max(case.deviation);
        pass &= case.pass && case.deviation < IDENTITY_TOL;
    }
    pass &= covered.len() >= MIN_PAPERCHECK_MODELS;
    let others = rep
        .cases
        .iter()
        .filter(|c| matches!(c.id, IdentityId::FirstDerivs | IdentityId::FinalBound));
    let others_pass = others.clone().filter(|c| c.pass).count();
    verdict(
        pass,
        format!(
            "{} models: max identity deviation {worst_identity:.2e}, max decomposition deviation {worst_decomposition:.2e}; \
             first-derivative and final-bound cases {others_pass}/{} pass",
            covered.len(),
            others.count()
        ),
    )
}

fn hirzebruch_runs() -> Vec<(i32, ConsistencyReport)> {
    let (base, fiber) = HIRZEBRUCH_GRID;
    (1..=3)
        .map(|a| {
            let opts = ConsistencyOptions {
                lambda_lo: a as f64,
                tol: LAMBDA_TOL,
                grid: GridSpec::new(base, fiber, 2.0),
                scan: ScanOptions {
                    pinching: false,
                    ..ScanOptions::default()
                },
                trials: BOUND_TRIALS,
                seed: a as u64,
                ..ConsistencyOptions::default()
            };
            (a, certificate_consistency(&model(&format!("f{a}")), &opts).unwrap())
        })
        .collect()
}

fn threshold(runs: &[(i32, ConsistencyReport)]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (a, rep) in runs {
        match &rep.lambda0 {
            Some(l) => {
                let min = l.verification.global_min_h.unwrap_or(f64::NAN);
                pass &= l.lambda0.is_finite() && l.verified && min > 0.0;
                parts.push(format!("F{a}: λ₀ = {:.4}, min H at λ₀+tol = {min:.3e}", l.lambda0));
            }
            None => {
                pass = false;
                parts.push(format!("F{a}: no λ₀ ({})", rep.notes.join("; ")));
            }
        }
    }
    verdict(pass, parts.join("; "))
}

fn certificate_soundness(runs: &[(i32, ConsistencyReport)]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (a, rep) in runs {
        let slack = rep
            .final_bound
            .iter()
            .map(|c| c.min_slack)
            .fold(f64::INFINITY, f64::min);
        let samples: usize = rep.final_bound.iter().map(|c| c.samples).sum();
        pass &= rep.pass() && rep.final_bound.iter().all(|c| c.samples >= BOUND_TRIALS);
        parts.push(format!(
            "F{a}: C = {:.3}, λ* = {:.3} ≥ λ₀ = {:.3}: {}, scan at λ*: {}, {samples} samples min slack {slack:.2e}",
            rep.bound.c,
            rep.lambda_certified,
            rep.lambda0.as_ref().map_or(f64::NAN, |l| l.lambda0),
            rep.sufficient,
            rep.scan_positive,
        ));
    }
    verdict(pass, parts.join("; "))
}

fn berger() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (id, lambda) in [("f0", 1.0), ("f2", 5.0), ("p1xp2", 1.0)] {
        let m = model(id);
        let chart = m.chart(m.charts()[0], lambda).unwrap();
        let p = vec![C64::new(0.4, -0.3); m.dim()];
        let (g, r) = KahlerJet::new(&chart.potential, m.dim()).curvature(&p).unwrap();
        let expected = berger_average(scalar_curvature(&r, &g).unwrap(), m.dim());
        let avg = sphere_average_hsc(&r, &g, BERGER_SAMPLES, 2024).unwrap();
        let z = (avg.mean - expected) / avg.std_error;
        pass &= z.abs() < BERGER_MAX_Z;
        parts.push(format!("{id}: z = {z:+.2}"));
    }
    verdict(pass, format!("{BERGER_SAMPLES} samples; {}", parts.join(", ")))
}

fn engine_integrity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut sym, mut overlap, mut gauge, mut fd) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut pairs = 0;
    for m in catalog() {
        let dim = m.dim();
        let lambda = 3.0 + m.r() as f64 * 5.0;
        let charts = m.charts();
        for &id in &charts {
            let chart = m.chart(id, lambda).unwrap();
            let jet = KahlerJet::new(&chart.potential, dim);
            for _ in 0..4 {
                let p = uniform(&mut rng, dim, 0.8);
                let (_, r) = jet.curvature(&p).unwrap();
                sym = sym.max(r.kahler_symmetry_defect()).max(r.reality_defect());
            }
        }
        for &to in &charts[1..] {
            let from = charts[0];
            let p = uniform(&mut rng, dim, 0.6);
            let v = gauss(&mut rng, dim);
            let (q, w) = m.push_forward(from, to, &p, &v).unwrap();
            let (a, b) = (h_at(&m, from, lambda, &p, &v), h_at(&m, to, lambda, &q, &w));
            overlap = overlap.max((a - b).abs() / a.abs().max(1.0));
            pairs += 1;
        }
        let chart = m.chart(charts[0], lambda).unwrap();
        let coeff = uniform(&mut rng, dim, 1.0);
        let f = Expr::sum((0..dim).map(|k| Expr::var(k).powi(3) * Expr::constant(coeff[k])));
        let gauged = &chart.potential + &f + f.conj();
        let p = uniform(&mut rng, dim, 0.8);
        let v = TangentVector::new(gauss(&mut rng, dim));
        let (g0, r0) = KahlerJet::new(&chart.potential, dim).curvature(&p).unwrap();
        let (g1, r1) = KahlerJet::new(&gauged, dim).curvature(&p).unwrap();
        gauge = gauge.max((hsc(&r0, &g0, &v).unwrap() - hsc(&r1, &g1, &v).unwrap()).abs());
        let p = uniform(&mut rng, dim, 0.5);
        for d in all_up_to(dim, 2, 2)
            .into_iter()
            .filter(|d| d.holo().len() == d.anti().len() && d.order() > 0)
        {
            let exact = differentiate(&chart.potential, &d).eval(&p).unwrap();
            let approx = richardson(&chart.potential, &d, &p, 2e-2, 2).unwrap();
            fd = fd.max((exact - approx).norm() / exact.norm().max(1.0));
        }
    }
    verdict(
        sym < SYMMETRY_TOL && overlap < OVERLAP_TOL && gauge < GAUGE_TOL && fd < FD_TOL,
        format!(
            "catalog: symmetry defect {sym:.2e}, overlap {overlap:.2e} over {pairs} chart pairs, \
             gauge {gauge:.2e}, finite differences {fd:.2e}"
        ),
    )
}

fn negative_control() -> Verdict {
    let f2 = model("f2");
    let chart = f2.chart(ChartId::new(0, 0), 2.0).unwrap();
    let g = KahlerJet::new(&chart.potential, 2)
        .metric(&[C64::new(0.0, 0.0); 2])
        .unwrap();
    let eig = g.min_eigenvalue();
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("f2.toml");
    std::fs::write(
        &cfg,
        "[model]\ncatalog = \"f2\"\n[scan]\nlambda = 2.0\n[scan.grid]\nbase_points = 5\nfiber_points = 5\n",
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_hsclab"))
        .args([
            "scan",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .output()
        .unwrap();
    let code = out.status.code();
    verdict(
        eig <= PD_FLOOR && code.is_some_and(|c| c != 0),
        format!("F2 λ=2: smallest eigenvalue at origin {eig:.2e}, hsclab scan exit code {code:?}"),
    )
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<(usize, &str, Verdict)> = Vec::new();
    let mut run = |k: usize, name: &'static str, f: &mut dyn FnMut() -> Verdict| {
        let t = Instant::now();
        let v = f();
        println!(
            "criterion {k} [{}] {name}: {} ({:.1}s)",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            t.elapsed().as_secs_f64()
        );
        results.push((k, name, v));
    };
    run(1, "constant-curvature oracle", &mut constant_curvature);
    run(2, "product oracle", &mut product_oracle);
    run(3, "metric and curvature identities", &mut paper_formulas);
    let t = Instant::now();
    let runs = hirzebruch_runs();
    println!(
        "F1..F3 threshold and certificate runs: {:.1}s",
        t.elapsed().as_secs_f64()
    );
    run(4, "positive curvature above λ₀ on F1..F3", &mut || threshold(&runs));
    run(5, "certificate soundness", &mut || certificate_soundness(&runs));
    run(6, "Berger sphere average", &mut berger);
    run(7, "engine integrity", &mut engine_integrity);
    run(8, "negative control", &mut negative_control);
    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} criteria pass in {:.0}s",
        results.len() - failed.len(),
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
