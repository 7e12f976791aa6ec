use anyhow::{bail, Context, Result};
use hsc_core::kahler::{
    berger_average, hsc, scalar_curvature, sphere_average_hsc, HermitianForm, KahlerJet, SphereAverage, TangentVector,
};
use hsc_core::models::{bundle_catalog, catalog_model, BundleBound, ChartId, Model};
use hsc_core::papercheck::{run_suite, SuiteOptions, SuiteReport};
use hsc_core::positivity::{
    certificate_inputs, certify_lambda, find_lambda0, max_hsc_at_point, min_hsc_at_point, scan, Certificate,
    Lambda0Report, ScanOptions, ScanReport,
};
use hsc_core::{Error, C64};
use serde::Serialize;

use crate::config::RunConfig;
use crate::report::{opt, Table};

/// A finished command: the report, its table and whether its check passed.
pub struct Outcome<T> {
    pub report: T,
    pub table: Table,
    pub pass: bool,
}

fn build_model(cfg: &RunConfig) -> Result<Model> {
    Ok(cfg.model_spec()?.build()?)
}

fn check_chart(model: &Model, chart: ChartId) -> Result<()> {
    if !model.charts().contains(&chart) {
        bail!(
            "model {} has no chart {chart}; charts are {:?}",
            model.name,
            model.charts()
        );
    }
    Ok(())
}

fn check_dim(what: &str, v: &[C64], dim: usize) -> Result<()> {
    if v.len() != dim {
        bail!("{what} has {} components but the model has dimension {dim}", v.len());
    }
    Ok(())
}

fn fmt_vec(v: &[C64]) -> String {
    v.iter()
        .map(|z| format!("{}{:+}i", z.re, z.im))
        .collect::<Vec<_>>()
        .join(" ")
}

fn matrix(g: &HermitianForm) -> Vec<Vec<C64>> {
    let n = g.dim();
    (0..n).map(|a| (0..n).map(|b| g.get(a, b)).collect()).collect()
}

#[derive(Serialize)]
pub struct DirectionValue {
    pub direction: Vec<C64>,
    pub h: f64,
}

#[derive(Serialize)]
pub struct EvalPoint {
    pub coords: Vec<C64>,
    pub metric: Vec<Vec<C64>>,
    pub eigenvalues: Vec<f64>,
    pub kahler: bool,
    /// `R_{ab̄cd̄}` flattened with `d` fastest.
    pub curvature: Vec<C64>,
    pub scalar_curvature: Option<f64>,
    pub directions: Vec<DirectionValue>,
    pub min_h: Option<f64>,
    pub max_h: Option<f64>,
}

#[derive(Serialize)]
pub struct EvalReport {
    pub model: String,
    pub lambda: f64,
    pub chart: ChartId,
    pub points: Vec<EvalPoint>,
}

pub fn eval(cfg: &RunConfig) -> Result<Outcome<EvalReport>> {
    let model = build_model(cfg)?;
    let c = &cfg.eval;
    check_chart(&model, c.chart)?;
    let dim = model.dim();
    let chart = model.chart(c.chart, c.lambda)?;
    let jet = KahlerJet::new(&chart.potential, dim);
    let points = if c.points.is_empty() {
        vec![vec![C64::new(0.0, 0.0); dim]]
    } else {
        c.points.clone()
    };
    let mut opts = c.optimizer.clone();
    opts.seed = cfg.seed;
    let mut table = Table::new(vec!["point", "direction", "h", "min_eigenvalue"]);
    let mut out = Vec::new();
    for p in points {
        check_dim("point", &p, dim)?;
        let (g, r) = jet.curvature(&p)?;
        let eigenvalues = g.eigenvalues();
        let min_eig = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let kahler = min_eig > 0.0;
        let mut directions = Vec::new();
        for v in &c.directions {
            check_dim("direction", v, dim)?;
            let h = hsc(&r, &g, &TangentVector::new(v.clone())).context("evaluating H")?;
            table.push(vec![fmt_vec(&p), fmt_vec(v), h.to_string(), min_eig.to_string()]);
            directions.push(DirectionValue {
                direction: v.clone(),
                h,
            });
        }
        let (min_h, max_h) = if c.directions.is_empty() && kahler {
            let lo = min_hsc_at_point(&r, &g, &opts)?;
            let hi = max_hsc_at_point(&r, &g, &opts)?;
            table.push(vec![
                fmt_vec(&p),
                "min".into(),
                lo.value.to_string(),
                min_eig.to_string(),
            ]);
            table.push(vec![
                fmt_vec(&p),
                "max".into(),
                hi.value.to_string(),
                min_eig.to_string(),
            ]);
            (Some(lo.value), Some(hi.value))
        } else {
            (None, None)
        };
        out.push(EvalPoint {
            scalar_curvature: if kahler { Some(scalar_curvature(&r, &g)?) } else { None },
            metric: matrix(&g),
            curvature: r.data().to_vec(),
            coords: p,
            eigenvalues,
            kahler,
            directions,
            min_h,
            max_h,
        });
    }
    let pass = out.iter().all(|p| p.kahler);
    Ok(Outcome {
        report: EvalReport {
            model: model.name.clone(),
            lambda: c.lambda,
            chart: c.chart,
            points: out,
        },
        table,
        pass,
    })
}

fn seeded(opts: &ScanOptions, seed: u64) -> ScanOptions {
    let mut o = opts.clone();
    o.optimizer.seed = seed;
    o
}

pub fn scan_cmd(cfg: &RunConfig) -> Result<Outcome<ScanReport>> {
    let model = build_model(cfg)?;
    let c = &cfg.scan;
    let report = scan(&model, c.lambda, &c.grid, &seeded(&c.options, cfg.seed))?;
    let mut table = Table::new(vec![
        "chart",
        "coords",
        "min_eigenvalue",
        "min_h",
        "max_h",
        "converged",
        "error",
    ]);
    let rows = if report.points.is_empty() {
        &report.failures
    } else {
        &report.points
    };
    for p in rows {
        table.push(vec![
            p.chart.to_string(),
            fmt_vec(&p.coords),
            p.min_eigenvalue.to_string(),
            opt(p.min_h),
            opt(p.max_h),
            p.converged.to_string(),
            p.error.clone().unwrap_or_default(),
        ]);
    }
    let pass = report.positive();
    Ok(Outcome { report, table, pass })
}

pub fn lambda0(cfg: &RunConfig) -> Result<Outcome<Lambda0Report>> {
    let model = build_model(cfg)?;
    let c = &cfg.lambda0;
    let report = find_lambda0(
        &model,
        c.lambda_lo,
        c.lambda_hi,
        c.tol,
        &c.grid,
        &seeded(&c.options, cfg.seed),
    )
    .map_err(|e| match e {
        Error::Bracket { .. } => anyhow::Error::new(e).context("raise lambda0.lambda_hi in the config"),
        e => e.into(),
    })?;
    let mut table = Table::new(vec![
        "lambda",
        "coarse",
        "positive",
        "min_h",
        "worst_eigenvalue",
        "points",
    ]);
    for p in &report.probes {
        table.push(vec![
            p.lambda.to_string(),
            p.coarse.to_string(),
            p.positive.to_string(),
            opt(p.min_h),
            p.worst_eigenvalue.to_string(),
            p.points_scanned.to_string(),
        ]);
    }
    let pass = report.verified;
    Ok(Outcome { report, table, pass })
}

#[derive(Serialize)]
pub struct CertifyReport {
    pub model: Option<String>,
    /// Constituents of `C` when it was estimated from the model.
    pub bound: Option<BundleBound>,
    pub certificate: Certificate,
}

pub fn certify(cfg: &RunConfig) -> Result<Outcome<CertifyReport>> {
    let c = &cfg.certify;
    let (model, bound, h0, cc) = match (c.h0, c.c) {
        (Some(h0), Some(cc)) => (None, None, h0, cc),
        _ => {
            let model = build_model(cfg).context("certify needs h0 and c, or a model to estimate them from")?;
            let (h0, bound) = certificate_inputs(&model, &c.grid, &ScanOptions::default(), cfg.seed)?;
            let h0 = c.h0.unwrap_or(h0);
            let cc = c.c.unwrap_or(bound.c);
            (Some(model.name), Some(bound), h0, cc)
        }
    };
    let certificate = certify_lambda(h0, cc)?;
    let mut table = Table::new(vec![
        "h0",
        "c",
        "lambda_star",
        "stationary_point",
        "inner_min",
        "grid_lambda_star",
    ]);
    table.push(vec![
        h0.to_string(),
        cc.to_string(),
        certificate.lambda_star.to_string(),
        certificate.stationary_point.to_string(),
        certificate.inner_min.to_string(),
        certificate.grid_lambda_star.to_string(),
    ]);
    Ok(Outcome {
        report: CertifyReport {
            model,
            bound,
            certificate,
        },
        table,
        pass: true,
    })
}

pub fn papercheck(cfg: &RunConfig) -> Result<Outcome<SuiteReport>> {
    let c = &cfg.papercheck;
    let mut models = if c.models.is_empty() {
        bundle_catalog()
    } else {
        c.models
            .iter()
            .map(|id| catalog_model(id)?.ok_or_else(|| Error::Model(format!("unknown catalog model '{id}'"))))
            .collect::<Result<Vec<_>, _>>()?
    };
    if let Some(spec) = &cfg.model {
        models.push(spec.build()?);
    }
    let opts = SuiteOptions {
        lambda: c.lambda,
        decomposition_trials: c.decomposition_trials,
        bound_trials: c.bound_trials,
        grid: c.grid.clone(),
        seed: cfg.seed,
    };
    let report = run_suite(&models, &opts);
    let mut table = Table::new(vec![
        "identity",
        "model",
        "lambda",
        "deviation",
        "tolerance",
        "pass",
        "location",
    ]);
    for case in &report.cases {
        table.push(vec![
            case.id.to_string(),
            case.model.clone(),
            case.lambda.to_string(),
            case.deviation.to_string(),
            case.tolerance.to_string(),
            case.pass.to_string(),
            case.location.clone(),
        ]);
    }
    for ex in &report.excluded {
        table.push(vec![
            "excluded".into(),
            ex.model.clone(),
            String::new(),
            String::new(),
            String::new(),
            "false".into(),
            ex.reason.clone(),
        ]);
    }
    let pass = report.all_pass;
    Ok(Outcome { report, table, pass })
}

#[derive(Serialize)]
pub struct BergerReport {
    pub model: String,
    pub lambda: f64,
    pub chart: ChartId,
    pub point: Vec<C64>,
    pub scalar_curvature: f64,
    /// `2S / (N(N+1))`.
    pub expected: f64,
    pub average: SphereAverage,
    /// `(mean − expected) / std_error`; zero when `H` is constant at the point.
    pub z: f64,
    pub max_z: f64,
}

/// Deviation in standard errors. A zero standard error means every sample
/// gave the same `H`, so only a rounding-level gap is accepted.
pub fn z_score(mean: f64, expected: f64, std_error: f64) -> f64 {
    let diff = mean - expected;
    if std_error > 0.0 {
        diff / std_error
    } else if diff.abs() <= 1e-9 * expected.abs().max(1.0) {
        0.0
    } else {
        f64::INFINITY.copysign(diff)
    }
}

pub fn berger(cfg: &RunConfig) -> Result<Outcome<BergerReport>> {
    let model = build_model(cfg)?;
    let c = &cfg.berger;
    check_chart(&model, c.chart)?;
    let dim = model.dim();
    let point = c.point.clone().unwrap_or_else(|| vec![C64::new(0.0, 0.0); dim]);
    check_dim("point", &point, dim)?;
    let chart = model.chart(c.chart, c.lambda)?;
    let (g, r) = KahlerJet::new(&chart.potential, dim).curvature(&point)?;
    let s = scalar_curvature(&r, &g)?;
    let expected = berger_average(s, dim);
    let average = sphere_average_hsc(&r, &g, c.samples, cfg.seed)?;
    let z = z_score(average.mean, expected, average.std_error);
    let mut table = Table::new(vec!["model", "lambda", "samples", "mean", "std_error", "expected", "z"]);
    table.push(vec![
        model.name.clone(),
        c.lambda.to_string(),
        average.samples.to_string(),
        average.mean.to_string(),
        average.std_error.to_string(),
        expected.to_string(),
        z.to_string(),
    ]);
    Ok(Outcome {
        pass: z.abs() < c.max_z,
        report: BergerReport {
            model: model.name.clone(),
            lambda: c.lambda,
            chart: c.chart,
            point,
            scalar_curvature: s,
            expected,
            average,
            z,
            max_z: c.max_z,
        },
        table,
    })
}
