use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::optimizer::{frame_to_coords, optimize_frame, FrameQuartic, OptimizerOptions, StartSet};
use crate::kahler::{curvature_from_jet, KahlerJet};
use crate::linalg::{self, PD_FLOOR};
use crate::models::{ChartId, GridSpec, Model};
use crate::{Error, Result, C64};

/// Points processed between early-stop checks.
const BLOCK: usize = 2048;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanOptions {
    pub optimizer: OptimizerOptions,
    /// Also maximize `H` per point, for the pinching ratio.
    pub pinching: bool,
    /// Keep one record per sample point in the report.
    pub keep_points: bool,
    /// Stop after the first block containing a non-positive point.
    pub stop_on_nonpositive: bool,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            optimizer: OptimizerOptions::default(),
            pinching: true,
            keep_points: false,
            stop_on_nonpositive: false,
        }
    }
}

impl ScanOptions {
    /// Settings for a yes/no positivity test.
    pub fn predicate(&self) -> Self {
        Self {
            pinching: false,
            keep_points: false,
            stop_on_nonpositive: true,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub chart: ChartId,
    pub coords: Vec<C64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub chart: ChartId,
    pub coords: Vec<C64>,
    pub min_eigenvalue: f64,
    pub min_h: Option<f64>,
    pub argmin: Option<Vec<C64>>,
    pub max_h: Option<f64>,
    pub converged: bool,
    pub error: Option<String>,
}

impl PointRecord {
    fn is_positive(&self) -> bool {
        self.error.is_none() && self.min_h.is_some_and(|h| h > 0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub model: String,
    pub lambda: f64,
    pub grid: GridSpec,
    pub points_total: usize,
    pub points_scanned: usize,
    pub stopped_early: bool,
    /// Smallest eigenvalue of `G` over the scanned points.
    pub worst_eigenvalue: f64,
    pub worst_eigenvalue_at: Option<SamplePoint>,
    pub kahler_ok: bool,
    /// Points where `G` was degenerate or evaluation failed.
    pub failure_count: usize,
    /// First few failures, in scan order.
    pub failures: Vec<PointRecord>,
    pub global_min_h: Option<f64>,
    pub global_min_at: Option<SamplePoint>,
    pub global_min_direction: Option<Vec<C64>>,
    pub global_max_h: Option<f64>,
    /// `min H / max H` when both are known and `min H > 0`.
    pub pinching: Option<f64>,
    pub unconverged: usize,
    pub points: Vec<PointRecord>,
}

impl ScanReport {
    /// Kähler everywhere sampled and `H > 0` at every point.
    pub fn positive(&self) -> bool {
        self.kahler_ok && self.failure_count == 0 && self.global_min_h.is_some_and(|h| h > 0.0)
    }
}

struct ChartWork {
    id: ChartId,
    jet: KahlerJet,
}

fn eval_point(
    work: &ChartWork,
    coords: Vec<C64>,
    starts: &StartSet,
    opts: &ScanOptions,
    scratch: &mut (Vec<C64>, Vec<C64>),
) -> PointRecord {
    let mut rec = PointRecord {
        chart: work.id,
        coords,
        min_eigenvalue: f64::NAN,
        min_h: None,
        argmin: None,
        max_h: None,
        converged: true,
        error: None,
    };
    let jet = match work.jet.eval_with(&rec.coords, &mut scratch.0, &mut scratch.1) {
        Ok(j) => j,
        Err(e) => {
            rec.error = Some(e.to_string());
            return rec;
        }
    };
    rec.min_eigenvalue = jet.metric.min_eigenvalue();
    if !(rec.min_eigenvalue > PD_FLOOR) {
        rec.error = Some(
            Error::NotPositiveDefinite {
                min_eigenvalue: rec.min_eigenvalue,
            }
            .to_string(),
        );
        return rec;
    }
    let solved = curvature_from_jet(&jet).and_then(|r| {
        let p = linalg::unitary_frame(jet.metric.matrix())?;
        Ok((r.in_frame(&p), p))
    });
    let (rf, p) = match solved {
        Ok(x) => x,
        Err(e) => {
            rec.error = Some(e.to_string());
            return rec;
        }
    };
    let lo = optimize_frame(&FrameQuartic::new(&rf, false), starts, &opts.optimizer);
    rec.min_h = Some(lo.value);
    rec.argmin = Some(frame_to_coords(&p, &lo.y));
    rec.converged = lo.converged;
    if opts.pinching {
        let hi = optimize_frame(&FrameQuartic::new(&rf, true), starts, &opts.optimizer);
        rec.max_h = Some(hi.value);
        rec.converged &= hi.converged;
    }
    rec
}

const MAX_LISTED_FAILURES: usize = 20;

/// Samples `grid` on every selected chart of `model` at `λ`, checking that
/// `G` is positive definite and minimizing `H` over directions at each point.
pub fn scan(model: &Model, lambda: f64, grid: &GridSpec, opts: &ScanOptions) -> Result<ScanReport> {
    if grid.is_empty() {
        return Err(Error::Invalid("sample grid is empty".into()));
    }
    if opts.optimizer.starts == 0 {
        return Err(Error::Invalid("at least one start is required".into()));
    }
    let (n, r) = (model.n(), model.r());
    let charts = grid
        .charts_for(model)
        .into_iter()
        .map(|id| {
            let chart = model.chart(id, lambda)?;
            Ok(ChartWork {
                id,
                jet: KahlerJet::new(&chart.potential, chart.dim()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let per_chart = grid.points_per_chart(n, r);
    let total = per_chart * charts.len();
    let starts = StartSet::new(model.dim(), opts.optimizer.starts, opts.optimizer.seed);
    let mut report = ScanReport {
        model: model.name.clone(),
        lambda,
        grid: grid.clone(),
        points_total: total,
        points_scanned: 0,
        stopped_early: false,
        worst_eigenvalue: f64::INFINITY,
        worst_eigenvalue_at: None,
        kahler_ok: true,
        failure_count: 0,
        failures: Vec::new(),
        global_min_h: None,
        global_min_at: None,
        global_min_direction: None,
        global_max_h: None,
        pinching: None,
        unconverged: 0,
        points: Vec::new(),
    };
    let mut start = 0;
    while start < total {
        let end = (start + BLOCK).min(total);
        let records: Vec<PointRecord> = (start..end)
            .into_par_iter()
            .map_init(
                || (Vec::new(), Vec::new()),
                |scratch, k| {
                    let work = &charts[k / per_chart];
                    let coords = grid.point(n, r, k % per_chart);
                    eval_point(work, coords, &starts, opts, scratch)
                },
            )
            .collect();
        let mut saw_nonpositive = false;
        for rec in records {
            absorb(&mut report, &rec);
            saw_nonpositive |= !rec.is_positive();
            if opts.keep_points {
                report.points.push(rec);
            }
        }
        report.points_scanned = end;
        start = end;
        if saw_nonpositive && opts.stop_on_nonpositive && start < total {
            report.stopped_early = true;
            break;
        }
    }
    if let (Some(lo), Some(hi)) = (report.global_min_h, report.global_max_h) {
        if lo > 0.0 && hi > 0.0 {
            report.pinching = Some(lo / hi);
        }
    }
    Ok(report)
}

fn absorb(report: &mut ScanReport, rec: &PointRecord) {
    let at = || SamplePoint {
        chart: rec.chart,
        coords: rec.coords.clone(),
    };
    // a point whose metric could not be evaluated counts as degenerate
    let ev = if rec.min_eigenvalue.is_nan() {
        f64::NEG_INFINITY
    } else {
        rec.min_eigenvalue
    };
    if ev < report.worst_eigenvalue {
        report.worst_eigenvalue = ev;
        report.worst_eigenvalue_at = Some(at());
    }
    if rec.error.is_some() {
        report.kahler_ok &= ev > PD_FLOOR;
        report.failure_count += 1;
        if report.failures.len() < MAX_LISTED_FAILURES {
            report.failures.push(rec.clone());
        }
        return;
    }
    if !rec.converged {
        report.unconverged += 1;
    }
    if let Some(h) = rec.min_h {
        if report.global_min_h.is_none_or(|m| h < m) {
            report.global_min_h = Some(h);
            report.global_min_at = Some(at());
            report.global_min_direction = rec.argmin.clone();
        }
    }
    if let Some(h) = rec.max_h {
        if report.global_max_h.is_none_or(|m| h > m) {
            report.global_max_h = Some(h);
        }
    }
}

/// Outcome of the positive-definiteness test over a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KahlerCheck {
    pub ok: bool,
    pub worst_eigenvalue: f64,
    pub worst_at: Option<SamplePoint>,
    pub points: usize,
}

/// Smallest eigenvalue of `G_λ` over the grid; passes iff it exceeds the
/// degeneracy floor.
pub fn kahler_check(model: &Model, lambda: f64, grid: &GridSpec) -> Result<KahlerCheck> {
    let (n, r) = (model.n(), model.r());
    let per_chart = grid.points_per_chart(n, r);
    let mut out = KahlerCheck {
        ok: true,
        worst_eigenvalue: f64::INFINITY,
        worst_at: None,
        points: 0,
    };
    for id in grid.charts_for(model) {
        let chart = model.chart(id, lambda)?;
        let jet = KahlerJet::metric_only(&chart.potential, chart.dim());
        let values: Vec<(usize, f64)> = (0..per_chart)
            .into_par_iter()
            .map_init(
                || (Vec::new(), Vec::new()),
                |(s, o), k| {
                    let p = grid.point(n, r, k);
                    let ev = jet.eval_with(&p, s, o).map_or(f64::NAN, |j| j.metric.min_eigenvalue());
                    (k, ev)
                },
            )
            .collect();
        for (k, ev) in values {
            out.points += 1;
            let ev = if ev.is_nan() { f64::NEG_INFINITY } else { ev };
            if ev < out.worst_eigenvalue {
                out.worst_eigenvalue = ev;
                out.worst_at = Some(SamplePoint {
                    chart: id,
                    coords: grid.point(n, r, k),
                });
            }
        }
    }
    out.ok = out.worst_eigenvalue > PD_FLOOR;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{catalog_model, hirzebruch};

    #[test]
    fn hirzebruch_kahler_boundary() {
        let f2 = hirzebruch(2).unwrap();
        let grid = GridSpec::new(3, 3, 1.0);
        let ok = kahler_check(&f2, 5.0, &grid).unwrap();
        assert!(ok.ok);
        let bad = kahler_check(&f2, 2.0, &grid).unwrap();
        assert!(!bad.ok);
        assert!(bad.worst_eigenvalue.abs() < 1e-12);
    }

    #[test]
    fn product_scan_values() {
        let f0 = hirzebruch(0).unwrap();
        let rep = scan(&f0, 1.0, &GridSpec::new(3, 3, 1.0), &ScanOptions::default()).unwrap();
        assert!(rep.positive());
        assert!((rep.global_min_h.unwrap() - 1.0).abs() < 1e-8);
        assert!((rep.pinching.unwrap() - 0.5).abs() < 1e-8);
        assert_eq!(rep.points_scanned, 4 * 81);
    }

    #[test]
    fn degenerate_metric_recorded_and_scan_continues() {
        let f2 = hirzebruch(2).unwrap();
        let grid = GridSpec::new(3, 3, 1.0).with_charts(vec![ChartId::new(0, 0)]);
        let rep = scan(&f2, 2.0, &grid, &ScanOptions::default()).unwrap();
        assert!(!rep.kahler_ok);
        assert!(!rep.positive());
        assert_eq!(rep.points_scanned, 81);
        assert!(rep.failure_count >= 1);
        let rank1 = catalog_model("trivial1").unwrap().unwrap();
        let rep = scan(&rank1, 4.0, &GridSpec::new(5, 1, 1.0), &ScanOptions::default()).unwrap();
        assert!((rep.global_min_h.unwrap() - 0.5).abs() < 1e-9);
    }
}
