use serde::{Deserialize, Serialize};

use super::scan::{scan, ScanOptions, ScanReport};
use crate::models::{GridSpec, Model};
use crate::{Error, Result};

/// Interior points at which monotonicity of the predicate is spot-checked.
pub const SPOT_CHECKS: usize = 5;
/// Points of the fallback linear scan, endpoints included.
pub const LINEAR_SCAN_POINTS: usize = 65;

pub const MONOTONICITY_DISCLAIMER: &str = "λ₀ is where the predicate \"G_λ is Kähler and min H > 0 \
on the sampled grid\" changes sign. Bisection assumes the predicate is monotone in λ; this is \
spot-checked, not proven, and the result says nothing about points off the grid.";

/// The search grid is coarsened until a chart holds at most this many points.
pub const SEARCH_POINTS_PER_CHART: usize = 25_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaProbe {
    pub lambda: f64,
    /// Probed on the coarse search grid rather than the requested one.
    pub coarse: bool,
    pub positive: bool,
    pub min_h: Option<f64>,
    pub worst_eigenvalue: f64,
    pub points_scanned: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lambda0Report {
    pub model: String,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub tol: f64,
    /// Smallest λ found positive on the requested grid; some λ within
    /// `tol` below it fails there (unless it equals `lambda_lo`).
    pub lambda0: f64,
    /// Largest λ found non-positive on the requested grid.
    pub last_negative: Option<f64>,
    /// Coarse sub-lattice used to locate the bracket, when one was used.
    pub search_grid: Option<GridSpec>,
    pub monotone_spot_checks: bool,
    pub used_linear_scan: bool,
    pub probes: Vec<LambdaProbe>,
    /// Full scan at `lambda0 + tol`.
    pub verification: ScanReport,
    pub verified: bool,
    pub disclaimer: String,
}

struct Prober<'a> {
    model: &'a Model,
    opts: ScanOptions,
    probes: Vec<LambdaProbe>,
}

impl Prober<'_> {
    fn probe(&mut self, lambda: f64, grid: &GridSpec, coarse: bool) -> Result<bool> {
        let rep = scan(self.model, lambda, grid, &self.opts)?;
        let positive = rep.positive();
        self.probes.push(LambdaProbe {
            lambda,
            coarse,
            positive,
            min_h: rep.global_min_h,
            worst_eigenvalue: rep.worst_eigenvalue,
            points_scanned: rep.points_scanned,
        });
        Ok(positive)
    }

    /// Shrinks `[lo, hi]` (failing, passing) to width `tol`.
    fn bisect(&mut self, mut lo: f64, mut hi: f64, tol: f64, grid: &GridSpec, coarse: bool) -> Result<(f64, f64)> {
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if self.probe(mid, grid, coarse)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok((lo, hi))
    }
}

struct Bracket {
    /// `None` when `λ_lo` itself passes.
    lo: Option<f64>,
    hi: f64,
    monotone: bool,
    linear: bool,
}

/// Locates a sign change on `grid`, assuming `λ_hi` passes there.
fn locate(
    p: &mut Prober<'_>,
    lambda_lo: f64,
    lambda_hi: f64,
    tol: f64,
    grid: &GridSpec,
    coarse: bool,
) -> Result<Bracket> {
    if p.probe(lambda_lo, grid, coarse)? {
        return Ok(Bracket {
            lo: None,
            hi: lambda_lo,
            monotone: true,
            linear: false,
        });
    }
    let width = lambda_hi - lambda_lo;
    let mut seq = vec![(lambda_lo, false)];
    for k in 1..=SPOT_CHECKS {
        let l = lambda_lo + width * k as f64 / (SPOT_CHECKS + 1) as f64;
        seq.push((l, p.probe(l, grid, coarse)?));
    }
    seq.push((lambda_hi, true));
    let monotone = seq.windows(2).all(|w| !(w[0].1 && !w[1].1));
    if !monotone {
        seq.clear();
        for k in 0..LINEAR_SCAN_POINTS {
            let l = lambda_lo + width * k as f64 / (LINEAR_SCAN_POINTS - 1) as f64;
            let positive = match k {
                0 => false,
                k if k == LINEAR_SCAN_POINTS - 1 => true,
                _ => p.probe(l, grid, coarse)?,
            };
            seq.push((l, positive));
        }
    }
    // the largest failing λ and the sample above it
    let last = seq.iter().rposition(|s| !s.1).expect("λ_lo fails");
    let (lo, hi) = p.bisect(seq[last].0, seq[last + 1].0, tol, grid, coarse)?;
    Ok(Bracket {
        lo: Some(lo),
        hi,
        monotone,
        linear: !monotone,
    })
}

fn search_grid(grid: &GridSpec, n: usize, r: usize) -> Option<GridSpec> {
    let mut out: Option<GridSpec> = None;
    loop {
        let current = out.as_ref().unwrap_or(grid);
        if current.points_per_chart(n, r) <= SEARCH_POINTS_PER_CHART {
            return out;
        }
        match current.coarsened() {
            Some(next) => out = Some(next),
            None => return out,
        }
    }
}

/// Bisects the positivity predicate on `[λ_lo, λ_hi]`.
///
/// Large grids are searched on a coarse sub-lattice first. A sub-lattice
/// failure implies failure on the full grid, so the coarse bracket is then
/// re-probed and narrowed on the requested grid, widening upward while the
/// full grid still fails. Monotonicity is spot-checked at five interior λ
/// during the first bracketing; a violation switches to a linear scan.
pub fn find_lambda0(
    model: &Model,
    lambda_lo: f64,
    lambda_hi: f64,
    tol: f64,
    grid: &GridSpec,
    opts: &ScanOptions,
) -> Result<Lambda0Report> {
    if !(lambda_lo > 0.0 && lambda_lo < lambda_hi) {
        return Err(Error::Invalid(format!(
            "need 0 < λ_lo < λ_hi, got [{lambda_lo}, {lambda_hi}]"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::Invalid(format!("tolerance must be positive, got {tol}")));
    }
    let coarse = search_grid(grid, model.n(), model.r());
    let first = coarse.as_ref().unwrap_or(grid);
    let mut p = Prober {
        model,
        opts: opts.predicate(),
        probes: Vec::new(),
    };
    if !p.probe(lambda_hi, first, coarse.is_some())? {
        return Err(Error::Bracket { lambda_hi });
    }
    let found = locate(&mut p, lambda_lo, lambda_hi, tol, first, coarse.is_some())?;
    let (lo, hi) = match (&coarse, found.lo) {
        (None, lo) => (lo, found.hi),
        (Some(_), None) => {
            if p.probe(lambda_lo, grid, false)? {
                (None, lambda_lo)
            } else {
                refine_upward(&mut p, lambda_lo, lambda_lo, lambda_hi, tol, grid)?
            }
        }
        (Some(_), Some(clo)) => {
            let lo = if p.probe(clo, grid, false)? {
                // not a true sub-lattice failure: search below on the full grid
                let b = locate(&mut p, lambda_lo, clo, tol, grid, false)?;
                return finish(
                    model, lambda_lo, lambda_hi, tol, grid, opts, p, coarse, found, b.lo, b.hi,
                );
            } else {
                clo
            };
            refine_upward(&mut p, lo, found.hi, lambda_hi, tol, grid)?
        }
    };
    finish(model, lambda_lo, lambda_hi, tol, grid, opts, p, coarse, found, lo, hi)
}

/// From a full-grid failure at `lo`, finds a full-grid pass at or above
/// `start` by doubling the step, then bisects.
fn refine_upward(
    p: &mut Prober<'_>,
    mut lo: f64,
    start: f64,
    lambda_hi: f64,
    tol: f64,
    grid: &GridSpec,
) -> Result<(Option<f64>, f64)> {
    let mut step = (start - lo).max(tol);
    let mut candidate = start.max(lo + tol).min(lambda_hi);
    loop {
        if p.probe(candidate, grid, false)? {
            let (lo, hi) = p.bisect(lo, candidate, tol, grid, false)?;
            return Ok((Some(lo), hi));
        }
        if candidate >= lambda_hi {
            return Err(Error::Bracket { lambda_hi });
        }
        lo = candidate;
        step *= 2.0;
        candidate = (candidate + step).min(lambda_hi);
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    model: &Model,
    lambda_lo: f64,
    lambda_hi: f64,
    tol: f64,
    grid: &GridSpec,
    opts: &ScanOptions,
    p: Prober<'_>,
    coarse: Option<GridSpec>,
    found: Bracket,
    lo: Option<f64>,
    hi: f64,
) -> Result<Lambda0Report> {
    let verification = scan(model, hi + tol, grid, opts)?;
    Ok(Lambda0Report {
        model: model.name.clone(),
        lambda_lo,
        lambda_hi,
        tol,
        lambda0: hi,
        last_negative: lo,
        search_grid: coarse,
        monotone_spot_checks: found.monotone,
        used_linear_scan: found.linear,
        probes: p.probes,
        verified: verification.positive(),
        verification,
        disclaimer: MONOTONICITY_DISCLAIMER.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{catalog_model, hirzebruch};

    fn quick() -> ScanOptions {
        ScanOptions {
            pinching: false,
            ..ScanOptions::default()
        }
    }

    #[test]
    fn product_needs_no_threshold() {
        let f0 = hirzebruch(0).unwrap();
        let rep = find_lambda0(&f0, 0.1, 10.0, 0.05, &GridSpec::new(3, 3, 1.0), &quick()).unwrap();
        assert_eq!(rep.lambda0, 0.1);
        assert!(rep.verified);
        let rank1 = catalog_model("trivial1").unwrap().unwrap();
        let rep = find_lambda0(&rank1, 0.5, 3.0, 0.05, &GridSpec::new(3, 1, 1.0), &quick()).unwrap();
        assert_eq!(rep.lambda0, 0.5);
    }

    #[test]
    fn hirzebruch_threshold_is_bracketed() {
        let f1 = hirzebruch(1).unwrap();
        let grid = GridSpec::new(3, 5, 2.0).with_charts(vec![crate::models::ChartId::new(0, 0)]);
        let rep = find_lambda0(&f1, 1.01, 20.0, 0.05, &grid, &quick()).unwrap();
        assert!(rep.verified);
        assert!(rep.lambda0 > 1.0 && rep.lambda0 < 20.0);
        if let Some(neg) = rep.last_negative {
            assert!(rep.lambda0 - neg <= 0.05 + 1e-12);
        }
    }

    #[test]
    fn coarse_search_ends_on_requested_grid() {
        let f1 = hirzebruch(1).unwrap();
        let big = GridSpec::new(33, 9, 2.0).with_charts(vec![crate::models::ChartId::new(0, 0)]);
        let rep = find_lambda0(&f1, 1.01, 20.0, 0.02, &big, &quick()).unwrap();
        let coarse = rep.search_grid.clone().unwrap();
        assert_eq!((coarse.base_points, coarse.fiber_points), (17, 5));
        assert!(rep.verified);
        let neg = rep.last_negative.unwrap();
        assert!(rep.lambda0 - neg <= 0.02 + 1e-12);
        // both bracket ends were decided on the requested grid
        for l in [neg, rep.lambda0] {
            assert!(rep.probes.iter().any(|p| !p.coarse && p.lambda == l));
        }
    }

    #[test]
    fn bad_bracket_is_reported() {
        let f2 = hirzebruch(2).unwrap();
        let err = find_lambda0(&f2, 0.5, 1.5, 0.1, &GridSpec::new(3, 3, 1.0), &quick()).unwrap_err();
        assert!(matches!(err, Error::Bracket { .. }));
        assert!(err.to_string().contains("larger upper bracket"));
    }
}
