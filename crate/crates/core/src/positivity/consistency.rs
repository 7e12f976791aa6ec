use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::certificate::{bound_quartic, certify_lambda, Certificate};
use super::lambda::{find_lambda0, Lambda0Report};
use super::scan::{scan, ScanOptions, ScanReport};
use crate::kahler::KahlerJet;
use crate::models::{bundle_bound_c, check_frame_conditions, BundleBound, ChartId, GridSpec, Model};
use crate::{Error, Result, C64};

/// Relative rounding allowance on `lhs − rhs`.
pub const SLACK_TOL: f64 = 1e-12;

/// One sampled direction at a distinguished point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundSample {
    pub v: Vec<C64>,
    pub x_norm: f64,
    pub u_norm: f64,
    /// `R_{VV̄VV̄}` of `G_λ`.
    pub lhs: f64,
    /// `q(|X|, |U|)`.
    pub rhs: f64,
}

impl BoundSample {
    pub fn slack(&self) -> f64 {
        self.lhs - self.rhs
    }

    fn allowance(&self) -> f64 {
        SLACK_TOL * 1f64.max(self.lhs.abs()).max(self.rhs.abs())
    }
}

/// `R_{VV̄VV̄} ≥ q(|X|, |U|)` sampled at the origin of one chart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalBoundCheck {
    pub model: String,
    pub chart: ChartId,
    pub lambda: f64,
    pub h0: f64,
    pub c: f64,
    pub samples: usize,
    pub min_slack: f64,
    /// Sample with the smallest slack.
    pub worst: BoundSample,
    pub pass: bool,
}

/// Random directions mixing base and fiber parts at every ratio, plus the
/// pure base and pure fiber directions.
fn directions(n: usize, r: usize, count: usize, seed: u64) -> Vec<Vec<C64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gauss = |rng: &mut ChaCha8Rng| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng));
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let (sx, su) = match k {
            0 => (1.0, 0.0),
            1 if r > 0 => (0.0, 1.0),
            _ => (
                1.0,
                if r > 0 {
                    10f64.powf(rng.random_range(-2.0..2.0))
                } else {
                    0.0
                },
            ),
        };
        let v = (0..n + r)
            .map(|i| gauss(&mut rng) * if i < n { sx } else { su })
            .collect();
        out.push(v);
    }
    out
}

/// Samples the final lower bound at the origin of `chart`, which must be a
/// distinguished point: normal coordinates for `g` and the normalized frame
/// for `h`. Norms are coordinate norms there, where `G` is block diagonal.
pub fn check_final_bound_at(
    model: &Model,
    chart: ChartId,
    lambda: f64,
    h0: f64,
    c: f64,
    trials: usize,
    seed: u64,
) -> Result<FinalBoundCheck> {
    let bundle = model
        .bundle
        .as_ref()
        .ok_or_else(|| Error::Model("the final bound needs a bundle".into()))?;
    if trials == 0 {
        return Err(Error::Invalid("at least one trial is required".into()));
    }
    check_frame_conditions(&model.base, bundle, chart.base)?;
    let (n, r) = (model.n(), model.r());
    let proj = model.chart(chart, lambda)?;
    let (_, curv) = KahlerJet::new(&proj.potential, proj.dim()).curvature(&vec![C64::new(0.0, 0.0); n + r])?;
    let mut worst: Option<BoundSample> = None;
    let mut pass = true;
    for v in directions(n, r, trials, seed) {
        let norm = |part: &[C64]| part.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let (x_norm, u_norm) = (norm(&v[..n]), norm(&v[n..]));
        let sample = BoundSample {
            lhs: curv.quartic(&v),
            rhs: bound_quartic(lambda, h0, c, x_norm, u_norm),
            v,
            x_norm,
            u_norm,
        };
        pass &= sample.slack() >= -sample.allowance();
        if worst.as_ref().is_none_or(|w| sample.slack() < w.slack()) {
            worst = Some(sample);
        }
    }
    let worst = worst.expect("at least one trial");
    Ok(FinalBoundCheck {
        model: model.name.clone(),
        chart,
        lambda,
        h0,
        c,
        samples: trials,
        min_slack: worst.slack(),
        worst,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConsistencyOptions {
    pub lambda_lo: f64,
    /// Upper end of the threshold search; twice the certified λ when absent.
    pub lambda_hi: Option<f64>,
    pub tol: f64,
    pub grid: GridSpec,
    pub scan: ScanOptions,
    /// Directions per distinguished point.
    pub trials: usize,
    pub seed: u64,
}

impl Default for ConsistencyOptions {
    fn default() -> Self {
        Self {
            lambda_lo: 0.1,
            lambda_hi: None,
            tol: 0.01,
            grid: GridSpec::default(),
            scan: ScanOptions::default(),
            trials: 200,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub model: String,
    /// Minimum of `H` of the base metric over the base lattice.
    pub h0: f64,
    pub bound: BundleBound,
    pub certificate: Certificate,
    /// λ actually tested: `λ*`, or `lambda_lo` when `C = 0`.
    pub lambda_certified: f64,
    pub lambda0: Option<Lambda0Report>,
    /// (i) the certified λ is at least the empirical threshold.
    pub sufficient: bool,
    pub scan_at_certified: ScanReport,
    /// (ii) the scan at the certified λ is positive.
    pub scan_positive: bool,
    pub final_bound: Vec<FinalBoundCheck>,
    /// (iii) the pointwise bound holds at every distinguished point.
    pub bound_holds: bool,
    /// Problems that prevented a check from running.
    pub notes: Vec<String>,
}

impl ConsistencyReport {
    pub fn pass(&self) -> bool {
        self.sufficient && self.scan_positive && self.bound_holds
    }
}

/// `H₀` (minimum of `H` of the base metric over the base lattice) and the
/// bundle constant `C` for a projectivized model.
pub fn certificate_inputs(
    model: &Model,
    grid: &GridSpec,
    scan_opts: &ScanOptions,
    seed: u64,
) -> Result<(f64, BundleBound)> {
    let bundle = model
        .bundle
        .as_ref()
        .ok_or_else(|| Error::Model(format!("{} has no bundle to certify", model.name)))?;
    let base_model = Model::base_only(model.base.clone());
    let opts = ScanOptions {
        pinching: false,
        ..scan_opts.clone()
    };
    let base_grid = GridSpec {
        charts: None,
        ..grid.clone()
    };
    let base_scan = scan(&base_model, 1.0, &base_grid, &opts)?;
    let h0 = match base_scan.global_min_h {
        Some(h) if base_scan.positive() => h,
        _ => {
            return Err(Error::Model(format!(
                "base of {} has no positive curvature floor on the grid",
                model.name
            )))
        }
    };
    Ok((h0, bundle_bound_c(bundle, &model.base, grid, seed)?))
}

/// Runs the three certificate checks for a projectivized model: `H₀` from a
/// base scan, `C` from the bundle bound, `λ*` from both, then (i) `λ* ≥ λ₀`,
/// (ii) a positive scan at `λ*`, (iii) the pointwise bound at every chart
/// origin.
pub fn certificate_consistency(model: &Model, opts: &ConsistencyOptions) -> Result<ConsistencyReport> {
    let (h0, bound) = certificate_inputs(model, &opts.grid, &opts.scan, opts.seed)?;
    let certificate = certify_lambda(h0, bound.c)?;
    let lambda_certified = if certificate.any_positive_lambda() {
        opts.lambda_lo
    } else {
        certificate.lambda_star
    };
    let scan_at_certified = scan(model, lambda_certified, &opts.grid, &opts.scan)?;
    let scan_positive = scan_at_certified.positive();
    let mut notes = Vec::new();
    let lambda_hi = opts.lambda_hi.unwrap_or(2.0 * lambda_certified);
    let lambda0 = if opts.lambda_lo < lambda_hi {
        match find_lambda0(model, opts.lambda_lo, lambda_hi, opts.tol, &opts.grid, &opts.scan) {
            Ok(rep) => Some(rep),
            Err(e) => {
                notes.push(format!("threshold search failed: {e}"));
                None
            }
        }
    } else {
        notes.push(format!("empty search bracket [{}, {lambda_hi}]", opts.lambda_lo));
        None
    };
    let sufficient = lambda0.as_ref().is_some_and(|rep| rep.lambda0 <= lambda_certified);
    let mut final_bound = Vec::new();
    for (k, chart) in model.charts().into_iter().enumerate() {
        match check_final_bound_at(
            model,
            chart,
            lambda_certified,
            h0,
            bound.c,
            opts.trials,
            opts.seed.wrapping_add(k as u64),
        ) {
            Ok(check) => final_bound.push(check),
            Err(Error::FrameConditions(msg)) => notes.push(format!("chart {chart} skipped: {msg}")),
            Err(e) => return Err(e),
        }
    }
    let bound_holds = !final_bound.is_empty() && final_bound.iter().all(|c| c.pass);
    Ok(ConsistencyReport {
        model: model.name.clone(),
        h0,
        bound,
        certificate,
        lambda_certified,
        lambda0,
        sufficient,
        scan_at_certified,
        scan_positive,
        final_bound,
        bound_holds,
        notes,
    })
}
