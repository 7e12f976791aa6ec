//! Numeric verification of the metric and curvature formulas for `G_λ` at
//! distinguished points.
//!
//! Each check assembles the closed-form right-hand side from derivatives of
//! `h` and `g` and compares it with derivatives of the potential `φ_G`
//! computed directly by the Kähler engine. Charts are `(z, t)` with `z` the
//! base coordinates and `t` the fiber coordinates; `v = e_{α₀} + Σ t_k e_k`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::kahler::{curvature_from_jet, KahlerJet, PointJet};
use crate::models::{bundle_curvature_at, check_frame_conditions, ChartId, GridSpec, Model, ProjChart};
use crate::positivity::{certificate_inputs, certify_lambda, check_final_bound_at, ScanOptions};
use crate::wirtinger::{all_up_to, Expr, JetValues, Jets};
use crate::{Error, Result, C64};

/// Absolute tolerance for the metric-derivative identities.
pub const IDENTITY_TOL: f64 = 1e-8;
/// Relative tolerance for the curvature decomposition.
pub const DECOMPOSITION_TOL: f64 = 1e-9;
/// Off-diagonal size above which `Θ_{ww̄}` counts as not diagonal.
const DIAGONAL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IdentityId {
    #[serde(rename = "origin-values")]
    OriginValues,
    #[serde(rename = "first-derivs")]
    FirstDerivs,
    #[serde(rename = "second-derivs-ij̄kl̄")]
    SecondIjKl,
    #[serde(rename = "second-derivs-ij̄kβ̄")]
    SecondIjKb,
    #[serde(rename = "second-derivs-ij̄αβ̄")]
    SecondIjAb,
    #[serde(rename = "second-derivs-αj̄γl̄")]
    SecondAjGl,
    #[serde(rename = "second-derivs-αβ̄γj̄")]
    SecondAbGj,
    #[serde(rename = "second-derivs-αβ̄γδ̄")]
    SecondAbGd,
    #[serde(rename = "curvature-decomposition")]
    CurvatureDecomposition,
    #[serde(rename = "final-bound")]
    FinalBound,
}

impl IdentityId {
    pub const SECOND_DERIVATIVES: [IdentityId; 6] = [
        IdentityId::SecondIjKl,
        IdentityId::SecondIjKb,
        IdentityId::SecondIjAb,
        IdentityId::SecondAjGl,
        IdentityId::SecondAbGj,
        IdentityId::SecondAbGd,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            IdentityId::OriginValues => "origin-values",
            IdentityId::FirstDerivs => "first-derivs",
            IdentityId::SecondIjKl => "second-derivs-ij̄kl̄",
            IdentityId::SecondIjKb => "second-derivs-ij̄kβ̄",
            IdentityId::SecondIjAb => "second-derivs-ij̄αβ̄",
            IdentityId::SecondAjGl => "second-derivs-αj̄γl̄",
            IdentityId::SecondAbGj => "second-derivs-αβ̄γj̄",
            IdentityId::SecondAbGd => "second-derivs-αβ̄γδ̄",
            IdentityId::CurvatureDecomposition => "curvature-decomposition",
            IdentityId::FinalBound => "final-bound",
        }
    }
}

impl fmt::Display for IdentityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of one identity on one model: the worst component found.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityCase {
    pub id: IdentityId,
    pub model: String,
    pub lambda: f64,
    pub lhs: C64,
    pub rhs: C64,
    /// Largest deviation over all components and charts checked.
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Where the worst deviation occurred.
    pub location: String,
}

/// Running maximum of `|lhs − rhs|`.
struct Tally {
    deviation: f64,
    lhs: C64,
    rhs: C64,
    location: String,
}

impl Tally {
    fn new() -> Self {
        Self {
            deviation: 0.0,
            lhs: C64::new(0.0, 0.0),
            rhs: C64::new(0.0, 0.0),
            location: String::new(),
        }
    }

    fn record(&mut self, lhs: C64, rhs: C64, location: impl FnOnce() -> String) {
        self.record_scaled(lhs, rhs, 1.0, location);
    }

    fn record_scaled(&mut self, lhs: C64, rhs: C64, scale: f64, location: impl FnOnce() -> String) {
        let dev = if lhs == rhs { 0.0 } else { (lhs - rhs).norm() / scale };
        if dev > self.deviation || dev.is_nan() || self.location.is_empty() {
            self.deviation = if dev.is_nan() { f64::INFINITY } else { dev };
            self.lhs = lhs;
            self.rhs = rhs;
            self.location = location();
        }
    }

    fn merge(&mut self, other: Tally) {
        if other.deviation > self.deviation || self.location.is_empty() {
            *self = other;
        }
    }

    fn finish(self, id: IdentityId, model: &Model, lambda: f64, tolerance: f64) -> IdentityCase {
        IdentityCase {
            id,
            model: model.name.clone(),
            lambda,
            lhs: self.lhs,
            rhs: self.rhs,
            deviation: self.deviation,
            tolerance,
            pass: self.deviation.is_finite() && self.deviation < tolerance,
            location: self.location,
        }
    }
}

/// The `h`-side quantities of one chart, as expressions in `(z, t)`.
struct PaperSide {
    r: usize,
    jets: Jets,
}

const HVV: usize = 0;
const PHI: usize = 1;

impl PaperSide {
    fn new(model: &Model, chart: &ProjChart) -> Result<Self> {
        let bundle = model.bundle.as_ref().expect("checked by caller");
        let (n, r) = (chart.n, chart.r);
        let h = bundle.metric(chart.id.base)?;
        let rank = r + 1;
        let mut v = vec![Expr::zero(); rank];
        v[chart.id.fiber] = Expr::one();
        for (k, &a) in chart.frame.iter().enumerate() {
            v[a] = Expr::var(n + k);
        }
        let mut exprs = vec![chart.hvv.clone(), model.base.potential(chart.id.base)?.clone()];
        // h_{vβ̄} = h(v, ē_β)
        for &b in &chart.frame {
            exprs.push(Expr::sum((0..rank).map(|a| &v[a] * &h[a][b])));
        }
        // h_{αv̄} = h(e_α, v̄)
        for &a in &chart.frame {
            exprs.push(Expr::sum((0..rank).map(|b| &h[a][b] * v[b].conj())));
        }
        for &a in &chart.frame {
            for &b in &chart.frame {
                exprs.push(h[a][b].clone());
            }
        }
        let dim = n + r;
        let wanted = (0..exprs.len()).flat_map(|k| all_up_to(dim, 2, 2).into_iter().map(move |d| (k, d)));
        Ok(Self {
            r,
            jets: Jets::build(&exprs, wanted),
        })
    }

    fn hvb(&self, beta: usize) -> usize {
        2 + beta
    }

    fn hav(&self, alpha: usize) -> usize {
        2 + self.r + alpha
    }

    fn hab(&self, alpha: usize, beta: usize) -> usize {
        2 + 2 * self.r + alpha * self.r + beta
    }
}

struct Context {
    chart: ProjChart,
    paper: PaperSide,
    engine: KahlerJet,
}

fn context(model: &Model, id: ChartId, lambda: f64) -> Result<Context> {
    let bundle = model
        .bundle
        .as_ref()
        .ok_or_else(|| Error::Model(format!("{} is not a projectivized bundle", model.name)))?;
    check_frame_conditions(&model.base, bundle, id.base)?;
    let chart = model.chart(id, lambda)?;
    Ok(Context {
        paper: PaperSide::new(model, &chart)?,
        engine: KahlerJet::new(&chart.potential, chart.dim()),
        chart,
    })
}

fn origin(dim: usize) -> Vec<C64> {
    vec![C64::new(0.0, 0.0); dim]
}

/// `∂_c ∂̄_d G_{ab̄}` from a metric jet.
fn dd(jet: &PointJet, a: usize, b: usize, c: usize, d: usize) -> C64 {
    let n = jet.n;
    jet.dd_metric[((c * n + d) * n + a) * n + b]
}

/// `∂_c G_{ab̄}` from a metric jet.
fn d1(jet: &PointJet, a: usize, b: usize, c: usize) -> C64 {
    let n = jet.n;
    jet.d_metric[(c * n + a) * n + b]
}

/// Distinguished-point metric: `G_{ij̄}(0) = (λ − ξ_i)δ_ij`, the mixed blocks
/// vanish and `G_{αβ̄}(0) = δ_αβ`, on every chart of the model.
#[allow(clippy::needless_range_loop)]
pub fn check_origin_values(model: &Model, lambda: f64) -> Result<IdentityCase> {
    let bundle = model
        .bundle
        .as_ref()
        .ok_or_else(|| Error::Model(format!("{} is not a projectivized bundle", model.name)))?;
    let mut tally = Tally::new();
    for id in model.charts() {
        let ctx = context(model, id, lambda)?;
        let (n, dim) = (ctx.chart.n, ctx.chart.dim());
        let mut w = vec![C64::new(0.0, 0.0); bundle.rank()];
        w[id.fiber] = C64::new(1.0, 0.0);
        let theta = bundle_curvature_at(bundle, &model.base, id.base, &origin(n), &w)?.theta;
        for (i, row) in theta.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                if i != j && x.norm() > DIAGONAL_TOL {
                    return Err(Error::FrameConditions(format!(
                        "Θ_ww̄ is not diagonal on chart {id}: entry ({i},{j}) = {x}"
                    )));
                }
            }
        }
        let g = ctx.engine.metric(&origin(dim))?;
        for a in 0..dim {
            for b in 0..dim {
                let want = match (a < n, b < n) {
                    (true, true) if a == b => C64::new(lambda, 0.0) - theta[a][a],
                    (false, false) if a == b => C64::new(1.0, 0.0),
                    _ => C64::new(0.0, 0.0),
                };
                tally.record(g.get(a, b), want, || format!("chart {id}, G[{a}][{b}]"));
            }
        }
    }
    Ok(tally.finish(IdentityId::OriginValues, model, lambda, IDENTITY_TOL))
}

/// The four metric displays and the six first-derivative displays at a
/// random, non-distinguished point of each chart. They hold identically in
/// the chart, so no normalization is used beyond the coordinates.
pub fn check_first_derivatives(model: &Model, lambda: f64, seed: u64) -> Result<IdentityCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally::new();
    for id in model.charts() {
        let ctx = context(model, id, lambda)?;
        let (n, r, dim) = (ctx.chart.n, ctx.chart.r, ctx.chart.dim());
        let point: Vec<C64> = (0..dim)
            .map(|_| C64::new(rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6)))
            .collect();
        let jet = ctx.engine.eval(&point)?;
        let jv = ctx.paper.jets.eval(&point)?;
        let loc = |what: &str| format!("chart {id} at {point:?}, {what}");
        first_derivative_displays(&ctx.paper, &jv, &jet, lambda, n, r, &mut |lhs, rhs, what| {
            tally.record(lhs, rhs, || loc(&what))
        });
    }
    Ok(tally.finish(IdentityId::FirstDerivs, model, lambda, IDENTITY_TOL))
}

#[allow(clippy::too_many_arguments)]
fn first_derivative_displays(
    p: &PaperSide,
    jv: &JetValues<'_>,
    jet: &PointJet,
    lambda: f64,
    n: usize,
    r: usize,
    out: &mut dyn FnMut(C64, C64, String),
) {
    let e = |k: usize, h: &[usize], a: &[usize]| jv.get(k, h, a);
    let a0 = e(HVV, &[], &[]);
    let (inv, inv2, inv3) = (a0.inv(), (a0 * a0).inv(), (a0 * a0 * a0).inv());
    let fib = |alpha: usize| n + alpha;
    let lam = C64::new(lambda, 0.0);
    let g = &jet.metric;
    for i in 0..n {
        for j in 0..n {
            let rhs =
                lam * e(PHI, &[i], &[j]) + e(HVV, &[i], &[j]) * inv - e(HVV, &[i], &[]) * e(HVV, &[], &[j]) * inv2;
            out(g.get(i, j), rhs, format!("G_{{{i}{j}̄}}"));
            for k in 0..n {
                let rhs = lam * e(PHI, &[i, k], &[j]) + e(HVV, &[i, k], &[j]) * inv
                    - e(HVV, &[k], &[]) * e(HVV, &[i], &[j]) * inv2
                    - e(HVV, &[i, k], &[]) * e(HVV, &[], &[j]) * inv2
                    - e(HVV, &[i], &[]) * e(HVV, &[k], &[j]) * inv2
                    + e(HVV, &[k], &[]) * e(HVV, &[i], &[]) * e(HVV, &[], &[j]) * inv3 * 2.0;
                out(d1(jet, i, j, k), rhs, format!("G_{{{i}{j}̄,{k}}}"));
            }
        }
        for beta in 0..r {
            let hvb = p.hvb(beta);
            let rhs = e(hvb, &[i], &[]) * inv - e(HVV, &[i], &[]) * e(hvb, &[], &[]) * inv2;
            out(g.get(i, fib(beta)), rhs, format!("G_{{{i}β̄{beta}}}"));
            for k in 0..n {
                let rhs = e(hvb, &[i, k], &[]) * inv
                    - e(HVV, &[k], &[]) * e(hvb, &[i], &[]) * inv2
                    - e(HVV, &[i], &[]) * e(hvb, &[k], &[]) * inv2
                    - e(HVV, &[i, k], &[]) * e(hvb, &[], &[]) * inv2
                    + e(HVV, &[i], &[]) * e(HVV, &[k], &[]) * e(hvb, &[], &[]) * inv3 * 2.0;
                out(d1(jet, i, fib(beta), k), rhs, format!("G_{{{i}β̄{beta},{k}}}"));
            }
        }
    }
    for alpha in 0..r {
        let hav = p.hav(alpha);
        for j in 0..n {
            let rhs = e(hav, &[], &[j]) * inv - e(HVV, &[], &[j]) * e(hav, &[], &[]) * inv2;
            out(g.get(fib(alpha), j), rhs, format!("G_{{α{alpha}{j}̄}}"));
            for k in 0..n {
                let rhs = e(hav, &[k], &[j]) * inv
                    - e(HVV, &[k], &[]) * e(hav, &[], &[j]) * inv2
                    - e(HVV, &[], &[j]) * e(hav, &[k], &[]) * inv2
                    - e(HVV, &[k], &[j]) * e(hav, &[], &[]) * inv2
                    + e(hav, &[], &[]) * e(HVV, &[], &[j]) * e(HVV, &[k], &[]) * inv3 * 2.0;
                out(d1(jet, fib(alpha), j, k), rhs, format!("G_{{α{alpha}{j}̄,{k}}}"));
            }
            for gamma in 0..r {
                let hgv = p.hav(gamma);
                let rhs = -e(hgv, &[], &[]) * e(hav, &[], &[j]) * inv2 - e(hgv, &[], &[j]) * e(hav, &[], &[]) * inv2
                    + e(hav, &[], &[]) * e(hgv, &[], &[]) * e(HVV, &[], &[j]) * inv3 * 2.0;
                out(
                    d1(jet, fib(alpha), j, fib(gamma)),
                    rhs,
                    format!("G_{{α{alpha}{j}̄,γ{gamma}}}"),
                );
            }
        }
        for beta in 0..r {
            let (hab, hvb) = (p.hab(alpha, beta), p.hvb(beta));
            // the metric display read without the stray derivative index
            let rhs = e(hab, &[], &[]) * inv - e(hav, &[], &[]) * e(hvb, &[], &[]) * inv2;
            out(g.get(fib(alpha), fib(beta)), rhs, format!("G_{{α{alpha}β̄{beta}}}"));
            for k in 0..n {
                let rhs = e(hab, &[k], &[]) * inv
                    - e(hab, &[], &[]) * e(HVV, &[k], &[]) * inv2
                    - e(hav, &[k], &[]) * e(hvb, &[], &[]) * inv2
                    - e(hav, &[], &[]) * e(hvb, &[k], &[]) * inv2
                    + e(hav, &[], &[]) * e(hvb, &[], &[]) * e(HVV, &[k], &[]) * inv3 * 2.0;
                out(
                    d1(jet, fib(alpha), fib(beta), k),
                    rhs,
                    format!("G_{{α{alpha}β̄{beta},{k}}}"),
                );
            }
            for gamma in 0..r {
                let hgv = p.hav(gamma);
                let rhs = -e(hab, &[], &[]) * e(hgv, &[], &[]) * inv2
                    - e(hav, &[], &[]) * e(p.hab(gamma, beta), &[], &[]) * inv2
                    + e(hav, &[], &[]) * e(hgv, &[], &[]) * e(hvb, &[], &[]) * inv3 * 2.0;
                out(
                    d1(jet, fib(alpha), fib(beta), fib(gamma)),
                    rhs,
                    format!("G_{{α{alpha}β̄{beta},γ{gamma}}}"),
                );
            }
        }
    }
}

/// The six second-derivative displays at the distinguished point of every
/// chart, one case per display.
pub fn check_second_derivatives(model: &Model, lambda: f64) -> Result<Vec<IdentityCase>> {
    let mut tallies: Vec<Tally> = (0..6).map(|_| Tally::new()).collect();
    for id in model.charts() {
        let ctx = context(model, id, lambda)?;
        let (n, r, dim) = (ctx.chart.n, ctx.chart.r, ctx.chart.dim());
        let p = &ctx.paper;
        let jet = ctx.engine.eval(&origin(dim))?;
        let jv = p.jets.eval(&origin(dim))?;
        let e = |k: usize, h: &[usize], a: &[usize]| jv.get(k, h, a);
        let fib = |alpha: usize| n + alpha;
        let lam = C64::new(lambda, 0.0);
        let zero = C64::new(0.0, 0.0);
        let mut local: Vec<Tally> = (0..6).map(|_| Tally::new()).collect();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let rhs = lam * e(PHI, &[i, k], &[j, l]) + e(HVV, &[i, k], &[j, l])
                            - e(HVV, &[i], &[j]) * e(HVV, &[k], &[l])
                            - e(HVV, &[i], &[l]) * e(HVV, &[k], &[j]);
                        local[0].record(dd(&jet, i, j, k, l), rhs, || format!("chart {id}, ({i}{j}̄,{k}{l}̄)"));
                    }
                    for beta in 0..r {
                        let rhs = e(p.hvb(beta), &[i, k], &[j]);
                        local[1].record(dd(&jet, i, j, k, fib(beta)), rhs, || {
                            format!("chart {id}, ({i}{j}̄,{k}β̄{beta})")
                        });
                    }
                }
                for alpha in 0..r {
                    for beta in 0..r {
                        let hab = p.hab(alpha, beta);
                        let rhs = e(hab, &[i], &[j]) - e(hab, &[], &[]) * e(HVV, &[i], &[j]);
                        local[2].record(dd(&jet, i, j, fib(alpha), fib(beta)), rhs, || {
                            format!("chart {id}, ({i}{j}̄,α{alpha}β̄{beta})")
                        });
                    }
                }
            }
        }
        for alpha in 0..r {
            for gamma in 0..r {
                for j in 0..n {
                    for l in 0..n {
                        local[3].record(dd(&jet, fib(alpha), j, fib(gamma), l), zero, || {
                            format!("chart {id}, (α{alpha}{j}̄,γ{gamma}{l}̄)")
                        });
                    }
                }
                for beta in 0..r {
                    for j in 0..n {
                        local[4].record(dd(&jet, fib(alpha), fib(beta), fib(gamma), j), zero, || {
                            format!("chart {id}, (α{alpha}β̄{beta},γ{gamma}{j}̄)")
                        });
                    }
                    for delta in 0..r {
                        let rhs = -e(p.hab(alpha, beta), &[], &[]) * e(p.hab(gamma, delta), &[], &[])
                            - e(p.hab(alpha, delta), &[], &[]) * e(p.hab(gamma, beta), &[], &[]);
                        local[5].record(dd(&jet, fib(alpha), fib(beta), fib(gamma), fib(delta)), rhs, || {
                            format!("chart {id}, (α{alpha}β̄{beta},γ{gamma}δ̄{delta})")
                        });
                    }
                }
            }
        }
        for (t, l) in tallies.iter_mut().zip(local) {
            t.merge(l);
        }
    }
    Ok(tallies
        .into_iter()
        .zip(IdentityId::SECOND_DERIVATIVES)
        .map(|(t, id)| t.finish(id, model, lambda, IDENTITY_TOL))
        .collect())
}

/// `V = X + U` with Gaussian parts; the first two trials are pure base and
/// pure fiber directions.
fn split_direction(rng: &mut ChaCha8Rng, n: usize, r: usize, k: usize) -> Vec<C64> {
    let (sx, su) = match k {
        0 => (1.0, 0.0),
        1 if r > 0 => (0.0, 1.0),
        _ => (1.0, 10f64.powf(rng.random_range(-1.0..1.0))),
    };
    (0..n + r)
        .map(|i| {
            let z = C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng));
            z * if i < n { sx } else { su }
        })
        .collect()
}

/// `R_{VV̄VV̄}` against its expansion in `X` and `U`, for `trials` random
/// directions at each chart's distinguished point. The deviation is relative
/// to the sum of the magnitudes of the grouped terms.
pub fn check_curvature_decomposition(model: &Model, lambda: f64, trials: usize, seed: u64) -> Result<IdentityCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally::new();
    for id in model.charts() {
        let ctx = context(model, id, lambda)?;
        let (n, r, dim) = (ctx.chart.n, ctx.chart.r, ctx.chart.dim());
        let curv = curvature_from_jet(&ctx.engine.eval(&origin(dim))?)?;
        for k in 0..trials {
            let v = split_direction(&mut rng, n, r, k);
            let zero = C64::new(0.0, 0.0);
            let x: Vec<C64> = (0..dim).map(|a| if a < n { v[a] } else { zero }).collect();
            let u: Vec<C64> = (0..dim).map(|a| if a < n { zero } else { v[a] }).collect();
            let terms = [
                curv.contract(&x, &x, &x, &x),
                curv.contract(&x, &x, &u, &u) * 4.0,
                curv.contract(&u, &u, &u, &u),
                C64::new(2.0 * curv.contract(&x, &u, &x, &u).re, 0.0),
                C64::new(4.0 * curv.contract(&x, &x, &x, &u).re, 0.0),
                C64::new(4.0 * curv.contract(&u, &u, &u, &x).re, 0.0),
            ];
            let rhs: C64 = terms.iter().sum();
            let lhs = curv.contract(&v, &v, &v, &v);
            let scale = terms
                .iter()
                .map(|t| t.norm())
                .sum::<f64>()
                .max(lhs.norm())
                .max(f64::MIN_POSITIVE);
            tally.record_scaled(lhs, rhs, scale, || format!("chart {id}, V = {v:?}"));
        }
    }
    Ok(tally.finish(IdentityId::CurvatureDecomposition, model, lambda, DECOMPOSITION_TOL))
}

/// `R_{VV̄VV̄} ≥ q(|X|, |U|)` at every chart's distinguished point. The
/// deviation is the largest violation `max(0, q − R)`; the tolerance is the
/// rounding allowance at the worst sample.
pub fn check_final_bound(
    model: &Model,
    lambda: f64,
    h0: f64,
    c: f64,
    trials: usize,
    seed: u64,
) -> Result<IdentityCase> {
    let mut worst: Option<(ChartId, crate::positivity::FinalBoundCheck)> = None;
    let mut pass = true;
    for (k, id) in model.charts().into_iter().enumerate() {
        let check = check_final_bound_at(model, id, lambda, h0, c, trials, seed.wrapping_add(k as u64))?;
        pass &= check.pass;
        if worst.as_ref().is_none_or(|(_, w)| check.min_slack < w.min_slack) {
            worst = Some((id, check));
        }
    }
    let (id, check) = worst.ok_or_else(|| Error::Model(format!("{} has no charts", model.name)))?;
    let s = &check.worst;
    Ok(IdentityCase {
        id: IdentityId::FinalBound,
        model: model.name.clone(),
        lambda,
        lhs: C64::new(s.lhs, 0.0),
        rhs: C64::new(s.rhs, 0.0),
        deviation: (s.rhs - s.lhs).max(0.0),
        tolerance: crate::positivity::SLACK_TOL * 1f64.max(s.lhs.abs()).max(s.rhs.abs()),
        pass,
        location: format!(
            "chart {id}, H₀ = {h0}, C = {c}, slack {:.3e}, V = {:?}",
            check.min_slack, s.v
        ),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteOptions {
    /// λ for the metric identities.
    pub lambda: f64,
    /// Directions per chart for the curvature decomposition.
    pub decomposition_trials: usize,
    /// Directions per chart for the final bound, checked at the certified λ.
    pub bound_trials: usize,
    /// Lattice for `H₀` and `C`.
    pub grid: GridSpec,
    pub seed: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            lambda: 5.0,
            decomposition_trials: 100,
            bound_trials: 500,
            grid: GridSpec::new(9, 1, 2.0),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub model: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub cases: Vec<IdentityCase>,
    pub excluded: Vec<Exclusion>,
    pub all_pass: bool,
}

fn model_cases(model: &Model, opts: &SuiteOptions) -> Result<Vec<IdentityCase>> {
    let mut cases = vec![
        check_origin_values(model, opts.lambda)?,
        check_first_derivatives(model, opts.lambda, opts.seed)?,
    ];
    cases.extend(check_second_derivatives(model, opts.lambda)?);
    cases.push(check_curvature_decomposition(
        model,
        opts.lambda,
        opts.decomposition_trials,
        opts.seed,
    )?);
    let (h0, bound) = certificate_inputs(model, &opts.grid, &ScanOptions::default(), opts.seed)?;
    let cert = certify_lambda(h0, bound.c)?;
    let lambda = if cert.any_positive_lambda() {
        opts.lambda
    } else {
        cert.lambda_star
    };
    cases.push(check_final_bound(
        model,
        lambda,
        h0,
        bound.c,
        opts.bound_trials,
        opts.seed,
    )?);
    Ok(cases)
}

/// Every check on every model. Models outside the catalog are excluded,
/// since their charts are not known to be in the normalized frame; errors
/// on a model are reported as exclusions and fail the suite.
pub fn run_suite(models: &[Model], opts: &SuiteOptions) -> SuiteReport {
    let results: Vec<(String, Result<Vec<IdentityCase>>)> = models
        .par_iter()
        .map(|m| {
            let res = if !m.is_catalog() {
                Err(Error::Model(
                    "custom model: the normalized frame is not constructed".into(),
                ))
            } else if m.bundle.is_none() {
                Err(Error::Model("no bundle".into()))
            } else {
                model_cases(m, opts)
            };
            (m.name.clone(), res)
        })
        .collect();
    let mut cases = Vec::new();
    let mut excluded = Vec::new();
    let mut errors = false;
    for (model, res) in results {
        match res {
            Ok(c) => cases.extend(c),
            Err(e) => {
                errors |= !matches!(&e, Error::Model(msg) if msg.starts_with("custom") || msg == "no bundle");
                excluded.push(Exclusion {
                    model,
                    reason: e.to_string(),
                });
            }
        }
    }
    let all_pass = !errors && !cases.is_empty() && cases.iter().all(|c| c.pass);
    SuiteReport {
        cases,
        excluded,
        all_pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{
        catalog_model, fubini_study, hirzebruch, line_bundle_sum, BaseKind, BaseModel, BundleKind, BundleModel,
    };

    fn model(id: &str) -> Model {
        catalog_model(id).unwrap().unwrap()
    }

    #[test]
    fn origin_values_examples() {
        let f2 = hirzebruch(2).unwrap();
        let case = check_origin_values(&f2, 5.0).unwrap();
        assert!(case.pass && case.deviation < 1e-12, "{case:?}");
        // the chart whose fiber point is the O(2) line sees diag(λ − 2, 1)
        let g = KahlerJet::new(&f2.chart(ChartId::new(0, 0), 5.0).unwrap().potential, 2)
            .metric(&origin(2))
            .unwrap();
        assert!((g.get(0, 0) - C64::new(3.0, 0.0)).norm() < 1e-12);
        assert!((g.get(1, 1) - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(g.get(0, 1).norm() < 1e-12);
        assert!(check_origin_values(&model("f0"), 1.0).unwrap().deviation < 1e-12);
        let p1 = fubini_study(1).unwrap();
        let e = line_bundle_sum(&p1, &[1, 0]).unwrap();
        let m = Model::projectivized(p1, e);
        let case = check_origin_values(&m, 3.0).unwrap();
        assert!(case.deviation < 1e-12);
        let g = KahlerJet::new(&m.chart(ChartId::new(0, 0), 3.0).unwrap().potential, 2)
            .metric(&origin(2))
            .unwrap();
        assert!((g.get(0, 0) - C64::new(2.0, 0.0)).norm() < 1e-12);
        let g = KahlerJet::new(&model("f0").chart(ChartId::new(1, 1), 1.0).unwrap().potential, 2)
            .metric(&origin(2))
            .unwrap();
        assert!((g.get(0, 0) - C64::new(1.0, 0.0)).norm() < 1e-12 && (g.get(1, 1) - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn second_derivatives_on_f2() {
        let cases = check_second_derivatives(&hirzebruch(2).unwrap(), 5.0).unwrap();
        assert_eq!(cases.len(), 6);
        for c in &cases {
            assert!(c.pass, "{c:?}");
        }
    }

    #[test]
    fn fiber_block_second_derivative_is_minus_two() {
        let m = model("sum11");
        let ctx = context(&m, ChartId::new(0, 0), 5.0).unwrap();
        let jet = ctx.engine.eval(&origin(2)).unwrap();
        assert!((dd(&jet, 1, 1, 1, 1) - C64::new(-2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn first_derivatives_hold_off_origin() {
        for id in ["f1", "sum21", "p2sum10"] {
            let case = check_first_derivatives(&model(id), 4.0, 11).unwrap();
            assert!(case.pass, "{case:?}");
        }
    }

    #[test]
    fn decomposition_and_bound() {
        let f2 = hirzebruch(2).unwrap();
        let case = check_curvature_decomposition(&f2, 5.0, 100, 1).unwrap();
        assert!(case.pass, "{case:?}");
        let cert = certify_lambda(2.0, 4.5).unwrap();
        let case = check_final_bound(&f2, cert.lambda_star, 2.0, 4.5, 200, 2).unwrap();
        assert!(case.pass && case.deviation <= case.tolerance, "{case:?}");
    }

    #[test]
    fn unnormalized_frame_is_refused() {
        // h = |1 + z|² in the first slot: positive near 0 but dh(0) ≠ 0
        let pot = fubini_study(1).unwrap().potential(0).unwrap().clone();
        let base = BaseModel::new("p1-one-chart", BaseKind::Custom, 1, vec![pot], Default::default()).unwrap();
        let scale = Expr::one() + Expr::var(0);
        let metric = vec![
            vec![&scale * scale.conj(), Expr::zero()],
            vec![Expr::zero(), Expr::one()],
        ];
        let bundle = BundleModel::new("skew", BundleKind::Custom, &base, vec![metric], Default::default()).unwrap();
        let m = Model::projectivized(base, bundle);
        let err = check_origin_values(&m, 5.0).unwrap_err();
        assert!(matches!(err, Error::FrameConditions(_)), "{err}");
        let report = run_suite(&[m], &SuiteOptions::default());
        assert!(report.cases.is_empty() && !report.all_pass);
        assert_eq!(report.excluded.len(), 1);
    }

    #[test]
    fn identity_ids_serialize_with_display_names() {
        for id in IdentityId::SECOND_DERIVATIVES {
            assert_eq!(serde_json::to_string(&id).unwrap(), format!("\"{id}\""));
        }
    }
}
