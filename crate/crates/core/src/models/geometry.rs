//! Chern curvature `Θ^h` of a bundle chart, its covariant derivative, and
//! the constant `C` bounding both.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::base::BaseModel;
use super::bundle::BundleModel;
use super::grid::GridSpec;
use crate::kahler::{HermitianForm, KahlerJet};
use crate::linalg::{self, CMatrix};
use crate::wirtinger::{all_up_to, Jets};
use crate::{Error, Result, C64};

/// Derivatives of `h` (up to order (2,2)) and of `g` (up to order 1) on one
/// base chart, compiled once.
pub(crate) struct BundleJet {
    n: usize,
    rank: usize,
    h: Jets,
    g: KahlerJet,
}

/// Values of [`BundleJet`] at one base point. Matrices are indexed `[α][β]`
/// (or `[i][p]` for `g`).
pub(crate) struct BundleData {
    pub n: usize,
    pub rank: usize,
    pub g: HermitianForm,
    /// `∂_k g` per `k`.
    pub dg: Vec<CMatrix>,
    pub h: CMatrix,
    pub dh: Vec<CMatrix>,
    pub dbh: Vec<CMatrix>,
    /// `∂_i ∂_k h` at `[i * n + k]`.
    pub ddh: Vec<CMatrix>,
    /// `∂_i ∂̄_j h` at `[i * n + j]`.
    pub ddbh: Vec<CMatrix>,
    /// `∂_i ∂_k ∂̄_j h` at `[(i * n + k) * n + j]`.
    pub dddbh: Vec<CMatrix>,
    /// `∂_i ∂_k ∂̄_j ∂̄_l h` at `[((i * n + k) * n + j) * n + l]`.
    pub d4h: Vec<CMatrix>,
}

impl BundleJet {
    pub fn new(base: &BaseModel, bundle: &BundleModel, chart: usize) -> Result<Self> {
        let n = base.n();
        let rank = bundle.rank();
        let entries: Vec<_> = bundle.metric(chart)?.iter().flatten().cloned().collect();
        let wanted: Vec<_> = (0..entries.len())
            .flat_map(|k| all_up_to(n, 2, 2).into_iter().map(move |d| (k, d)))
            .collect();
        Ok(Self {
            n,
            rank,
            h: Jets::build(&entries, wanted),
            g: KahlerJet::new(base.potential(chart)?, n),
        })
    }

    pub fn eval(&self, z: &[C64]) -> Result<BundleData> {
        let (n, rank) = (self.n, self.rank);
        let vals = self.h.eval(z)?;
        let m =
            |holo: &[usize], anti: &[usize]| CMatrix::from_fn(rank, rank, |a, b| vals.get(a * rank + b, holo, anti));
        let gj = self.g.eval(z)?;
        let dg = (0..n)
            .map(|k| CMatrix::from_fn(n, n, |i, p| gj.d_metric[(k * n + i) * n + p]))
            .collect();
        let mut ddh = Vec::new();
        let mut ddbh = Vec::new();
        for i in 0..n {
            for k in 0..n {
                ddh.push(m(&[i, k], &[]));
                ddbh.push(m(&[i], &[k]));
            }
        }
        let mut dddbh = Vec::new();
        let mut d4h = Vec::new();
        for i in 0..n {
            for k in 0..n {
                for j in 0..n {
                    dddbh.push(m(&[i, k], &[j]));
                    for l in 0..n {
                        d4h.push(m(&[i, k], &[j, l]));
                    }
                }
            }
        }
        Ok(BundleData {
            n,
            rank,
            g: gj.metric,
            dg,
            h: m(&[], &[]),
            dh: (0..n).map(|i| m(&[i], &[])).collect(),
            dbh: (0..n).map(|j| m(&[], &[j])).collect(),
            ddh,
            ddbh,
            dddbh,
            d4h,
        })
    }
}

impl BundleData {
    /// `Θ_{ij̄} = −∂_i∂̄_j h + ∂_i h · h⁻¹ · ∂̄_j h`, at `[i * n + j]`.
    pub fn theta(&self) -> Result<Vec<CMatrix>> {
        let n = self.n;
        let hinv = linalg::inverse_pd(&self.h)?;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            let left = &self.dh[i] * &hinv;
            for j in 0..n {
                out.push(&left * &self.dbh[j] - &self.ddbh[i * n + j]);
            }
        }
        Ok(out)
    }

    /// Chern covariant derivative `∇_k Θ_{ij̄}` at `[(k * n + i) * n + j]`.
    pub fn nabla_theta(&self) -> Result<Vec<CMatrix>> {
        let n = self.n;
        let hinv = linalg::inverse_pd(&self.h)?;
        let ginv = self.g.inverse()?;
        let theta = self.theta()?;
        let mut out = Vec::with_capacity(n * n * n);
        for k in 0..n {
            let gamma_e = &self.dh[k] * &hinv;
            let gamma_g = &self.dg[k] * &ginv;
            for i in 0..n {
                let hi = &self.dh[i] * &hinv;
                for j in 0..n {
                    // ∂_k of −∂_i∂̄_j h + ∂_i h h⁻¹ ∂̄_j h
                    let mut d = &self.ddh[i * n + k] * &hinv * &self.dbh[j] - &hi * &self.dh[k] * &hinv * &self.dbh[j]
                        + &hi * &self.ddbh[k * n + j]
                        - &self.dddbh[(i * n + k) * n + j];
                    d -= &gamma_e * &theta[i * n + j];
                    for p in 0..n {
                        d -= &theta[p * n + j] * gamma_g[(i, p)];
                    }
                    out.push(d);
                }
            }
        }
        Ok(out)
    }
}

/// `Θ^h_{ww̄}` as an `n × n` form and its eigenvalues `ξ` relative to `g`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BundleCurvature {
    pub theta: Vec<Vec<C64>>,
    pub xi: Vec<f64>,
}

/// Bundle curvature along `w` (normalized in `h`) at base point `z`.
pub fn bundle_curvature_at(
    bundle: &BundleModel,
    base: &BaseModel,
    chart: usize,
    z: &[C64],
    w: &[C64],
) -> Result<BundleCurvature> {
    if w.len() != bundle.rank() {
        return Err(Error::Dimension {
            expected: bundle.rank(),
            got: w.len(),
        });
    }
    let data = BundleJet::new(base, bundle, chart)?.eval(z)?;
    let n = data.n;
    let norm = linalg::form_norm_sq(&data.h, w);
    if !(norm > 0.0) {
        return Err(Error::ZeroVector);
    }
    let theta = data.theta()?;
    let form = CMatrix::from_fn(n, n, |i, j| {
        let t = &theta[i * n + j];
        let mut acc = C64::new(0.0, 0.0);
        for a in 0..data.rank {
            for b in 0..data.rank {
                acc += w[a] * t[(a, b)] * w[b].conj();
            }
        }
        acc / norm
    });
    let p = linalg::unitary_frame(data.g.matrix())?;
    let unitary = p.transpose() * &form * p.map(|x| x.conj());
    Ok(BundleCurvature {
        theta: (0..n).map(|i| (0..n).map(|j| form[(i, j)]).collect()).collect(),
        xi: linalg::hermitian_eigenvalues(&unitary),
    })
}

/// Largest absolute components of `Θ` and `∇Θ` in unitary frames of `h`
/// and `g` at one base point.
pub(crate) fn unitary_component_max(data: &BundleData) -> Result<(f64, f64)> {
    let n = data.n;
    let rank = data.rank;
    let pe = linalg::unitary_frame(&data.h)?;
    let pg = linalg::unitary_frame(data.g.matrix())?;
    let pe_c = pe.map(|x| x.conj());
    let to_frame = |m: &CMatrix| pe.transpose() * m * &pe_c;
    let theta: Vec<CMatrix> = data.theta()?.iter().map(to_frame).collect();
    let nabla: Vec<CMatrix> = data.nabla_theta()?.iter().map(to_frame).collect();
    let mut worst_theta = 0.0f64;
    let mut worst_nabla = 0.0f64;
    for a in 0..rank {
        for b in 0..rank {
            for i in 0..n {
                for j in 0..n {
                    let mut acc = C64::new(0.0, 0.0);
                    for p in 0..n {
                        for q in 0..n {
                            acc += pg[(p, i)] * pg[(q, j)].conj() * theta[p * n + q][(a, b)];
                        }
                    }
                    worst_theta = worst_theta.max(acc.norm());
                    for k in 0..n {
                        let mut acc = C64::new(0.0, 0.0);
                        for s in 0..n {
                            for p in 0..n {
                                for q in 0..n {
                                    acc += pg[(s, k)]
                                        * pg[(p, i)]
                                        * pg[(q, j)].conj()
                                        * nabla[(s * n + p) * n + q][(a, b)];
                                }
                            }
                        }
                        worst_nabla = worst_nabla.max(acc.norm());
                    }
                }
            }
        }
    }
    Ok((worst_theta, worst_nabla))
}

const FRAME_TOL: f64 = 1e-12;

/// Checks the normalization the pointwise formulas rely on at the origin of
/// base chart `chart`: `g = I`, `dg = 0`, `h = I`, `dh = 0`, `∂∂h = 0`.
pub fn check_frame_conditions(base: &BaseModel, bundle: &BundleModel, chart: usize) -> Result<()> {
    let origin = vec![C64::new(0.0, 0.0); base.n()];
    let data = BundleJet::new(base, bundle, chart)?.eval(&origin)?;
    frame_conditions_of(&data)
}

pub(crate) fn frame_conditions_of(data: &BundleData) -> Result<()> {
    let dev = |m: &CMatrix, id: bool| {
        let mut worst = 0.0f64;
        for a in 0..m.nrows() {
            for b in 0..m.ncols() {
                let want = if id && a == b { 1.0 } else { 0.0 };
                worst = worst.max((m[(a, b)] - C64::new(want, 0.0)).norm());
            }
        }
        worst
    };
    let checks: [(&str, f64); 5] = [
        ("g(0) = I", dev(data.g.matrix(), true)),
        ("dg(0) = 0", data.dg.iter().map(|m| dev(m, false)).fold(0.0, f64::max)),
        ("h(0) = I", dev(&data.h, true)),
        (
            "dh(0) = 0",
            data.dh
                .iter()
                .chain(&data.dbh)
                .map(|m| dev(m, false))
                .fold(0.0, f64::max),
        ),
        ("∂∂h(0) = 0", data.ddh.iter().map(|m| dev(m, false)).fold(0.0, f64::max)),
    ];
    for (what, d) in checks {
        if d > FRAME_TOL {
            return Err(Error::FrameConditions(format!("{what} fails by {d:.3e}")));
        }
    }
    Ok(())
}

/// `min` over unit `X ∈ Cⁿ`, unit `w ∈ C^{r+1}` of
/// `−h_{ww̄,XX̄XX̄} + 2 (h_{ww̄,XX̄})²` at a normalized origin.
pub(crate) fn quartic_frame_term_min(data: &BundleData, seed: u64) -> f64 {
    let (n, rank) = (data.n, data.rank);
    let value = |x: &[C64], w: &[C64]| -> f64 {
        let form = |m: &CMatrix| -> C64 {
            let mut acc = C64::new(0.0, 0.0);
            for a in 0..rank {
                for b in 0..rank {
                    acc += w[a] * m[(a, b)] * w[b].conj();
                }
            }
            acc
        };
        let mut a2 = C64::new(0.0, 0.0);
        let mut a4 = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                a2 += x[i] * x[j].conj() * form(&data.ddbh[i * n + j]);
                for k in 0..n {
                    for l in 0..n {
                        a4 += x[i] * x[k] * x[j].conj() * x[l].conj() * form(&data.d4h[((i * n + k) * n + j) * n + l]);
                    }
                }
            }
        }
        -a4.re + 2.0 * a2.re * a2.re
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gauss = |len: usize, rng: &mut ChaCha8Rng| -> Vec<C64> {
        let v: Vec<C64> = (0..len)
            .map(|_| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
            .collect();
        normalize(v)
    };
    let mut best: Vec<(f64, Vec<C64>, Vec<C64>)> = (0..2000)
        .map(|_| {
            let x = gauss(n, &mut rng);
            let w = gauss(rank, &mut rng);
            (value(&x, &w), x, w)
        })
        .collect();
    best.sort_by(|a, b| a.0.total_cmp(&b.0));
    best.truncate(4);
    // random local search with a shrinking radius
    for cand in best.iter_mut() {
        let mut radius = 0.5;
        while radius > 1e-9 {
            let mut improved = false;
            for _ in 0..20 {
                let x = perturb(&cand.1, radius, &mut rng);
                let w = perturb(&cand.2, radius, &mut rng);
                let v = value(&x, &w);
                if v < cand.0 {
                    *cand = (v, x, w);
                    improved = true;
                }
            }
            if !improved {
                radius *= 0.5;
            }
        }
    }
    best.iter().map(|c| c.0).fold(f64::INFINITY, f64::min)
}

fn normalize(v: Vec<C64>) -> Vec<C64> {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

fn perturb(v: &[C64], radius: f64, rng: &mut ChaCha8Rng) -> Vec<C64> {
    normalize(
        v.iter()
            .map(|z| z + C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)) * radius)
            .collect(),
    )
}

/// Constituents of the bundle constant `C`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleBound {
    /// Largest unitary-frame component of `Θ^h` over the samples.
    pub curvature: f64,
    /// Largest unitary-frame component of `∇Θ^h` over the samples.
    pub covariant_derivative: f64,
    /// `max(0, −min(−h_{ww̄,XX̄XX̄} + 2(h_{ww̄,XX̄})²))` over unit `X, w` at
    /// normalized chart origins; `None` when the model gives no normalized
    /// origin (custom data).
    pub frame_remainder: Option<f64>,
    /// `max(curvature, covariant_derivative)`.
    pub c_literal: f64,
    /// `max(c_literal, frame_remainder)`: the value used by certificates.
    pub c: f64,
    pub samples: usize,
}

/// Estimates `C` over the base lattice of `grid` on every base chart.
pub fn bundle_bound_c(bundle: &BundleModel, base: &BaseModel, grid: &GridSpec, seed: u64) -> Result<BundleBound> {
    let n = base.n();
    let per_chart = grid.base_points.pow(2 * n as u32);
    if per_chart == 0 {
        return Err(Error::Invalid("sample grid is empty".into()));
    }
    let mut curvature = 0.0f64;
    let mut covariant = 0.0f64;
    let mut samples = 0;
    let mut remainder: Option<f64> = None;
    let homogeneous = base.is_homogeneous() && bundle.is_catalog();
    for chart in 0..base.chart_count() {
        let jet = BundleJet::new(base, bundle, chart)?;
        for idx in 0..per_chart {
            let z = grid.point(n, 0, idx);
            let data = jet.eval(&z)?;
            let (t, d) = unitary_component_max(&data)?;
            curvature = curvature.max(t);
            covariant = covariant.max(d);
            samples += 1;
        }
        if homogeneous {
            let data = jet.eval(&vec![C64::new(0.0, 0.0); n])?;
            if frame_conditions_of(&data).is_ok() {
                let m = (-quartic_frame_term_min(&data, seed ^ chart as u64)).max(0.0);
                remainder = Some(remainder.map_or(m, |r: f64| r.max(m)));
            }
        }
    }
    let c_literal = curvature.max(covariant);
    Ok(BundleBound {
        curvature,
        covariant_derivative: covariant,
        frame_remainder: remainder,
        c_literal,
        c: remainder.map_or(c_literal, |r| r.max(c_literal)),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{fubini_study, line_bundle_sum, product, BundleKind};
    use crate::wirtinger::Expr;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn line_bundle_xi() {
        let p1 = fubini_study(1).unwrap();
        let f2 = line_bundle_sum(&p1, &[2, 0]).unwrap();
        let o = [c(0.0, 0.0)];
        let k = bundle_curvature_at(&f2, &p1, 0, &o, &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!((k.xi[0] - 2.0).abs() < 1e-12);
        let k = bundle_curvature_at(&f2, &p1, 0, &o, &[c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(k.xi[0].abs() < 1e-12);
        // away from the origin the eigenvalue relative to g is still a
        let k = bundle_curvature_at(&f2, &p1, 1, &[c(0.7, -1.2)], &[c(3.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!((k.xi[0] - 2.0).abs() < 1e-10, "{:?}", k.xi);
    }

    #[test]
    fn trivial_bundle_is_flat() {
        let p1 = fubini_study(1).unwrap();
        let base = product(&p1, &p1).unwrap();
        let e = line_bundle_sum(&base, &[0, 0]).unwrap();
        let k = bundle_curvature_at(&e, &base, 0, &[c(0.3, 0.0), c(0.1, 0.2)], &[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(k.xi.iter().all(|x| x.abs() < 1e-14));
        let bound = bundle_bound_c(&e, &base, &GridSpec::new(3, 1, 1.0), 1).unwrap();
        assert_eq!(bound.c, 0.0);
        assert_eq!(bound.frame_remainder, Some(0.0));
    }

    #[test]
    fn homogeneous_sums_have_parallel_curvature() {
        let p2 = fubini_study(2).unwrap();
        let e = line_bundle_sum(&p2, &[2, 1, 0]).unwrap();
        let data = BundleJet::new(&p2, &e, 1)
            .unwrap()
            .eval(&[c(0.4, -0.9), c(1.1, 0.3)])
            .unwrap();
        let (t, d) = unitary_component_max(&data).unwrap();
        assert!((t - 2.0).abs() < 1e-10, "{t}");
        assert!(d < 1e-9, "{d}");
    }

    #[test]
    fn hirzebruch_bound() {
        let p1 = fubini_study(1).unwrap();
        for a in 1..=3 {
            let e = line_bundle_sum(&p1, &[a, 0]).unwrap();
            let b = bundle_bound_c(&e, &p1, &GridSpec::new(5, 1, 2.0), 7).unwrap();
            let a = f64::from(a);
            assert!((b.curvature - a).abs() < 1e-9);
            assert!(b.covariant_derivative < 1e-9);
            // −min over u = |w_0|² ∈ [0, 1] of 2a²u² − 2a(a+1)u, attained at
            // u = (a+1)/(2a)
            let expected = (a + 1.0).powi(2) / 2.0;
            let rem = b.frame_remainder.unwrap();
            assert!((rem - expected).abs() < 1e-6, "a={a}: {rem} vs {expected}");
            assert!(b.c >= a);
        }
    }

    #[test]
    fn frame_conditions_detect_non_normal_chart() {
        let p1 = fubini_study(1).unwrap();
        let e = line_bundle_sum(&p1, &[1, 0]).unwrap();
        assert!(check_frame_conditions(&p1, &e, 0).is_ok());
        // h_00 = |1 + z|² has dh(0) ≠ 0
        let one_plus_z = Expr::one() + Expr::var(0);
        let h00 = &one_plus_z * one_plus_z.conj();
        let metric = vec![vec![h00, Expr::zero()], vec![Expr::zero(), Expr::one()]];
        let shifted =
            BundleModel::new("shifted", BundleKind::Custom, &p1, vec![metric; 2], Default::default()).unwrap();
        assert!(matches!(
            check_frame_conditions(&p1, &shifted, 0),
            Err(Error::FrameConditions(_))
        ));
    }
}
