//! Pointwise Kähler geometry of a local potential `φ`.
//!
//! Conventions: `G_{ab̄} = ∂_a ∂̄_b φ` and
//!
//! ```text
//! R_{ab̄cd̄} = −∂_c ∂̄_d G_{ab̄} + Σ_{p,q} ∂_c G_{aq̄} (G⁻¹)_{qp} ∂̄_d G_{pb̄}
//! ```
//!
//! so that `log(1 + |z|²)` has holomorphic sectional curvature `+2`.
//! Norms of tangent vectors are always taken in `G`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::{self, CMatrix};
use crate::wirtinger::{DerivIndex, Expr, ExprPool, Tape};
use crate::{Error, Result, C64};

/// Hermitian form `G_{ab̄}` at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianForm {
    m: CMatrix,
}

impl HermitianForm {
    pub fn new(m: CMatrix) -> Self {
        assert!(m.is_square());
        Self { m }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(CMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn get(&self, a: usize, b: usize) -> C64 {
        self.m[(a, b)]
    }

    /// `max |G_{ab̄} − conj(G_{bā})|`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                worst = worst.max((self.m[(a, b)] - self.m[(b, a)].conj()).norm());
            }
        }
        worst
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.m)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.m)
    }

    pub fn inverse(&self) -> Result<CMatrix> {
        linalg::inverse_pd(&self.m)
    }

    pub fn norm_sq(&self, v: &TangentVector) -> f64 {
        linalg::form_norm_sq(&self.m, v.components())
    }
}

/// Type-(1,0) tangent vector, optionally split into base and fiber parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    components: Vec<C64>,
    /// Number of leading base components when the vector is split `X + U`.
    split: Option<usize>,
}

impl TangentVector {
    pub fn new(components: Vec<C64>) -> Self {
        Self {
            components,
            split: None,
        }
    }

    pub fn split(base: &[C64], fiber: &[C64]) -> Self {
        let mut components = base.to_vec();
        components.extend_from_slice(fiber);
        Self {
            components,
            split: Some(base.len()),
        }
    }

    pub fn with_split(mut self, n: usize) -> Self {
        assert!(n <= self.components.len());
        self.split = Some(n);
        self
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[C64] {
        &self.components
    }

    pub fn split_at(&self) -> Option<usize> {
        self.split
    }

    /// Base part `X`, zero-padded to full dimension.
    pub fn base_part(&self) -> TangentVector {
        let n = self.split.expect("vector carries no base/fiber split");
        let mut c = self.components.clone();
        c[n..].iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        TangentVector::new(c).with_split(n)
    }

    /// Fiber part `U`, zero-padded to full dimension.
    pub fn fiber_part(&self) -> TangentVector {
        let n = self.split.expect("vector carries no base/fiber split");
        let mut c = self.components.clone();
        c[..n].iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        TangentVector::new(c).with_split(n)
    }

    pub fn scaled(&self, s: C64) -> TangentVector {
        TangentVector {
            components: self.components.iter().map(|z| z * s).collect(),
            split: self.split,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|z| z.norm() == 0.0)
    }

    /// Coordinate (unweighted) squared norm.
    pub fn coord_norm_sq(&self) -> f64 {
        self.components.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Curvature tensor `R_{ab̄cd̄}` stored densely.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureTensor {
    n: usize,
    data: Vec<C64>,
}

impl CurvatureTensor {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![C64::new(0.0, 0.0); n.pow(4)],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize, usize) -> C64) -> Self {
        let mut t = Self::zeros(n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let k = t.idx(a, b, c, d);
                        t.data[k] = f(a, b, c, d);
                    }
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, a: usize, b: usize, c: usize, d: usize) -> usize {
        ((a * self.n + b) * self.n + c) * self.n + d
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> C64 {
        self.data[self.idx(a, b, c, d)]
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    /// `Σ R_{ab̄cd̄} A_a conj(B_b) C_c conj(D_d)`.
    #[allow(clippy::needless_range_loop)]
    pub fn contract(&self, a: &[C64], b: &[C64], c: &[C64], d: &[C64]) -> C64 {
        let n = self.n;
        let bc: Vec<C64> = b.iter().map(|z| z.conj()).collect();
        let dc: Vec<C64> = d.iter().map(|z| z.conj()).collect();
        let mut acc = C64::new(0.0, 0.0);
        let mut k = 0;
        for ia in 0..n {
            for ib in 0..n {
                let ab = a[ia] * bc[ib];
                if ab.norm_sqr() == 0.0 {
                    k += n * n;
                    continue;
                }
                let mut inner = C64::new(0.0, 0.0);
                for ic in 0..n {
                    for id in 0..n {
                        inner += self.data[k] * c[ic] * dc[id];
                        k += 1;
                    }
                }
                acc += ab * inner;
            }
        }
        acc
    }

    /// `R_{VV̄VV̄}`; real up to rounding, imaginary part discarded.
    pub fn quartic(&self, v: &[C64]) -> f64 {
        self.contract(v, v, v, v).re
    }

    /// Largest violation of `R_{ab̄cd̄} = R_{cb̄ad̄} = R_{ad̄cb̄}`, relative to
    /// the largest entry.
    pub fn kahler_symmetry_defect(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let r = self.get(a, b, c, d);
                        worst = worst
                            .max((r - self.get(c, b, a, d)).norm())
                            .max((r - self.get(a, d, c, b)).norm());
                    }
                }
            }
        }
        worst / self.max_abs().max(1.0)
    }

    /// Largest violation of `R_{ab̄cd̄} = conj(R_{bād c̄})`.
    pub fn reality_defect(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        worst = worst.max((self.get(a, b, c, d) - self.get(b, a, d, c).conj()).norm());
                    }
                }
            }
        }
        worst / self.max_abs().max(1.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Components in the frame whose `a`-th vector has coordinates `P[·][a]`.
    pub fn in_frame(&self, p: &CMatrix) -> CurvatureTensor {
        let n = self.n;
        let pc = p.map(|z| z.conj());
        // contract one index at a time: O(n^5)
        let mut cur = self.data.clone();
        for slot in 0..4 {
            let mut next = vec![C64::new(0.0, 0.0); n.pow(4)];
            let m = if slot % 2 == 0 { p } else { &pc };
            let stride = n.pow(3 - slot as u32);
            for (k, out) in next.iter_mut().enumerate() {
                let new_idx = (k / stride) % n;
                let base = k - new_idx * stride;
                let mut acc = C64::new(0.0, 0.0);
                for old in 0..n {
                    acc += m[(old, new_idx)] * cur[base + old * stride];
                }
                *out = acc;
            }
            cur = next;
        }
        CurvatureTensor { n, data: cur }
    }
}

/// Second, third and fourth partials of a potential at one point.
#[derive(Clone, Debug)]
pub struct PointJet {
    pub n: usize,
    pub metric: HermitianForm,
    /// `∂_c G_{ab̄}` at `[(c * n + a) * n + b]`.
    pub d_metric: Vec<C64>,
    /// `∂̄_d G_{ab̄}` at `[(d * n + a) * n + b]`.
    pub dbar_metric: Vec<C64>,
    /// `∂_c ∂̄_d G_{ab̄}` at `[((c * n + d) * n + a) * n + b]`.
    pub dd_metric: Vec<C64>,
}

/// Compiled evaluator for the metric jet of a fixed potential.
#[derive(Clone, Debug)]
pub struct KahlerJet {
    n: usize,
    tape: Tape,
    metric: Vec<usize>,
    d_metric: Vec<usize>,
    dbar_metric: Vec<usize>,
    dd_metric: Vec<usize>,
}

impl KahlerJet {
    pub fn new(potential: &Expr, n: usize) -> Self {
        Self::build(potential, n, true)
    }

    /// Jet with only the metric compiled; [`KahlerJet::eval`] still works
    /// but curvature entries come back as zero.
    pub fn metric_only(potential: &Expr, n: usize) -> Self {
        Self::build(potential, n, false)
    }

    fn build(potential: &Expr, n: usize, curvature: bool) -> Self {
        let mut pool = ExprPool::new();
        let phi = pool.import(potential);
        let mut roots = Vec::new();
        let mut slot_of = std::collections::HashMap::new();
        let mut want = |pool: &mut ExprPool, holo: Vec<usize>, anti: Vec<usize>| -> usize {
            let d = DerivIndex::new(holo, anti).expect("order ≤ (2,2)");
            *slot_of.entry(d.clone()).or_insert_with(|| {
                roots.push(pool.derivative(phi, &d));
                roots.len() - 1
            })
        };
        let mut metric = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                metric.push(want(&mut pool, vec![a], vec![b]));
            }
        }
        let (mut d_metric, mut dbar_metric, mut dd_metric) = (Vec::new(), Vec::new(), Vec::new());
        if curvature {
            for c in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        d_metric.push(want(&mut pool, vec![a, c], vec![b]));
                    }
                }
            }
            for d in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        dbar_metric.push(want(&mut pool, vec![a], vec![b, d]));
                    }
                }
            }
            for c in 0..n {
                for d in 0..n {
                    for a in 0..n {
                        for b in 0..n {
                            dd_metric.push(want(&mut pool, vec![a, c], vec![b, d]));
                        }
                    }
                }
            }
        }
        let tape = pool.compile(&roots);
        Self {
            n,
            tape,
            metric,
            d_metric,
            dbar_metric,
            dd_metric,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn tape_len(&self) -> usize {
        self.tape.len()
    }

    pub fn metric(&self, point: &[C64]) -> Result<HermitianForm> {
        Ok(self.eval(point)?.metric)
    }

    pub fn eval(&self, point: &[C64]) -> Result<PointJet> {
        let mut scratch = Vec::new();
        let mut out = Vec::new();
        self.eval_with(point, &mut scratch, &mut out)
    }

    pub fn eval_with(&self, point: &[C64], scratch: &mut Vec<C64>, out: &mut Vec<C64>) -> Result<PointJet> {
        if point.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: point.len(),
            });
        }
        self.tape.eval_into(point, scratch, out)?;
        let pick = |slots: &[usize]| -> Vec<C64> { slots.iter().map(|&s| out[s]).collect() };
        let n = self.n;
        let g = CMatrix::from_row_slice(n, n, &pick(&self.metric));
        let zeros = |len: usize, v: Vec<C64>| if v.is_empty() { vec![C64::new(0.0, 0.0); len] } else { v };
        Ok(PointJet {
            n,
            metric: HermitianForm::new(g),
            d_metric: zeros(n.pow(3), pick(&self.d_metric)),
            dbar_metric: zeros(n.pow(3), pick(&self.dbar_metric)),
            dd_metric: zeros(n.pow(4), pick(&self.dd_metric)),
        })
    }

    pub fn curvature(&self, point: &[C64]) -> Result<(HermitianForm, CurvatureTensor)> {
        let jet = self.eval(point)?;
        let r = curvature_from_jet(&jet)?;
        Ok((jet.metric, r))
    }
}

/// Curvature tensor from a metric jet; fails if `G` is not positive definite.
pub fn curvature_from_jet(jet: &PointJet) -> Result<CurvatureTensor> {
    let n = jet.n;
    let inv = jet.metric.inverse()?;
    // first-derivative term: (∂_c G) G⁻¹ (∂̄_d G)
    let mut left = Vec::with_capacity(n);
    for c in 0..n {
        let dc = CMatrix::from_fn(n, n, |a, q| jet.d_metric[(c * n + a) * n + q]);
        left.push(dc * &inv);
    }
    let mut r = CurvatureTensor::zeros(n);
    for d in 0..n {
        let bd = CMatrix::from_fn(n, n, |p, b| jet.dbar_metric[(d * n + p) * n + b]);
        for (c, lc) in left.iter().enumerate() {
            let prod = lc * &bd;
            for a in 0..n {
                for b in 0..n {
                    let k = r.idx(a, b, c, d);
                    r.data[k] = prod[(a, b)] - jet.dd_metric[((c * n + d) * n + a) * n + b];
                }
            }
        }
    }
    Ok(r)
}

/// Complex Hessian `∂_a ∂̄_b φ` at `point`.
pub fn metric_at(potential: &Expr, point: &[C64]) -> Result<HermitianForm> {
    KahlerJet::metric_only(potential, point.len()).metric(point)
}

pub fn curvature_at(potential: &Expr, point: &[C64]) -> Result<CurvatureTensor> {
    Ok(KahlerJet::new(potential, point.len()).curvature(point)?.1)
}

/// Holomorphic sectional curvature `R_{VV̄VV̄} / |V|⁴_G`.
pub fn hsc(r: &CurvatureTensor, g: &HermitianForm, v: &TangentVector) -> Result<f64> {
    if v.dim() != r.dim() {
        return Err(Error::Dimension {
            expected: r.dim(),
            got: v.dim(),
        });
    }
    let norm = g.norm_sq(v);
    if v.is_zero() || norm <= 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(r.quartic(v.components()) / (norm * norm))
}

/// `S = Σ G^{b̄a} G^{d̄c} R_{ab̄cd̄}`.
pub fn scalar_curvature(r: &CurvatureTensor, g: &HermitianForm) -> Result<f64> {
    let inv = g.inverse()?;
    let n = r.dim();
    let mut s = C64::new(0.0, 0.0);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    s += inv[(b, a)] * inv[(d, c)] * r.get(a, b, c, d);
                }
            }
        }
    }
    Ok(s.re)
}

/// Value the sphere average of `H` converges to: `2S / (N(N+1))`.
pub fn berger_average(scalar: f64, n: usize) -> f64 {
    2.0 * scalar / (n * (n + 1)) as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereAverage {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Monte Carlo mean of `H` over `G`-unit vectors drawn from the
/// rotation-invariant distribution (normalized complex Gaussians).
pub fn sphere_average_hsc(r: &CurvatureTensor, g: &HermitianForm, samples: usize, seed: u64) -> Result<SphereAverage> {
    if samples == 0 {
        return Err(Error::Invalid("samples must be at least 1".into()));
    }
    let n = r.dim();
    let frame = linalg::unitary_frame(g.matrix())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut y = vec![C64::new(0.0, 0.0); n];
    for _ in 0..samples {
        for z in y.iter_mut() {
            *z = C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
        }
        // Gaussian in a G-unitary frame is G-rotation invariant
        let v: Vec<C64> = (0..n).map(|a| (0..n).map(|k| frame[(a, k)] * y[k]).sum()).collect();
        let h = hsc(r, g, &TangentVector::new(v))?;
        sum += h;
        sum_sq += h * h;
    }
    let m = samples as f64;
    let mean = sum / m;
    let var = if samples > 1 {
        ((sum_sq - m * mean * mean) / (m - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(SphereAverage {
        mean,
        std_error: (var / m).sqrt(),
        samples,
    })
}
