//! Minimization of `H` over the unit sphere.
//!
//! In a `G`-unitary frame `H(V) = f(y) = R'(y, ȳ, y, ȳ)` with `|y| = 1`, a
//! real quartic. Its real gradient, packed as a complex vector, is
//! `4 conj(w)` with `w_a = Σ R'_{ab̄cd̄} ȳ_b y_c ȳ_d`. Steps are
//! Barzilai-Borwein guesses, halved until the Armijo condition holds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::kahler::{CurvatureTensor, HermitianForm, TangentVector};
use crate::linalg;
use crate::{Error, Result, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerOptions {
    /// Number of seeded start directions.
    pub starts: usize,
    /// Starts that are descended from, chosen by lowest initial value.
    pub refine: usize,
    /// Stop once one step lowers the value by less than this.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            starts: 64,
            refine: 4,
            tol: 1e-10,
            max_iter: 2000,
            seed: 0,
        }
    }
}

/// Unit start vectors in `C^N`: the coordinate axes, then seeded uniform draws.
#[derive(Clone, Debug)]
pub struct StartSet {
    dim: usize,
    vectors: Vec<Vec<C64>>,
}

impl StartSet {
    pub fn new(dim: usize, count: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vectors = Vec::with_capacity(count.max(1));
        for k in 0..count.max(1) {
            if k < dim {
                let mut e = vec![C64::new(0.0, 0.0); dim];
                e[k] = C64::new(1.0, 0.0);
                vectors.push(e);
            } else {
                let v: Vec<C64> = (0..dim)
                    .map(|_| C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
                    .collect();
                vectors.push(normalize(v));
            }
        }
        Self { dim, vectors }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

fn normalize(mut v: Vec<C64>) -> Vec<C64> {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in v.iter_mut() {
        *z /= norm;
    }
    v
}

/// `sign · R'(y, ȳ, y, ȳ)` for a tensor already in a unitary frame.
pub(crate) struct FrameQuartic<'a> {
    n: usize,
    data: &'a [C64],
    sign: f64,
    /// Index pairs `a ≤ c` of the symmetric square.
    pairs: Vec<(usize, usize)>,
    /// `R` as a Hermitian form on `Sym²`: `f(y) = s̄ᵀ K s` with `s_{ac} = y_a y_c`.
    sym: Vec<C64>,
}

impl<'a> FrameQuartic<'a> {
    pub fn new(r: &'a CurvatureTensor, maximize: bool) -> Self {
        let n = r.dim();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a..n).map(move |c| (a, c))).collect();
        let weight = |(i, j): (usize, usize)| if i == j { 1.0 } else { 2.0 };
        let mut sym = Vec::with_capacity(pairs.len() * pairs.len());
        for &(b, d) in &pairs {
            for &(a, c) in &pairs {
                sym.push(r.get(a, b, c, d) * (weight((a, c)) * weight((b, d))));
            }
        }
        Self {
            n,
            data: r.data(),
            sign: if maximize { -1.0 } else { 1.0 },
            pairs,
            sym,
        }
    }

    /// Fills `w` and returns the value.
    fn eval(&self, y: &[C64], w: &mut [C64]) -> f64 {
        let n = self.n;
        let nn = n * n;
        let mut f = C64::new(0.0, 0.0);
        // t_{ab} = Σ_{cd} R_{ab̄cd̄} y_c ȳ_d, then w_a = Σ_b t_{ab} ȳ_b
        for (a, wa) in w.iter_mut().enumerate().take(n) {
            let mut acc = C64::new(0.0, 0.0);
            for (b, yb) in y.iter().enumerate() {
                let block = &self.data[(a * n + b) * nn..(a * n + b + 1) * nn];
                let t: C64 = block
                    .chunks_exact(n)
                    .zip(y)
                    .map(|(row, yc)| row.iter().zip(y).map(|(r, yd)| r * yd.conj()).sum::<C64>() * yc)
                    .sum();
                acc += t * yb.conj();
            }
            *wa = acc;
            f += y[a] * acc;
        }
        self.sign * f.re
    }

    fn value(&self, y: &[C64]) -> f64 {
        let m = self.pairs.len();
        let mut s = [C64::new(0.0, 0.0); 36];
        let s = if m <= s.len() {
            &mut s[..m]
        } else {
            return self.eval(y, &mut vec![C64::new(0.0, 0.0); self.n]);
        };
        for (sp, &(a, c)) in s.iter_mut().zip(&self.pairs) {
            *sp = y[a] * y[c];
        }
        let mut f = 0.0;
        for p in 0..m {
            let row = &self.sym[p * m..(p + 1) * m];
            f += row[p].re * s[p].norm_sqr();
            let off: C64 = (p + 1..m).map(|q| row[q] * s[q]).sum();
            f += 2.0 * (s[p].conj() * off).re;
        }
        self.sign * f
    }
}

/// Best value over the sphere with the frame vector attaining it.
#[derive(Clone, Debug)]
pub(crate) struct FrameExtremum {
    pub value: f64,
    pub y: Vec<C64>,
    pub converged: bool,
}

fn descend(q: &FrameQuartic<'_>, start: &[C64], opts: &OptimizerOptions) -> FrameExtremum {
    let n = q.n;
    let mut y = start.to_vec();
    let mut w = vec![C64::new(0.0, 0.0); n];
    let mut grad = vec![C64::new(0.0, 0.0); n];
    let mut trial = vec![C64::new(0.0, 0.0); n];
    let mut trial_w = vec![C64::new(0.0, 0.0); n];
    let mut f = q.eval(&y, &mut w);
    let mut step = 0.1;
    let mut prev_y = vec![C64::new(0.0, 0.0); n];
    let mut prev_grad = vec![C64::new(0.0, 0.0); n];
    let mut have_prev = false;
    for _ in 0..opts.max_iter {
        // Riemannian gradient: drop the radial component
        let mut radial = C64::new(0.0, 0.0);
        for a in 0..n {
            grad[a] = w[a].conj() * (4.0 * q.sign);
            radial += grad[a] * y[a].conj();
        }
        let mut gnorm = 0.0;
        for a in 0..n {
            grad[a] -= y[a] * radial.re;
            gnorm += grad[a].norm_sqr();
        }
        if gnorm < 1e-30 {
            return FrameExtremum {
                value: f,
                y,
                converged: true,
            };
        }
        // Barzilai-Borwein step when the curvature estimate is positive
        step *= 2.0;
        if have_prev {
            let (mut ss, mut sg) = (0.0, 0.0);
            for a in 0..n {
                let ds = y[a] - prev_y[a];
                let dg = grad[a] - prev_grad[a];
                ss += ds.norm_sqr();
                sg += (ds.conj() * dg).re;
            }
            if sg > 0.0 {
                step = ss / sg;
            }
        }
        prev_y.copy_from_slice(&y);
        prev_grad.copy_from_slice(&grad);
        have_prev = true;
        loop {
            for a in 0..n {
                trial[a] = y[a] - grad[a] * step;
            }
            let norm = trial.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for z in trial.iter_mut() {
                *z /= norm;
            }
            let ft = q.eval(&trial, &mut trial_w);
            if ft <= f - 1e-4 * step * gnorm {
                let decrease = f - ft;
                std::mem::swap(&mut y, &mut trial);
                std::mem::swap(&mut w, &mut trial_w);
                f = ft;
                if decrease < opts.tol {
                    return FrameExtremum {
                        value: f,
                        y,
                        converged: true,
                    };
                }
                break;
            }
            step *= 0.5;
            if step < 1e-18 {
                // no descent possible at this resolution: a stationary point
                return FrameExtremum {
                    value: f,
                    y,
                    converged: true,
                };
            }
        }
    }
    FrameExtremum {
        value: f,
        y,
        converged: false,
    }
}

/// Screened multistart: every start is evaluated, the `refine` lowest are
/// descended. Ties keep the earliest start.
pub(crate) fn optimize_frame(q: &FrameQuartic<'_>, starts: &StartSet, opts: &OptimizerOptions) -> FrameExtremum {
    let mut ranked: Vec<(f64, usize)> = starts
        .vectors
        .iter()
        .enumerate()
        .map(|(k, v)| (q.value(v), k))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut best: Option<FrameExtremum> = None;
    for &(_, k) in ranked.iter().take(opts.refine.max(1)) {
        let cand = descend(q, &starts.vectors[k], opts);
        if best.as_ref().is_none_or(|b| cand.value < b.value) {
            best = Some(cand);
        }
    }
    let mut best = best.expect("at least one start");
    best.value *= q.sign;
    best
}

/// Extremal holomorphic sectional curvature at one point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HscExtremum {
    pub value: f64,
    /// Coordinate components of a `G`-unit vector attaining `value`.
    pub direction: TangentVector,
    pub converged: bool,
}

fn extremum(r: &CurvatureTensor, g: &HermitianForm, opts: &OptimizerOptions, maximize: bool) -> Result<HscExtremum> {
    if r.dim() != g.dim() {
        return Err(Error::Dimension {
            expected: r.dim(),
            got: g.dim(),
        });
    }
    if opts.starts == 0 {
        return Err(Error::Invalid("at least one start is required".into()));
    }
    let p = linalg::unitary_frame(g.matrix())?;
    let rf = r.in_frame(&p);
    let starts = StartSet::new(r.dim(), opts.starts, opts.seed);
    let best = optimize_frame(&FrameQuartic::new(&rf, maximize), &starts, opts);
    Ok(HscExtremum {
        value: best.value,
        direction: TangentVector::new(frame_to_coords(&p, &best.y)),
        converged: best.converged,
    })
}

pub(crate) fn frame_to_coords(p: &linalg::CMatrix, y: &[C64]) -> Vec<C64> {
    let n = y.len();
    (0..n).map(|a| (0..n).map(|k| p[(a, k)] * y[k]).sum()).collect()
}

/// Minimum of `H` over directions at a point: multistart projected gradient
/// descent on the `G`-unit sphere, deterministic for a fixed seed.
pub fn min_hsc_at_point(r: &CurvatureTensor, g: &HermitianForm, opts: &OptimizerOptions) -> Result<HscExtremum> {
    extremum(r, g, opts, false)
}

pub fn max_hsc_at_point(r: &CurvatureTensor, g: &HermitianForm, opts: &OptimizerOptions) -> Result<HscExtremum> {
    extremum(r, g, opts, true)
}
