use std::fmt;

use serde::{Deserialize, Serialize};

use super::base::{identity_map, BaseModel};
use super::bundle::BundleModel;
use crate::wirtinger::{differentiate, DerivIndex, Expr};
use crate::{Error, Result, C64};

/// Chart on `P(E)`: a base chart plus the frame index `α₀` normalized to 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChartId {
    pub base: usize,
    pub fiber: usize,
}

impl ChartId {
    pub fn new(base: usize, fiber: usize) -> Self {
        Self { base, fiber }
    }
}

impl fmt::Display for ChartId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "b{}f{}", self.base, self.fiber)
    }
}

/// Local potential of `G_λ` on one chart of `P(E)`, in the coordinates
/// `(z_1..z_n, t_1..t_r)`.
#[derive(Clone, Debug)]
pub struct ProjChart {
    pub id: ChartId,
    pub n: usize,
    pub r: usize,
    pub lambda: f64,
    /// Bundle frame index carried by `t_k`.
    pub frame: Vec<usize>,
    /// `h(v, v̄)` with `v = e_{α₀} + Σ t_k e_{frame[k]}`.
    pub hvv: Expr,
    pub potential: Expr,
}

impl ProjChart {
    pub fn dim(&self) -> usize {
        self.n + self.r
    }
}

fn fiber_vector(n: usize, rank: usize, alpha0: usize) -> (Vec<usize>, Vec<Expr>) {
    let frame: Vec<usize> = (0..rank).filter(|&a| a != alpha0).collect();
    let mut v = vec![Expr::zero(); rank];
    v[alpha0] = Expr::one();
    for (k, &a) in frame.iter().enumerate() {
        v[a] = Expr::var(n + k);
    }
    (frame, v)
}

/// `φ_G = λ φ_g + log h(v, v̄)` on the chart `(base_chart, α₀)`.
pub fn projectivize(
    base: &BaseModel,
    bundle: &BundleModel,
    base_chart: usize,
    alpha0: usize,
    lambda: f64,
) -> Result<ProjChart> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Invalid(format!("λ must be positive, got {lambda}")));
    }
    let rank = bundle.rank();
    if alpha0 >= rank {
        return Err(Error::Invalid(format!("α₀ = {alpha0} but the rank is {rank}")));
    }
    let n = base.n();
    let h = bundle.metric(base_chart)?;
    let (frame, v) = fiber_vector(n, rank, alpha0);
    let mut terms = Vec::new();
    for a in 0..rank {
        for b in 0..rank {
            terms.push(&v[a] * v[b].conj() * &h[a][b]);
        }
    }
    let hvv = Expr::sum(terms);
    let potential = base.potential(base_chart)?.scale(lambda) + hvv.ln();
    Ok(ProjChart {
        id: ChartId::new(base_chart, alpha0),
        n,
        r: rank - 1,
        lambda,
        frame,
        hvv,
        potential,
    })
}

/// A base manifold, optionally with a bundle whose projectivization is the
/// total space. Without a bundle the potential is `λ φ_g`.
#[derive(Clone, Debug)]
pub struct Model {
    pub name: String,
    pub base: BaseModel,
    pub bundle: Option<BundleModel>,
}

impl Model {
    pub fn base_only(base: BaseModel) -> Self {
        Self {
            name: base.name.clone(),
            base,
            bundle: None,
        }
    }

    pub fn projectivized(base: BaseModel, bundle: BundleModel) -> Self {
        Self {
            name: format!("P({})", bundle.name),
            base,
            bundle: Some(bundle),
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    pub fn r(&self) -> usize {
        self.bundle.as_ref().map_or(0, |b| b.rank() - 1)
    }

    pub fn dim(&self) -> usize {
        self.n() + self.r()
    }

    pub fn charts(&self) -> Vec<ChartId> {
        let fibers = self.bundle.as_ref().map_or(1, BundleModel::rank);
        (0..self.base.chart_count())
            .flat_map(|b| (0..fibers).map(move |f| ChartId::new(b, f)))
            .collect()
    }

    /// True when both base and bundle come from the built-in catalog, so the
    /// chart origins are distinguished points in the normalized frame.
    pub fn is_catalog(&self) -> bool {
        self.base.is_homogeneous() && self.bundle.as_ref().is_none_or(BundleModel::is_catalog)
    }

    pub fn chart(&self, id: ChartId, lambda: f64) -> Result<ProjChart> {
        match &self.bundle {
            Some(bundle) => projectivize(&self.base, bundle, id.base, id.fiber, lambda),
            None => {
                if id.fiber != 0 {
                    return Err(Error::Invalid(format!("chart {id} does not exist")));
                }
                if !(lambda > 0.0) {
                    return Err(Error::Invalid(format!("λ must be positive, got {lambda}")));
                }
                Ok(ProjChart {
                    id,
                    n: self.n(),
                    r: 0,
                    lambda,
                    frame: vec![],
                    hvv: Expr::one(),
                    potential: self.base.potential(id.base)?.scale(lambda),
                })
            }
        }
    }

    /// Coordinates of chart `to` as expressions in the coordinates of `from`.
    pub fn transition(&self, from: ChartId, to: ChartId) -> Result<Vec<Expr>> {
        let n = self.n();
        let mut map = if from.base == to.base {
            identity_map(n)
        } else {
            self.base.transition(from.base, to.base)?
        };
        let Some(bundle) = &self.bundle else {
            return Ok(map);
        };
        let rank = bundle.rank();
        if from.fiber >= rank || to.fiber >= rank {
            return Err(Error::Invalid(format!("chart {from} or {to} does not exist")));
        }
        let (_, v) = fiber_vector(n, rank, from.fiber);
        let a = bundle.cocycle(from.base, to.base)?;
        let v_to: Vec<Expr> = (0..rank)
            .map(|i| Expr::sum((0..rank).map(|j| &a[i][j] * &v[j]).collect::<Vec<_>>()))
            .collect();
        let denom = v_to[to.fiber].recip();
        let (frame_to, _) = fiber_vector(n, rank, to.fiber);
        map.extend(frame_to.iter().map(|&k| &v_to[k] * &denom));
        Ok(map)
    }

    /// Holomorphic Jacobian `J[a][b] = ∂F_a/∂w_b` of a transition map.
    pub fn transition_jacobian(&self, from: ChartId, to: ChartId) -> Result<Vec<Vec<Expr>>> {
        let map = self.transition(from, to)?;
        let dim = self.dim();
        Ok(map
            .iter()
            .map(|f| {
                (0..dim)
                    .map(|b| differentiate(f, &DerivIndex::new(vec![b], vec![]).expect("order 1")))
                    .collect()
            })
            .collect())
    }

    /// Maps a point and a tangent vector from chart `from` to chart `to`.
    pub fn push_forward(
        &self,
        from: ChartId,
        to: ChartId,
        point: &[C64],
        vector: &[C64],
    ) -> Result<(Vec<C64>, Vec<C64>)> {
        let map = self.transition(from, to)?;
        let jac = self.transition_jacobian(from, to)?;
        let q = map.iter().map(|f| f.eval(point)).collect::<Result<Vec<_>, _>>()?;
        let mut w = Vec::with_capacity(jac.len());
        for row in &jac {
            let mut acc = C64::new(0.0, 0.0);
            for (e, v) in row.iter().zip(vector) {
                acc += e.eval(point)? * v;
            }
            w.push(acc);
        }
        Ok((q, w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kahler::{hsc, metric_at, KahlerJet, TangentVector};
    use crate::models::{fubini_study, line_bundle_sum};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn hirzebruch(a: i32) -> Model {
        let p1 = fubini_study(1).unwrap();
        let e = line_bundle_sum(&p1, &[a, 0]).unwrap();
        Model::projectivized(p1, e)
    }

    #[test]
    fn hirzebruch_origin_metric() {
        let chart = hirzebruch(2).chart(ChartId::new(0, 0), 5.0).unwrap();
        let g = metric_at(&chart.potential, &[c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!((g.get(0, 0) - c(3.0, 0.0)).norm() < 1e-12);
        assert!((g.get(1, 1) - c(1.0, 0.0)).norm() < 1e-12);
        assert!(g.get(0, 1).norm() < 1e-12);
    }

    #[test]
    fn charts_and_dimensions() {
        let f1 = hirzebruch(1);
        assert_eq!(f1.dim(), 2);
        assert_eq!(f1.charts().len(), 4);
        assert!(f1.is_catalog());
        assert!(f1.chart(ChartId::new(0, 0), 0.0).is_err());
        assert!(f1.chart(ChartId::new(0, 2), 1.0).is_err());
    }

    #[test]
    fn hsc_agrees_across_overlaps() {
        let f2 = hirzebruch(2);
        let p = [c(0.4, -0.3), c(0.7, 0.2)];
        let v = [c(0.3, 0.9), c(-1.1, 0.4)];
        let from = ChartId::new(0, 0);
        let here = f2.chart(from, 3.5).unwrap();
        let (g, r) = KahlerJet::new(&here.potential, 2).curvature(&p).unwrap();
        let h_here = hsc(&r, &g, &TangentVector::new(v.to_vec())).unwrap();
        for to in f2.charts() {
            let (q, w) = f2.push_forward(from, to, &p, &v).unwrap();
            let there = f2.chart(to, 3.5).unwrap();
            let (g2, r2) = KahlerJet::new(&there.potential, 2).curvature(&q).unwrap();
            let h_there = hsc(&r2, &g2, &TangentVector::new(w)).unwrap();
            assert!((h_here - h_there).abs() < 1e-8, "{to}: {h_here} vs {h_there}");
        }
    }

    #[test]
    fn trivial_bundle_is_a_product() {
        let p1 = fubini_study(1).unwrap();
        let trivial = Model::projectivized(p1.clone(), line_bundle_sum(&p1, &[0, 0]).unwrap());
        let prod = Model::base_only(crate::models::product(&p1, &p1).unwrap());
        let a = trivial.chart(ChartId::new(0, 0), 1.0).unwrap();
        let b = prod.chart(ChartId::new(0, 0), 1.0).unwrap();
        let p = [c(0.2, 0.5), c(-1.3, 0.1)];
        let ga = metric_at(&a.potential, &p).unwrap();
        let gb = metric_at(&b.potential, &p).unwrap();
        assert!((ga.matrix() - gb.matrix()).norm() < 1e-12);
    }
}
