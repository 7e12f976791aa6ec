use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::base::{affine_slot, BaseKind, BaseModel};
use crate::wirtinger::Expr;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BundleKind {
    LineBundleSum { degrees: Vec<i32> },
    Custom,
}

/// Matrix of expressions, row-major `m[α][β]`.
pub type ExprMatrix = Vec<Vec<Expr>>;

/// A Hermitian holomorphic bundle `(E, h)` of rank `r + 1` over a base atlas.
///
/// `metric(c)[α][β] = h(e_α, ē_β)` in the holomorphic frame of base chart
/// `c`. Fiber components transform as `v^(b) = A v^(a)` with
/// `A = cocycle(a, b)` written in chart-`a` coordinates, so that
/// `h^(a) = Aᵀ h^(b) Ā`.
#[derive(Clone, Debug)]
pub struct BundleModel {
    pub name: String,
    pub kind: BundleKind,
    rank: usize,
    metrics: Vec<ExprMatrix>,
    cocycles: BTreeMap<(usize, usize), ExprMatrix>,
}

pub(crate) fn identity_matrix(k: usize) -> ExprMatrix {
    (0..k)
        .map(|a| {
            (0..k)
                .map(|b| if a == b { Expr::one() } else { Expr::zero() })
                .collect()
        })
        .collect()
}

impl BundleModel {
    pub fn new(
        name: impl Into<String>,
        kind: BundleKind,
        base: &BaseModel,
        metrics: Vec<ExprMatrix>,
        cocycles: BTreeMap<(usize, usize), ExprMatrix>,
    ) -> Result<Self> {
        let rank = metrics.first().map_or(0, Vec::len);
        if rank == 0 {
            return Err(Error::Model("bundle rank must be at least 1".into()));
        }
        if metrics.len() != base.chart_count() {
            return Err(Error::Model(format!(
                "bundle lists {} chart metrics but the base has {} charts",
                metrics.len(),
                base.chart_count()
            )));
        }
        let square = |m: &ExprMatrix| m.len() == rank && m.iter().all(|row| row.len() == rank);
        for (c, m) in metrics.iter().enumerate() {
            if !square(m) {
                return Err(Error::Model(format!("chart {c} metric is not {rank}x{rank}")));
            }
            if m.iter().flatten().any(|e| e.dim() > base.n()) {
                return Err(Error::Model(format!(
                    "chart {c} metric may only use the base coordinates z1..z{}",
                    base.n()
                )));
            }
        }
        for (&(a, b), m) in &cocycles {
            if !square(m) || a >= metrics.len() || b >= metrics.len() {
                return Err(Error::Model(format!("cocycle {a}->{b} is malformed")));
            }
        }
        Ok(Self {
            name: name.into(),
            kind,
            rank,
            metrics,
            cocycles,
        })
    }

    /// `r + 1`.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn metric(&self, chart: usize) -> Result<&ExprMatrix> {
        self.metrics
            .get(chart)
            .ok_or_else(|| Error::Model(format!("bundle has no chart {chart}")))
    }

    pub fn cocycle(&self, from: usize, to: usize) -> Result<ExprMatrix> {
        if from == to {
            return Ok(identity_matrix(self.rank));
        }
        self.cocycles
            .get(&(from, to))
            .cloned()
            .ok_or(Error::NoTransition { from, to })
    }

    pub fn is_catalog(&self) -> bool {
        !matches!(self.kind, BundleKind::Custom)
    }

    pub fn degrees(&self) -> Option<&[i32]> {
        match &self.kind {
            BundleKind::LineBundleSum { degrees } => Some(degrees),
            BundleKind::Custom => None,
        }
    }
}

/// `O(a_0) ⊕ … ⊕ O(a_r)` with the diagonal metric `(1 + |z|²)^{-a_α}`.
///
/// Nonzero degrees need a Fubini–Study base; all-zero degrees give the
/// trivial flat bundle over any base.
pub fn line_bundle_sum(base: &BaseModel, degrees: &[i32]) -> Result<BundleModel> {
    if degrees.is_empty() {
        return Err(Error::Model("line_bundle_sum needs at least one degree".into()));
    }
    let rank = degrees.len();
    let name = format!(
        "O({}) over {}",
        degrees.iter().map(i32::to_string).collect::<Vec<_>>().join(","),
        base.name
    );
    let kind = BundleKind::LineBundleSum {
        degrees: degrees.to_vec(),
    };
    let charts = base.chart_count();
    if degrees.iter().all(|&a| a == 0) {
        let mut cocycles = BTreeMap::new();
        for a in 0..charts {
            for b in 0..charts {
                if a != b && base.has_transition(a, b) {
                    cocycles.insert((a, b), identity_matrix(rank));
                }
            }
        }
        return BundleModel::new(name, kind, base, vec![identity_matrix(rank); charts], cocycles);
    }
    let n = match base.kind {
        BaseKind::FubiniStudy { n } => n,
        _ => {
            return Err(Error::Model(
                "line_bundle_sum with nonzero degrees needs a Fubini–Study base".into(),
            ))
        }
    };
    let one_plus = Expr::one() + Expr::sum((0..n).map(Expr::abs_sq));
    let diag = |entries: Vec<Expr>| -> ExprMatrix {
        entries
            .iter()
            .enumerate()
            .map(|(a, e)| {
                (0..rank)
                    .map(|b| if a == b { e.clone() } else { Expr::zero() })
                    .collect()
            })
            .collect()
    };
    let metric = diag(degrees.iter().map(|&a| one_plus.powi(-a)).collect());
    // |v^(k)|² |Z_k|^{2a} is chart independent, so v^(l) = (Z_k / Z_l)^a v^(k)
    let mut cocycles = BTreeMap::new();
    for k in 0..=n {
        for l in 0..=n {
            if k != l {
                let zl = Expr::var(affine_slot(k, l));
                cocycles.insert((k, l), diag(degrees.iter().map(|&a| zl.powi(-a)).collect()));
            }
        }
    }
    BundleModel::new(name, kind, base, vec![metric; n + 1], cocycles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::base::{fubini_study, product};
    use crate::C64;

    fn eval_matrix(m: &ExprMatrix, p: &[C64]) -> Vec<Vec<C64>> {
        m.iter()
            .map(|row| row.iter().map(|e| e.eval(p).unwrap()).collect())
            .collect()
    }

    #[test]
    fn cocycle_compatibility_on_p1_and_p2() {
        for (n, degrees) in [(1, vec![2, 0]), (1, vec![1, 3, -1]), (2, vec![1, 0])] {
            let base = fubini_study(n).unwrap();
            let e = line_bundle_sum(&base, &degrees).unwrap();
            let p: Vec<C64> = (0..n).map(|i| C64::new(0.4 + 0.3 * i as f64, -0.6)).collect();
            for a in 0..=n {
                for b in 0..=n {
                    let q: Vec<C64> = base
                        .transition(a, b)
                        .unwrap()
                        .iter()
                        .map(|x| x.eval(&p).unwrap())
                        .collect();
                    let ha = eval_matrix(e.metric(a).unwrap(), &p);
                    let hb = eval_matrix(e.metric(b).unwrap(), &q);
                    let m = eval_matrix(&e.cocycle(a, b).unwrap(), &p);
                    let r = degrees.len();
                    for i in 0..r {
                        for j in 0..r {
                            let mut pulled = C64::new(0.0, 0.0);
                            for k in 0..r {
                                for l in 0..r {
                                    pulled += m[k][i] * hb[k][l] * m[l][j].conj();
                                }
                            }
                            assert!((pulled - ha[i][j]).norm() < 1e-12, "{a}->{b} ({i},{j})");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn identity_at_origin_and_trivial_over_products() {
        let p1 = fubini_study(1).unwrap();
        let f2 = line_bundle_sum(&p1, &[2, 0]).unwrap();
        let h0 = eval_matrix(f2.metric(0).unwrap(), &[C64::new(0.0, 0.0)]);
        assert_eq!(h0[0][0], C64::new(1.0, 0.0));
        assert_eq!(h0[1][1], C64::new(1.0, 0.0));
        let prod = product(&p1, &p1).unwrap();
        assert!(line_bundle_sum(&prod, &[0, 0]).is_ok());
        assert!(line_bundle_sum(&prod, &[1, 0]).is_err());
        assert!(line_bundle_sum(&p1, &[]).is_err());
    }
}
