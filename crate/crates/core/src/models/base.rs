use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::wirtinger::Expr;
use crate::{Error, Result};

/// How a base manifold was built. Catalog kinds are homogeneous, so every
/// point is isometric to a chart origin; custom bases carry no such promise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseKind {
    FubiniStudy { n: usize },
    Flat { n: usize },
    Product { factors: Vec<BaseKind> },
    Custom,
}

impl BaseKind {
    pub fn is_homogeneous(&self) -> bool {
        match self {
            BaseKind::FubiniStudy { .. } | BaseKind::Flat { .. } => true,
            BaseKind::Product { factors } => factors.iter().all(BaseKind::is_homogeneous),
            BaseKind::Custom => false,
        }
    }
}

/// A Kähler manifold `(M, g)` given by an atlas of local potentials.
///
/// `transition(a, b)` lists the chart-`b` coordinates as expressions in the
/// chart-`a` coordinates.
#[derive(Clone, Debug)]
pub struct BaseModel {
    pub name: String,
    pub kind: BaseKind,
    n: usize,
    potentials: Vec<Expr>,
    transitions: BTreeMap<(usize, usize), Vec<Expr>>,
}

pub(crate) fn identity_map(n: usize) -> Vec<Expr> {
    (0..n).map(Expr::var).collect()
}

impl BaseModel {
    pub fn new(
        name: impl Into<String>,
        kind: BaseKind,
        n: usize,
        potentials: Vec<Expr>,
        transitions: BTreeMap<(usize, usize), Vec<Expr>>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Model("base dimension must be at least 1".into()));
        }
        if potentials.is_empty() {
            return Err(Error::Model("a base needs at least one chart".into()));
        }
        for (k, p) in potentials.iter().enumerate() {
            if p.dim() > n {
                return Err(Error::Model(format!(
                    "chart {k} potential uses variable w{} beyond dimension {n}",
                    p.dim()
                )));
            }
        }
        for (&(a, b), map) in &transitions {
            if a >= potentials.len() || b >= potentials.len() {
                return Err(Error::Model(format!("transition {a}->{b} names a missing chart")));
            }
            if map.len() != n || map.iter().any(|e| e.dim() > n) {
                return Err(Error::Model(format!(
                    "transition {a}->{b} must give {n} components in {n} variables"
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            kind,
            n,
            potentials,
            transitions,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn chart_count(&self) -> usize {
        self.potentials.len()
    }

    pub fn potential(&self, chart: usize) -> Result<&Expr> {
        self.potentials
            .get(chart)
            .ok_or_else(|| Error::Model(format!("base has no chart {chart}")))
    }

    pub fn transition(&self, from: usize, to: usize) -> Result<Vec<Expr>> {
        if from == to && from < self.chart_count() {
            return Ok(identity_map(self.n));
        }
        self.transitions
            .get(&(from, to))
            .cloned()
            .ok_or(Error::NoTransition { from, to })
    }

    pub fn has_transition(&self, from: usize, to: usize) -> bool {
        from == to || self.transitions.contains_key(&(from, to))
    }

    pub fn is_homogeneous(&self) -> bool {
        self.kind.is_homogeneous()
    }
}

/// Position of homogeneous index `m` among the affine coordinates of chart `k`.
pub(crate) fn affine_slot(k: usize, m: usize) -> usize {
    debug_assert_ne!(k, m);
    if m < k {
        m
    } else {
        m - 1
    }
}

/// `Pⁿ` with the Fubini–Study potential `log(1 + Σ|z_i|²)` on each of the
/// `n + 1` standard affine charts. Chart `k` sets `Z_k = 1` and lists the
/// other homogeneous coordinates in increasing order.
pub fn fubini_study(n: usize) -> Result<BaseModel> {
    if n == 0 {
        return Err(Error::Model("Fubini–Study needs n ≥ 1".into()));
    }
    let potential = (Expr::one() + Expr::sum((0..n).map(Expr::abs_sq))).ln();
    let mut transitions = BTreeMap::new();
    for k in 0..=n {
        for l in 0..=n {
            if k == l {
                continue;
            }
            // homogeneous coordinate Z_m written in chart k
            let homog = |m: usize| {
                if m == k {
                    Expr::one()
                } else {
                    Expr::var(affine_slot(k, m))
                }
            };
            let denom = homog(l).recip();
            let map = (0..=n).filter(|&m| m != l).map(|m| homog(m) * &denom).collect();
            transitions.insert((k, l), map);
        }
    }
    BaseModel::new(
        format!("P{n}"),
        BaseKind::FubiniStudy { n },
        n,
        vec![potential; n + 1],
        transitions,
    )
}

/// `Cⁿ` with the Euclidean potential `Σ|z_i|²`.
pub fn flat(n: usize) -> Result<BaseModel> {
    BaseModel::new(
        format!("C{n}"),
        BaseKind::Flat { n },
        n,
        vec![Expr::sum((0..n).map(Expr::abs_sq))],
        BTreeMap::new(),
    )
}

/// Riemannian product; chart `(i, j)` has index `i * b.chart_count() + j`
/// and coordinates `(z_a, z_b)`.
pub fn product(a: &BaseModel, b: &BaseModel) -> Result<BaseModel> {
    let (na, nb) = (a.n, b.n);
    let cb = b.chart_count();
    let mut potentials = Vec::new();
    for pa in &a.potentials {
        for pb in &b.potentials {
            potentials.push(pa + pb.shift_vars(na));
        }
    }
    let mut transitions = BTreeMap::new();
    let charts = potentials.len();
    for from in 0..charts {
        for to in 0..charts {
            let (ia, ib) = (from / cb, from % cb);
            let (ja, jb) = (to / cb, to % cb);
            if from == to || !a.has_transition(ia, ja) || !b.has_transition(ib, jb) {
                continue;
            }
            let mut map = a.transition(ia, ja)?;
            map.extend(b.transition(ib, jb)?.iter().map(|e| e.shift_vars(na)));
            transitions.insert((from, to), map);
        }
    }
    BaseModel::new(
        format!("{}x{}", a.name, b.name),
        BaseKind::Product {
            factors: vec![a.kind.clone(), b.kind.clone()],
        },
        na + nb,
        potentials,
        transitions,
    )
}
