//! Serializable model descriptions, used by configuration files.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::base::{flat, fubini_study, product, BaseKind, BaseModel};
use super::bundle::{line_bundle_sum, BundleKind, BundleModel, ExprMatrix};
use super::catalog::catalog_model;
use super::chart::Model;
use crate::linalg::{self, CMatrix};
use crate::wirtinger::{parse_expr, Expr, VarNames};
use crate::{Error, Result, C64};

/// Either a catalog id or an explicit base with an optional bundle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub catalog: Option<String>,
    #[serde(default)]
    pub base: Option<BaseSpec>,
    #[serde(default)]
    pub bundle: Option<BundleSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseSpec {
    FubiniStudy {
        n: usize,
    },
    Flat {
        n: usize,
    },
    Product {
        factors: Vec<BaseSpec>,
    },
    /// Potentials in `z1..zn`, one per chart.
    Custom {
        n: usize,
        charts: Vec<String>,
        #[serde(default)]
        transitions: Vec<TransitionSpec>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionSpec {
    pub from: usize,
    pub to: usize,
    /// Target-chart coordinates in terms of the source chart's `z1..zn`.
    pub map: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BundleSpec {
    LineBundleSum {
        degrees: Vec<i32>,
    },
    /// `metric[c][α][β] = h(e_α, ē_β)` on base chart `c`, in `z1..zn`.
    Custom {
        metric: Vec<Vec<Vec<String>>>,
        #[serde(default)]
        cocycles: Vec<CocycleSpec>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CocycleSpec {
    pub from: usize,
    pub to: usize,
    pub matrix: Vec<Vec<String>>,
}

const REALITY_TOL: f64 = 1e-9;
const SAMPLES: usize = 16;

fn parse(s: &str, n: usize) -> Result<Expr> {
    Ok(parse_expr(s, VarNames::new(n, 0))?)
}

fn sample_points(n: usize) -> Vec<Vec<C64>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    (0..SAMPLES)
        .map(|_| {
            (0..n)
                .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect()
        })
        .collect()
}

impl BaseSpec {
    pub fn build(&self) -> Result<BaseModel> {
        match self {
            BaseSpec::FubiniStudy { n } => fubini_study(*n),
            BaseSpec::Flat { n } => flat(*n),
            BaseSpec::Product { factors } => {
                let mut iter = factors.iter();
                let first = iter
                    .next()
                    .ok_or_else(|| Error::Model("product needs at least one factor".into()))?;
                iter.try_fold(first.build()?, |acc, f| product(&acc, &f.build()?))
            }
            BaseSpec::Custom { n, charts, transitions } => {
                let potentials = charts.iter().map(|s| parse(s, *n)).collect::<Result<Vec<_>>>()?;
                for (k, p) in potentials.iter().enumerate() {
                    let im = p.max_imaginary_part(*n, 32, 1.0, k as u64);
                    if im > REALITY_TOL {
                        return Err(Error::Model(format!(
                            "chart {k} potential is not real-valued (imaginary part {im:.3e})"
                        )));
                    }
                }
                let mut map = BTreeMap::new();
                for t in transitions {
                    let exprs = t.map.iter().map(|s| parse(s, *n)).collect::<Result<Vec<_>>>()?;
                    map.insert((t.from, t.to), exprs);
                }
                BaseModel::new("custom", BaseKind::Custom, *n, potentials, map)
            }
        }
    }
}

impl BundleSpec {
    pub fn build(&self, base: &BaseModel) -> Result<BundleModel> {
        match self {
            BundleSpec::LineBundleSum { degrees } => line_bundle_sum(base, degrees),
            BundleSpec::Custom { metric, cocycles } => {
                let n = base.n();
                let parse_matrix = |m: &Vec<Vec<String>>| -> Result<ExprMatrix> {
                    m.iter().map(|row| row.iter().map(|s| parse(s, n)).collect()).collect()
                };
                let metrics = metric.iter().map(parse_matrix).collect::<Result<Vec<_>>>()?;
                let mut map = BTreeMap::new();
                for c in cocycles {
                    map.insert((c.from, c.to), parse_matrix(&c.matrix)?);
                }
                let bundle = BundleModel::new("custom", BundleKind::Custom, base, metrics, map)?;
                validate_hermitian(&bundle, base)?;
                Ok(bundle)
            }
        }
    }
}

/// `h` must be conjugate-symmetric and positive definite at sampled points.
fn validate_hermitian(bundle: &BundleModel, base: &BaseModel) -> Result<()> {
    let rank = bundle.rank();
    for c in 0..base.chart_count() {
        let h = bundle.metric(c)?;
        for p in sample_points(base.n()) {
            let mut m = CMatrix::zeros(rank, rank);
            for a in 0..rank {
                for b in 0..rank {
                    m[(a, b)] = h[a][b].eval(&p)?;
                }
            }
            // h_{αβ̄} = conj(h_{βᾱ}) means m = mᴴ
            let defect = (&m - m.adjoint()).norm();
            if defect > REALITY_TOL * m.norm().max(1.0) {
                return Err(Error::Model(format!(
                    "chart {c} bundle metric is not Hermitian at {p:?}"
                )));
            }
            let min = linalg::min_eigenvalue(&m);
            if !(min > 0.0) {
                return Err(Error::Model(format!(
                    "chart {c} bundle metric is not positive definite at {p:?} (smallest eigenvalue {min:.3e})"
                )));
            }
        }
    }
    Ok(())
}

impl ModelSpec {
    pub fn catalog(id: &str) -> Self {
        Self {
            name: None,
            catalog: Some(id.to_string()),
            base: None,
            bundle: None,
        }
    }

    pub fn build(&self) -> Result<Model> {
        let model = match (&self.catalog, &self.base) {
            (Some(id), None) => {
                if self.bundle.is_some() {
                    return Err(Error::Model("a catalog model cannot take a bundle".into()));
                }
                catalog_model(id)?.ok_or_else(|| Error::Model(format!("unknown catalog model '{id}'")))?
            }
            (None, Some(base)) => {
                let base = base.build()?;
                match &self.bundle {
                    Some(b) => {
                        let bundle = b.build(&base)?;
                        Model::projectivized(base, bundle)
                    }
                    None => Model::base_only(base),
                }
            }
            _ => return Err(Error::Model("give exactly one of `catalog` or `base`".into())),
        };
        Ok(match &self.name {
            Some(name) => model.with_name(name.clone()),
            None => model,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn custom_round_trip() {
        let spec = ModelSpec {
            name: Some("hirz".into()),
            catalog: None,
            base: Some(BaseSpec::Custom {
                n: 1,
                charts: vec!["log(1 + z1*conj(z1))".into()],
                transitions: vec![],
            }),
            bundle: Some(BundleSpec::Custom {
                metric: vec![vec![
                    vec!["pow(1 + z1*conj(z1), -2)".into(), "0".into()],
                    vec!["0".into(), "1".into()],
                ]],
                cocycles: vec![],
            }),
        };
        let m = spec.build().unwrap();
        assert_eq!(m.name, "hirz");
        assert_eq!(m.dim(), 2);
        assert!(!m.is_catalog());
        let json = serde_json::to_string(&spec).unwrap();
        let back: ModelSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn rejects_bad_custom_data() {
        let complex_potential = BaseSpec::Custom {
            n: 1,
            charts: vec!["z1 + z1*conj(z1)".into()],
            transitions: vec![],
        };
        assert!(matches!(complex_potential.build(), Err(Error::Model(_))));
        let base = fubini_study(1).unwrap();
        let non_hermitian = BundleSpec::Custom {
            metric: vec![vec![vec!["1".into(), "z1".into()], vec!["z1".into(), "1".into()]]; 2],
            cocycles: vec![],
        };
        assert!(matches!(non_hermitian.build(&base), Err(Error::Model(_))));
        let indefinite = BundleSpec::Custom {
            metric: vec![vec![vec!["-1".into()]]; 2],
            cocycles: vec![],
        };
        assert!(matches!(indefinite.build(&base), Err(Error::Model(_))));
        assert!(ModelSpec::catalog("f9").build().is_err());
        assert_eq!(ModelSpec::catalog("f2").build().unwrap().name, "f2");
    }
}
