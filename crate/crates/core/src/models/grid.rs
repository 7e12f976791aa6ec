use serde::{Deserialize, Serialize};

use super::chart::{ChartId, Model};
use crate::C64;

/// Sample lattice: every complex coordinate ranges over a
/// `k × k` square lattice on `[-radius, radius]²`, with `k = base_points`
/// for base coordinates and `k = fiber_points` for fiber coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub base_points: usize,
    pub fiber_points: usize,
    pub radius: f64,
    /// Restricts sampling to these charts; all charts when absent.
    pub charts: Option<Vec<ChartId>>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            base_points: 17,
            fiber_points: 17,
            radius: 2.0,
            charts: None,
        }
    }
}

fn lattice(k: usize, radius: f64) -> Vec<f64> {
    match k {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..k)
            .map(|i| -radius + 2.0 * radius * i as f64 / (k - 1) as f64)
            .collect(),
    }
}

impl GridSpec {
    pub fn new(base_points: usize, fiber_points: usize, radius: f64) -> Self {
        Self {
            base_points,
            fiber_points,
            radius,
            charts: None,
        }
    }

    pub fn with_charts(mut self, charts: Vec<ChartId>) -> Self {
        self.charts = Some(charts);
        self
    }

    pub fn points_per_chart(&self, n: usize, r: usize) -> usize {
        self.base_points.pow(2 * n as u32) * self.fiber_points.pow(2 * r as u32)
    }

    /// Decodes a lattice index; base coordinates vary slowest.
    pub fn point(&self, n: usize, r: usize, mut idx: usize) -> Vec<C64> {
        let base = lattice(self.base_points, self.radius);
        let fiber = lattice(self.fiber_points, self.radius);
        let mut out = vec![C64::new(0.0, 0.0); n + r];
        for slot in (0..n + r).rev() {
            let values = if slot < n { &base } else { &fiber };
            let k = values.len();
            let im = values[idx % k];
            idx /= k;
            let re = values[idx % k];
            idx /= k;
            out[slot] = C64::new(re, im);
        }
        out
    }

    pub fn charts_for(&self, model: &Model) -> Vec<ChartId> {
        match &self.charts {
            Some(list) => list.clone(),
            None => model.charts(),
        }
    }

    pub fn total_points(&self, model: &Model) -> usize {
        self.charts_for(model).len() * self.points_per_chart(model.n(), model.r())
    }

    /// Every other lattice line: odd `k ≥ 5` becomes `(k + 1) / 2`, so the
    /// result is a sub-lattice. `None` when no axis can be halved.
    pub fn coarsened(&self) -> Option<GridSpec> {
        let halve = |k: usize| if k >= 5 && k % 2 == 1 { k.div_ceil(2) } else { k };
        let out = GridSpec {
            base_points: halve(self.base_points),
            fiber_points: halve(self.fiber_points),
            ..self.clone()
        };
        (out != *self).then_some(out)
    }

    pub fn is_empty(&self) -> bool {
        self.base_points == 0 || self.fiber_points == 0
    }
}
