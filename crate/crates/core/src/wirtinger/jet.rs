use std::collections::HashMap;

use crate::C64;

use super::{DerivIndex, EvalError, Expr, ExprPool, Tape};

/// Compiled table of selected mixed partials of several expressions.
#[derive(Clone, Debug)]
pub struct Jets {
    tape: Tape,
    slots: HashMap<(usize, DerivIndex), usize>,
}

impl Jets {
    pub fn build<I>(exprs: &[Expr], wanted: I) -> Self
    where
        I: IntoIterator<Item = (usize, DerivIndex)>,
    {
        let mut pool = ExprPool::new();
        let ids: Vec<_> = exprs.iter().map(|e| pool.import(e)).collect();
        let mut roots = Vec::new();
        let mut slots = HashMap::new();
        for (k, d) in wanted {
            if slots.contains_key(&(k, d.clone())) {
                continue;
            }
            let id = pool.derivative(ids[k], &d);
            slots.insert((k, d), roots.len());
            roots.push(id);
        }
        Self {
            tape: pool.compile(&roots),
            slots,
        }
    }

    pub fn eval(&self, point: &[C64]) -> Result<JetValues<'_>, EvalError> {
        Ok(JetValues {
            jets: self,
            values: self.tape.eval(point)?,
        })
    }
}

pub struct JetValues<'a> {
    jets: &'a Jets,
    values: Vec<C64>,
}

impl JetValues<'_> {
    /// Value of `∂^holo ∂̄^anti` of expression `k`. Panics if the partial was
    /// not requested at build time.
    pub fn get(&self, k: usize, holo: &[usize], anti: &[usize]) -> C64 {
        let d = DerivIndex::new(holo.to_vec(), anti.to_vec()).expect("order within bounds");
        let slot = self
            .jets
            .slots
            .get(&(k, d))
            .unwrap_or_else(|| panic!("partial {holo:?}/{anti:?} of expression {k} not compiled"));
        self.values[*slot]
    }
}

/// All multi-indices of length `len` (non-decreasing) over `0..dim`.
pub fn multisets(dim: usize, len: usize) -> Vec<Vec<usize>> {
    match len {
        0 => vec![vec![]],
        _ => {
            let mut out = Vec::new();
            for tail in multisets(dim, len - 1) {
                let start = tail.last().copied().unwrap_or(0);
                for i in start..dim {
                    let mut v = tail.clone();
                    v.push(i);
                    out.push(v);
                }
            }
            out
        }
    }
}

/// Every derivative index with holomorphic order ≤ `p` and antiholomorphic
/// order ≤ `q` in `dim` variables.
pub fn all_up_to(dim: usize, p: usize, q: usize) -> Vec<DerivIndex> {
    let mut out = Vec::new();
    for hp in 0..=p {
        for hq in 0..=q {
            for h in multisets(dim, hp) {
                for a in multisets(dim, hq) {
                    out.push(DerivIndex::new(h.clone(), a).expect("bounded order"));
                }
            }
        }
    }
    out
}
