//! Symbolic Wirtinger calculus on scalar expressions in `w_1..w_N` and their
//! conjugates.
//!
//! [`Expr`] is the user-facing immutable expression type. [`ExprPool`]
//! interns expressions into a hash-consed DAG, memoizes first-order
//! derivatives `∂/∂w_a` and `∂/∂w̄_a`, and compiles requested roots into a
//! [`Tape`] for fast repeated evaluation. Finite differences live in
//! [`fd`] and are only used as a test oracle.

mod expr;
pub mod fd;
mod jet;
mod parse;
mod pool;
mod tape;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::C64;

pub use expr::{Expr, Node};
pub use jet::{all_up_to, multisets, JetValues, Jets};
pub use parse::{parse_expr, ParseError, VarNames};
pub use pool::{ExprPool, NodeId};
pub use tape::Tape;

/// Highest number of holomorphic (and of antiholomorphic) derivatives in a
/// single [`DerivIndex`]; curvature needs mixed order (2,2).
pub const MAX_ORDER: usize = 2;

/// A single Wirtinger operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Wirt {
    /// `∂/∂w_i`
    Holo(usize),
    /// `∂/∂w̄_i`
    Anti(usize),
}

impl Wirt {
    pub fn flipped(self) -> Self {
        match self {
            Wirt::Holo(i) => Wirt::Anti(i),
            Wirt::Anti(i) => Wirt::Holo(i),
        }
    }

    pub fn index(self) -> usize {
        match self {
            Wirt::Holo(i) | Wirt::Anti(i) => i,
        }
    }
}

/// Mixed partial `∂^{|holo|} ∂̄^{|anti|}`; both multi-indices are kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DerivIndex {
    holo: Vec<usize>,
    anti: Vec<usize>,
}

impl DerivIndex {
    pub fn new(mut holo: Vec<usize>, mut anti: Vec<usize>) -> Result<Self, EvalError> {
        if holo.len() > MAX_ORDER || anti.len() > MAX_ORDER {
            return Err(EvalError::OrderTooHigh {
                holo: holo.len(),
                anti: anti.len(),
            });
        }
        holo.sort_unstable();
        anti.sort_unstable();
        Ok(Self { holo, anti })
    }

    pub fn holo(&self) -> &[usize] {
        &self.holo
    }

    pub fn anti(&self) -> &[usize] {
        &self.anti
    }

    pub fn order(&self) -> usize {
        self.holo.len() + self.anti.len()
    }

    /// One past the largest index used.
    pub fn dim(&self) -> usize {
        self.holo.iter().chain(&self.anti).map(|i| i + 1).max().unwrap_or(0)
    }

    /// Operators in canonical application order.
    pub fn ops(&self) -> impl Iterator<Item = Wirt> + '_ {
        self.holo
            .iter()
            .map(|&i| Wirt::Holo(i))
            .chain(self.anti.iter().map(|&i| Wirt::Anti(i)))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("logarithm of non-positive real or zero value {value} in `{subexpr}`")]
    LogDomain { value: C64, subexpr: String },
    #[error("negative power of zero in `{subexpr}`")]
    PoleAtZero { subexpr: String },
    #[error("point has {got} coordinates but the expression needs {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("derivative order ({holo},{anti}) exceeds the supported ({max},{max})", max = MAX_ORDER)]
    OrderTooHigh { holo: usize, anti: usize },
}

pub(crate) fn checked_ln(a: C64) -> Option<C64> {
    let nonpositive_real = a.re <= 0.0 && a.im.abs() <= 1e-14 * a.re.abs().max(1e-300);
    if a.norm() == 0.0 || nonpositive_real || !a.re.is_finite() || !a.im.is_finite() {
        None
    } else {
        Some(a.ln())
    }
}

pub(crate) fn checked_powi(b: C64, k: i32) -> Option<C64> {
    if k < 0 && b.norm() == 0.0 {
        None
    } else {
        Some(b.powi(k))
    }
}

/// Exact mixed Wirtinger partial of `e`.
pub fn differentiate(e: &Expr, d: &DerivIndex) -> Expr {
    let mut pool = ExprPool::new();
    let id = pool.import(e);
    let out = pool.derivative(id, d);
    pool.export(out)
}

pub fn evaluate(e: &Expr, point: &[C64]) -> Result<C64, EvalError> {
    e.eval(point)
}

pub use fd::finite_difference_oracle;

#[cfg(test)]
mod tests {
    use super::*;

    fn fs() -> Expr {
        (Expr::one() + Expr::abs_sq(0)).ln()
    }

    #[test]
    fn abs_sq_holomorphic_derivative() {
        let d = differentiate(&Expr::abs_sq(0), &DerivIndex::new(vec![0], vec![]).unwrap());
        assert_eq!(d.to_string(), "conj(w1)");
    }

    #[test]
    fn fubini_study_origin_derivatives() {
        let zero = [C64::new(0.0, 0.0)];
        let d11 = differentiate(&fs(), &DerivIndex::new(vec![0], vec![0]).unwrap());
        assert!((d11.eval(&zero).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-15);
        let d22 = differentiate(&fs(), &DerivIndex::new(vec![0, 0], vec![0, 0]).unwrap());
        assert!((d22.eval(&zero).unwrap() - C64::new(-2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn abs_fourth_power_mixed_22() {
        let e = Expr::abs_sq(0).powi(2);
        let d = differentiate(&e, &DerivIndex::new(vec![0, 0], vec![0, 0]).unwrap());
        let v = d.eval(&[C64::new(0.0, 0.0)]).unwrap();
        assert!((v - C64::new(4.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn order_bound_enforced() {
        assert!(matches!(
            DerivIndex::new(vec![0, 0, 0], vec![]),
            Err(EvalError::OrderTooHigh { .. })
        ));
    }

    #[test]
    fn log_domain_error_is_eval_time() {
        // differentiating log(|w|^2) succeeds; evaluating at 0 fails
        let e = Expr::abs_sq(0).ln();
        let d = differentiate(&e, &DerivIndex::new(vec![0], vec![]).unwrap());
        assert!(d.eval(&[C64::new(0.0, 0.0)]).is_err());
        assert!(d.eval(&[C64::new(0.5, 0.0)]).is_ok());
    }
}
