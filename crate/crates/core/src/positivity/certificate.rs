use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Step of the dense cross-check grid over `s = |U| / |X|`.
pub const GRID_STEP: f64 = 1e-5;

/// `(H₀, C, λ*)` with `λ*` minimal such that the quartic lower bound is
/// nonnegative for every `(|X|, |U|)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub h0: f64,
    pub c: f64,
    /// Zero when `C = 0`: then every `λ > 0` is certified.
    pub lambda_star: f64,
    /// Positive root of `s³ − 2Cs − C/2`, where `2s⁴ − 8Cs² − 4Cs` is least.
    pub stationary_point: f64,
    /// `m = min_{s ≥ 0} (2s⁴ − 8Cs² − 4Cs)`.
    pub inner_min: f64,
    /// `λ*` recomputed from a dense grid over `s`.
    pub grid_lambda_star: f64,
}

impl Certificate {
    /// True when every positive `λ` passes (`C = 0`).
    pub fn any_positive_lambda(&self) -> bool {
        self.c == 0.0
    }
}

/// `q(x, u) = (λH₀ − C)x⁴ − 8Cx²u² + 2u⁴ − 4Cx³u`.
pub fn bound_quartic(lambda: f64, h0: f64, c: f64, x: f64, u: f64) -> f64 {
    (lambda * h0 - c) * x.powi(4) - 8.0 * c * x * x * u * u + 2.0 * u.powi(4) - 4.0 * c * x.powi(3) * u
}

/// `p(s) = q(1, s)`.
pub fn reduced_polynomial(lambda: f64, h0: f64, c: f64, s: f64) -> f64 {
    bound_quartic(lambda, h0, c, 1.0, s)
}

fn inner(c: f64, s: f64) -> f64 {
    2.0 * s.powi(4) - 8.0 * c * s * s - 4.0 * c * s
}

/// The single positive root of `s³ − 2Cs − C/2` for `C > 0` (one sign
/// change, so exactly one), by the trigonometric or Cardano formula and a
/// Newton polish.
fn positive_root(c: f64) -> f64 {
    let (p, q) = (-2.0 * c, -0.5 * c);
    let disc = -(4.0 * p.powi(3) + 27.0 * q * q);
    let mut s = if disc > 0.0 {
        let m = 2.0 * (-p / 3.0).sqrt();
        let theta = ((3.0 * q / (2.0 * p)) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0).acos() / 3.0;
        m * theta.cos()
    } else {
        let root = (q * q / 4.0 + p.powi(3) / 27.0).sqrt();
        (-q / 2.0 + root).cbrt() + (-q / 2.0 - root).cbrt()
    };
    for _ in 0..4 {
        let f = s.powi(3) - 2.0 * c * s - 0.5 * c;
        let df = 3.0 * s * s - 2.0 * c;
        if df.abs() > 0.0 {
            s -= f / df;
        }
    }
    s
}

/// Minimal sufficient `λ` from the base curvature floor `H₀` and the bundle
/// constant `C`, cross-checked on a dense grid.
pub fn certify_lambda(h0: f64, c: f64) -> Result<Certificate> {
    if !(h0 > 0.0) || !h0.is_finite() {
        return Err(Error::Invalid(format!("H₀ must be positive, got {h0}")));
    }
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::Invalid(format!("C must be nonnegative, got {c}")));
    }
    let s_star = if c > 0.0 { positive_root(c) } else { 0.0 };
    let inner_min = inner(c, s_star).min(0.0);
    let lambda_star = (c - inner_min) / h0;
    let upper = 10.0f64.max(2.0 * s_star);
    let steps = (upper / GRID_STEP).ceil() as usize;
    let grid_min = (0..=steps)
        .map(|k| inner(c, k as f64 * GRID_STEP))
        .fold(f64::INFINITY, f64::min);
    Ok(Certificate {
        h0,
        c,
        lambda_star,
        stationary_point: s_star,
        inner_min,
        grid_lambda_star: (c - grid_min) / h0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_c_certifies_everything() {
        let cert = certify_lambda(2.0, 0.0).unwrap();
        assert_eq!(cert.lambda_star, 0.0);
        assert!(cert.any_positive_lambda());
        assert!(reduced_polynomial(1e-9, 2.0, 0.0, 3.0) > 0.0);
    }

    #[test]
    fn root_solves_cubic_in_both_regimes() {
        // small C has a negative discriminant, large C three real roots
        for c in [1e-3, 0.05, 0.4, 1.0, 7.5, 300.0] {
            let s = positive_root(c);
            assert!(s > 0.0);
            assert!(
                (s.powi(3) - 2.0 * c * s - 0.5 * c).abs() < 1e-9 * (1.0 + c * s),
                "C={c}"
            );
        }
    }

    #[test]
    fn doubling_h0_halves_lambda() {
        let a = certify_lambda(2.0, 1.3).unwrap();
        let b = certify_lambda(4.0, 1.3).unwrap();
        assert!((a.lambda_star - 2.0 * b.lambda_star).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(certify_lambda(0.0, 1.0).is_err());
        assert!(certify_lambda(1.0, -1.0).is_err());
    }
}
