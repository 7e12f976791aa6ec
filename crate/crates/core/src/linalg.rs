//! Dense Hermitian helpers on `nalgebra` matrices.
//!
//! Matrices `M` here always mean `M[a][b] = G_{a b̄}`, so the norm of a
//! vector is `Σ G_{ab̄} v_a v̄_b = vᵀ M v̄`.

use nalgebra::DMatrix;

use crate::{Error, Result, C64};

/// Eigenvalue floor below which a Hermitian form is treated as degenerate.
pub const PD_FLOOR: f64 = 1e-12;

pub type CMatrix = DMatrix<C64>;

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    // symmetrize to absorb rounding in the lower triangle
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m)[0]
}

/// `P` with `Pᵀ M P̄ = I`; column `a` of `P` holds the components of the
/// `a`-th unitary frame vector.
pub fn unitary_frame(m: &CMatrix) -> Result<CMatrix> {
    let lambda_min = min_eigenvalue(m);
    if lambda_min < PD_FLOOR {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: lambda_min,
        });
    }
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let chol = sym.cholesky().ok_or(Error::NotPositiveDefinite {
        min_eigenvalue: lambda_min,
    })?;
    let l_inv = chol.l().try_inverse().ok_or(Error::NotPositiveDefinite {
        min_eigenvalue: lambda_min,
    })?;
    Ok(l_inv.transpose())
}

/// Inverse of a positive-definite Hermitian matrix; fails loudly when the
/// smallest eigenvalue drops below [`PD_FLOOR`].
pub fn inverse_pd(m: &CMatrix) -> Result<CMatrix> {
    let lambda_min = min_eigenvalue(m);
    if lambda_min < PD_FLOOR {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: lambda_min,
        });
    }
    m.clone().try_inverse().ok_or(Error::NotPositiveDefinite {
        min_eigenvalue: lambda_min,
    })
}

/// `vᵀ M v̄`.
pub fn form_norm_sq(m: &CMatrix, v: &[C64]) -> f64 {
    let n = v.len();
    let mut acc = C64::new(0.0, 0.0);
    for a in 0..n {
        for b in 0..n {
            acc += m[(a, b)] * v[a] * v[b].conj();
        }
    }
    acc.re
}
