//! Central-difference estimates of Wirtinger partials.
//!
//! `∂/∂w = (∂_x − i∂_y)/2` and `∂/∂w̄ = (∂_x + i∂_y)/2`, each realized by a
//! symmetric difference in the real and imaginary directions. Nesting `k`
//! operators costs `4^k` evaluations and amplifies rounding by roughly
//! `step^-k`, so fourth-order estimates need larger steps than second-order
//! ones.

use crate::C64;

use super::{DerivIndex, EvalError, Expr, Wirt};

fn nested(e: &Expr, ops: &[Wirt], point: &mut Vec<C64>, step: f64) -> Result<C64, EvalError> {
    let Some((&op, rest)) = ops.split_first() else {
        return e.eval(point);
    };
    let k = op.index();
    let base = point[k];
    let probe = |delta: C64, point: &mut Vec<C64>| -> Result<C64, EvalError> {
        point[k] = base + delta;
        let plus = nested(e, rest, point, step)?;
        point[k] = base - delta;
        let minus = nested(e, rest, point, step)?;
        point[k] = base;
        Ok((plus - minus) / (2.0 * step))
    };
    let dx = probe(C64::new(step, 0.0), point)?;
    let dy = probe(C64::new(0.0, step), point)?;
    let i = C64::new(0.0, 1.0);
    Ok(match op {
        Wirt::Holo(_) => (dx - i * dy) * 0.5,
        Wirt::Anti(_) => (dx + i * dy) * 0.5,
    })
}

/// Plain nested central difference; error is `O(step²)`.
pub fn finite_difference_oracle(e: &Expr, d: &DerivIndex, point: &[C64], step: f64) -> Result<C64, EvalError> {
    assert!(step > 0.0, "step must be positive");
    let ops: Vec<Wirt> = d.ops().collect();
    let mut p = point.to_vec();
    let need = e.dim().max(d.dim());
    if p.len() < need {
        return Err(EvalError::Dimension {
            expected: need,
            got: p.len(),
        });
    }
    nested(e, &ops, &mut p, step)
}

/// Richardson-refined central difference. Each level cancels the next even
/// power of the step: `levels = 1` gives `O(step⁴)`.
pub fn richardson(e: &Expr, d: &DerivIndex, point: &[C64], step: f64, levels: usize) -> Result<C64, EvalError> {
    let mut table: Vec<C64> = (0..=levels)
        .map(|j| finite_difference_oracle(e, d, point, step / f64::from(1u32 << j)))
        .collect::<Result<_, _>>()?;
    let mut factor = 4.0;
    for _ in 0..levels {
        table = table
            .windows(2)
            .map(|w| (w[1] * factor - w[0]) / (factor - 1.0))
            .collect();
        factor *= 4.0;
    }
    Ok(table[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact_for_any_step() {
        // 3 w1 conj(w2) + w1^2 + 2 conj(w1)
        let e = Expr::sum([
            Expr::var(0) * Expr::conj_var(1) * 3.0,
            Expr::var(0).powi(2),
            Expr::conj_var(0) * 2.0,
        ]);
        let p = [C64::new(0.4, -0.3), C64::new(-1.1, 0.2)];
        for step in [1e-1, 0.5, 2.0] {
            let d = DerivIndex::new(vec![0], vec![1]).unwrap();
            let v = finite_difference_oracle(&e, &d, &p, step).unwrap();
            assert!((v - C64::new(3.0, 0.0)).norm() < 1e-12, "step {step}: {v}");
            let d = DerivIndex::new(vec![0, 0], vec![]).unwrap();
            let v = finite_difference_oracle(&e, &d, &p, step).unwrap();
            assert!((v - C64::new(2.0, 0.0)).norm() < 1e-11, "step {step}: {v}");
        }
    }

    #[test]
    fn fourth_order_of_abs_fourth_power() {
        let e = Expr::abs_sq(0).powi(2);
        let d = DerivIndex::new(vec![0, 0], vec![0, 0]).unwrap();
        let v = finite_difference_oracle(&e, &d, &[C64::new(0.0, 0.0)], 1e-2).unwrap();
        assert!((v - C64::new(4.0, 0.0)).norm() < 1e-6, "{v}");
    }

    #[test]
    fn fubini_study_fourth_order_at_origin() {
        // (1+x)^-2 = 1 - 2x + ..., x = |w|^2: d d̄ of (1+|w|^2)^-2 at 0 is -2
        let e = (Expr::one() + Expr::abs_sq(0)).ln();
        let d = DerivIndex::new(vec![0, 0], vec![0, 0]).unwrap();
        let v = richardson(&e, &d, &[C64::new(0.0, 0.0)], 2e-2, 2).unwrap();
        assert!((v - C64::new(-2.0, 0.0)).norm() < 1e-6, "{v}");
    }

    #[test]
    fn richardson_raises_order() {
        // The second-derivative error of log(1+|w|^2) at 0.3+0.1i should drop
        // from ~h^2 to ~h^4 after one refinement level.
        let e = (Expr::one() + Expr::abs_sq(0)).ln();
        let d = DerivIndex::new(vec![0], vec![0]).unwrap();
        let p = [C64::new(0.3, 0.1)];
        let exact = 1.0 / (1.0 + p[0].norm_sqr()).powi(2);
        let plain = |h| (finite_difference_oracle(&e, &d, &p, h).unwrap().re - exact).abs();
        let rich = |h| (richardson(&e, &d, &p, h, 1).unwrap().re - exact).abs();
        let ratio_plain = plain(4e-2) / plain(2e-2);
        let ratio_rich = rich(8e-2) / rich(4e-2);
        assert!((ratio_plain - 4.0).abs() < 0.5, "plain ratio {ratio_plain}");
        assert!(ratio_rich > 10.0, "richardson ratio {ratio_rich}");
        assert!(rich(1e-3) < 1e-9);
    }
}
