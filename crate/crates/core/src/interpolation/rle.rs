//! Closed-form pieces of the RLE interpolation: the `γ/λ` schedule and the
//! integral representation of `ψ`.

use serde::Serialize;

use crate::error::{ensure, Result};
use crate::quadrature::GaussLegendre;
use crate::rs_potential::psi;

/// `γ(t) = (1 − t)/Δ` and `λ(t) = α/(Δ + E) − α/(γ⁻¹ + E)`, where the
/// second term is taken as 0 at `γ = 0`.
pub fn rle_gamma_lambda(t: f64, e: f64, alpha: f64, delta: f64) -> Result<(f64, f64)> {
    ensure((0.0..=1.0).contains(&t), "t", t, "must lie in [0, 1]")?;
    ensure(
        e >= 0.0 && e.is_finite(),
        "E",
        e,
        "must be finite and nonnegative",
    )?;
    ensure(
        alpha > 0.0 && alpha.is_finite(),
        "alpha",
        alpha,
        "must be positive",
    )?;
    ensure(
        delta > 0.0 && delta.is_finite(),
        "delta",
        delta,
        "must be positive",
    )?;
    let gamma = (1.0 - t) / delta;
    let target = alpha / (delta + e);
    // α/(γ⁻¹ + E) = αγ/(1 + γE), finite at γ = 0.
    let lambda = if t == 0.0 {
        0.0
    } else {
        target - alpha * gamma / (1.0 + gamma * e)
    };
    Ok((gamma, lambda))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsiIdentity {
    pub psi: f64,
    pub integral: f64,
    pub residual: f64,
}

/// `ψ(E)` against `(α/2)∫₀¹ γ′(E/(1+γE)² − E/(1+γE)) dt` with `γ = (1−t)/Δ`.
pub fn psi_integral_identity(
    e: f64,
    alpha: f64,
    delta: f64,
    t_quad_order: usize,
) -> Result<PsiIdentity> {
    let _ = rle_gamma_lambda(0.0, e, alpha, delta)?;
    let rule = GaussLegendre::new(t_quad_order, 0.0, 1.0)?;
    let d_gamma = -1.0 / delta;
    let integral = 0.5
        * alpha
        * rule.integrate(|t| {
            let g = (1.0 - t) / delta;
            let u = 1.0 + g * e;
            d_gamma * (e / (u * u) - e / u)
        });
    let value = psi(alpha, delta, e);
    Ok(PsiIdentity {
        psi: value,
        integral,
        residual: integral - value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn schedule_endpoints() {
        assert_eq!(rle_gamma_lambda(0.0, 0.7, 1.3, 0.4).unwrap(), (2.5, 0.0));
        let (g, l) = rle_gamma_lambda(1.0, 0.7, 1.3, 0.4).unwrap();
        assert_eq!(g, 0.0);
        assert_eq!(l, 1.3 / 1.1);
        let (g, l) = rle_gamma_lambda(0.5, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(g, 0.5);
        assert!((l - 1.0 / 6.0).abs() < 1e-15);
    }

    // Antiderivative of the integrand in u = γ: −1/(1+uE) − ln(1+uE).
    fn antiderivative_oracle(e: f64, alpha: f64, delta: f64) -> f64 {
        let g = |u: f64| -1.0 / (1.0 + u * e) - (1.0 + u * e).ln();
        0.5 * alpha * (g(0.0) - g(1.0 / delta))
    }

    #[test]
    fn psi_identity_examples() {
        let r = psi_integral_identity(0.0, 1.0, 1.0, 32).unwrap();
        assert_eq!(r.psi, 0.0);
        assert_eq!(r.integral, 0.0);
        let r = psi_integral_identity(1.0, 1.0, 1.0, 32).unwrap();
        let closed = (2f64.ln() - 0.5) / 2.0;
        assert!(
            (r.psi - closed).abs() < 1e-14 && r.residual.abs() < 1e-10,
            "{r:?}"
        );
        assert!((antiderivative_oracle(1.0, 1.0, 1.0) - closed).abs() < 1e-14);
        let r = psi_integral_identity(3.0, 2.0, 0.5, 32).unwrap();
        assert!(r.residual.abs() < 1e-10);
        assert!((r.psi - antiderivative_oracle(3.0, 2.0, 0.5)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn lambda_stays_between_endpoints(t in 0.0f64..1.0, e in 0.0f64..5.0, alpha in 0.1f64..3.0, delta in 0.1f64..3.0) {
            let (g, l) = rle_gamma_lambda(t, e, alpha, delta).unwrap();
            prop_assert!(g >= 0.0 && g <= 1.0 / delta);
            prop_assert!(l >= -1e-15 && l <= alpha / (delta + e) + 1e-15);
        }

        #[test]
        fn psi_identity_on_moderate_ranges(e in 0.0f64..3.0, alpha in 0.1f64..3.0, delta in 0.2f64..3.0) {
            let r = psi_integral_identity(e, alpha, delta, 32).unwrap();
            prop_assert!(r.residual.abs() < 1e-10);
        }
    }
}
