//! Gauss–Hermite and Gauss–Legendre rules.
//!
//! Hermite rules use the probabilists' weight `exp(-z²/2)/√(2π)` and are
//! normalized so that `Σ wᵢ f(zᵢ) ≈ E[f(Z)]` for `Z ~ N(0,1)`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{ensure, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(order: usize) -> Result<Self> {
        ensure(order >= 1, "quad_order", order as f64, "must be at least 1")?;
        let (x, w) = physicists_hermite(order);
        let nodes = x.iter().map(|v| v * 2f64.sqrt()).collect();
        let weights = w.iter().map(|v| v / PI.sqrt()).collect();
        Ok(Self { nodes, weights })
    }

    /// Shared rule for `order`, built once per process.
    pub fn cached(order: usize) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussHermite>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        if let Some(rule) = guard.get(&order) {
            return Ok(rule.clone());
        }
        let rule = Arc::new(Self::new(order)?);
        guard.insert(order, rule.clone());
        Ok(rule)
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `E[f(Z)]` for a standard normal `Z`.
    pub fn expect(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| w * f(z))
            .sum()
    }
}

// Nodes from the Jacobi matrix eigenvalues, then Newton-polished on the
// orthonormal recurrence (weight e^{-x²}). The recurrence overflows at large
// orders, so it carries a log scale.
fn physicists_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let mut roots: Vec<f64> = SymmetricEigen::new(jacobi)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    roots.sort_by(|a, b| b.total_cmp(a));
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = roots[i];
        let mut eval = hermite_recurrence(n, z);
        for _ in 0..8 {
            let step = eval.0 / eval.1;
            z -= step;
            eval = hermite_recurrence(n, z);
            if step.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        let (_, pp, log_scale) = eval;
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 * (-2.0 * (pp.abs().ln() + log_scale)).exp();
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

// (p_n(z), p_n'(z), log scale) for the orthonormal Hermite polynomials.
fn hermite_recurrence(n: usize, z: f64) -> (f64, f64, f64) {
    const PIM4: f64 = 0.751_125_544_464_942_5; // π^{-1/4}
    let mut p1 = PIM4;
    let mut p2 = 0.0;
    let mut log_scale = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
        if p1.abs() > 1e150 {
            p1 *= 1e-150;
            p2 *= 1e-150;
            log_scale += 150.0 * std::f64::consts::LN_10;
        }
    }
    (p1, (2.0 * n as f64).sqrt() * p2, log_scale)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Rule on `[lo, hi]`.
    pub fn new(order: usize, lo: f64, hi: f64) -> Result<Self> {
        ensure(
            order >= 1,
            "t_quad_order",
            order as f64,
            "must be at least 1",
        )?;
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = (n + 1) / 2;
        let xm = 0.5 * (hi + lo);
        let xl = 0.5 * (hi - lo);
        for i in 0..m {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut pp;
            loop {
                let mut p1 = 1.0;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
                }
                pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 {
                    break;
                }
            }
            nodes[i] = xm - xl * z;
            nodes[n - 1 - i] = xm + xl * z;
            weights[i] = 2.0 * xl / ((1.0 - z * z) * pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        Ok(Self { nodes, weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_normal_moments() {
        for order in [2, 5, 20, 80, 120, 200, 256] {
            let rule = GaussHermite::new(order).unwrap();
            assert!((rule.expect(|_| 1.0) - 1.0).abs() < 1e-13, "order {order}");
            assert!(rule.expect(|z| z).abs() < 1e-13);
            assert!((rule.expect(|z| z * z) - 1.0).abs() < 1e-12);
            if order >= 3 {
                assert!((rule.expect(|z| z.powi(4)) - 3.0).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn hermite_integrates_cosine() {
        // E[cos Z] = e^{-1/2}
        let rule = GaussHermite::new(40).unwrap();
        assert!((rule.expect(f64::cos) - (-0.5f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn legendre_integrates_polynomials_and_log() {
        let rule = GaussLegendre::new(16, 0.0, 1.0).unwrap();
        assert!((rule.integrate(|t| t.powi(7)) - 0.125).abs() < 1e-14);
        let rule = GaussLegendre::new(32, 0.0, 2.0).unwrap();
        let exact = 3.0 * 3f64.ln() - 2.0; // ∫_0^2 ln(1+t) dt
        assert!((rule.integrate(|t| (1.0 + t).ln()) - exact).abs() < 1e-14);
    }
}
