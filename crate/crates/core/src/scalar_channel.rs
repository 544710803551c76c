//! The scalar Gaussian denoising channel `y = s + z̃Σ`.
//!
//! Everything is evaluated in terms of the signal-to-noise ratio `Σ⁻²` so that
//! `Σ = ∞` is the exact value `snr = 0` rather than a large float.

use crate::error::{ensure, Error, Result};
use crate::prior::Prior;
use crate::quadrature::GaussHermite;
use crate::stats::log_sum_exp;

pub const DEFAULT_QUAD_ORDER: usize = 80;

/// Noise standard deviation `Σ` of a scalar channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseLevel {
    Finite(f64),
    Infinite,
}

impl NoiseLevel {
    pub fn from_snr(snr: f64) -> Self {
        if snr == 0.0 {
            NoiseLevel::Infinite
        } else {
            NoiseLevel::Finite(snr.sqrt().recip())
        }
    }

    /// `Σ⁻²`, exactly zero for `Σ = ∞`.
    pub fn snr(&self) -> f64 {
        match *self {
            NoiseLevel::Finite(sigma) => (sigma * sigma).recip(),
            NoiseLevel::Infinite => 0.0,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, NoiseLevel::Infinite)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScalarChannel<'a> {
    prior: &'a Prior,
    sigma: NoiseLevel,
}

impl<'a> ScalarChannel<'a> {
    pub fn new(prior: &'a Prior, sigma: NoiseLevel) -> Result<Self> {
        if let NoiseLevel::Finite(s) = sigma {
            ensure(s > 0.0 && s.is_finite(), "sigma", s, "must be positive")?;
        }
        Ok(Self { prior, sigma })
    }

    pub fn with_snr(prior: &'a Prior, snr: f64) -> Result<Self> {
        ensure(
            snr >= 0.0 && snr.is_finite(),
            "snr",
            snr,
            "must be finite and nonnegative",
        )?;
        Ok(Self {
            prior,
            sigma: NoiseLevel::from_snr(snr),
        })
    }

    pub fn sigma(&self) -> NoiseLevel {
        self.sigma
    }

    /// Free energy `f_den(Σ)`.
    pub fn f_den(&self, quad_order: usize) -> Result<f64> {
        ensure(
            quad_order >= 2,
            "quad_order",
            quad_order as f64,
            "must be at least 2",
        )?;
        f_den_at(
            self.prior,
            self.sigma.snr(),
            &*GaussHermite::cached(quad_order)?,
        )
    }

    /// Mutual information `i_den(Σ) = I(S; S + Z̃Σ)`.
    pub fn i_den(&self, quad_order: usize) -> Result<f64> {
        ensure(
            quad_order >= 2,
            "quad_order",
            quad_order as f64,
            "must be at least 2",
        )?;
        i_den_at(
            self.prior,
            self.sigma.snr(),
            &*GaussHermite::cached(quad_order)?,
        )
    }

    /// Posterior mean `E[X | y]`. For `Σ = ∞` this is the prior mean.
    pub fn posterior_mean(&self, y: f64) -> f64 {
        let snr = self.sigma.snr();
        let logits: Vec<f64> = self
            .prior
            .atoms()
            .iter()
            .zip(self.prior.log_weights())
            .map(|(&a, &lw)| lw - snr * (0.5 * a * a - a * y))
            .collect();
        let norm = log_sum_exp(&logits);
        self.prior
            .atoms()
            .iter()
            .zip(&logits)
            .map(|(&a, &l)| a * (l - norm).exp())
            .sum()
    }
}

pub(crate) fn f_den_at(prior: &Prior, snr: f64, rule: &GaussHermite) -> Result<f64> {
    if snr == 0.0 {
        return Ok(0.0);
    }
    let root = snr.sqrt();
    let mut logits = vec![0.0; prior.len()];
    let mut total = 0.0;
    for (&s, &ps) in prior.atoms().iter().zip(prior.weights()) {
        if ps == 0.0 {
            continue;
        }
        let inner = rule.expect(|z| {
            for ((l, &a), &lw) in logits
                .iter_mut()
                .zip(prior.atoms())
                .zip(prior.log_weights())
            {
                *l = lw - snr * 0.5 * a * a + snr * a * s + root * a * z;
            }
            log_sum_exp(&logits)
        });
        total += ps * inner;
    }
    if !total.is_finite() {
        return Err(Error::QuadratureOverflow);
    }
    Ok(-total)
}

pub(crate) fn i_den_at(prior: &Prior, snr: f64, rule: &GaussHermite) -> Result<f64> {
    if snr == 0.0 {
        return Ok(0.0);
    }
    let root = snr.sqrt();
    let mut logits = vec![0.0; prior.len()];
    let mut total = 0.0;
    for (&s, &ps) in prior.atoms().iter().zip(prior.weights()) {
        if ps == 0.0 {
            continue;
        }
        let inner = rule.expect(|z| {
            for ((l, &a), &lw) in logits
                .iter_mut()
                .zip(prior.atoms())
                .zip(prior.log_weights())
            {
                let d = a - s;
                *l = lw - snr * 0.5 * d * d + root * d * z;
            }
            log_sum_exp(&logits)
        });
        total += ps * inner;
    }
    if !total.is_finite() {
        return Err(Error::QuadratureOverflow);
    }
    Ok(-total)
}

/// Default central-difference step for derivatives in `Σ⁻²`.
pub fn default_snr_step(snr: f64) -> f64 {
    1e-5 * snr.max(1.0)
}

/// `∂f_den/∂(Σ⁻²)` at `Σ⁻² = snr`, by finite differences. Falls back to a
/// second-order one-sided stencil when `snr - step < 0`.
pub fn fden_snr_derivative(
    prior: &Prior,
    snr: f64,
    quad_order: usize,
    step: Option<f64>,
) -> Result<f64> {
    snr_derivative(prior, snr, quad_order, step, f_den_at)
}

/// `∂i_den/∂(Σ⁻²)`; equals half the scalar-channel MMSE.
pub fn iden_snr_derivative(
    prior: &Prior,
    snr: f64,
    quad_order: usize,
    step: Option<f64>,
) -> Result<f64> {
    snr_derivative(prior, snr, quad_order, step, i_den_at)
}

fn snr_derivative(
    prior: &Prior,
    snr: f64,
    quad_order: usize,
    step: Option<f64>,
    f: fn(&Prior, f64, &GaussHermite) -> Result<f64>,
) -> Result<f64> {
    ensure(
        snr >= 0.0 && snr.is_finite(),
        "snr",
        snr,
        "must be finite and nonnegative",
    )?;
    let h = step.unwrap_or_else(|| default_snr_step(snr));
    ensure(h > 0.0, "step", h, "must be positive")?;
    let rule = GaussHermite::cached(quad_order)?;
    if snr - h < 0.0 {
        let f0 = f(prior, snr, &rule)?;
        let f1 = f(prior, snr + h, &rule)?;
        let f2 = f(prior, snr + 2.0 * h, &rule)?;
        return Ok((-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h));
    }
    let up = f(prior, snr + h, &rule)?;
    let down = f(prior, snr - h, &rule)?;
    Ok((up - down) / (2.0 * h))
}
