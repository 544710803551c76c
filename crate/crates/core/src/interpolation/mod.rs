//! The `(k, t)` interpolation path of the matrix model.
//!
//! Every pairwise and scalar channel is written in SNR form
//! `λ·(quadratic part) − √λ·(noise part)`, so a channel that is switched off
//! contributes an exact zero and the `(k, 1)` and `(k + 1, 0)` Hamiltonians
//! coincide bit for bit.

mod checks;
mod rle;

pub use checks::*;
pub use rle::*;

use std::sync::Arc;

use serde::Serialize;

use crate::error::{ensure, Error, Result};
use crate::gibbs::disorder::monte_carlo_rows;
use crate::gibbs::hamiltonian::{perturbation_energy, MatrixCouplings};
use crate::gibbs::sample::{PooledSample, QuenchedSample, SymmetricMatrix};
use crate::gibbs::state::{ConfigurationSpace, GibbsState};
use crate::gibbs::Estimate;
use crate::prior::Prior;
use crate::rs_potential::ModelSpec;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathConfig {
    pub n: usize,
    /// Number of interpolation steps `K`.
    pub steps: usize,
    pub epsilon: f64,
    pub delta: f64,
    /// Sorted values of `t` used by grid-based diagnostics.
    pub t_grid: Vec<f64>,
}

impl PathConfig {
    pub fn new(n: usize, steps: usize, epsilon: f64, delta: f64) -> Result<Self> {
        ensure(n >= 1, "n", n as f64, "must be at least 1")?;
        ensure(steps >= 1, "K", steps as f64, "must be at least 1")?;
        ensure(
            epsilon >= 0.0 && epsilon.is_finite(),
            "epsilon",
            epsilon,
            "must be finite and nonnegative",
        )?;
        ensure(
            delta > 0.0 && delta.is_finite(),
            "delta",
            delta,
            "must be positive and finite",
        )?;
        Ok(Self {
            n,
            steps,
            epsilon,
            delta,
            t_grid: vec![0.0, 0.5, 1.0],
        })
    }

    pub fn with_t_grid(mut self, t_grid: Vec<f64>) -> Result<Self> {
        ensure(!t_grid.is_empty(), "t_grid", 0.0, "must not be empty")?;
        for (i, &t) in t_grid.iter().enumerate() {
            ensure((0.0..=1.0).contains(&t), "t", t, "must lie in [0, 1]")?;
            if i > 0 {
                ensure(t >= t_grid[i - 1], "t", t, "t_grid must be sorted")?;
            }
        }
        self.t_grid = t_grid;
        Ok(self)
    }

    pub fn model(&self) -> ModelSpec {
        ModelSpec::Matrix { delta: self.delta }
    }

    fn k_delta(&self) -> f64 {
        self.steps as f64 * self.delta
    }
}

/// Trial parameters `m_1, …, m_K`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialParameters {
    values: Vec<f64>,
}

impl TrialParameters {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        ensure(
            !values.is_empty(),
            "K",
            0.0,
            "needs at least one trial parameter",
        )?;
        for &m in &values {
            ensure(
                m >= 0.0 && m.is_finite(),
                "m",
                m,
                "must be finite and nonnegative",
            )?;
        }
        Ok(Self { values })
    }

    pub fn constant(steps: usize, m: f64) -> Result<Self> {
        Self::new(vec![m; steps])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Rejects entries above the prior's second moment.
    pub fn check_against(&self, prior: &Prior) -> Result<()> {
        let m2 = prior.moment(2);
        for &m in &self.values {
            ensure(
                m <= m2 * (1.0 + 1e-12),
                "m",
                m,
                "exceeds the second moment of the prior",
            )?;
        }
        Ok(())
    }
}

/// A point `(k, t)` of the path with its side-channel strengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathPoint {
    /// Step index, `1..=K`.
    pub k: usize,
    pub t: f64,
    pub epsilon: f64,
    /// `ε̃ = ε + (Σ_{l<k} m_l + t m_k) / (KΔ)`.
    pub effective_epsilon: f64,
    /// Total SNR of the remaining pairwise channels, `(K − k + 1 − t)/(KΔ)`.
    pub pair_snr: f64,
    n: usize,
    steps: usize,
    k_delta: f64,
}

impl PathPoint {
    pub fn new(config: &PathConfig, m: &TrialParameters, k: usize, t: f64) -> Result<Self> {
        if m.len() != config.steps {
            return Err(Error::DimensionMismatch {
                expected: config.steps,
                found: m.len(),
            });
        }
        ensure(
            k >= 1 && k <= config.steps,
            "k",
            k as f64,
            "must lie in 1..=K",
        )?;
        ensure((0.0..=1.0).contains(&t), "t", t, "must lie in [0, 1]")?;
        let kd = config.k_delta();
        let before: f64 = m.values()[..k - 1].iter().sum();
        Ok(Self {
            k,
            t,
            epsilon: config.epsilon,
            effective_epsilon: config.epsilon + (before + t * m.values()[k - 1]) / kd,
            pair_snr: ((config.steps - k + 1) as f64 - t) / kd,
            n: config.n,
            steps: config.steps,
            k_delta: kd,
        })
    }

    /// Same `(k, t)` with the perturbation switched off.
    pub fn without_perturbation(&self) -> Self {
        Self {
            epsilon: 0.0,
            effective_epsilon: self.effective_epsilon - self.epsilon,
            ..*self
        }
    }

    /// Same `(k, t)` with `ε`, and therefore `ε̃`, moved by `shift`.
    pub fn with_epsilon_shift(&self, shift: f64) -> Result<Self> {
        let effective_epsilon = self.effective_epsilon + shift;
        ensure(
            effective_epsilon >= 0.0 && effective_epsilon.is_finite(),
            "epsilon shift",
            shift,
            "would make the effective side-channel SNR negative",
        )?;
        Ok(Self {
            epsilon: self.epsilon + shift,
            effective_epsilon,
            ..*self
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// SNR of the pairwise channel of block `b` (1-based).
    pub fn block_pair_snr(&self, b: usize) -> f64 {
        if b > self.k {
            1.0 / self.k_delta
        } else if b == self.k {
            (1.0 - self.t) / self.k_delta
        } else {
            0.0
        }
    }

    /// SNR of the scalar channel of block `b` (1-based).
    pub fn block_mf_snr(&self, m: &TrialParameters, b: usize) -> f64 {
        let mb = m.values()[b - 1];
        if b < self.k {
            mb / self.k_delta
        } else if b == self.k {
            self.t * mb / self.k_delta
        } else {
            0.0
        }
    }

    /// State of a pooled sample at this point.
    pub fn pooled_state(
        &self,
        sample: &PooledSample,
        space: &Arc<ConfigurationSpace>,
    ) -> Result<GibbsState> {
        MatrixCouplings::pooled(sample, self.pair_snr, self.effective_epsilon).gibbs(space)
    }
}

/// Pairwise channel `λ Σ_{i≤j}(x_i²x_j²/2n − x_ix_js_is_j/n) − √λ Σ_{i≤j} x_ix_jz_ij/√n`.
pub fn pair_channel(x: &[f64], s: &[f64], z: &SymmetricMatrix, snr: f64) -> f64 {
    let n = x.len() as f64;
    let root = snr.sqrt() / n.sqrt();
    let mut total = 0.0;
    for i in 0..x.len() {
        for j in i..x.len() {
            let xx = x[i] * x[j];
            total += snr * (xx * xx / (2.0 * n) - xx * s[i] * s[j] / n) - root * xx * z.get(i, j);
        }
    }
    total
}

/// Scalar channel `λ Σ(x_i²/2 − x_is_i) − √λ Σ x_i z̃_i`.
pub fn mean_field_channel(x: &[f64], s: &[f64], z: &[f64], snr: f64) -> f64 {
    let root = snr.sqrt();
    x.iter()
        .zip(s)
        .zip(z)
        .map(|((&xi, &si), &zi)| snr * (0.5 * xi * xi - xi * si) - root * xi * zi)
        .sum()
}

/// `H_{k,t;ε}(x)`, summed block by block in index order.
pub fn interp_hamiltonian(
    point: &PathPoint,
    m: &TrialParameters,
    x: &[f64],
    sample: &QuenchedSample,
) -> Result<f64> {
    let blocks = sample
        .matrix_blocks()
        .ok_or(Error::Unsupported("path needs a matrix sample"))?;
    if blocks.len() != point.steps || m.len() != point.steps {
        return Err(Error::DimensionMismatch {
            expected: point.steps,
            found: blocks.len().min(m.len()),
        });
    }
    if x.len() != sample.n() {
        return Err(Error::DimensionMismatch {
            expected: sample.n(),
            found: x.len(),
        });
    }
    let s = &sample.signal;
    let mut total = 0.0;
    for b in 1..=point.steps {
        let lp = point.block_pair_snr(b);
        if lp != 0.0 {
            total += pair_channel(x, s, &blocks[b - 1], lp);
        }
        let lm = point.block_mf_snr(m, b);
        if lm != 0.0 {
            total += mean_field_channel(x, s, &sample.mf_noise[b - 1], lm);
        }
    }
    Ok(total + perturbation_energy(x, s, &sample.perturb_noise, point.epsilon))
}

/// Compiled energy of `H_{k,t;ε}` for a blockwise sample.
pub fn compile_path(
    point: &PathPoint,
    m: &TrialParameters,
    sample: &QuenchedSample,
) -> Result<MatrixCouplings> {
    let blocks = sample
        .matrix_blocks()
        .ok_or(Error::Unsupported("path needs a matrix sample"))?;
    if blocks.len() != point.steps || m.len() != point.steps {
        return Err(Error::DimensionMismatch {
            expected: point.steps,
            found: blocks.len().min(m.len()),
        });
    }
    let n = sample.n();
    let root_n = (n as f64).sqrt();
    let mut coupling = SymmetricMatrix::zeros(n);
    let mut field = vec![0.0; n];
    let mut pair_snr = 0.0;
    for b in 1..=point.steps {
        let lp = point.block_pair_snr(b);
        if lp != 0.0 {
            pair_snr += lp;
            coupling.add_scaled(lp.sqrt() / root_n, &blocks[b - 1]);
        }
        let lm = point.block_mf_snr(m, b);
        if lm != 0.0 {
            for (f, z) in field.iter_mut().zip(&sample.mf_noise[b - 1]) {
                *f += lm.sqrt() * z;
            }
        }
    }
    let re = point.epsilon.sqrt();
    for (f, z) in field.iter_mut().zip(&sample.perturb_noise) {
        *f += re * z;
    }
    Ok(MatrixCouplings {
        signal: sample.signal.clone(),
        pair_snr,
        coupling,
        field_snr: point.effective_epsilon,
        field,
    })
}

/// `f_{k,t;ε}` by Monte Carlo over blockwise samples.
pub fn path_free_energy(
    config: &PathConfig,
    point: &PathPoint,
    m: &TrialParameters,
    prior: &Prior,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    let space = ConfigurationSpace::new(prior, config.n)?;
    let model = config.model();
    let rows = monte_carlo_rows(samples, |i| {
        let sample = QuenchedSample::generate(&model, prior, config.n, config.steps, seed, i)?;
        Ok(vec![compile_path(point, m, &sample)?
            .gibbs(&space)?
            .free_energy()])
    })?;
    let v: Vec<f64> = rows.into_iter().map(|r| r[0]).collect();
    Ok(Estimate {
        mean: crate::stats::mean(&v),
        stderr: crate::stats::stderr(&v),
    })
}
