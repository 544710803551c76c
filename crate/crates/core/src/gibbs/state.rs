//! Exact posterior over all configurations in `support^n`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::prior::Prior;
use crate::stats::log_sum_exp;

pub const DEFAULT_ENUMERATION_CAP: usize = 2_000_000;

/// Every point of `support^n` with its prior log-weight. Zero-weight atoms are
/// dropped since they never carry posterior mass.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigurationSpace {
    n: usize,
    configs: Vec<f64>,
    log_prior: Vec<f64>,
}

impl ConfigurationSpace {
    pub fn new(prior: &Prior, n: usize) -> Result<Arc<Self>> {
        Self::with_cap(prior, n, DEFAULT_ENUMERATION_CAP)
    }

    pub fn with_cap(prior: &Prior, n: usize, cap: usize) -> Result<Arc<Self>> {
        let support: Vec<(f64, f64)> = prior
            .atoms()
            .iter()
            .zip(prior.log_weights())
            .filter(|(_, lw)| lw.is_finite())
            .map(|(&a, &lw)| (a, lw))
            .collect();
        let b = support.len();
        let count = (b as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        if count > cap as u128 {
            return Err(Error::EnumerationCap {
                configurations: count,
                cap,
            });
        }
        let count = count as usize;
        let mut configs = Vec::with_capacity(count * n);
        let mut log_prior = Vec::with_capacity(count);
        let mut digits = vec![0usize; n];
        for _ in 0..count {
            let mut lp = 0.0;
            for &d in &digits {
                configs.push(support[d].0);
                lp += support[d].1;
            }
            log_prior.push(lp);
            for d in digits.iter_mut().rev() {
                *d += 1;
                if *d < b {
                    break;
                }
                *d = 0;
            }
        }
        Ok(Arc::new(Self {
            n,
            configs,
            log_prior,
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.log_prior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_prior.is_empty()
    }

    pub fn config(&self, c: usize) -> &[f64] {
        &self.configs[c * self.n..(c + 1) * self.n]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.configs.chunks_exact(self.n.max(1))
    }

    pub fn log_prior(&self) -> &[f64] {
        &self.log_prior
    }
}

/// Normalized Gibbs measure `∝ P₀(x) e^{−H(x)}` on a configuration space.
#[derive(Debug, Clone)]
pub struct GibbsState {
    space: Arc<ConfigurationSpace>,
    probabilities: Vec<f64>,
    log_z: f64,
}

impl GibbsState {
    /// `energies[c]` is the Hamiltonian of configuration `c`.
    pub fn from_energies(space: Arc<ConfigurationSpace>, energies: &[f64]) -> Result<Self> {
        if energies.len() != space.len() {
            return Err(Error::DimensionMismatch {
                expected: space.len(),
                found: energies.len(),
            });
        }
        let logits: Vec<f64> = space
            .log_prior()
            .iter()
            .zip(energies)
            .map(|(lp, e)| lp - e)
            .collect();
        let log_z = log_sum_exp(&logits);
        if !log_z.is_finite() {
            return Err(Error::InvalidParameter {
                name: "log_z",
                value: log_z,
                reason: "partition function is not finite",
            });
        }
        let probabilities = logits.iter().map(|l| (l - log_z).exp()).collect();
        Ok(Self {
            space,
            probabilities,
            log_z,
        })
    }

    pub fn space(&self) -> &ConfigurationSpace {
        &self.space
    }

    pub fn n(&self) -> usize {
        self.space.n()
    }

    /// `ln Z` with `Z = Σ_x P₀(x) e^{−H(x)}`.
    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    /// `−ln Z / n`.
    pub fn free_energy(&self) -> f64 {
        -self.log_z / self.n() as f64
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn log_weights(&self) -> Vec<f64> {
        self.probabilities.iter().map(|p| p.ln()).collect()
    }

    pub fn expect(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.space
            .iter()
            .zip(&self.probabilities)
            .map(|(x, &p)| if p == 0.0 { 0.0 } else { p * f(x) })
            .sum()
    }

    /// Two independent replicas, by brute force over all pairs.
    pub fn expect2(&self, f: impl Fn(&[f64], &[f64]) -> f64) -> f64 {
        let mut total = 0.0;
        for (x, &px) in self.space.iter().zip(&self.probabilities) {
            if px == 0.0 {
                continue;
            }
            let inner: f64 = self
                .space
                .iter()
                .zip(&self.probabilities)
                .map(|(y, &py)| if py == 0.0 { 0.0 } else { py * f(x, y) })
                .sum();
            total += px * inner;
        }
        total
    }

    /// `⟨X_i⟩` for every `i`.
    pub fn mean_vector(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; n];
        for (x, &p) in self.space.iter().zip(&self.probabilities) {
            for (o, xi) in out.iter_mut().zip(x) {
                *o += p * xi;
            }
        }
        out
    }

    /// `⟨X_i X_j⟩`, row-major `n × n`.
    pub fn second_moments(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; n * n];
        for (x, &p) in self.space.iter().zip(&self.probabilities) {
            for i in 0..n {
                let pxi = p * x[i];
                for j in 0..n {
                    out[i * n + j] += pxi * x[j];
                }
            }
        }
        out
    }
}

/// `q_{x,s} = n⁻¹ Σ x_i s_i`.
pub fn overlap(x: &[f64], s: &[f64]) -> Result<f64> {
    if x.len() != s.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: s.len(),
        });
    }
    Ok(overlap_unchecked(x, s))
}

pub(crate) fn overlap_unchecked(x: &[f64], s: &[f64]) -> f64 {
    x.iter().zip(s).map(|(a, b)| a * b).sum::<f64>() / x.len() as f64
}
