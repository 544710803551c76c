//! Averages over quenched disorder, by Monte Carlo or by tensor-product
//! Gauss–Hermite quadrature.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sample::{PooledSample, SymmetricMatrix};
use super::state::ConfigurationSpace;
use crate::error::{ensure, Error, Result};
use crate::prior::Prior;
use crate::quadrature::GaussHermite;
use crate::stats::{pairwise_sum, stderr};

/// Largest number of Gaussian coordinates integrated by quadrature.
pub const MAX_QUADRATURE_DIMS: usize = 5;
/// Largest number of (signal, node) points in a quadrature average.
pub const MAX_QUADRATURE_POINTS: u128 = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum DisorderMethod {
    MonteCarlo { samples: usize, seed: u64 },
    Quadrature { order: usize },
}

impl DisorderMethod {
    pub fn is_exact(&self) -> bool {
        matches!(self, DisorderMethod::Quadrature { .. })
    }
}

/// Per-sample rows of measured quantities, with quadrature weights when the
/// average is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct Averages {
    rows: Vec<Vec<f64>>,
    weights: Option<Vec<f64>>,
}

impl Averages {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        Self {
            rows,
            weights: None,
        }
    }

    pub fn from_weighted(rows: Vec<Vec<f64>>, weights: Vec<f64>) -> Self {
        debug_assert_eq!(rows.len(), weights.len());
        Self {
            rows,
            weights: Some(weights),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn is_exact(&self) -> bool {
        self.weights.is_some()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn values_of(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        self.rows.iter().map(|r| f(r)).collect()
    }

    pub fn mean_of(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        let v = self.values_of(f);
        match &self.weights {
            Some(w) => pairwise_sum(&v.iter().zip(w).map(|(a, b)| a * b).collect::<Vec<_>>()),
            None => crate::stats::mean(&v),
        }
    }

    /// Standard error of [`Averages::mean_of`]; zero for quadrature.
    pub fn stderr_of(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        match self.weights {
            Some(_) => 0.0,
            None => stderr(&self.values_of(f)),
        }
    }

    pub fn mean(&self, j: usize) -> f64 {
        self.mean_of(|r| r[j])
    }

    pub fn stderr(&self, j: usize) -> f64 {
        self.stderr_of(|r| r[j])
    }

    /// Disorder variance of a per-sample quantity (unbiased for Monte Carlo).
    pub fn variance_of(&self, f: impl Fn(&[f64]) -> f64 + Copy) -> f64 {
        match &self.weights {
            Some(_) => {
                let m = self.mean_of(f);
                self.mean_of(|r| (f(r) - m).powi(2))
            }
            None => crate::stats::variance(&self.values_of(f)),
        }
    }
}

/// Evaluates `f(index)` for every sample index in parallel; rows come back in
/// index order, so results do not depend on the thread count.
pub fn monte_carlo_rows<F>(samples: usize, f: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(u64) -> Result<Vec<f64>> + Sync,
{
    ensure(
        samples >= 2,
        "samples",
        samples as f64,
        "must be at least 2",
    )?;
    (0..samples as u64).into_par_iter().map(|i| f(i)).collect()
}

/// Which pooled noise coordinates the integrand depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseDims {
    pub pair: bool,
    pub field: bool,
}

impl NoiseDims {
    pub fn count(&self, n: usize) -> usize {
        (if self.pair { n * (n + 1) / 2 } else { 0 }) + (if self.field { n } else { 0 })
    }
}

/// Disorder average of `f` over pooled matrix-model samples. Unused noise
/// coordinates are set to zero in quadrature mode.
pub fn pooled_average<F>(
    method: &DisorderMethod,
    prior: &Prior,
    n: usize,
    dims: NoiseDims,
    f: F,
) -> Result<Averages>
where
    F: Fn(&PooledSample) -> Result<Vec<f64>> + Sync,
{
    match *method {
        DisorderMethod::MonteCarlo { samples, seed } => {
            let rows =
                monte_carlo_rows(samples, |i| f(&PooledSample::generate(prior, n, seed, i)?))?;
            Ok(Averages::from_rows(rows))
        }
        DisorderMethod::Quadrature { order } => {
            let d = dims.count(n);
            if d > MAX_QUADRATURE_DIMS {
                return Err(Error::QuadratureDimension {
                    dims: d,
                    max: MAX_QUADRATURE_DIMS,
                });
            }
            let rule = GaussHermite::cached(order)?;
            let signals = ConfigurationSpace::new(prior, n)?;
            let nodes_total = (order as u128).pow(d as u32);
            let points = nodes_total * signals.len() as u128;
            if points > MAX_QUADRATURE_POINTS {
                return Err(Error::QuadratureSize {
                    points,
                    limit: MAX_QUADRATURE_POINTS,
                });
            }
            let pair_len = if dims.pair { n * (n + 1) / 2 } else { 0 };
            let results: Vec<(Vec<f64>, f64)> = (0..points as usize)
                .into_par_iter()
                .map(|flat| {
                    let sig = flat / nodes_total as usize;
                    let mut rest = flat % nodes_total as usize;
                    let mut weight = signals.log_prior()[sig].exp();
                    let mut coords = vec![0.0; d];
                    for c in coords.iter_mut() {
                        let k = rest % order;
                        rest /= order;
                        *c = rule.nodes()[k];
                        weight *= rule.weights()[k];
                    }
                    let pair_noise = if dims.pair {
                        SymmetricMatrix::from_upper(n, coords[..pair_len].to_vec())?
                    } else {
                        SymmetricMatrix::zeros(n)
                    };
                    let field_noise = if dims.field {
                        coords[pair_len..].to_vec()
                    } else {
                        vec![0.0; n]
                    };
                    let sample = PooledSample {
                        signal: signals.config(sig).to_vec(),
                        pair_noise,
                        field_noise,
                    };
                    Ok((f(&sample)?, weight))
                })
                .collect::<Result<_>>()?;
            let (rows, weights) = results.into_iter().unzip();
            Ok(Averages::from_weighted(rows, weights))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_reproduces_gaussian_moments() {
        let prior = Prior::rademacher();
        let dims = NoiseDims {
            pair: true,
            field: true,
        };
        let avg = pooled_average(
            &DisorderMethod::Quadrature { order: 6 },
            &prior,
            1,
            dims,
            |s| {
                Ok(vec![
                    s.pair_noise.get(0, 0).powi(2),
                    s.field_noise[0].powi(4),
                    s.signal[0],
                ])
            },
        )
        .unwrap();
        assert!((avg.mean(0) - 1.0).abs() < 1e-13);
        assert!((avg.mean(1) - 3.0).abs() < 1e-12);
        assert!(avg.mean(2).abs() < 1e-15);
        assert_eq!(avg.stderr(0), 0.0);
    }

    #[test]
    fn dimension_limit() {
        let dims = NoiseDims {
            pair: true,
            field: true,
        };
        let r = pooled_average(
            &DisorderMethod::Quadrature { order: 4 },
            &Prior::rademacher(),
            3,
            dims,
            |_| Ok(vec![]),
        );
        assert!(matches!(r, Err(Error::QuadratureDimension { dims: 9, .. })));
    }

    #[test]
    fn monte_carlo_is_thread_count_independent() {
        let prior = Prior::discrete(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let method = DisorderMethod::MonteCarlo {
            samples: 200,
            seed: 3,
        };
        let dims = NoiseDims {
            pair: true,
            field: true,
        };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    pooled_average(&method, &prior, 3, dims, |s| {
                        Ok(vec![s.pair_noise.get(0, 1) * s.signal[2]])
                    })
                    .unwrap()
                    .mean(0)
                })
        };
        assert_eq!(run(1).to_bits(), run(4).to_bits());
    }
}
