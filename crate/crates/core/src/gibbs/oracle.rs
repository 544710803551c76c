//! Disorder-averaged quantities computed from exact posteriors.

use serde::{Deserialize, Serialize};

use super::disorder::{monte_carlo_rows, pooled_average, Averages, DisorderMethod, NoiseDims};
use super::hamiltonian::{enumerate_gibbs, MatrixCouplings};
use super::sample::QuenchedSample;
use super::state::{ConfigurationSpace, GibbsState};
use crate::error::{ensure, Error, Result};
use crate::prior::Prior;
use crate::rs_potential::ModelSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Per-sample free energies `−ln Z / n` of the original model.
pub fn free_energy_samples(
    model: &ModelSpec,
    prior: &Prior,
    n: usize,
    epsilon: f64,
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let model = model.validated()?;
    ensure(
        epsilon >= 0.0 && epsilon.is_finite(),
        "epsilon",
        epsilon,
        "must be finite and nonnegative",
    )?;
    let space = ConfigurationSpace::new(prior, n)?;
    let rows = monte_carlo_rows(samples, |i| {
        let sample = QuenchedSample::generate(&model, prior, n, 1, seed, i)?;
        Ok(vec![
            enumerate_gibbs(&model, &space, &sample, epsilon)?.free_energy()
        ])
    })?;
    Ok(rows.into_iter().map(|r| r[0]).collect())
}

pub fn free_energy_mc(
    model: &ModelSpec,
    prior: &Prior,
    n: usize,
    epsilon: f64,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    let v = free_energy_samples(model, prior, n, epsilon, samples, seed)?;
    Ok(Estimate {
        mean: crate::stats::mean(&v),
        stderr: crate::stats::stderr(&v),
    })
}

/// Free energy by either disorder method. Quadrature is available for the
/// matrix model only.
pub fn free_energy(
    model: &ModelSpec,
    prior: &Prior,
    n: usize,
    epsilon: f64,
    method: &DisorderMethod,
) -> Result<Estimate> {
    match *method {
        DisorderMethod::MonteCarlo { samples, seed } => {
            free_energy_mc(model, prior, n, epsilon, samples, seed)
        }
        DisorderMethod::Quadrature { .. } => {
            let ModelSpec::Matrix { delta } = model.validated()? else {
                return Err(Error::Unsupported(
                    "quadrature over disorder is implemented for the matrix model only",
                ));
            };
            let space = ConfigurationSpace::new(prior, n)?;
            let dims = NoiseDims {
                pair: true,
                field: epsilon > 0.0,
            };
            let avg = pooled_average(method, prior, n, dims, |s| {
                Ok(vec![MatrixCouplings::pooled(s, 1.0 / delta, epsilon)
                    .gibbs(&space)?
                    .free_energy()])
            })?;
            Ok(Estimate {
                mean: avg.mean(0),
                stderr: 0.0,
            })
        }
    }
}

/// Test functions for the Bayes (Nishimori) identity `E⟨g(X,S)⟩ = E⟨g(X,X′)⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    One,
    /// `g(x, y) = q_{x,y}`
    Overlap,
    /// `g(x, y) = q_{x,y}²`
    OverlapSquared,
    /// `g(x, y) = y₁⁴`, so that the identity reads `E[S₁⁴] = E⟨X₁⁴⟩`.
    FirstSiteFourth,
}

impl Observable {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "one" | "1" => Some(Self::One),
            "q" | "overlap" => Some(Self::Overlap),
            "q2" | "q^2" | "overlap-squared" => Some(Self::OverlapSquared),
            "x1^4" | "x14" | "fourth" => Some(Self::FirstSiteFourth),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::One => "one",
            Self::Overlap => "q",
            Self::OverlapSquared => "q2",
            Self::FirstSiteFourth => "x1^4",
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Self::One => 1.0,
            Self::Overlap => super::state::overlap_unchecked(x, y),
            Self::OverlapSquared => super::state::overlap_unchecked(x, y).powi(2),
            Self::FirstSiteFourth => y[0].powi(4),
        }
    }

    /// `(⟨g(X, s)⟩, ⟨g(X, X′)⟩)` for one disorder sample, using one- and
    /// two-point marginals instead of the double configuration sum.
    pub fn pair(&self, state: &GibbsState, signal: &[f64]) -> (f64, f64) {
        let n = state.n() as f64;
        match self {
            Self::One => (1.0, 1.0),
            Self::Overlap => {
                let m = state.mean_vector();
                let lhs = m.iter().zip(signal).map(|(a, b)| a * b).sum::<f64>() / n;
                let rhs = m.iter().map(|a| a * a).sum::<f64>() / n;
                (lhs, rhs)
            }
            Self::OverlapSquared => {
                let mm = state.second_moments();
                let k = signal.len();
                let mut lhs = 0.0;
                for i in 0..k {
                    for j in 0..k {
                        lhs += mm[i * k + j] * signal[i] * signal[j];
                    }
                }
                let rhs = mm.iter().map(|v| v * v).sum::<f64>();
                (lhs / (n * n), rhs / (n * n))
            }
            Self::FirstSiteFourth => (signal[0].powi(4), state.expect(|x| x[0].powi(4))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NishimoriReport {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub stderr: f64,
}

pub fn nishimori_residual(
    model: &ModelSpec,
    prior: &Prior,
    n: usize,
    epsilon: f64,
    g: Observable,
    method: &DisorderMethod,
) -> Result<NishimoriReport> {
    let model = model.validated()?;
    ensure(
        epsilon >= 0.0 && epsilon.is_finite(),
        "epsilon",
        epsilon,
        "must be finite and nonnegative",
    )?;
    let space = ConfigurationSpace::new(prior, n)?;
    let avg: Averages = match *method {
        DisorderMethod::MonteCarlo { samples, seed } => {
            Averages::from_rows(monte_carlo_rows(samples, |i| {
                let sample = QuenchedSample::generate(&model, prior, n, 1, seed, i)?;
                let state = enumerate_gibbs(&model, &space, &sample, epsilon)?;
                let (l, r) = g.pair(&state, &sample.signal);
                Ok(vec![l, r])
            })?)
        }
        DisorderMethod::Quadrature { .. } => {
            let ModelSpec::Matrix { delta } = model else {
                return Err(Error::Unsupported(
                    "quadrature over disorder is implemented for the matrix model only",
                ));
            };
            let dims = NoiseDims {
                pair: true,
                field: epsilon > 0.0,
            };
            pooled_average(method, prior, n, dims, |s| {
                let state = MatrixCouplings::pooled(s, 1.0 / delta, epsilon).gibbs(&space)?;
                let (l, r) = g.pair(&state, &s.signal);
                Ok(vec![l, r])
            })?
        }
    };
    let lhs = avg.mean(0);
    let rhs = avg.mean(1);
    Ok(NishimoriReport {
        lhs,
        rhs,
        residual: lhs - rhs,
        stderr: avg.stderr_of(|r| r[0] - r[1]),
    })
}
