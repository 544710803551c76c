//! Hamiltonians of the three observation models, plus an independent
//! likelihood-based form of the matrix posterior used as a cross-check.

use std::sync::Arc;

use super::sample::{CouplingNoise, PooledSample, QuenchedSample, SymmetricMatrix};
use super::state::{ConfigurationSpace, GibbsState};
use crate::error::{Error, Result};
use crate::prior::Prior;
use crate::rs_potential::ModelSpec;
use crate::stats::log_sum_exp;

fn check_len(x: &[f64], n: usize) -> Result<()> {
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x.len(),
        });
    }
    Ok(())
}

/// Matrix noise seen by the original model. Several interpolation blocks are
/// merged as `Σ_k z^(k) / √K`, which is again standard Gaussian.
pub fn combined_matrix_noise(blocks: &[SymmetricMatrix]) -> SymmetricMatrix {
    if blocks.len() == 1 {
        return blocks[0].clone();
    }
    let mut z = SymmetricMatrix::zeros(blocks[0].n());
    let c = (blocks.len() as f64).sqrt().recip();
    for b in blocks {
        z.add_scaled(c, b);
    }
    z
}

/// `H(x; s, z)` of the original model, term by term as written.
pub fn hamiltonian(model: &ModelSpec, x: &[f64], sample: &QuenchedSample) -> Result<f64> {
    let n = sample.n();
    check_len(x, n)?;
    let s = &sample.signal;
    let nf = n as f64;
    match (*model, &sample.coupling) {
        (ModelSpec::Matrix { delta }, CouplingNoise::Matrix(blocks)) => {
            let z = combined_matrix_noise(blocks);
            let noise = (delta / nf).sqrt();
            let mut total = 0.0;
            for i in 0..n {
                for j in i..n {
                    let xx = x[i] * x[j];
                    total +=
                        xx * xx / (2.0 * nf) - xx * s[i] * s[j] / nf - noise * xx * z.get(i, j);
                }
            }
            Ok(total / delta)
        }
        (ModelSpec::Tensor { p, delta }, CouplingNoise::Tensor(z)) => {
            let c = (1..p).map(|k| k as f64).product::<f64>() / nf.powi(p as i32 - 1);
            let noise = (delta * c).sqrt();
            let mut total = 0.0;
            for (idx, zv) in z.entries() {
                let px: f64 = idx.iter().map(|&i| x[i]).product();
                let ps: f64 = idx.iter().map(|&i| s[i]).product();
                total += 0.5 * c * px * px - c * px * ps - noise * zv * px;
            }
            Ok(total / delta)
        }
        (ModelSpec::Rle { delta, .. }, CouplingNoise::Rle { phi, m, z }) => {
            let root = delta.sqrt();
            let mut total = 0.0;
            for mu in 0..*m {
                let row = &phi[mu * n..(mu + 1) * n];
                let u: f64 = row
                    .iter()
                    .zip(x.iter().zip(s))
                    .map(|(f, (a, b))| f * (a - b))
                    .sum();
                total += 0.5 * u * u - u * z[mu] * root;
            }
            Ok(total / delta)
        }
        _ => Err(Error::Unsupported("sample was drawn for a different model")),
    }
}

/// Side-channel term `ε Σ (x²/2 − x s) − √ε Σ x ẑ`.
pub fn perturbation_energy(x: &[f64], signal: &[f64], noise: &[f64], epsilon: f64) -> f64 {
    if epsilon == 0.0 {
        return 0.0;
    }
    let root = epsilon.sqrt();
    x.iter()
        .zip(signal)
        .zip(noise)
        .map(|((&xi, &si), &zi)| epsilon * (0.5 * xi * xi - xi * si) - root * xi * zi)
        .sum()
}

/// Energies of every configuration for the original model plus side channel.
pub fn model_energies(
    model: &ModelSpec,
    space: &ConfigurationSpace,
    sample: &QuenchedSample,
    epsilon: f64,
) -> Result<Vec<f64>> {
    if let ModelSpec::Matrix { delta } = *model {
        let c = MatrixCouplings::original(sample, delta, epsilon)?;
        return Ok(c.energies(space));
    }
    space
        .iter()
        .map(|x| {
            Ok(hamiltonian(model, x, sample)?
                + perturbation_energy(x, &sample.signal, &sample.perturb_noise, epsilon))
        })
        .collect()
}

/// Posterior of the original model (with side channel of strength `epsilon`).
pub fn enumerate_gibbs(
    model: &ModelSpec,
    space: &Arc<ConfigurationSpace>,
    sample: &QuenchedSample,
    epsilon: f64,
) -> Result<GibbsState> {
    if space.n() != sample.n() {
        return Err(Error::DimensionMismatch {
            expected: space.n(),
            found: sample.n(),
        });
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            value: epsilon,
            reason: "must be finite and nonnegative",
        });
    }
    let e = model_energies(model, space, sample, epsilon)?;
    GibbsState::from_energies(space.clone(), &e)
}

/// Observed matrix `w = s sᵀ/√n + z √Δ` on the `i ≤ j` triangle.
pub fn matrix_observation(sample: &QuenchedSample, delta: f64) -> Result<SymmetricMatrix> {
    let blocks = sample.matrix_blocks().ok_or(Error::Unsupported(
        "matrix observation needs a matrix sample",
    ))?;
    let z = combined_matrix_noise(blocks);
    let n = sample.n();
    let s = &sample.signal;
    let root_n = (n as f64).sqrt();
    let mut upper = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            upper.push(s[i] * s[j] / root_n + z.get(i, j) * delta.sqrt());
        }
    }
    SymmetricMatrix::from_upper(n, upper)
}

fn log_likelihood(x: &[f64], w: &SymmetricMatrix, delta: f64) -> f64 {
    let n = x.len();
    let root_n = (n as f64).sqrt();
    let mut total = 0.0;
    for i in 0..n {
        for j in i..n {
            let r = w.get(i, j) - x[i] * x[j] / root_n;
            total += r * r;
        }
    }
    -total / (2.0 * delta)
}

/// Hamiltonian recovered from the Gaussian likelihood, `ℓ(0) − ℓ(x)`.
pub fn likelihood_hamiltonian(x: &[f64], w: &SymmetricMatrix, delta: f64) -> f64 {
    log_likelihood(&vec![0.0; x.len()], w, delta) - log_likelihood(x, w, delta)
}

/// Log posterior probabilities from the raw observations, by Bayes' rule.
/// The side channel observes `y = √ε s + ẑ`.
pub fn direct_posterior(
    prior: &Prior,
    sample: &QuenchedSample,
    delta: f64,
    epsilon: f64,
) -> Result<Vec<f64>> {
    let space = ConfigurationSpace::new(prior, sample.n())?;
    let w = matrix_observation(sample, delta)?;
    let root = epsilon.sqrt();
    let y: Vec<f64> = sample
        .signal
        .iter()
        .zip(&sample.perturb_noise)
        .map(|(s, z)| root * s + z)
        .collect();
    let logits: Vec<f64> = space
        .iter()
        .zip(space.log_prior())
        .map(|(x, lp)| {
            let side: f64 = x
                .iter()
                .zip(&y)
                .map(|(xi, yi)| (yi - root * xi).powi(2))
                .sum();
            lp + log_likelihood(x, &w, delta) - 0.5 * side
        })
        .collect();
    let norm = log_sum_exp(&logits);
    Ok(logits.iter().map(|l| l - norm).collect())
}

/// Matrix-model energy in compiled form:
///
/// `A·Σ_{i≤j}(x_i²x_j²/2n − x_ix_js_is_j/n) − Σ_{i≤j} J_ij x_ix_j
///  + B·Σ(x_i²/2 − x_is_i) − Σ h_i x_i`,
///
/// with pairwise SNR `A`, scalar-channel SNR `B` and the noise already folded
/// into the couplings `J` and fields `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixCouplings {
    pub signal: Vec<f64>,
    pub pair_snr: f64,
    pub coupling: SymmetricMatrix,
    pub field_snr: f64,
    pub field: Vec<f64>,
}

impl MatrixCouplings {
    /// Original model with side channel, blocks merged.
    pub fn original(sample: &QuenchedSample, delta: f64, epsilon: f64) -> Result<Self> {
        let blocks = sample
            .matrix_blocks()
            .ok_or(Error::Unsupported("matrix couplings need a matrix sample"))?;
        let n = sample.n();
        let k = blocks.len() as f64;
        let c = (1.0 / (k * delta)).sqrt() / (n as f64).sqrt();
        let mut coupling = SymmetricMatrix::zeros(n);
        for b in blocks {
            coupling.add_scaled(c, b);
        }
        let root = epsilon.sqrt();
        Ok(Self {
            signal: sample.signal.clone(),
            pair_snr: 1.0 / delta,
            coupling,
            field_snr: epsilon,
            field: sample.perturb_noise.iter().map(|z| root * z).collect(),
        })
    }

    /// Single pooled channel of each kind.
    pub fn pooled(sample: &PooledSample, pair_snr: f64, field_snr: f64) -> Self {
        let n = sample.n();
        let mut coupling = SymmetricMatrix::zeros(n);
        coupling.add_scaled(pair_snr.sqrt() / (n as f64).sqrt(), &sample.pair_noise);
        let root = field_snr.sqrt();
        Self {
            signal: sample.signal.clone(),
            pair_snr,
            coupling,
            field_snr,
            field: sample.field_noise.iter().map(|z| root * z).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.signal.len()
    }

    pub fn energy(&self, x: &[f64]) -> f64 {
        let n = self.n() as f64;
        let s = &self.signal;
        let (mut x2, mut x4, mut xs, mut x2s2, mut mf, mut lin) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..x.len() {
            let xi = x[i];
            let a = xi * xi;
            x2 += a;
            x4 += a * a;
            xs += xi * s[i];
            x2s2 += a * s[i] * s[i];
            mf += 0.5 * a - xi * s[i];
            lin += self.field[i] * xi;
        }
        let mut e = -self.coupling.upper_form(x) - lin;
        if self.pair_snr != 0.0 {
            e += self.pair_snr * ((x2 * x2 + x4) / (4.0 * n) - (xs * xs + x2s2) / (2.0 * n));
        }
        if self.field_snr != 0.0 {
            e += self.field_snr * mf;
        }
        e
    }

    pub fn energies(&self, space: &ConfigurationSpace) -> Vec<f64> {
        space.iter().map(|x| self.energy(x)).collect()
    }

    pub fn gibbs(&self, space: &Arc<ConfigurationSpace>) -> Result<GibbsState> {
        GibbsState::from_energies(space.clone(), &self.energies(space))
    }
}
