//! Quenched disorder: signal, noise arrays and measurement matrices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{ensure, Result};
use crate::prior::Prior;
use crate::rs_potential::ModelSpec;

/// Generator for the `index`-th disorder sample under `seed`. Each index gets
/// its own ChaCha stream, so samples are independent of evaluation order.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Symmetric matrix stored as its `i ≤ j` triangle, row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    upper: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            upper: vec![0.0; n * (n + 1) / 2],
        }
    }

    pub fn gaussian(n: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            n,
            upper: (0..n * (n + 1) / 2).map(|_| normal(rng)).collect(),
        }
    }

    /// Builds from the triangle in `(0,0), (0,1), .., (0,n-1), (1,1), ..` order.
    pub fn from_upper(n: usize, upper: Vec<f64>) -> Result<Self> {
        if upper.len() != n * (n + 1) / 2 {
            return Err(crate::Error::DimensionMismatch {
                expected: n * (n + 1) / 2,
                found: upper.len(),
            });
        }
        Ok(Self { n, upper })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    fn offset(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.n - i * (i + 1) / 2 + j
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[self.offset(i, j)]
    }

    /// `self += c · other`.
    pub fn add_scaled(&mut self, c: f64, other: &SymmetricMatrix) {
        for (a, b) in self.upper.iter_mut().zip(&other.upper) {
            *a += c * b;
        }
    }

    /// `Σ_{i≤j} a_ij x_i x_j`.
    pub fn upper_form(&self, x: &[f64]) -> f64 {
        let mut total = 0.0;
        let mut idx = 0;
        for i in 0..self.n {
            let mut row = 0.0;
            for &xj in &x[i..self.n] {
                row += self.upper[idx] * xj;
                idx += 1;
            }
            total += x[i] * row;
        }
        total
    }
}

/// Symmetric order-`p` array stored on sorted index tuples `i₁ ≤ … ≤ i_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricTensor {
    n: usize,
    p: usize,
    indices: Vec<Vec<usize>>,
    values: Vec<f64>,
}

impl SymmetricTensor {
    pub fn gaussian(n: usize, p: usize, rng: &mut ChaCha8Rng) -> Self {
        let indices = multisets(n, p);
        let values = indices.iter().map(|_| normal(rng)).collect();
        Self {
            n,
            p,
            indices,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.p
    }

    /// Sorted index tuples with their entries.
    pub fn entries(&self) -> impl Iterator<Item = (&[usize], f64)> {
        self.indices
            .iter()
            .map(Vec::as_slice)
            .zip(self.values.iter().copied())
    }

    /// Entry at any index tuple; order does not matter.
    pub fn get(&self, idx: &[usize]) -> f64 {
        let mut key = idx.to_vec();
        key.sort_unstable();
        let pos = self.indices.binary_search(&key).expect("index in range");
        self.values[pos]
    }
}

/// Nondecreasing index tuples of length `p` over `0..n`, lexicographic.
pub fn multisets(n: usize, p: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let mut cur = vec![0usize; p];
    loop {
        out.push(cur.clone());
        let mut pos = p;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            if cur[pos] + 1 < n {
                let v = cur[pos] + 1;
                for c in &mut cur[pos..] {
                    *c = v;
                }
                break;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CouplingNoise {
    /// One symmetric noise matrix per interpolation step.
    Matrix(Vec<SymmetricMatrix>),
    Tensor(SymmetricTensor),
    /// Measurement matrix `Φ` (row-major, `m × n`, entries of variance `1/n`)
    /// and the measurement noise.
    Rle {
        phi: Vec<f64>,
        m: usize,
        z: Vec<f64>,
    },
}

/// One draw of every quenched variable.
#[derive(Debug, Clone, PartialEq)]
pub struct QuenchedSample {
    pub signal: Vec<f64>,
    pub coupling: CouplingNoise,
    /// Mean-field noises `z̃^(k)`, one vector per step.
    pub mf_noise: Vec<Vec<f64>>,
    /// Side-channel noise `ẑ`.
    pub perturb_noise: Vec<f64>,
    pub seed: u64,
    pub index: u64,
}

/// Number of measurements for rate `alpha` at size `n`, at least one.
pub fn measurement_count(alpha: f64, n: usize) -> usize {
    ((alpha * n as f64).round() as usize).max(1)
}

impl QuenchedSample {
    /// Draws the sample for `(seed, index)`. `blocks` is the number of
    /// interpolation steps; only the matrix model uses more than one.
    pub fn generate(
        model: &ModelSpec,
        prior: &Prior,
        n: usize,
        blocks: usize,
        seed: u64,
        index: u64,
    ) -> Result<Self> {
        ensure(n >= 1, "n", n as f64, "must be at least 1")?;
        ensure(blocks >= 1, "K", blocks as f64, "must be at least 1")?;
        let mut rng = sample_rng(seed, index);
        let signal: Vec<f64> = (0..n).map(|_| prior.sample(&mut rng)).collect();
        let coupling = match *model {
            ModelSpec::Matrix { .. } => CouplingNoise::Matrix(
                (0..blocks)
                    .map(|_| SymmetricMatrix::gaussian(n, &mut rng))
                    .collect(),
            ),
            ModelSpec::Tensor { p, .. } => {
                CouplingNoise::Tensor(SymmetricTensor::gaussian(n, p as usize, &mut rng))
            }
            ModelSpec::Rle { alpha, .. } => {
                let m = measurement_count(alpha, n);
                let scale = (n as f64).sqrt().recip();
                let phi = (0..m * n).map(|_| scale * normal(&mut rng)).collect();
                let z = (0..m).map(|_| normal(&mut rng)).collect();
                CouplingNoise::Rle { phi, m, z }
            }
        };
        let mf_noise = (0..blocks)
            .map(|_| (0..n).map(|_| normal(&mut rng)).collect())
            .collect();
        let perturb_noise = (0..n).map(|_| normal(&mut rng)).collect();
        Ok(Self {
            signal,
            coupling,
            mf_noise,
            perturb_noise,
            seed,
            index,
        })
    }

    pub fn n(&self) -> usize {
        self.signal.len()
    }

    pub fn blocks(&self) -> usize {
        self.mf_noise.len()
    }

    /// Matrix noise blocks, if this is a matrix-model sample.
    pub fn matrix_blocks(&self) -> Option<&[SymmetricMatrix]> {
        match &self.coupling {
            CouplingNoise::Matrix(z) => Some(z),
            _ => None,
        }
    }
}

/// Matrix-model disorder with all pairwise channels merged into one noise
/// matrix and all scalar channels into one noise vector.
///
/// Independent Gaussian channels of SNRs `λ_b` observing the same quantity are
/// jointly equivalent to a single channel of SNR `Σ λ_b`, so any point of the
/// interpolation path can be sampled from this smaller set of variables.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledSample {
    pub signal: Vec<f64>,
    pub pair_noise: SymmetricMatrix,
    pub field_noise: Vec<f64>,
}

impl PooledSample {
    pub fn generate(prior: &Prior, n: usize, seed: u64, index: u64) -> Result<Self> {
        ensure(n >= 1, "n", n as f64, "must be at least 1")?;
        let mut rng = sample_rng(seed, index);
        let signal = (0..n).map(|_| prior.sample(&mut rng)).collect();
        let pair_noise = SymmetricMatrix::gaussian(n, &mut rng);
        let field_noise = (0..n).map(|_| normal(&mut rng)).collect();
        Ok(Self {
            signal,
            pair_noise,
            field_noise,
        })
    }

    pub fn n(&self) -> usize {
        self.signal.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_access() {
        let m = SymmetricMatrix::from_upper(3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(m.get(0, 2), 3.0);
        assert_eq!(m.get(2, 0), 3.0);
        assert_eq!(m.get(1, 2), m.get(2, 1));
        assert_eq!(m.get(2, 2), 6.0);
        let x = [1.0, -1.0, 2.0];
        let mut direct = 0.0;
        for i in 0..3 {
            for j in i..3 {
                direct += m.get(i, j) * x[i] * x[j];
            }
        }
        assert_eq!(m.upper_form(&x), direct);
    }

    #[test]
    fn multiset_counts() {
        assert_eq!(multisets(3, 2).len(), 6);
        assert_eq!(multisets(4, 3).len(), 20);
        assert_eq!(multisets(1, 4), vec![vec![0, 0, 0, 0]]);
        for t in multisets(5, 3) {
            assert!(t.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn tensor_is_symmetric() {
        let t = SymmetricTensor::gaussian(4, 3, &mut sample_rng(1, 0));
        assert_eq!(t.get(&[0, 2, 3]), t.get(&[3, 0, 2]));
        assert_eq!(t.get(&[1, 1, 2]), t.get(&[2, 1, 1]));
    }

    #[test]
    fn regeneration_is_bit_exact() {
        let prior = Prior::rademacher();
        for model in [
            ModelSpec::Matrix { delta: 1.0 },
            ModelSpec::Tensor { p: 3, delta: 1.0 },
            ModelSpec::Rle {
                alpha: 1.5,
                delta: 1.0,
            },
        ] {
            let a = QuenchedSample::generate(&model, &prior, 5, 3, 42, 17).unwrap();
            let b = QuenchedSample::generate(&model, &prior, 5, 3, 42, 17).unwrap();
            assert_eq!(a, b);
            let c = QuenchedSample::generate(&model, &prior, 5, 3, 42, 18).unwrap();
            assert_ne!(a, c);
        }
        assert_eq!(
            PooledSample::generate(&prior, 4, 9, 2).unwrap(),
            PooledSample::generate(&prior, 4, 9, 2).unwrap()
        );
    }

    #[test]
    fn measurement_matrix_has_variance_one_over_n() {
        let n = 50;
        let s = QuenchedSample::generate(
            &ModelSpec::Rle {
                alpha: 20.0,
                delta: 1.0,
            },
            &Prior::rademacher(),
            n,
            1,
            3,
            0,
        )
        .unwrap();
        let CouplingNoise::Rle { phi, m, .. } = &s.coupling else {
            unreachable!()
        };
        assert_eq!(*m, 1000);
        let var = phi.iter().map(|v| v * v).sum::<f64>() / phi.len() as f64;
        assert!((var * n as f64 - 1.0).abs() < 0.02, "{var}");
    }
}
