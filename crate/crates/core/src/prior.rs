//! Discrete signal priors `P₀ = Σ_b p_b δ(· − a_b)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WEIGHT_TOLERANCE: f64 = 1e-9;
const CACHED_MOMENTS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    atoms: Vec<f64>,
    weights: Vec<f64>,
    log_weights: Vec<f64>,
    cumulative: Vec<f64>,
    support_bound: f64,
    moments: Vec<f64>,
}

impl Prior {
    /// Builds a discrete prior. Weights within 1e-9 of summing to one are
    /// renormalized; anything further off is rejected.
    pub fn discrete(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || weights.is_empty() {
            return Err(Error::EmptyPrior);
        }
        if atoms.len() != weights.len() {
            return Err(Error::LengthMismatch {
                atoms: atoms.len(),
                weights: weights.len(),
            });
        }
        if atoms.iter().chain(&weights).any(|v| !v.is_finite()) {
            return Err(Error::NonFinitePrior);
        }
        if let Some((index, &weight)) = weights.iter().enumerate().find(|(_, w)| **w < 0.0) {
            return Err(Error::NegativeWeight { index, weight });
        }
        for (i, a) in atoms.iter().enumerate() {
            if atoms[..i].contains(a) {
                return Err(Error::DuplicateAtom(*a));
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::WeightSum(total));
        }
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        let support_bound = atoms.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        let mut prior = Self {
            atoms,
            weights,
            log_weights,
            cumulative,
            support_bound,
            moments: Vec::new(),
        };
        prior.moments = (0..=CACHED_MOMENTS as u32)
            .map(|k| prior.raw_moment(k))
            .collect();
        Ok(prior)
    }

    /// Symmetric ±1 prior.
    pub fn rademacher() -> Self {
        Self::discrete(vec![1.0, -1.0], vec![0.5, 0.5]).expect("valid prior")
    }

    /// Point mass at `value`.
    pub fn point_mass(value: f64) -> Self {
        Self::discrete(vec![value], vec![1.0]).expect("valid prior")
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `ln p_b`; `-∞` for zero-weight atoms.
    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `M = max_b |a_b|`.
    pub fn support_bound(&self) -> f64 {
        self.support_bound
    }

    /// `Σ_b p_b a_b^order`.
    pub fn moment(&self, order: u32) -> f64 {
        match self.moments.get(order as usize) {
            Some(&m) => m,
            None => self.raw_moment(order),
        }
    }

    fn raw_moment(&self, order: u32) -> f64 {
        self.atoms
            .iter()
            .zip(&self.weights)
            .map(|(a, p)| p * a.powi(order as i32))
            .sum()
    }

    /// Index of an atom drawn from the prior.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        self.cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.atoms.len() - 1)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.atoms[self.sample_index(rng)]
    }

    /// Serializable description, as written in config files.
    pub fn spec(&self) -> PriorSpec {
        PriorSpec::Explicit {
            atoms: self.atoms.clone(),
            weights: self.weights.clone(),
        }
    }
}

/// Config-file form: either a named shortcut or explicit lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PriorSpec {
    Named(String),
    Explicit { atoms: Vec<f64>, weights: Vec<f64> },
}

impl PriorSpec {
    pub fn build(&self) -> Result<Prior> {
        match self {
            PriorSpec::Named(name) => match name.as_str() {
                "rademacher" => Ok(Prior::rademacher()),
                "zero" | "point-mass" => Ok(Prior::point_mass(0.0)),
                other => Err(Error::Config(format!(
                    "unknown prior `{other}` (known: rademacher, zero)"
                ))),
            },
            PriorSpec::Explicit { atoms, weights } => {
                Prior::discrete(atoms.clone(), weights.clone())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rademacher_moments() {
        let p = Prior::rademacher();
        assert_eq!(p.moment(0), 1.0);
        assert_eq!(p.moment(2), 1.0);
        assert_eq!(p.moment(3), 0.0);
        assert_eq!(p.moment(4), 1.0);
        assert_eq!(p.support_bound(), 1.0);
    }

    #[test]
    fn degenerate_and_bernoulli() {
        let zero = Prior::point_mass(0.0);
        for k in 1..10 {
            assert_eq!(zero.moment(k), 0.0);
        }
        let b = Prior::discrete(vec![0.0, 1.0], vec![0.7, 0.3]).unwrap();
        assert!((b.moment(1) - 0.3).abs() < 1e-15);
        assert!((b.moment(2) - 0.3).abs() < 1e-15);
        let two = Prior::point_mass(2.0);
        assert_eq!(two.moment(2), 4.0);
        assert_eq!(two.moment(30), 2f64.powi(30));
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            Prior::discrete(vec![], vec![]),
            Err(Error::EmptyPrior)
        ));
        assert!(matches!(
            Prior::discrete(vec![1.0], vec![0.5, 0.5]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            Prior::discrete(vec![1.0, 2.0], vec![1.5, -0.5]),
            Err(Error::NegativeWeight { index: 1, .. })
        ));
        assert!(matches!(
            Prior::discrete(vec![1.0, 1.0], vec![0.5, 0.5]),
            Err(Error::DuplicateAtom(_))
        ));
        assert!(matches!(
            Prior::discrete(vec![1.0, 2.0], vec![0.5, 0.6]),
            Err(Error::WeightSum(_))
        ));
    }

    #[test]
    fn small_weight_error_is_renormalized() {
        let p = Prior::discrete(vec![1.0, -1.0], vec![0.5, 0.5 + 5e-10]).unwrap();
        let total: f64 = p.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn named_specs() {
        assert_eq!(
            PriorSpec::Named("rademacher".into()).build().unwrap(),
            Prior::rademacher()
        );
        assert!(PriorSpec::Named("gaussian".into()).build().is_err());
        let spec: PriorSpec =
            toml::from_str::<toml::Value>("prior = { atoms = [0.0, 1.0], weights = [0.5, 0.5] }")
                .unwrap()
                .get("prior")
                .unwrap()
                .clone()
                .try_into()
                .unwrap();
        assert_eq!(spec.build().unwrap().moment(1), 0.5);
    }

    fn arb_prior() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..6).prop_flat_map(|b| {
            (
                proptest::collection::btree_set(-300i32..300, b),
                proptest::collection::vec(0.01f64..1.0, b),
            )
                .prop_map(|(atoms, raw)| {
                    let total: f64 = raw.iter().sum();
                    (
                        atoms.into_iter().map(|a| a as f64 / 100.0).collect(),
                        raw.iter().map(|w| w / total).collect(),
                    )
                })
        })
    }

    proptest! {
        #[test]
        fn moment_inequalities((atoms, weights) in arb_prior(), k in 1u32..6) {
            let p = Prior::discrete(atoms, weights).unwrap();
            let mk = p.moment(k);
            prop_assert!(p.moment(2 * k) >= mk * mk - 1e-9 * (1.0 + mk * mk));
            prop_assert!(mk.abs() <= p.support_bound().powi(k as i32) * (1.0 + 1e-12));
        }

        #[test]
        fn moments_are_permutation_invariant((atoms, weights) in arb_prior(), shift in 0usize..5) {
            let p = Prior::discrete(atoms.clone(), weights.clone()).unwrap();
            let b = atoms.len();
            let rot = |v: &Vec<f64>| (0..b).map(|i| v[(i + shift) % b]).collect::<Vec<_>>();
            let q = Prior::discrete(rot(&atoms), rot(&weights)).unwrap();
            for k in 0..8 {
                prop_assert!((p.moment(k) - q.moment(k)).abs() <= 1e-12 * (1.0 + p.moment(k).abs()));
            }
        }
    }
}
