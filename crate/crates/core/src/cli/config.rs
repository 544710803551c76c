//! Merging of flags, config file and environment into one set of settings.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::args::{GlobalArgs, MethodKind, ModelKind};
use crate::error::{Error, Result};
use crate::gibbs::DisorderMethod;
use crate::prior::{Prior, PriorSpec};
use crate::rs_potential::ModelSpec;
use crate::scalar_channel::DEFAULT_QUAD_ORDER;

pub const SEED_ENV: &str = "REPLICA_LAB_SEED";
pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    seed: Option<u64>,
    threads: Option<usize>,
    strict: Option<bool>,
    out: Option<PathBuf>,
    model: Option<ModelTable>,
    prior: Option<PriorSpec>,
    quad_order: Option<usize>,
    samples: Option<usize>,
    n: Option<usize>,
    #[serde(rename = "K")]
    steps: Option<usize>,
    epsilon: Option<f64>,
    t_quad_order: Option<usize>,
    method: Option<String>,
    order: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelTable {
    kind: Option<String>,
    delta: Option<f64>,
    p: Option<u32>,
    alpha: Option<f64>,
}

/// Fully resolved run settings. Numeric fields left as `None` take the
/// default of the subcommand that uses them.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ModelSpec,
    /// Measurement rate, also used outside the linear model by
    /// `verify psi-identity`.
    pub alpha: f64,
    pub prior: Prior,
    pub seed: u64,
    pub threads: Option<usize>,
    pub strict: bool,
    pub out: Option<PathBuf>,
    pub quad_order: usize,
    pub samples: Option<usize>,
    pub n: Option<usize>,
    pub steps: Option<usize>,
    pub epsilon: Option<f64>,
    pub t_quad_order: Option<usize>,
    pub method: MethodKind,
    pub order: Option<usize>,
}

impl RunConfig {
    pub fn resolve(flags: &GlobalArgs) -> Result<Self> {
        let file = match &flags.config {
            Some(path) => read_config(path)?,
            None => ConfigFile::default(),
        };
        let table = file.model.unwrap_or_default();
        let kind = match (flags.model, table.kind.as_deref()) {
            (Some(k), _) => k,
            (None, None) => ModelKind::Matrix,
            (None, Some("matrix")) => ModelKind::Matrix,
            (None, Some("tensor")) => ModelKind::Tensor,
            (None, Some("rle")) => ModelKind::Rle,
            (None, Some(other)) => {
                return Err(Error::Config(format!("unknown model kind `{other}`")))
            }
        };
        let delta = flags.delta.or(table.delta).unwrap_or(1.0);
        let alpha = flags.alpha.or(table.alpha).unwrap_or(1.0);
        let model = match kind {
            ModelKind::Matrix => ModelSpec::Matrix { delta },
            ModelKind::Tensor => ModelSpec::Tensor {
                p: flags.p.or(table.p).unwrap_or(3),
                delta,
            },
            ModelKind::Rle => ModelSpec::Rle { alpha, delta },
        }
        .validated()?;
        let prior = match (&flags.prior, &file.prior) {
            (Some(text), _) => parse_prior(text)?,
            (None, Some(spec)) => spec.build()?,
            (None, None) => Prior::rademacher(),
        };
        let method = match (flags.method, file.method.as_deref()) {
            (Some(m), _) => m,
            (None, None | Some("mc")) => MethodKind::Mc,
            (None, Some("quadrature")) => MethodKind::Quadrature,
            (None, Some(other)) => return Err(Error::Config(format!("unknown method `{other}`"))),
        };
        let seed = match flags.seed.or(file.seed) {
            Some(s) => s,
            None => env_seed()?,
        };
        let config = Self {
            model,
            alpha,
            prior,
            seed,
            threads: flags.threads.or(file.threads),
            strict: flags.strict || file.strict.unwrap_or(false),
            out: flags.out.clone().or(file.out),
            quad_order: flags
                .quad_order
                .or(file.quad_order)
                .unwrap_or(DEFAULT_QUAD_ORDER),
            samples: flags.samples.or(file.samples),
            n: flags.n.or(file.n),
            steps: flags.steps.or(file.steps),
            epsilon: flags.epsilon.or(file.epsilon),
            t_quad_order: flags.t_quad_order.or(file.t_quad_order),
            method,
            order: flags.order.or(file.order),
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: Option<usize>| match v {
            Some(0) => Err(Error::Config(format!("{name} must be positive"))),
            _ => Ok(()),
        };
        positive("threads", self.threads)?;
        positive("quad_order", Some(self.quad_order))?;
        positive("n", self.n)?;
        positive("K", self.steps)?;
        positive("t_quad_order", self.t_quad_order)?;
        positive("order", self.order)?;
        if let Some(s) = self.samples {
            if s < 2 {
                return Err(Error::Config("samples must be at least 2".into()));
            }
        }
        if let Some(e) = self.epsilon {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(Error::Config(format!(
                    "epsilon must be finite and nonnegative, got {e}"
                )));
            }
        }
        Ok(())
    }

    /// Multiplier for a statistical acceptance band, tightened by `--strict`.
    pub fn sigmas(&self, base: f64) -> f64 {
        if self.strict {
            base * 2.0 / 3.0
        } else {
            base
        }
    }

    pub fn disorder_method(&self, n: usize, default_samples: usize) -> DisorderMethod {
        match self.method {
            MethodKind::Mc => DisorderMethod::MonteCarlo {
                samples: self.samples.unwrap_or(default_samples),
                seed: self.seed,
            },
            MethodKind::Quadrature => DisorderMethod::Quadrature {
                order: self.order.unwrap_or(if n == 1 { 80 } else { 16 }),
            },
        }
    }

    pub fn matrix_delta(&self) -> Result<f64> {
        match self.model {
            ModelSpec::Matrix { delta } => Ok(delta),
            _ => Err(Error::Unsupported(
                "interpolation paths are implemented for the matrix model only",
            )),
        }
    }
}

fn read_config(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn env_seed() -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            Error::Config(format!("{SEED_ENV} must be an unsigned integer, got `{v}`"))
        }),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

/// `rademacher`, `zero`, or `atoms:weights` with comma-separated lists.
pub fn parse_prior(text: &str) -> Result<Prior> {
    let Some((atoms, weights)) = text.split_once(':') else {
        return PriorSpec::Named(text.to_string()).build();
    };
    let list = |s: &str| -> Result<Vec<f64>> {
        s.split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad number `{v}` in prior `{text}`")))
            })
            .collect()
    };
    Prior::discrete(list(atoms)?, list(weights)?)
}
