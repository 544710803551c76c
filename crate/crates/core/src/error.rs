use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("prior needs at least one atom")]
    EmptyPrior,
    #[error("prior has {atoms} atoms but {weights} weights")]
    LengthMismatch { atoms: usize, weights: usize },
    #[error("prior weight {index} is negative ({weight})")]
    NegativeWeight { index: usize, weight: f64 },
    #[error("prior atom {0} appears more than once")]
    DuplicateAtom(f64),
    #[error("prior atom or weight is not finite")]
    NonFinitePrior,
    #[error("prior weights sum to {0}, expected 1")]
    WeightSum(f64),
    #[error("invalid {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("enumeration of {configurations} configurations exceeds the cap of {cap}")]
    EnumerationCap { configurations: u128, cap: usize },
    #[error("quadrature over {dims} noise dimensions requested, at most {max} supported")]
    QuadratureDimension { dims: usize, max: usize },
    #[error("quadrature grid of {points} points exceeds the limit of {limit}")]
    QuadratureSize { points: u128, limit: u128 },
    #[error("scalar-channel quadrature produced a non-finite value")]
    QuadratureOverflow,
    #[error("{0}")]
    Unsupported(&'static str),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure(
    cond: bool,
    name: &'static str,
    value: f64,
    reason: &'static str,
) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason,
        })
    }
}
