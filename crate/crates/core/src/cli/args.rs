//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "replica-lab",
    version,
    about = "Replica-symmetric formulas and exact finite-size checks for rank-one estimation"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Run-wide settings. Each may also come from `--config`; flags win.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML file with defaults for any of these options.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Base seed; falls back to REPLICA_LAB_SEED, then 7.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads. Results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Statistical checks at 2σ instead of 3σ.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Write the report here instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub model: Option<ModelKind>,
    /// `rademacher`, `zero`, or `atoms:weights` such as `-1,0,1:0.25,0.5,0.25`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub prior: Option<String>,
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Tensor order.
    #[arg(long, global = true)]
    pub p: Option<u32>,
    /// Measurement rate of the linear model.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Gauss–Hermite order for scalar-channel integrals.
    #[arg(long, global = true)]
    pub quad_order: Option<usize>,
    /// Disorder samples for Monte Carlo estimates.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Number of interpolation steps.
    #[arg(long = "K", global = true)]
    pub steps: Option<usize>,
    #[arg(long = "eps", visible_alias = "epsilon", global = true)]
    pub epsilon: Option<f64>,
    /// Gauss–Legendre order for integrals over t.
    #[arg(long, global = true)]
    pub t_quad_order: Option<usize>,
    /// How disorder is averaged.
    #[arg(long, global = true, value_enum)]
    pub method: Option<MethodKind>,
    /// Gauss–Hermite order per noise coordinate when `--method quadrature`.
    #[arg(long, global = true)]
    pub order: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Matrix,
    Tensor,
    Rle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodKind {
    Mc,
    Quadrature,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// CSV of `delta,m_star,f_rs,mutual_info` over a grid of Δ.
    RsCurve(CurveArgs),
    /// Locate and classify the first phase transition in a Δ range.
    Transition(CurveArgs),
    /// Finite-n free energy by exact enumeration, against min f_RS.
    Oracle(OracleArgs),
    #[command(subcommand)]
    Verify(VerifyCommand),
    #[command(subcommand)]
    Diagnose(DiagnoseCommand),
}

#[derive(Debug, Clone, Args)]
pub struct CurveArgs {
    #[arg(long, default_value_t = 0.5)]
    pub delta_min: f64,
    #[arg(long, default_value_t = 1.5)]
    pub delta_max: f64,
    #[arg(long, default_value_t = 21)]
    pub steps: usize,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    /// Allowed finite-size gap is `slack / n`.
    #[arg(long, default_value_t = 1.0)]
    pub slack: f64,
}

/// Position on the interpolation path.
#[derive(Debug, Clone, Args)]
pub struct PointArgs {
    /// Step index in 1..=K; defaults to ⌈K/2⌉.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub t: f64,
    /// Constant trial parameter; defaults to the minimizer of f_RS.
    #[arg(long)]
    pub m: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrialKind {
    /// Sequential choice `m_k = E⟨q⟩_{k,0}`.
    Adapted,
    /// Constant `m_k = argmin f_RS`.
    Rs,
}

#[derive(Debug, Subcommand)]
pub enum VerifyCommand {
    /// Both sides of the sum rule on blockwise samples.
    SumRule {
        #[arg(long, value_enum, default_value_t = TrialKind::Adapted)]
        trial: TrialKind,
    },
    /// `H_{k,1} = H_{k+1,0}` over random disorder and trial parameters.
    Telescoping {
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Finite difference in t against the overlap formula.
    Dfdt {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
    },
    /// Decay of the t-dependence of E⟨q⟩ with K.
    TGap {
        #[arg(long = "K-list", value_delimiter = ',', default_value = "8,16,32,64")]
        k_list: Vec<usize>,
        #[arg(long, default_value_t = 0.5)]
        t: f64,
        #[arg(long, default_value_t = 0.0)]
        m: f64,
    },
    /// `E⟨g(X,S)⟩ = E⟨g(X,X′)⟩`.
    Nishimori {
        /// Any of `q`, `q2`, `x1^4`.
        #[arg(
            long = "observable",
            value_delimiter = ',',
            default_value = "q,q2,x1^4"
        )]
        observables: Vec<String>,
    },
    /// Variance of L against the overlap identity and its split.
    Fluctuation {
        #[command(flatten)]
        point: PointArgs,
    },
    /// First and second derivatives in the side-channel SNR.
    Concavity {
        #[command(flatten)]
        point: PointArgs,
        /// Spacing of the ε̃ grid.
        #[arg(long, default_value_t = 0.01)]
        d_eps: f64,
        /// Number of grid points, centred on the path point.
        #[arg(long, default_value_t = 3)]
        points: usize,
    },
    /// ψ against its integral over the γ schedule.
    PsiIdentity {
        #[arg(long = "E", default_value_t = 1.0)]
        e: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum DiagnoseCommand {
    /// Overlap fluctuations along the path for several n.
    Concentration {
        #[arg(long = "n-list", value_delimiter = ',', default_value = "2,4,6,8")]
        n_list: Vec<usize>,
    },
    /// Disorder variance of the free energy for several n.
    FeVariance {
        #[arg(long = "n-list", value_delimiter = ',', default_value = "2,4,8")]
        n_list: Vec<usize>,
    },
}
