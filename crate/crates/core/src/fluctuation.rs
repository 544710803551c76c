//! The observable `ℒ`, derivatives of the free energy in the side-channel
//! SNR, the fluctuation identity and concentration diagnostics.
//!
//! All estimators use pooled samples (see [`PooledSample`]) at a
//! [`PathPoint`], whose `effective_epsilon` is the only source of `ε̃`.

use serde::Serialize;

use crate::error::{ensure, Error, Result};
use crate::gibbs::disorder::{pooled_average, DisorderMethod, NoiseDims};
use crate::gibbs::oracle::free_energy_samples;
use crate::gibbs::sample::PooledSample;
use crate::gibbs::state::{overlap_unchecked, ConfigurationSpace, GibbsState};
use crate::interpolation::{PathConfig, PathPoint, TrialParameters};
use crate::prior::Prior;
use crate::rs_potential::{minimize_potential, ModelSpec, SolverOptions};
use crate::stats::{log_log_slope, variance, variance_stderr};

const BOTH: NoiseDims = NoiseDims {
    pair: true,
    field: true,
};

/// Absolute tolerance granted to deterministic (quadrature) estimates.
pub const EXACT_TOLERANCE: f64 = 1e-5;

fn exact_tolerance(method: &DisorderMethod) -> f64 {
    if method.is_exact() {
        EXACT_TOLERANCE
    } else {
        0.0
    }
}

/// `ℒ = (1/n) Σ (x_i²/2 − x_is_i − x_iẑ_i/(2√ε̃))`, with `ẑ` the pooled
/// side-channel noise.
pub fn observable_l(x: &[f64], sample: &PooledSample, point: &PathPoint) -> Result<f64> {
    let eps = point.effective_epsilon;
    ensure(
        eps > 0.0,
        "effective epsilon",
        eps,
        "must be positive for L",
    )?;
    if x.len() != sample.n() {
        return Err(Error::DimensionMismatch {
            expected: sample.n(),
            found: x.len(),
        });
    }
    Ok(l_unchecked(x, sample, 0.5 / eps.sqrt()))
}

fn l_unchecked(x: &[f64], sample: &PooledSample, c: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..x.len() {
        total += x[i] * (0.5 * x[i] - sample.signal[i] - c * sample.field_noise[i]);
    }
    total / x.len() as f64
}

// Posterior first and second moments, row-major.
struct Moments {
    mean: Vec<f64>,
    second: Vec<f64>,
}

impl Moments {
    fn of(state: &GibbsState) -> Self {
        Self {
            mean: state.mean_vector(),
            second: state.second_moments(),
        }
    }

    fn n(&self) -> usize {
        self.mean.len()
    }

    /// `(1/n) Σ ⟨X_i⟩²`.
    fn mean_square(&self) -> f64 {
        self.mean.iter().map(|v| v * v).sum::<f64>() / self.n() as f64
    }

    /// `(1/n²) Σ_ij f(⟨X_iX_j⟩, ⟨X_i⟩, ⟨X_j⟩)`.
    fn pair_sum(&self, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
        let n = self.n();
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                total += f(self.second[i * n + j], self.mean[i], self.mean[j]);
            }
        }
        total / (n * n) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Comparison {
    pub residual: f64,
    pub stderr: f64,
    /// Deterministic allowance: quadrature error and finite-difference
    /// rounding.
    pub tolerance: f64,
}

impl Comparison {
    pub fn passes(&self, sigmas: f64) -> bool {
        self.residual.abs() <= sigmas * self.stderr + self.tolerance
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FirstDerivativeReport {
    pub effective_epsilon: f64,
    /// Five-point central difference of `f` in `ε̃`.
    pub fd_value: f64,
    /// `−(1/2n) Σ E⟨X_i⟩²`.
    pub formula_value: f64,
    /// `E⟨ℒ⟩`.
    pub mean_l: f64,
    pub fd_vs_formula: Comparison,
    pub l_vs_formula: Comparison,
    pub fd_vs_l: Comparison,
}

impl FirstDerivativeReport {
    pub fn passes(&self, sigmas: f64) -> bool {
        [self.fd_vs_formula, self.l_vs_formula, self.fd_vs_l]
            .iter()
            .all(|c| c.passes(sigmas))
    }
}

pub fn first_derivative_check(
    point: &PathPoint,
    prior: &Prior,
    method: &DisorderMethod,
    d_eps: f64,
) -> Result<FirstDerivativeReport> {
    ensure(
        d_eps > 0.0 && d_eps.is_finite(),
        "d_eps",
        d_eps,
        "must be positive",
    )?;
    ensure(
        point.effective_epsilon - 2.0 * d_eps > 0.0,
        "d_eps",
        d_eps,
        "effective epsilon minus 2·d_eps must stay positive",
    )?;
    // Fourth-order stencil: the per-sample comparison with ⟨ℒ⟩ is precise
    // enough to resolve the O(h²) error of a three-point one.
    let stencil: Vec<(PathPoint, f64)> = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)]
        .iter()
        .map(|&(k, c)| Ok((point.with_epsilon_shift(k * d_eps)?, c / (12.0 * d_eps))))
        .collect::<Result<_>>()?;
    let n = point.n();
    let space = ConfigurationSpace::new(prior, n)?;
    let c = 0.5 / point.effective_epsilon.sqrt();
    let avg = pooled_average(method, prior, n, BOTH, |s| {
        let mut fd = 0.0;
        for (p, c) in &stencil {
            fd += c * p.pooled_state(s, &space)?.free_energy();
        }
        let state = point.pooled_state(s, &space)?;
        let formula = -0.5 * Moments::of(&state).mean_square();
        let l = state.expect(|x| l_unchecked(x, s, c));
        Ok(vec![
            fd,
            formula,
            l,
            fd - formula,
            l - formula,
            fd - l,
            state.free_energy(),
        ])
    })?;
    let exact = exact_tolerance(method);
    // Stencil rounding: a few ulps of F amplified by 1/h.
    let rounding = 1e3 * f64::EPSILON * (1.0 + avg.mean_of(|r| r[6].abs())) / d_eps;
    let cmp = |j: usize, tolerance: f64| Comparison {
        residual: avg.mean(j),
        stderr: avg.stderr(j),
        tolerance,
    };
    Ok(FirstDerivativeReport {
        effective_epsilon: point.effective_epsilon,
        fd_value: avg.mean(0),
        formula_value: avg.mean(1),
        mean_l: avg.mean(2),
        fd_vs_formula: cmp(3, exact + rounding),
        l_vs_formula: cmp(4, exact),
        fd_vs_l: cmp(5, exact + rounding),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvaturePoint {
    pub effective_epsilon: f64,
    /// Second difference of `f` in `ε̃`.
    pub second_difference: f64,
    pub second_difference_stderr: f64,
    /// `−(1/2n) Σ_ij E[(⟨X_iX_j⟩ − ⟨X_i⟩⟨X_j⟩)²]`.
    pub formula: f64,
    pub formula_stderr: f64,
    pub residual: f64,
    pub residual_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcavityReport {
    pub points: Vec<CurvaturePoint>,
    pub tolerance: f64,
}

impl ConcavityReport {
    pub fn is_concave(&self, sigmas: f64) -> bool {
        self.points
            .iter()
            .all(|p| p.second_difference <= sigmas * p.second_difference_stderr + self.tolerance)
    }

    pub fn matches_formula(&self, sigmas: f64) -> bool {
        self.points.iter().all(|p| {
            p.formula <= sigmas * p.formula_stderr
                && p.residual.abs() <= sigmas * p.residual_stderr + self.tolerance
        })
    }

    pub fn passes(&self, sigmas: f64) -> bool {
        self.is_concave(sigmas) && self.matches_formula(sigmas)
    }
}

/// Second differences of `f` on an evenly spaced grid of shifts of `ε̃`
/// around `point`, with the closed-form curvature at each interior node.
pub fn concavity_check(
    point: &PathPoint,
    shifts: &[f64],
    prior: &Prior,
    method: &DisorderMethod,
) -> Result<ConcavityReport> {
    ensure(
        shifts.len() >= 3,
        "grid",
        shifts.len() as f64,
        "needs at least three points",
    )?;
    let h = shifts[1] - shifts[0];
    ensure(h > 0.0, "grid spacing", h, "must be positive")?;
    for w in shifts.windows(2) {
        ensure(
            ((w[1] - w[0]) - h).abs() <= 1e-9 * h.max(1.0),
            "grid spacing",
            w[1] - w[0],
            "grid must be evenly spaced",
        )?;
    }
    let points: Vec<PathPoint> = shifts
        .iter()
        .map(|&d| point.with_epsilon_shift(d))
        .collect::<Result<_>>()?;
    let n = point.n();
    let space = ConfigurationSpace::new(prior, n)?;
    let inner = points.len() - 2;
    let avg = pooled_average(method, prior, n, BOTH, |s| {
        let states: Vec<GibbsState> = points
            .iter()
            .map(|p| p.pooled_state(s, &space))
            .collect::<Result<_>>()?;
        let mut row = Vec::with_capacity(3 * inner);
        for j in 1..=inner {
            let d2 = (states[j + 1].free_energy() - 2.0 * states[j].free_energy()
                + states[j - 1].free_energy())
                / (h * h);
            let formula =
                -0.5 * n as f64 * Moments::of(&states[j]).pair_sum(|m, a, b| (m - a * b).powi(2));
            row.extend([d2, formula, d2 - formula]);
        }
        Ok(row)
    })?;
    let points = (0..inner)
        .map(|j| CurvaturePoint {
            effective_epsilon: points[j + 1].effective_epsilon,
            second_difference: avg.mean(3 * j),
            second_difference_stderr: avg.stderr(3 * j),
            formula: avg.mean(3 * j + 1),
            formula_stderr: avg.stderr(3 * j + 1),
            residual: avg.mean(3 * j + 2),
            residual_stderr: avg.stderr(3 * j + 2),
        })
        .collect();
    // Truncation of the three-point stencil, O(h²), is folded into the
    // tolerance of exact runs.
    Ok(ConcavityReport {
        points,
        tolerance: if method.is_exact() { 1e-4 } else { 0.0 },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluctuationTerms {
    /// `¼(E⟨q²⟩ − (E⟨q⟩)²)`.
    pub overlap_variance: f64,
    /// `½(E⟨q²⟩ − E[⟨q⟩²])`.
    pub thermal_overlap: f64,
    /// `E[S²]/(4nε̃)`.
    pub side_channel: f64,
}

impl FluctuationTerms {
    pub fn sum(&self) -> f64 {
        self.overlap_variance + self.thermal_overlap + self.side_channel
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitPart {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluctuationReport {
    /// `E⟨(ℒ − E⟨ℒ⟩)²⟩`.
    pub lhs: f64,
    pub rhs_terms: FluctuationTerms,
    pub residual: f64,
    pub stderr: f64,
    /// `E⟨ℒ²⟩ − E[⟨ℒ⟩²]` against its closed form.
    pub thermal: SplitPart,
    /// `E[⟨ℒ⟩²] − (E⟨ℒ⟩)²` against its closed form.
    pub disorder: SplitPart,
    pub tolerance: f64,
}

impl FluctuationReport {
    pub fn passes(&self, sigmas: f64) -> bool {
        let ok = |r: f64, se: f64| r.abs() <= sigmas * se + self.tolerance;
        ok(self.residual, self.stderr)
            && ok(self.thermal.residual, self.thermal.stderr)
            && ok(self.disorder.residual, self.disorder.stderr)
    }
}

// Row layout of the per-sample quantities.
const L: usize = 0;
const L2: usize = 1;
const LSQ: usize = 2;
const Q: usize = 3;
const Q2: usize = 4;
const QSQ: usize = 5;
const A: usize = 6;
const B: usize = 7;
const C: usize = 8;
const D: usize = 9;
const E: usize = 10;

pub fn fluctuation_identity_check(
    point: &PathPoint,
    prior: &Prior,
    method: &DisorderMethod,
) -> Result<FluctuationReport> {
    let eps = point.effective_epsilon;
    ensure(
        eps > 0.0,
        "effective epsilon",
        eps,
        "must be positive for L",
    )?;
    let n = point.n();
    let nf = n as f64;
    let space = ConfigurationSpace::new(prior, n)?;
    let c = 0.5 / eps.sqrt();
    let avg = pooled_average(method, prior, n, BOTH, |s| {
        let state = point.pooled_state(s, &space)?;
        let l = state.expect(|x| l_unchecked(x, s, c));
        let l2 = state.expect(|x| l_unchecked(x, s, c).powi(2));
        let q = state.expect(|x| overlap_unchecked(x, &s.signal));
        let q2 = state.expect(|x| overlap_unchecked(x, &s.signal).powi(2));
        let mo = Moments::of(&state);
        let b = mo.mean_square();
        let e = (0..n).map(|i| mo.second[i * n + i]).sum::<f64>() / nf;
        Ok(vec![
            l,
            l2,
            l * l,
            q,
            q2,
            q * q,
            mo.pair_sum(|m, _, _| m * m),
            b,
            mo.pair_sum(|m, a, b| m * a * b),
            b * b,
            e,
        ])
    })?;
    let mean = |j: usize| avg.mean(j);
    let w = 1.0 / (4.0 * nf * eps);

    let lhs = mean(L2) - mean(L).powi(2);
    let rhs_terms = FluctuationTerms {
        overlap_variance: 0.25 * (mean(Q2) - mean(Q).powi(2)),
        thermal_overlap: 0.5 * (mean(Q2) - mean(QSQ)),
        side_channel: prior.moment(2) * w,
    };
    let residual = lhs - rhs_terms.sum();
    // Linearized residuals give the delta-method errors.
    let (lm, qm, bm) = (mean(L), mean(Q), mean(B));
    let stderr =
        avg.stderr_of(|r| r[L2] - 2.0 * lm * r[L] - 0.75 * r[Q2] + 0.5 * qm * r[Q] + 0.5 * r[QSQ]);

    let thermal_lhs = mean(L2) - mean(LSQ);
    let thermal_rhs = 0.5 * (mean(A) - 2.0 * mean(C) + mean(D)) + w * (mean(E) - mean(B));
    let thermal = SplitPart {
        lhs: thermal_lhs,
        rhs: thermal_rhs,
        residual: thermal_lhs - thermal_rhs,
        stderr: avg
            .stderr_of(|r| r[L2] - r[LSQ] - 0.5 * (r[A] - 2.0 * r[C] + r[D]) - w * (r[E] - r[B])),
    };
    let disorder_lhs = mean(LSQ) - lm * lm;
    let disorder_rhs = 0.25 * (mean(A) - bm * bm) + 0.5 * (mean(C) - mean(D)) + w * bm;
    let disorder = SplitPart {
        lhs: disorder_lhs,
        rhs: disorder_rhs,
        residual: disorder_lhs - disorder_rhs,
        stderr: avg.stderr_of(|r| {
            r[LSQ] - 2.0 * lm * r[L] - 0.25 * r[A] + (0.5 * bm - w) * r[B] - 0.5 * r[C] + 0.5 * r[D]
        }),
    };
    Ok(FluctuationReport {
        lhs,
        rhs_terms,
        residual,
        stderr,
        thermal,
        disorder,
        tolerance: if method.is_exact() { 1e-6 } else { 0.0 },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfilePoint {
    pub n: usize,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    pub points: Vec<ProfilePoint>,
    /// Slope of `ln value` against `ln n`.
    pub slope: f64,
}

impl Profile {
    fn from_points(points: Vec<ProfilePoint>) -> Self {
        let slope = if points.len() >= 2 && points.iter().all(|p| p.value > 0.0) {
            let x: Vec<f64> = points.iter().map(|p| p.n as f64).collect();
            let y: Vec<f64> = points.iter().map(|p| p.value).collect();
            log_log_slope(&x, &y)
        } else {
            f64::NAN
        };
        Self { points, slope }
    }

    /// Each value is below its predecessor up to `sigmas` combined errors.
    pub fn is_decreasing(&self, sigmas: f64) -> bool {
        self.points.windows(2).all(|w| {
            w[1].value < w[0].value + sigmas * (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationProfile {
    /// Constant trial parameter, the minimizer of `f_RS`.
    pub m: f64,
    pub grid: Vec<(usize, f64)>,
    pub profile: Profile,
}

/// `E⟨(q − E⟨q⟩)²⟩` averaged over `k ∈ {1, ⌈K/2⌉, K}` and `t` in the default
/// grid, for each `n`.
#[allow(clippy::too_many_arguments)]
pub fn overlap_concentration_profile(
    prior: &Prior,
    n_list: &[usize],
    steps: usize,
    epsilon: f64,
    delta: f64,
    samples: usize,
    seed: u64,
    quad_order: usize,
) -> Result<ConcentrationProfile> {
    ensure(!n_list.is_empty(), "n list", 0.0, "must not be empty")?;
    let opts = SolverOptions {
        quad_order,
        ..SolverOptions::default()
    };
    let m_star = minimize_potential(&ModelSpec::Matrix { delta }, prior, &opts)?.m_star;
    let m = TrialParameters::constant(steps, m_star.min(prior.moment(2)))?;
    let mut ks = vec![1, steps.div_ceil(2), steps];
    ks.dedup();
    let mut points = Vec::with_capacity(n_list.len());
    let mut grid = Vec::new();
    for &n in n_list {
        let config = PathConfig::new(n, steps, epsilon, delta)?;
        grid.clear();
        let mut path = Vec::new();
        for &k in &ks {
            for &t in &config.t_grid {
                grid.push((k, t));
                path.push(PathPoint::new(&config, &m, k, t)?);
            }
        }
        let space = ConfigurationSpace::new(prior, n)?;
        let method = DisorderMethod::MonteCarlo { samples, seed };
        let avg = pooled_average(&method, prior, n, BOTH, |s| {
            let mut row = Vec::with_capacity(2 * path.len());
            for p in &path {
                let state = p.pooled_state(s, &space)?;
                row.push(state.expect(|x| overlap_unchecked(x, &s.signal)));
                row.push(state.expect(|x| overlap_unchecked(x, &s.signal).powi(2)));
            }
            Ok(row)
        })?;
        let g = path.len() as f64;
        let qm: Vec<f64> = (0..path.len()).map(|j| avg.mean(2 * j)).collect();
        let value = (0..path.len())
            .map(|j| avg.mean(2 * j + 1) - qm[j] * qm[j])
            .sum::<f64>()
            / g;
        let stderr = avg.stderr_of(|r| {
            (0..qm.len())
                .map(|j| r[2 * j + 1] - 2.0 * qm[j] * r[2 * j])
                .sum::<f64>()
                / g
        });
        points.push(ProfilePoint { n, value, stderr });
    }
    Ok(ConcentrationProfile {
        m: m_star,
        grid,
        profile: Profile::from_points(points),
    })
}

/// Sample variance of the per-sample free energy of the original model.
pub fn free_energy_variance_profile(
    model: &ModelSpec,
    prior: &Prior,
    n_list: &[usize],
    samples: usize,
    seed: u64,
) -> Result<Profile> {
    ensure(!n_list.is_empty(), "n list", 0.0, "must not be empty")?;
    let mut points = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let f = free_energy_samples(model, prior, n, 0.0, samples, seed)?;
        points.push(ProfilePoint {
            n,
            value: variance(&f),
            stderr: variance_stderr(&f),
        });
    }
    Ok(Profile::from_points(points))
}
