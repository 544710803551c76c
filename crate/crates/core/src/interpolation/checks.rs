//! Executable checks along the path: Gaussian stability, the derivative in
//! `t`, the sum rule, adaptive trial parameters and the weak `t`-dependence.
//!
//! The estimators other than the sum rule run on pooled samples, so all
//! points of one check share their disorder and finite differences cancel
//! most of the noise.

use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::{compile_path, interp_hamiltonian, PathConfig, PathPoint, TrialParameters};
use crate::error::{ensure, Error, Result};
use crate::gibbs::disorder::{
    monte_carlo_rows, pooled_average, Averages, DisorderMethod, NoiseDims,
};
use crate::gibbs::sample::{sample_rng, QuenchedSample};
use crate::gibbs::state::{overlap_unchecked, ConfigurationSpace, GibbsState};
use crate::gibbs::Estimate;
use crate::prior::Prior;
use crate::quadrature::GaussLegendre;
use crate::rs_potential::{rs_potential, v_k_variance};
use crate::stats::{log_log_slope, mean, stderr, variance};

const BOTH: NoiseDims = NoiseDims {
    pair: true,
    field: true,
};

fn overlap_moments(state: &GibbsState, signal: &[f64]) -> (f64, f64) {
    let q = state.expect(|x| overlap_unchecked(x, signal));
    let q2 = state.expect(|x| overlap_unchecked(x, signal).powi(2));
    (q, q2)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub variance: f64,
    pub band: [f64; 2],
    /// `E[v⁴]/Var²`, which is 3 for a Gaussian.
    pub fourth_moment_ratio: f64,
    pub fourth_moment_stderr: f64,
    pub pass: bool,
}

/// Unit-norm weights `√(m_k / (K·mean(m)))`.
pub fn stability_weights(m: &TrialParameters) -> Result<Vec<f64>> {
    let mean = m.mean();
    ensure(mean > 0.0, "m", mean, "weights need a positive mean")?;
    let k = m.len() as f64;
    Ok(m.values().iter().map(|v| (v / (k * mean)).sqrt()).collect())
}

/// Empirical law of `Σ_k w_k z_k`; `w_k = 1/√K` when no weights are given.
pub fn gaussian_stability_check(
    steps: usize,
    samples: usize,
    seed: u64,
    weights: Option<&[f64]>,
) -> Result<StabilityReport> {
    ensure(steps >= 1, "K", steps as f64, "must be at least 1")?;
    let w: Vec<f64> = match weights {
        Some(w) => {
            if w.len() != steps {
                return Err(Error::DimensionMismatch {
                    expected: steps,
                    found: w.len(),
                });
            }
            let norm: f64 = w.iter().map(|v| v * v).sum();
            ensure(
                (norm - 1.0).abs() < 1e-9,
                "weights",
                norm,
                "squared weights must sum to 1",
            )?;
            w.to_vec()
        }
        None => vec![1.0 / (steps as f64).sqrt(); steps],
    };
    let rows = monte_carlo_rows(samples, |i| {
        let mut rng = sample_rng(seed, i);
        let v: f64 = w
            .iter()
            .map(|wk| {
                let z: f64 = StandardNormal.sample(&mut rng);
                wk * z
            })
            .sum();
        Ok(vec![v])
    })?;
    let v: Vec<f64> = rows.into_iter().map(|r| r[0]).collect();
    let var = variance(&v);
    let fourth: Vec<f64> = v.iter().map(|x| x.powi(4)).collect();
    let ratio = mean(&fourth) / (var * var);
    let ratio_se = stderr(&fourth) / (var * var);
    let half = 5.0 / (samples as f64).sqrt();
    let band = [1.0 - half, 1.0 + half];
    Ok(StabilityReport {
        variance: var,
        band,
        fourth_moment_ratio: ratio,
        fourth_moment_stderr: ratio_se,
        pass: var >= band[0] && var <= band[1] && (ratio - 3.0).abs() < 5.0 * ratio_se,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DfdtReport {
    pub fd_value: f64,
    pub formula_value: f64,
    pub residual: f64,
    pub stderr: f64,
    /// Allowed `O(1/(nK))` discrepancy.
    pub slack: f64,
}

impl DfdtReport {
    pub fn passes(&self, sigmas: f64) -> bool {
        self.residual.abs() <= sigmas * self.stderr + self.slack
    }
}

/// Central difference of `f_{k,t;ε}` in `t` against `(1/(4ΔK)) E⟨q² − 2m_k q⟩`.
pub fn dfdt_check(
    config: &PathConfig,
    m: &TrialParameters,
    k: usize,
    t: f64,
    prior: &Prior,
    method: &DisorderMethod,
    dt: f64,
) -> Result<DfdtReport> {
    ensure(dt > 0.0 && dt.is_finite(), "dt", dt, "must be positive")?;
    ensure(
        t - dt > 0.0 && t + dt < 1.0,
        "dt",
        dt,
        "t ± dt must stay inside (0, 1)",
    )?;
    let here = PathPoint::new(config, m, k, t)?;
    let lo = PathPoint::new(config, m, k, t - dt)?;
    let hi = PathPoint::new(config, m, k, t + dt)?;
    let mk = m.values()[k - 1];
    let scale = 1.0 / (4.0 * config.delta * config.steps as f64);
    let space = ConfigurationSpace::new(prior, config.n)?;
    let avg = pooled_average(method, prior, config.n, BOTH, |s| {
        let fd = (hi.pooled_state(s, &space)?.free_energy()
            - lo.pooled_state(s, &space)?.free_energy())
            / (2.0 * dt);
        let (q, q2) = overlap_moments(&here.pooled_state(s, &space)?, &s.signal);
        let formula = scale * (q2 - 2.0 * mk * q);
        Ok(vec![fd, formula, fd - formula])
    })?;
    Ok(DfdtReport {
        fd_value: avg.mean(0),
        formula_value: avg.mean(1),
        residual: avg.mean(2),
        stderr: avg.stderr(2),
        slack: 1.0 / (config.n * config.steps) as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SumRuleReport {
    /// `f_{1,0;ε}`.
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub stderr: f64,
    /// Allowed `O(1/n)` discrepancy, `2/n`.
    pub slack: f64,
    pub endpoint_difference: f64,
    pub f_rs: f64,
    pub variance_term: f64,
    /// `(1/(4ΔK)) Σ_k ∫ E⟨(q − m_k)²⟩ dt`.
    pub remainder: f64,
    pub remainder_stderr: f64,
    /// `lhs` minus the right-hand side without the remainder.
    pub bound_gap: f64,
    pub bound_gap_stderr: f64,
}

impl SumRuleReport {
    pub fn passes(&self, sigmas: f64) -> bool {
        self.residual.abs() <= sigmas * self.stderr + self.slack
    }

    pub fn remainder_nonnegative(&self, sigmas: f64) -> bool {
        self.remainder >= -sigmas * self.remainder_stderr
    }

    pub fn upper_bound_holds(&self, sigmas: f64) -> bool {
        self.bound_gap <= sigmas * self.bound_gap_stderr + self.slack
    }
}

/// Both sides of the sum rule on blockwise samples, with the `t`-integrals
/// done by Gauss–Legendre.
pub fn sum_rule_residual(
    config: &PathConfig,
    m: &TrialParameters,
    prior: &Prior,
    samples: usize,
    seed: u64,
    t_quad_order: usize,
    quad_order: usize,
) -> Result<SumRuleReport> {
    m.check_against(prior)?;
    let model = config.model();
    let k_steps = config.steps;
    let f_rs = rs_potential(&model, prior, m.mean(), quad_order)?;
    let variance_term = v_k_variance(m.values())? / (4.0 * config.delta);
    let rule = GaussLegendre::new(t_quad_order, 0.0, 1.0)?;
    let start = PathPoint::new(config, m, 1, 0.0)?;
    let end = PathPoint::new(config, m, k_steps, 1.0)?;
    let end_plain = end.without_perturbation();
    let mut grid = Vec::with_capacity(k_steps * rule.nodes().len());
    for k in 1..=k_steps {
        for (&t, &w) in rule.nodes().iter().zip(rule.weights()) {
            grid.push((PathPoint::new(config, m, k, t)?, m.values()[k - 1], w));
        }
    }
    let scale = 1.0 / (4.0 * config.delta * k_steps as f64);
    let space = ConfigurationSpace::new(prior, config.n)?;
    let rows = monte_carlo_rows(samples, |i| {
        let sample = QuenchedSample::generate(&model, prior, config.n, k_steps, seed, i)?;
        let fe = |p: &PathPoint| -> Result<f64> {
            Ok(compile_path(p, m, &sample)?.gibbs(&space)?.free_energy())
        };
        let lhs = fe(&start)?;
        let diff = fe(&end)? - fe(&end_plain)?;
        let mut remainder = 0.0;
        for (p, mk, w) in &grid {
            let (q, q2) =
                overlap_moments(&compile_path(p, m, &sample)?.gibbs(&space)?, &sample.signal);
            remainder += w * (q2 - 2.0 * mk * q + mk * mk);
        }
        remainder *= scale;
        let gap = lhs - (diff + f_rs + variance_term);
        Ok(vec![lhs, diff, remainder, gap + remainder, gap])
    })?;
    let avg = Averages::from_rows(rows);
    let lhs = avg.mean(0);
    let residual = avg.mean(3);
    Ok(SumRuleReport {
        lhs,
        rhs: lhs - residual,
        residual,
        stderr: avg.stderr(3),
        slack: 2.0 / config.n as f64,
        endpoint_difference: avg.mean(1),
        f_rs,
        variance_term,
        remainder: avg.mean(2),
        remainder_stderr: avg.stderr(2),
        bound_gap: avg.mean(4),
        bound_gap_stderr: avg.stderr(4),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptedParameters {
    pub m: TrialParameters,
    /// Monte Carlo error of each `m_k` before clamping.
    pub stderr: Vec<f64>,
}

/// `m_k = E⟨q⟩_{k,0;ε}`, fixed in order `k = 1..K` and clamped to
/// `[0, E[S²]]`.
pub fn adapt_parameters(
    config: &PathConfig,
    prior: &Prior,
    samples: usize,
    seed: u64,
) -> Result<AdaptedParameters> {
    let m2 = prior.moment(2);
    let space = ConfigurationSpace::new(prior, config.n)?;
    let method = DisorderMethod::MonteCarlo { samples, seed };
    let mut values = vec![0.0; config.steps];
    let mut errors = vec![0.0; config.steps];
    // Sequential on purpose: step k uses m_1..m_{k-1}.
    for k in 1..=config.steps {
        let partial = TrialParameters::new(values.clone())?;
        let point = PathPoint::new(config, &partial, k, 0.0)?;
        let avg = pooled_average(&method, prior, config.n, BOTH, |s| {
            Ok(vec![
                overlap_moments(&point.pooled_state(s, &space)?, &s.signal).0,
            ])
        })?;
        values[k - 1] = avg.mean(0).clamp(0.0, m2);
        errors[k - 1] = avg.stderr(0);
    }
    Ok(AdaptedParameters {
        m: TrialParameters::new(values)?,
        stderr: errors,
    })
}

/// `E⟨q⟩_{k,t;ε} − E⟨q⟩_{k,0;ε}` on common disorder.
pub fn t_dependence_gap(
    config: &PathConfig,
    m: &TrialParameters,
    k: usize,
    t: f64,
    prior: &Prior,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    let at_t = PathPoint::new(config, m, k, t)?;
    let at_0 = PathPoint::new(config, m, k, 0.0)?;
    let space = ConfigurationSpace::new(prior, config.n)?;
    let method = DisorderMethod::MonteCarlo { samples, seed };
    let avg = pooled_average(&method, prior, config.n, BOTH, |s| {
        let a = overlap_moments(&at_t.pooled_state(s, &space)?, &s.signal).0;
        let b = overlap_moments(&at_0.pooled_state(s, &space)?, &s.signal).0;
        Ok(vec![a - b])
    })?;
    Ok(Estimate {
        mean: avg.mean(0),
        stderr: avg.stderr(0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapPoint {
    pub steps: usize,
    pub gap: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapScaling {
    pub n: usize,
    pub points: Vec<GapPoint>,
    /// Slope of `ln |gap|` against `ln K`.
    pub slope: f64,
}

/// Largest acceptable log-log slope of the `t`-gap in `K`.
pub const GAP_SLOPE_MAX: f64 = -0.5;

impl GapScaling {
    pub fn passes(&self) -> bool {
        self.slope <= GAP_SLOPE_MAX
    }
}

/// Gap at `k = 1` for each `K`, with constant trial parameters.
#[allow(clippy::too_many_arguments)]
pub fn t_gap_scaling(
    n: usize,
    steps: &[usize],
    epsilon: f64,
    delta: f64,
    m_value: f64,
    t: f64,
    prior: &Prior,
    samples: usize,
    seed: u64,
) -> Result<GapScaling> {
    ensure(
        steps.len() >= 2,
        "K list",
        steps.len() as f64,
        "needs at least two values",
    )?;
    let mut points = Vec::with_capacity(steps.len());
    for &k_steps in steps {
        ensure(k_steps >= n, "K", k_steps as f64, "must be at least n")?;
        let config = PathConfig::new(n, k_steps, epsilon, delta)?;
        let m = TrialParameters::constant(k_steps, m_value)?;
        let gap = t_dependence_gap(&config, &m, 1, t, prior, samples, seed)?;
        points.push(GapPoint {
            steps: k_steps,
            gap: gap.mean.abs(),
            stderr: gap.stderr,
        });
    }
    let x: Vec<f64> = points.iter().map(|p| p.steps as f64).collect();
    let y: Vec<f64> = points.iter().map(|p| p.gap).collect();
    Ok(GapScaling {
        n,
        slope: log_log_slope(&x, &y),
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbationBound {
    /// `f_{1,0;ε} − f_{1,0;0}`.
    pub difference: f64,
    pub stderr: f64,
    /// `ε·E[S²]/2`.
    pub bound: f64,
}

impl PerturbationBound {
    pub fn passes(&self, sigmas: f64) -> bool {
        self.difference.abs() <= self.bound + sigmas * self.stderr
    }
}

/// The side channel moves the free energy by at most `ε·E[S²]/2`.
pub fn perturbation_bound_check(
    config: &PathConfig,
    prior: &Prior,
    samples: usize,
    seed: u64,
) -> Result<PerturbationBound> {
    let m = TrialParameters::constant(config.steps, 0.0)?;
    let with = PathPoint::new(config, &m, 1, 0.0)?;
    let without = with.without_perturbation();
    let space = ConfigurationSpace::new(prior, config.n)?;
    let method = DisorderMethod::MonteCarlo { samples, seed };
    let avg = pooled_average(&method, prior, config.n, BOTH, |s| {
        Ok(vec![
            with.pooled_state(s, &space)?.free_energy()
                - without.pooled_state(s, &space)?.free_energy(),
        ])
    })?;
    Ok(PerturbationBound {
        difference: avg.mean(0),
        stderr: avg.stderr(0),
        bound: config.epsilon * prior.moment(2) / 2.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TelescopingReport {
    pub max_difference: f64,
    pub comparisons: usize,
}

impl TelescopingReport {
    pub fn passes(&self) -> bool {
        self.max_difference < 1e-12
    }
}

/// Largest `|H_{k,1;ε}(x) − H_{k+1,0;ε}(x)|` over every configuration, every
/// `k < K` and `samples` disorder draws.
pub fn telescoping_check(
    config: &PathConfig,
    m: &TrialParameters,
    prior: &Prior,
    samples: usize,
    seed: u64,
) -> Result<TelescopingReport> {
    let space = ConfigurationSpace::new(prior, config.n)?;
    let model = config.model();
    let mut pairs = Vec::new();
    for k in 1..config.steps {
        pairs.push((
            PathPoint::new(config, m, k, 1.0)?,
            PathPoint::new(config, m, k + 1, 0.0)?,
        ));
    }
    let rows = monte_carlo_rows(samples.max(2), |i| {
        let sample = QuenchedSample::generate(&model, prior, config.n, config.steps, seed, i)?;
        let mut worst = 0.0f64;
        for (a, b) in &pairs {
            for x in space.iter() {
                let d =
                    interp_hamiltonian(a, m, x, &sample)? - interp_hamiltonian(b, m, x, &sample)?;
                worst = worst.max(d.abs());
            }
        }
        Ok(vec![worst])
    })?;
    Ok(TelescopingReport {
        max_difference: rows.iter().map(|r| r[0]).fold(0.0, f64::max),
        comparisons: rows.len() * pairs.len() * space.len(),
    })
}
