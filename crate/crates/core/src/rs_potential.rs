//! Replica-symmetric potentials, their minimizers and the derived curves.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::prior::Prior;
use crate::quadrature::GaussHermite;
use crate::scalar_channel::{
    f_den_at, fden_snr_derivative, i_den_at, iden_snr_derivative, NoiseLevel, DEFAULT_QUAD_ORDER,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Matrix { delta: f64 },
    Tensor { p: u32, delta: f64 },
    Rle { alpha: f64, delta: f64 },
}

impl ModelSpec {
    pub fn matrix(delta: f64) -> Result<Self> {
        Self::Matrix { delta }.validated()
    }

    pub fn tensor(p: u32, delta: f64) -> Result<Self> {
        Self::Tensor { p, delta }.validated()
    }

    pub fn rle(alpha: f64, delta: f64) -> Result<Self> {
        Self::Rle { alpha, delta }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        let delta = self.delta();
        ensure(
            delta > 0.0 && delta.is_finite(),
            "delta",
            delta,
            "must be positive and finite",
        )?;
        match self {
            ModelSpec::Tensor { p, .. } => {
                ensure(p >= 2, "p", p as f64, "tensor order must be at least 2")?
            }
            ModelSpec::Rle { alpha, .. } => ensure(
                alpha > 0.0 && alpha.is_finite(),
                "alpha",
                alpha,
                "must be positive and finite",
            )?,
            ModelSpec::Matrix { .. } => {}
        }
        Ok(self)
    }

    pub fn delta(&self) -> f64 {
        match *self {
            ModelSpec::Matrix { delta }
            | ModelSpec::Tensor { delta, .. }
            | ModelSpec::Rle { delta, .. } => delta,
        }
    }

    /// Same model at another noise variance.
    pub fn with_delta(&self, delta: f64) -> Self {
        match *self {
            ModelSpec::Matrix { .. } => ModelSpec::Matrix { delta },
            ModelSpec::Tensor { p, .. } => ModelSpec::Tensor { p, delta },
            ModelSpec::Rle { alpha, .. } => ModelSpec::Rle { alpha, delta },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Matrix { .. } => "matrix",
            ModelSpec::Tensor { .. } => "tensor",
            ModelSpec::Rle { .. } => "rle",
        }
    }
}

/// `Σ(m)⁻²` for the model. For the linear-estimation model `m` is the error `E`.
pub fn snr_of_m(model: &ModelSpec, m: f64) -> f64 {
    match *model {
        ModelSpec::Matrix { delta } => m / delta,
        ModelSpec::Tensor { p, delta } => m.powi(p as i32 - 1) / delta,
        ModelSpec::Rle { alpha, delta } => alpha / (delta + m),
    }
}

pub fn sigma_of_m(model: &ModelSpec, m: f64) -> NoiseLevel {
    NoiseLevel::from_snr(snr_of_m(model, m))
}

/// `ψ(E;Δ) = (α/2)(ln(1 + E/Δ) − E/(Δ + E))`.
pub fn psi(alpha: f64, delta: f64, e: f64) -> f64 {
    0.5 * alpha * ((e / delta).ln_1p() - e / (delta + e))
}

/// The potential as a function of `m` (or `E`), with memoized evaluations.
#[derive(Debug, Clone)]
pub struct PotentialEvaluator<'a> {
    model: ModelSpec,
    prior: &'a Prior,
    rule: Arc<GaussHermite>,
    cache: HashMap<u64, f64>,
}

impl<'a> PotentialEvaluator<'a> {
    pub fn new(model: ModelSpec, prior: &'a Prior, quad_order: usize) -> Result<Self> {
        ensure(
            quad_order >= 2,
            "quad_order",
            quad_order as f64,
            "must be at least 2",
        )?;
        Ok(Self {
            model: model.validated()?,
            prior,
            rule: GaussHermite::cached(quad_order)?,
            cache: HashMap::new(),
        })
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn value(&mut self, m: f64) -> Result<f64> {
        ensure(
            m >= 0.0 && m.is_finite(),
            "m",
            m,
            "must be finite and nonnegative",
        )?;
        if let Some(&v) = self.cache.get(&m.to_bits()) {
            return Ok(v);
        }
        let v = potential_at(&self.model, self.prior, m, &self.rule)?;
        self.cache.insert(m.to_bits(), v);
        Ok(v)
    }
}

fn potential_at(model: &ModelSpec, prior: &Prior, m: f64, rule: &GaussHermite) -> Result<f64> {
    let snr = snr_of_m(model, m);
    Ok(match *model {
        ModelSpec::Matrix { delta } => m * m / (4.0 * delta) + f_den_at(prior, snr, rule)?,
        ModelSpec::Tensor { p, delta } => {
            (p - 1) as f64 * m.powi(p as i32) / ((2 * p) as f64 * delta)
                + f_den_at(prior, snr, rule)?
        }
        ModelSpec::Rle { alpha, delta } => psi(alpha, delta, m) + i_den_at(prior, snr, rule)?,
    })
}

pub fn rs_potential(model: &ModelSpec, prior: &Prior, m: f64, quad_order: usize) -> Result<f64> {
    PotentialEvaluator::new(*model, prior, quad_order)?.value(m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub quad_order: usize,
    /// Grid points on the search interval before golden-section refinement.
    pub grid: usize,
    /// Golden-section tolerance in `m`.
    pub tol: f64,
    /// Upper end of the search interval; defaults to the prior's second moment.
    pub upper: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            quad_order: DEFAULT_QUAD_ORDER,
            grid: 64,
            tol: 1e-8,
            upper: None,
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        ensure(
            self.grid >= 64,
            "grid",
            self.grid as f64,
            "must be at least 64",
        )?;
        ensure(self.tol > 0.0, "tol", self.tol, "must be positive")?;
        if let Some(u) = self.upper {
            ensure(
                u >= 0.0 && u.is_finite(),
                "upper",
                u,
                "must be finite and nonnegative",
            )?;
        }
        Ok(())
    }

    fn upper(&self, prior: &Prior) -> f64 {
        self.upper.unwrap_or_else(|| prior.moment(2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Minimum {
    pub m_star: f64,
    pub f_rs: f64,
}

/// Global minimizer on `[0, upper]`: grid scan, then golden section on the
/// bracket around the best grid point. Ties go to the smaller `m`.
pub fn minimize_potential(
    model: &ModelSpec,
    prior: &Prior,
    opts: &SolverOptions,
) -> Result<Minimum> {
    opts.validate()?;
    let mut eval = PotentialEvaluator::new(*model, prior, opts.quad_order)?;
    minimize_with(&mut eval, opts.upper(prior), opts.grid, opts.tol)
}

fn minimize_with(
    eval: &mut PotentialEvaluator<'_>,
    upper: f64,
    grid: usize,
    tol: f64,
) -> Result<Minimum> {
    let f0 = eval.value(0.0)?;
    if upper == 0.0 {
        return Ok(Minimum {
            m_star: 0.0,
            f_rs: f0,
        });
    }
    let h = upper / (grid - 1) as f64;
    let point = |i: usize| if i == grid - 1 { upper } else { i as f64 * h };
    let mut best = (0usize, f0);
    for i in 1..grid {
        let v = eval.value(point(i))?;
        if v < best.1 {
            best = (i, v);
        }
    }
    let lo = point(best.0.saturating_sub(1));
    let hi = point((best.0 + 1).min(grid - 1));
    let (gm, gv) = golden_section(eval, lo, hi, tol)?;
    let mut result = Minimum {
        m_star: point(best.0),
        f_rs: best.1,
    };
    if gv < result.f_rs || (gv == result.f_rs && gm < result.m_star) {
        result = Minimum {
            m_star: gm,
            f_rs: gv,
        };
    }
    // A gain over f(0) at the rounding level is a tie, and ties go to 0.
    if result.m_star > 0.0 && f0 - result.f_rs <= 64.0 * f64::EPSILON * (1.0 + f0.abs()) {
        result = Minimum {
            m_star: 0.0,
            f_rs: f0,
        };
    }
    Ok(result)
}

fn golden_section(
    eval: &mut PotentialEvaluator<'_>,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = eval.value(c)?;
    let mut fd = eval.value(d)?;
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = eval.value(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = eval.value(d)?;
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

/// Local minima of the potential on a uniform grid over `[0, upper]`,
/// as `(m, value)` pairs. Endpoints count when they beat their neighbour.
pub fn grid_local_minima(
    model: &ModelSpec,
    prior: &Prior,
    upper: f64,
    points: usize,
    quad_order: usize,
) -> Result<Vec<(f64, f64)>> {
    ensure(points >= 3, "points", points as f64, "must be at least 3")?;
    let mut eval = PotentialEvaluator::new(*model, prior, quad_order)?;
    let ms: Vec<f64> = (0..points)
        .map(|i| upper * i as f64 / (points - 1) as f64)
        .collect();
    let vs = ms
        .iter()
        .map(|&m| eval.value(m))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for i in 0..points {
        let left = i == 0 || vs[i] <= vs[i - 1];
        let right = i == points - 1 || vs[i] < vs[i + 1];
        if left && right {
            out.push((ms[i], vs[i]));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPoint {
    pub m_fix: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Iterates the stationarity map of the potential from `m0`.
pub fn fixed_point(
    model: &ModelSpec,
    prior: &Prior,
    m0: f64,
    quad_order: usize,
    max_iter: usize,
    tol: f64,
) -> Result<FixedPoint> {
    let model = model.validated()?;
    ensure(
        m0 >= 0.0 && m0.is_finite(),
        "m0",
        m0,
        "must be finite and nonnegative",
    )?;
    let mut m = m0;
    for it in 1..=max_iter {
        let next = fixed_point_map(&model, prior, m, quad_order)?;
        let moved = (next - m).abs();
        m = next;
        if moved < tol {
            return Ok(FixedPoint {
                m_fix: m,
                iterations: it,
                converged: true,
            });
        }
    }
    Ok(FixedPoint {
        m_fix: m,
        iterations: max_iter,
        converged: false,
    })
}

/// One application of the stationarity map.
pub fn fixed_point_map(model: &ModelSpec, prior: &Prior, m: f64, quad_order: usize) -> Result<f64> {
    let snr = snr_of_m(model, m);
    Ok(match model {
        ModelSpec::Rle { .. } => 2.0 * iden_snr_derivative(prior, snr, quad_order, None)?,
        _ => (-2.0 * fden_snr_derivative(prior, snr, quad_order, None)?).max(0.0),
    })
}

/// Converts a free energy into mutual information per component.
pub fn mutual_information(model: &ModelSpec, prior: &Prior, f_value: f64) -> f64 {
    let m2 = prior.moment(2);
    match *model {
        ModelSpec::Matrix { delta } => f_value + m2 * m2 / (4.0 * delta),
        ModelSpec::Tensor { p, delta } => f_value + m2.powi(p as i32) / ((2 * p) as f64 * delta),
        ModelSpec::Rle { .. } => f_value,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RsCurvePoint {
    pub delta: f64,
    pub m_star: f64,
    pub f_rs: f64,
    pub mutual_info: f64,
}

pub fn rs_curve_point(
    model: &ModelSpec,
    prior: &Prior,
    opts: &SolverOptions,
) -> Result<RsCurvePoint> {
    let min = minimize_potential(model, prior, opts)?;
    Ok(RsCurvePoint {
        delta: model.delta(),
        m_star: min.m_star,
        f_rs: min.f_rs,
        mutual_info: mutual_information(model, prior, min.f_rs),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionKind {
    FirstOrder,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transition {
    pub delta_c: f64,
    pub kind: TransitionKind,
    pub bracket: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionScan {
    pub points: Vec<RsCurvePoint>,
    pub transition: Option<Transition>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    pub solver: SolverOptions,
    /// Jump in `m*` between neighbouring `Δ`, relative to the second moment,
    /// that signals a discontinuity.
    pub jump_fraction: f64,
    /// Level, relative to the second moment, below which `m*` counts as zero.
    pub small_fraction: f64,
    pub refine_tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            jump_fraction: 0.05,
            small_fraction: 1e-3,
            refine_tol: 1e-4,
        }
    }
}

/// Sweeps `Δ` over `[delta_min, delta_max]` and locates the first transition.
pub fn scan_and_locate_transition(
    model: &ModelSpec,
    prior: &Prior,
    delta_min: f64,
    delta_max: f64,
    steps: usize,
    opts: &ScanOptions,
) -> Result<TransitionScan> {
    ensure(delta_min > 0.0, "delta_min", delta_min, "must be positive")?;
    ensure(
        delta_max > delta_min,
        "delta_max",
        delta_max,
        "must exceed delta_min",
    )?;
    ensure(steps >= 8, "steps", steps as f64, "must be at least 8")?;
    ensure(
        opts.refine_tol > 0.0,
        "refine_tol",
        opts.refine_tol,
        "must be positive",
    )?;
    model.validated()?;
    let deltas: Vec<f64> = (0..steps)
        .map(|i| {
            if i == steps - 1 {
                delta_max
            } else {
                delta_min + (delta_max - delta_min) * i as f64 / (steps - 1) as f64
            }
        })
        .collect();
    let points = deltas
        .par_iter()
        .map(|&d| rs_curve_point(&model.with_delta(d), prior, &opts.solver))
        .collect::<Result<Vec<_>>>()?;

    let m2 = prior.moment(2);
    let jump = opts.jump_fraction * m2;
    let small = opts.small_fraction * m2;
    let m_at =
        |d: f64| minimize_potential(&model.with_delta(d), prior, &opts.solver).map(|r| r.m_star);

    let mut transition = None;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if (a.m_star - b.m_star).abs() > jump {
            // A genuine discontinuity survives refinement; a steep but
            // continuous stretch does not.
            let (mut lo, mut hi) = (a.delta, b.delta);
            let (mut m_lo, mut m_hi) = (a.m_star, b.m_star);
            while hi - lo > opts.refine_tol {
                let mid = 0.5 * (lo + hi);
                let mm = m_at(mid)?;
                if (mm - m_lo).abs() <= (mm - m_hi).abs() {
                    lo = mid;
                    m_lo = mm;
                } else {
                    hi = mid;
                    m_hi = mm;
                }
            }
            if (m_lo - m_hi).abs() > jump {
                transition = Some(Transition {
                    delta_c: 0.5 * (lo + hi),
                    kind: TransitionKind::FirstOrder,
                    bracket: [lo, hi],
                });
                break;
            }
        }
        if (a.m_star > small) != (b.m_star > small) {
            let lo_is_large = a.m_star > small;
            let (mut lo, mut hi) = (a.delta, b.delta);
            while hi - lo > opts.refine_tol {
                let mid = 0.5 * (lo + hi);
                if (m_at(mid)? > small) == lo_is_large {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            transition = Some(Transition {
                delta_c: 0.5 * (lo + hi),
                kind: TransitionKind::Continuous,
                bracket: [lo, hi],
            });
            break;
        }
    }
    Ok(TransitionScan { points, transition })
}

/// `V_K = mean(m²) − mean(m)²`.
pub fn v_k_variance(m_list: &[f64]) -> Result<f64> {
    check_list(m_list)?;
    let k = m_list.len() as f64;
    let mean: f64 = m_list.iter().sum::<f64>() / k;
    let sq: f64 = m_list.iter().map(|m| m * m).sum::<f64>() / k;
    Ok(sq - mean * mean)
}

/// `V_{K,p} = mean(m^p) − mean(m^{p−1})^{p/(p−1)}`.
pub fn v_kp_variance(m_list: &[f64], p: u32) -> Result<f64> {
    check_list(m_list)?;
    ensure(p >= 2, "p", p as f64, "tensor order must be at least 2")?;
    let k = m_list.len() as f64;
    let a: f64 = m_list.iter().map(|m| m.powi(p as i32)).sum::<f64>() / k;
    let b: f64 = m_list.iter().map(|m| m.powi(p as i32 - 1)).sum::<f64>() / k;
    Ok(a - b.powf(p as f64 / (p - 1) as f64))
}

fn check_list(m_list: &[f64]) -> Result<()> {
    if m_list.is_empty() {
        return Err(Error::InvalidParameter {
            name: "m_list",
            value: 0.0,
            reason: "must be nonempty",
        });
    }
    for &m in m_list {
        ensure(
            m >= 0.0 && m.is_finite(),
            "m",
            m,
            "entries must be finite and nonnegative",
        )?;
    }
    Ok(())
}

/// Potential of a vector of trial parameters.
pub fn f_tilde_rs(
    model: &ModelSpec,
    prior: &Prior,
    m_list: &[f64],
    quad_order: usize,
) -> Result<f64> {
    check_list(m_list)?;
    let rule = GaussHermite::cached(quad_order)?;
    f_tilde_with(model, prior, m_list, &rule)
}

fn f_tilde_with(
    model: &ModelSpec,
    prior: &Prior,
    m_list: &[f64],
    rule: &GaussHermite,
) -> Result<f64> {
    let k = m_list.len() as f64;
    match *model {
        ModelSpec::Matrix { delta } => {
            let sq: f64 = m_list.iter().map(|m| m * m).sum();
            let mean = m_list.iter().sum::<f64>() / k;
            Ok(sq / (4.0 * delta * k) + f_den_at(prior, mean / delta, rule)?)
        }
        ModelSpec::Rle { alpha, delta } => {
            let snr = m_list.iter().map(|&e| alpha / (delta + e)).sum::<f64>() / k;
            let psi_mean = m_list.iter().map(|&e| psi(alpha, delta, e)).sum::<f64>() / k;
            Ok(i_den_at(prior, snr, rule)? + psi_mean)
        }
        ModelSpec::Tensor { .. } => Err(Error::Unsupported(
            "vector potential is defined for matrix and rle models only",
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VectorMinimum {
    pub m: Vec<f64>,
    pub value: f64,
}

/// Brute-force minimum of the vector potential over `[0, upper]^K`: a full
/// lattice of `grid^K` points, then a compass search from the best one.
pub fn minimize_f_tilde_grid(
    model: &ModelSpec,
    prior: &Prior,
    k: usize,
    grid: usize,
    upper: Option<f64>,
    quad_order: usize,
) -> Result<VectorMinimum> {
    ensure(k >= 1, "K", k as f64, "must be at least 1")?;
    ensure(grid >= 2, "grid", grid as f64, "must be at least 2")?;
    let total = (grid as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    if total > 50_000_000 {
        return Err(Error::EnumerationCap {
            configurations: total,
            cap: 50_000_000,
        });
    }
    let upper = upper.unwrap_or_else(|| prior.moment(2));
    let rule = GaussHermite::cached(quad_order)?;
    let axis: Vec<f64> = (0..grid)
        .map(|i| upper * i as f64 / (grid - 1) as f64)
        .collect();
    let values = (0..total as usize)
        .into_par_iter()
        .map(|flat| {
            let m = lattice_point(flat, k, &axis);
            f_tilde_with(model, prior, &m, &rule)
        })
        .collect::<Result<Vec<_>>>()?;
    let (best, &value) =
        values.iter().enumerate().fold(
            (0, &f64::INFINITY),
            |acc, (i, v)| if *v < *acc.1 { (i, v) } else { acc },
        );
    let mut m = lattice_point(best, k, &axis);
    let mut value = value;
    let mut step = upper / (grid - 1) as f64;
    while step > 1e-9 {
        let mut improved = false;
        for i in 0..k {
            for dir in [-1.0, 1.0] {
                let mut trial = m.clone();
                trial[i] = (trial[i] + dir * step).clamp(0.0, upper);
                let v = f_tilde_with(model, prior, &trial, &rule)?;
                if v < value {
                    m = trial;
                    value = v;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(VectorMinimum { m, value })
}

fn lattice_point(mut flat: usize, k: usize, axis: &[f64]) -> Vec<f64> {
    let mut m = vec![0.0; k];
    for slot in m.iter_mut() {
        *slot = axis[flat % axis.len()];
        flat /= axis.len();
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn three_atom() -> Prior {
        Prior::discrete(vec![-1.0, 0.0, 2.0], vec![0.3, 0.5, 0.2]).unwrap()
    }

    #[test]
    fn sigma_examples() {
        let m = ModelSpec::matrix(1.0).unwrap();
        assert_eq!(sigma_of_m(&m, 1.0), NoiseLevel::Finite(1.0));
        assert_eq!(sigma_of_m(&m, 4.0), NoiseLevel::Finite(0.5));
        assert_eq!(sigma_of_m(&m, 0.0), NoiseLevel::Infinite);
        let r = ModelSpec::rle(1.0, 1.0).unwrap();
        assert_eq!(snr_of_m(&r, 0.0), 1.0);
        assert_eq!(sigma_of_m(&r, 0.0), NoiseLevel::Finite(1.0));
        assert_eq!(
            sigma_of_m(&ModelSpec::tensor(3, 1.0).unwrap(), 0.0),
            NoiseLevel::Infinite
        );
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi(1.0, 1.0, 0.0), 0.0);
        let expect = (2f64.ln() - 0.5) / 2.0;
        assert!((psi(1.0, 1.0, 1.0) - expect).abs() < 1e-15);
        assert!((psi(2.0, 1.0, 1.0) - 2.0 * expect).abs() < 1e-15);
    }

    #[test]
    fn invalid_models() {
        assert!(ModelSpec::matrix(0.0).is_err());
        assert!(ModelSpec::tensor(1, 1.0).is_err());
        assert!(ModelSpec::rle(-1.0, 1.0).is_err());
    }

    #[test]
    fn potentials_vanish_at_origin() {
        for prior in [Prior::rademacher(), three_atom(), Prior::point_mass(0.0)] {
            for model in [
                ModelSpec::Matrix { delta: 0.7 },
                ModelSpec::Tensor { p: 3, delta: 0.7 },
            ] {
                assert_eq!(rs_potential(&model, &prior, 0.0, 80).unwrap(), 0.0);
            }
        }
        let rle = ModelSpec::Rle {
            alpha: 1.3,
            delta: 0.4,
        };
        assert_eq!(
            rs_potential(&rle, &Prior::point_mass(0.0), 0.0, 80).unwrap(),
            0.0
        );
    }

    #[test]
    fn tensor_of_order_two_is_the_matrix_model() {
        let prior = three_atom();
        let mut a = PotentialEvaluator::new(ModelSpec::Matrix { delta: 0.8 }, &prior, 80).unwrap();
        let mut b =
            PotentialEvaluator::new(ModelSpec::Tensor { p: 2, delta: 0.8 }, &prior, 80).unwrap();
        for i in 0..100 {
            let m = prior.moment(2) * i as f64 / 99.0;
            assert!((a.value(m).unwrap() - b.value(m).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn minimizer_above_threshold_is_zero() {
        let r = minimize_potential(
            &ModelSpec::Matrix { delta: 2.0 },
            &Prior::rademacher(),
            &SolverOptions::default(),
        )
        .unwrap();
        assert_eq!(r.m_star, 0.0);
        assert_eq!(r.f_rs, 0.0);
        let z = minimize_potential(
            &ModelSpec::Matrix { delta: 0.3 },
            &Prior::point_mass(0.0),
            &SolverOptions::default(),
        )
        .unwrap();
        assert_eq!((z.m_star, z.f_rs), (0.0, 0.0));
    }

    #[test]
    fn minimizer_at_low_noise_is_near_one() {
        let prior = Prior::rademacher();
        let model = ModelSpec::Matrix { delta: 0.1 };
        let r = minimize_potential(&model, &prior, &SolverOptions::default()).unwrap();
        assert!(r.m_star > 0.9, "{r:?}");
        let fp = fixed_point(&model, &prior, 1.0, 80, 1000, 1e-12).unwrap();
        assert!((fp.m_fix - r.m_star).abs() < 1e-5, "{fp:?} vs {r:?}");
    }

    #[test]
    fn minimum_is_a_true_minimum() {
        let prior = three_atom();
        for model in [
            ModelSpec::Matrix { delta: 0.5 },
            ModelSpec::Tensor { p: 3, delta: 0.3 },
            ModelSpec::Rle {
                alpha: 1.5,
                delta: 0.2,
            },
        ] {
            let opts = SolverOptions::default();
            let r = minimize_potential(&model, &prior, &opts).unwrap();
            assert_eq!(r.f_rs, rs_potential(&model, &prior, r.m_star, 80).unwrap());
            for dm in [-10.0 * opts.tol, 10.0 * opts.tol] {
                let m = (r.m_star + dm).clamp(0.0, prior.moment(2));
                assert!(rs_potential(&model, &prior, m, 80).unwrap() >= r.f_rs - 1e-9);
            }
        }
    }

    #[test]
    fn fixed_point_contracts_to_zero_above_threshold() {
        let fp = fixed_point(
            &ModelSpec::Matrix { delta: 2.0 },
            &Prior::rademacher(),
            0.5,
            80,
            1000,
            1e-12,
        )
        .unwrap();
        assert!(fp.converged);
        assert!(fp.m_fix.abs() < 1e-8, "{fp:?}");
        let z = fixed_point(
            &ModelSpec::Matrix { delta: 0.7 },
            &Prior::point_mass(0.0),
            0.4,
            80,
            10,
            1e-12,
        )
        .unwrap();
        assert_eq!(z.m_fix, 0.0);
        assert!(z.iterations <= 2);
    }

    fn gradient(model: &ModelSpec, prior: &Prior, m: f64) -> f64 {
        let h = 1e-5;
        (rs_potential(model, prior, m + h, 80).unwrap()
            - rs_potential(model, prior, m - h, 80).unwrap())
            / (2.0 * h)
    }

    #[test]
    fn fixed_points_are_stationary() {
        let prior = Prior::rademacher();
        let model = ModelSpec::Matrix { delta: 0.5 };
        let fp = fixed_point(&model, &prior, 1.0, 80, 2000, 1e-10).unwrap();
        assert!(fp.converged);
        assert!(gradient(&model, &prior, fp.m_fix).abs() < 1e-5);

        let tri = three_atom();
        let tensor = ModelSpec::Tensor { p: 3, delta: 0.3 };
        let fp = fixed_point(&tensor, &tri, tri.moment(2), 80, 2000, 1e-10).unwrap();
        assert!(fp.m_fix > 0.1);
        assert!(gradient(&tensor, &tri, fp.m_fix).abs() < 1e-5 * tri.moment(2));

        let rle = ModelSpec::Rle {
            alpha: 0.8,
            delta: 0.1,
        };
        let fp = fixed_point(&rle, &tri, tri.moment(2), 80, 5000, 1e-10).unwrap();
        assert!(fp.converged);
        assert!(fp.m_fix > 0.0);
        assert!(
            gradient(&rle, &tri, fp.m_fix).abs() < 1e-5 * tri.moment(2),
            "{fp:?}"
        );
    }

    #[test]
    fn mutual_information_examples() {
        let r = Prior::rademacher();
        assert!(
            (mutual_information(&ModelSpec::Matrix { delta: 2.0 }, &r, 0.0) - 0.125).abs() < 1e-15
        );
        assert!(
            (mutual_information(&ModelSpec::Tensor { p: 2, delta: 2.0 }, &r, 0.0) - 0.125).abs()
                < 1e-15
        );
        assert_eq!(
            mutual_information(
                &ModelSpec::Rle {
                    alpha: 1.0,
                    delta: 1.0
                },
                &r,
                0.3
            ),
            0.3
        );
    }

    #[test]
    fn continuous_transition_of_the_binary_matrix_model() {
        let scan = scan_and_locate_transition(
            &ModelSpec::Matrix { delta: 1.0 },
            &Prior::rademacher(),
            0.5,
            1.5,
            21,
            &ScanOptions::default(),
        )
        .unwrap();
        let t = scan.transition.expect("transition");
        assert_eq!(t.kind, TransitionKind::Continuous);
        assert!((t.delta_c - 1.0).abs() < 0.02, "{t:?}");
        assert_eq!(scan.points.len(), 21);
    }

    #[test]
    fn coarse_scan_does_not_mistake_a_steep_slope_for_a_jump() {
        let scan = scan_and_locate_transition(
            &ModelSpec::Matrix { delta: 1.0 },
            &Prior::rademacher(),
            0.2,
            1.5,
            9,
            &ScanOptions::default(),
        )
        .unwrap();
        assert_eq!(scan.transition.unwrap().kind, TransitionKind::Continuous);
    }

    #[test]
    fn trivial_prior_has_no_transition() {
        let scan = scan_and_locate_transition(
            &ModelSpec::Matrix { delta: 1.0 },
            &Prior::point_mass(0.0),
            0.5,
            1.5,
            8,
            &ScanOptions::default(),
        )
        .unwrap();
        assert!(scan.transition.is_none());
        assert!(scan.points.iter().all(|p| p.m_star == 0.0));
    }

    #[test]
    fn tensor_transition_is_first_order_with_coexisting_minima() {
        let prior = Prior::rademacher();
        let model = ModelSpec::Tensor { p: 3, delta: 0.5 };
        let opts = ScanOptions {
            refine_tol: 1e-6,
            ..ScanOptions::default()
        };
        let scan = scan_and_locate_transition(&model, &prior, 0.1, 1.0, 19, &opts).unwrap();
        let t = scan.transition.expect("transition");
        assert_eq!(t.kind, TransitionKind::FirstOrder);
        assert!(t.delta_c > 0.0 && t.delta_c < 1.0);
        let minima =
            grid_local_minima(&model.with_delta(t.delta_c), &prior, 1.0, 20001, 80).unwrap();
        assert!(minima.len() >= 2, "{minima:?}");
        let zero = minima[0];
        let other = minima
            .iter()
            .skip(1)
            .fold(minima[1], |a, &b| if b.1 < a.1 { b } else { a });
        assert_eq!(zero.0, 0.0);
        assert!(other.0 > 0.5);
        assert!((zero.1 - other.1).abs() < 1e-4, "{minima:?}");
    }

    #[test]
    fn variance_examples() {
        assert!(v_k_variance(&[0.3, 0.3, 0.3]).unwrap().abs() < 1e-16);
        assert!(v_kp_variance(&[0.3, 0.3, 0.3], 3).unwrap().abs() < 1e-15);
        assert_eq!(v_k_variance(&[0.0, 2.0]).unwrap(), 1.0);
        assert!((v_kp_variance(&[0.0, 2.0], 3).unwrap() - (4.0 - 2f64.powf(1.5))).abs() < 1e-12);
        assert!(v_k_variance(&[]).is_err());
        assert!(v_k_variance(&[-1.0]).is_err());
    }

    #[test]
    fn f_tilde_examples() {
        let prior = Prior::rademacher();
        let model = ModelSpec::Matrix { delta: 0.5 };
        assert_eq!(f_tilde_rs(&model, &prior, &[0.0, 0.0], 80).unwrap(), 0.0);
        for m in [0.0, 0.2, 0.9] {
            let v = f_tilde_rs(&model, &prior, &[m; 4], 80).unwrap();
            assert!((v - rs_potential(&model, &prior, m, 80).unwrap()).abs() < 1e-12);
        }
        let rle = ModelSpec::Rle {
            alpha: 2.0,
            delta: 0.5,
        };
        let v = f_tilde_rs(&rle, &prior, &[0.4; 3], 80).unwrap();
        assert!((v - rs_potential(&rle, &prior, 0.4, 80).unwrap()).abs() < 1e-12);
        assert!(f_tilde_rs(&ModelSpec::Tensor { p: 3, delta: 1.0 }, &prior, &[0.1], 80).is_err());
    }

    #[test]
    fn vector_minimum_matches_scalar_minimum() {
        let prior = Prior::rademacher();
        let model = ModelSpec::Matrix { delta: 0.5 };
        let v = minimize_f_tilde_grid(&model, &prior, 3, 32, None, 80).unwrap();
        let s = minimize_potential(&model, &prior, &SolverOptions::default()).unwrap();
        assert!((v.value - s.f_rs).abs() < 1e-4, "{v:?} vs {s:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn variances_are_nonnegative(list in proptest::collection::vec(0.0f64..5.0, 1..12), p in 2u32..6) {
            prop_assert!(v_k_variance(&list).unwrap() >= -1e-12);
            prop_assert!(v_kp_variance(&list, p).unwrap() >= -1e-12 * (1.0 + list.iter().fold(0.0f64, |a, b| a.max(*b)).powi(p as i32)));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn f_tilde_dominates_potential_at_mean(list in proptest::collection::vec(0.0f64..1.0, 1..5), delta in 0.2f64..3.0) {
            let prior = Prior::rademacher();
            let model = ModelSpec::Matrix { delta };
            let mean = list.iter().sum::<f64>() / list.len() as f64;
            let lhs = f_tilde_rs(&model, &prior, &list, 40).unwrap();
            let rhs = rs_potential(&model, &prior, mean, 40).unwrap() + v_k_variance(&list).unwrap() / (4.0 * delta);
            prop_assert!(lhs >= rs_potential(&model, &prior, mean, 40).unwrap() - 1e-12);
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn psi_tilde_is_midpoint_convex(alpha in 0.1f64..4.0, delta in 0.1f64..3.0, u in 0.01f64..1.0, v in 0.01f64..1.0) {
            // ψ̃(x) = ψ(α/x − Δ) on (0, α/Δ]
            let top = alpha / delta;
            let (x, y) = (u * top, v * top);
            let f = |s: f64| psi(alpha, delta, (alpha / s - delta).max(0.0));
            let mid = f(0.5 * (x + y));
            prop_assert!(mid <= 0.5 * (f(x) + f(y)) + 1e-12 * (1.0 + f(x).abs() + f(y).abs()));
        }

        #[test]
        fn matrix_and_order_two_tensor_agree(m in 0.0f64..1.0, delta in 0.05f64..5.0) {
            let prior = Prior::discrete(vec![-1.0, 0.5], vec![0.4, 0.6]).unwrap();
            let a = rs_potential(&ModelSpec::Matrix { delta }, &prior, m, 40).unwrap();
            let b = rs_potential(&ModelSpec::Tensor { p: 2, delta }, &prior, m, 40).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn shift_identity_for_random_priors(a in -3.0f64..3.0, b in -3.0f64..3.0, w in 0.05f64..0.95, snr in 0.01f64..10.0) {
            prop_assume!((a - b).abs() > 1e-3);
            let prior = Prior::discrete(vec![a, b], vec![w, 1.0 - w]).unwrap();
            let rule = GaussHermite::cached(80).unwrap();
            let diff = i_den_at(&prior, snr, &rule).unwrap() - f_den_at(&prior, snr, &rule).unwrap();
            prop_assert!((diff - snr * prior.moment(2) / 2.0).abs() < 1e-8 * (1.0 + snr * prior.moment(2)));
        }
    }
}
