//! The `replica-lab` command-line front end.
//!
//! Curves are written as CSV, everything else as a JSON [`Report`]. Exit
//! codes: 0 on success, 1 when a verification fails, 2 on usage or
//! configuration errors.

pub mod args;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::time::Instant;

use clap::Parser;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::fluctuation::{
    concavity_check, first_derivative_check, fluctuation_identity_check,
    free_energy_variance_profile, overlap_concentration_profile,
};
use crate::gibbs::sample::sample_rng;
use crate::gibbs::{free_energy, nishimori_residual, Observable};
use crate::interpolation::{
    adapt_parameters, dfdt_check, psi_integral_identity, sum_rule_residual, t_gap_scaling,
    telescoping_check, PathConfig, PathPoint, TrialParameters, GAP_SLOPE_MAX,
};
use crate::rs_potential::{
    minimize_potential, rs_curve_point, scan_and_locate_transition, ScanOptions, SolverOptions,
};
use args::{Cli, Command, DiagnoseCommand, PointArgs, TrialKind, VerifyCommand};
pub use config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Tolerance of identities that hold exactly under quadrature over disorder.
const NISHIMORI_EXACT_TOL: f64 = 1e-8;
const TELESCOPING_TOL: f64 = 1e-12;
const PSI_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub subcommand: String,
    pub inputs: Value,
    pub outputs: Value,
    pub pass: bool,
    pub version: &'static str,
    /// Seconds; the only field that differs between identical runs.
    pub wall_time: f64,
}

/// What a subcommand produced, before it is written anywhere.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub body: String,
    pub pass: bool,
    /// Destination from `--out`; stdout when absent.
    pub out: Option<std::path::PathBuf>,
}

/// Parses `argv`, runs the subcommand and writes its output. Returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            if let Err(e) = emit(&outcome.body, outcome.out.as_deref()) {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
            if outcome.pass {
                EXIT_OK
            } else {
                EXIT_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn emit(body: &str, path: Option<&std::path::Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, body)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Parses and runs `argv` without writing anything. Usage errors come back
/// as [`Error::Config`].
pub fn execute_args<I, T>(argv: I) -> Result<Outcome>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| Error::Config(e.to_string()))?;
    execute(&cli)
}

/// Runs a parsed command line on a pool of `--threads` workers.
pub fn execute(cli: &Cli) -> Result<Outcome> {
    let config = RunConfig::resolve(&cli.global)?;
    let mut outcome = match config.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {threads} threads: {e}")))?
            .install(|| dispatch(&cli.command, &config))?,
        None => dispatch(&cli.command, &config)?,
    };
    outcome.out = config.out;
    Ok(outcome)
}

struct Finished {
    inputs: Value,
    outputs: Value,
    pass: bool,
}

fn dispatch(command: &Command, config: &RunConfig) -> Result<Outcome> {
    let start = Instant::now();
    let (name, done) = match command {
        Command::RsCurve(a) => return rs_curve(config, a.delta_min, a.delta_max, a.steps),
        Command::Transition(a) => (
            "transition",
            transition(config, a.delta_min, a.delta_max, a.steps)?,
        ),
        Command::Oracle(a) => ("oracle", oracle(config, a.slack)?),
        Command::Verify(v) => match v {
            VerifyCommand::SumRule { trial } => ("verify sum-rule", sum_rule(config, *trial)?),
            VerifyCommand::Telescoping { trials } => {
                ("verify telescoping", telescoping(config, *trials)?)
            }
            VerifyCommand::Dfdt { point, dt } => ("verify dfdt", dfdt(config, point, *dt)?),
            VerifyCommand::TGap { k_list, t, m } => {
                ("verify t-gap", t_gap(config, k_list, *t, *m)?)
            }
            VerifyCommand::Nishimori { observables } => {
                ("verify nishimori", nishimori(config, observables)?)
            }
            VerifyCommand::Fluctuation { point } => {
                ("verify fluctuation", fluctuation(config, point)?)
            }
            VerifyCommand::Concavity {
                point,
                d_eps,
                points,
            } => (
                "verify concavity",
                concavity(config, point, *d_eps, *points)?,
            ),
            VerifyCommand::PsiIdentity { e } => ("verify psi-identity", psi_identity(config, *e)?),
        },
        Command::Diagnose(d) => match d {
            DiagnoseCommand::Concentration { n_list } => {
                ("diagnose concentration", concentration(config, n_list)?)
            }
            DiagnoseCommand::FeVariance { n_list } => {
                ("diagnose fe-variance", fe_variance(config, n_list)?)
            }
        },
    };
    let report = Report {
        subcommand: name.to_string(),
        inputs: done.inputs,
        outputs: done.outputs,
        pass: done.pass,
        version: env!("CARGO_PKG_VERSION"),
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok(Outcome {
        body: serde_json::to_string_pretty(&report)? + "\n",
        pass: report.pass,
        out: None,
    })
}

fn base_inputs(config: &RunConfig) -> Value {
    json!({
        "model": config.model,
        "prior": config.prior.spec(),
        "seed": config.seed,
        "quad_order": config.quad_order,
        "strict": config.strict,
    })
}

fn with(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
        b.extend(e);
    }
    base
}

/// The `{lhs, rhs, residual, stderr}` block shared by verification reports.
fn summary(lhs: f64, rhs: f64, stderr: f64) -> Value {
    json!({"lhs": lhs, "rhs": rhs, "residual": lhs - rhs, "stderr": stderr})
}

fn method_inputs(method: &crate::gibbs::DisorderMethod) -> Value {
    serde_json::to_value(method).unwrap_or(Value::Null)
}

fn deltas(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && steps >= 2) {
        return Err(Error::Config(format!(
            "need 0 < delta-min < delta-max and steps ≥ 2, got {lo}, {hi}, {steps}"
        )));
    }
    Ok((0..steps)
        .map(|i| {
            if i == steps - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (steps - 1) as f64
            }
        })
        .collect())
}

fn solver(config: &RunConfig) -> SolverOptions {
    SolverOptions {
        quad_order: config.quad_order,
        ..SolverOptions::default()
    }
}

fn rs_curve(config: &RunConfig, lo: f64, hi: f64, steps: usize) -> Result<Outcome> {
    let opts = solver(config);
    let rows = deltas(lo, hi, steps)?
        .par_iter()
        .map(|&d| rs_curve_point(&config.model.with_delta(d), &config.prior, &opts))
        .collect::<Result<Vec<_>>>()?;
    let mut body = String::from("delta,m_star,f_rs,mutual_info\n");
    for r in rows {
        body.push_str(&format!(
            "{},{},{},{}\n",
            r.delta, r.m_star, r.f_rs, r.mutual_info
        ));
    }
    Ok(Outcome {
        body,
        pass: true,
        out: None,
    })
}

fn transition(config: &RunConfig, lo: f64, hi: f64, steps: usize) -> Result<Finished> {
    let opts = ScanOptions {
        solver: solver(config),
        ..ScanOptions::default()
    };
    let scan = scan_and_locate_transition(&config.model, &config.prior, lo, hi, steps, &opts)?;
    Ok(Finished {
        inputs: with(
            base_inputs(config),
            json!({"delta_min": lo, "delta_max": hi, "steps": steps}),
        ),
        outputs: serde_json::to_value(&scan)?,
        pass: true,
    })
}

fn oracle(config: &RunConfig, slack: f64) -> Result<Finished> {
    let n = config.n.unwrap_or(8);
    let eps = config.epsilon.unwrap_or(0.0);
    let method = config.disorder_method(n, 2000);
    let f = free_energy(&config.model, &config.prior, n, eps, &method)?;
    let rs = minimize_potential(&config.model, &config.prior, &solver(config))?;
    let gap = f.mean - rs.f_rs;
    let allowed = config.sigmas(3.0) * f.stderr + slack / n as f64;
    Ok(Finished {
        inputs: with(
            base_inputs(config),
            json!({"n": n, "epsilon": eps, "method": method_inputs(&method), "slack": slack}),
        ),
        outputs: json!({
            "free_energy": f.mean,
            "stderr": f.stderr,
            "m_star": rs.m_star,
            "f_rs_min": rs.f_rs,
            "gap": gap,
            "allowed": allowed,
        }),
        pass: gap.abs() <= allowed,
    })
}

struct Path {
    config: PathConfig,
    inputs: Value,
}

fn path(config: &RunConfig, n_default: usize, k_default: usize, eps_default: f64) -> Result<Path> {
    let delta = config.matrix_delta()?;
    let n = config.n.unwrap_or(n_default);
    let steps = config.steps.unwrap_or(k_default);
    let eps = config.epsilon.unwrap_or(eps_default);
    Ok(Path {
        config: PathConfig::new(n, steps, eps, delta)?,
        inputs: with(
            base_inputs(config),
            json!({"n": n, "K": steps, "epsilon": eps}),
        ),
    })
}

fn rs_minimizer(config: &RunConfig) -> Result<f64> {
    Ok(minimize_potential(&config.model, &config.prior, &solver(config))?.m_star)
}

fn point(
    config: &RunConfig,
    path: &Path,
    args: &PointArgs,
) -> Result<(PathPoint, TrialParameters, Value)> {
    let k = args.k.unwrap_or(path.config.steps.div_ceil(2));
    let m_value = match args.m {
        Some(m) => m,
        None => rs_minimizer(config)?,
    };
    let m = TrialParameters::constant(path.config.steps, m_value)?;
    m.check_against(&config.prior)?;
    let p = PathPoint::new(&path.config, &m, k, args.t)?;
    Ok((p, m, json!({"k": k, "t": args.t, "m": m_value})))
}

fn sum_rule(config: &RunConfig, trial: TrialKind) -> Result<Finished> {
    let path = path(config, 4, 8, 0.1)?;
    let samples = config.samples.unwrap_or(2000);
    let t_order = config.t_quad_order.unwrap_or(16);
    let (m, adapted_stderr) = match trial {
        TrialKind::Adapted => {
            let a = adapt_parameters(&path.config, &config.prior, samples, config.seed)?;
            (a.m, Some(a.stderr))
        }
        TrialKind::Rs => (
            TrialParameters::constant(path.config.steps, rs_minimizer(config)?)?,
            None,
        ),
    };
    let r = sum_rule_residual(
        &path.config,
        &m,
        &config.prior,
        samples,
        config.seed,
        t_order,
        config.quad_order,
    )?;
    let s = config.sigmas(3.0);
    Ok(Finished {
        inputs: with(
            path.inputs,
            json!({"samples": samples, "t_quad_order": t_order, "trial": format!("{trial:?}").to_lowercase()}),
        ),
        outputs: json!({
            "lhs": r.lhs,
            "rhs": r.rhs,
            "residual": r.residual,
            "stderr": r.stderr,
            "report": r,
            "m": m.values(),
            "m_stderr": adapted_stderr,
            "remainder_nonnegative": r.remainder_nonnegative(s),
            "upper_bound_holds": r.upper_bound_holds(s),
        }),
        pass: r.passes(s) && r.remainder_nonnegative(s),
    })
}

fn telescoping(config: &RunConfig, trials: usize) -> Result<Finished> {
    let path = path(config, 3, 4, 0.1)?;
    // Trial parameters are drawn from a stream no disorder sample uses.
    let mut rng = sample_rng(config.seed, u64::MAX);
    let m2 = config.prior.moment(2);
    let m = TrialParameters::new(
        (0..path.config.steps)
            .map(|_| m2 * rand::Rng::gen::<f64>(&mut rng))
            .collect(),
    )?;
    let r = telescoping_check(&path.config, &m, &config.prior, trials, config.seed)?;
    Ok(Finished {
        inputs: with(path.inputs, json!({"trials": trials})),
        outputs: with(
            summary(r.max_difference, 0.0, 0.0),
            json!({"max_difference": r.max_difference, "comparisons": r.comparisons, "tolerance": TELESCOPING_TOL, "m": m.values()}),
        ),
        pass: r.max_difference < TELESCOPING_TOL,
    })
}

fn dfdt(config: &RunConfig, args: &PointArgs, dt: f64) -> Result<Finished> {
    let path = path(config, 4, 8, 0.1)?;
    let (p, m, point_inputs) = point(config, &path, args)?;
    let method = config.disorder_method(path.config.n, 4000);
    let r = dfdt_check(&path.config, &m, p.k, p.t, &config.prior, &method, dt)?;
    Ok(Finished {
        inputs: with(
            with(path.inputs, point_inputs),
            json!({"dt": dt, "method": method_inputs(&method)}),
        ),
        outputs: with(
            summary(r.fd_value, r.formula_value, r.stderr),
            serde_json::to_value(r)?,
        ),
        pass: r.passes(config.sigmas(3.0)),
    })
}

fn t_gap(config: &RunConfig, k_list: &[usize], t: f64, m: f64) -> Result<Finished> {
    let delta = config.matrix_delta()?;
    let n = config.n.unwrap_or(3);
    let eps = config.epsilon.unwrap_or(0.1);
    let samples = config.samples.unwrap_or(2000);
    let r = t_gap_scaling(
        n,
        k_list,
        eps,
        delta,
        m,
        t,
        &config.prior,
        samples,
        config.seed,
    )?;
    Ok(Finished {
        inputs: with(
            base_inputs(config),
            json!({"n": n, "K_list": k_list, "epsilon": eps, "t": t, "m": m, "samples": samples}),
        ),
        // The fitted slope against its ceiling.
        outputs: with(
            summary(r.slope, GAP_SLOPE_MAX, 0.0),
            serde_json::to_value(&r)?,
        ),
        pass: r.passes(),
    })
}

fn nishimori(config: &RunConfig, names: &[String]) -> Result<Finished> {
    let n = config.n.unwrap_or(1);
    let eps = config.epsilon.unwrap_or(0.0);
    let method = config.disorder_method(n, 5000);
    let s = config.sigmas(4.0);
    let mut results = serde_json::Map::new();
    let mut pass = true;
    for name in names {
        let g = Observable::parse(name).ok_or_else(|| {
            Error::Config(format!("unknown observable `{name}` (known: q, q2, x1^4)"))
        })?;
        let r = nishimori_residual(&config.model, &config.prior, n, eps, g, &method)?;
        let tol = if method.is_exact() {
            NISHIMORI_EXACT_TOL
        } else {
            0.0
        };
        let ok = r.residual.abs() <= s * r.stderr + tol;
        pass &= ok;
        results.insert(g.name().to_string(), json!({"report": r, "pass": ok}));
    }
    Ok(Finished {
        inputs: with(
            base_inputs(config),
            json!({"n": n, "epsilon": eps, "method": method_inputs(&method), "observables": names}),
        ),
        outputs: Value::Object(results),
        pass,
    })
}

fn fluctuation(config: &RunConfig, args: &PointArgs) -> Result<Finished> {
    let path = path(config, 1, 4, 0.1)?;
    let (p, _, point_inputs) = point(config, &path, args)?;
    let method = config.disorder_method(path.config.n, 5000);
    let r = fluctuation_identity_check(&p, &config.prior, &method)?;
    Ok(Finished {
        inputs: with(
            with(path.inputs, point_inputs),
            json!({"method": method_inputs(&method)}),
        ),
        outputs: serde_json::to_value(r)?,
        pass: r.passes(config.sigmas(4.0)),
    })
}

fn concavity(config: &RunConfig, args: &PointArgs, d_eps: f64, points: usize) -> Result<Finished> {
    let path = path(config, 1, 4, 0.1)?;
    let (p, _, point_inputs) = point(config, &path, args)?;
    if points < 3 {
        return Err(Error::Config(
            "concavity needs at least 3 grid points".into(),
        ));
    }
    let centre = (points - 1) as f64 / 2.0;
    let shifts: Vec<f64> = (0..points).map(|j| (j as f64 - centre) * d_eps).collect();
    let method = config.disorder_method(path.config.n, 3000);
    let curvature = concavity_check(&p, &shifts, &config.prior, &method)?;
    let first = first_derivative_check(&p, &config.prior, &method, d_eps)?;
    let s = config.sigmas(3.0);
    let sign_ok = first.formula_value <= 0.0 && curvature.points.iter().all(|c| c.formula <= 0.0);
    Ok(Finished {
        inputs: with(
            with(path.inputs, point_inputs),
            json!({"d_eps": d_eps, "points": points, "method": method_inputs(&method)}),
        ),
        outputs: json!({"first_derivative": first, "concavity": curvature, "formula_signs_nonpositive": sign_ok}),
        pass: first.passes(s) && curvature.passes(s) && sign_ok,
    })
}

fn psi_identity(config: &RunConfig, e: f64) -> Result<Finished> {
    let (alpha, delta) = (config.alpha, config.model.delta());
    let order = config.t_quad_order.unwrap_or(32);
    let r = psi_integral_identity(e, alpha, delta, order)?;
    Ok(Finished {
        inputs: json!({"alpha": alpha, "delta": delta, "E": e, "t_quad_order": order}),
        outputs: with(
            summary(r.psi, r.integral, 0.0),
            json!({"residual": r.residual, "tolerance": PSI_TOL}),
        ),
        pass: r.residual.abs() < PSI_TOL,
    })
}

fn concentration(config: &RunConfig, n_list: &[usize]) -> Result<Finished> {
    let delta = config.matrix_delta()?;
    let steps = config.steps.unwrap_or(4);
    let eps = config.epsilon.unwrap_or(0.1);
    let samples = config.samples.unwrap_or(1500);
    let r = overlap_concentration_profile(
        &config.prior,
        n_list,
        steps,
        eps,
        delta,
        samples,
        config.seed,
        config.quad_order,
    )?;
    Ok(Finished {
        inputs: with(
            base_inputs(config),
            json!({"n_list": n_list, "K": steps, "epsilon": eps, "samples": samples}),
        ),
        pass: r.profile.is_decreasing(config.sigmas(2.0)),
        outputs: serde_json::to_value(&r)?,
    })
}

fn fe_variance(config: &RunConfig, n_list: &[usize]) -> Result<Finished> {
    let samples = config.samples.unwrap_or(2000);
    let r =
        free_energy_variance_profile(&config.model, &config.prior, n_list, samples, config.seed)?;
    Ok(Finished {
        inputs: with(
            base_inputs(config),
            json!({"n_list": n_list, "samples": samples}),
        ),
        pass: r.slope <= -0.5,
        outputs: serde_json::to_value(&r)?,
    })
}
