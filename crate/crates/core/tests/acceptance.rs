//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use replica_lab::cli::execute_args;
use replica_lab::fluctuation::{
    concavity_check, first_derivative_check, fluctuation_identity_check,
    free_energy_variance_profile, overlap_concentration_profile,
};
use replica_lab::gibbs::sample::QuenchedSample;
use replica_lab::gibbs::{free_energy_mc, nishimori_residual, DisorderMethod, Observable};
use replica_lab::interpolation::{
    adapt_parameters, interp_hamiltonian, psi_integral_identity, sum_rule_residual, t_gap_scaling,
    PathConfig, PathPoint, TrialParameters,
};
use replica_lab::rs_potential::{
    minimize_f_tilde_grid, minimize_potential, rs_potential, scan_and_locate_transition, ModelSpec,
    ScanOptions, SolverOptions, TransitionKind,
};
use replica_lab::scalar_channel::ScalarChannel;
use replica_lab::Prior;

type Check = Result<(bool, String), String>;

fn main() {
    let criteria: Vec<(usize, &str, Duration, fn() -> Check)> = vec![
        (1, "psi identity", secs(1), psi_identity),
        (2, "scalar-channel shift identity", secs(1), shift_identity),
        (
            3,
            "potential vanishes at m = 0",
            secs(1),
            potential_endpoint,
        ),
        (
            4,
            "matrix equals tensor p = 2",
            secs(1),
            matrix_tensor_coincidence,
        ),
        (
            5,
            "continuous transition at delta = 1",
            secs(30),
            phase_transition,
        ),
        (
            6,
            "finite-n oracle against min f_RS",
            secs(300),
            oracle_vs_rs,
        ),
        (7, "telescoping", secs(5), telescoping),
        (8, "Nishimori identity", secs(120), nishimori),
        (9, "fluctuation identity", secs(180), fluctuation),
        (10, "derivative identities", secs(60), derivatives),
        (11, "sum rule", secs(600), sum_rule),
        (12, "weak t-dependence", secs(600), t_dependence),
        (13, "vector minimization", secs(120), vector_minimum),
        (14, "concentration trends", secs(600), concentration),
        (15, "thread-count determinism", secs(600), determinism),
    ];
    let mut failures = 0;
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let (ok, detail) = match result {
            Ok((ok, detail)) => (ok && elapsed <= budget, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failures += 1;
        }
        println!(
            "criterion {id:>2} [{name}]: {} ({:.2}s of {}s) {detail}",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {failures} of 15 criteria failed");
    if failures > 0 {
        std::process::exit(1);
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn e<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|x| x.to_string())
}

fn three_atom(rng: &mut ChaCha8Rng) -> Prior {
    let mut atoms: Vec<f64> = Vec::new();
    while atoms.len() < 3 {
        let a = (rng.gen_range(-2.0..2.0f64) * 100.0).round() / 100.0;
        if !atoms.contains(&a) {
            atoms.push(a);
        }
    }
    let raw: Vec<f64> = (0..3).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    Prior::discrete(atoms, raw.iter().map(|w| w / total).collect()).unwrap()
}

fn ternary() -> Prior {
    Prior::discrete(vec![-1.0, 0.0, 1.0], vec![0.25, 0.4, 0.35]).unwrap()
}

fn psi_identity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (alpha, delta, en) = (
            rng.gen_range(0.1..3.0),
            rng.gen_range(0.2..3.0),
            rng.gen_range(0.0..3.0),
        );
        worst = worst.max(
            e(psi_integral_identity(en, alpha, delta, 32))?
                .residual
                .abs(),
        );
    }
    Ok((worst < 1e-10, format!("max residual {worst:.2e}")))
}

fn shift_identity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let priors = [Prior::rademacher(), three_atom(&mut rng)];
    let mut worst = 0.0f64;
    for prior in &priors {
        for _ in 0..10 {
            let sigma: f64 = rng.gen_range(0.2..5.0);
            let ch = e(ScalarChannel::with_snr(prior, sigma.powi(-2)))?;
            let gap = e(ch.i_den(80))? - e(ch.f_den(80))? - prior.moment(2) / (2.0 * sigma * sigma);
            worst = worst.max(gap.abs());
        }
    }
    Ok((
        worst < 1e-8,
        format!("max |i_den - f_den - E[S^2]/(2 sigma^2)| {worst:.2e}"),
    ))
}

fn potential_endpoint() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let priors = [
        Prior::rademacher(),
        three_atom(&mut rng),
        Prior::discrete(vec![0.0, 1.0], vec![0.7, 0.3]).unwrap(),
    ];
    let mut nonzero = 0;
    for prior in &priors {
        for model in [
            ModelSpec::Matrix { delta: 0.7 },
            ModelSpec::Tensor { p: 3, delta: 0.7 },
        ] {
            if e(rs_potential(&model, prior, 0.0, 80))? != 0.0 {
                nonzero += 1;
            }
        }
    }
    if e(rs_potential(
        &ModelSpec::Rle {
            alpha: 1.5,
            delta: 0.7,
        },
        &Prior::point_mass(0.0),
        0.0,
        80,
    ))? != 0.0
    {
        nonzero += 1;
    }
    Ok((
        nonzero == 0,
        format!("{nonzero} of 7 endpoint values nonzero"),
    ))
}

fn matrix_tensor_coincidence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for prior in [Prior::rademacher(), three_atom(&mut rng)] {
        let m2 = prior.moment(2);
        for i in 0..100 {
            let m = m2 * i as f64 / 99.0;
            let a = e(rs_potential(
                &ModelSpec::Matrix { delta: 0.8 },
                &prior,
                m,
                80,
            ))?;
            let b = e(rs_potential(
                &ModelSpec::Tensor { p: 2, delta: 0.8 },
                &prior,
                m,
                80,
            ))?;
            worst = worst.max((a - b).abs());
        }
    }
    Ok((worst < 1e-12, format!("max difference {worst:.2e}")))
}

fn phase_transition() -> Check {
    let scan = e(scan_and_locate_transition(
        &ModelSpec::Matrix { delta: 1.0 },
        &Prior::rademacher(),
        0.5,
        1.5,
        41,
        &ScanOptions::default(),
    ))?;
    match scan.transition {
        Some(t) => Ok((
            t.kind == TransitionKind::Continuous && (t.delta_c - 1.0).abs() <= 0.02,
            format!("{:?} at delta_c = {:.5}", t.kind, t.delta_c),
        )),
        None => Ok((false, "no transition found".into())),
    }
}

fn oracle_vs_rs() -> Check {
    let prior = Prior::rademacher();
    let n = 8;
    let high = e(free_energy_mc(
        &ModelSpec::Matrix { delta: 2.0 },
        &prior,
        n,
        0.0,
        2000,
        7,
    ))?;
    let high_ok = high.mean.abs() <= 3.0 * high.stderr + 0.5 / n as f64;
    let low_model = ModelSpec::Matrix { delta: 0.5 };
    let low = e(free_energy_mc(&low_model, &prior, n, 0.0, 2000, 7))?;
    let rs = e(minimize_potential(
        &low_model,
        &prior,
        &SolverOptions::default(),
    ))?;
    let gap = low.mean - rs.f_rs;
    let allowed = 3.0 * low.stderr + 1.0 / n as f64;
    Ok((
        high_ok && gap.abs() <= allowed,
        format!(
            "delta=2: f = {:.4} +- {:.4} ({}); delta=0.5: f - min f_RS = {gap:.4}, allowed {allowed:.4} ({})",
            high.mean,
            high.stderr,
            if high_ok { "ok" } else { "out of band" },
            if gap.abs() <= allowed { "ok" } else { "out of band" }
        ),
    ))
}

fn telescoping() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let prior = Prior::rademacher();
    let mut worst = 0.0f64;
    for trial in 0..1000 {
        let steps = rng.gen_range(2..7);
        let n = rng.gen_range(1..6);
        let config = e(PathConfig::new(
            n,
            steps,
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.2..3.0),
        ))?;
        let m = e(TrialParameters::new(
            (0..steps).map(|_| rng.gen_range(0.0..1.0)).collect(),
        ))?;
        let sample = e(QuenchedSample::generate(
            &config.model(),
            &prior,
            n,
            steps,
            5,
            trial,
        ))?;
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let k = rng.gen_range(1..steps);
        let a = e(interp_hamiltonian(
            &e(PathPoint::new(&config, &m, k, 1.0))?,
            &m,
            &x,
            &sample,
        ))?;
        let b = e(interp_hamiltonian(
            &e(PathPoint::new(&config, &m, k + 1, 0.0))?,
            &m,
            &x,
            &sample,
        ))?;
        worst = worst.max((a - b).abs());
    }
    Ok((
        worst < 1e-12,
        format!("max |H_k,1 - H_k+1,0| = {worst:.2e} over 1000 instances"),
    ))
}

fn nishimori() -> Check {
    let model = ModelSpec::Matrix { delta: 1.0 };
    let quad = DisorderMethod::Quadrature { order: 80 };
    let mut worst_exact = 0.0f64;
    for (prior, eps) in [(ternary(), 0.0), (Prior::rademacher(), 0.5)] {
        for g in [
            Observable::Overlap,
            Observable::OverlapSquared,
            Observable::FirstSiteFourth,
        ] {
            worst_exact = worst_exact.max(
                e(nishimori_residual(&model, &prior, 1, eps, g, &quad))?
                    .residual
                    .abs(),
            );
        }
    }
    let mc = DisorderMethod::MonteCarlo {
        samples: 5000,
        seed: 7,
    };
    let mut worst_ratio = 0.0f64;
    for g in [
        Observable::Overlap,
        Observable::OverlapSquared,
        Observable::FirstSiteFourth,
    ] {
        let r = e(nishimori_residual(
            &model,
            &Prior::rademacher(),
            6,
            0.0,
            g,
            &mc,
        ))?;
        let ratio = if r.stderr > 0.0 {
            r.residual.abs() / r.stderr
        } else if r.residual == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        worst_ratio = worst_ratio.max(ratio);
    }
    Ok((
        worst_exact < 1e-8 && worst_ratio < 4.0,
        format!("n=1 quadrature max residual {worst_exact:.2e}; n=6 max |residual|/stderr {worst_ratio:.2}"),
    ))
}

fn path_point(
    n: usize,
    steps: usize,
    eps: f64,
    delta: f64,
    m: f64,
    k: usize,
    t: f64,
) -> Result<PathPoint, String> {
    let config = e(PathConfig::new(n, steps, eps, delta))?;
    e(PathPoint::new(
        &config,
        &e(TrialParameters::constant(steps, m))?,
        k,
        t,
    ))
}

fn rs_m(delta: f64) -> Result<f64, String> {
    Ok(e(minimize_potential(
        &ModelSpec::Matrix { delta },
        &Prior::rademacher(),
        &SolverOptions::default(),
    ))?
    .m_star)
}

fn fluctuation() -> Check {
    let prior = Prior::rademacher();
    let m = rs_m(0.8)?;
    let exact = e(fluctuation_identity_check(
        &path_point(1, 4, 0.1, 0.8, m, 2, 0.5)?,
        &prior,
        &DisorderMethod::Quadrature { order: 80 },
    ))?;
    let mc = e(fluctuation_identity_check(
        &path_point(4, 4, 0.1, 0.8, m, 2, 0.5)?,
        &prior,
        &DisorderMethod::MonteCarlo {
            samples: 5000,
            seed: 7,
        },
    ))?;
    let ok = exact.residual.abs() < 1e-6 && mc.residual.abs() < 4.0 * mc.stderr;
    Ok((
        ok,
        format!(
            "n=1 residual {:.2e} (thermal {:.2e}, disorder {:.2e}); n=4 residual {:.4} vs 4*stderr {:.4}",
            exact.residual,
            exact.thermal.residual,
            exact.disorder.residual,
            mc.residual,
            4.0 * mc.stderr
        ),
    ))
}

fn derivatives() -> Check {
    let prior = Prior::rademacher();
    let m = rs_m(1.0)?.max(0.3);
    let mut worst = 0.0f64;
    let mut signs_ok = true;
    for (n, first_order, second_order) in [(1, 60, 60), (2, 16, 18)] {
        let p = path_point(n, 2, 0.3, 1.0, m, 2, 0.5)?;
        let first = e(first_derivative_check(
            &p,
            &prior,
            &DisorderMethod::Quadrature { order: first_order },
            1e-3,
        ))?;
        let curve = e(concavity_check(
            &p,
            &[-0.01, 0.0, 0.01],
            &prior,
            &DisorderMethod::Quadrature {
                order: second_order,
            },
        ))?;
        worst = worst
            .max(first.fd_vs_formula.residual.abs())
            .max(first.l_vs_formula.residual.abs());
        for c in &curve.points {
            worst = worst.max(c.residual.abs());
            signs_ok &= c.formula <= 0.0 && c.second_difference <= 0.0;
        }
        signs_ok &= first.formula_value <= 0.0;
    }
    Ok((
        worst < 1e-4 && signs_ok,
        format!("max residual {worst:.2e}; formula signs nonpositive: {signs_ok}"),
    ))
}

fn sum_rule() -> Check {
    let prior = Prior::rademacher();
    let config = e(PathConfig::new(4, 8, 0.1, 1.0))?;
    let adapted = e(adapt_parameters(&config, &prior, 2000, 7))?;
    let r = e(sum_rule_residual(
        &config, &adapted.m, &prior, 2000, 7, 16, 80,
    ))?;
    let rs = e(TrialParameters::constant(8, rs_m(1.0)?))?;
    let c = e(sum_rule_residual(&config, &rs, &prior, 2000, 8, 16, 80))?;
    Ok((
        r.passes(3.0) && c.remainder_nonnegative(3.0),
        format!(
            "adapted m: residual {:.4} vs 3*stderr + 2/n = {:.4}; constant m: remainder {:.4} +- {:.4}",
            r.residual,
            3.0 * r.stderr + r.slack,
            c.remainder,
            c.remainder_stderr
        ),
    ))
}

fn t_dependence() -> Check {
    let r = e(t_gap_scaling(
        3,
        &[8, 16, 32, 64],
        0.1,
        1.0,
        0.0,
        0.5,
        &Prior::rademacher(),
        2000,
        7,
    ))?;
    let gaps: Vec<String> = r
        .points
        .iter()
        .map(|p| format!("K={}: {:.2e}", p.steps, p.gap))
        .collect();
    Ok((
        r.passes(),
        format!("slope {:.3}; {}", r.slope, gaps.join(", ")),
    ))
}

fn vector_minimum() -> Check {
    let model = ModelSpec::Matrix { delta: 0.5 };
    let prior = Prior::rademacher();
    let v = e(minimize_f_tilde_grid(&model, &prior, 3, 32, None, 80))?;
    let s = e(minimize_potential(
        &model,
        &prior,
        &SolverOptions::default(),
    ))?;
    let diff = (v.value - s.f_rs).abs();
    Ok((
        diff < 1e-4,
        format!(
            "vector {:.8} vs scalar {:.8}, |diff| {diff:.2e}",
            v.value, s.f_rs
        ),
    ))
}

fn concentration() -> Check {
    let prior = Prior::rademacher();
    let fe = e(free_energy_variance_profile(
        &ModelSpec::Matrix { delta: 1.0 },
        &prior,
        &[2, 4, 8],
        2000,
        7,
    ))?;
    let ov = e(overlap_concentration_profile(
        &prior,
        &[2, 4, 6, 8],
        4,
        0.1,
        2.0,
        1500,
        7,
        80,
    ))?;
    let values: Vec<String> = ov
        .profile
        .points
        .iter()
        .map(|p| format!("{:.4}", p.value))
        .collect();
    Ok((
        fe.slope <= -0.5 && ov.profile.is_decreasing(2.0),
        format!(
            "free-energy variance slope {:.3}; overlap profile [{}]",
            fe.slope,
            values.join(", ")
        ),
    ))
}

fn strip_wall_time(body: &str) -> Result<String, String> {
    let mut v: serde_json::Value = e(serde_json::from_str(body))?;
    v.as_object_mut()
        .ok_or("report is not an object")?
        .remove("wall_time");
    e(serde_json::to_string(&v))
}

fn determinism() -> Check {
    let commands: [&[&str]; 8] = [
        &[
            "verify",
            "sum-rule",
            "--K",
            "4",
            "--samples",
            "100",
            "--t-quad-order",
            "4",
        ],
        &[
            "verify",
            "telescoping",
            "--n",
            "3",
            "--K",
            "4",
            "--trials",
            "100",
        ],
        &["verify", "dfdt", "--samples", "400"],
        &["verify", "t-gap", "--n", "3", "--samples", "200"],
        &["verify", "nishimori", "--n", "4", "--samples", "500"],
        &["verify", "fluctuation", "--n", "3", "--samples", "500"],
        &[
            "verify",
            "concavity",
            "--n",
            "2",
            "--method",
            "mc",
            "--samples",
            "300",
        ],
        &[
            "verify",
            "psi-identity",
            "--alpha",
            "1",
            "--delta",
            "1",
            "--E",
            "1",
        ],
    ];
    for args in commands {
        let mut bodies = Vec::new();
        for threads in ["1", "3", "8"] {
            let mut argv = vec!["replica-lab", "--seed", "11", "--threads", threads];
            argv.extend_from_slice(args);
            bodies.push(strip_wall_time(&e(execute_args(argv))?.body)?);
        }
        if bodies.windows(2).any(|w| w[0] != w[1]) {
            return Ok((
                false,
                format!("`{}` differs across thread counts", args.join(" ")),
            ));
        }
    }
    Ok((
        true,
        "8 verify subcommands identical under 1, 3 and 8 threads".into(),
    ))
}
