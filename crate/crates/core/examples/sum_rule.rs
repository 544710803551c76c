//! The interpolation sum rule with adapted trial parameters, and the
//! nonnegative remainder behind the upper bound.

use replica_lab::interpolation::{
    adapt_parameters, sum_rule_residual, PathConfig, TrialParameters,
};
use replica_lab::rs_potential::{minimize_potential, SolverOptions};
use replica_lab::Prior;

fn main() -> replica_lab::Result<()> {
    let prior = Prior::rademacher();
    let config = PathConfig::new(4, 8, 0.1, 0.8)?;
    let adapted = adapt_parameters(&config, &prior, 1000, 7)?;
    println!("adapted m: {:?}", adapted.m.values());
    let r = sum_rule_residual(&config, &adapted.m, &prior, 1000, 7, 16, 80)?;
    println!(
        "lhs {:.4}, rhs {:.4}, residual {:.4} +- {:.4}",
        r.lhs, r.rhs, r.residual, r.stderr
    );

    let m_star = minimize_potential(&config.model(), &prior, &SolverOptions::default())?.m_star;
    let rs = sum_rule_residual(
        &config,
        &TrialParameters::constant(8, m_star)?,
        &prior,
        1000,
        8,
        16,
        80,
    )?;
    println!(
        "constant m = {m_star:.4}: remainder {:.4} +- {:.4}",
        rs.remainder, rs.remainder_stderr
    );
    Ok(())
}
