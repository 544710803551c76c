//! First and second derivatives of the free energy in the side-channel SNR,
//! by finite differences and by their Gibbs-average formulas.

use replica_lab::fluctuation::{concavity_check, first_derivative_check};
use replica_lab::gibbs::DisorderMethod;
use replica_lab::interpolation::{PathConfig, PathPoint, TrialParameters};
use replica_lab::Prior;

fn main() -> replica_lab::Result<()> {
    let prior = Prior::rademacher();
    let config = PathConfig::new(1, 2, 0.3, 1.0)?;
    let point = PathPoint::new(&config, &TrialParameters::constant(2, 0.5)?, 2, 0.5)?;
    let method = DisorderMethod::Quadrature { order: 60 };
    let first = first_derivative_check(&point, &prior, &method, 1e-3)?;
    println!(
        "df/d eps at {:.4}: fd {:.8}, formula {:.8}, <L> {:.8}",
        first.effective_epsilon, first.fd_value, first.formula_value, first.mean_l
    );
    let curve = concavity_check(&point, &[-0.01, 0.0, 0.01], &prior, &method)?;
    for c in &curve.points {
        println!(
            "eps {:.4}: second difference {:.6}, formula {:.6}",
            c.effective_epsilon, c.second_difference, c.formula
        );
    }
    println!(
        "concave: {}, matches formula: {}",
        curve.is_concave(3.0),
        curve.matches_formula(3.0)
    );
    Ok(())
}
