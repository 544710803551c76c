//! Fluctuation identity for the observable L, split into its thermal and
//! disorder parts.

use replica_lab::fluctuation::fluctuation_identity_check;
use replica_lab::gibbs::DisorderMethod;
use replica_lab::interpolation::{PathConfig, PathPoint, TrialParameters};
use replica_lab::Prior;

fn main() -> replica_lab::Result<()> {
    let prior = Prior::rademacher();
    for (n, method) in [
        (1, DisorderMethod::Quadrature { order: 80 }),
        (
            4,
            DisorderMethod::MonteCarlo {
                samples: 4000,
                seed: 7,
            },
        ),
    ] {
        let config = PathConfig::new(n, 4, 0.1, 0.8)?;
        let point = PathPoint::new(&config, &TrialParameters::constant(4, 0.6)?, 2, 0.5)?;
        let r = fluctuation_identity_check(&point, &prior, &method)?;
        println!(
            "n={n}: lhs {:.6}, rhs {:.6}, residual {:.2e} +- {:.2e}; thermal residual {:.2e}, disorder residual {:.2e}",
            r.lhs,
            r.rhs_terms.sum(),
            r.residual,
            r.stderr,
            r.thermal.residual,
            r.disorder.residual
        );
    }
    Ok(())
}
