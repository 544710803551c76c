//! The Nishimori identity E<g(x, s)> = E<g(x, x')> for a few observables,
//! exactly at n = 1 and by sampling at n = 6.

use replica_lab::gibbs::{nishimori_residual, DisorderMethod, Observable};
use replica_lab::rs_potential::ModelSpec;
use replica_lab::Prior;

fn main() -> replica_lab::Result<()> {
    let prior = Prior::discrete(vec![-1.0, 0.0, 2.0], vec![0.3, 0.5, 0.2])?;
    let model = ModelSpec::Matrix { delta: 1.0 };
    let cases = [
        (1, DisorderMethod::Quadrature { order: 80 }),
        (
            6,
            DisorderMethod::MonteCarlo {
                samples: 3000,
                seed: 7,
            },
        ),
    ];
    for (n, method) in cases {
        for g in [
            Observable::Overlap,
            Observable::OverlapSquared,
            Observable::FirstSiteFourth,
        ] {
            let r = nishimori_residual(&model, &prior, n, 0.2, g, &method)?;
            println!(
                "n={n} {:>4}: {:.6} vs {:.6}, residual {:.2e} (stderr {:.2e})",
                g.name(),
                r.lhs,
                r.rhs,
                r.residual,
                r.stderr
            );
        }
    }
    Ok(())
}
