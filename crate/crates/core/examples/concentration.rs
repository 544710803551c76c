//! Finite-size concentration: overlap fluctuations and the free-energy
//! variance both shrink with n.

use replica_lab::fluctuation::{free_energy_variance_profile, overlap_concentration_profile};
use replica_lab::rs_potential::ModelSpec;
use replica_lab::Prior;

fn main() -> replica_lab::Result<()> {
    let prior = Prior::rademacher();
    let fe = free_energy_variance_profile(
        &ModelSpec::Matrix { delta: 1.0 },
        &prior,
        &[2, 4, 8],
        2000,
        7,
    )?;
    for p in &fe.points {
        println!("n={}: Var f = {:.3e} +- {:.1e}", p.n, p.value, p.stderr);
    }
    println!("free-energy variance slope {:.3}", fe.slope);
    let ov = overlap_concentration_profile(&prior, &[2, 4, 6, 8], 4, 0.1, 2.0, 1000, 7, 80)?;
    for p in &ov.profile.points {
        println!(
            "n={}: overlap fluctuation {:.4} +- {:.4}",
            p.n, p.value, p.stderr
        );
    }
    Ok(())
}
