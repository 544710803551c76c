//! Exact-enumeration free energy at small n against the replica-symmetric
//! prediction.

use replica_lab::gibbs::free_energy_mc;
use replica_lab::rs_potential::{minimize_potential, ModelSpec, SolverOptions};
use replica_lab::Prior;

fn main() -> replica_lab::Result<()> {
    let prior = Prior::rademacher();
    for delta in [0.5, 1.0, 2.0] {
        let model = ModelSpec::Matrix { delta };
        let rs = minimize_potential(&model, &prior, &SolverOptions::default())?;
        print!("delta={delta}: min f_rs = {:.4};", rs.f_rs);
        for n in [2, 4, 8] {
            let f = free_energy_mc(&model, &prior, n, 0.0, 1000, 7)?;
            print!("  n={n}: {:.4} +- {:.4}", f.mean, f.stderr);
        }
        println!();
    }
    Ok(())
}
