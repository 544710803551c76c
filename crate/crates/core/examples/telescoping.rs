//! The interpolating Hamiltonian at the end of step k equals the one at the
//! start of step k + 1.

use replica_lab::gibbs::sample::QuenchedSample;
use replica_lab::interpolation::{interp_hamiltonian, PathConfig, PathPoint, TrialParameters};
use replica_lab::Prior;

fn main() -> replica_lab::Result<()> {
    let prior = Prior::rademacher();
    let config = PathConfig::new(4, 5, 0.2, 1.3)?;
    let m = TrialParameters::new(vec![0.1, 0.5, 0.9, 0.3, 0.7])?;
    let sample = QuenchedSample::generate(&config.model(), &prior, 4, 5, 7, 0)?;
    let x = [1.0, -1.0, -1.0, 1.0];
    for k in 1..5 {
        let end = interp_hamiltonian(&PathPoint::new(&config, &m, k, 1.0)?, &m, &x, &sample)?;
        let start = interp_hamiltonian(&PathPoint::new(&config, &m, k + 1, 0.0)?, &m, &x, &sample)?;
        println!("k={k}: H(k,1) = {end:.12}, H(k+1,0) = {start:.12}");
    }
    Ok(())
}
