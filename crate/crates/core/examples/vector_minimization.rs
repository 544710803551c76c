//! Minimizing the K-parameter potential on a nested grid recovers the
//! scalar minimum.

use replica_lab::rs_potential::{
    minimize_f_tilde_grid, minimize_potential, ModelSpec, SolverOptions,
};
use replica_lab::Prior;

fn main() -> replica_lab::Result<()> {
    let prior = Prior::rademacher();
    let model = ModelSpec::Matrix { delta: 0.5 };
    let v = minimize_f_tilde_grid(&model, &prior, 3, 32, None, 80)?;
    let s = minimize_potential(&model, &prior, &SolverOptions::default())?;
    println!("vector minimum {:.8} at {:?}", v.value, v.m);
    println!("scalar minimum {:.8} at m = {:.6}", s.f_rs, s.m_star);
    Ok(())
}
