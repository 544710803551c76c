//! Replica-symmetric free energy and mutual information of the spiked
//! Wigner model across noise levels.

use replica_lab::rs_potential::{rs_curve_point, ModelSpec, SolverOptions};
use replica_lab::Prior;

fn main() -> replica_lab::Result<()> {
    let prior = Prior::discrete(vec![-1.0, 0.0, 1.0], vec![0.25, 0.5, 0.25])?;
    println!("delta,m_star,f_rs,mutual_info");
    for i in 0..=10 {
        let delta = 0.05 + 0.05 * i as f64;
        let p = rs_curve_point(
            &ModelSpec::Matrix { delta },
            &prior,
            &SolverOptions::default(),
        )?;
        println!(
            "{:.2},{:.6},{:.6},{:.6}",
            p.delta, p.m_star, p.f_rs, p.mutual_info
        );
    }
    Ok(())
}
