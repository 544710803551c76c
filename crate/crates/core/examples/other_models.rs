//! Minimizers of the tensor and linear-estimation potentials, plus the
//! p = 2 tensor agreeing with the matrix potential.

use replica_lab::rs_potential::{minimize_potential, rs_potential, ModelSpec, SolverOptions};
use replica_lab::Prior;

fn main() -> replica_lab::Result<()> {
    let prior = Prior::rademacher();
    let opts = SolverOptions::default();
    for delta in [0.2, 0.4, 0.6] {
        let m = minimize_potential(&ModelSpec::Tensor { p: 3, delta }, &prior, &opts)?;
        println!(
            "tensor p=3 delta={delta}: m* = {:.5}, f_rs = {:.6}",
            m.m_star, m.f_rs
        );
    }
    for alpha in [0.5, 1.0, 2.0] {
        let m = minimize_potential(&ModelSpec::Rle { alpha, delta: 0.5 }, &prior, &opts)?;
        println!(
            "linear estimation alpha={alpha}: E* = {:.5}, f_rs = {:.6}",
            m.m_star, m.f_rs
        );
    }
    let a = rs_potential(&ModelSpec::Matrix { delta: 0.7 }, &prior, 0.4, 80)?;
    let b = rs_potential(&ModelSpec::Tensor { p: 2, delta: 0.7 }, &prior, 0.4, 80)?;
    println!("matrix vs tensor p=2 at m=0.4: {a:.12} vs {b:.12}");
    Ok(())
}
