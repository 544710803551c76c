//! Within-step t-dependence of the Gibbs averages shrinks as the number of
//! steps grows.

use replica_lab::interpolation::t_gap_scaling;
use replica_lab::Prior;

fn main() -> replica_lab::Result<()> {
    let r = t_gap_scaling(
        3,
        &[8, 16, 32, 64],
        0.1,
        1.0,
        0.0,
        0.5,
        &Prior::rademacher(),
        2000,
        7,
    )?;
    for p in &r.points {
        println!("K={:>3}: gap {:.3e} +- {:.1e}", p.steps, p.gap, p.stderr);
    }
    println!("log-log slope {:.3}", r.slope);
    Ok(())
}
