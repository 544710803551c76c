//! The linear-estimation channel term psi(E) as a t-integral of the
//! interpolation parameters.

use replica_lab::interpolation::psi_integral_identity;

fn main() -> replica_lab::Result<()> {
    for (e, alpha, delta) in [
        (0.0, 1.0, 1.0),
        (0.5, 2.0, 0.1),
        (1.0, 1.0, 1.0),
        (3.0, 0.3, 2.0),
    ] {
        let r = psi_integral_identity(e, alpha, delta, 32)?;
        println!(
            "E={e} alpha={alpha} delta={delta}: psi {:.12}, integral {:.12}, residual {:.1e}",
            r.psi, r.integral, r.residual
        );
    }
    Ok(())
}
