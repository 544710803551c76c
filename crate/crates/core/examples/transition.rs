//! Locates the phase transition: continuous for Rademacher, first order for
//! a sparse one.

use replica_lab::rs_potential::{scan_and_locate_transition, ModelSpec, ScanOptions};
use replica_lab::Prior;

fn main() -> replica_lab::Result<()> {
    let sparse = Prior::discrete(vec![-1.0, 0.0, 1.0], vec![0.05, 0.9, 0.05])?;
    for (name, prior, lo, hi) in [
        ("rademacher", Prior::rademacher(), 0.5, 1.5),
        ("sparse rademacher (rho = 0.1)", sparse, 0.005, 0.05),
    ] {
        let model = ModelSpec::Matrix { delta: lo };
        let scan = scan_and_locate_transition(&model, &prior, lo, hi, 41, &ScanOptions::default())?;
        match scan.transition {
            Some(t) => println!(
                "{name}: {:?} transition at delta_c = {:.5}, bracket {:?}",
                t.kind, t.delta_c, t.bracket
            ),
            None => println!("{name}: no transition in [{lo}, {hi}]"),
        }
    }
    Ok(())
}
