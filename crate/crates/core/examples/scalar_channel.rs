//! Scalar Gaussian denoising: free energy, mutual information and MMSE of a
//! Rademacher signal as the SNR grows.

use replica_lab::scalar_channel::{iden_snr_derivative, ScalarChannel};
use replica_lab::Prior;

fn main() -> replica_lab::Result<()> {
    let prior = Prior::rademacher();
    println!(
        "{:>6} {:>12} {:>12} {:>10}",
        "snr", "f_den", "i_den", "mmse"
    );
    for snr in [0.1, 0.5, 1.0, 2.0, 4.0, 8.0] {
        let ch = ScalarChannel::with_snr(&prior, snr)?;
        let mmse = 2.0 * iden_snr_derivative(&prior, snr, 80, None)?;
        println!(
            "{snr:>6.2} {:>12.6} {:>12.6} {mmse:>10.6}",
            ch.f_den(80)?,
            ch.i_den(80)?
        );
    }
    Ok(())
}
