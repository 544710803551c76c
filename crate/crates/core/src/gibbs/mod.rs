//! Exact finite-size posteriors by enumeration, and disorder averages of them.

pub mod disorder;
pub mod hamiltonian;
pub mod oracle;
pub mod sample;
pub mod state;

pub use disorder::{pooled_average, Averages, DisorderMethod, NoiseDims};
pub use hamiltonian::{enumerate_gibbs, hamiltonian, MatrixCouplings};
pub use oracle::{
    free_energy, free_energy_mc, nishimori_residual, Estimate, NishimoriReport, Observable,
};
pub use sample::{PooledSample, QuenchedSample};
pub use state::{overlap, ConfigurationSpace, GibbsState};
