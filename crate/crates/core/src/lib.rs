//! Floquet simulation of electron-spin double resonance in a driven NV
//! spin-1 center: spin model, Sambe-space quasi-energies, spectra, closed-form
//! resonance predictors, a time-domain reference propagator and resonance
//! extraction.

pub mod analytic;
pub mod error;
pub mod esdr;
pub mod extract;
pub mod floquet;
pub mod format;
pub mod kv;
pub mod oracle;
pub mod spin;

pub use error::{Error, Result};
pub use esdr::{run_sweep, Axis, Spectrum, SweepKind, SweepPlan};
pub use floquet::{build_floquet, quasi_energies, FourierHamiltonian, QuasiEnergySolution};
pub use spin::SystemParams;
