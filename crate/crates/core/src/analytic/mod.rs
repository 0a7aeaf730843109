//! Closed-form resonance predictors and the Bessel evaluator they rely on.

pub mod bessel;
pub mod resonance;

pub use bessel::bessel_j;
pub use resonance::{
    effective_couplings, multiphoton_resonances_rwa, multiphoton_resonances_vv, single_photon_resonances,
    vv_corrections, vv_corrections_converged, EffectiveCouplings, Method, PhotonIndices, ResonancePrediction,
    VanVleckShifts, VV_TAIL_TOL,
};
