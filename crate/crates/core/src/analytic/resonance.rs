//! Closed-form MW resonance positions of the RF-dressed NV ground state.
//!
//! After moving to the frame that removes the diagonal RF modulation, the
//! effective couplings are Bessel-dressed harmonics:
//!
//! ```text
//! λ_k = λ · J_k(2 ω_L Ω_RF / (ω_RF V))
//! Ω_k = k ω_RF M_x / (2 ω_L) · J_k(4 ω_L Ω_RF / (ω_RF V))
//! ```
//!
//! A pair `|B', m>`, `|D', n>` is resonant when `2V ≈ (n - m) ω_RF` and is
//! split by `2 |Ω_{m-n}|`.

use crate::analytic::bessel::bessel_j;
use crate::error::{invalid, Error, Result};
use crate::spin::SystemParams;

/// Fourier indices of the dressed pair `|B', m>`, `|D', n>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PhotonIndices {
    pub m: i32,
    pub n: i32,
}

impl PhotonIndices {
    pub fn new(m: i32, n: i32) -> Self {
        PhotonIndices { m, n }
    }

    /// `m - n`; its magnitude is the number of RF photons exchanged.
    pub fn photon_number(&self) -> i32 {
        self.m - self.n
    }

    fn validate(&self) -> Result<()> {
        if self.m == self.n {
            return Err(invalid("photon_indices", "m and n must differ"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    SingleRwa,
    MultiRwa,
    VanVleck,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::SingleRwa => "single_rwa",
            Method::MultiRwa => "multi_rwa",
            Method::VanVleck => "van_vleck",
        }
    }
}

/// The `±` pair of MW frequencies produced by one branch of a formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonancePrediction {
    pub lower: f64,
    pub upper: f64,
    pub method: Method,
    /// `2 |coupling|` of the dressed pair, MHz.
    pub gap: f64,
}

impl ResonancePrediction {
    fn from_center(center: f64, root: f64, method: Method, coupling: f64) -> Self {
        ResonancePrediction {
            lower: center - root,
            upper: center + root,
            method,
            gap: 2.0 * coupling.abs(),
        }
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// Single-RF-photon resonances in the RWA:
/// `ω_MW = d_gs ± ω_RF/2 ± sqrt((V - ω_RF/2)² + Ω_RF²)`.
///
/// Returns the `-ω_RF/2` branch first. `V` equals `m_x` without a parallel
/// field.
pub fn single_photon_resonances(params: &SystemParams) -> [ResonancePrediction; 2] {
    let half = 0.5 * params.omega_rf;
    let root = (params.v() - half).hypot(params.omega_cap_rf);
    [-half, half].map(|shift| {
        ResonancePrediction::from_center(params.d_gs + shift, root, Method::SingleRwa, params.omega_cap_rf)
    })
}

/// Bessel-dressed couplings for harmonic `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveCouplings {
    pub lambda_b: f64,
    pub lambda_d: f64,
    pub omega: f64,
}

/// `(λ^{b'}_k, λ^{d'}_k, Ω_k)`; the dressing frame needs `omega_l != 0`.
pub fn effective_couplings(params: &SystemParams, k: i32) -> Result<EffectiveCouplings> {
    if params.omega_l == 0.0 {
        return Err(Error::ParallelFieldRequired("the Bessel-dressed frame"));
    }
    Ok(couplings(params, k))
}

/// Couplings including the `omega_l -> 0` limit, where only `Ω_{±1} = M_x Ω_RF / V`
/// and `λ_0 = λ` survive.
pub(crate) fn couplings(params: &SystemParams, k: i32) -> EffectiveCouplings {
    let v = params.v();
    let w = params.omega_l;
    if w == 0.0 {
        let lam = if k == 0 { 1.0 } else { 0.0 };
        let omega = if k.abs() == 1 { params.m_x * params.omega_cap_rf / v } else { 0.0 };
        return EffectiveCouplings {
            lambda_b: params.lambda_b * lam,
            lambda_d: params.lambda_d * lam,
            omega,
        };
    }
    let x_mw = 2.0 * w * params.omega_cap_rf / (params.omega_rf * v);
    let j = bessel_j(k, x_mw);
    let omega = if k == 0 {
        0.0
    } else {
        k as f64 * params.omega_rf * params.m_x / (2.0 * w) * bessel_j(k, 2.0 * x_mw)
    };
    EffectiveCouplings {
        lambda_b: params.lambda_b * j,
        lambda_d: params.lambda_d * j,
        omega,
    }
}

fn check_basis(params: &SystemParams) -> Result<()> {
    params.validate()?;
    if params.v() == 0.0 {
        return Err(Error::DegenerateBasis);
    }
    Ok(())
}

/// Multi-photon resonance in the RWA:
/// `ω_MW = d_gs + (m+n)/2 ω_RF ± sqrt((V + (m-n)/2 ω_RF)² + Ω_{m-n}²)`.
pub fn multiphoton_resonances_rwa(params: &SystemParams, idx: PhotonIndices) -> Result<ResonancePrediction> {
    check_basis(params)?;
    idx.validate()?;
    let w = params.omega_rf;
    let coupling = couplings(params, idx.photon_number()).omega;
    let center = params.d_gs + 0.5 * (idx.m + idx.n) as f64 * w;
    let root = (params.v() + 0.5 * idx.photon_number() as f64 * w).hypot(coupling);
    Ok(ResonancePrediction::from_center(center, root, Method::MultiRwa, coupling))
}

/// Second-order van Vleck level shifts `(δ^{b'}, δ^0, δ^{d'})` in MHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VanVleckShifts {
    pub bright: f64,
    pub ground: f64,
    pub dark: f64,
    /// Largest `|k|` included in the sums.
    pub k_max: usize,
}

/// Shifts from the finite sums over `k ∈ [-k_max, k_max] \ {0}`.
pub fn vv_corrections(params: &SystemParams, idx: PhotonIndices, k_max: usize) -> Result<VanVleckShifts> {
    check_basis(params)?;
    idx.validate()?;
    if k_max == 0 {
        return Err(invalid("k_max", "must be >= 1"));
    }
    let mut shifts = VanVleckShifts {
        bright: 0.0,
        ground: 0.0,
        dark: 0.0,
        k_max,
    };
    for k in 1..=k_max as i32 {
        let (b, g, d) = vv_terms(params, idx, k);
        shifts.bright += b;
        shifts.ground += g;
        shifts.dark += d;
    }
    Ok(shifts)
}

/// Tail tolerance for [`vv_corrections_converged`], MHz.
pub const VV_TAIL_TOL: f64 = 1e-9;

/// Sums until the `±k` contribution falls below [`VV_TAIL_TOL`] for three
/// consecutive `k`.
pub fn vv_corrections_converged(params: &SystemParams, idx: PhotonIndices) -> Result<VanVleckShifts> {
    check_basis(params)?;
    idx.validate()?;
    let mut shifts = VanVleckShifts {
        bright: 0.0,
        ground: 0.0,
        dark: 0.0,
        k_max: 0,
    };
    let floor = idx.m.abs().max(idx.n.abs()) + idx.photon_number().abs();
    let mut quiet = 0;
    for k in 1..=500 {
        let (b, g, d) = vv_terms(params, idx, k);
        shifts.bright += b;
        shifts.ground += g;
        shifts.dark += d;
        shifts.k_max = k as usize;
        if b.abs().max(g.abs()).max(d.abs()) < VV_TAIL_TOL && k > floor {
            quiet += 1;
            if quiet == 3 {
                return Ok(shifts);
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::NumericalFailure("van Vleck sums did not converge within |k| <= 500".into()))
}

/// Combined `+k` and `-k` contributions to `(δ^{b'}, δ^0, δ^{d'})`.
///
/// Each term is the repulsion from an off-resonant Fourier sector lying `kω`
/// away, so a level is pushed away from its neighbours:
///
/// ```text
/// δ^{b'} = Σ_{k≠0} (Ω²_{k+m-n} - Ω²_{k-m+n} + |λ^{b'}_{k+m}|² - |λ^{b'}_{k-m}|²) / (2kω)
/// ```
///
/// and likewise for `δ^0` and `δ^{d'}`.
fn vv_terms(params: &SystemParams, idx: PhotonIndices, k: i32) -> (f64, f64, f64) {
    let (m, n) = (idx.m, idx.n);
    let p = m - n;
    let om2 = |j: i32| couplings(params, j).omega.powi(2);
    let lb2 = |j: i32| couplings(params, j).lambda_b.powi(2);
    let ld2 = |j: i32| couplings(params, j).lambda_d.powi(2);
    let mut out = (0.0, 0.0, 0.0);
    for kk in [k, -k] {
        let denom = 2.0 * kk as f64 * params.omega_rf;
        out.0 += (om2(kk - p) - om2(kk + p) + lb2(kk - m) - lb2(kk + m)) / denom;
        out.1 += (lb2(kk + m) - lb2(kk - m) - ld2(kk + n) + ld2(kk - n)) / denom;
        out.2 += (om2(kk + p) - om2(kk - p) + ld2(kk - n) - ld2(kk + n)) / denom;
    }
    (-out.0, -out.1, -out.2)
}

/// Resonance including the second-order shifts:
/// `ω_MW = d_gs - δ^0 + (m+n)/2 ω_RF ± sqrt((V + (δ^{b'} - δ^{d'})/2 + (m-n)/2 ω_RF)² + Ω_{m-n}²)`.
///
/// `k_max = None` sums adaptively to [`VV_TAIL_TOL`].
pub fn multiphoton_resonances_vv(
    params: &SystemParams,
    idx: PhotonIndices,
    k_max: Option<usize>,
) -> Result<ResonancePrediction> {
    let shifts = match k_max {
        Some(k) => vv_corrections(params, idx, k)?,
        None => vv_corrections_converged(params, idx)?,
    };
    let w = params.omega_rf;
    let coupling = couplings(params, idx.photon_number()).omega;
    let center = params.d_gs - shifts.ground + 0.5 * (idx.m + idx.n) as f64 * w;
    let root = (params.v() + 0.5 * (shifts.bright - shifts.dark) + 0.5 * idx.photon_number() as f64 * w)
        .hypot(coupling);
    Ok(ResonancePrediction::from_center(center, root, Method::VanVleck, coupling))
}
