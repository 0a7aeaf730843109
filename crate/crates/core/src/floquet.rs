//! Truncated Floquet Hamiltonians in Sambe space.
//!
//! A time-periodic Hamiltonian `H(t) = Σ_m H^(m) e^{i m ω t}` becomes the
//! time-independent block matrix with blocks `H^(n-n') + n ω δ_{nn'}` over
//! the product basis `|α, n>`. Rows are ordered with the Fourier index
//! running from `+n_max` down to `-n_max`, and the spin index fastest.

use std::collections::BTreeMap;

use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spin::Mat3;

/// Number of spin states per Fourier block.
pub const SPIN_DIM: usize = 3;

/// Fourier coefficients `H^(m)` of a periodic 3×3 Hamiltonian (MHz).
#[derive(Debug, Clone, PartialEq)]
pub struct FourierHamiltonian {
    blocks: BTreeMap<i32, Mat3>,
    drive_freq: f64,
}

impl FourierHamiltonian {
    /// Static part only; add harmonics with [`FourierHamiltonian::with_harmonic`].
    pub fn new(h0: Mat3, drive_freq: f64) -> Self {
        let mut blocks = BTreeMap::new();
        blocks.insert(0, h0);
        FourierHamiltonian { blocks, drive_freq }
    }

    /// Stores `H^(m)` and its partner `H^(-m) = H^(m)†`.
    pub fn with_harmonic(mut self, m: i32, hm: Mat3) -> Self {
        assert!(m != 0, "use FourierHamiltonian::new for the static block");
        self.blocks.insert(-m, hm.adjoint());
        self.blocks.insert(m, hm);
        self
    }

    /// Builds from an explicit map; Hermiticity is checked by [`validate`](Self::validate).
    pub fn from_blocks(blocks: BTreeMap<i32, Mat3>, drive_freq: f64) -> Self {
        FourierHamiltonian { blocks, drive_freq }
    }

    pub fn drive_freq(&self) -> f64 {
        self.drive_freq
    }

    pub fn block(&self, m: i32) -> Option<&Mat3> {
        self.blocks.get(&m)
    }

    pub fn blocks(&self) -> impl Iterator<Item = (i32, &Mat3)> {
        self.blocks.iter().map(|(m, h)| (*m, h))
    }

    /// Largest `|m|` with a nonzero block.
    pub fn max_harmonic(&self) -> usize {
        self.blocks
            .iter()
            .filter(|(_, h)| h.iter().any(|z| *z != Complex64::new(0.0, 0.0)))
            .map(|(m, _)| m.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    /// `H(t)` at time `t` (µs), with the drive frequency in MHz.
    pub fn evaluate(&self, t: f64) -> Mat3 {
        let phase = std::f64::consts::TAU * self.drive_freq * t;
        self.blocks
            .iter()
            .map(|(m, h)| h * Complex64::from_polar(1.0, *m as f64 * phase))
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.drive_freq > 0.0 && self.drive_freq.is_finite()) {
            return Err(crate::error::invalid("drive_freq", "must be finite and > 0"));
        }
        let scale = self
            .blocks
            .values()
            .flat_map(|h| h.iter())
            .map(|z| z.norm())
            .fold(1.0, f64::max);
        for (&m, h) in &self.blocks {
            let partner = match self.blocks.get(&-m) {
                Some(p) => p,
                None => return Err(Error::NonHermitianBlocks { harmonic: m.abs() }),
            };
            let err = (h - partner.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            if err > 1e-12 * scale {
                return Err(Error::NonHermitianBlocks { harmonic: m.abs() });
            }
        }
        Ok(())
    }
}

/// Truncated Floquet Hamiltonian over `|α, n>`, `n ∈ [-n_max, n_max]`.
#[derive(Debug, Clone)]
pub struct FloquetMatrix {
    n_max: usize,
    drive_freq: f64,
    data: Mat<Complex64>,
}

impl FloquetMatrix {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        SPIN_DIM * (2 * self.n_max + 1)
    }

    pub fn drive_freq(&self) -> f64 {
        self.drive_freq
    }

    pub fn data(&self) -> &Mat<Complex64> {
        &self.data
    }

    /// Row of `|alpha, n>`.
    pub fn index(&self, alpha: usize, n: i32) -> usize {
        floquet_index(self.n_max, alpha, n)
    }

    /// Inverse of [`index`](Self::index).
    pub fn state_of(&self, row: usize) -> (usize, i32) {
        (row % SPIN_DIM, self.n_max as i32 - (row / SPIN_DIM) as i32)
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[(row, col)]
    }

    /// Largest `|A - A†|` entry relative to the largest entry.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut err: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                let a = self.data[(i, j)];
                scale = scale.max(a.norm());
                err = err.max((a - self.data[(j, i)].conj()).norm());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            err / scale
        }
    }
}

pub(crate) fn floquet_index(n_max: usize, alpha: usize, n: i32) -> usize {
    debug_assert!(alpha < SPIN_DIM && n.unsigned_abs() as usize <= n_max);
    (n_max as i32 - n) as usize * SPIN_DIM + alpha
}

pub fn build_floquet(fourier: &FourierHamiltonian, n_max: usize) -> Result<FloquetMatrix> {
    fourier.validate()?;
    let max_harmonic = fourier.max_harmonic();
    if n_max < max_harmonic || n_max == 0 {
        return Err(Error::TruncationTooSmall {
            n_max,
            max_harmonic: max_harmonic.max(1),
        });
    }
    let nb = 2 * n_max + 1;
    let dim = SPIN_DIM * nb;
    let omega = fourier.drive_freq;
    let mut data = Mat::<Complex64>::zeros(dim, dim);
    for bi in 0..nb {
        let n = n_max as i32 - bi as i32;
        for bj in 0..nb {
            let np = n_max as i32 - bj as i32;
            let Some(h) = fourier.blocks.get(&(n - np)) else {
                continue;
            };
            for a in 0..SPIN_DIM {
                for b in 0..SPIN_DIM {
                    data[(bi * SPIN_DIM + a, bj * SPIN_DIM + b)] = h[(a, b)];
                }
            }
        }
        for a in 0..SPIN_DIM {
            data[(bi * SPIN_DIM + a, bi * SPIN_DIM + a)] += Complex64::new(n as f64 * omega, 0.0);
        }
    }
    Ok(FloquetMatrix {
        n_max,
        drive_freq: omega,
        data,
    })
}

/// Quasi-energies (ascending) and orthonormal Floquet eigenvectors.
#[derive(Debug, Clone)]
pub struct QuasiEnergySolution {
    n_max: usize,
    drive_freq: f64,
    energies: Vec<f64>,
    /// Eigenvectors as columns.
    states: Mat<Complex64>,
}

impl QuasiEnergySolution {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn drive_freq(&self) -> f64 {
        self.drive_freq
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn states(&self) -> &Mat<Complex64> {
        &self.states
    }

    /// `<alpha, n | q_k>`.
    pub fn amplitude(&self, alpha: usize, n: i32, k: usize) -> Complex64 {
        self.states[(floquet_index(self.n_max, alpha, n), k)]
    }

    /// Quasi-energies folded into the central zone `[-ω/2, ω/2)`.
    pub fn central_zone(&self) -> Vec<f64> {
        let w = self.drive_freq;
        self.energies
            .iter()
            .filter(|e| **e >= -0.5 * w && **e < 0.5 * w)
            .copied()
            .collect()
    }

    /// Largest `‖H v - ε v‖ / ‖H‖_max` over all pairs.
    pub fn max_residual(&self, fm: &FloquetMatrix) -> f64 {
        let h = fm.data();
        let hv = h * &self.states;
        let dim = self.dim();
        let scale = (0..dim)
            .flat_map(|j| (0..dim).map(move |i| (i, j)))
            .map(|(i, j)| h[(i, j)].norm())
            .fold(0.0, f64::max)
            .max(1.0);
        let mut worst: f64 = 0.0;
        for k in 0..dim {
            let e = self.energies[k];
            let r: f64 = (0..dim)
                .map(|i| (hv[(i, k)] - self.states[(i, k)] * e).norm_sqr())
                .sum::<f64>()
                .sqrt();
            worst = worst.max(r / scale);
        }
        worst
    }

    /// Largest deviation of `U†U` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let g = self.states.adjoint() * &self.states;
        let dim = self.dim();
        let mut worst: f64 = 0.0;
        for j in 0..dim {
            for i in 0..dim {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).norm());
            }
        }
        worst
    }

    /// Time-averaged `P(alpha -> beta)` for every `beta`, starting from `|alpha, 0>`.
    ///
    /// `P(α→β) = Σ_k |<α,0|q_k>|² Σ_n |<β,n|q_k>|²`, summed over all
    /// retained eigenpairs and Fourier indices.
    pub fn transition_probabilities_from(&self, alpha: usize) -> [f64; SPIN_DIM] {
        let start = floquet_index(self.n_max, alpha, 0);
        let mut out = [0.0; SPIN_DIM];
        let dim = self.dim();
        for k in 0..dim {
            let col = self.states.col(k);
            let w = col[start].norm_sqr();
            if w == 0.0 {
                continue;
            }
            let mut per_state = [0.0; SPIN_DIM];
            for row in 0..dim {
                per_state[row % SPIN_DIM] += col[row].norm_sqr();
            }
            for (o, p) in out.iter_mut().zip(per_state) {
                *o += w * p;
            }
        }
        out
    }
}

pub fn quasi_energies(fm: &FloquetMatrix) -> Result<QuasiEnergySolution> {
    let evd = fm
        .data
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::NumericalFailure(format!("Hermitian eigensolver: {e:?}")))?;
    let s = evd.S();
    let u = evd.U();
    let dim = fm.dim();
    let energies: Vec<f64> = (0..dim).map(|i| s[i].re).collect();
    if energies.iter().any(|e| !e.is_finite()) {
        return Err(Error::NumericalFailure("non-finite quasi-energy".into()));
    }
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        energies[a].total_cmp(&energies[b]).then_with(|| {
            (0..dim)
                .map(|i| u[(i, a)].norm().total_cmp(&u[(i, b)].norm()))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    let states = Mat::from_fn(dim, dim, |i, k| u[(i, order[k])]);
    Ok(QuasiEnergySolution {
        n_max: fm.n_max,
        drive_freq: fm.drive_freq,
        energies: order.iter().map(|&k| energies[k]).collect(),
        states,
    })
}

/// Time-averaged transition probability from `|alpha>` to `|beta>`.
pub fn transition_probability(sol: &QuasiEnergySolution, alpha: usize, beta: usize) -> f64 {
    sol.transition_probabilities_from(alpha)[beta].clamp(0.0, 1.0)
}

/// Transition probabilities at a list of truncation orders.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub entries: Vec<(usize, f64)>,
    /// Smallest `n_max` whose probability differs from the next entry by less than `tol`.
    pub recommended: usize,
    pub tol: f64,
}

pub const DEFAULT_CONVERGENCE_TOL: f64 = 1e-5;

pub fn convergence_scan(
    fourier: &FourierHamiltonian,
    alpha: usize,
    beta: usize,
    n_list: &[usize],
    tol: f64,
) -> Result<ConvergenceReport> {
    if n_list.len() < 2 {
        return Err(crate::error::invalid("n_list", "needs at least two truncation orders"));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(crate::error::invalid("n_list", "must be strictly ascending"));
    }
    let entries = n_list
        .iter()
        .map(|&n| {
            let fm = build_floquet(fourier, n)?;
            let sol = quasi_energies(&fm)?;
            Ok((n, transition_probability(&sol, alpha, beta)))
        })
        .collect::<Result<Vec<_>>>()?;
    let last = entries.len() - 1;
    let delta = (entries[last].1 - entries[last - 1].1).abs();
    if delta > tol {
        return Err(Error::NoConvergence { delta, tol });
    }
    let recommended = entries
        .windows(2)
        .position(|w| (w[0].1 - w[1].1).abs() < tol)
        .map(|i| entries[i].0)
        .unwrap_or(entries[last].0);
    Ok(ConvergenceReport {
        entries,
        recommended,
        tol,
    })
}
