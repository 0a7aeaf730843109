//! Spin-1 operator algebra and the static NV ground-state Hamiltonian.
//!
//! Matrices are written in the `m_s = {+1, 0, -1}` basis. All energies are
//! ordinary frequencies in MHz.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

pub type Mat3 = Matrix3<Complex64>;
pub type Vec3 = Vector3<Complex64>;

/// Electron gyromagnetic ratio, MHz per µT (28.024 GHz/T).
pub const GAMMA_E_MHZ_PER_UT: f64 = 0.028024;

/// RF Rabi amplitude (MHz) produced by an RF field of `b_rf_ut` microtesla.
pub fn rf_amplitude_from_field(b_rf_ut: f64) -> f64 {
    GAMMA_E_MHZ_PER_UT * b_rf_ut
}

/// Inverse of [`rf_amplitude_from_field`].
pub fn rf_field_from_amplitude(omega_cap_rf: f64) -> f64 {
    omega_cap_rf / GAMMA_E_MHZ_PER_UT
}

/// Physical constants and drive settings of the driven NV Hamiltonian.
///
/// Every field is an ordinary frequency in MHz. With `omega_l != 0` the MW
/// amplitudes are read as the effective amplitudes on the primed
/// transitions `|0> <-> |B'>` and `|0> <-> |D'>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub d_gs: f64,
    pub m_x: f64,
    pub omega_l: f64,
    pub lambda_b: f64,
    pub lambda_d: f64,
    pub omega_rf: f64,
    pub omega_cap_rf: f64,
    pub omega_mw: f64,
}

impl Default for SystemParams {
    /// Parameters of the weak-RF perpendicular-field measurement.
    fn default() -> Self {
        SystemParams {
            d_gs: 2882.5,
            m_x: 4.545,
            omega_l: 0.0,
            lambda_b: 0.12,
            lambda_d: 0.12,
            omega_rf: 9.09,
            omega_cap_rf: 1.956,
            omega_mw: 2882.5,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("d_gs", self.d_gs),
            ("m_x", self.m_x),
            ("omega_l", self.omega_l),
            ("lambda_b", self.lambda_b),
            ("lambda_d", self.lambda_d),
            ("omega_rf", self.omega_rf),
            ("omega_cap_rf", self.omega_cap_rf),
            ("omega_mw", self.omega_mw),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        if self.d_gs <= 0.0 {
            return Err(invalid("d_gs", "must be > 0"));
        }
        if self.m_x < 0.0 {
            return Err(invalid("m_x", "must be >= 0"));
        }
        if self.omega_rf <= 0.0 {
            return Err(invalid("omega_rf", "must be > 0"));
        }
        if self.omega_cap_rf < 0.0 {
            return Err(invalid("omega_cap_rf", "must be >= 0"));
        }
        if self.lambda_b < 0.0 {
            return Err(invalid("lambda_b", "must be >= 0"));
        }
        if self.lambda_d < 0.0 {
            return Err(invalid("lambda_d", "must be >= 0"));
        }
        Ok(())
    }

    /// Half the `|B'>`-`|D'>` splitting, `sqrt(m_x^2 + omega_l^2)`.
    pub fn v(&self) -> f64 {
        self.m_x.hypot(self.omega_l)
    }

    /// MW detuning from the zero-field splitting.
    pub fn detuning(&self) -> f64 {
        self.d_gs - self.omega_mw
    }

    pub fn with_omega_mw(mut self, omega_mw: f64) -> Self {
        self.omega_mw = omega_mw;
        self
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Spin-1 matrices `(Sx, Sy, Sz)` in the `m_s = {+1, 0, -1}` ordering.
pub fn spin1_operators() -> (Mat3, Mat3, Mat3) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = c(0.0, 0.0);
    let sx = Mat3::new(z, c(s, 0.0), z, c(s, 0.0), z, c(s, 0.0), z, c(s, 0.0), z);
    let sy = Mat3::new(z, c(0.0, -s), z, c(0.0, s), z, c(0.0, -s), z, c(0.0, s), z);
    let sz = Mat3::from_diagonal(&Vec3::new(c(1.0, 0.0), z, c(-1.0, 0.0)));
    (sx, sy, sz)
}

/// `d_gs Sz^2 + m_x (Sx^2 - Sy^2) + omega_l Sz`.
pub fn static_hamiltonian(params: &SystemParams) -> Mat3 {
    let (sx, sy, sz) = spin1_operators();
    let re = |x: f64| c(x, 0.0);
    (sz * sz) * re(params.d_gs) + (sx * sx - sy * sy) * re(params.m_x) + sz * re(params.omega_l)
}

/// Three orthonormal states expressed in the `m_s` basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinBasis {
    pub labels: [&'static str; 3],
    pub vectors: [Vec3; 3],
}

impl SpinBasis {
    /// `(|B>, |0>, |D>)` with `|B> = (|+1> + |-1>)/sqrt2`, `|D> = (|+1> - |-1>)/sqrt2`.
    pub fn bright_dark() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        SpinBasis {
            labels: ["B", "0", "D"],
            vectors: [
                Vec3::new(c(s, 0.0), c(0.0, 0.0), c(s, 0.0)),
                Vec3::new(c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)),
                Vec3::new(c(s, 0.0), c(0.0, 0.0), c(-s, 0.0)),
            ],
        }
    }

    /// Unitary whose columns are the basis vectors.
    pub fn matrix(&self) -> Mat3 {
        Mat3::from_columns(&self.vectors)
    }

    /// `U^† op U`: matrix elements of `op` between basis states.
    pub fn project(&self, op: &Mat3) -> Mat3 {
        let u = self.matrix();
        u.adjoint() * op * u
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let u = self.matrix();
        (u.adjoint() * u - Mat3::identity())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// Eigenbasis `(|B'>, |0>, |D'>)` of the static Hamiltonian with its energies.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimedBasis {
    pub basis: SpinBasis,
    /// Energies in basis order: `d_gs + V`, `0`, `d_gs - V`.
    pub energies: [f64; 3],
}

pub fn primed_basis(params: &SystemParams) -> Result<PrimedBasis> {
    if params.m_x == 0.0 && params.omega_l == 0.0 {
        return Err(Error::DegenerateBasis);
    }
    let v = params.v();
    let a = params.m_x + v;
    let w = params.omega_l;
    let norm = a.hypot(w);
    let bd = SpinBasis::bright_dark();
    let [b, zero, d] = bd.vectors;
    let scale = |x: f64| c(x / norm, 0.0);
    let b_prime = b * scale(a) + d * scale(w);
    let d_prime = b * scale(-w) + d * scale(a);
    Ok(PrimedBasis {
        basis: SpinBasis {
            labels: ["B'", "0", "D'"],
            vectors: [b_prime, zero, d_prime],
        },
        energies: [params.d_gs + v, 0.0, params.d_gs - v],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix3;

    fn max_abs(m: &Mat3) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn real_eigenvalues(h: &Mat3) -> Vec<f64> {
        let mut e: Vec<f64> = h.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e
    }

    fn params(d_gs: f64, m_x: f64, omega_l: f64) -> SystemParams {
        SystemParams {
            d_gs,
            m_x,
            omega_l,
            ..SystemParams::default()
        }
    }

    #[test]
    fn spin_algebra() {
        let (sx, sy, sz) = spin1_operators();
        for s in [&sx, &sy, &sz] {
            assert!(max_abs(&(s - s.adjoint())) < 1e-15);
        }
        let comm = sx * sy - sy * sx - sz * c(0.0, 1.0);
        assert!(max_abs(&comm) < 1e-15);
        let casimir = sx * sx + sy * sy + sz * sz - Mat3::identity() * c(2.0, 0.0);
        assert!(max_abs(&casimir) < 1e-15);
        assert_eq!(real_eigenvalues(&sz), vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn static_spectrum_without_parallel_field() {
        let e = real_eigenvalues(&static_hamiltonian(&params(2882.5, 4.545, 0.0)));
        let want = [0.0, 2877.955, 2887.045];
        for (got, want) in e.iter().zip(want) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn static_spectrum_with_parallel_field() {
        let p = params(2882.5, 4.40, 0.50);
        let v = (4.40f64 * 4.40 + 0.25).sqrt();
        let e = real_eigenvalues(&static_hamiltonian(&p));
        for (got, want) in e.iter().zip([0.0, 2882.5 - v, 2882.5 + v]) {
            assert!((got - want).abs() < 1e-9);
        }
    }

    #[test]
    fn pure_zero_field_splitting_is_degenerate() {
        let e = real_eigenvalues(&static_hamiltonian(&params(1.0, 0.0, 0.0)));
        assert!((e[0]).abs() < 1e-15 && (e[1] - 1.0).abs() < 1e-15 && (e[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn trace_is_twice_zero_field_splitting() {
        for (d, m, w) in [(2882.5, 4.4, 0.5), (1.0, 0.0, 3.0), (10.0, 7.0, -2.0)] {
            let t = static_hamiltonian(&params(d, m, w)).trace();
            assert!((t.re - 2.0 * d).abs() < 1e-12 && t.im.abs() < 1e-12);
        }
    }

    #[test]
    fn primed_basis_reduces_to_bright_dark() {
        let pb = primed_basis(&params(2882.5, 4.545, 0.0)).unwrap();
        assert_eq!(pb.basis.vectors, SpinBasis::bright_dark().vectors);
    }

    #[test]
    fn primed_basis_three_four_five() {
        let p = params(2882.5, 3.0, 4.0);
        assert_eq!(p.v(), 5.0);
        let pb = primed_basis(&p).unwrap();
        // |B'> ∝ 8|B> + 4|D>, checked as an eigenvector by direct multiplication.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let unnorm = Vec3::new(c(12.0 * s, 0.0), c(0.0, 0.0), c(4.0 * s, 0.0));
        let expected = unnorm / c(unnorm.norm(), 0.0);
        assert!((pb.basis.vectors[0] - expected).norm() < 1e-14);
        let h = static_hamiltonian(&p);
        let resid = h * expected - expected * c(2882.5 + 5.0, 0.0);
        assert!(resid.norm() < 1e-10);
    }

    #[test]
    fn primed_basis_is_orthonormal_eigenbasis() {
        let p = params(2882.5, 4.40, 0.50);
        let pb = primed_basis(&p).unwrap();
        assert!(pb.basis.orthonormality_error() < 1e-12);
        let h = static_hamiltonian(&p);
        for (v, e) in pb.basis.vectors.iter().zip(pb.energies) {
            assert!((h * v - v * c(e, 0.0)).norm() < 1e-10);
        }
        let diag: Matrix3<Complex64> = pb.basis.project(&h);
        assert!((diag[(0, 0)].re - pb.energies[0]).abs() < 1e-9);
    }

    #[test]
    fn degenerate_basis_rejected() {
        assert_eq!(primed_basis(&params(2882.5, 0.0, 0.0)), Err(Error::DegenerateBasis));
    }

    #[test]
    fn bright_overlap_tends_to_one_monotonically() {
        let bright = SpinBasis::bright_dark().vectors[0];
        let mut last = 0.0;
        for w in [2.0, 1.0, 0.5, 0.1, 0.01, 1e-4, 1e-8] {
            let pb = primed_basis(&params(2882.5, 4.4, w)).unwrap();
            let ov = pb.basis.vectors[0].dotc(&bright).norm_sqr();
            assert!(ov > last);
            last = ov;
        }
        assert!((last - 1.0).abs() < 1e-15);
    }

    #[test]
    fn field_conversion_matches_reported_pairing() {
        assert!((rf_amplitude_from_field(69.8) - 1.956).abs() < 1e-3);
        assert!((rf_amplitude_from_field(136.8) - 3.83).abs() < 1e-2);
        assert!((rf_field_from_amplitude(rf_amplitude_from_field(42.0)) - 42.0).abs() < 1e-12);
    }

    #[test]
    fn validation_rejects_bad_values() {
        let mut p = SystemParams::default();
        p.omega_rf = 0.0;
        assert!(p.validate().is_err());
        let mut p = SystemParams::default();
        p.m_x = -1.0;
        assert!(p.validate().is_err());
        assert!(SystemParams::default().validate().is_ok());
    }
}
