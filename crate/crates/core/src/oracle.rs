//! Time-domain propagation of the rotating-frame three-level Hamiltonian.
//!
//! This is an independent check on the Floquet transition probabilities:
//! the same Fourier blocks are summed back into `H(t)` and integrated with a
//! fourth-order Magnus scheme (two Gauss-Legendre nodes per step). Each step
//! propagator is a matrix exponential of an anti-Hermitian matrix, so the
//! norm is conserved to rounding.
//!
//! Times are in µs and frequencies in MHz, so the Schrödinger equation reads
//! `dψ/dt = -2πi H(t) ψ`.

use std::io::Write;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::esdr::{esdr_fourier_blocks, BRIGHT, DARK, GROUND};
use crate::floquet::FourierHamiltonian;
use crate::format::sig9;
use crate::spin::{Mat3, SystemParams, Vec3};

pub const MIN_STEPS_PER_PERIOD: f64 = 50.0;
pub const MIN_PERIODS: f64 = 200.0;
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;
pub const SCHEME: &str = "magnus4-gauss2";

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationPlan {
    pub params: SystemParams,
    /// Requested duration, µs; rounded up to whole RF periods.
    pub total_time: f64,
    /// Upper bound on the step, µs; reduced so a period holds a whole number of steps.
    pub step: f64,
    /// Initial basis slot (`GROUND`, `BRIGHT` or `DARK`).
    pub initial: usize,
    /// Minimum fraction of the trajectory covered by the averaging window.
    pub window_fraction: f64,
    /// Number of equally spaced initial RF phases averaged over.
    pub drive_phases: usize,
    /// Keep every n-th sample of the first trajectory.
    pub record_every: usize,
}

impl PropagationPlan {
    /// Starts in `|0>` with an 80% window, one drive phase and 50 steps per period.
    pub fn new(params: SystemParams, total_time: f64) -> Self {
        PropagationPlan {
            params,
            total_time,
            step: 1.0 / (params.omega_rf * MIN_STEPS_PER_PERIOD),
            initial: GROUND,
            window_fraction: 0.8,
            drive_phases: 1,
            record_every: 0,
        }
    }

    pub fn period(&self) -> f64 {
        1.0 / self.params.omega_rf
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let period = self.period();
        if !(self.step > 0.0) || self.step > period / MIN_STEPS_PER_PERIOD * (1.0 + 1e-12) {
            return Err(invalid("step", format!("must be in (0, period/{MIN_STEPS_PER_PERIOD}]")));
        }
        if !(self.total_time >= MIN_PERIODS * period * (1.0 - 1e-12)) {
            return Err(invalid("total_time", format!("must span at least {MIN_PERIODS} RF periods")));
        }
        if self.initial > 2 {
            return Err(invalid("initial", "basis slot must be 0, 1 or 2"));
        }
        if !(self.window_fraction > 0.0 && self.window_fraction <= 1.0) {
            return Err(invalid("window_fraction", "must be in (0, 1]"));
        }
        if self.drive_phases == 0 {
            return Err(invalid("drive_phases", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    pub times: Vec<f64>,
    /// Populations in basis order `(B', 0, D')`.
    pub populations: Vec<[f64; 3]>,
    /// Window-averaged populations, averaged over drive phases.
    pub averages: [f64; 3],
    pub norm_drift: f64,
    pub step_used: f64,
    pub steps_per_period: usize,
    pub periods: usize,
    pub window_periods: usize,
    pub scheme: &'static str,
}

impl Propagation {
    /// Averaged probability of having left the initial state `|0>`.
    pub fn p_leave(&self) -> f64 {
        self.averages[BRIGHT] + self.averages[DARK]
    }

    /// Writes `t_us,p0,pb,pd`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(b"t_us,p0,pb,pd\n")?;
        for (t, p) in self.times.iter().zip(&self.populations) {
            writeln!(w, "{},{},{},{}", sig9(*t), sig9(p[GROUND]), sig9(p[BRIGHT]), sig9(p[DARK]))?;
        }
        Ok(())
    }

    pub fn describe_steps(&self) -> String {
        format!(
            "scheme={} step_us={} steps_per_period={} periods={} window_periods={}",
            self.scheme, self.step_used, self.steps_per_period, self.periods, self.window_periods
        )
    }
}

fn step_propagator(fourier: &FourierHamiltonian, t: f64, h: f64) -> Mat3 {
    let offset = 3f64.sqrt() / 6.0;
    let minus_two_pi_i = Complex64::new(0.0, -std::f64::consts::TAU);
    let a1 = fourier.evaluate(t + (0.5 - offset) * h) * minus_two_pi_i;
    let a2 = fourier.evaluate(t + (0.5 + offset) * h) * minus_two_pi_i;
    let comm = a2 * a1 - a1 * a2;
    let generator = (a1 + a2) * Complex64::new(0.5 * h, 0.0) + comm * Complex64::new(3f64.sqrt() / 12.0 * h * h, 0.0);
    generator.exp()
}

fn populations(psi: &Vec3) -> [f64; 3] {
    [psi[0].norm_sqr(), psi[1].norm_sqr(), psi[2].norm_sqr()]
}

pub fn propagate(plan: &PropagationPlan) -> Result<Propagation> {
    plan.validate()?;
    let fourier = esdr_fourier_blocks(&plan.params)?;
    let period = plan.period();
    let spp = (period / plan.step - 1e-9).ceil().max(MIN_STEPS_PER_PERIOD) as usize;
    let h = period / spp as f64;
    let periods = (plan.total_time / period - 1e-9).ceil() as usize;
    let window_periods = ((plan.window_fraction * periods as f64) - 1e-9).ceil().max(1.0) as usize;
    let window_start = (periods - window_periods) * spp;
    let total_steps = periods * spp;
    let window_steps = window_periods * spp;

    let mut times = Vec::new();
    let mut recorded = Vec::new();
    let mut averages = [0.0; 3];
    let mut norm_drift: f64 = 0.0;

    for phase in 0..plan.drive_phases {
        let t0 = period * phase as f64 / plan.drive_phases as f64;
        // H(t) is periodic and the steps tile a period exactly, so one
        // period of step propagators serves the whole trajectory.
        let props: Vec<Mat3> = (0..spp).map(|i| step_propagator(&fourier, t0 + i as f64 * h, h)).collect();
        let mut psi = Vec3::zeros();
        psi[plan.initial] = Complex64::new(1.0, 0.0);
        let mut acc = [0.0; 3];
        let record = phase == 0 && plan.record_every > 0;
        for step in 0..=total_steps {
            let pops = populations(&psi);
            norm_drift = norm_drift.max((pops.iter().sum::<f64>() - 1.0).abs());
            if step >= window_start {
                let weight = if step == window_start || step == total_steps { 0.5 } else { 1.0 };
                for (a, p) in acc.iter_mut().zip(pops) {
                    *a += weight * p;
                }
            }
            if record && step % plan.record_every == 0 {
                times.push(step as f64 * h);
                recorded.push(pops);
            }
            if step < total_steps {
                psi = props[step % spp] * psi;
            }
        }
        for (avg, a) in averages.iter_mut().zip(acc) {
            *avg += a / window_steps as f64 / plan.drive_phases as f64;
        }
    }
    if !norm_drift.is_finite() || norm_drift > NORM_DRIFT_LIMIT {
        return Err(Error::StepTooLarge { drift: norm_drift });
    }
    Ok(Propagation {
        times,
        populations: recorded,
        averages,
        norm_drift,
        step_used: h,
        steps_per_period: spp,
        periods,
        window_periods,
        scheme: SCHEME,
    })
}

/// One point of the oracle-versus-Floquet comparison panel.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelPoint {
    pub label: String,
    pub params: SystemParams,
}

/// Twelve points: weak (0.5 MHz), weak-RF (1.956 MHz) and strong-RF (3.83 MHz)
/// drive, each on and off the MW resonances, with a small parallel field.
pub fn standard_panel() -> Vec<PanelPoint> {
    let base = SystemParams {
        d_gs: 2882.5,
        m_x: 4.40,
        omega_l: 0.50,
        lambda_b: 0.12,
        lambda_d: 0.12,
        ..SystemParams::default()
    };
    let v = base.v();
    let mut out = Vec::new();
    for (name, amp) in [("weak", 0.5), ("moderate", 1.956), ("strong", 3.83)] {
        let single = SystemParams {
            omega_rf: 2.0 * v,
            omega_cap_rf: amp,
            ..base
        };
        let [_, hi] = crate::analytic::single_photon_resonances(&single);
        let two_photon = SystemParams {
            omega_rf: 5.5,
            omega_cap_rf: amp,
            ..base
        };
        out.push(PanelPoint {
            label: format!("{name}/single-photon inner branch"),
            params: single.with_omega_mw(hi.lower),
        });
        out.push(PanelPoint {
            label: format!("{name}/single-photon outer branch"),
            params: single.with_omega_mw(hi.upper),
        });
        out.push(PanelPoint {
            label: format!("{name}/between branches"),
            params: single.with_omega_mw(base.d_gs + 1.0),
        });
        out.push(PanelPoint {
            label: format!("{name}/rf 5.5 MHz near bright line"),
            params: two_photon.with_omega_mw(base.d_gs + v),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> SystemParams {
        SystemParams {
            lambda_b: 0.0,
            lambda_d: 0.0,
            omega_cap_rf: 0.0,
            ..SystemParams::default()
        }
    }

    #[test]
    fn stationary_without_drives() {
        let plan = PropagationPlan {
            record_every: 100,
            ..PropagationPlan::new(quiet(), 30.0)
        };
        let out = propagate(&plan).unwrap();
        for p in &out.populations {
            assert!((p[GROUND] - 1.0).abs() < 1e-14);
        }
        assert!((out.averages[GROUND] - 1.0).abs() < 1e-14);
        assert!(out.norm_drift < 1e-12);
    }

    #[test]
    fn resonant_rabi_averages_to_half() {
        let lambda = 0.5;
        let params = SystemParams {
            lambda_b: lambda,
            lambda_d: 0.0,
            omega_cap_rf: 0.0,
            omega_rf: 9.09,
            m_x: 4.545,
            ..SystemParams::default()
        };
        // bright line on resonance: Δ + V = 0
        let params = params.with_omega_mw(params.d_gs + params.v());
        let plan = PropagationPlan {
            record_every: 1,
            ..PropagationPlan::new(params, 200.0)
        };
        let out = propagate(&plan).unwrap();
        assert!((out.averages[BRIGHT] - 0.5).abs() < 2e-3, "{:?}", out.averages);
        // |<B|ψ(t)>|² = sin²(2π λ t)
        for (t, p) in out.times.iter().zip(&out.populations).step_by(97) {
            let want = (std::f64::consts::TAU * lambda * t).sin().powi(2);
            assert!((p[BRIGHT] - want).abs() < 1e-8, "t={t}");
        }
        assert!(out.norm_drift < 1e-8);
    }

    #[test]
    fn rejects_coarse_steps_and_short_runs() {
        let p = SystemParams::default();
        let mut plan = PropagationPlan::new(p, 100.0);
        plan.step = 1.0 / (p.omega_rf * 10.0);
        assert!(propagate(&plan).is_err());
        let plan = PropagationPlan::new(p, 1.0);
        assert!(propagate(&plan).is_err());
    }

    #[test]
    fn step_bookkeeping() {
        let p = SystemParams::default();
        let mut plan = PropagationPlan::new(p, 25.0);
        plan.step = 0.9 / (p.omega_rf * 50.0);
        let out = propagate(&plan).unwrap();
        assert_eq!(out.steps_per_period, 56);
        assert!((out.step_used * 56.0 * p.omega_rf - 1.0).abs() < 1e-12);
        assert_eq!(out.periods, (25.0 * 9.09f64).ceil() as usize);
        assert!(out.window_periods as f64 >= 0.8 * out.periods as f64);
        assert!(out.describe_steps().contains("magnus4"));
    }

    #[test]
    fn csv_dump_header() {
        let plan = PropagationPlan {
            record_every: 1000,
            ..PropagationPlan::new(SystemParams::default(), 25.0)
        };
        let out = propagate(&plan).unwrap();
        let mut buf = Vec::new();
        out.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t_us,p0,pb,pd\n0,1.00000000,0,0\n"));
    }

    #[test]
    fn panel_has_twelve_points() {
        let panel = standard_panel();
        assert_eq!(panel.len(), 12);
        assert!(panel.iter().all(|p| p.params.validate().is_ok()));
    }
}
