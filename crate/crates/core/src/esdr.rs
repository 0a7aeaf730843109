//! ESDR Fourier blocks and two-dimensional spectra.
//!
//! The MW drive is kept within the first rotating frame, so the remaining
//! time dependence is the RF drive `2 Ω_RF Sz cos(ω_RF t)`. In the
//! `(B', 0, D')` eigenbasis of the static Hamiltonian that gives
//!
//! ```text
//! H^(0)  = [[Δ+V, λb, 0], [λb, 0, iλd], [0, -iλd, Δ-V]]
//! H^(±1) = Ω/V · [[ω_L, 0, M_x], [0, 0, 0], [M_x, 0, -ω_L]]
//! ```
//!
//! with `Δ = d_gs - ω_MW` and `V = sqrt(M_x² + ω_L²)`.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::floquet::{build_floquet, quasi_energies, FourierHamiltonian};
use crate::format::sig9;
use crate::kv::KvDocument;
use crate::spin::{primed_basis, spin1_operators, Mat3, SpinBasis, SystemParams};

/// Basis slots in the `(B', 0, D')` ordering.
pub const BRIGHT: usize = 0;
pub const GROUND: usize = 1;
pub const DARK: usize = 2;

pub const DEFAULT_N_MAX: usize = 67;

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Fourier blocks in the primed eigenbasis; reduces to the bright/dark
/// layout when `omega_l = 0`.
pub fn esdr_fourier_blocks(params: &SystemParams) -> Result<FourierHamiltonian> {
    params.validate()?;
    primed_basis(params)?;
    let v = params.v();
    let delta = params.detuning();
    let z = re(0.0);
    let lb = re(params.lambda_b);
    let ld = Complex64::new(0.0, params.lambda_d);
    let h0 = Mat3::new(
        re(delta + v), lb, z,
        lb, z, ld,
        z, ld.conj(), re(delta - v),
    );
    let diag = params.omega_l * params.omega_cap_rf / v;
    let off = params.m_x * params.omega_cap_rf / v;
    let h1 = Mat3::new(
        re(diag), z, re(off),
        z, z, z,
        re(off), z, re(-diag),
    );
    Ok(FourierHamiltonian::new(h0, params.omega_rf).with_harmonic(1, h1))
}

/// Fourier blocks obtained by projecting the rotating-frame spin operators
/// onto the bright/dark basis `(B, 0, D)`.
///
/// Static part `Δ Sz² + M_x (Sx² - Sy²) + ω_L Sz + λb Sx + λd Sy`, drive
/// `Ω_RF Sz` at `m = ±1`. Here the MW amplitudes are the bare ones along
/// `x` and `y`; with `omega_l = 0` this coincides with
/// [`esdr_fourier_blocks`].
pub fn operator_fourier_blocks(params: &SystemParams) -> Result<FourierHamiltonian> {
    params.validate()?;
    let (sx, sy, sz) = spin1_operators();
    let h0 = (sz * sz) * re(params.detuning())
        + (sx * sx - sy * sy) * re(params.m_x)
        + sz * re(params.omega_l)
        + sx * re(params.lambda_b)
        + sy * re(params.lambda_d);
    let basis = SpinBasis::bright_dark();
    let h1 = basis.project(&(sz * re(params.omega_cap_rf)));
    Ok(FourierHamiltonian::new(basis.project(&h0), params.omega_rf).with_harmonic(1, h1))
}

/// Time-averaged probability of leaving `|0>` for a single set of parameters.
pub fn leave_probability(params: &SystemParams, n_max: usize) -> Result<f64> {
    leave_probability_for(&esdr_fourier_blocks(params)?, n_max)
}

pub fn leave_probability_for(fourier: &FourierHamiltonian, n_max: usize) -> Result<f64> {
    let sol = quasi_energies(&build_floquet(fourier, n_max)?)?;
    let p = sol.transition_probabilities_from(GROUND);
    Ok((p[BRIGHT] + p[DARK]).clamp(0.0, 1.0))
}

/// Inclusive, evenly spaced axis in MHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Axis {
    pub fn new(start: f64, stop: f64, step: f64) -> Self {
        Axis { start, stop, step }
    }

    /// A single value.
    pub fn point(x: f64) -> Self {
        Axis { start: x, stop: x, step: 1.0 }
    }

    pub fn validate(&self, name: &'static str) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite() && self.step.is_finite()) {
            return Err(invalid(name, "axis bounds must be finite"));
        }
        if self.step <= 0.0 {
            return Err(invalid(name, "step must be > 0"));
        }
        if self.stop < self.start {
            return Err(invalid(name, "empty range (stop < start)"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    RfFrequency,
    RfAmplitude,
}

impl SweepKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepKind::RfFrequency => "rf_frequency",
            SweepKind::RfAmplitude => "rf_amplitude",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "rf_frequency" => Some(SweepKind::RfFrequency),
            "rf_amplitude" => Some(SweepKind::RfAmplitude),
            _ => None,
        }
    }

    pub fn apply(&self, params: SystemParams, value: f64) -> SystemParams {
        let mut p = params;
        match self {
            SweepKind::RfFrequency => p.omega_rf = value,
            SweepKind::RfAmplitude => p.omega_cap_rf = value,
        }
        p
    }
}

/// MW axis versus an RF-frequency or RF-amplitude axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub params: SystemParams,
    pub mw_axis: Axis,
    pub sweep_kind: SweepKind,
    pub sweep_axis: Axis,
    pub n_max: usize,
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        self.mw_axis.validate("mw_axis")?;
        self.sweep_axis.validate("sweep_axis")?;
        if self.n_max == 0 {
            return Err(invalid("n_max", "must be >= 1"));
        }
        if self.sweep_kind == SweepKind::RfFrequency && self.sweep_axis.start <= 0.0 {
            return Err(invalid("sweep_axis", "RF frequencies must be > 0"));
        }
        if self.sweep_kind == SweepKind::RfAmplitude && self.sweep_axis.start < 0.0 {
            return Err(invalid("sweep_axis", "RF amplitudes must be >= 0"));
        }
        for &s in &[self.sweep_axis.start, self.sweep_axis.stop] {
            let p = self.sweep_kind.apply(self.params, s);
            p.validate()?;
            primed_basis(&p)?;
        }
        Ok(())
    }

    /// Parameters at grid point `(sweep, mw)`.
    pub fn params_at(&self, sweep: f64, mw: f64) -> SystemParams {
        self.sweep_kind.apply(self.params, sweep).with_omega_mw(mw)
    }

    pub fn to_kv(&self, doc: &mut KvDocument) {
        let p = &self.params;
        for (k, v) in [
            ("d_gs", p.d_gs),
            ("m_x", p.m_x),
            ("omega_l", p.omega_l),
            ("lambda_b", p.lambda_b),
            ("lambda_d", p.lambda_d),
            ("omega_rf", p.omega_rf),
            ("omega_cap_rf", p.omega_cap_rf),
        ] {
            doc.push("params", k, v);
        }
        doc.push("sweep", "kind", self.sweep_kind.as_str());
        doc.push("sweep", "mw_start", self.mw_axis.start);
        doc.push("sweep", "mw_stop", self.mw_axis.stop);
        doc.push("sweep", "mw_step", self.mw_axis.step);
        doc.push("sweep", "start", self.sweep_axis.start);
        doc.push("sweep", "stop", self.sweep_axis.stop);
        doc.push("sweep", "step", self.sweep_axis.step);
        doc.push("sweep", "n_max", self.n_max);
    }

    /// Reads the `[params]` and `[sweep]` sections written by [`to_kv`](Self::to_kv).
    pub fn from_kv(doc: &KvDocument) -> Result<Self> {
        fn num(doc: &KvDocument, section: &str, key: &'static str) -> Result<f64> {
            let raw = doc
                .get(section, key)
                .ok_or_else(|| invalid(key, format!("missing in [{section}]")))?;
            raw.parse::<f64>()
                .map_err(|_| invalid(key, format!("not a number: `{raw}`")))
        }
        let params = SystemParams {
            d_gs: num(doc, "params", "d_gs")?,
            m_x: num(doc, "params", "m_x")?,
            omega_l: num(doc, "params", "omega_l")?,
            lambda_b: num(doc, "params", "lambda_b")?,
            lambda_d: num(doc, "params", "lambda_d")?,
            omega_rf: num(doc, "params", "omega_rf")?,
            omega_cap_rf: num(doc, "params", "omega_cap_rf")?,
            omega_mw: num(doc, "params", "d_gs")?,
        };
        let kind_raw = doc.get("sweep", "kind").unwrap_or("");
        let sweep_kind = SweepKind::parse(kind_raw)
            .ok_or_else(|| invalid("kind", format!("unknown sweep kind `{kind_raw}`")))?;
        let n_max_raw = doc.get("sweep", "n_max").unwrap_or("");
        let n_max = n_max_raw
            .parse::<usize>()
            .map_err(|_| invalid("n_max", format!("not a positive integer: `{n_max_raw}`")))?;
        let plan = SweepPlan {
            params,
            mw_axis: Axis::new(
                num(doc, "sweep", "mw_start")?,
                num(doc, "sweep", "mw_stop")?,
                num(doc, "sweep", "mw_step")?,
            ),
            sweep_kind,
            sweep_axis: Axis::new(
                num(doc, "sweep", "start")?,
                num(doc, "sweep", "stop")?,
                num(doc, "sweep", "step")?,
            ),
            n_max,
        };
        plan.validate()?;
        Ok(plan)
    }
}

/// Grid of time-averaged leave probabilities, rows indexed by sweep value.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub mw: Vec<f64>,
    pub sweep: Vec<f64>,
    /// Row-major `[sweep][mw]`.
    pub p_leave: Vec<f64>,
    pub plan: SweepPlan,
    pub code_version: String,
}

impl Spectrum {
    pub fn from_parts(mw: Vec<f64>, sweep: Vec<f64>, p_leave: Vec<f64>, plan: SweepPlan) -> Result<Self> {
        if mw.is_empty() || sweep.is_empty() {
            return Err(Error::EmptySpectrum);
        }
        if p_leave.len() != mw.len() * sweep.len() {
            return Err(invalid(
                "p_leave",
                format!("expected {}x{} values, got {}", sweep.len(), mw.len(), p_leave.len()),
            ));
        }
        if p_leave.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(invalid("p_leave", "values must lie in [0, 1]"));
        }
        Ok(Spectrum {
            mw,
            sweep,
            p_leave,
            plan,
            code_version: CODE_VERSION.to_string(),
        })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.mw.len();
        &self.p_leave[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = (f64, &[f64])> {
        self.sweep.iter().copied().zip(self.p_leave.chunks(self.mw.len()))
    }

    pub fn mw_step(&self) -> f64 {
        if self.mw.len() > 1 {
            self.mw[1] - self.mw[0]
        } else {
            self.plan.mw_axis.step
        }
    }

    /// Multiplies every value by `factor` (kept within `[0, 1]` by the caller).
    pub fn scaled(&self, factor: f64) -> Spectrum {
        let mut s = self.clone();
        s.p_leave.iter_mut().for_each(|p| *p *= factor);
        s
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(b"mw_mhz,sweep_mhz,p_leave\n")?;
        for (s, row) in self.rows() {
            for (m, p) in self.mw.iter().zip(row) {
                writeln!(w, "{},{},{}", sig9(*m), sig9(s), sig9(*p))?;
            }
        }
        Ok(())
    }

    pub fn metadata(&self) -> KvDocument {
        let mut doc = KvDocument::default();
        self.plan.to_kv(&mut doc);
        doc.push("meta", "code_version", &self.code_version);
        doc.push("meta", "rows", self.sweep.len());
        doc.push("meta", "columns", self.mw.len());
        doc
    }

    /// Reads a spectrum CSV together with its plan.
    pub fn read_csv(text: &str, plan: SweepPlan) -> Result<Spectrum> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == "mw_mhz,sweep_mhz,p_leave" => {}
            _ => return Err(invalid("spectrum", "missing `mw_mhz,sweep_mhz,p_leave` header")),
        }
        let mut mw: Vec<f64> = Vec::new();
        let mut sweep: Vec<f64> = Vec::new();
        let mut values = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<f64> = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| invalid("spectrum", format!("bad number on data line {}", i + 1)))?;
            if cols.len() != 3 {
                return Err(invalid("spectrum", format!("expected 3 columns on data line {}", i + 1)));
            }
            if sweep.last() != Some(&cols[1]) {
                sweep.push(cols[1]);
            }
            if sweep.len() == 1 {
                mw.push(cols[0]);
            }
            values.push(cols[2]);
        }
        Spectrum::from_parts(mw, sweep, values, plan)
    }
}

/// Evaluates the leave probability on every grid point of `plan`.
///
/// Points are independent and may run on the current rayon pool; the
/// result is assembled in row-major `(sweep, mw)` order.
pub fn run_sweep(plan: &SweepPlan) -> Result<Spectrum> {
    plan.validate()?;
    let mw = plan.mw_axis.values();
    let sweep = plan.sweep_axis.values();
    let points: Vec<(f64, f64)> = sweep
        .iter()
        .flat_map(|&s| mw.iter().map(move |&m| (s, m)))
        .collect();
    let values = points
        .par_iter()
        .map(|&(s, m)| {
            leave_probability(&plan.params_at(s, m), plan.n_max).map_err(|e| Error::AtGridPoint {
                sweep_mhz: s,
                mw_mhz: m,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Spectrum::from_parts(mw, sweep, values, plan.clone())
}
