//! Run configuration: flat `key = value` text with `[section]` headers.
//!
//! Frequencies are in MHz; `b_rf` and `rf_field` sweep bounds are in µT and
//! are converted to Rabi amplitudes on load. The metadata sidecar written by
//! every command is itself a valid configuration.

use std::path::PathBuf;

use esdr_core::analytic::{
    multiphoton_resonances_rwa, multiphoton_resonances_vv, single_photon_resonances, PhotonIndices, ResonancePrediction,
};
use esdr_core::esdr::{Axis, SweepKind, SweepPlan, DEFAULT_N_MAX};
use esdr_core::extract::{DEFAULT_MIN_SEPARATION, DEFAULT_PROMINENCE};
use esdr_core::floquet::DEFAULT_CONVERGENCE_TOL;
use esdr_core::kv::{KvDocument, KvEntry};
use esdr_core::spin::rf_amplitude_from_field;
use esdr_core::SystemParams;

use crate::error::{config_err, CliResult};

pub const DEFAULT_OUT_DIR: &str = "esdr-out";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Overlay {
    SingleRwa,
    MultiRwa(PhotonIndices),
    VanVleck(PhotonIndices),
}

impl Overlay {
    pub fn parse(s: &str) -> Option<Overlay> {
        let s = s.trim();
        if s == "single_rwa" {
            return Some(Overlay::SingleRwa);
        }
        let (name, rest) = s.split_once('(')?;
        let inner = rest.strip_suffix(')')?;
        let (m, n) = inner.split_once(',')?;
        let idx = PhotonIndices::new(m.trim().parse().ok()?, n.trim().parse().ok()?);
        match name.trim() {
            "multi_rwa" => Some(Overlay::MultiRwa(idx)),
            "van_vleck" => Some(Overlay::VanVleck(idx)),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Overlay::SingleRwa => "single_rwa".into(),
            Overlay::MultiRwa(i) => format!("multi_rwa({},{})", i.m, i.n),
            Overlay::VanVleck(i) => format!("van_vleck({},{})", i.m, i.n),
        }
    }

    /// Predicted resonance pairs, each tagged with a branch name.
    pub fn evaluate(
        &self,
        p: &SystemParams,
        vv_k_max: Option<usize>,
    ) -> esdr_core::Result<Vec<(&'static str, ResonancePrediction)>> {
        Ok(match self {
            Overlay::SingleRwa => {
                let [lo, hi] = single_photon_resonances(p);
                vec![("lower_pair", lo), ("upper_pair", hi)]
            }
            Overlay::MultiRwa(i) => vec![("pair", multiphoton_resonances_rwa(p, *i)?)],
            Overlay::VanVleck(i) => vec![("pair", multiphoton_resonances_vv(p, *i, vv_k_max)?)],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSection {
    pub kind: SweepKind,
    pub mw_axis: Axis,
    pub sweep_axis: Axis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapRuleConfig {
    pub label: String,
    pub center: f64,
    pub slope: f64,
    pub half_window: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractConfig {
    pub prominence: f64,
    pub min_separation: f64,
    /// Skip rows where the branch pair is unresolved instead of failing.
    pub resolved_only: bool,
    pub gap: Option<GapRuleConfig>,
    pub stored: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub total_time: f64,
    pub drive_phases: usize,
    pub threshold: f64,
    pub zero_drive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergeConfig {
    pub n_list: Vec<usize>,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: SystemParams,
    pub sweep: Option<SweepSection>,
    pub n_max: usize,
    pub overlays: Vec<Overlay>,
    pub vv_k_max: Option<usize>,
    pub extract: ExtractConfig,
    pub verify: VerifyConfig,
    pub converge: ConvergeConfig,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let params = SystemParams::default();
        RunConfig {
            params,
            sweep: None,
            n_max: DEFAULT_N_MAX,
            overlays: Vec::new(),
            vv_k_max: None,
            extract: ExtractConfig {
                prominence: DEFAULT_PROMINENCE,
                min_separation: DEFAULT_MIN_SEPARATION,
                resolved_only: true,
                gap: None,
                stored: None,
            },
            verify: VerifyConfig {
                total_time: 4000.0,
                drive_phases: 4,
                threshold: 1e-2,
                zero_drive: true,
            },
            converge: ConvergeConfig {
                n_list: vec![2, 4, 8, 16, 32, 67],
                tol: DEFAULT_CONVERGENCE_TOL,
            },
            out_dir: PathBuf::from(DEFAULT_OUT_DIR),
        }
    }
}

fn at(e: &KvEntry, msg: impl std::fmt::Display) -> crate::error::CliError {
    config_err(format!("line {}: [{}] {}: {msg}", e.line, e.section, e.key))
}

fn num(e: &KvEntry) -> CliResult<f64> {
    let x: f64 = e.value.parse().map_err(|_| at(e, format!("not a number: `{}`", e.value)))?;
    if !x.is_finite() {
        return Err(at(e, "must be finite"));
    }
    Ok(x)
}

fn count(e: &KvEntry) -> CliResult<usize> {
    e.value
        .parse()
        .map_err(|_| at(e, format!("not a non-negative integer: `{}`", e.value)))
}

fn flag(e: &KvEntry) -> CliResult<bool> {
    match e.value.as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        v => Err(at(e, format!("expected true or false, got `{v}`"))),
    }
}

/// Splits on commas outside parentheses.
fn split_list(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0usize);
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(s[start..].trim());
    out.retain(|x| !x.is_empty());
    out
}

#[derive(Default)]
struct SweepKeys {
    kind: Option<String>,
    values: [Option<f64>; 6],
}

const SWEEP_AXIS_KEYS: [&str; 6] = ["mw_start", "mw_stop", "mw_step", "start", "stop", "step"];

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<RunConfig> {
        let doc = KvDocument::parse(text).map_err(|e| config_err(e.to_string()))?;
        let mut cfg = RunConfig::default();
        let mut omega_mw = None;
        let mut omega_cap_rf = None;
        let mut b_rf = None;
        let mut sweep = SweepKeys::default();
        let mut sweep_seen = false;
        let mut gap_keys: [Option<f64>; 3] = [None; 3];
        let mut gap_label = None;

        for e in doc.entries() {
            let p = &mut cfg.params;
            match (e.section.as_str(), e.key.as_str()) {
                ("params", "d_gs") => p.d_gs = num(e)?,
                ("params", "m_x") => p.m_x = num(e)?,
                ("params", "omega_l") => p.omega_l = num(e)?,
                ("params", "lambda_b") => p.lambda_b = num(e)?,
                ("params", "lambda_d") => p.lambda_d = num(e)?,
                ("params", "omega_rf") => p.omega_rf = num(e)?,
                ("params", "omega_cap_rf") => omega_cap_rf = Some(num(e)?),
                ("params", "b_rf") => b_rf = Some(num(e)?),
                ("params", "omega_mw") => omega_mw = Some(num(e)?),
                ("sweep", "kind") => {
                    sweep_seen = true;
                    sweep.kind = Some(e.value.clone());
                }
                ("sweep", "n_max") => {
                    cfg.n_max = count(e)?;
                    if cfg.n_max == 0 {
                        return Err(at(e, "must be >= 1"));
                    }
                }
                ("sweep", k) if SWEEP_AXIS_KEYS.contains(&k) => {
                    sweep_seen = true;
                    let i = SWEEP_AXIS_KEYS.iter().position(|x| *x == k).unwrap();
                    sweep.values[i] = Some(num(e)?);
                }
                ("analytic", "overlays") => {
                    cfg.overlays = split_list(&e.value)
                        .into_iter()
                        .map(|s| Overlay::parse(s).ok_or_else(|| at(e, format!("unknown overlay `{s}`"))))
                        .collect::<CliResult<_>>()?;
                }
                ("analytic", "vv_k_max") => cfg.vv_k_max = Some(count(e)?),
                ("extract", "prominence") => cfg.extract.prominence = num(e)?,
                ("extract", "min_separation") => cfg.extract.min_separation = num(e)?,
                ("extract", "resolved_only") => cfg.extract.resolved_only = flag(e)?,
                ("extract", "stored") => cfg.extract.stored = Some(PathBuf::from(&e.value)),
                ("extract", "gap_label") => gap_label = Some(e.value.clone()),
                ("extract", "gap_center") => gap_keys[0] = Some(num(e)?),
                ("extract", "gap_slope") => gap_keys[1] = Some(num(e)?),
                ("extract", "gap_half_window") => gap_keys[2] = Some(num(e)?),
                ("verify", "total_time") => cfg.verify.total_time = num(e)?,
                ("verify", "drive_phases") => cfg.verify.drive_phases = count(e)?,
                ("verify", "threshold") => cfg.verify.threshold = num(e)?,
                ("verify", "zero_drive") => cfg.verify.zero_drive = flag(e)?,
                ("converge", "n_list") => {
                    cfg.converge.n_list = split_list(&e.value)
                        .into_iter()
                        .map(|s| s.parse().map_err(|_| at(e, format!("not an integer: `{s}`"))))
                        .collect::<CliResult<_>>()?;
                }
                ("converge", "tol") => cfg.converge.tol = num(e)?,
                ("output", "dir") => cfg.out_dir = PathBuf::from(&e.value),
                ("meta", "code_version" | "rows" | "columns" | "recommended") => {}
                _ => return Err(at(e, "unknown key")),
            }
        }

        match (omega_cap_rf, b_rf) {
            (Some(_), Some(_)) => return Err(config_err("[params] give either omega_cap_rf or b_rf, not both")),
            (Some(o), None) => cfg.params.omega_cap_rf = o,
            (None, Some(b)) => cfg.params.omega_cap_rf = rf_amplitude_from_field(b),
            (None, None) => {}
        }
        cfg.params.omega_mw = omega_mw.unwrap_or(cfg.params.d_gs);

        if sweep_seen {
            cfg.sweep = Some(sweep_section(&sweep, &cfg.params)?);
        }
        if gap_keys[0].is_some() || gap_keys[1].is_some() || gap_keys[2].is_some() || gap_label.is_some() {
            cfg.extract.gap = Some(GapRuleConfig {
                label: gap_label.unwrap_or_else(|| "gap".into()),
                center: gap_keys[0].unwrap_or(cfg.params.d_gs + cfg.params.v()),
                slope: gap_keys[1].unwrap_or(0.0),
                half_window: gap_keys[2].unwrap_or(3.0),
            });
        }
        Ok(cfg)
    }

    pub fn sweep_plan(&self) -> CliResult<SweepPlan> {
        let s = self
            .sweep
            .as_ref()
            .ok_or_else(|| config_err("[sweep] section is required for this command"))?;
        Ok(SweepPlan {
            params: self.params,
            mw_axis: s.mw_axis,
            sweep_kind: s.kind,
            sweep_axis: s.sweep_axis,
            n_max: self.n_max,
        })
    }

    /// Renders a configuration that reproduces this run.
    pub fn to_kv(&self) -> KvDocument {
        let mut doc = KvDocument::default();
        let p = &self.params;
        for (k, v) in [
            ("d_gs", p.d_gs),
            ("m_x", p.m_x),
            ("omega_l", p.omega_l),
            ("lambda_b", p.lambda_b),
            ("lambda_d", p.lambda_d),
            ("omega_rf", p.omega_rf),
            ("omega_cap_rf", p.omega_cap_rf),
            ("omega_mw", p.omega_mw),
        ] {
            doc.push("params", k, v);
        }
        if let Some(s) = &self.sweep {
            doc.push("sweep", "kind", s.kind.as_str());
            for (k, v) in SWEEP_AXIS_KEYS.iter().zip([
                s.mw_axis.start,
                s.mw_axis.stop,
                s.mw_axis.step,
                s.sweep_axis.start,
                s.sweep_axis.stop,
                s.sweep_axis.step,
            ]) {
                doc.push("sweep", k, v);
            }
        }
        doc.push("sweep", "n_max", self.n_max);
        if !self.overlays.is_empty() {
            let list: Vec<String> = self.overlays.iter().map(Overlay::label).collect();
            doc.push("analytic", "overlays", list.join(", "));
        }
        if let Some(k) = self.vv_k_max {
            doc.push("analytic", "vv_k_max", k);
        }
        let x = &self.extract;
        doc.push("extract", "prominence", x.prominence);
        doc.push("extract", "min_separation", x.min_separation);
        doc.push("extract", "resolved_only", x.resolved_only);
        if let Some(g) = &x.gap {
            doc.push("extract", "gap_label", &g.label);
            doc.push("extract", "gap_center", g.center);
            doc.push("extract", "gap_slope", g.slope);
            doc.push("extract", "gap_half_window", g.half_window);
        }
        if let Some(s) = &x.stored {
            doc.push("extract", "stored", s.display());
        }
        let v = &self.verify;
        doc.push("verify", "total_time", v.total_time);
        doc.push("verify", "drive_phases", v.drive_phases);
        doc.push("verify", "threshold", v.threshold);
        doc.push("verify", "zero_drive", v.zero_drive);
        let list: Vec<String> = self.converge.n_list.iter().map(|n| n.to_string()).collect();
        doc.push("converge", "n_list", list.join(", "));
        doc.push("converge", "tol", self.converge.tol);
        doc
    }
}

fn sweep_section(keys: &SweepKeys, params: &SystemParams) -> CliResult<SweepSection> {
    let get = |i: usize| keys.values[i].ok_or_else(|| config_err(format!("[sweep] {} is required", SWEEP_AXIS_KEYS[i])));
    let mw_axis = Axis::new(get(0)?, get(1)?, get(2)?);
    let raw_kind = keys.kind.as_deref().unwrap_or("rf_frequency");
    let (kind, scale) = match raw_kind {
        "rf_field" => (SweepKind::RfAmplitude, rf_amplitude_from_field(1.0)),
        other => (
            SweepKind::parse(other).ok_or_else(|| config_err(format!("[sweep] kind: unknown sweep kind `{other}`")))?,
            1.0,
        ),
    };
    let fixed = match kind {
        SweepKind::RfFrequency => params.omega_rf,
        SweepKind::RfAmplitude => params.omega_cap_rf,
    };
    let sweep_axis = match (keys.values[3], keys.values[4], keys.values[5]) {
        (None, None, None) => Axis::point(fixed),
        _ => Axis::new(get(3)? * scale, get(4)? * scale, get(5)? * scale),
    };
    Ok(SweepSection {
        kind,
        mw_axis,
        sweep_axis,
    })
}
