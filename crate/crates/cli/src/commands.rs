use std::fs;
use std::path::{Path, PathBuf};

use esdr_core::esdr::{esdr_fourier_blocks, leave_probability, run_sweep, Spectrum, SweepPlan, CODE_VERSION, GROUND};
use esdr_core::extract::{anticrossing_gap, anticrossing_gap_resolved, find_resonances, BranchRule, CrossingCenter};
use esdr_core::floquet::convergence_scan;
use esdr_core::format::sig9;
use esdr_core::kv::KvDocument;
use esdr_core::oracle::{propagate, standard_panel, PanelPoint, PropagationPlan};
use esdr_core::SystemParams;
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{config_err, CliError, CliResult};

/// Files produced by a command, written only after every computation succeeded.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
    pub summary: Vec<String>,
}

impl Outputs {
    fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn write_to(&self, dir: &Path) -> CliResult<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            fs::write(&path, bytes)?;
            written.push(path);
        }
        Ok(written)
    }
}

fn metadata(cfg: &RunConfig, extra: &[(&str, String)]) -> Vec<u8> {
    let mut doc: KvDocument = cfg.to_kv();
    doc.push("meta", "code_version", CODE_VERSION);
    for (k, v) in extra {
        doc.push("meta", k, v);
    }
    doc.render().into_bytes()
}

fn spectrum_csv(s: &Spectrum) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    s.write_csv(&mut buf)?;
    Ok(buf)
}

fn overlay_csv(cfg: &RunConfig, plan: &SweepPlan) -> CliResult<Option<Vec<u8>>> {
    if cfg.overlays.is_empty() {
        return Ok(None);
    }
    let sweep = plan.sweep_axis.values();
    for &s in [sweep[0], sweep[sweep.len() - 1]].iter() {
        let p = plan.sweep_kind.apply(plan.params, s);
        for o in &cfg.overlays {
            o.evaluate(&p, cfg.vv_k_max)?;
        }
    }
    let mut out = String::from("sweep_mhz,overlay,branch,lower_mhz,upper_mhz,gap_mhz\n");
    for &s in &sweep {
        let p = plan.sweep_kind.apply(plan.params, s);
        for o in &cfg.overlays {
            for (branch, pred) in o.evaluate(&p, cfg.vv_k_max)? {
                out.push_str(&format!(
                    "{},{},{branch},{},{},{}\n",
                    sig9(s),
                    o.label(),
                    sig9(pred.lower),
                    sig9(pred.upper),
                    sig9(pred.gap)
                ));
            }
        }
    }
    Ok(Some(out.into_bytes()))
}

pub fn spectrum(cfg: &RunConfig) -> CliResult<Outputs> {
    let plan = cfg.sweep_plan()?;
    plan.validate()?;
    let overlay = overlay_csv(cfg, &plan)?;
    let s = run_sweep(&plan)?;
    let mut out = Outputs::default();
    out.add("spectrum.csv", spectrum_csv(&s)?);
    out.add(
        "spectrum.meta",
        metadata(cfg, &[("rows", s.sweep.len().to_string()), ("columns", s.mw.len().to_string())]),
    );
    if let Some(o) = overlay {
        out.add("overlay.csv", o);
    }
    out.summary.push(format!("spectrum: {} x {} grid points", s.sweep.len(), s.mw.len()));
    Ok(out)
}

fn sidecar(csv: &Path) -> PathBuf {
    csv.with_extension("meta")
}

fn load_stored(cfg: &RunConfig, path: &Path) -> CliResult<Spectrum> {
    if !path.is_file() {
        return Err(CliError::FileNotFound(path.to_path_buf()));
    }
    let meta = sidecar(path);
    let plan = if meta.is_file() {
        let text = fs::read_to_string(&meta)?;
        let doc = KvDocument::parse(&text).map_err(|e| config_err(format!("{}: {e}", meta.display())))?;
        SweepPlan::from_kv(&doc)?
    } else {
        cfg.sweep_plan()?
    };
    let text = fs::read_to_string(path)?;
    Ok(Spectrum::read_csv(&text, plan)?)
}

pub fn resonances(cfg: &RunConfig) -> CliResult<Outputs> {
    let x = &cfg.extract;
    if !(x.prominence > 0.0 && x.prominence < 1.0) {
        return Err(config_err("[extract] prominence must lie in (0, 1)"));
    }
    if let Some(g) = &x.gap {
        if !(g.half_window > 0.0) {
            return Err(config_err("[extract] gap_half_window must be > 0"));
        }
    }
    let spectrum = match &x.stored {
        Some(path) => load_stored(cfg, path)?,
        None => {
            let plan = cfg.sweep_plan()?;
            plan.validate()?;
            run_sweep(&plan)?
        }
    };
    let mut set = find_resonances(&spectrum, x.prominence, x.min_separation)?;
    let mut out = Outputs::default();
    if let Some(g) = &x.gap {
        let rule = BranchRule {
            label: g.label.clone(),
            center: CrossingCenter {
                offset: g.center,
                slope: g.slope,
            },
            half_window: g.half_window,
        };
        let curve = if x.resolved_only {
            anticrossing_gap_resolved(&set, &rule)?
        } else {
            anticrossing_gap(&set, &rule)?
        };
        out.summary.push(format!(
            "gap `{}`: minimum {} MHz at sweep {} MHz over {} rows",
            curve.label,
            sig9(curve.min_gap),
            sig9(curve.min_sweep),
            curve.points.len()
        ));
        set.gaps = curve.entries();
    }
    let mut res = Vec::new();
    set.write_resonances_csv(&mut res)?;
    out.add("resonances.csv", res);
    if x.gap.is_some() {
        let mut gaps = Vec::new();
        set.write_gaps_csv(&mut gaps)?;
        out.add("gaps.csv", gaps);
    }
    out.add("resonances.meta", metadata(cfg, &[("rows", set.rows.len().to_string())]));
    let found: usize = set.rows.iter().map(|r| r.resonances.len()).sum();
    out.summary.insert(0, format!("resonances: {found} across {} rows", set.rows.len()));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyRow {
    pub label: String,
    pub p_floquet: f64,
    pub p_oracle: f64,
    pub diff: f64,
    pub pass: bool,
}

fn zero_drive_point() -> PanelPoint {
    let base = standard_panel().remove(0).params;
    PanelPoint {
        label: "zero-drive".into(),
        params: SystemParams {
            omega_cap_rf: 0.0,
            lambda_b: 0.0,
            lambda_d: 0.0,
            ..base
        },
    }
}

pub fn verify_rows(cfg: &RunConfig) -> CliResult<Vec<VerifyRow>> {
    let v = &cfg.verify;
    if !(v.threshold > 0.0) {
        return Err(config_err("[verify] threshold must be > 0"));
    }
    let mut panel = standard_panel();
    if v.zero_drive {
        panel.push(zero_drive_point());
    }
    let plans: Vec<(PanelPoint, PropagationPlan)> = panel
        .into_iter()
        .map(|pt| {
            let plan = PropagationPlan {
                drive_phases: v.drive_phases,
                ..PropagationPlan::new(pt.params, v.total_time)
            };
            plan.validate()?;
            Ok((pt, plan))
        })
        .collect::<CliResult<_>>()?;
    plans
        .par_iter()
        .map(|(pt, plan)| {
            let p_oracle = propagate(plan)?.p_leave();
            let p_floquet = leave_probability(&pt.params, cfg.n_max)?;
            let diff = (p_oracle - p_floquet).abs();
            Ok(VerifyRow {
                label: pt.label.clone(),
                p_floquet,
                p_oracle,
                diff,
                pass: diff < v.threshold,
            })
        })
        .collect()
}

pub fn verify(cfg: &RunConfig) -> CliResult<Outputs> {
    let rows = verify_rows(cfg)?;
    let mut csv = String::from("label,p_floquet,p_oracle,abs_diff,status\n");
    let mut out = Outputs::default();
    out.summary.push(format!("{:<44} {:>12} {:>12} {:>10}  status", "point", "floquet", "oracle", "|dP|"));
    for r in &rows {
        let status = if r.pass { "PASS" } else { "FAIL" };
        csv.push_str(&format!(
            "{},{},{},{},{status}\n",
            r.label,
            sig9(r.p_floquet),
            sig9(r.p_oracle),
            sig9(r.diff)
        ));
        out.summary.push(format!(
            "{:<44} {:>12.6} {:>12.6} {:>10.2e}  {status}",
            r.label, r.p_floquet, r.p_oracle, r.diff
        ));
    }
    let passed = rows.iter().filter(|r| r.pass).count();
    out.summary.push(format!(
        "verify: {passed}/{} PASS at n_max {} (threshold {:e})",
        rows.len(),
        cfg.n_max,
        cfg.verify.threshold
    ));
    out.add("verify.csv", csv.into_bytes());
    out.add("verify.meta", metadata(cfg, &[]));
    Ok(out)
}

pub fn converge(cfg: &RunConfig) -> CliResult<Outputs> {
    let n_list = &cfg.converge.n_list;
    if n_list.len() < 2 || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(config_err("[converge] n_list needs at least two strictly ascending entries"));
    }
    let fourier = esdr_fourier_blocks(&cfg.params)?;
    let report = convergence_scan(&fourier, GROUND, GROUND, n_list, cfg.converge.tol)?;
    let mut csv = String::from("n_max,p_leave\n");
    let mut out = Outputs::default();
    for &(n, p) in &report.entries {
        csv.push_str(&format!("{n},{}\n", sig9(1.0 - p)));
        out.summary.push(format!("n_max {n:>4}  p_leave {:.10}", 1.0 - p));
    }
    out.summary.push(format!("recommended n_max {} (tol {:e})", report.recommended, report.tol));
    out.add("converge.csv", csv.into_bytes());
    out.add("converge.meta", metadata(cfg, &[("recommended", report.recommended.to_string())]));
    Ok(out)
}
