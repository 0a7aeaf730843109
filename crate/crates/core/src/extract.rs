//! Resonance extraction from simulated spectra.
//!
//! Resonances are local maxima of the leave probability along the MW axis,
//! filtered by topographic prominence relative to the row's range and
//! refined by a three-point parabola.

use std::io::Write;

use crate::error::{invalid, Error, Result};
use crate::esdr::Spectrum;
use crate::format::sig9;

pub const DEFAULT_PROMINENCE: f64 = 0.1;
pub const DEFAULT_MIN_SEPARATION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance {
    pub mw: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceRow {
    pub sweep: f64,
    /// Sorted by MW frequency.
    pub resonances: Vec<Resonance>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapEntry {
    pub label: String,
    pub sweep: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResonanceSet {
    pub rows: Vec<ResonanceRow>,
    pub gaps: Vec<GapEntry>,
}

impl ResonanceSet {
    pub fn row_at(&self, sweep: f64) -> Option<&ResonanceRow> {
        self.rows.iter().find(|r| r.sweep == sweep)
    }

    /// Writes `sweep_mhz,mw_mhz,height`.
    pub fn write_resonances_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(b"sweep_mhz,mw_mhz,height\n")?;
        for row in &self.rows {
            for r in &row.resonances {
                writeln!(w, "{},{},{}", sig9(row.sweep), sig9(r.mw), sig9(r.height))?;
            }
        }
        Ok(())
    }

    /// Writes `label,sweep_mhz,gap_mhz`.
    pub fn write_gaps_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(b"label,sweep_mhz,gap_mhz\n")?;
        for g in &self.gaps {
            writeln!(w, "{},{},{}", g.label, sig9(g.sweep), sig9(g.gap))?;
        }
        Ok(())
    }
}

/// Peaks of one row; `mw` must be evenly spaced and ascending.
pub fn find_row_peaks(mw: &[f64], row: &[f64], prominence: f64, min_separation: f64) -> Vec<Resonance> {
    let n = row.len();
    if n < 3 {
        return Vec::new();
    }
    let (lo, hi) = row
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| (lo.min(y), hi.max(y)));
    let range = hi - lo;
    if !(range > 0.0) {
        return Vec::new();
    }
    let threshold = prominence * range;
    let step = mw[1] - mw[0];

    let mut candidates = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if row[i] > row[i - 1] {
            // walk across a flat top
            let mut j = i;
            while j + 1 < n && row[j + 1] == row[i] {
                j += 1;
            }
            if j + 1 < n && row[j + 1] < row[i] {
                let peak = (i + j) / 2;
                if topographic_prominence(row, peak) >= threshold {
                    candidates.push(refine(mw, row, peak, step));
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }

    // keep the taller of any pair closer than min_separation
    let mut by_height: Vec<Resonance> = candidates;
    by_height.sort_by(|a, b| b.height.total_cmp(&a.height).then(a.mw.total_cmp(&b.mw)));
    let mut kept: Vec<Resonance> = Vec::new();
    for c in by_height {
        if kept.iter().all(|k| (k.mw - c.mw).abs() >= min_separation) {
            kept.push(c);
        }
    }
    kept.sort_by(|a, b| a.mw.total_cmp(&b.mw));
    kept
}

/// Height above the higher of the two lowest points reached before meeting
/// a taller sample (or the row edge) on each side.
fn topographic_prominence(row: &[f64], peak: usize) -> f64 {
    let h = row[peak];
    let mut left_min = h;
    for &y in row[..peak].iter().rev() {
        if y > h {
            break;
        }
        left_min = left_min.min(y);
    }
    let mut right_min = h;
    for &y in &row[peak + 1..] {
        if y > h {
            break;
        }
        right_min = right_min.min(y);
    }
    h - left_min.max(right_min)
}

fn refine(mw: &[f64], row: &[f64], i: usize, step: f64) -> Resonance {
    let (a, b, c) = (row[i - 1], row[i], row[i + 1]);
    let curvature = a - 2.0 * b + c;
    if curvature >= 0.0 {
        return Resonance { mw: mw[i], height: b };
    }
    let offset = (0.5 * (a - c) / curvature).clamp(-0.5, 0.5);
    Resonance {
        mw: mw[i] + offset * step,
        height: b - 0.25 * (a - c) * offset,
    }
}

pub fn find_resonances(spectrum: &Spectrum, prominence: f64, min_separation: f64) -> Result<ResonanceSet> {
    if spectrum.mw.is_empty() || spectrum.sweep.is_empty() || spectrum.p_leave.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    if !(prominence > 0.0 && prominence < 1.0) {
        return Err(invalid("prominence", "must lie in (0, 1)"));
    }
    let step = spectrum.mw_step();
    if !(min_separation >= 2.0 * step * (1.0 - 1e-9)) {
        return Err(invalid("min_separation", "must be at least two MW grid steps"));
    }
    let rows = spectrum
        .rows()
        .map(|(sweep, row)| ResonanceRow {
            sweep,
            resonances: find_row_peaks(&spectrum.mw, row, prominence, min_separation),
        })
        .collect();
    Ok(ResonanceSet { rows, gaps: Vec::new() })
}

/// Where an anticrossing is expected along the MW axis, as a function of
/// the sweep value: `offset + slope * sweep`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingCenter {
    pub offset: f64,
    pub slope: f64,
}

impl CrossingCenter {
    pub fn fixed(mw: f64) -> Self {
        CrossingCenter { offset: mw, slope: 0.0 }
    }

    pub fn at(&self, sweep: f64) -> f64 {
        self.offset + self.slope * sweep
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchRule {
    pub label: String,
    pub center: CrossingCenter,
    /// Resonances farther than this from the center are ignored, MHz.
    pub half_window: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapCurve {
    pub label: String,
    /// `(sweep value, gap)`.
    pub points: Vec<(f64, f64)>,
    pub min_gap: f64,
    pub min_sweep: f64,
}

impl GapCurve {
    pub fn entries(&self) -> Vec<GapEntry> {
        self.points
            .iter()
            .map(|&(sweep, gap)| GapEntry {
                label: self.label.clone(),
                sweep,
                gap,
            })
            .collect()
    }
}

fn branch_gap(row: &ResonanceRow, rule: &BranchRule) -> Option<f64> {
    let center = rule.center.at(row.sweep);
    let mut near: Vec<f64> = row
        .resonances
        .iter()
        .map(|r| r.mw)
        .filter(|f| (f - center).abs() <= rule.half_window)
        .collect();
    if near.len() < 2 {
        return None;
    }
    near.sort_by(|a, b| (a - center).abs().total_cmp(&(b - center).abs()));
    Some((near[0] - near[1]).abs())
}

/// Separation of the two branches nearest the labelled crossing, per sweep
/// value; the avoided-crossing gap is the minimum over the sweep.
pub fn anticrossing_gap(rs: &ResonanceSet, rule: &BranchRule) -> Result<GapCurve> {
    let points = rs
        .rows
        .iter()
        .map(|row| {
            branch_gap(row, rule).map(|g| (row.sweep, g)).ok_or(Error::BranchNotFound {
                sweep_mhz: row.sweep,
                center_mhz: rule.center.at(row.sweep),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    curve(rule, points)
}

/// Like [`anticrossing_gap`] but skips sweep values where the two branches
/// are not both resolved, e.g. where they merge at a true crossing.
pub fn anticrossing_gap_resolved(rs: &ResonanceSet, rule: &BranchRule) -> Result<GapCurve> {
    let points: Vec<(f64, f64)> = rs
        .rows
        .iter()
        .filter_map(|row| branch_gap(row, rule).map(|g| (row.sweep, g)))
        .collect();
    curve(rule, points)
}

fn curve(rule: &BranchRule, points: Vec<(f64, f64)>) -> Result<GapCurve> {
    let &(min_sweep, min_gap) = points
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(Error::BranchNotFound {
            sweep_mhz: f64::NAN,
            center_mhz: rule.center.offset,
        })?;
    Ok(GapCurve {
        label: rule.label.clone(),
        points,
        min_gap,
        min_sweep,
    })
}

/// Hyperbola `gap(x)² = gap_min² + (slope (x - center))²` fitted to the
/// squared separations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AvoidedCrossingFit {
    pub center: f64,
    pub gap: f64,
    pub slope: f64,
}

/// Least-squares fit of a quadratic to `gap²` over the run of points around
/// the smallest separation whose gap stays at most `max_gap`. A true
/// crossing fits to a gap near zero even when the branches merge and the
/// rows at the crossing drop out.
pub fn fit_avoided_crossing(curve: &GapCurve, max_gap: f64) -> Result<AvoidedCrossingFit> {
    let mut sorted = curve.points.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let best = sorted
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
        .ok_or_else(|| invalid("curve", "no points"))?;
    let mut lo = best;
    while lo > 0 && sorted[lo - 1].1 <= max_gap {
        lo -= 1;
    }
    let mut hi = best;
    while hi + 1 < sorted.len() && sorted[hi + 1].1 <= max_gap {
        hi += 1;
    }
    let pts: Vec<(f64, f64)> = sorted[lo..=hi].iter().map(|&(x, g)| (x, g * g)).collect();
    if pts.len() < 3 {
        return Err(invalid("curve", "need at least three resolved points near the crossing"));
    }
    // centre x for conditioning
    let xm = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for &(x, y) in &pts {
        let u = x - xm;
        let row = [1.0, u, u * u];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * y;
        }
    }
    let coef = solve3(ata, atb).ok_or_else(|| invalid("curve", "degenerate sweep positions"))?;
    let (c0, c1, c2) = (coef[0], coef[1], coef[2]);
    if !(c2 > 0.0) {
        return Err(Error::NumericalFailure("separation has no minimum in the fitted window".into()));
    }
    let u0 = -c1 / (2.0 * c2);
    let gap2 = c0 - c1 * c1 / (4.0 * c2);
    Ok(AvoidedCrossingFit {
        center: xm + u0,
        gap: gap2.max(0.0).sqrt(),
        slope: c2.sqrt(),
    })
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&a);
    if d.abs() < 1e-300 {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut m = a;
        for i in 0..3 {
            m[i][k] = b[i];
        }
        *o = det(&m) / d;
    }
    Some(out)
}

/// Least-squares line `y = intercept + slope x`.
pub fn linear_fit(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}
