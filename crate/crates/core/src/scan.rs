//! Cooling-window maps over `(E21, betaH)` and current-versus-`E21` curves
//! for the three-level presets.
//!
//! Points are evaluated independently (in parallel) and stored by index, so
//! results do not depend on scheduling.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fcs::{cooling_value_of, current_of};
use crate::liouvillian::build_counting_family;
use crate::model::{preset_with, PresetId, PresetParams};

/// Currents with `|J|` at or below this are not required to agree in sign
/// with the cooling value.
pub const DEAD_ZONE: f64 = 1e-16;

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|k| {
            if k == n - 1 {
                hi
            } else {
                lo + (hi - lo) * (k as f64 / (n - 1) as f64)
            }
        })
        .collect()
}

/// Grid-scan configuration. Axes default to `E21 in [0.01, 0.99]` and
/// `betaH in [0.11, 0.99]` at 101 x 101.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub preset: PresetId,
    pub params: PresetParams,
    pub e21_range: (f64, f64),
    pub beta_h_range: (f64, f64),
    pub n_e21: usize,
    pub n_beta_h: usize,
}

impl ScanSpec {
    pub fn new(preset: PresetId) -> Self {
        ScanSpec {
            preset,
            params: PresetParams::default(),
            e21_range: (0.01, 0.99),
            beta_h_range: (0.11, 0.99),
            n_e21: 101,
            n_beta_h: 101,
        }
    }

    pub fn with_resolution(mut self, n_e21: usize, n_beta_h: usize) -> Self {
        self.n_e21 = n_e21;
        self.n_beta_h = n_beta_h;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_e21 < 2 || self.n_beta_h < 2 {
            return Err(Error::Validation(format!(
                "scan resolution must be at least 2 x 2, got {} x {}",
                self.n_e21, self.n_beta_h
            )));
        }
        check_axis("E21", self.e21_range, 0.0, self.params.e31)?;
        check_axis("betaH", self.beta_h_range, self.params.beta_w, self.params.beta_c)
    }
}

fn check_axis(name: &str, (lo, hi): (f64, f64), min: f64, max: f64) -> Result<()> {
    if !(lo < hi && lo > min && hi < max) {
        return Err(Error::Validation(format!(
            "{name} axis [{lo}, {hi}] must be increasing and lie strictly inside ({min}, {max})"
        )));
    }
    Ok(())
}

/// Current and cooling mask on a rectangular `(E21, betaH)` grid. Matrices
/// are indexed `[betaH index][E21 index]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub preset: PresetId,
    pub params: PresetParams,
    pub e21_axis: Vec<f64>,
    pub beta_h_axis: Vec<f64>,
    pub current: Vec<Vec<f64>>,
    /// Sign of the cooling value at each point.
    pub cooling_mask: Vec<Vec<bool>>,
}

/// One evaluated point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub current: f64,
    pub cooling: bool,
}

/// Cold-bath current and cooling flag of a preset at one parameter point.
pub fn evaluate_point(id: PresetId, e21: f64, beta_h: f64, params: &PresetParams) -> Result<Point> {
    let annotate = |e: Error| Error::AtGridPoint {
        e21,
        beta_h,
        source: Box::new(e),
    };
    let model = preset_with(id, e21, beta_h, params).map_err(annotate)?;
    let fam = build_counting_family(&model, model.cold_index()).map_err(annotate)?;
    let current = current_of(&fam).map_err(annotate)?;
    let value = cooling_value_of(&fam).map_err(annotate)?;
    Ok(Point {
        current,
        cooling: value > 0.0,
    })
}

pub fn grid_scan(spec: &ScanSpec) -> Result<ScanGrid> {
    spec.validate()?;
    let e21_axis = linspace(spec.e21_range.0, spec.e21_range.1, spec.n_e21);
    let beta_h_axis = linspace(spec.beta_h_range.0, spec.beta_h_range.1, spec.n_beta_h);
    let ne = e21_axis.len();
    let points: Vec<Point> = (0..ne * beta_h_axis.len())
        .into_par_iter()
        .map(|idx| evaluate_point(spec.preset, e21_axis[idx % ne], beta_h_axis[idx / ne], &spec.params))
        .collect::<Result<_>>()?;
    let current = points.chunks(ne).map(|r| r.iter().map(|p| p.current).collect()).collect();
    let cooling_mask = points.chunks(ne).map(|r| r.iter().map(|p| p.cooling).collect()).collect();
    Ok(ScanGrid {
        preset: spec.preset,
        params: spec.params,
        e21_axis,
        beta_h_axis,
        current,
        cooling_mask,
    })
}

/// Headline numbers of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    /// Fraction of grid points that cool.
    pub cooling_fraction: f64,
    pub max_current: f64,
    pub max_e21: f64,
    pub max_beta_h: f64,
    /// Smallest and largest cooling `E21` anywhere on the grid.
    pub cooling_e21_span: Option<(f64, f64)>,
}

impl ScanGrid {
    pub fn summary(&self) -> ScanSummary {
        let mut count = 0usize;
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        let mut span: Option<(f64, f64)> = None;
        for (b, row) in self.current.iter().enumerate() {
            for (e, &j) in row.iter().enumerate() {
                let x = self.e21_axis[e];
                if self.cooling_mask[b][e] {
                    count += 1;
                    span = Some(match span {
                        None => (x, x),
                        Some((lo, hi)) => (lo.min(x), hi.max(x)),
                    });
                }
                if j > best.0 {
                    best = (j, x, self.beta_h_axis[b]);
                }
            }
        }
        ScanSummary {
            cooling_fraction: count as f64 / (self.e21_axis.len() * self.beta_h_axis.len()) as f64,
            max_current: best.0,
            max_e21: best.1,
            max_beta_h: best.2,
            cooling_e21_span: span,
        }
    }

    /// Points where the mask disagrees with the current's sign outside the
    /// dead zone, as `(betaH index, E21 index)`.
    pub fn mask_violations(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (b, row) in self.current.iter().enumerate() {
            for (e, &j) in row.iter().enumerate() {
                if j.abs() > DEAD_ZONE && self.cooling_mask[b][e] != (j > 0.0) {
                    out.push((b, e));
                }
            }
        }
        out
    }

    /// Long-format CSV: `e21,betaH,current,cooling`, preceded by `# key=value`
    /// header lines.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write_header(&mut w, self.preset, &self.params)?;
        writeln!(w, "e21,betaH,current,cooling")?;
        for (b, row) in self.current.iter().enumerate() {
            for (e, j) in row.iter().enumerate() {
                writeln!(
                    w,
                    "{:.16e},{:.16e},{:.16e},{}",
                    self.e21_axis[e],
                    self.beta_h_axis[b],
                    j,
                    u8::from(self.cooling_mask[b][e])
                )?;
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "preset": self.preset,
            "params": self.params,
            "tolerances": tolerance_record(),
            "e21_axis": self.e21_axis,
            "betaH_axis": self.beta_h_axis,
            "current": self.current,
            "cooling_mask": self.cooling_mask,
        })
    }
}

fn tolerance_record() -> serde_json::Value {
    serde_json::json!({
        "dead_zone": DEAD_ZONE,
        "noise_coeff_tol": crate::fcs::NOISE_COEFF_TOL,
        "gap_eps": crate::model::DEFAULT_GAP_EPS,
    })
}

fn write_header<W: Write>(w: &mut W, preset: PresetId, p: &PresetParams) -> std::io::Result<()> {
    writeln!(w, "# preset={preset}")?;
    write_params(w, p)
}

fn write_params<W: Write>(w: &mut W, p: &PresetParams) -> std::io::Result<()> {
    writeln!(w, "# e31={:e}", p.e31)?;
    writeln!(w, "# beta_c={:e}", p.beta_c)?;
    writeln!(w, "# beta_w={:e}", p.beta_w)?;
    writeln!(w, "# omega_c={:e}", p.omega_c)?;
    writeln!(w, "# gamma={:e}", p.gamma)?;
    writeln!(w, "# weak_ratio={:e}", p.weak_ratio)?;
    writeln!(w, "# dead_zone={:e}", DEAD_ZONE)?;
    writeln!(w, "# noise_coeff_tol={:e}", crate::fcs::NOISE_COEFF_TOL)?;
    writeln!(w, "# gap_eps={:e}", crate::model::DEFAULT_GAP_EPS)
}

/// `J_C(E21)` of one preset at fixed `betaH`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineCurve {
    pub preset: PresetId,
    pub beta_h: f64,
    pub e21: Vec<f64>,
    pub current: Vec<f64>,
    pub cooling: Vec<bool>,
}

impl LineCurve {
    /// Largest current and its `E21`.
    pub fn max(&self) -> (f64, f64) {
        self.current
            .iter()
            .zip(&self.e21)
            .fold((f64::NEG_INFINITY, f64::NAN), |acc, (&j, &x)| {
                if j > acc.0 {
                    (j, x)
                } else {
                    acc
                }
            })
    }

    /// Smallest and largest cooling `E21`, if any point cools.
    pub fn cooling_span(&self) -> Option<(f64, f64)> {
        let mut it = self.e21.iter().zip(&self.cooling).filter(|(_, &c)| c).map(|(&x, _)| x);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), x| (lo.min(x), hi.max(x))))
    }
}

/// Line-scan configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSpec {
    pub presets: Vec<PresetId>,
    pub beta_h: f64,
    pub params: PresetParams,
    pub e21_range: (f64, f64),
    pub n_e21: usize,
}

impl LineSpec {
    pub fn new(presets: Vec<PresetId>, beta_h: f64, n_e21: usize) -> Self {
        LineSpec {
            presets,
            beta_h,
            params: PresetParams::default(),
            e21_range: (0.01, 0.99),
            n_e21,
        }
    }
}

pub fn line_scan(spec: &LineSpec) -> Result<Vec<LineCurve>> {
    if spec.n_e21 < 2 {
        return Err(Error::Validation(format!(
            "line scan needs at least 2 points, got {}",
            spec.n_e21
        )));
    }
    check_axis("E21", spec.e21_range, 0.0, spec.params.e31)?;
    let axis = linspace(spec.e21_range.0, spec.e21_range.1, spec.n_e21);
    spec.presets
        .iter()
        .map(|&id| {
            let pts: Vec<Point> = axis
                .par_iter()
                .map(|&x| evaluate_point(id, x, spec.beta_h, &spec.params))
                .collect::<Result<_>>()?;
            Ok(LineCurve {
                preset: id,
                beta_h: spec.beta_h,
                e21: axis.clone(),
                current: pts.iter().map(|p| p.current).collect(),
                cooling: pts.iter().map(|p| p.cooling).collect(),
            })
        })
        .collect()
}

/// Long-format CSV for several curves: `preset,e21,betaH,current,cooling`.
pub fn write_lines_csv<W: Write>(curves: &[LineCurve], params: &PresetParams, mut w: W) -> std::io::Result<()> {
    let ids: Vec<String> = curves.iter().map(|c| c.preset.to_string()).collect();
    writeln!(w, "# presets={}", ids.join(","))?;
    write_params(&mut w, params)?;
    writeln!(w, "preset,e21,betaH,current,cooling")?;
    for c in curves {
        for ((x, j), cool) in c.e21.iter().zip(&c.current).zip(&c.cooling) {
            writeln!(
                w,
                "{},{:.16e},{:.16e},{:.16e},{}",
                c.preset,
                x,
                c.beta_h,
                j,
                u8::from(*cool)
            )?;
        }
    }
    Ok(())
}

pub fn lines_to_json(curves: &[LineCurve], params: &PresetParams) -> serde_json::Value {
    serde_json::json!({
        "params": params,
        "tolerances": tolerance_record(),
        "curves": curves,
    })
}
