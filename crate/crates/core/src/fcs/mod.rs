//! Heat current, cooling condition and noise from the characteristic
//! polynomial of the counting-field generator.
//!
//! With `B = B_{N-1}` the penultimate Faddeev-LeVerrier matrix of `L(0)`,
//! `(-1)^{N+1} adj(L(0)) = B`, so the current at the counted bath is
//! `J = tr(B D1) / a_{N-1}(0)` and the noise, when `a_{N-1}(s)` and
//! `a_{N-2}(s)` do not depend on `s`, is
//! `S = tr(dB D1 + B D2) / a_{N-1}(0) - 2 a_{N-2}(0) J^2 / a_{N-1}(0)`.

pub mod cgf;
pub mod charpoly;
pub mod roots;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::liouvillian::{build_counting_family, CountingFamily, RateMatrix};
use crate::model::QarModel;

pub use cgf::{cgf, cgf_many, cgf_with, numeric_cumulants, CgfOptions};
pub use charpoly::{adjugate, charpoly, faddeev_leverrier, faddeev_leverrier_derivative, CharPoly};

/// Relative tolerance for the `s`-independence of `a_{N-1}` and `a_{N-2}`.
pub const NOISE_COEFF_TOL: f64 = 1e-10;

/// Current and cooling diagnostics for one counted bath.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FcsReport {
    pub bath: usize,
    pub bath_label: String,
    pub current: f64,
    /// `None` when the closed-form noise expression does not apply.
    pub noise: Option<f64>,
    /// `tr(B D1)`, positive exactly when heat leaves the counted bath.
    pub cooling_value: f64,
    pub cooling: bool,
    pub charpoly: CharPoly,
    pub cop: Option<f64>,
}

fn a_penultimate(cp: &CharPoly) -> Result<f64> {
    let n = cp.degree();
    let a = cp.a(n - 1);
    if !(a > 0.0) {
        return Err(Error::InternalConsistency(format!(
            "a_{}(0) = {a:e} is not positive; the generator is not a connected rate matrix",
            n - 1
        )));
    }
    Ok(a)
}

/// `tr(B_{N-1} D1)`, the sign-carrying numerator of the current.
pub fn cooling_value_of(family: &CountingFamily) -> Result<f64> {
    let rec = faddeev_leverrier(family.base().as_matrix());
    a_penultimate(&rec.charpoly)?;
    Ok(trace_product(&rec.penultimate, family.d1()))
}

/// Current from the counted bath into the system.
pub fn current_of(family: &CountingFamily) -> Result<f64> {
    let rec = faddeev_leverrier(family.base().as_matrix());
    let a = a_penultimate(&rec.charpoly)?;
    Ok(trace_product(&rec.penultimate, family.d1()) / a)
}

pub fn heat_current(model: &QarModel, bath: usize) -> Result<f64> {
    current_of(&build_counting_family(model, bath)?)
}

/// Cooling value and flag, counting at the model's cold bath.
pub fn cooling_condition(model: &QarModel) -> Result<(f64, bool)> {
    let fam = build_counting_family(model, model.cold_index())?;
    let v = cooling_value_of(&fam)?;
    Ok((v, v > 0.0))
}

/// `d adj(L(s)) / ds` at `s = 0`.
pub fn adjugate_derivative(family: &CountingFamily) -> DMatrix<f64> {
    faddeev_leverrier_derivative(family.base().as_matrix(), family.d1()).dadjugate()
}

/// Sample points used to confirm that the low-order coefficients are
/// constant in `s`.
pub fn noise_probe_points(family: &CountingFamily) -> [f64; 4] {
    let e = family.energy_scale();
    [0.5 / e, -0.5 / e, 1.0 / e, -1.0 / e]
}

/// Fails with [`Error::NoiseFormulaInapplicable`] when `a_{N-1}(s)` or
/// `a_{N-2}(s)` moves with `s`.
pub fn check_noise_precondition(family: &CountingFamily) -> Result<()> {
    let n = family.dim();
    let base = charpoly(family.base().as_matrix());
    for s in noise_probe_points(family) {
        let cp = charpoly(&family.eval(s));
        for idx in [n - 1, n.saturating_sub(2)] {
            if idx == 0 {
                continue;
            }
            let a0 = base.a(idx);
            let dev = (cp.a(idx) - a0).abs() / a0.abs().max(f64::MIN_POSITIVE);
            if dev > NOISE_COEFF_TOL {
                return Err(Error::NoiseFormulaInapplicable {
                    index: idx,
                    deviation: dev,
                    s,
                });
            }
        }
    }
    Ok(())
}

/// Second cumulant of the energy exchanged with the counted bath.
pub fn noise_of(family: &CountingFamily) -> Result<f64> {
    check_noise_precondition(family)?;
    let der = faddeev_leverrier_derivative(family.base().as_matrix(), family.d1());
    let cp = &der.recursion.charpoly;
    let n = cp.degree();
    let a1 = a_penultimate(cp)?;
    let a2 = cp.a(n - 2);
    let b = &der.recursion.penultimate;
    let j = trace_product(b, family.d1()) / a1;
    let t = trace_product(&der.dpenultimate, family.d1()) + trace_product(b, family.d2());
    Ok(t / a1 - 2.0 * (a2 / a1) * j * j)
}

pub fn noise(model: &QarModel, bath: usize) -> Result<f64> {
    noise_of(&build_counting_family(model, bath)?)
}

/// Full single-bath report. The COP is filled for the cold bath when the
/// model has exactly three baths and the other two are labelled `H` and `W`.
pub fn report(model: &QarModel, bath: usize) -> Result<FcsReport> {
    let fam = build_counting_family(model, bath)?;
    let rec = faddeev_leverrier(fam.base().as_matrix());
    let a = a_penultimate(&rec.charpoly)?;
    let value = trace_product(&rec.penultimate, fam.d1());
    let noise = match noise_of(&fam) {
        Ok(s) => Some(s),
        Err(Error::NoiseFormulaInapplicable { .. }) => None,
        Err(e) => return Err(e),
    };
    let cop = if bath == model.cold_index() {
        model
            .bath_index("W")
            .filter(|&w| w != bath)
            .map(|w| heat_current(model, w))
            .transpose()?
            .map(|jw| (value / a) / jw)
    } else {
        None
    };
    Ok(FcsReport {
        bath,
        bath_label: model.bath(bath).label.clone(),
        current: value / a,
        noise,
        cooling_value: value,
        cooling: value > 0.0,
        charpoly: rec.charpoly,
        cop,
    })
}

/// `tr(X Y)` without forming the product, accumulated in double-double.
pub fn trace_product(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    let n = x.nrows();
    let mut t = TwoFloat::from(0.0);
    for i in 0..n {
        for k in 0..n {
            t += TwoFloat::new_mul(x[(i, k)], y[(k, i)]);
        }
    }
    f64::from(t)
}

/// Eigenvalue structure of `L(0)` read off its characteristic polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumCheck {
    /// Real roots in units of the rate scale, ascending.
    pub scaled_roots: Vec<f64>,
    /// All `N` roots are real.
    pub all_real: bool,
    /// Number of roots with `|lambda| <= zero_tol * scale`.
    pub zero_roots: usize,
    /// Every other root is strictly negative.
    pub others_negative: bool,
    /// `a_1(0), ..., a_{N-1}(0)` all positive.
    pub coeffs_positive: bool,
    /// `|a_N(0)| / scale^N`.
    pub scaled_det: f64,
}

impl SpectrumCheck {
    pub fn ok(&self, det_tol: f64) -> bool {
        self.all_real
            && self.zero_roots == 1
            && self.others_negative
            && self.coeffs_positive
            && self.scaled_det <= det_tol
    }
}

/// Checks realness, sign and multiplicity of the roots of `charpoly(L(0))`.
pub fn spectrum_check(l0: &RateMatrix, zero_tol: f64) -> SpectrumCheck {
    let cp = charpoly(l0.as_matrix());
    let n = cp.degree();
    let scale = l0.scale().max(f64::MIN_POSITIVE);
    // roots of p(scale * mu) / scale^N
    let scaled: Vec<f64> = cp
        .monic()
        .iter()
        .enumerate()
        .map(|(k, c)| c / scale.powi(k as i32))
        .collect();
    let roots = roots::real_roots(&scaled);
    let zero_roots = roots.iter().filter(|r| r.abs() <= zero_tol).count();
    let others_negative = roots
        .iter()
        .filter(|r| r.abs() > zero_tol)
        .all(|&r| r < 0.0);
    SpectrumCheck {
        all_real: roots.len() == n,
        zero_roots,
        others_negative,
        coeffs_positive: (1..n).all(|j| cp.a(j) > 0.0),
        scaled_det: scaled[n].abs(),
        scaled_roots: roots,
    }
}
