//! Closed-form reference results: the two-level spin-boson junction, the
//! ideal three-level refrigerator and its leaky variants, and the split of
//! the cold-bath current into cycle and leak contributions.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fcs::{faddeev_leverrier, heat_current, trace_product};
use crate::model::{bose_occupation, QarModel};

/// Spin-boson cold-bath current for on-resonance spectral values `gamma_c`,
/// `gamma_h`. Negative when the hot bath feeds the cold one.
pub fn sb_current(omega0: f64, gamma_c: f64, gamma_h: f64, beta_c: f64, beta_h: f64) -> Result<f64> {
    let nc = bose_occupation(omega0, beta_c)?;
    let nh = bose_occupation(omega0, beta_h)?;
    Ok(sb_current_from(omega0, gamma_c, gamma_h, nc, nh))
}

fn sb_current_from(omega0: f64, gc: f64, gh: f64, nc: f64, nh: f64) -> f64 {
    omega0 * gc * gh * (nc - nh) / (gc * (1.0 + 2.0 * nc) + gh * (1.0 + 2.0 * nh))
}

/// Spin-boson cold-bath current noise.
pub fn sb_noise(omega0: f64, gamma_c: f64, gamma_h: f64, beta_c: f64, beta_h: f64) -> Result<f64> {
    let nc = bose_occupation(omega0, beta_c)?;
    let nh = bose_occupation(omega0, beta_h)?;
    let j = sb_current_from(omega0, gamma_c, gamma_h, nc, nh);
    let num = omega0 * omega0 * gamma_c * gamma_h * ((1.0 + nc) * nh + (1.0 + nh) * nc) - 2.0 * j * j;
    Ok(num / (gamma_c * (1.0 + 2.0 * nc) + gamma_h * (1.0 + 2.0 * nh)))
}

fn check_ordering(e21: f64, e31: f64, beta_c: f64, beta_h: f64, beta_w: f64) -> Result<()> {
    if !(e21 > 0.0 && e21 < e31) {
        return Err(Error::Domain(format!(
            "need 0 < E21 < E31, got E21 = {e21}, E31 = {e31}"
        )));
    }
    if !(beta_w > 0.0 && beta_w < beta_h && beta_h < beta_c) {
        return Err(Error::Domain(format!(
            "need 0 < betaW < betaH < betaC, got betaW = {beta_w}, betaH = {beta_h}, betaC = {beta_c}"
        )));
    }
    Ok(())
}

/// Upper edge of the ideal cooling window, `(beta_H - beta_W) / (beta_C - beta_W)`.
pub fn window_ratio(beta_c: f64, beta_h: f64, beta_w: f64) -> f64 {
    (beta_h - beta_w) / (beta_c - beta_w)
}

/// `E21 / E31 < (beta_H - beta_W) / (beta_C - beta_W)`.
pub fn ideal_cooling(e21: f64, e31: f64, beta_c: f64, beta_h: f64, beta_w: f64) -> Result<bool> {
    check_ordering(e21, e31, beta_c, beta_h, beta_w)?;
    Ok(e21 / e31 < window_ratio(beta_c, beta_h, beta_w))
}

/// Cooling conditions of the two competing cycles: through the 1-2
/// transition and through the 2-3 transition.
pub fn cycle_conditions(
    e21: f64,
    e31: f64,
    beta_c: f64,
    beta_h: f64,
    beta_w: f64,
) -> Result<(bool, bool)> {
    check_ordering(e21, e31, beta_c, beta_h, beta_w)?;
    let r = e21 / e31;
    let cond21 = r <= window_ratio(beta_c, beta_h, beta_w);
    let cond32 = r >= (beta_c - beta_h) / (beta_c - beta_w);
    Ok((cond21, cond32))
}

/// Bath indices of a three-bath refrigerator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roles {
    pub cold: usize,
    pub hot: usize,
    pub work: usize,
}

/// The two non-cold baths are identified by their labels `H` and `W` when
/// present, otherwise by temperature (the hotter one is the work bath).
pub fn roles(model: &QarModel) -> Result<Roles> {
    if model.baths().len() != 3 {
        return Err(Error::Inapplicable(format!(
            "refrigerator analysis needs exactly three baths, model has {}",
            model.baths().len()
        )));
    }
    let cold = model.cold_index();
    let others: Vec<usize> = (0..3).filter(|&b| b != cold).collect();
    let (a, b) = (others[0], others[1]);
    let by_label = match (model.bath(a).label.as_str(), model.bath(b).label.as_str()) {
        ("H", "W") => Some((a, b)),
        ("W", "H") => Some((b, a)),
        _ => None,
    };
    let (hot, work) = by_label.unwrap_or(if model.bath(a).beta >= model.bath(b).beta {
        (a, b)
    } else {
        (b, a)
    });
    Ok(Roles { cold, hot, work })
}

fn three_levels(model: &QarModel) -> Result<()> {
    if model.n_levels() != 3 {
        return Err(Error::Inapplicable(format!(
            "analysis is defined for three-level models, model has {} levels",
            model.n_levels()
        )));
    }
    Ok(())
}

/// Ideal topology: C only on 1-2, H only on 1-3, W only on 2-3.
fn is_ideal(model: &QarModel, r: &Roles) -> bool {
    let only = |bath: usize, pair: (usize, usize)| {
        let mut pairs = model.bath(bath).active_pairs();
        matches!(pairs.next(), Some((i, j, _)) if (i, j) == pair) && pairs.next().is_none()
    };
    only(r.cold, (0, 1)) && only(r.hot, (0, 2)) && only(r.work, (1, 2))
}

/// Coefficient of performance of the ideal refrigerator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cop {
    /// `J_C / J_W` from the two counting pipelines.
    pub from_currents: f64,
    /// `E21 / E32`.
    pub from_levels: f64,
    /// `(beta_H - beta_W) / (beta_C - beta_H)`.
    pub carnot: f64,
}

pub fn cop(model: &QarModel) -> Result<Cop> {
    three_levels(model)?;
    let r = roles(model)?;
    if !is_ideal(model, &r) {
        return Err(Error::Inapplicable(
            "COP closed form needs the ideal topology C(1-2), H(1-3), W(2-3)".into(),
        ));
    }
    let e = model.system().energies();
    let (e21, e31, e32) = (e[1] - e[0], e[2] - e[0], e[2] - e[1]);
    let (bc, bh, bw) = (model.bath(r.cold).beta, model.bath(r.hot).beta, model.bath(r.work).beta);
    let inside = bw < bh && bh < bc && ideal_cooling(e21, e31, bc, bh, bw)?;
    if !inside {
        return Err(Error::CopUndefined(format!(
            "E21/E31 = {} is outside the cooling window (upper edge {})",
            e21 / e31,
            if bw < bh && bh < bc { window_ratio(bc, bh, bw) } else { f64::NAN }
        )));
    }
    let jc = heat_current(model, r.cold)?;
    let jw = heat_current(model, r.work)?;
    Ok(Cop {
        from_currents: jc / jw,
        from_levels: e21 / e32,
        carnot: (bh - bw) / (bc - bh),
    })
}

/// The two bracketed terms of the leaky cooling condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakyCooling {
    /// `exp(-beta_C E21 - beta_W E32) - exp(-beta_H E31)`.
    pub ideal_term: f64,
    /// `k^l_{2->1} (1/k^H_{3->1} + 1/k^W_{3->2}) (exp(-beta_C E21) - exp(-beta_l E21))`.
    pub leak_term: f64,
    pub cooling: bool,
    /// Index of the leaking bath.
    pub leak_bath: usize,
}

/// Cooling condition of the ideal design with one extra hot or work bath
/// coupling on the cold transition 1-2.
pub fn leaky_cooling(model: &QarModel) -> Result<LeakyCooling> {
    three_levels(model)?;
    let r = roles(model)?;
    let pairs = |b: usize| -> Vec<(usize, usize)> {
        model.bath(b).active_pairs().map(|(i, j, _)| (i, j)).collect()
    };
    let (pc, ph, pw) = (pairs(r.cold), pairs(r.hot), pairs(r.work));
    let wrong = || {
        Err(Error::Inapplicable(
            "leaky analysis needs C on 1-2, H on 1-3, W on 2-3 and exactly one of H, W also on 1-2"
                .into(),
        ))
    };
    if pc != [(0, 1)] {
        return wrong();
    }
    let leak = match (ph.as_slice(), pw.as_slice()) {
        ([(0, 1), (0, 2)], [(1, 2)]) => r.hot,
        ([(0, 2)], [(0, 1), (1, 2)]) => r.work,
        _ => return wrong(),
    };
    let e = model.system().energies();
    let (e21, e31, e32) = (e[1] - e[0], e[2] - e[0], e[2] - e[1]);
    let (bc, bh, bw) = (model.bath(r.cold).beta, model.bath(r.hot).beta, model.bath(r.work).beta);
    let bl = model.bath(leak).beta;
    let k = |from, to, b| model.rate_unchecked(from, to, b);
    let ideal_term = (-bc * e21 - bw * e32).exp() - (-bh * e31).exp();
    let leak_term = k(1, 0, leak)
        * (1.0 / k(2, 0, r.hot) + 1.0 / k(2, 1, r.work))
        * ((-bc * e21).exp() - (-bl * e21).exp());
    Ok(LeakyCooling {
        ideal_term,
        leak_term,
        cooling: ideal_term + leak_term > 0.0,
        leak_bath: leak,
    })
}

/// Closed-form cycle term of the ideal refrigerator:
/// `E21 k^H_{3->1} k^W_{3->2} k^C_{2->1} (exp(-beta_W E32 - beta_C E21) - exp(-beta_H E31))`.
pub fn ideal_cycle_term(model: &QarModel) -> Result<f64> {
    three_levels(model)?;
    let r = roles(model)?;
    let e = model.system().energies();
    let (e21, e31, e32) = (e[1] - e[0], e[2] - e[0], e[2] - e[1]);
    let (bc, bh, bw) = (model.bath(r.cold).beta, model.bath(r.hot).beta, model.bath(r.work).beta);
    let k = |from, to, b| model.rate_unchecked(from, to, b);
    Ok(e21
        * k(2, 0, r.hot)
        * k(2, 1, r.work)
        * k(1, 0, r.cold)
        * ((-bw * e32 - bc * e21).exp() - (-bh * e31).exp()))
}

/// Cycle contribution through the cold transition `upper <-> lower`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CyclePart {
    /// 0-based level indices, `upper > lower`.
    pub upper: usize,
    pub lower: usize,
    pub value: f64,
}

/// Heat leak from `bath` into the cold bath on the transition `upper <-> lower`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakPart {
    pub bath: usize,
    pub bath_label: String,
    pub upper: usize,
    pub lower: usize,
    pub value: f64,
}

/// Cold-bath current split into cycles and leaks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub cycles: Vec<CyclePart>,
    pub leaks: Vec<LeakPart>,
    /// Sum of all parts.
    pub total: f64,
    /// `tr(B_{N-1} D1)` evaluated directly (or the current, when normalized).
    pub reference: f64,
    /// Sum of absolute values of the gain and loss terms of the reference
    /// before they cancel; the scale for every tolerance here.
    pub magnitude: f64,
    /// Part attributed to cold-bath rates alone; vanishes by detailed balance.
    pub pure_cold: f64,
    /// `a_{N-1}(0)`.
    pub a_penultimate: f64,
    /// Parts are in current units (divided by `a_{N-1}(0)`).
    pub normalized: bool,
}

impl Decomposition {
    pub fn cycle(&self, upper: usize, lower: usize) -> Option<f64> {
        self.cycles
            .iter()
            .find(|c| c.upper == upper && c.lower == lower)
            .map(|c| c.value)
    }

    /// `|total - reference| / magnitude`.
    pub fn reconstruction_error(&self) -> f64 {
        (self.total - self.reference).abs() / self.magnitude.max(f64::MIN_POSITIVE)
    }
}

/// Interpolation nodes per bath variable. The numerator is affine in the
/// rates of the counted transition, so two nodes recover it exactly; the
/// third verifies the affine structure.
const NODES: [f64; 2] = [1.0, 2.0];
const CHECK_NODE: f64 = 3.0;

/// Splits `tr(B_{N-1} D1)` at the cold bath of a three-level, three-bath
/// model into cycle and leak parts.
///
/// For each cold transition `ij`, the rates of every bath on `ij` are scaled
/// by a variable `y_mu` and the contribution `tr(B D1_ij)` is interpolated
/// in the `y`. Its constant part (no rate on `ij` besides the counted one)
/// is the cycle through `ij`; the part linear in `y_mu` is the leak from
/// bath `mu`; the part linear in `y_C` must vanish.
pub fn decompose(model: &QarModel, normalize: bool) -> Result<Decomposition> {
    three_levels(model)?;
    let r = roles(model)?;
    let n = 3;
    let nb = model.baths().len();
    let e = model.system().energies();
    let jumps = model.jumps();

    let generator = |pair: (usize, usize), y: &[f64]| -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        for j in &jumps {
            let on_pair = (j.from.min(j.to), j.from.max(j.to)) == pair;
            let rate = if on_pair { j.rate * y[j.bath] } else { j.rate };
            m[(j.to, j.from)] += rate;
            m[(j.from, j.from)] -= rate;
        }
        m
    };

    let base = generator((n, n), &vec![1.0; nb]);
    let rec = faddeev_leverrier(&base);
    let a_pen = rec.charpoly.a(n - 1);
    if !(a_pen > 0.0) {
        return Err(Error::InternalConsistency(format!(
            "a_2(0) = {a_pen:e} is not positive"
        )));
    }

    let mut cycles = Vec::new();
    let mut leaks = Vec::new();
    let mut reference = 0.0;
    let mut magnitude = 0.0;
    let mut pure_cold = 0.0;
    for (lo, hi, _) in model.bath(r.cold).active_pairs() {
        let de = e[hi] - e[lo];
        let k_up = model.rate_unchecked(lo, hi, r.cold);
        let k_down = model.rate_unchecked(hi, lo, r.cold);
        let mut d1 = DMatrix::zeros(n, n);
        d1[(hi, lo)] = de * k_up;
        d1[(lo, hi)] = -de * k_down;
        let gain = rec.penultimate[(lo, hi)] * d1[(hi, lo)];
        let loss = rec.penultimate[(hi, lo)] * d1[(lo, hi)];
        reference += gain + loss;
        let scale = gain.abs() + loss.abs();
        magnitude += scale;

        let t = |y: &[f64]| trace_product(&faddeev_leverrier(&generator((lo, hi), y)).penultimate, &d1);
        let coeffs = tensor_interpolate(nb, &t);
        // coefficient index: bit b set means the monomial contains y_b
        let constant = coeffs[0];
        let nonaffine: f64 = coeffs
            .iter()
            .enumerate()
            .filter(|(mask, _)| mask.count_ones() > 1)
            .map(|(_, c)| c.abs())
            .sum();
        let mut worst_check = 0.0f64;
        for b in 0..nb {
            let mut y = vec![1.0; nb];
            y[b] = CHECK_NODE;
            let predicted: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(mask, c)| {
                    (0..nb)
                        .filter(|bit| mask & (1 << bit) != 0)
                        .map(|bit| y[bit])
                        .product::<f64>()
                        * c
                })
                .sum();
            worst_check = worst_check.max((t(&y) - predicted).abs());
        }
        if nonaffine + worst_check > 1e-10 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::InternalConsistency(format!(
                "current numerator is not affine in the rates of transition {}-{}",
                lo + 1,
                hi + 1
            )));
        }
        cycles.push(CyclePart {
            upper: hi,
            lower: lo,
            value: constant,
        });
        for b in 0..nb {
            let c = coeffs[1 << b];
            if b == r.cold {
                pure_cold += c;
            } else if model.bath(b).coupling(lo, hi) > 0.0 {
                leaks.push(LeakPart {
                    bath: b,
                    bath_label: model.bath(b).label.clone(),
                    upper: hi,
                    lower: lo,
                    value: c,
                });
            } else if c.abs() > 1e-12 * scale {
                return Err(Error::InternalConsistency(format!(
                    "uncoupled bath {} contributes on transition {}-{}",
                    model.bath(b).label,
                    lo + 1,
                    hi + 1
                )));
            }
        }
    }
    if pure_cold.abs() > 1e-12 * magnitude.max(f64::MIN_POSITIVE) {
        return Err(Error::InternalConsistency(format!(
            "cold-bath-only part {pure_cold:e} does not vanish (scale {magnitude:e})"
        )));
    }
    cycles.sort_by_key(|c| (c.upper, c.lower));
    leaks.sort_by_key(|l| (l.upper, l.lower, l.bath));

    let total = cycles.iter().map(|c| c.value).sum::<f64>()
        + leaks.iter().map(|l| l.value).sum::<f64>()
        + pure_cold;
    let mut d = Decomposition {
        cycles,
        leaks,
        total,
        reference,
        magnitude,
        pure_cold,
        a_penultimate: a_pen,
        normalized: false,
    };
    if normalize {
        for c in &mut d.cycles {
            c.value /= a_pen;
        }
        for l in &mut d.leaks {
            l.value /= a_pen;
        }
        d.total /= a_pen;
        d.reference /= a_pen;
        d.magnitude /= a_pen;
        d.pure_cold /= a_pen;
        d.normalized = true;
    }
    Ok(d)
}

/// Multilinear coefficients of `f` on the tensor grid `NODES^nb`. Entry
/// `mask` is the coefficient of `prod_{b in mask} y_b`.
fn tensor_interpolate(nb: usize, f: &dyn Fn(&[f64]) -> f64) -> Vec<f64> {
    let size = 1usize << nb;
    let mut vals = vec![0.0; size];
    let mut y = vec![0.0; nb];
    for (idx, v) in vals.iter_mut().enumerate() {
        for (b, yb) in y.iter_mut().enumerate() {
            *yb = NODES[(idx >> b) & 1];
        }
        *v = f(&y);
    }
    // along each axis: p(y) = c0 + c1 y through (n0, v0), (n1, v1)
    let (n0, n1) = (NODES[0], NODES[1]);
    for b in 0..nb {
        let bit = 1 << b;
        for idx in 0..size {
            if idx & bit == 0 {
                let (v0, v1) = (vals[idx], vals[idx | bit]);
                let c1 = (v1 - v0) / (n1 - n0);
                vals[idx] = v0 - c1 * n0;
                vals[idx | bit] = c1;
            }
        }
    }
    vals
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fcs::{cooling_condition, noise};
    use crate::model::{preset, preset_with, spin_boson, PresetId, PresetParams, COLD, HOT, WORK};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs())
    }

    #[test]
    fn spin_boson_closed_forms_match_pipeline() {
        let g = 0.01 * (-0.1f64).exp();
        let m = spin_boson(1.0, 0.01, 0.01, 1.0, 0.5, 10.0).unwrap();
        let j = sb_current(1.0, g, g, 1.0, 0.5).unwrap();
        assert!(j < 0.0);
        assert!(rel(j, heat_current(&m, 0).unwrap()) < 1e-10);
        let s = sb_noise(1.0, g, g, 1.0, 0.5).unwrap();
        assert!(rel(s, noise(&m, 0).unwrap()) < 1e-10);
    }

    #[test]
    fn spin_boson_equilibrium() {
        assert_eq!(sb_current(1.0, 1e-3, 2e-3, 0.7, 0.7).unwrap(), 0.0);
        assert!(sb_noise(1.0, 1e-3, 2e-3, 0.7, 0.7).unwrap() > 0.0);
    }

    #[test]
    fn ideal_window_examples() {
        assert!(ideal_cooling(0.8, 1.0, 1.0, 0.9, 0.1).unwrap());
        assert!(!ideal_cooling(0.95, 1.0, 1.0, 0.9, 0.1).unwrap());
        assert!(matches!(ideal_cooling(1.2, 1.0, 1.0, 0.9, 0.1), Err(Error::Domain(_))));
        assert!(matches!(ideal_cooling(0.5, 1.0, 0.5, 0.9, 0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn boundary_current_vanishes() {
        let e21 = window_ratio(1.0, 0.9, 0.1);
        let m = preset(PresetId::A, e21, 0.9).unwrap();
        let scale = crate::liouvillian::build_generator(&m).scale();
        assert!(heat_current(&m, COLD).unwrap().abs() <= 1e-12 * scale);
    }

    #[test]
    fn cycle_condition_thresholds() {
        assert_eq!(cycle_conditions(0.5, 1.0, 1.0, 0.9, 0.1).unwrap(), (true, true));
        assert_eq!(cycle_conditions(0.05, 1.0, 1.0, 0.9, 0.1).unwrap(), (true, false));
        assert_eq!(cycle_conditions(0.95, 1.0, 1.0, 0.9, 0.1).unwrap(), (false, true));
    }

    #[test]
    fn cop_two_ways() {
        let m = preset(PresetId::A, 0.5, 0.9).unwrap();
        let c = cop(&m).unwrap();
        assert!(rel(c.from_levels, 1.0) < 1e-15);
        assert!(rel(c.from_currents, c.from_levels) < 1e-10);
        assert!(c.from_currents <= c.carnot);
        let out = preset(PresetId::A, 0.95, 0.9).unwrap();
        assert!(matches!(cop(&out), Err(Error::CopUndefined(_))));
        let leaky = preset(PresetId::C, 0.3, 0.9).unwrap();
        assert!(matches!(cop(&leaky), Err(Error::Inapplicable(_))));
    }

    #[test]
    fn leaky_condition_agrees_with_pipeline() {
        for id in [PresetId::C, PresetId::D] {
            for &e21 in &[0.02, 0.1, 0.3, 0.5, 0.8] {
                for &bh in &[0.3, 0.6, 0.9] {
                    let m = preset(id, e21, bh).unwrap();
                    let l = leaky_cooling(&m).unwrap();
                    assert!(l.leak_term <= 0.0);
                    assert_eq!(l.leak_bath, if id == PresetId::C { HOT } else { WORK });
                    assert_eq!(l.cooling, cooling_condition(&m).unwrap().1, "{id} {e21} {bh}");
                }
            }
        }
        assert!(matches!(
            leaky_cooling(&preset(PresetId::A, 0.3, 0.9).unwrap()),
            Err(Error::Inapplicable(_))
        ));
    }

    #[test]
    fn leak_vanishes_at_cold_temperature() {
        let p = PresetParams::default();
        let m = preset_with(PresetId::C, 0.3, 0.9, &p).unwrap();
        let mut baths = m.baths().to_vec();
        baths[HOT].beta = p.beta_c;
        let m = QarModel::new(m.system().clone(), baths, COLD).unwrap();
        assert_eq!(leaky_cooling(&m).unwrap().leak_term, 0.0);
    }

    #[test]
    fn ideal_decomposition_is_single_cycle() {
        let m = preset(PresetId::A, 0.4, 0.8).unwrap();
        let d = decompose(&m, false).unwrap();
        assert_eq!(d.cycles.len(), 1);
        assert!(d.leaks.is_empty());
        let closed = ideal_cycle_term(&m).unwrap();
        assert!((d.cycle(1, 0).unwrap() - closed).abs() <= 1e-12 * d.magnitude);
        assert!(d.reconstruction_error() < 1e-12);
    }

    #[test]
    fn leaky_decomposition_matches_leak_formula() {
        let m = preset(PresetId::C, 0.3, 0.9).unwrap();
        let d = decompose(&m, false).unwrap();
        assert_eq!(d.cycles.len(), 1);
        assert_eq!(d.leaks.len(), 1);
        assert_eq!(d.leaks[0].bath, HOT);
        assert!(d.leaks[0].value < 0.0);
        let k = |f, t, b| m.rate(f, t, b).unwrap();
        let l = leaky_cooling(&m).unwrap();
        // both brackets share the factor E21 k^C_{2->1} k^H_{3->1} k^W_{3->2}
        let f = 0.3 * k(1, 0, COLD) * k(2, 0, HOT) * k(2, 1, WORK);
        assert!((d.cycle(1, 0).unwrap() - f * l.ideal_term).abs() <= 1e-12 * d.magnitude);
        assert!((d.leaks[0].value - f * l.leak_term).abs() <= 1e-12 * d.magnitude);
    }

    #[test]
    fn preset_b_has_three_cycles() {
        let m = preset(PresetId::B, 0.5, 0.9).unwrap();
        let d = decompose(&m, true).unwrap();
        assert_eq!(d.cycles.len(), 3);
        assert_eq!(d.leaks.len(), 6);
        assert!(d.leaks.iter().all(|l| l.value <= 0.0));
        assert!(d.cycle(2, 0).unwrap() <= 0.0);
        assert!(d.reconstruction_error() < 1e-10);
        assert!(rel(d.reference, heat_current(&m, COLD).unwrap()) < 1e-12);
    }

    #[test]
    fn roles_fall_back_to_temperature() {
        let m = preset(PresetId::A, 0.5, 0.9).unwrap();
        let mut baths = m.baths().to_vec();
        baths[HOT].label = "X".into();
        baths[WORK].label = "Y".into();
        let m = QarModel::new(m.system().clone(), baths, COLD).unwrap();
        let r = roles(&m).unwrap();
        assert_eq!((r.hot, r.work), (HOT, WORK));
    }
}
