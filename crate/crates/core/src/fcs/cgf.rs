//! Scalar cumulant generating function `G(s)`: the root of
//! `det(lambda I - L(s))` connected to `G(0) = 0`, tracked by Newton
//! continuation in `s`.

use crate::error::{Error, Result};
use crate::fcs::roots::horner;
use crate::liouvillian::CountingFamily;
use twofloat::TwoFloat;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgfOptions {
    /// Continuation step is at most `step_factor / energy_scale`.
    pub step_factor: f64,
    /// Relative Newton tolerance on the tracked root.
    pub newton_tol: f64,
    pub max_iter: usize,
    /// Roots closer than this (relative to the rate scale) count as a
    /// collision.
    pub collision_tol: f64,
}

impl Default for CgfOptions {
    fn default() -> Self {
        CgfOptions {
            step_factor: 0.05,
            newton_tol: 1e-12,
            max_iter: 100,
            collision_tol: 1e-8,
        }
    }
}

pub fn cgf(family: &CountingFamily, s: f64) -> Result<f64> {
    cgf_with(family, s, &CgfOptions::default())
}

pub fn cgf_with(family: &CountingFamily, s: f64, opts: &CgfOptions) -> Result<f64> {
    Ok(cgf_many(family, &[s], opts)?[0])
}

/// `G` at several points. Each sign branch is walked once from `s = 0`,
/// visiting the samples in order of increasing `|s|`.
pub fn cgf_many(family: &CountingFamily, samples: &[f64], opts: &CgfOptions) -> Result<Vec<f64>> {
    for &s in samples {
        if !s.is_finite() || s.abs() > family.s_window() {
            return Err(Error::Domain(format!(
                "counting variable s = {s} outside the continuation window |s| <= {}",
                family.s_window()
            )));
        }
    }
    let mut out = vec![0.0; samples.len()];
    if family.base().scale() == 0.0 {
        return Ok(out);
    }
    let mut order: Vec<usize> = (0..samples.len()).filter(|&i| samples[i] != 0.0).collect();
    order.sort_by(|&a, &b| samples[a].abs().total_cmp(&samples[b].abs()));
    for positive in [true, false] {
        let mut walker = Walker::new(family, opts);
        for &i in order.iter().filter(|&&i| (samples[i] > 0.0) == positive) {
            out[i] = walker.advance_to(samples[i])?;
        }
    }
    Ok(out)
}

/// Continuation state along one branch.
struct Walker<'a> {
    family: &'a CountingFamily,
    opts: &'a CgfOptions,
    max_step: f64,
    s: f64,
    lambda: TwoFloat,
    /// Previous point, for the linear predictor.
    prev: Option<(f64, TwoFloat)>,
}

impl<'a> Walker<'a> {
    fn new(family: &'a CountingFamily, opts: &'a CgfOptions) -> Self {
        Walker {
            family,
            opts,
            max_step: opts.step_factor / family.energy_scale(),
            s: 0.0,
            lambda: TwoFloat::from(0.0),
            prev: None,
        }
    }

    fn advance_to(&mut self, target: f64) -> Result<f64> {
        let span = target - self.s;
        let steps = (span.abs() / self.max_step).ceil() as usize;
        let start = self.s;
        for k in 1..=steps {
            let sk = if k == steps {
                target
            } else {
                start + span * (k as f64 / steps as f64)
            };
            self.step(sk)?;
        }
        Ok(self.lambda.hi() + self.lambda.lo())
    }

    fn step(&mut self, sk: f64) -> Result<()> {
        let opts = self.opts;
        let scale = self.family.base().scale();
        let floor = 4.0 * f64::EPSILON * scale;
        let coeffs = charpoly_dd(&self.family.eval_dd(sk), self.family.dim());
        let mut x = match self.prev {
            Some((sp, lp)) => self.lambda + (self.lambda - lp) * ((sk - self.s) / (self.s - sp)),
            None => self.lambda,
        };
        let mut converged = false;
        for _ in 0..opts.max_iter {
            let (p, dp) = horner_dd(&coeffs, x);
            if p == 0.0 {
                converged = true;
                break;
            }
            if dp == 0.0 || !dp.hi().is_finite() {
                return Err(Error::Continuation(format!(
                    "vanishing derivative of the characteristic polynomial at s = {sk}"
                )));
            }
            let dx = p / dp;
            x -= dx;
            let step = dx.hi().abs();
            if step <= opts.newton_tol * x.hi().abs() || step <= floor {
                // one more step settles the low word
                let (p, dp) = horner_dd(&coeffs, x);
                if dp != 0.0 {
                    x -= p / dp;
                }
                converged = true;
                break;
            }
        }
        if !converged || !x.hi().is_finite() {
            return Err(Error::Continuation(format!(
                "Newton iteration did not converge at s = {sk}"
            )));
        }
        let plain: Vec<f64> = coeffs.iter().map(|c| c.hi() + c.lo()).collect();
        if let Some(d) = nearest_other_root(&plain, x.hi()) {
            if d < opts.collision_tol * scale {
                return Err(Error::Continuation(format!(
                    "root collision at s = {sk}: another eigenvalue within {d:.3e}"
                )));
            }
        }
        self.prev = Some((self.s, self.lambda));
        self.s = sk;
        self.lambda = x;
        Ok(())
    }
}

/// Monic characteristic polynomial (descending) of a row-major `n x n`
/// matrix by the Faddeev-LeVerrier recursion in double-double arithmetic.
fn charpoly_dd(m: &[TwoFloat], n: usize) -> Vec<TwoFloat> {
    let zero = TwoFloat::from(0.0);
    let mut coeffs = Vec::with_capacity(n + 1);
    coeffs.push(TwoFloat::from(1.0));
    let mut b = vec![zero; n * n];
    for i in 0..n {
        b[i * n + i] = TwoFloat::from(1.0);
    }
    let mut a = vec![zero; n * n];
    for k in 1..=n {
        for r in 0..n {
            for c in 0..n {
                let mut acc = zero;
                for t in 0..n {
                    acc += m[r * n + t] * b[t * n + c];
                }
                a[r * n + c] = acc;
            }
        }
        let mut tr = zero;
        for i in 0..n {
            tr += a[i * n + i];
        }
        let ak = -tr / k as f64;
        coeffs.push(ak);
        b.copy_from_slice(&a);
        for i in 0..n {
            b[i * n + i] += ak;
        }
    }
    coeffs
}

fn horner_dd(c: &[TwoFloat], x: TwoFloat) -> (TwoFloat, TwoFloat) {
    let mut p = TwoFloat::from(0.0);
    let mut dp = TwoFloat::from(0.0);
    for &ck in c {
        dp = dp * x + p;
        p = p * x + ck;
    }
    (p, dp)
}

/// Newton distance estimate from `root` to the closest remaining root of the
/// deflated polynomial.
fn nearest_other_root(coeffs: &[f64], root: f64) -> Option<f64> {
    if coeffs.len() <= 2 {
        return None;
    }
    // synthetic division by (x - root)
    let mut q = Vec::with_capacity(coeffs.len() - 1);
    let mut acc = 0.0;
    for &c in &coeffs[..coeffs.len() - 1] {
        acc = acc * root + c;
        q.push(acc);
    }
    let (qv, dq) = horner(&q, root);
    if qv == 0.0 {
        return Some(0.0);
    }
    if dq == 0.0 {
        return None;
    }
    Some((qv / dq).abs())
}

/// Central-difference current and noise from `G`.
pub fn numeric_cumulants(family: &CountingFamily, h: f64) -> Result<(f64, f64)> {
    if !(h > 0.0 && h <= 1e-3) {
        return Err(Error::Domain(format!(
            "finite-difference step must satisfy 0 < h <= 1e-3, got {h}"
        )));
    }
    let g = cgf_many(family, &[h, -h], &CgfOptions::default())?;
    let (gp, gm) = (g[0], g[1]);
    Ok(((gp - gm) / (2.0 * h), (gp + gm) / (h * h)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fcs::{current_of, noise_of};
    use crate::liouvillian::build_counting_family;
    use crate::model::{preset, spin_boson, PresetId, COLD};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs())
    }

    #[test]
    fn vanishes_at_origin() {
        let m = preset(PresetId::B, 0.4, 0.7).unwrap();
        let fam = build_counting_family(&m, COLD).unwrap();
        assert_eq!(cgf(&fam, 0.0).unwrap(), 0.0);
        // the first continuation step lands next to zero
        assert!(cgf(&fam, 1e-9).unwrap().abs() < 1e-9 * fam.base().scale());
    }

    #[test]
    fn slope_and_curvature_match_closed_forms() {
        for m in [
            spin_boson(1.0, 0.01, 0.01, 1.0, 0.5, 10.0).unwrap(),
            preset(PresetId::A, 0.5, 0.9).unwrap(),
        ] {
            let fam = build_counting_family(&m, 0).unwrap();
            let (jn, sn) = numeric_cumulants(&fam, 1e-4).unwrap();
            assert!(rel(jn, current_of(&fam).unwrap()) < 1e-6);
            assert!(rel(sn, noise_of(&fam).unwrap()) < 1e-6);
        }
    }

    #[test]
    fn spin_boson_symmetry() {
        let m = spin_boson(1.0, 0.01, 0.02, 1.0, 0.5, 10.0).unwrap();
        let fam = build_counting_family(&m, 0).unwrap();
        let scale = fam.base().scale();
        for s in [-0.4, -0.1, 0.2, 0.25, 0.6, 0.9] {
            let d = cgf(&fam, s).unwrap() - cgf(&fam, 0.5 - s).unwrap();
            assert!(d.abs() <= 1e-10 * scale, "s = {s}: {d:e}");
        }
    }

    #[test]
    fn single_bath_has_no_current() {
        let m = spin_boson(1.0, 0.01, 0.0, 1.0, 0.5, 10.0).unwrap();
        let fam = build_counting_family(&m, 0).unwrap();
        let (jn, _) = numeric_cumulants(&fam, 1e-4).unwrap();
        assert!(jn.abs() <= 1e-12 * fam.base().scale());
    }

    #[test]
    fn batched_matches_single_points() {
        let m = preset(PresetId::B, 0.6, 0.8).unwrap();
        let fam = build_counting_family(&m, COLD).unwrap();
        let pts = [0.9, -0.3, 0.0, 0.2, -1.7, 0.9];
        let many = cgf_many(&fam, &pts, &CgfOptions::default()).unwrap();
        for (s, g) in pts.iter().zip(&many) {
            let single = cgf(&fam, *s).unwrap();
            assert!((single - g).abs() <= 1e-14 * fam.base().scale());
        }
    }

    #[test]
    fn rejects_points_outside_window() {
        let m = preset(PresetId::A, 0.5, 0.9).unwrap();
        let fam = build_counting_family(&m, COLD).unwrap();
        assert!(matches!(cgf(&fam, 4.5), Err(Error::Domain(_))));
        assert!(matches!(cgf(&fam, f64::NAN), Err(Error::Domain(_))));
        assert!(numeric_cumulants(&fam, 1e-2).is_err());
    }

    #[test]
    fn double_double_charpoly_matches_plain() {
        let m = preset(PresetId::C, 0.3, 0.6).unwrap();
        let fam = build_counting_family(&m, COLD).unwrap();
        let dd = charpoly_dd(&fam.eval_dd(0.7), 3);
        let plain = crate::fcs::charpoly(&fam.eval(0.7)).monic();
        for (a, b) in dd.iter().zip(&plain) {
            assert!((a.hi() - b).abs() <= 1e-12 * b.abs().max(1e-12));
        }
    }
}
