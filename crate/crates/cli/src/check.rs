//! The invariant suite behind `qar check`.

use qar_fcs::analytic::{cop, decompose, ideal_cycle_term, window_ratio};
use qar_fcs::fcs::{charpoly, heat_current, spectrum_check};
use qar_fcs::liouvillian::{build_generator, single_bath_generator};
use qar_fcs::model::{preset, PresetId, QarModel};
use qar_fcs::oracle::{
    conservation_residual, direct_current, fluctuation_symmetry_check, random_models,
    symmetry_samples, RandomModelConfig,
};
use qar_fcs::scan::linspace;
use qar_fcs::Result;

/// Outcome of one named property.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub cases: usize,
    /// Largest observed deviation in the units of `tolerance`.
    pub worst: f64,
    pub tolerance: f64,
    pub failures: usize,
    pub note: String,
}

impl CheckResult {
    fn new(name: &'static str, tolerance: f64) -> Self {
        CheckResult {
            name,
            cases: 0,
            worst: 0.0,
            tolerance,
            failures: 0,
            note: String::new(),
        }
    }

    /// Records one case; `dev` is compared against the tolerance.
    fn observe(&mut self, dev: f64) {
        self.cases += 1;
        if dev.is_nan() || dev > self.tolerance {
            self.failures += 1;
        }
        if dev.is_nan() {
            self.worst = f64::NAN;
        } else if !self.worst.is_nan() {
            self.worst = self.worst.max(dev);
        }
    }

    /// Records a yes/no case.
    fn observe_flag(&mut self, ok: bool) {
        self.observe(if ok { 0.0 } else { f64::INFINITY });
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn rel(a: f64, b: f64) -> f64 {
    let m = a.abs().max(b.abs());
    if m == 0.0 {
        0.0
    } else {
        (a - b).abs() / m
    }
}

/// Roundoff floor for a current: `1e-12 * scale(L0) * (E_max - E_min)`.
fn zero_floor(m: &QarModel) -> f64 {
    1e-12 * build_generator(m).scale() * m.system().spread()
}

fn detailed_balance(models: &[QarModel]) -> Result<CheckResult> {
    let mut r = CheckResult::new("detailed-balance", 1e-12);
    for m in models {
        let e = m.system().energies();
        for (nu, b) in m.baths().iter().enumerate() {
            for (i, j, _) in b.active_pairs() {
                let up = m.rate(i, j, nu)?;
                let down = m.rate(j, i, nu)?;
                r.observe(rel(up / down, (-b.beta * (e[j] - e[i])).exp()));
            }
        }
    }
    Ok(r)
}

/// A single bath obeys detailed balance, so `D L D^-1` with
/// `D = diag(exp(beta E / 2))` is symmetric and the spectrum is real. Root
/// counting is avoided on purpose: a bath that misses some levels leaves a
/// repeated zero root.
fn single_bath_spectrum(models: &[QarModel]) -> CheckResult {
    let mut r = CheckResult::new("eigen-realness (single-bath generators)", 1e-12);
    for m in models {
        let e = m.system().energies();
        for (nu, b) in m.baths().iter().enumerate() {
            let l = single_bath_generator(m, nu);
            let a = l.as_matrix();
            let scale = l.scale();
            let w = |i: usize, j: usize| a[(i, j)] * (0.5 * b.beta * (e[i] - e[j])).exp();
            let mut dev = 0.0f64;
            for i in 0..a.nrows() {
                for j in 0..i {
                    dev = dev.max((w(i, j) - w(j, i)).abs() / scale);
                }
            }
            r.observe(dev);
        }
    }
    r
}

fn full_spectrum(models: &[QarModel]) -> CheckResult {
    let mut r = CheckResult::new("eigen-structure (unique zero root, det bound)", 1e-12);
    let mut complex = 0;
    for m in models {
        let c = spectrum_check(&build_generator(m), 1e-10);
        if !c.all_real {
            complex += 1;
        }
        if c.zero_roots != 1 || !c.others_negative {
            r.observe(f64::INFINITY);
        } else {
            r.observe(c.scaled_det);
        }
    }
    r.note = format!("{complex} generators with a complex-conjugate pair (allowed away from equilibrium)");
    r
}

fn coefficient_positivity(models: &[QarModel]) -> CheckResult {
    let mut r = CheckResult::new("a_j positivity", 0.0);
    for m in models {
        let cp = charpoly(build_generator(m).as_matrix());
        let n = cp.degree();
        r.observe_flag((1..n).all(|j| cp.a(j) > 0.0));
    }
    r
}

fn oracle_equivalence(models: &[QarModel]) -> Result<CheckResult> {
    let mut r = CheckResult::new("oracle equivalence", 1e-10);
    let mut zeros = 0;
    for m in models {
        let floor = zero_floor(m);
        for nu in 0..m.baths().len() {
            let a = heat_current(m, nu)?;
            let b = direct_current(m, nu)?;
            if a.abs().max(b.abs()) <= floor {
                zeros += 1;
                r.observe(if (a - b).abs() <= floor { 0.0 } else { f64::INFINITY });
            } else {
                r.observe(rel(a, b));
            }
        }
    }
    r.note = format!("{zeros} identically-zero currents compared against the roundoff floor");
    Ok(r)
}

fn conservation(models: &[QarModel]) -> Result<CheckResult> {
    let mut r = CheckResult::new("conservation", 1e-12);
    for m in models {
        let c = conservation_residual(m)?;
        let floor = zero_floor(m);
        if c.max_current <= floor {
            r.observe(if c.pipeline <= floor { 0.0 } else { f64::INFINITY });
        } else {
            r.observe(c.pipeline / c.max_current);
        }
    }
    Ok(r)
}

fn fluctuation_symmetry(models: &[QarModel]) -> Result<CheckResult> {
    let mut r = CheckResult::new("fluctuation symmetry (two-bath)", 1e-10);
    for m in models.iter().filter(|m| m.baths().len() == 2) {
        let s = symmetry_samples(m, 20)?;
        r.observe(fluctuation_symmetry_check(m, &s)?.max_deviation);
    }
    Ok(r)
}

fn ideal_decomposition(grid: &[(f64, f64)]) -> Result<CheckResult> {
    let mut r = CheckResult::new("ideal-cycle decomposition", 1e-10);
    for &(x, bh) in grid {
        let m = preset(PresetId::A, x, bh)?;
        let d = decompose(&m, false)?;
        let closed = ideal_cycle_term(&m)?;
        let shape = d.cycles.len() == 1 && d.leaks.is_empty();
        let dev = d.cycle(1, 0).map_or(f64::INFINITY, |c| (c - closed).abs() / d.magnitude);
        r.observe(if shape { dev.max(d.reconstruction_error()) } else { f64::INFINITY });
    }
    Ok(r)
}

fn cop_bound(beta_h: &[f64]) -> Result<CheckResult> {
    let mut r = CheckResult::new("COP bound", 1e-10);
    for &bh in beta_h {
        let edge = window_ratio(1.0, bh, 0.1);
        for t in linspace(0.05, 0.95, 11) {
            let c = cop(&preset(PresetId::A, t * edge, bh)?)?;
            r.observe(rel(c.from_currents, c.from_levels).max(c.from_currents - c.carnot));
        }
    }
    Ok(r)
}

/// Properties that apply to any model.
fn model_checks(models: &[QarModel]) -> Result<Vec<CheckResult>> {
    Ok(vec![
        detailed_balance(models)?,
        single_bath_spectrum(models),
        full_spectrum(models),
        coefficient_positivity(models),
        oracle_equivalence(models)?,
        conservation(models)?,
    ])
}

/// The seeded suite: random models plus the preset-specific properties.
pub fn run_suite(seed: u64, trials: usize) -> Result<Vec<CheckResult>> {
    let models = random_models(seed, trials, &RandomModelConfig::default());
    let pairs = random_models(seed ^ 0x9e37_79b9_7f4a_7c15, trials, &RandomModelConfig::two_bath());
    let mut out = model_checks(&models)?;
    out.push(fluctuation_symmetry(&pairs)?);
    let axis_b = linspace(0.11, 0.99, 11);
    let grid: Vec<(f64, f64)> = axis_b
        .iter()
        .flat_map(|&bh| linspace(0.01, 0.99, 11).into_iter().map(move |x| (x, bh)))
        .collect();
    out.push(ideal_decomposition(&grid)?);
    out.push(cop_bound(&linspace(0.15, 0.95, 11))?);
    Ok(out)
}

/// The model-agnostic properties for one user model.
pub fn run_on_model(model: &QarModel) -> Result<Vec<CheckResult>> {
    let models = std::slice::from_ref(model);
    let mut out = model_checks(models)?;
    if model.baths().len() == 2 {
        out.push(fluctuation_symmetry(models)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let r = run_suite(3, 25).unwrap();
        for c in &r {
            assert!(c.passed(), "{} failed: worst {:e}", c.name, c.worst);
            assert!(c.cases > 0, "{} saw no cases", c.name);
        }
    }

    #[test]
    fn nan_counts_as_failure() {
        let mut c = CheckResult::new("x", 1.0);
        c.observe(0.5);
        c.observe(f64::NAN);
        assert_eq!(c.failures, 1);
        assert!(c.worst.is_nan());
    }
}
