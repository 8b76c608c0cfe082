//! Brute-force validators that do not go through the characteristic
//! polynomial: the stationary distribution by a direct linear solve, currents
//! from rate balance, the first-law residual and the two-bath fluctuation
//! symmetry. Also a seeded generator of random connected models.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::fcs::{cgf_many, heat_current, CgfOptions};
use crate::liouvillian::{build_counting_family, build_generator, single_bath_generator, RateMatrix};
use crate::model::{BathSpec, QarModel, SpectralDensity, SystemSpec};

/// Normalized kernel of a rate matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub populations: Vec<f64>,
    /// `max_j |(L p)_j|`.
    pub residual: f64,
}

/// Solves `L p = 0, sum p = 1` with row `row` of `L` replaced by the
/// normalization.
pub fn steady_state_replacing(l0: &RateMatrix, row: usize) -> Result<SteadyState> {
    let m = l0.as_matrix();
    let n = m.nrows();
    if row >= n {
        return Err(Error::Validation(format!(
            "replacement row {row} out of range for dimension {n}"
        )));
    }
    let scale = l0.scale();
    if scale == 0.0 {
        return Err(Error::Degeneracy("generator has no transitions".into()));
    }
    // the normalization row is scaled like the rates so that pivots compare
    let mut a = m.clone();
    a.row_mut(row).fill(scale);
    let mut b = DVector::zeros(n);
    b[row] = scale;

    let lu = a.clone().lu();
    let u = lu.u();
    let pivot_floor = 1e-13 * scale;
    if u.diagonal().iter().any(|d| d.abs() <= pivot_floor) {
        return Err(Error::Degeneracy(
            "generator has rank below N-1 (disconnected transition graph)".into(),
        ));
    }
    let mut p = lu
        .solve(&b)
        .ok_or_else(|| Error::Degeneracy("singular normalization system".into()))?;
    // iterative refinement with the residual accumulated in double-double
    for _ in 0..2 {
        let r = residual_dd(&a, &p, &b);
        if let Some(dp) = lu.solve(&r) {
            p += dp;
        }
    }
    let residual = (m * &p).amax();
    Ok(SteadyState {
        populations: p.iter().copied().collect(),
        residual,
    })
}

/// `b - A x`, each component summed in double-double.
fn residual_dd(a: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(
        a.nrows(),
        (0..a.nrows()).map(|i| {
            let mut acc = TwoFloat::from(b[i]);
            for j in 0..a.ncols() {
                acc -= TwoFloat::new_mul(a[(i, j)], x[j]);
            }
            f64::from(acc)
        }),
    )
}

/// The unique steady state. The last row carries the normalization; a second
/// solve with the first row replaced guards against ill-conditioning.
pub fn steady_state(l0: &RateMatrix) -> Result<SteadyState> {
    let n = l0.dim();
    let last = steady_state_replacing(l0, n - 1)?;
    let first = steady_state_replacing(l0, 0)?;
    let spread = last
        .populations
        .iter()
        .zip(&first.populations)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if spread > 1e-10 {
        return Err(Error::Degeneracy(format!(
            "steady state depends on the replaced row (spread {spread:e}); generator is ill-conditioned"
        )));
    }
    Ok(last)
}

/// `sum_j E_j (L_nu p)_j`: energy delivered to the system by one bath.
pub fn direct_current(model: &QarModel, bath: usize) -> Result<f64> {
    if bath >= model.baths().len() {
        return Err(Error::Validation(format!("bath index {bath} out of range")));
    }
    let p = steady_state(&build_generator(model))?;
    let p = DVector::from_vec(p.populations);
    Ok(current_from_populations(model, bath, &p))
}

fn current_from_populations(model: &QarModel, bath: usize, p: &DVector<f64>) -> f64 {
    let l = single_bath_generator(model, bath).into_matrix();
    let e = model.system().energies();
    let mut acc = TwoFloat::from(0.0);
    for i in 0..l.nrows() {
        for j in 0..l.ncols() {
            acc += TwoFloat::new_mul(l[(i, j)], p[j]) * e[i];
        }
    }
    f64::from(acc)
}

/// First-law residuals for both current routes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConservationResidual {
    /// `|sum_nu J_nu|` from rate balance.
    pub direct: f64,
    /// `|sum_nu J_nu|` from the characteristic-polynomial formula.
    pub pipeline: f64,
    /// `max_nu |J_nu|` (pipeline), the natural scale for both.
    pub max_current: f64,
}

pub fn conservation_residual(model: &QarModel) -> Result<ConservationResidual> {
    let p = steady_state(&build_generator(model))?;
    let p = DVector::from_vec(p.populations);
    let mut direct = 0.0;
    let mut pipeline = 0.0;
    let mut max_current = 0.0f64;
    for nu in 0..model.baths().len() {
        direct += current_from_populations(model, nu, &p);
        let j = heat_current(model, nu)?;
        pipeline += j;
        max_current = max_current.max(j.abs());
    }
    Ok(ConservationResidual {
        direct: direct.abs(),
        pipeline: pipeline.abs(),
        max_current,
    })
}

/// Outcome of the two-bath symmetry test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryCheck {
    /// `beta_C - beta_other`.
    pub symmetry_point: f64,
    /// `max_s |G(s) - G(s* - s)|`.
    pub max_deviation: f64,
    /// Rate scale of `L(0)`, for relative comparisons.
    pub scale: f64,
}

/// Compares `G(s)` with `G(beta_C - beta_H - s)` for a two-bath model,
/// counting at the cold bath.
pub fn fluctuation_symmetry_check(model: &QarModel, samples: &[f64]) -> Result<SymmetryCheck> {
    if model.baths().len() != 2 {
        return Err(Error::Inapplicable(format!(
            "fluctuation symmetry check needs exactly two baths, model has {}",
            model.baths().len()
        )));
    }
    let cold = model.cold_index();
    let other = 1 - cold;
    let star = model.bath(cold).beta - model.bath(other).beta;
    let fam = build_counting_family(model, cold)?;
    let mut pts = Vec::with_capacity(2 * samples.len());
    for &s in samples {
        pts.push(s);
        pts.push(star - s);
    }
    let g = cgf_many(&fam, &pts, &CgfOptions::default())?;
    let max_deviation = g
        .chunks(2)
        .fold(0.0f64, |m, pair| m.max((pair[0] - pair[1]).abs()));
    Ok(SymmetryCheck {
        symmetry_point: star,
        max_deviation,
        scale: fam.base().scale(),
    })
}

/// `count` sample points, symmetric about `s*/2`, that keep both `s` and
/// `s* - s` inside the continuation window of a two-bath model.
pub fn symmetry_samples(model: &QarModel, count: usize) -> Result<Vec<f64>> {
    if model.baths().len() != 2 {
        return Err(Error::Inapplicable("symmetry samples need a two-bath model".into()));
    }
    let cold = model.cold_index();
    let star = model.bath(cold).beta - model.bath(1 - cold).beta;
    let window = 4.0 * model.baths().iter().fold(0.0f64, |m, b| m.max(b.beta));
    let half = 0.5 * window - 0.5 * star.abs();
    Ok((0..count)
        .map(|k| {
            let u = if count == 1 {
                0.0
            } else {
                -1.0 + 2.0 * k as f64 / (count - 1) as f64
            };
            // stay off the centre, where the test is trivially exact
            0.5 * star + 0.9 * half * (u + 0.013)
        })
        .collect())
}

/// Ranges for [`random_model`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomModelConfig {
    pub min_levels: usize,
    pub max_levels: usize,
    pub min_baths: usize,
    pub max_baths: usize,
    pub beta: (f64, f64),
    pub gamma: (f64, f64),
    /// Level gaps are drawn from this range.
    pub gap: (f64, f64),
    pub omega_c: f64,
    /// Probability that a given bath couples to a given pair.
    pub coupling_probability: f64,
}

impl Default for RandomModelConfig {
    fn default() -> Self {
        RandomModelConfig {
            min_levels: 2,
            max_levels: 5,
            min_baths: 2,
            max_baths: 4,
            beta: (0.1, 2.0),
            gamma: (1e-4, 1e-2),
            gap: (0.1, 1.0),
            omega_c: 10.0,
            coupling_probability: 0.5,
        }
    }
}

impl RandomModelConfig {
    pub fn two_bath() -> Self {
        RandomModelConfig {
            min_baths: 2,
            max_baths: 2,
            ..Self::default()
        }
    }
}

/// Draws one connected model in which every bath couples to at least one
/// transition; disconnected draws are rejected and redrawn.
pub fn random_model<R: Rng>(rng: &mut R, cfg: &RandomModelConfig) -> QarModel {
    let sd = SpectralDensity::ohmic(cfg.omega_c).expect("positive cutoff");
    loop {
        let n = rng.random_range(cfg.min_levels..=cfg.max_levels);
        let mut energies = Vec::with_capacity(n);
        let mut e = 0.0;
        for _ in 0..n {
            energies.push(e);
            e += rng.random_range(cfg.gap.0..=cfg.gap.1);
        }
        let nb = rng.random_range(cfg.min_baths..=cfg.max_baths);
        let mut baths = Vec::with_capacity(nb);
        for b in 0..nb {
            let beta = rng.random_range(cfg.beta.0..=cfg.beta.1);
            // an uncoupled bath is not part of the model; redraw its couplings
            let bath = loop {
                let mut bath = BathSpec::new(format!("B{}", b + 1), beta, sd);
                for i in 0..n {
                    for j in i + 1..n {
                        if rng.random_bool(cfg.coupling_probability) {
                            let lg = rng.random_range(cfg.gamma.0.ln()..=cfg.gamma.1.ln());
                            bath = bath.with_coupling(i, j, lg.exp());
                        }
                    }
                }
                if bath.active_pairs().next().is_some() {
                    break bath;
                }
            };
            baths.push(bath);
        }
        let system = match SystemSpec::new(energies) {
            Ok(s) => s,
            Err(_) => continue,
        };
        if let Ok(m) = QarModel::new(system, baths, 0) {
            return m;
        }
    }
}

/// `count` reproducible random models.
pub fn random_models(seed: u64, count: usize, cfg: &RandomModelConfig) -> Vec<QarModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_model(&mut rng, cfg)).collect()
}

/// Gibbs populations `p_j ~ exp(-beta E_j)`.
pub fn gibbs(energies: &[f64], beta: f64) -> Vec<f64> {
    let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = energies.iter().map(|e| (-beta * (e - e0)).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}
