//! Refrigerator models: energy levels, thermal baths and the
//! detailed-balance rate constants they induce.
//!
//! Units are ħ = k_B = 1. Level indices are 0-based internally; the
//! model-file format (see [`crate::io`]) uses 1-based labels.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible spacing between adjacent levels.
pub const DEFAULT_GAP_EPS: f64 = 1e-6;

/// Bose-Einstein occupation `1 / (exp(beta * omega) - 1)`.
pub fn bose_occupation(omega: f64, beta: f64) -> Result<f64> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::Domain(format!(
            "Bose occupation needs a positive transition frequency, got {omega}"
        )));
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Domain(format!(
            "Bose occupation needs a positive inverse temperature, got {beta}"
        )));
    }
    Ok(1.0 / (beta * omega).exp_m1())
}

/// Ordered, nondegenerate energy levels of the working medium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    energies: Vec<f64>,
}

impl SystemSpec {
    pub fn new(energies: Vec<f64>) -> Result<Self> {
        Self::with_gap(energies, DEFAULT_GAP_EPS)
    }

    /// Builds the level set, rejecting any adjacent spacing below `gap_eps`.
    pub fn with_gap(energies: Vec<f64>, gap_eps: f64) -> Result<Self> {
        if energies.len() < 2 {
            return Err(Error::Validation(format!(
                "a working medium needs at least 2 levels, got {}",
                energies.len()
            )));
        }
        if let Some(e) = energies.iter().find(|e| !e.is_finite()) {
            return Err(Error::Validation(format!("non-finite energy {e}")));
        }
        for (j, w) in energies.windows(2).enumerate() {
            let gap = w[1] - w[0];
            if gap < gap_eps {
                return Err(Error::Validation(format!(
                    "energies must increase by at least {gap_eps:e}: E_{} = {} and E_{} = {} \
                     (quasidegenerate or misordered levels)",
                    j + 1,
                    w[0],
                    j + 2,
                    w[1]
                )));
            }
        }
        Ok(SystemSpec { energies })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// `E_{i,j} = E_i - E_j`.
    pub fn gap(&self, i: usize, j: usize) -> f64 {
        self.energies[i] - self.energies[j]
    }

    /// Distance between the lowest and the highest level.
    pub fn spread(&self) -> f64 {
        self.energies[self.energies.len() - 1] - self.energies[0]
    }
}

/// Bath spectral density `Gamma(omega)` per unit dimensionless coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SpectralDensity {
    /// `gamma * omega * exp(-|omega| / cutoff)`.
    Ohmic { cutoff: f64 },
}

impl SpectralDensity {
    pub fn ohmic(cutoff: f64) -> Result<Self> {
        if !(cutoff > 0.0) || !cutoff.is_finite() {
            return Err(Error::Validation(format!(
                "ohmic cutoff must be positive, got {cutoff}"
            )));
        }
        Ok(SpectralDensity::Ohmic { cutoff })
    }

    /// Evaluates `Gamma(omega)` for coupling strength `gamma`.
    pub fn value(&self, gamma: f64, omega: f64) -> f64 {
        match *self {
            SpectralDensity::Ohmic { cutoff } => gamma * omega * (-omega.abs() / cutoff).exp(),
        }
    }

    pub fn cutoff(&self) -> f64 {
        match *self {
            SpectralDensity::Ohmic { cutoff } => cutoff,
        }
    }
}

/// Free-function form of [`SpectralDensity::value`].
pub fn spectral_value(sd: &SpectralDensity, gamma: f64, omega: f64) -> f64 {
    sd.value(gamma, omega)
}

/// One thermal reservoir and the transitions it drives.
#[derive(Debug, Clone, PartialEq)]
pub struct BathSpec {
    pub label: String,
    pub beta: f64,
    /// Couplings keyed by `(lower, upper)` level index, `lower < upper`.
    /// Missing pairs are uncoupled.
    pub couplings: BTreeMap<(usize, usize), f64>,
    pub spectral: SpectralDensity,
}

impl BathSpec {
    pub fn new(label: impl Into<String>, beta: f64, spectral: SpectralDensity) -> Self {
        BathSpec {
            label: label.into(),
            beta,
            couplings: BTreeMap::new(),
            spectral,
        }
    }

    /// Adds (or overwrites) the coupling of the unordered pair `{i, j}`.
    pub fn with_coupling(mut self, i: usize, j: usize, gamma: f64) -> Self {
        self.couplings.insert((i.min(j), i.max(j)), gamma);
        self
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings
            .get(&(i.min(j), i.max(j)))
            .copied()
            .unwrap_or(0.0)
    }

    /// Pairs with a strictly positive coupling.
    pub fn active_pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.couplings
            .iter()
            .filter(|(_, &g)| g > 0.0)
            .map(|(&(i, j), &g)| (i, j, g))
    }
}

/// A validated refrigerator: levels, baths and the refrigerated bath.
#[derive(Debug, Clone, PartialEq)]
pub struct QarModel {
    system: SystemSpec,
    baths: Vec<BathSpec>,
    cold: usize,
}

impl QarModel {
    pub fn new(system: SystemSpec, baths: Vec<BathSpec>, cold: usize) -> Result<Self> {
        let n = system.len();
        if baths.is_empty() {
            return Err(Error::Validation("a model needs at least one bath".into()));
        }
        if cold >= baths.len() {
            return Err(Error::Validation(format!(
                "cold bath index {cold} out of range for {} baths",
                baths.len()
            )));
        }
        for bath in &baths {
            if !(bath.beta > 0.0) || !bath.beta.is_finite() {
                return Err(Error::Validation(format!(
                    "bath {}: inverse temperature must be positive, got {}",
                    bath.label, bath.beta
                )));
            }
            let cutoff = bath.spectral.cutoff();
            if !(cutoff > 0.0) || !cutoff.is_finite() {
                return Err(Error::Validation(format!(
                    "bath {}: spectral cutoff must be positive, got {cutoff}",
                    bath.label
                )));
            }
            for (&(i, j), &g) in &bath.couplings {
                if i >= j || j >= n {
                    return Err(Error::Validation(format!(
                        "bath {}: invalid level pair ({}, {}) for {n} levels",
                        bath.label,
                        i + 1,
                        j + 1
                    )));
                }
                if !(g >= 0.0) || !g.is_finite() {
                    return Err(Error::Validation(format!(
                        "bath {}: coupling on ({}, {}) must be nonnegative, got {g}",
                        bath.label,
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        if !transition_graph_connected(n, &baths) {
            return Err(Error::Validation(
                "transition graph is disconnected: the steady state is not unique".into(),
            ));
        }
        Ok(QarModel { system, baths, cold })
    }

    pub fn system(&self) -> &SystemSpec {
        &self.system
    }

    pub fn baths(&self) -> &[BathSpec] {
        &self.baths
    }

    pub fn bath(&self, index: usize) -> &BathSpec {
        &self.baths[index]
    }

    pub fn cold_index(&self) -> usize {
        self.cold
    }

    pub fn n_levels(&self) -> usize {
        self.system.len()
    }

    pub fn bath_index(&self, label: &str) -> Option<usize> {
        self.baths.iter().position(|b| b.label == label)
    }

    /// Returns a copy counting a different bath as the refrigerated one.
    pub fn with_cold_index(&self, cold: usize) -> Result<Self> {
        QarModel::new(self.system.clone(), self.baths.clone(), cold)
    }

    /// Rate constant `k^bath_{from -> to}`: absorption when `E_to > E_from`,
    /// stimulated plus spontaneous emission otherwise.
    pub fn rate(&self, from: usize, to: usize, bath: usize) -> Result<f64> {
        let n = self.n_levels();
        if from == to {
            return Err(Error::Domain(format!(
                "rate needs two distinct levels, got {} -> {}",
                from + 1,
                to + 1
            )));
        }
        if from >= n || to >= n {
            return Err(Error::Domain(format!(
                "level index out of range: {} -> {} with {n} levels",
                from + 1,
                to + 1
            )));
        }
        if bath >= self.baths.len() {
            return Err(Error::Domain(format!("bath index {bath} out of range")));
        }
        Ok(self.rate_unchecked(from, to, bath))
    }

    pub(crate) fn rate_unchecked(&self, from: usize, to: usize, bath: usize) -> f64 {
        let b = &self.baths[bath];
        let gamma = b.coupling(from, to);
        if gamma == 0.0 {
            return 0.0;
        }
        let omega = self.system.gap(to, from).abs();
        let spectral = b.spectral.value(gamma, omega);
        // validated models have omega > 0 and beta > 0
        let n = 1.0 / (b.beta * omega).exp_m1();
        if self.system.energies[to] > self.system.energies[from] {
            spectral * n
        } else {
            spectral * (n + 1.0)
        }
    }

    /// Every nonzero jump `(from, to, bath, rate)`.
    pub fn jumps(&self) -> Vec<Jump> {
        let mut out = Vec::new();
        for (b, bath) in self.baths.iter().enumerate() {
            for (i, j, _) in bath.active_pairs() {
                out.push(Jump {
                    from: i,
                    to: j,
                    bath: b,
                    rate: self.rate_unchecked(i, j, b),
                });
                out.push(Jump {
                    from: j,
                    to: i,
                    bath: b,
                    rate: self.rate_unchecked(j, i, b),
                });
            }
        }
        out
    }
}

/// A single bath-induced transition with its rate constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub from: usize,
    pub to: usize,
    pub bath: usize,
    pub rate: f64,
}

fn transition_graph_connected(n: usize, baths: &[BathSpec]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for bath in baths {
        for (i, j, _) in bath.active_pairs() {
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri != rj {
                parent[ri] = rj;
            }
        }
    }
    let root = find(&mut parent, 0);
    (1..n).all(|k| find(&mut parent, k) == root)
}

/// The four three-level refrigerator designs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PresetId {
    /// Ideal: C on 1-2, H on 1-3, W on 2-3.
    A,
    /// Ideal plus weak couplings of every bath to every other transition.
    B,
    /// Ideal plus a hot-bath leak on the cold transition 1-2.
    C,
    /// Ideal plus a work-bath leak on the cold transition 1-2.
    D,
}

impl PresetId {
    pub const ALL: [PresetId; 4] = [PresetId::A, PresetId::B, PresetId::C, PresetId::D];

    pub fn describe(self) -> &'static str {
        match self {
            PresetId::A => "ideal QAR: gamma on C(1-2), H(1-3), W(2-3)",
            PresetId::B => {
                "ideal couplings plus gamma/50 on C(1-3), W(1-3), C(2-3), H(2-3), H(1-2), W(1-2)"
            }
            PresetId::C => "ideal couplings plus hot-bath leak H(1-2) = gamma",
            PresetId::D => "ideal couplings plus work-bath leak W(1-2) = gamma",
        }
    }
}

impl fmt::Display for PresetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PresetId::A => "A",
            PresetId::B => "B",
            PresetId::C => "C",
            PresetId::D => "D",
        };
        f.write_str(s)
    }
}

impl FromStr for PresetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(PresetId::A),
            "B" => Ok(PresetId::B),
            "C" => Ok(PresetId::C),
            "D" => Ok(PresetId::D),
            other => Err(Error::Domain(format!("unknown preset '{other}' (expected A-D)"))),
        }
    }
}

/// Fixed parameters shared by the three-level presets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PresetParams {
    pub e31: f64,
    pub beta_c: f64,
    pub beta_w: f64,
    pub omega_c: f64,
    pub gamma: f64,
    /// Weak coupling of preset B as a fraction of `gamma`.
    pub weak_ratio: f64,
}

impl Default for PresetParams {
    fn default() -> Self {
        PresetParams {
            e31: 1.0,
            beta_c: 1.0,
            beta_w: 0.1,
            omega_c: 10.0,
            gamma: 1e-3,
            weak_ratio: 1.0 / 50.0,
        }
    }
}

/// Bath order in every preset.
pub const COLD: usize = 0;
pub const HOT: usize = 1;
pub const WORK: usize = 2;

/// Builds one of the three-level presets with the default parameters.
pub fn preset(id: PresetId, e21: f64, beta_h: f64) -> Result<QarModel> {
    preset_with(id, e21, beta_h, &PresetParams::default())
}

pub fn preset_with(id: PresetId, e21: f64, beta_h: f64, p: &PresetParams) -> Result<QarModel> {
    if !(e21 > 0.0 && e21 < p.e31) {
        return Err(Error::Domain(format!(
            "E21 = {e21} must lie strictly inside (0, E31 = {})",
            p.e31
        )));
    }
    if !(p.beta_w < beta_h && beta_h < p.beta_c) {
        return Err(Error::Domain(format!(
            "betaH = {beta_h} must lie strictly between betaW = {} and betaC = {}",
            p.beta_w, p.beta_c
        )));
    }
    let sd = SpectralDensity::ohmic(p.omega_c)?;
    let g = p.gamma;
    let w = p.gamma * p.weak_ratio;
    let mut cold = BathSpec::new("C", p.beta_c, sd).with_coupling(0, 1, g);
    let mut hot = BathSpec::new("H", beta_h, sd).with_coupling(0, 2, g);
    let mut work = BathSpec::new("W", p.beta_w, sd).with_coupling(1, 2, g);
    match id {
        PresetId::A => {}
        PresetId::B => {
            cold = cold.with_coupling(0, 2, w).with_coupling(1, 2, w);
            hot = hot.with_coupling(1, 2, w).with_coupling(0, 1, w);
            work = work.with_coupling(0, 2, w).with_coupling(0, 1, w);
        }
        PresetId::C => hot = hot.with_coupling(0, 1, g),
        PresetId::D => work = work.with_coupling(0, 1, g),
    }
    let system = SystemSpec::new(vec![0.0, e21, p.e31])?;
    QarModel::new(system, vec![cold, hot, work], COLD)
}

/// Two-level system exchanging energy `omega0` with a cold and a hot bath.
pub fn spin_boson(
    omega0: f64,
    gamma_c: f64,
    gamma_h: f64,
    beta_c: f64,
    beta_h: f64,
    omega_c: f64,
) -> Result<QarModel> {
    let sd = SpectralDensity::ohmic(omega_c)?;
    let system = SystemSpec::new(vec![0.0, omega0])?;
    let cold = BathSpec::new("C", beta_c, sd).with_coupling(0, 1, gamma_c);
    let hot = BathSpec::new("H", beta_h, sd).with_coupling(0, 1, gamma_h);
    QarModel::new(system, vec![cold, hot], 0)
}
