//! Population generators and their counting-field families.
//!
//! The counting variable is the real `s = i chi`. A jump `i -> j` driven by
//! the counted bath picks up the factor `exp(s (E_j - E_i))` on its
//! off-diagonal entry; diagonal (escape) entries never carry the field.
//! Positive `s`-derivatives therefore measure energy flowing from the
//! counted bath into the system.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::model::{Jump, QarModel};

/// Column-conserving rate matrix with nonnegative off-diagonal entries.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix(DMatrix<f64>);

impl RateMatrix {
    /// Checks sign structure and column sums (relative `1e-12`).
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Validation(format!(
                "rate matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let scale = max_abs_diag(&m).max(f64::MIN_POSITIVE);
        for c in 0..m.ncols() {
            let mut sum = 0.0;
            for r in 0..m.nrows() {
                let v = m[(r, c)];
                if !v.is_finite() {
                    return Err(Error::Validation(format!("non-finite entry at ({r}, {c})")));
                }
                if r != c && v < 0.0 {
                    return Err(Error::Validation(format!(
                        "negative off-diagonal rate {v} at ({}, {})",
                        r + 1,
                        c + 1
                    )));
                }
                sum += v;
            }
            if sum.abs() > 1e-12 * scale {
                return Err(Error::Validation(format!(
                    "column {} sums to {sum:e}, not zero",
                    c + 1
                )));
            }
        }
        Ok(RateMatrix(m))
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// Largest escape rate, used to make tolerances scale-relative.
    pub fn scale(&self) -> f64 {
        max_abs_diag(&self.0)
    }
}

pub(crate) fn max_abs_diag(m: &DMatrix<f64>) -> f64 {
    m.diagonal().iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

fn assemble<'a>(n: usize, jumps: impl Iterator<Item = &'a Jump>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for j in jumps {
        m[(j.to, j.from)] += j.rate;
        m[(j.from, j.from)] -= j.rate;
    }
    m
}

/// `L(0) = sum over baths of L_mu`.
pub fn build_generator(model: &QarModel) -> RateMatrix {
    RateMatrix(assemble(model.n_levels(), model.jumps().iter()))
}

/// Generator of a single bath acting alone.
pub fn single_bath_generator(model: &QarModel, bath: usize) -> RateMatrix {
    let jumps = model.jumps();
    RateMatrix(assemble(
        model.n_levels(),
        jumps.iter().filter(|j| j.bath == bath),
    ))
}

type Evaluator = dyn Fn(f64) -> DMatrix<f64> + Send + Sync;

/// One rate contribution to `L(s)`; `de` is set for counted jumps.
#[derive(Debug, Clone, Copy)]
struct Term {
    to: usize,
    from: usize,
    rate: f64,
    de: Option<f64>,
}

/// `s -> L(s)` together with the exact derivative matrices at `s = 0`.
#[derive(Clone)]
pub struct CountingFamily {
    base: RateMatrix,
    counted_bath: Option<usize>,
    evaluator: Arc<Evaluator>,
    terms: Option<Arc<[Term]>>,
    d1: DMatrix<f64>,
    d2: DMatrix<f64>,
    energy_scale: f64,
    s_window: f64,
}

impl fmt::Debug for CountingFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CountingFamily")
            .field("base", &self.base)
            .field("counted_bath", &self.counted_bath)
            .field("d1", &self.d1)
            .field("d2", &self.d2)
            .field("energy_scale", &self.energy_scale)
            .field("s_window", &self.s_window)
            .finish_non_exhaustive()
    }
}

impl CountingFamily {
    /// Family supplied from outside (e.g. a non-additive bath model).
    ///
    /// `energy_scale` is the largest energy quantum exchanged with the counted
    /// bath; it sets the continuation step of the CGF. `s_window` bounds
    /// `|s|` for CGF evaluation.
    pub fn custom<F>(
        base: RateMatrix,
        d1: DMatrix<f64>,
        d2: DMatrix<f64>,
        evaluator: F,
        energy_scale: f64,
        s_window: f64,
    ) -> Result<Self>
    where
        F: Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
    {
        let n = base.dim();
        if d1.shape() != (n, n) || d2.shape() != (n, n) {
            return Err(Error::Validation(
                "derivative matrices must match the generator dimension".into(),
            ));
        }
        if !(energy_scale > 0.0) || !(s_window > 0.0) {
            return Err(Error::Validation(
                "energy scale and s window must be positive".into(),
            ));
        }
        let at_zero = evaluator(0.0);
        if at_zero.shape() != (n, n) {
            return Err(Error::Validation(
                "evaluator returns a matrix of the wrong dimension".into(),
            ));
        }
        let tol = 1e-12 * base.scale().max(f64::MIN_POSITIVE);
        if (&at_zero - base.as_matrix()).amax() > tol {
            return Err(Error::Validation(
                "evaluator(0) does not reproduce the base generator".into(),
            ));
        }
        Ok(CountingFamily {
            base,
            counted_bath: None,
            evaluator: Arc::new(evaluator),
            terms: None,
            d1,
            d2,
            energy_scale,
            s_window,
        })
    }

    pub fn base(&self) -> &RateMatrix {
        &self.base
    }

    pub fn counted_bath(&self) -> Option<usize> {
        self.counted_bath
    }

    /// `L(s)`.
    pub fn eval(&self, s: f64) -> DMatrix<f64> {
        (self.evaluator)(s)
    }

    /// `L(s)` in double-double precision, row-major. Families built from a
    /// model assemble every entry from the individual rates so that column
    /// sums at `s = 0` vanish exactly; custom families widen `eval(s)`.
    pub fn eval_dd(&self, s: f64) -> Vec<TwoFloat> {
        let n = self.dim();
        let Some(terms) = &self.terms else {
            let m = self.eval(s);
            let mut out = vec![TwoFloat::from(0.0); n * n];
            for r in 0..n {
                for c in 0..n {
                    out[r * n + c] = TwoFloat::from(m[(r, c)]);
                }
            }
            return out;
        };
        let mut out = vec![TwoFloat::from(0.0); n * n];
        for t in terms.iter() {
            out[t.from * n + t.from] -= t.rate;
            let off = match t.de {
                None => TwoFloat::from(t.rate),
                Some(de) => {
                    let x = TwoFloat::new_mul(s, de);
                    t.rate * x.exp_m1() + t.rate
                }
            };
            out[t.to * n + t.from] += off;
        }
        out
    }

    /// `dL/ds` at `s = 0`.
    pub fn d1(&self) -> &DMatrix<f64> {
        &self.d1
    }

    /// `d^2 L/ds^2` at `s = 0`.
    pub fn d2(&self) -> &DMatrix<f64> {
        &self.d2
    }

    pub fn energy_scale(&self) -> f64 {
        self.energy_scale
    }

    pub fn s_window(&self) -> f64 {
        self.s_window
    }

    pub fn with_s_window(mut self, s_window: f64) -> Self {
        self.s_window = s_window;
        self
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }
}

/// Counting-field family for energy exchanged with `counted_bath`.
pub fn build_counting_family(model: &QarModel, counted_bath: usize) -> Result<CountingFamily> {
    if counted_bath >= model.baths().len() {
        return Err(Error::Validation(format!(
            "counted bath index {counted_bath} out of range for {} baths",
            model.baths().len()
        )));
    }
    let n = model.n_levels();
    let energies = model.system().energies().to_vec();
    let jumps = model.jumps();
    let base = RateMatrix(assemble(n, jumps.iter()));

    let mut d1 = DMatrix::zeros(n, n);
    let mut d2 = DMatrix::zeros(n, n);
    // (to, from, rate, energy gained by the system)
    let mut counted: Vec<(usize, usize, f64, f64)> = Vec::new();
    for j in jumps.iter().filter(|j| j.bath == counted_bath) {
        let de = energies[j.to] - energies[j.from];
        d1[(j.to, j.from)] += de * j.rate;
        d2[(j.to, j.from)] += de * de * j.rate;
        counted.push((j.to, j.from, j.rate, de));
    }

    let terms: Arc<[Term]> = jumps
        .iter()
        .map(|j| Term {
            to: j.to,
            from: j.from,
            rate: j.rate,
            de: (j.bath == counted_bath).then(|| energies[j.to] - energies[j.from]),
        })
        .collect();

    let mut fixed = DMatrix::zeros(n, n);
    for j in jumps.iter() {
        fixed[(j.from, j.from)] -= j.rate;
        if j.bath != counted_bath {
            fixed[(j.to, j.from)] += j.rate;
        }
    }
    let evaluator = move |s: f64| {
        let mut m = fixed.clone();
        for &(to, from, rate, de) in &counted {
            m[(to, from)] += rate * (s * de).exp();
        }
        m
    };

    let max_beta = model
        .baths()
        .iter()
        .map(|b| b.beta)
        .fold(0.0f64, f64::max);
    Ok(CountingFamily {
        base,
        counted_bath: Some(counted_bath),
        evaluator: Arc::new(evaluator),
        terms: Some(terms),
        d1,
        d2,
        energy_scale: model.system().spread(),
        s_window: 4.0 * max_beta,
    })
}
