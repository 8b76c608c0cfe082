//! Faddeev-LeVerrier recursion: characteristic polynomial and adjugate in one
//! pass, plus its forward-mode derivative along a matrix direction.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

/// Coefficients of `det(lambda I - M) = lambda^N + a_1 lambda^{N-1} + ... + a_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharPoly {
    /// `a_1, ..., a_N`.
    pub coeffs: Vec<f64>,
}

impl CharPoly {
    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    /// `a_j`, with `a_0 = 1`.
    pub fn a(&self, j: usize) -> f64 {
        if j == 0 {
            1.0
        } else {
            self.coeffs[j - 1]
        }
    }

    /// `det(M) = (-1)^N a_N`.
    pub fn det(&self) -> f64 {
        sign(self.degree()) * self.a(self.degree())
    }

    /// Monic coefficients in descending powers, `[1, a_1, ..., a_N]`.
    pub fn monic(&self) -> Vec<f64> {
        std::iter::once(1.0).chain(self.coeffs.iter().copied()).collect()
    }

    /// `p(lambda)` by Horner's rule.
    pub fn eval(&self, lambda: f64) -> f64 {
        self.coeffs.iter().fold(1.0, |acc, &c| acc * lambda + c)
    }
}

/// `(-1)^k`.
pub(crate) fn sign(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Output of one Faddeev-LeVerrier pass.
#[derive(Debug, Clone)]
pub struct Recursion {
    pub charpoly: CharPoly,
    /// `B_{N-1} = M^{N-1} + a_1 M^{N-2} + ... + a_{N-1} I`.
    pub penultimate: DMatrix<f64>,
}

impl Recursion {
    /// `adj(M) = (-1)^{N-1} B_{N-1}`.
    pub fn adjugate(&self) -> DMatrix<f64> {
        &self.penultimate * sign(self.charpoly.degree() - 1)
    }
}

/// Recursion together with derivatives along a direction `dM`.
#[derive(Debug, Clone)]
pub struct RecursionDerivative {
    pub recursion: Recursion,
    /// `d a_1, ..., d a_N`.
    pub dcoeffs: Vec<f64>,
    /// `d B_{N-1}`.
    pub dpenultimate: DMatrix<f64>,
}

impl RecursionDerivative {
    pub fn dadjugate(&self) -> DMatrix<f64> {
        &self.dpenultimate * sign(self.recursion.charpoly.degree() - 1)
    }
}

/// Row-major square matrix in double-double precision.
struct DdMat {
    n: usize,
    v: Vec<TwoFloat>,
}

impl DdMat {
    fn from_f64(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut v = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                v.push(TwoFloat::from(m[(r, c)]));
            }
        }
        DdMat { n, v }
    }

    fn zeros(n: usize) -> Self {
        DdMat {
            n,
            v: vec![TwoFloat::from(0.0); n * n],
        }
    }

    fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.v[i * n + i] = TwoFloat::from(1.0);
        }
        m
    }

    /// `self * b` (+ `add` when given).
    fn mul_add(&self, b: &DdMat, add: Option<(&DdMat, &DdMat)>) -> DdMat {
        let n = self.n;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for c in 0..n {
                let mut acc = TwoFloat::from(0.0);
                for t in 0..n {
                    acc += self.v[r * n + t] * b.v[t * n + c];
                }
                if let Some((x, y)) = add {
                    for t in 0..n {
                        acc += x.v[r * n + t] * y.v[t * n + c];
                    }
                }
                out.v[r * n + c] = acc;
            }
        }
        out
    }

    fn trace(&self) -> TwoFloat {
        (0..self.n).fold(TwoFloat::from(0.0), |acc, i| acc + self.v[i * self.n + i])
    }

    fn add_diag(&mut self, a: TwoFloat) {
        for i in 0..self.n {
            self.v[i * self.n + i] += a;
        }
    }

    fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_row_iterator(self.n, self.n, self.v.iter().map(|x| f64::from(*x)))
    }
}

/// The recursion and, when `dm` is given, its forward-mode derivative. Runs in
/// double-double so that the cancellations inside `B_{N-1}` (whose rows sum
/// to zero for a rate matrix) do not eat the low-order coefficients.
/// `(d a_1..d a_N, d B_{N-1})`.
type Tangent = (Vec<f64>, DMatrix<f64>);

fn recursion_dd(m: &DMatrix<f64>, dm: Option<&DMatrix<f64>>) -> (Recursion, Option<Tangent>) {
    assert!(m.is_square(), "characteristic polynomial needs a square matrix");
    let n = m.nrows();
    let md = DdMat::from_f64(m);
    let dmd = dm.map(|d| {
        assert_eq!(d.shape(), m.shape());
        DdMat::from_f64(d)
    });
    let mut b = DdMat::identity(n);
    let mut db = DdMat::zeros(n);
    let mut coeffs = Vec::with_capacity(n);
    let mut dcoeffs = Vec::with_capacity(n);
    for k in 1..=n {
        let a_mat = md.mul_add(&b, None);
        let ak = -a_mat.trace() / k as f64;
        coeffs.push(f64::from(ak));
        let step = dmd.as_ref().map(|d| {
            let da_mat = d.mul_add(&b, Some((&md, &db)));
            let dak = -da_mat.trace() / k as f64;
            (da_mat, dak)
        });
        if let Some((_, dak)) = &step {
            dcoeffs.push(f64::from(*dak));
        }
        if k == n {
            break;
        }
        b = a_mat;
        b.add_diag(ak);
        if let Some((mut da_mat, dak)) = step {
            da_mat.add_diag(dak);
            db = da_mat;
        }
    }
    let rec = Recursion {
        charpoly: CharPoly { coeffs },
        penultimate: b.to_f64(),
    };
    let der = dmd.map(|_| (dcoeffs, db.to_f64()));
    (rec, der)
}

/// Runs the recursion `B_0 = I`, `A_k = M B_{k-1}`, `a_k = -tr(A_k)/k`,
/// `B_k = A_k + a_k I`.
pub fn faddeev_leverrier(m: &DMatrix<f64>) -> Recursion {
    recursion_dd(m, None).0
}

/// Forward-mode differentiation of [`faddeev_leverrier`] along `dm`.
pub fn faddeev_leverrier_derivative(m: &DMatrix<f64>, dm: &DMatrix<f64>) -> RecursionDerivative {
    let (recursion, der) = recursion_dd(m, Some(dm));
    let (dcoeffs, dpenultimate) = der.expect("direction supplied");
    RecursionDerivative {
        recursion,
        dcoeffs,
        dpenultimate,
    }
}

/// Characteristic polynomial of `m`.
pub fn charpoly(m: &DMatrix<f64>) -> CharPoly {
    faddeev_leverrier(m).charpoly
}

/// Adjugate (transpose of the cofactor matrix); defined for singular `m`.
pub fn adjugate(m: &DMatrix<f64>) -> DMatrix<f64> {
    faddeev_leverrier(m).adjugate()
}
