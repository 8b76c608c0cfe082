//! Real-root isolation for monic polynomials.
//!
//! Critical points (roots of the derivative) split the real line into
//! intervals on which the polynomial is monotone; each sign change is then
//! bracketed and refined by safeguarded Newton. A root that only touches zero
//! at a critical point is reported twice.

/// Evaluates `p` and `p'` for descending coefficients `c[0] x^n + ... + c[n]`.
pub fn horner(c: &[f64], x: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    for &ck in c {
        dp = dp * x + p;
        p = p * x + ck;
    }
    (p, dp)
}

fn derivative(c: &[f64]) -> Vec<f64> {
    let n = c.len() - 1;
    c[..n]
        .iter()
        .enumerate()
        .map(|(k, &ck)| ck * (n - k) as f64)
        .collect()
}

/// Sum of absolute term magnitudes at `x`, the scale of roundoff in `p(x)`.
fn magnitude(c: &[f64], x: f64) -> f64 {
    c.iter().fold(0.0, |acc, &ck| acc * x.abs() + ck.abs())
}

fn refine(c: &[f64], mut lo: f64, mut hi: f64) -> f64 {
    let (plo, _) = horner(c, lo);
    let increasing = plo < 0.0;
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (p, dp) = horner(c, x);
        if p == 0.0 {
            return x;
        }
        if (p < 0.0) == increasing {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - p / dp;
        x = if dp != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
    }
    x
}

/// Real roots (with multiplicity, ascending) of a polynomial with
/// descending coefficients. Fewer than `degree` roots means some are complex.
pub fn real_roots(c: &[f64]) -> Vec<f64> {
    assert!(!c.is_empty() && c[0] != 0.0, "leading coefficient must be nonzero");
    let lead = c[0];
    let c: Vec<f64> = c.iter().map(|v| v / lead).collect();
    let n = c.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![-c[1]];
    }
    let bound = 1.0 + c[1..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let crit = real_roots(&derivative(&c));

    let touches: Vec<bool> = crit
        .iter()
        .map(|&x| horner(&c, x).0.abs() <= 64.0 * f64::EPSILON * magnitude(&c, x))
        .collect();

    let mut points = Vec::with_capacity(crit.len() + 2);
    points.push((-bound, false));
    points.extend(crit.iter().copied().zip(touches.iter().copied()));
    points.push((bound, false));

    let mut roots = Vec::with_capacity(n);
    for w in points.windows(2) {
        let ((x0, t0), (x1, t1)) = (w[0], w[1]);
        if t0 || t1 || x1 <= x0 {
            continue;
        }
        let (p0, _) = horner(&c, x0);
        let (p1, _) = horner(&c, x1);
        if p0 == 0.0 {
            roots.push(x0);
        } else if p0 * p1 < 0.0 {
            roots.push(refine(&c, x0, x1));
        }
    }
    for (&x, &t) in crit.iter().zip(&touches) {
        if t {
            roots.push(x);
            roots.push(x);
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.truncate(n);
    roots
}
