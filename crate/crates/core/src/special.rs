//! Special functions and quadrature rules.

use crate::error::{domain, Result};

pub use statrs::function::gamma::ln_gamma;

const CF_MAX_ITER: usize = 500;
const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;

/// `ln B(a, b) = ln Γ(a) + ln Γ(b) − ln Γ(a + b)`.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0) || !(b > 0.0) {
        return Err(domain(format!("incomplete beta needs a, b > 0 (got a={a}, b={b})")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(domain(format!("incomplete beta argument {x} outside [0, 1]")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    if a == 1.0 && b == 1.0 {
        return Ok(x);
    }
    if b == 1.0 {
        return Ok(x.powf(a));
    }
    if a == 1.0 {
        return Ok(-(b * (-x).ln_1p()).exp_m1());
    }
    let v = if x > (a + 1.0) / (a + b + 2.0) {
        1.0 - beta_cf_scaled(b, a, 1.0 - x)
    } else {
        beta_cf_scaled(a, b, x)
    };
    Ok(v.clamp(0.0, 1.0))
}

/// Incomplete beta `B(x; a, b) = ∫₀ˣ u^{a−1}(1−u)^{b−1} du` (not regularized).
pub fn incomplete_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    Ok(regularized_incomplete_beta(x, a, b)? * ln_beta(a, b).exp())
}

/// `x^a (1−x)^b / (a B(a,b))` times the continued fraction, modified Lentz.
fn beta_cf_scaled(a: f64, b: f64, x: f64) -> f64 {
    let ln_front = a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b) - a.ln();
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    ln_front.exp() * h
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `(node, weight)` pairs mapped onto `[lo, hi]`.
    pub fn on(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, mut f: F) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        self.on(lo, hi).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let pn = if n == 0 { 1.0 } else { p1 };
    let pm1 = if n == 0 { 0.0 } else { p0 };
    let d = n as f64 * (x * pn - pm1) / (x * x - 1.0);
    (pn, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_case_is_identity() {
        for x in [0.0, 0.1, 0.5, 0.93, 1.0] {
            assert!((incomplete_beta(x, 1.0, 1.0).unwrap() - x).abs() < 1e-14);
        }
    }

    #[test]
    fn beta_two_two_polynomial() {
        // u²/2 − u³/3 at u = 1/2
        assert!((incomplete_beta(0.5, 2.0, 2.0).unwrap() - 1.0 / 12.0).abs() < 1e-14);
        assert!((incomplete_beta(1.0, 2.0, 2.0).unwrap() - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn complete_integral_matches_gamma_ratio() {
        for (a, b) in [(0.5, 0.5), (2.0, 3.0), (1.0, 7.0), (3.5, 1.25), (10.0, 4.0)] {
            let oracle = (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp();
            let v = incomplete_beta(1.0, a, b).unwrap();
            assert!((v - oracle).abs() <= 1e-10 * oracle, "a={a} b={b}");
        }
    }

    #[test]
    fn matches_quadrature_oracle() {
        // Polynomial integrands: Gauss–Legendre with 16 nodes is exact.
        let gl = GaussLegendre::new(16);
        for (x, a, b) in [(0.3, 2.0, 3.0), (0.8, 3.0, 1.0), (0.45, 1.0, 3.0), (0.99, 4.0, 2.0)] {
            let q = gl.integrate(0.0, x, |u: f64| u.powf(a - 1.0) * (1.0 - u).powf(b - 1.0));
            assert!((incomplete_beta(x, a, b).unwrap() - q).abs() < 1e-13);
        }
    }

    #[test]
    fn monotone_in_x() {
        let mut prev = 0.0;
        for i in 0..=100 {
            let v = regularized_incomplete_beta(i as f64 / 100.0, 2.5, 0.7).unwrap();
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(incomplete_beta(0.5, 0.0, 1.0).is_err());
        assert!(incomplete_beta(0.5, 1.0, -2.0).is_err());
        assert!(incomplete_beta(1.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let gl = GaussLegendre::new(128);
        let w: f64 = gl.on(-1.0, 1.0).map(|(_, w)| w).sum();
        assert!((w - 2.0).abs() < 1e-13);
        let v = gl.integrate(0.0, 1.0, |x| 6.0 * x * (1.0 - x));
        assert!((v - 1.0).abs() < 1e-13);
        let gl5 = GaussLegendre::new(5);
        // exact up to degree 9
        let v = gl5.integrate(-1.0, 2.0, |x| x.powi(9));
        assert!((v - (1024.0 - 1.0) / 10.0).abs() < 1e-10);
    }
}
