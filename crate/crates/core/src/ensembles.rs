//! Random-matrix ensembles: Haar unitaries (CUE), the Jacobi ensemble, and
//! channel vectors drawn uniformly from a complex sphere of fixed capacity.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::linalg::{hermitian_eigenvalues, CMatrix};
use crate::rng::{complex_gaussian, RngSeed};
use crate::special::ln_gamma;

/// Unitary tolerance checked by [`UnitaryMatrix::new`].
pub const UNITARY_TOLERANCE: f64 = 1e-10;

/// Square complex matrix with `UᴴU = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix(CMatrix);

impl UnitaryMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Shape(format!("unitary matrix must be square, got {:?}", m.shape())));
        }
        let dev = unitarity_defect(&m);
        if dev > UNITARY_TOLERANCE {
            return Err(domain(format!("matrix is not unitary (max |UᴴU − I| = {dev:e})")));
        }
        Ok(Self(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }
}

/// `max |UᴴU − I|` entrywise.
pub fn unitarity_defect(m: &CMatrix) -> f64 {
    let g = m.adjoint() * m;
    let n = g.nrows();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((g[(i, j)] - Complex64::new(target, 0.0)).norm());
        }
    }
    dev
}

/// Haar-distributed `n × n` unitary from the given generator.
///
/// QR of a complex Ginibre matrix, with each column of `Q` rotated by the
/// phase of the matching diagonal entry of `R` so that the factorisation is
/// the unique one with a positive diagonal.
pub fn cue_from_rng<R: Rng + ?Sized>(n: usize, rng: &mut R) -> UnitaryMatrix {
    assert!(n >= 1, "CUE dimension must be positive");
    let g = CMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let norm = d.norm();
        let phase = if norm > 0.0 { d / norm } else { Complex64::new(1.0, 0.0) };
        q.column_mut(j).iter_mut().for_each(|z| *z *= phase);
    }
    UnitaryMatrix(q)
}

pub fn sample_cue(n: usize, seed: RngSeed) -> UnitaryMatrix {
    cue_from_rng(n, &mut seed.rng())
}

/// Density of `|U_ij|²` for an `m × m` CUE matrix: `(m−1)(1−μ)^{m−2}` on [0, 1].
pub fn entry_sq_magnitude_pdf(mu: f64, m: usize) -> Result<f64> {
    if m < 2 {
        return Err(domain(format!("entry law needs dimension m >= 2, got {m}")));
    }
    if !(0.0..=1.0).contains(&mu) {
        return Ok(0.0);
    }
    Ok((m as f64 - 1.0) * (1.0 - mu).powi(m as i32 - 2))
}

/// Jacobi ensemble `J(m1, m2, n)` with `m1, m2 ≥ n ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JacobiSpec {
    m1: usize,
    m2: usize,
    n: usize,
}

impl JacobiSpec {
    pub fn new(m1: usize, m2: usize, n: usize) -> Result<Self> {
        if n == 0 || m1 < n || m2 < n {
            return Err(domain(format!("J({m1},{m2},{n}) needs m1, m2 >= n >= 1")));
        }
        Ok(Self { m1, m2, n })
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn m2(&self) -> usize {
        self.m2
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Exponent on `λ` in the density.
    pub fn a_exponent(&self) -> i32 {
        (self.m1 - self.n) as i32
    }

    /// Exponent on `1 − λ` in the density.
    pub fn b_exponent(&self) -> i32 {
        (self.m2 - self.n) as i32
    }
}

/// `ln κ(m1, m2, n)`, the Selberg constant.
pub fn ln_selberg_kappa(spec: JacobiSpec) -> f64 {
    let (m1, m2, n) = (spec.m1 as f64, spec.m2 as f64, spec.n as f64);
    (1..=spec.n)
        .map(|j| {
            let j = j as f64;
            ln_gamma(m1 - n + j) + ln_gamma(m2 - n + j) + ln_gamma(1.0 + j) - ln_gamma(2.0) - ln_gamma(m1 + m2 - n + j)
        })
        .sum()
}

/// `κ(m1, m2, n) = Π_j Γ(m1−n+j) Γ(m2−n+j) Γ(1+j) / (Γ(2) Γ(m1+m2−n+j))`.
///
/// This is the integral of the unnormalised density over the unordered
/// cube `[0, 1]ⁿ`.
pub fn selberg_kappa(spec: JacobiSpec) -> Result<f64> {
    let v = ln_selberg_kappa(spec).exp();
    if !v.is_finite() || v <= 0.0 {
        return Err(Error::NonFinite(format!("Selberg constant for {spec:?} underflows or overflows")));
    }
    Ok(v)
}

fn ln_factorial(n: usize) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// Log of the joint density of the ordered eigenvalues `λ₁ ≤ … ≤ λₙ`.
///
/// The ordered simplex carries `n!` copies of the unordered density, so the
/// normaliser is `n! / κ`.
pub fn jacobi_logpdf(lambda: &[f64], spec: JacobiSpec) -> Result<f64> {
    if lambda.len() != spec.n {
        return Err(domain(format!("expected {} eigenvalues, got {}", spec.n, lambda.len())));
    }
    if lambda.iter().any(|l| !(0.0..=1.0).contains(l)) {
        return Err(domain("eigenvalues must lie in [0, 1]"));
    }
    if lambda.windows(2).any(|w| w[0] > w[1]) {
        return Err(domain("eigenvalues must be in ascending order"));
    }
    Ok(ordered_log_density_unchecked(lambda, spec))
}

pub(crate) fn ordered_log_density_unchecked(lambda: &[f64], spec: JacobiSpec) -> f64 {
    let (a, b) = (spec.a_exponent(), spec.b_exponent());
    let mut v = ln_factorial(spec.n) - ln_selberg_kappa(spec);
    for (i, &l) in lambda.iter().enumerate() {
        if a != 0 {
            v += a as f64 * l.ln();
        }
        if b != 0 {
            v += b as f64 * (1.0 - l).ln();
        }
        for &m in &lambda[i + 1..] {
            v += 2.0 * (m - l).abs().ln();
        }
    }
    v
}

/// Eigenvalues of `A (A + B)⁻¹` for independent complex Wisharts
/// `A = G₁ᴴG₁` (`G₁` is `m1 × n`) and `B = G₂ᴴG₂` (`G₂` is `m2 × n`).
pub fn jacobi_from_rng<R: Rng + ?Sized>(spec: JacobiSpec, rng: &mut R) -> Vec<f64> {
    let n = spec.n;
    let g1 = CMatrix::from_fn(spec.m1, n, |_, _| complex_gaussian(rng));
    let g2 = CMatrix::from_fn(spec.m2, n, |_, _| complex_gaussian(rng));
    let a = g1.adjoint() * &g1;
    let b = g2.adjoint() * &g2;
    // With A + B = L Lᴴ, the eigenvalues of A(A+B)⁻¹ are those of the
    // Hermitian L⁻¹ A L⁻ᴴ.
    let chol = (&a + &b).cholesky().expect("sum of Wisharts with m >= n is positive definite");
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .expect("Cholesky factor is invertible");
    let m = &linv * a * linv.adjoint();
    let m = (&m + m.adjoint()).scale(0.5);
    hermitian_eigenvalues(&m).into_iter().map(|v| v.clamp(0.0, 1.0)).collect()
}

pub fn sample_jacobi(spec: JacobiSpec, seed: RngSeed) -> Vec<f64> {
    jacobi_from_rng(spec, &mut seed.rng())
}

/// Law of the squared singular values of a `T × k` block of a `2T × 2T`
/// Haar unitary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubmatrixLaw {
    /// `k ≤ T`: the `k` values follow `J(T, T, k)`.
    Direct(JacobiSpec),
    /// `T < k < 2T`: the `2T − k` non-trivial values follow `J(T, T, 2T − k)`
    /// after the reflection `λ ↦ 1 − λ` (the remaining `k − T` are 1).
    Complementary(JacobiSpec),
    /// `k = 2T`: every squared singular value of the full-width block is 1.
    Degenerate,
}

impl SubmatrixLaw {
    pub fn spec(&self) -> Option<JacobiSpec> {
        match self {
            SubmatrixLaw::Direct(s) | SubmatrixLaw::Complementary(s) => Some(*s),
            SubmatrixLaw::Degenerate => None,
        }
    }
}

pub fn submatrix_singular_spec(total_dim: usize, rows: usize, k: usize) -> Result<SubmatrixLaw> {
    if rows == 0 || total_dim != 2 * rows {
        return Err(domain(format!("expected a T×k block of a 2T×2T matrix, got total {total_dim}, rows {rows}")));
    }
    let t = rows;
    match k {
        0 => Err(domain("column count k must be at least 1")),
        k if k <= t => Ok(SubmatrixLaw::Direct(JacobiSpec::new(t, t, k)?)),
        k if k < 2 * t => Ok(SubmatrixLaw::Complementary(JacobiSpec::new(t, t, 2 * t - k)?)),
        k if k == 2 * t => Ok(SubmatrixLaw::Degenerate),
        k => Err(domain(format!("column count {k} exceeds 2T = {}", 2 * t))),
    }
}

/// Complex `n_t`-vector uniform on the sphere `Σ|h_i|² = 2^c − 1`.
pub fn sphere_from_rng<R: Rng + ?Sized>(n_t: usize, c: f64, rng: &mut R) -> Vec<Complex64> {
    assert!(n_t >= 1, "need at least one user");
    let g = DVector::from_fn(n_t, |_, _| complex_gaussian(rng));
    let norm = g.norm();
    let radius = (c.exp2() - 1.0).sqrt();
    g.iter().map(|z| z * (radius / norm)).collect()
}

pub fn sample_sphere_given_c(n_t: usize, c: f64, seed: RngSeed) -> Result<Vec<Complex64>> {
    if !(c >= 0.0) {
        return Err(domain(format!("sum capacity must be non-negative, got {c}")));
    }
    if n_t == 0 {
        return Err(domain("need at least one user"));
    }
    Ok(sphere_from_rng(n_t, c, &mut seed.rng()))
}
