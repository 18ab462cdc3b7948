//! Small dense linear algebra.
//!
//! Every matrix in this crate is at most 16×16, so everything is dense and
//! heap-allocated through `nalgebra`. Complex channels are carried as
//! [`CMatrix`]; integer forcing works over the reals on [`RMatrix`].
//!
//! Complex-to-real embedding follows `[[Re H, -Im H], [Im H, Re H]]`, which
//! corresponds to stacking a complex vector as `[Re v; Im v]`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, shape, Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;

/// Pivots at or below this value are treated as loss of definiteness.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

const SYMMETRY_TOLERANCE: f64 = 1e-10;

fn max_abs(m: &RMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Lower-triangular `L` with `m = L Lᵀ`.
pub fn cholesky_lower(m: &RMatrix) -> Result<RMatrix> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(shape(format!("cholesky needs a square matrix, got {}x{}", n, m.ncols())));
    }
    let scale = max_abs(m).max(1.0);
    let mut asym = 0.0_f64;
    for i in 0..n {
        for j in 0..i {
            asym = asym.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if asym > SYMMETRY_TOLERANCE * scale {
        return Err(Error::NotSymmetric(asym));
    }

    let mut l = RMatrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = m[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if !(pivot > PIVOT_TOLERANCE) {
            return Err(Error::NotPositiveDefinite { index: j, pivot });
        }
        let d = pivot.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Inverse of a symmetric positive-definite matrix via its Cholesky factor.
pub fn spd_inverse(m: &RMatrix) -> Result<RMatrix> {
    let l = cholesky_lower(m)?;
    let n = l.nrows();
    // Invert L by forward substitution, then m⁻¹ = L⁻ᵀ L⁻¹.
    let mut linv = RMatrix::zeros(n, n);
    for c in 0..n {
        linv[(c, c)] = 1.0 / l[(c, c)];
        for i in (c + 1)..n {
            let mut s = 0.0;
            for k in c..i {
                s -= l[(i, k)] * linv[(k, c)];
            }
            linv[(i, c)] = s / l[(i, i)];
        }
    }
    let mut inv = linv.transpose() * &linv;
    // Restore exact symmetry lost to rounding.
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (inv[(i, j)] + inv[(j, i)]);
            inv[(i, j)] = v;
            inv[(j, i)] = v;
        }
    }
    Ok(inv)
}

pub fn complex_to_real(h: &CMatrix) -> RMatrix {
    let (r, c) = h.shape();
    let mut out = RMatrix::zeros(2 * r, 2 * c);
    for i in 0..r {
        for j in 0..c {
            let z = h[(i, j)];
            out[(i, j)] = z.re;
            out[(i, c + j)] = -z.im;
            out[(r + i, j)] = z.im;
            out[(r + i, c + j)] = z.re;
        }
    }
    out
}

/// `[Re v; Im v]`.
pub fn complex_vec_to_real(v: &[Complex64]) -> Vec<f64> {
    v.iter().map(|z| z.re).chain(v.iter().map(|z| z.im)).collect()
}

/// `I_t ⊗ h`: block diagonal with `t` copies of `h`.
pub fn time_extend(h: &CMatrix, t: usize) -> Result<CMatrix> {
    if t == 0 {
        return Err(domain("time extension must be at least 1"));
    }
    let (r, c) = h.shape();
    let mut out = CMatrix::zeros(r * t, c * t);
    for b in 0..t {
        out.view_mut((b * r, b * c), (r, c)).copy_from(h);
    }
    Ok(out)
}

/// `log2 det(m)` for a Hermitian positive-definite complex matrix.
pub fn log2_det_hpd(m: &CMatrix) -> Result<f64> {
    let n = m.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let chol = m
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { index: 0, pivot: f64::NAN })?;
    let l = chol.l_dirty();
    Ok((0..n).map(|i| l[(i, i)].re.log2()).sum::<f64>() * 2.0)
}

/// `log2 det(I + Hᴴ H)` in bits per complex channel use.
///
/// Uses whichever of `HᴴH` and `HHᴴ` is smaller; both give the same value.
pub fn wi_capacity(h: &CMatrix) -> f64 {
    let (r, c) = h.shape();
    if r == 0 || c == 0 {
        return 0.0;
    }
    let gram = if c <= r { h.adjoint() * h } else { h * h.adjoint() };
    let n = gram.nrows();
    let m = CMatrix::identity(n, n) + gram;
    // I + HᴴH is always positive definite.
    log2_det_hpd(&m).expect("I + HᴴH is positive definite")
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    vals
}

/// Singular values of a complex matrix in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let gram = if m.ncols() <= m.nrows() { m.adjoint() * m } else { m * m.adjoint() };
    let mut s: Vec<f64> = hermitian_eigenvalues(&gram).into_iter().map(|v| v.max(0.0).sqrt()).collect();
    s.reverse();
    s
}

/// Channel parameterised by its per-mode SNRs, `d_ii = 1 + ρ_i`.
///
/// Modes are kept in descending order, so for two transmit antennas
/// `rho()[0] = ρ₁ ≥ ρ₂ = rho()[1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompoundChannel {
    n_t: usize,
    capacity_bits: f64,
    rho: Vec<f64>,
}

impl CompoundChannel {
    /// Largest admissible value of the weak-mode SNR for an `n_t`-mode
    /// channel of capacity `c` with one strong mode.
    pub fn rho_weak_max(n_t: usize, c: f64) -> f64 {
        (c / n_t as f64).exp2() - 1.0
    }

    /// Two transmit antennas with `log(1+ρ₁) + log(1+ρ₂) = C`.
    pub fn two_mode(c: f64, rho2: f64) -> Result<Self> {
        Self::one_strong_mode(2, c, rho2)
    }

    /// One strong mode and `n_t - 1` modes at `rho_weak`; the strong mode is
    /// whatever makes the capacity exactly `c`.
    pub fn one_strong_mode(n_t: usize, c: f64, rho_weak: f64) -> Result<Self> {
        if n_t == 0 {
            return Err(domain("need at least one transmit antenna"));
        }
        if !(c >= 0.0) || !c.is_finite() {
            return Err(domain(format!("capacity must be finite and non-negative, got {c}")));
        }
        if n_t == 1 {
            return Ok(Self { n_t, capacity_bits: c, rho: vec![c.exp2() - 1.0] });
        }
        let max = Self::rho_weak_max(n_t, c);
        let tol = 1e-12 * max.max(1.0);
        if !(rho_weak >= 0.0 && rho_weak <= max + tol) {
            return Err(domain(format!("weak-mode SNR {rho_weak} outside [0, {max}]")));
        }
        let rho_weak = rho_weak.min(max);
        let strong = c.exp2() / (1.0 + rho_weak).powi(n_t as i32 - 1) - 1.0;
        let mut rho = vec![strong.max(rho_weak)];
        rho.extend(std::iter::repeat_n(rho_weak, n_t - 1));
        Ok(Self { n_t, capacity_bits: c, rho })
    }

    /// Arbitrary non-negative mode SNRs; the capacity follows from them.
    pub fn from_modes(mut rho: Vec<f64>) -> Result<Self> {
        if rho.is_empty() || rho.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return Err(domain("mode SNRs must be finite and non-negative"));
        }
        rho.sort_by(|a, b| b.total_cmp(a));
        let capacity_bits = rho.iter().map(|r| r.ln_1p()).sum::<f64>() / std::f64::consts::LN_2;
        Ok(Self { n_t: rho.len(), capacity_bits, rho })
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn capacity_bits(&self) -> f64 {
        self.capacity_bits
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// `n_r × n_t` matrix with `√ρ_i` on the diagonal. Requires `n_r ≥ n_t`.
    pub fn diag_matrix(&self, n_r: usize) -> Result<CMatrix> {
        if n_r < self.n_t {
            return Err(shape(format!("n_r = {n_r} is smaller than n_t = {}", self.n_t)));
        }
        let mut h = CMatrix::zeros(n_r, self.n_t);
        for (i, r) in self.rho.iter().enumerate() {
            h[(i, i)] = Complex64::new(r.sqrt(), 0.0);
        }
        Ok(h)
    }
}
