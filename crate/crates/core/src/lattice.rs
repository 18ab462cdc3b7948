//! Integer matrices, LLL reduction under a quadratic form, and short-vector
//! enumeration.

use serde::{Deserialize, Serialize};

use crate::error::{domain, shape, Error, Result};
use crate::linalg::{cholesky_lower, RMatrix};

/// Square full-rank integer matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntegerMatrix {
    dim: usize,
    entries: Vec<i64>,
}

impl IntegerMatrix {
    pub fn from_rows(rows: Vec<Vec<i64>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(shape("integer matrix must be square and non-empty"));
        }
        let m = Self { dim, entries: rows.into_iter().flatten().collect() };
        if m.det() == 0 {
            return Err(domain("integer matrix is singular"));
        }
        Ok(m)
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1;
        }
        Self { dim, entries }
    }

    pub(crate) fn from_rows_unchecked(rows: &[Vec<i64>]) -> Self {
        Self { dim: rows.len(), entries: rows.iter().flatten().copied().collect() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.entries[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[i64]> {
        self.entries.chunks(self.dim)
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.dim + j]
    }

    /// Exact determinant (fraction-free Bareiss elimination in `i128`).
    pub fn det(&self) -> i128 {
        exact_det(&self.rows().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    pub fn to_real(&self) -> RMatrix {
        RMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j) as f64)
    }

    /// Rows reordered so that row `m` of the result is row `order[m]` of `self`.
    pub fn permute_rows(&self, order: &[usize]) -> Self {
        assert_eq!(order.len(), self.dim, "permutation length");
        let rows: Vec<Vec<i64>> = order.iter().map(|&i| self.row(i).to_vec()).collect();
        Self::from_rows_unchecked(&rows)
    }

    /// Product `self · other`.
    pub fn mul(&self, other: &IntegerMatrix) -> Result<IntegerMatrix> {
        if self.dim != other.dim {
            return Err(shape("integer matrix dimensions differ"));
        }
        let n = self.dim;
        let mut entries = vec![0i64; n * n];
        for i in 0..n {
            for j in 0..n {
                entries[i * n + j] = (0..n).map(|k| self.get(i, k) * other.get(k, j)).sum();
            }
        }
        let m = Self { dim: n, entries };
        if m.det() == 0 {
            return Err(domain("product is singular"));
        }
        Ok(m)
    }
}

/// Exact determinant of an integer matrix given by rows (rank test).
pub fn exact_det(rows: &[Vec<i64>]) -> i128 {
    let n = rows.len();
    if n == 0 {
        return 1;
    }
    let mut m: Vec<Vec<i128>> = rows.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k][k] == 0 {
            match (k + 1..n).find(|&i| m[i][k] != 0) {
                Some(i) => {
                    m.swap(i, k);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
        }
        prev = m[k][k];
    }
    sign * m[n - 1][n - 1]
}

/// Rank of a set of integer vectors (exact, fraction-free elimination).
pub fn exact_rank(rows: &[Vec<i64>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let cols = rows[0].len();
    let mut m: Vec<Vec<i128>> = rows.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..m.len()).find(|&i| m[i][c] != 0) else { continue };
        m.swap(rank, p);
        for i in rank + 1..m.len() {
            if m[i][c] != 0 {
                let (a, b) = (m[rank][c], m[i][c]);
                let g = gcd_i128(a, b);
                let (fa, fb) = (a / g, b / g);
                for j in c..cols {
                    m[i][j] = m[i][j] * fa - m[rank][j] * fb;
                }
                let rg = m[i].iter().fold(0, |acc, &x| gcd_i128(acc, x));
                if rg > 1 {
                    m[i].iter_mut().for_each(|x| *x /= rg);
                }
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

fn gcd_i128(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `gcd` of the coordinates; a vector is primitive when this is 1.
pub fn content(a: &[i64]) -> i64 {
    a.iter().fold(0i128, |g, &x| gcd_i128(g, x as i128)) as i64
}

/// Quadratic form `aᵀ K a`.
pub fn quad_form(k: &RMatrix, a: &[i64]) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for i in 0..n {
        if a[i] == 0 {
            continue;
        }
        let mut row = 0.0;
        for j in 0..n {
            row += k[(i, j)] * a[j] as f64;
        }
        s += a[i] as f64 * row;
    }
    s
}

/// `A K Aᵀ`.
pub fn congruence(k: &RMatrix, a: &IntegerMatrix) -> RMatrix {
    let ar = a.to_real();
    &ar * k * ar.transpose()
}

/// Gram–Schmidt coefficients of the rows of `b` (row vectors).
/// Returns `(mu, bstar_sq)`.
fn gram_schmidt(b: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = b.len();
    let mut mu = vec![vec![0.0; n]; n];
    let mut star: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut norms = vec![0.0; n];
    for i in 0..n {
        let mut v = b[i].clone();
        for j in 0..i {
            let m = if norms[j] > 0.0 { dot(&b[i], &star[j]) / norms[j] } else { 0.0 };
            mu[i][j] = m;
            for (vk, sk) in v.iter_mut().zip(&star[j]) {
                *vk -= m * sk;
            }
        }
        norms[i] = dot(&v, &v);
        star.push(v);
    }
    (mu, norms)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// LLL reduction of the lattice with Gram matrix `k`.
///
/// With `k = L Lᵀ` the basis vector for `e_i` is `Lᵀ e_i`, so the squared
/// length of the integer combination `a` is `aᵀ k a`. The returned matrix
/// holds the integer coordinates of the reduced basis as rows.
pub fn lll_reduce(k: &RMatrix, delta: f64, max_iter: usize) -> Result<IntegerMatrix> {
    if !(delta > 0.25 && delta <= 1.0) {
        return Err(domain(format!("LLL parameter must lie in (0.25, 1], got {delta}")));
    }
    let n = k.nrows();
    let l = cholesky_lower(k)?;
    let lt = l.transpose();
    let mut u: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
    let embed = |a: &[i64]| -> Vec<f64> {
        (0..n).map(|r| (0..n).map(|c| lt[(r, c)] * a[c] as f64).sum()).collect()
    };
    let mut b: Vec<Vec<f64>> = u.iter().map(|a| embed(a)).collect();
    let (mut mu, mut bn) = gram_schmidt(&b);
    let mut kk = 1;
    let mut iter = 0;
    while kk < n {
        iter += 1;
        if iter > max_iter {
            return Err(Error::SearchFailure(format!("LLL did not terminate within {max_iter} iterations")));
        }
        for j in (0..kk).rev() {
            let q = mu[kk][j].round();
            if q != 0.0 {
                let qi = q as i64;
                for c in 0..n {
                    u[kk][c] -= qi * u[j][c];
                }
                for l2 in 0..j {
                    mu[kk][l2] -= q * mu[j][l2];
                }
                mu[kk][j] -= q;
            }
        }
        b[kk] = embed(&u[kk]);
        if bn[kk] >= (delta - mu[kk][kk - 1] * mu[kk][kk - 1]) * bn[kk - 1] {
            kk += 1;
        } else {
            u.swap(kk, kk - 1);
            b.swap(kk, kk - 1);
            (mu, bn) = gram_schmidt(&b);
            kk = (kk - 1).max(1);
        }
    }
    let m = IntegerMatrix::from_rows_unchecked(&u);
    if m.det() == 0 {
        return Err(Error::SearchFailure("LLL produced a singular basis".into()));
    }
    Ok(m)
}

/// All nonzero integer vectors with `aᵀ k a ≤ radius_sq`, found by
/// depth-first enumeration on the Cholesky factor of `k`. Both `a` and `−a`
/// are returned. Fails with [`Error::Resource`] past `limit` vectors.
pub fn enumerate_short_vectors(k: &RMatrix, radius_sq: f64, limit: usize) -> Result<Vec<(Vec<i64>, f64)>> {
    let n = k.nrows();
    // aᵀ k a = ‖R a‖² with R = Lᵀ upper triangular.
    let r = cholesky_lower(k)?.transpose();
    let mut out = Vec::new();
    let mut a = vec![0i64; n];
    let mut partial = vec![0.0; n + 1];
    enumerate_level(&r, radius_sq, n, &mut a, &mut partial, &mut out, limit)?;
    Ok(out)
}

fn enumerate_level(
    r: &RMatrix,
    radius_sq: f64,
    level: usize,
    a: &mut [i64],
    partial: &mut [f64],
    out: &mut Vec<(Vec<i64>, f64)>,
    limit: usize,
) -> Result<()> {
    let n = a.len();
    if level == 0 {
        let norm = partial[0];
        if a.iter().any(|&x| x != 0) {
            if out.len() >= limit {
                return Err(Error::Resource { limit, partial: None });
            }
            out.push((a.to_vec(), norm));
        }
        return Ok(());
    }
    let i = level - 1;
    let rii = r[(i, i)];
    let shift: f64 = (i + 1..n).map(|j| r[(i, j)] * a[j] as f64).sum();
    let rem = radius_sq - partial[level];
    if rem < 0.0 {
        return Ok(());
    }
    let center = -shift / rii;
    let half = rem.sqrt() / rii;
    let lo = (center - half - 1e-12).ceil() as i64;
    let hi = (center + half + 1e-12).floor() as i64;
    for v in lo..=hi {
        let term = rii * v as f64 + shift;
        let p = partial[level] + term * term;
        if p > radius_sq * (1.0 + 1e-12) {
            continue;
        }
        a[i] = v;
        partial[i] = p;
        enumerate_level(r, radius_sq, i, a, partial, out, limit)?;
    }
    a[i] = 0;
    Ok(())
}

/// Greedy selection of `n` independent vectors in order of increasing
/// quadratic norm. Candidates must be sorted by norm.
pub fn greedy_independent(candidates: &[(Vec<i64>, f64)], n: usize) -> Option<Vec<Vec<i64>>> {
    let mut chosen: Vec<Vec<i64>> = Vec::with_capacity(n);
    for (a, _) in candidates {
        chosen.push(a.clone());
        if exact_rank(&chosen) < chosen.len() {
            chosen.pop();
        } else if chosen.len() == n {
            return Some(chosen);
        }
    }
    None
}

/// Canonical sign: first nonzero coordinate positive.
pub fn is_canonical_sign(a: &[i64]) -> bool {
    a.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0)
}
