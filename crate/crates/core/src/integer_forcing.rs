//! Integer-forcing achievable rates (plain and with successive
//! cancellation) and the joint-decoding benchmark.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, shape, Error, Result};
use crate::lattice::{
    congruence, content, enumerate_short_vectors, greedy_independent, is_canonical_sign, lll_reduce, quad_form,
    IntegerMatrix,
};
use crate::linalg::{cholesky_lower, spd_inverse, CMatrix, RMatrix};

/// Iteration cap for LLL.
pub const LLL_MAX_ITER: usize = 100_000;
/// Budget for exhaustive candidate enumeration.
pub const ENUM_LIMIT: usize = 1_000_000;
/// Largest dimension for which permutations are searched and the
/// exhaustive method is allowed.
pub const SMALL_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMethod {
    Lll,
    LllPermutations,
    Exhaustive,
}

impl SearchMethod {
    pub fn label(&self) -> &'static str {
        match self {
            SearchMethod::Lll => "lll",
            SearchMethod::LllPermutations => "lll+permutations",
            SearchMethod::Exhaustive => "exhaustive",
        }
    }
}

impl fmt::Display for SearchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SearchMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lll" => Ok(SearchMethod::Lll),
            "lll+permutations" | "lll-perm" => Ok(SearchMethod::LllPermutations),
            "exhaustive" => Ok(SearchMethod::Exhaustive),
            other => Err(domain(format!("unknown search method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub method: SearchMethod,
    pub lll_delta: f64,
    /// Candidate radius for the exhaustive method. `None` uses the largest
    /// row norm of the LLL basis.
    pub enum_radius_sq: Option<f64>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { method: SearchMethod::LllPermutations, lll_delta: 0.99, enum_radius_sq: None }
    }
}

impl SearchConfig {
    pub fn with_method(method: SearchMethod) -> Self {
        Self { method, ..Self::default() }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.lll_delta > 0.25 && self.lll_delta <= 1.0) {
            return Err(domain(format!("lll_delta must lie in (0.25, 1], got {}", self.lll_delta)));
        }
        if let Some(r) = self.enum_radius_sq {
            if !(r > 0.0) {
                return Err(domain("enumeration radius must be positive"));
            }
        }
        if self.method == SearchMethod::Exhaustive && dim > SMALL_DIM {
            return Err(domain(format!("exhaustive search is limited to dimension {SMALL_DIM}, got {dim}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IfRateResult {
    /// Bits per complex channel use, floored at zero.
    pub rate_bits: f64,
    pub a_matrix: IntegerMatrix,
    /// Per-stream effective noise levels: the Cholesky diagonal of `AKAᵀ`
    /// for SIC, `sqrt(a_mᵀ K a_m)` for plain integer forcing.
    pub ell_diag: Vec<f64>,
    pub method: SearchMethod,
}

/// `K = (I + HᵀH)⁻¹`.
pub fn if_gram(h_real: &RMatrix) -> Result<RMatrix> {
    if h_real.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("channel has non-finite entries".into()));
    }
    let n = h_real.ncols();
    let g = RMatrix::identity(n, n) + h_real.transpose() * h_real;
    spd_inverse(&g)
}

/// Integer matrix for the quadratic form `k_gram`.
///
/// The LLL methods return the reduced basis with rows sorted by `aᵀKa`.
/// The exhaustive method returns the shortest independent integer vectors,
/// chosen greedily from all vectors inside the candidate radius.
pub fn search_integer_matrix(k_gram: &RMatrix, cfg: &SearchConfig) -> Result<IntegerMatrix> {
    let n = k_gram.nrows();
    cfg.validate(n)?;
    let lll = sorted_lll(k_gram, cfg)?;
    if cfg.method != SearchMethod::Exhaustive {
        return Ok(lll);
    }
    let cands = candidates(k_gram, &lll, cfg)?;
    let rows = greedy_independent(&cands, n)
        .ok_or_else(|| Error::SearchFailure("candidate set does not span the lattice".into()))?;
    Ok(IntegerMatrix::from_rows_unchecked(&rows))
}

fn sorted_lll(k: &RMatrix, cfg: &SearchConfig) -> Result<IntegerMatrix> {
    let a = lll_reduce(k, cfg.lll_delta, LLL_MAX_ITER)?;
    let mut order: Vec<(usize, f64)> = (0..a.dim()).map(|i| (i, quad_form(k, a.row(i)))).collect();
    order.sort_by(|x, y| x.1.total_cmp(&y.1));
    Ok(a.permute_rows(&order.iter().map(|o| o.0).collect::<Vec<_>>()))
}

/// Primitive vectors (one sign each) inside the candidate radius, sorted by norm.
fn candidates(k: &RMatrix, lll: &IntegerMatrix, cfg: &SearchConfig) -> Result<Vec<(Vec<i64>, f64)>> {
    let radius_sq = match cfg.enum_radius_sq {
        Some(r) => r,
        None => lll.rows().map(|r| quad_form(k, r)).fold(0.0, f64::max) * (1.0 + 1e-9),
    };
    let mut c: Vec<(Vec<i64>, f64)> = enumerate_short_vectors(k, radius_sq, ENUM_LIMIT)?
        .into_iter()
        .filter(|(a, _)| is_canonical_sign(a) && content(a) == 1)
        .collect();
    c.sort_by(|x, y| x.1.total_cmp(&y.1).then_with(|| x.0.cmp(&y.0)));
    Ok(c)
}

/// Cholesky diagonal of `A K Aᵀ`.
pub fn sic_diagonal(k: &RMatrix, a: &IntegerMatrix) -> Result<Vec<f64>> {
    let mut m = congruence(k, a);
    symmetrize(&mut m);
    let l = cholesky_lower(&m)?;
    Ok((0..l.nrows()).map(|i| l[(i, i)]).collect())
}

fn symmetrize(m: &mut RMatrix) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// `(dim / 2T) · max(min_m log₂(1/ℓ_m²), 0)`.
pub fn rate_from_levels(ell: &[f64], t: usize) -> f64 {
    let worst = ell.iter().fold(0.0_f64, |acc, l| acc.max(l * l));
    let per_stream = -worst.log2();
    (ell.len() as f64 / (2.0 * t as f64)) * per_stream.max(0.0)
}

fn check_real_channel(h_real: &RMatrix, t: usize) -> Result<()> {
    if t == 0 {
        return Err(domain("time extension must be at least 1"));
    }
    if h_real.ncols() == 0 || h_real.nrows() % 2 != 0 || h_real.ncols() % 2 != 0 {
        return Err(shape(format!("real channel must have even dimensions, got {:?}", h_real.shape())));
    }
    Ok(())
}

/// IF-SIC rate in bits per complex channel use.
pub fn if_sic_rate(h_real: &RMatrix, t: usize, cfg: &SearchConfig) -> Result<IfRateResult> {
    check_real_channel(h_real, t)?;
    let k = if_gram(h_real)?;
    sic_rate_for_gram(&k, t, cfg)
}

/// IF-SIC rate given `K` directly.
pub fn sic_rate_for_gram(k: &RMatrix, t: usize, cfg: &SearchConfig) -> Result<IfRateResult> {
    let n = k.nrows();
    cfg.validate(n)?;
    let lll = sorted_lll(k, cfg)?;
    let (a, ell) = match cfg.method {
        SearchMethod::Lll => {
            let ell = sic_diagonal(k, &lll)?;
            (lll, ell)
        }
        SearchMethod::LllPermutations => best_permutation(k, &lll)?,
        SearchMethod::Exhaustive => {
            let (a0, ell0) = best_permutation(k, &lll)?;
            let cands = candidates(k, &lll, cfg)?;
            branch_and_bound(k, &cands, a0, ell0)?
        }
    };
    Ok(IfRateResult { rate_bits: rate_from_levels(&ell, t), a_matrix: a, ell_diag: ell, method: cfg.method })
}

/// Plain IF rate: per-row noise `a_mᵀ K a_m`, same integer matrix search.
pub fn if_plain_rate(h_real: &RMatrix, t: usize, cfg: &SearchConfig) -> Result<IfRateResult> {
    check_real_channel(h_real, t)?;
    let k = if_gram(h_real)?;
    plain_rate_for_gram(&k, t, cfg)
}

pub fn plain_rate_for_gram(k: &RMatrix, t: usize, cfg: &SearchConfig) -> Result<IfRateResult> {
    let a = search_integer_matrix(k, cfg)?;
    let ell: Vec<f64> = a.rows().map(|r| quad_form(k, r).sqrt()).collect();
    Ok(IfRateResult { rate_bits: rate_from_levels(&ell, t), a_matrix: a, ell_diag: ell, method: cfg.method })
}

fn max_level(ell: &[f64]) -> f64 {
    ell.iter().fold(0.0_f64, |acc, l| acc.max(*l))
}

/// All row orders of `a` when the dimension is small; otherwise `a` as given.
fn best_permutation(k: &RMatrix, a: &IntegerMatrix) -> Result<(IntegerMatrix, Vec<f64>)> {
    let n = a.dim();
    let mut best_ell = sic_diagonal(k, a)?;
    let mut best = a.clone();
    if n > SMALL_DIM {
        return Ok((best, best_ell));
    }
    for perm in permutations(n) {
        let p = a.permute_rows(&perm);
        let ell = sic_diagonal(k, &p)?;
        if max_level(&ell) < max_level(&best_ell) {
            best_ell = ell;
            best = p;
        }
    }
    Ok((best, best_ell))
}

/// Lexicographic permutations of `0..n`.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// Node budget for the exhaustive branch-and-bound.
pub const BNB_NODE_LIMIT: usize = 20_000_000;

type Vec4 = [f64; SMALL_DIM];

/// Ordered selection of candidate rows minimising the largest SIC level.
///
/// Works in the embedded space `v = Lᵀa` (`K = LLᵀ`), where the SIC levels
/// are Gram–Schmidt norms. Starts from the incumbent `(a0, ell0)`.
fn branch_and_bound(
    k: &RMatrix,
    cands: &[(Vec<i64>, f64)],
    a0: IntegerMatrix,
    ell0: Vec<f64>,
) -> Result<(IntegerMatrix, Vec<f64>)> {
    let n = k.nrows();
    debug_assert!(n <= SMALL_DIM);
    let lt = cholesky_lower(k)?.transpose();
    let vecs: Vec<Vec4> = cands
        .iter()
        .map(|(a, _)| {
            let mut v = [0.0; SMALL_DIM];
            for (r, slot) in v.iter_mut().enumerate().take(n) {
                *slot = (0..n).map(|c| lt[(r, c)] * a[c] as f64).sum();
            }
            v
        })
        .collect();
    let log_det_k: f64 = (0..n).map(|i| 2.0 * lt[(i, i)].ln()).sum();
    let mut state = Bnb {
        vecs: &vecs,
        n,
        log_det_k,
        best_sq: max_level(&ell0).powi(2),
        best: None,
        chosen: Vec::with_capacity(n),
        stars: Vec::with_capacity(n),
        levels_sq: Vec::with_capacity(n),
        nodes: 0,
    };
    state.search()?;
    let Some(idx) = state.best else { return Ok((a0, ell0)) };
    let rows: Vec<Vec<i64>> = idx.iter().map(|&i| cands[i].0.clone()).collect();
    let a = IntegerMatrix::from_rows_unchecked(&rows);
    if a.det() == 0 {
        return Ok((a0, ell0));
    }
    let ell = sic_diagonal(k, &a)?;
    if max_level(&ell) < max_level(&ell0) {
        Ok((a, ell))
    } else {
        Ok((a0, ell0))
    }
}

struct Bnb<'a> {
    vecs: &'a [Vec4],
    n: usize,
    log_det_k: f64,
    best_sq: f64,
    best: Option<Vec<usize>>,
    chosen: Vec<usize>,
    stars: Vec<Vec4>,
    levels_sq: Vec<f64>,
    nodes: usize,
}

impl Bnb<'_> {
    fn search(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > BNB_NODE_LIMIT {
            return Err(Error::Resource { limit: BNB_NODE_LIMIT, partial: None });
        }
        let depth = self.chosen.len();
        if depth == self.n {
            let worst = self.levels_sq.iter().fold(0.0_f64, |a, b| a.max(*b));
            // Require a strict improvement beyond rounding.
            if worst < self.best_sq * (1.0 - 1e-12) {
                self.best_sq = worst;
                self.best = Some(self.chosen.clone());
            }
            return Ok(());
        }
        // Remaining levels multiply to at least det K / (product so far), as
        // |det A| >= 1, so the largest of them is at least the geometric mean.
        let log_prefix: f64 = self.levels_sq.iter().map(|v| v.ln()).sum();
        let floor = ((self.log_det_k - log_prefix) / (self.n - depth) as f64).exp();
        if floor >= self.best_sq {
            return Ok(());
        }
        // Candidates with the same residual span the same subspace together
        // with the prefix, so one representative per residual suffices.
        let scale = self.best_sq.sqrt();
        let mut seen = std::collections::HashSet::new();
        let mut branches: Vec<(f64, usize, Vec4)> = Vec::new();
        for (i, v) in self.vecs.iter().enumerate() {
            if self.chosen.contains(&i) {
                continue;
            }
            let mut r = *v;
            for (s, &ns) in self.stars.iter().zip(&self.levels_sq) {
                let m = dot4(&r, s) / ns;
                r.iter_mut().zip(s).for_each(|(x, y)| *x -= m * y);
            }
            let lev = dot4(&r, &r);
            if lev >= self.best_sq || lev <= 1e-12 * self.best_sq {
                continue;
            }
            if seen.insert(residual_key(&r, scale)) {
                branches.push((lev, i, r));
            }
        }
        branches.sort_by(|x, y| x.0.total_cmp(&y.0));
        if depth + 1 == self.n {
            // Only the shortest residual can matter for the last row.
            branches.truncate(1);
        }
        for (lev, i, r) in branches {
            if lev >= self.best_sq {
                break;
            }
            self.chosen.push(i);
            self.stars.push(r);
            self.levels_sq.push(lev);
            let res = self.search();
            self.chosen.pop();
            self.stars.pop();
            self.levels_sq.pop();
            res?;
        }
        Ok(())
    }
}

fn dot4(a: &Vec4, b: &Vec4) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

/// Sign-normalised, quantised residual used to detect duplicates.
fn residual_key(r: &Vec4, scale: f64) -> [i64; SMALL_DIM] {
    let mut q = r.map(|x| (x / scale * 1e8).round() as i64);
    if q.iter().find(|&&v| v != 0).is_some_and(|&v| v < 0) {
        q.iter_mut().for_each(|v| *v = -*v);
    }
    q
}

/// Joint-decoding rate of equal-rate streams:
/// `(1/T) min_S (n/|S|) log₂det(I + H_Sᴴ H_S)` over nonempty column subsets.
pub fn ml_mac_rate(h_eff: &CMatrix, t: usize) -> Result<f64> {
    Ok(ml_mac_rate_with_subset(h_eff, t)?.0)
}

/// As [`ml_mac_rate`], also returning the bottleneck column mask.
pub fn ml_mac_rate_with_subset(h_eff: &CMatrix, t: usize) -> Result<(f64, u32)> {
    if t == 0 {
        return Err(domain("time extension must be at least 1"));
    }
    let n = h_eff.ncols();
    if n == 0 || n > 20 {
        return Err(shape(format!("effective channel must have 1..=20 columns, got {n}")));
    }
    let g = h_eff.adjoint() * h_eff;
    let gram: Vec<Complex64> = (0..n * n).map(|idx| g[(idx / n, idx % n)]).collect();
    let mut best = (f64::INFINITY, 0u32);
    let mut buf = Vec::with_capacity(n * n);
    for mask in 1u32..(1u32 << n) {
        let cols: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let ld = log2_det_identity_plus_complex(&gram, n, &cols, &mut buf);
        let v = n as f64 / cols.len() as f64 * ld;
        if v < best.0 {
            best = (v, mask);
        }
    }
    Ok((best.0.max(0.0) / t as f64, best.1))
}

/// `log₂ det(I + G_S)` for a principal submatrix of a Hermitian PSD `G`.
fn log2_det_identity_plus_complex(g: &[Complex64], n: usize, cols: &[usize], buf: &mut Vec<Complex64>) -> f64 {
    let m = cols.len();
    buf.clear();
    for &i in cols {
        for &j in cols {
            let mut v = g[i * n + j];
            if i == j {
                v += 1.0;
            }
            buf.push(v);
        }
    }
    // In-place Cholesky; pivots are at least 1.
    let mut ld = 0.0;
    for j in 0..m {
        let mut d = buf[j * m + j].re;
        for k in 0..j {
            d -= buf[j * m + k].norm_sqr();
        }
        let d = d.max(f64::MIN_POSITIVE).sqrt();
        ld += d.log2();
        buf[j * m + j] = Complex64::new(d, 0.0);
        for i in j + 1..m {
            let mut s = buf[i * m + j];
            for k in 0..j {
                s -= buf[i * m + k] * buf[j * m + k].conj();
            }
            buf[i * m + j] = s / d;
        }
    }
    2.0 * ld
}

/// Joint-decoding rate for a real effective channel whose columns carry the
/// real and imaginary parts of `n/2` complex symbols, ordered
/// `[Re s_1 … Re s_m, Im s_1 … Im s_m]`. Subsets range over complex symbols.
pub fn ml_rate_real(h_real: &RMatrix, t: usize) -> Result<f64> {
    check_real_channel(h_real, t)?;
    let n = h_real.ncols();
    let m = n / 2;
    if m > 16 {
        return Err(shape("too many symbols for subset enumeration"));
    }
    let g = h_real.transpose() * h_real;
    let mut best = f64::INFINITY;
    for mask in 1u32..(1u32 << m) {
        let syms: Vec<usize> = (0..m).filter(|&i| mask >> i & 1 == 1).collect();
        let cols: Vec<usize> = syms.iter().copied().chain(syms.iter().map(|s| s + m)).collect();
        let sub = RMatrix::from_fn(cols.len(), cols.len(), |i, j| {
            g[(cols[i], cols[j])] + if i == j { 1.0 } else { 0.0 }
        });
        let l = cholesky_lower(&sub)?;
        let ld: f64 = (0..l.nrows()).map(|i| 2.0 * l[(i, i)].log2()).sum();
        // Real mutual information carries a factor 1/2.
        let v = m as f64 / syms.len() as f64 * 0.5 * ld;
        best = best.min(v);
    }
    Ok(best.max(0.0) / t as f64)
}
