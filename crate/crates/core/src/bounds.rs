//! Closed-form and numerical outage bounds.
//!
//! Space-only precoding of a two-antenna compound channel (worst-case
//! outage upper bounds for IF-SIC, exact worst-case outage for joint
//! decoding), the Jacobi-ensemble lower bound for space-time precoding, and
//! the conditional outage laws of the Rayleigh multiple-access channel.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::ensembles::{jacobi_from_rng, JacobiSpec};
use crate::error::{domain, Error, Result};
use crate::rng::RngSeed;
use crate::special::{ln_gamma, regularized_incomplete_beta, GaussLegendre};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundMethod {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

impl BoundMethod {
    pub fn label(&self) -> &'static str {
        match self {
            BoundMethod::ClosedForm => "closed-form",
            BoundMethod::Quadrature => "quadrature",
            BoundMethod::MonteCarlo => "monte-carlo",
        }
    }
}

/// A probability in `[0, 1]` with the method that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub value: f64,
    pub method: BoundMethod,
    pub abs_error: f64,
}

impl BoundValue {
    pub fn new(value: f64, method: BoundMethod, abs_error: f64) -> Self {
        Self { value: clamp_prob(value), method, abs_error: abs_error.max(0.0) }
    }

    pub fn closed_form(value: f64) -> Self {
        Self::new(value, BoundMethod::ClosedForm, 0.0)
    }
}

fn clamp_prob(p: f64) -> f64 {
    if p.is_nan() {
        return 1.0;
    }
    p.clamp(0.0, 1.0)
}

fn check_rate(c: f64, r: f64) -> Result<()> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(domain(format!("capacity must be finite and non-negative, got {c}")));
    }
    if !(r >= 0.0) || r > c {
        return Err(domain(format!("rate must satisfy 0 <= R <= C, got R={r}, C={c}")));
    }
    Ok(())
}

/// `min(81π² 2^{−ΔC}, 1)`, valid for `ΔC > 1`.
pub fn if_sic_upper_simple(delta_c: f64) -> Result<BoundValue> {
    if !(delta_c > 1.0) {
        return Err(domain(format!("simple upper bound needs ΔC > 1, got {delta_c}")));
    }
    Ok(BoundValue::closed_form(81.0 * PI * PI * (-delta_c).exp2()))
}

/// Vector budget for the primitive-vector enumeration.
pub const UPPER_ENUM_LIMIT: usize = 10_000_000;

/// Tight upper bound: the maximum over `d_grid` log-spaced values of
/// `d_max ∈ [2^{C/2}, 2^C]` of
/// `Σ_a 2·2^{−3(C+ΔC)/4}·2^C / (‖a‖³ √d_max)` over primitive integer
/// vectors with `0 < ‖a‖² < Γ d_max`, `Γ = 2^{−(C+ΔC)/2}`. Both `a` and
/// `−a` are counted.
///
/// If the enumeration budget is exceeded the error carries the bound
/// restricted to the grid points that could be covered.
pub fn if_sic_upper_tight(c: f64, delta_c: f64, n_dim: usize, d_grid: usize) -> Result<BoundValue> {
    if !(delta_c > 0.0) || !(c > 0.0) {
        return Err(domain(format!("tight upper bound needs C > 0 and ΔC > 0, got C={c}, ΔC={delta_c}")));
    }
    if n_dim == 0 || d_grid == 0 {
        return Err(domain("dimension and grid size must be positive"));
    }
    let gamma = (-(c + delta_c) / 2.0).exp2();
    let grid = log_grid((c / 2.0).exp2(), c.exp2(), d_grid);
    let full_radius_sq = gamma * c.exp2();
    let mut radius_sq = full_radius_sq;
    while ball_volume(n_dim, radius_sq.sqrt()) > UPPER_ENUM_LIMIT as f64 {
        radius_sq *= 0.9;
    }
    let hist = primitive_norm_histogram(n_dim, radius_sq);
    // prefix[m] = Σ_{‖a‖² < m} ‖a‖^{-3}
    let mut prefix = vec![0.0; hist.len() + 1];
    for m in 0..hist.len() {
        let term = if m == 0 { 0.0 } else { hist[m] as f64 * (m as f64).powf(-1.5) };
        prefix[m + 1] = prefix[m] + term;
    }
    let front = 2.0 * (-0.75 * (c + delta_c)).exp2() * c.exp2();
    let mut best = 0.0_f64;
    for &d in &grid {
        let limit = gamma * d;
        if limit > radius_sq * (1.0 + 1e-12) {
            continue;
        }
        // Strict inequality ‖a‖² < limit over integer squared norms.
        let m_max = strict_floor(limit).min(hist.len() as u64 - 1) as usize;
        best = best.max(front * prefix[m_max + 1] / d.sqrt());
    }
    let value = BoundValue::closed_form(best);
    if radius_sq < full_radius_sq {
        return Err(Error::Resource { limit: UPPER_ENUM_LIMIT, partial: Some(value.value) });
    }
    Ok(value)
}

/// Largest integer strictly below `x` (for `x > 0`).
fn strict_floor(x: f64) -> u64 {
    let f = x.floor();
    if f == x {
        (f as u64).saturating_sub(1)
    } else {
        f as u64
    }
}

fn ball_volume(n: usize, r: f64) -> f64 {
    let n = n as f64;
    (n / 2.0 * PI.ln() + n * r.ln() - ln_gamma(n / 2.0 + 1.0)).exp()
}

/// `hist[m]` = number of primitive integer vectors in `ℤⁿ` with `‖a‖² = m`,
/// for all `m < radius_sq` (both signs counted).
pub fn primitive_norm_histogram(n: usize, radius_sq: f64) -> Vec<u64> {
    let max_m = strict_floor(radius_sq.max(0.0));
    let mut hist = vec![0u64; max_m as usize + 1];
    let mut a = vec![0i64; n];
    fill_histogram(&mut a, 0, 0, max_m, &mut hist);
    hist[0] = 0;
    hist
}

fn fill_histogram(a: &mut [i64], pos: usize, norm: u64, max_m: u64, hist: &mut [u64]) {
    if pos == a.len() {
        if norm > 0 && crate::lattice::content(a) == 1 {
            hist[norm as usize] += 1;
        }
        return;
    }
    let room = max_m - norm;
    let bound = (room as f64).sqrt().floor() as i64;
    for v in -bound..=bound {
        let add = (v * v) as u64;
        if add > room {
            continue;
        }
        a[pos] = v;
        fill_histogram(a, pos + 1, norm + add, max_m, hist);
    }
    a[pos] = 0;
}

/// `n` log-spaced points on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![hi];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Exact worst-case outage of joint decoding with CUE space-only precoding:
/// `1 − √(1 − 2^{−ΔC})`.
pub fn ml_worst_case_outage(delta_c: f64) -> Result<BoundValue> {
    if !(delta_c >= 0.0) {
        return Err(domain(format!("ΔC must be non-negative, got {delta_c}")));
    }
    Ok(BoundValue::closed_form(1.0 - (1.0 - (-delta_c).exp2()).sqrt()))
}

/// Largest admissible weak-mode SNR, `2^{C/2} − 1`.
pub fn rho2_max(c: f64) -> f64 {
    (c / 2.0).exp2() - 1.0
}

/// Joint-decoding outage at a fixed weak-mode SNR:
/// `2·max(2^{R/2} − 1 − ρ₂, 0) / (2^C/(1+ρ₂) − 1 − ρ₂)`.
pub fn ml_outage_given_rho2(c: f64, r: f64, rho2: f64) -> Result<BoundValue> {
    check_rate(c, r)?;
    let hi = rho2_max(c);
    if !(rho2 >= 0.0) || rho2 > hi * (1.0 + 1e-12) + 1e-12 {
        return Err(domain(format!("ρ₂ = {rho2} outside [0, {hi}]")));
    }
    Ok(BoundValue::closed_form(ml_outage_unchecked(c, r, rho2)))
}

fn ml_outage_unchecked(c: f64, r: f64, rho2: f64) -> f64 {
    let num = ((r / 2.0).exp2() - 1.0 - rho2).max(0.0);
    let den = c.exp2() / (1.0 + rho2) - 1.0 - rho2;
    if num == 0.0 {
        return 0.0;
    }
    if den <= 0.0 {
        return 1.0;
    }
    clamp_prob(2.0 * num / den)
}

/// Maximiser of [`ml_outage_given_rho2`] over `ρ₂`:
/// `2^{−R/2−1}(2^{C+1} − 2^{R/2+1} − 2√(2^{2C} − 2^{C+R}))`.
pub fn rho2_star(c: f64, r: f64) -> Result<f64> {
    if !(r >= 0.0) || !(r < c) {
        return Err(domain(format!("ρ₂* needs 0 <= R < C, got R={r}, C={c}")));
    }
    let v = (-r / 2.0 - 1.0).exp2()
        * ((c + 1.0).exp2() - (r / 2.0 + 1.0).exp2() - 2.0 * ((2.0 * c).exp2() - (c + r).exp2()).sqrt());
    Ok(v.clamp(0.0, rho2_max(c)))
}

/// Settings for the space-time lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    /// Gauss–Legendre nodes per axis.
    pub nodes: usize,
    /// Number of `ρ₂` grid points before refinement.
    pub rho_grid: usize,
    /// Jacobi samples for regions of dimension above two.
    pub mc_samples: usize,
    pub seed: u64,
    /// Upper end of the `ρ₂` search. `None` means `2^{C/2} − 1`.
    pub rho2_max: Option<f64>,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self { nodes: 128, rho_grid: 256, mc_samples: 1_000_000, seed: 0x5eed, rho2_max: None }
    }
}

/// Space-time lower bound with the maximising `ρ₂` and subset size `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StLowerBound {
    pub bound: BoundValue,
    pub rho2: f64,
    pub k: usize,
}

/// The eigenvalue region for one subset size `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StRegionSpec {
    pub t: usize,
    pub k: usize,
    pub r_bits: f64,
    pub rho1: f64,
    pub rho2: f64,
}

impl StRegionSpec {
    pub fn new(t: usize, k: usize, r_bits: f64, rho1: f64, rho2: f64) -> Result<Self> {
        if t == 0 || k == 0 || k > 2 * t {
            return Err(domain(format!("need 1 <= k <= 2T, got k={k}, T={t}")));
        }
        if !(rho2 >= 0.0) || rho2 > rho1 * (1.0 + 1e-12) {
            return Err(domain(format!("need 0 <= ρ₂ <= ρ₁, got ρ₁={rho1}, ρ₂={rho2}")));
        }
        Ok(Self { t, k, r_bits, rho1, rho2 })
    }

    /// Jacobi law of the non-trivial eigenvalues, or `None` when `k = 2T`.
    pub fn law(&self) -> Option<JacobiSpec> {
        let n = if self.k <= self.t { self.k } else { 2 * self.t - self.k };
        (n > 0).then(|| JacobiSpec::new(self.t, self.t, n).expect("n <= T"))
    }

    /// `log₂` of the threshold on `Π(1 + ρ₂ + λ_i(ρ₁ − ρ₂))`.
    ///
    /// For `k > T` the block `P₁ᴴP₁` has `k − T` unit and `k − T` zero
    /// eigenvalues that contribute `(1+ρ₁)^{k−T}(1+ρ₂)^{k−T} = 2^{(k−T)C}`,
    /// which is moved to the right-hand side.
    pub fn log2_threshold(&self) -> f64 {
        let base = self.r_bits * self.k as f64 / 2.0;
        if self.k <= self.t {
            base
        } else {
            let c = (1.0 + self.rho1).log2() + (1.0 + self.rho2).log2();
            base - (self.k - self.t) as f64 * c
        }
    }
}

/// `P(Π_i (1 + ρ₂ + λ_i(ρ₁−ρ₂)) < 2^{threshold})` for one subset of size `k`.
pub fn st_subset_outage(spec: &StRegionSpec, cfg: &QuadConfig) -> Result<BoundValue> {
    let Some(law) = spec.law() else {
        let c = (1.0 + spec.rho1).log2() + (1.0 + spec.rho2).log2();
        return Ok(BoundValue::closed_form(if spec.r_bits > c { 1.0 } else { 0.0 }));
    };
    let gl = GaussLegendre::new(cfg.nodes);
    let coarse = GaussLegendre::new((cfg.nodes / 2).max(8));
    match law.n() {
        1 => Ok(BoundValue::closed_form(one_dim(spec, law)?)),
        2 => {
            let v = two_dim(spec, law, &gl);
            let v_coarse = two_dim(spec, law, &coarse);
            Ok(BoundValue::new(v, BoundMethod::Quadrature, (v - v_coarse).abs()))
        }
        _ => {
            let samples = jacobi_samples(law, cfg);
            Ok(mc_region(spec, &samples))
        }
    }
}

fn ln_g(spec: &StRegionSpec, lambda: f64) -> f64 {
    (1.0 + spec.rho2 + lambda * (spec.rho1 - spec.rho2)).ln()
}

/// Largest `λ` in `[0, 1]` with `ln g(λ) ≤ budget`, or `None` if even `λ = 0` fails.
fn lambda_cut(spec: &StRegionSpec, budget: f64) -> Option<f64> {
    let delta = spec.rho1 - spec.rho2;
    let base = 1.0 + spec.rho2;
    if budget < base.ln() {
        return None;
    }
    if delta <= 0.0 {
        return Some(1.0);
    }
    Some(((budget.exp() - base) / delta).clamp(0.0, 1.0))
}

fn one_dim(spec: &StRegionSpec, law: JacobiSpec) -> Result<f64> {
    let budget = spec.log2_threshold() * std::f64::consts::LN_2;
    let Some(cut) = lambda_cut(spec, budget) else { return Ok(0.0) };
    // J(T, T, 1) is Beta(T, T).
    regularized_incomplete_beta(cut, law.m1() as f64, law.m2() as f64)
}

/// Two eigenvalues: integrate the symmetric (unordered) density over the
/// square, with the inner limit solved in closed form and the outer axis
/// split where the inner limit saturates.
fn two_dim(spec: &StRegionSpec, law: JacobiSpec, gl: &GaussLegendre) -> f64 {
    let budget = spec.log2_threshold() * std::f64::consts::LN_2;
    let (a, b) = (law.a_exponent(), law.b_exponent());
    let ln_kappa = crate::ensembles::ln_selberg_kappa(law);
    let w = |x: f64| x.powi(a) * (1.0 - x).powi(b);
    let inner = |x: f64| -> f64 {
        match lambda_cut(spec, budget - ln_g(spec, x)) {
            None => 0.0,
            Some(cut) => gl.integrate(0.0, cut, |y| w(y) * (x - y) * (x - y)),
        }
    };
    // Kinks of the inner limit: where it reaches 1 and where it reaches 0.
    let mut breaks = vec![0.0, 1.0];
    let delta = spec.rho1 - spec.rho2;
    if delta > 0.0 {
        for edge in [1.0 + spec.rho1, 1.0 + spec.rho2] {
            let x = ((budget - edge.ln()).exp() - (1.0 + spec.rho2)) / delta;
            if x > 0.0 && x < 1.0 {
                breaks.push(x);
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for pair in breaks.windows(2) {
        total += gl.integrate(pair[0], pair[1], |x| w(x) * inner(x));
    }
    total * (-ln_kappa).exp()
}

fn jacobi_samples(law: JacobiSpec, cfg: &QuadConfig) -> Vec<Vec<f64>> {
    use rayon::prelude::*;
    let base = RngSeed::new(cfg.seed, 0);
    (0..cfg.mc_samples as u64)
        .into_par_iter()
        .map(|i| jacobi_from_rng(law, &mut base.stream(i).rng()))
        .collect()
}

fn mc_region(spec: &StRegionSpec, samples: &[Vec<f64>]) -> BoundValue {
    let budget = spec.log2_threshold() * std::f64::consts::LN_2;
    let hits = samples
        .iter()
        .filter(|l| l.iter().map(|&x| ln_g(spec, x)).sum::<f64>() < budget)
        .count();
    let n = samples.len().max(1);
    let p = hits as f64 / n as f64;
    BoundValue::new(p, BoundMethod::MonteCarlo, crate::stats::binomial_stderr(p, n))
}

/// Lower bound on the worst-case outage of any receiver under CUE
/// space-time precoding over `T` extensions of a two-antenna compound
/// channel: the maximum over `ρ₂` and subset size `k` of the probability
/// that the first `k`-column subset is in outage.
///
/// For `T = 1` the two single-column events cannot occur together, so the
/// `k = 1` term is the sum of both, which makes the bound exact.
pub fn st_lower_bound(c: f64, r: f64, t: usize, cfg: &QuadConfig) -> Result<StLowerBound> {
    check_rate(c, r)?;
    if t == 0 {
        return Err(domain("time extension must be at least 1"));
    }
    if cfg.nodes == 0 || cfg.rho_grid < 2 {
        return Err(domain("need at least one quadrature node and two grid points"));
    }
    let hi = cfg.rho2_max.unwrap_or_else(|| rho2_max(c)).min(rho2_max(c));
    if r == 0.0 || hi <= 0.0 {
        let v = if r > c { 1.0 } else { 0.0 };
        return Ok(StLowerBound { bound: BoundValue::closed_form(v), rho2: 0.0, k: 2 * t });
    }
    let mut grid = vec![0.0];
    grid.extend(log_grid(hi * 1e-6, hi, cfg.rho_grid - 1));

    let mut mc_cache: Vec<Option<Vec<Vec<f64>>>> = vec![None; 2 * t];
    let mut eval = |rho2: f64, k: usize| -> Result<BoundValue> {
        let rho1 = c.exp2() / (1.0 + rho2) - 1.0;
        let spec = StRegionSpec::new(t, k, r, rho1, rho2.min(rho1))?;
        let mut v = match spec.law() {
            Some(law) if law.n() > 2 => {
                let samples = mc_cache[k - 1].get_or_insert_with(|| jacobi_samples(law, cfg));
                mc_region(&spec, samples)
            }
            _ => st_subset_outage(&spec, cfg)?,
        };
        if t == 1 && k == 1 {
            v = BoundValue::new(2.0 * v.value, v.method, 2.0 * v.abs_error);
        }
        Ok(v)
    };

    let mut best: Option<(BoundValue, usize, usize)> = None;
    for k in 1..2 * t {
        for (gi, &rho2) in grid.iter().enumerate() {
            let v = eval(rho2, k)?;
            if best.is_none_or(|(b, _, _)| v.value > b.value) {
                best = Some((v, gi, k));
            }
        }
    }
    let full = eval(0.0, 2 * t)?;
    let (grid_best, gi, k) = best.expect("grid is non-empty");
    if full.value > grid_best.value {
        return Ok(StLowerBound { bound: full, rho2: 0.0, k: 2 * t });
    }
    if grid_best.value == 0.0 {
        return Ok(StLowerBound { bound: grid_best, rho2: grid[gi], k });
    }

    // Golden-section refinement between the neighbours of the best grid point.
    let mut lo = grid[gi.saturating_sub(1)];
    let mut up = grid[(gi + 1).min(grid.len() - 1)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = up - inv_phi * (up - lo);
    let mut x2 = lo + inv_phi * (up - lo);
    let mut f1 = eval(x1, k)?;
    let mut f2 = eval(x2, k)?;
    for _ in 0..80 {
        if (up - lo) <= 1e-13 * up.max(1.0) {
            break;
        }
        if f1.value >= f2.value {
            up = x2;
            x2 = x1;
            f2 = f1;
            x1 = up - inv_phi * (up - lo);
            f1 = eval(x1, k)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (up - lo);
            f2 = eval(x2, k)?;
        }
    }
    let (refined, rho2) = if f1.value >= f2.value { (f1, x1) } else { (f2, x2) };
    let (winner, rho2) = if refined.value >= grid_best.value { (refined, rho2) } else { (grid_best, grid[gi]) };
    let spread = (f1.value - f2.value).abs();
    let abs_error = winner.abs_error + spread + 4.0 * f64::EPSILON * winner.value.max(1e-300);
    Ok(StLowerBound { bound: BoundValue::new(winner.value, winner.method, abs_error), rho2, k })
}

/// `P(C(S) < R | C)` for a fixed subset of `k` out of `n_t` users of a
/// Rayleigh MAC, given the sum capacity: the regularised incomplete beta
/// `I_x(k, n_t − k)` at `x = (2^{Rk/n_t} − 1)/(2^C − 1)`. The full set fails
/// only when `R > C`.
pub fn mac_subset_outage(k: usize, n_t: usize, r: f64, c: f64) -> Result<BoundValue> {
    if k == 0 || k > n_t {
        return Err(domain(format!("subset size must satisfy 1 <= k <= n_t, got k={k}, n_t={n_t}")));
    }
    if !(r >= 0.0) || !(c >= 0.0) {
        return Err(domain("rate and capacity must be non-negative"));
    }
    if k == n_t {
        return Ok(BoundValue::closed_form(if r > c { 1.0 } else { 0.0 }));
    }
    if r == 0.0 {
        return Ok(BoundValue::closed_form(0.0));
    }
    let x = ((r * k as f64 / n_t as f64).exp2() - 1.0) / (c.exp2() - 1.0);
    let x = if x.is_nan() { 1.0 } else { x.clamp(0.0, 1.0) };
    let v = regularized_incomplete_beta(x, k as f64, (n_t - k) as f64)?;
    Ok(BoundValue::closed_form(v))
}

/// Two-user conditional outage `2(2^{R/2} − 1)/(2^C − 1)`.
pub fn mac2_outage_given_c(c: f64, r: f64) -> Result<BoundValue> {
    check_rate(c, r)?;
    if r == 0.0 {
        return Ok(BoundValue::closed_form(0.0));
    }
    let x = ((r / 2.0).exp2() - 1.0) / (c.exp2() - 1.0);
    Ok(BoundValue::closed_form(2.0 * x))
}

fn binomial(n: usize, k: usize) -> f64 {
    (ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)).exp().round()
}

/// `(max_k P_k, min(Σ_k C(n_t, k) P_k, 1))` with `P_k` from [`mac_subset_outage`].
pub fn mac_outage_bounds(n_t: usize, r: f64, c: f64) -> Result<(BoundValue, BoundValue)> {
    if n_t < 2 {
        return Err(domain(format!("need at least two users, got {n_t}")));
    }
    let mut lower = 0.0_f64;
    let mut upper = 0.0;
    for k in 1..=n_t {
        let p = mac_subset_outage(k, n_t, r, c)?.value;
        lower = lower.max(p);
        upper += binomial(n_t, k) * p;
    }
    Ok((BoundValue::closed_form(lower), BoundValue::closed_form(upper)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_upper_values() {
        let v = if_sic_upper_simple(10.0).unwrap().value;
        assert!((v - 81.0 * PI * PI / 1024.0).abs() < 1e-12);
        assert!((v - 0.78070).abs() < 1e-5);
        assert_eq!(if_sic_upper_simple(2.0).unwrap().value, 1.0);
        assert!(if_sic_upper_simple(1.0).is_err());
        let mut prev = 1.0;
        for i in 0..50 {
            let v = if_sic_upper_simple(1.5 + 0.3 * i as f64).unwrap().value;
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn primitive_histogram_small_cases() {
        // ℤ²: norm 1 → 4 vectors, norm 2 → 4, norm 4 → (±2,0) not primitive, norm 5 → 8.
        let h = primitive_norm_histogram(2, 6.0);
        assert_eq!(h, vec![0, 4, 4, 0, 0, 8]);
        // Strict radius: norm 5 excluded at radius² = 5.
        assert_eq!(primitive_norm_histogram(2, 5.0).len(), 5);
    }

    #[test]
    fn tight_upper_empty_set() {
        // Γ d_max < 1 everywhere: ΔC ≥ C leaves no vector.
        assert_eq!(if_sic_upper_tight(6.0, 6.5, 4, 64).unwrap().value, 0.0);
    }

    #[test]
    fn tight_upper_below_simple() {
        let tight = if_sic_upper_tight(14.0, 12.0, 4, 64).unwrap().value;
        let simple = if_sic_upper_simple(12.0).unwrap().value;
        assert!(tight <= simple, "{tight} vs {simple}");
        assert!((simple - 0.195).abs() < 1e-3);
    }

    #[test]
    fn tight_upper_monotone_in_gap() {
        let mut prev = f64::INFINITY;
        for i in 0..24 {
            let v = if_sic_upper_tight(14.0, 1.0 + 0.5 * i as f64, 4, 64).unwrap().value;
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn ml_worst_case_values() {
        assert_eq!(ml_worst_case_outage(0.0).unwrap().value, 1.0);
        assert!((ml_worst_case_outage(2.0).unwrap().value - 0.1339746).abs() < 1e-7);
        assert!(ml_worst_case_outage(-1.0).is_err());
    }

    #[test]
    fn rho2_fixed_outage_values() {
        let (c, r) = (10.0, 7.0);
        let v = ml_outage_given_rho2(c, r, 0.0).unwrap().value;
        assert!((v - 2.0 * ((r / 2.0f64).exp2() - 1.0) / (c.exp2() - 1.0)).abs() < 1e-15);
        assert!((v - mac2_outage_given_c(c, r).unwrap().value).abs() < 1e-15);
        let rho2 = (r / 2.0f64).exp2() - 1.0;
        assert_eq!(ml_outage_given_rho2(c, r, rho2).unwrap().value, 0.0);
        assert!(ml_outage_given_rho2(c, r, 1e6).is_err());
        let star = rho2_star(14.0, 13.0).unwrap();
        assert!((star - 52.02).abs() < 0.01, "{star}");
        let v = ml_outage_given_rho2(14.0, 13.0, star).unwrap().value;
        assert!((v - 0.2928932).abs() < 1e-6);
        assert!((v - ml_worst_case_outage(1.0).unwrap().value).abs() < 1e-9);
    }

    fn grid_argmax(c: f64, r: f64) -> (f64, f64) {
        let hi = rho2_max(c);
        let n = 200_001;
        (0..n)
            .map(|i| {
                let x = hi * i as f64 / (n - 1) as f64;
                (x, ml_outage_given_rho2(c, r, x).unwrap().value)
            })
            .fold((0.0, -1.0), |acc, p| if p.1 > acc.1 { p } else { acc })
    }

    #[test]
    fn rho2_star_is_grid_argmax() {
        let (x, _) = grid_argmax(14.0, 13.0);
        let star = rho2_star(14.0, 13.0).unwrap();
        assert!((x - star).abs() / star < 1e-3);
        assert!(star >= 0.0 && star <= rho2_max(14.0));
        for (c, r) in [(8.0, 6.0), (14.0, 10.0), (20.0, 19.5)] {
            let s = rho2_star(c, r).unwrap();
            let h = 1e-4 * s;
            let f = |x| ml_outage_given_rho2(c, r, x).unwrap().value;
            let d = (f(s + h) - f(s - h)) / (2.0 * h);
            assert!(d.abs() * s <= 1e-6 * f(s).max(1e-12) * s.max(1.0), "c={c} r={r} d={d}");
        }
        assert!(rho2_star(5.0, 5.0).is_err());
    }

    #[test]
    fn ml_worst_case_is_max_of_fixed_rho2_outage() {
        for c in [8.0, 14.0] {
            for dc in [0.5, 1.0, 2.0, 4.0] {
                let r = c - dc;
                let (_, grid_max) = grid_argmax(c, r);
                let star = ml_outage_given_rho2(c, r, rho2_star(c, r).unwrap()).unwrap().value;
                let wc = ml_worst_case_outage(dc).unwrap().value;
                assert!((star - wc).abs() < 1e-9);
                assert!(grid_max <= wc + 1e-12 && wc - grid_max < 1e-6);
            }
        }
    }

    #[test]
    fn simple_upper_above_ml_worst_case() {
        for c in [8.0, 14.0, 20.0] {
            for i in 1..40 {
                let dc = 1.0 + 0.25 * i as f64;
                let _ = c;
                assert!(ml_worst_case_outage(dc).unwrap().value <= if_sic_upper_simple(dc).unwrap().value);
            }
        }
    }

    #[test]
    fn two_user_mac_values() {
        assert!((mac2_outage_given_c(2.0, 2.0).unwrap().value - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(mac2_outage_given_c(5.0, 0.0).unwrap().value, 0.0);
        assert!((mac2_outage_given_c(10.0, 8.0).unwrap().value - 30.0 / 1023.0).abs() < 1e-15);
        assert!(mac2_outage_given_c(2.0, 3.0).is_err());
    }

    #[test]
    fn subset_law_matches_two_user_form_exactly() {
        for (c, r) in [(2.0, 2.0), (10.0, 8.0), (7.5, 3.25), (14.0, 0.1)] {
            let half = mac_subset_outage(1, 2, r, c).unwrap().value;
            assert_eq!(2.0 * half, mac2_outage_given_c(c, r).unwrap().value);
        }
        assert_eq!(mac_subset_outage(2, 2, 3.0, 4.0).unwrap().value, 0.0);
        assert_eq!(mac_subset_outage(2, 2, 5.0, 4.0).unwrap().value, 1.0);
        assert_eq!(mac_subset_outage(1, 3, 0.0, 4.0).unwrap().value, 0.0);
        assert!(mac_subset_outage(0, 3, 1.0, 4.0).is_err());
    }

    #[test]
    fn mac_bound_examples() {
        let (lo, up) = mac_outage_bounds(2, 6.0, 8.0).unwrap();
        assert!((up.value - mac2_outage_given_c(8.0, 6.0).unwrap().value).abs() < 1e-15);
        assert!(lo.value <= up.value);
        for i in 0..=16 {
            let r = 8.0 * i as f64 / 16.0;
            let (lo, up) = mac_outage_bounds(4, r, 8.0).unwrap();
            assert!(lo.value <= up.value && up.value <= 1.0);
        }
        assert!(mac_outage_bounds(1, 1.0, 2.0).is_err());
    }

    #[test]
    fn bounds_monotone_in_rate() {
        let c = 8.0;
        let mut prev = (0.0, 0.0, 0.0, 0.0);
        for i in 0..=32 {
            let r = c * i as f64 / 32.0;
            let a = mac2_outage_given_c(c, r).unwrap().value;
            let (lo, up) = mac_outage_bounds(4, r, c).unwrap();
            let m = mac_subset_outage(2, 4, r, c).unwrap().value;
            assert!(a >= prev.0 && lo.value >= prev.1 && up.value >= prev.2 && m >= prev.3);
            prev = (a, lo.value, up.value, m);
        }
    }

    fn fast_cfg() -> QuadConfig {
        QuadConfig { nodes: 64, rho_grid: 64, mc_samples: 20_000, ..QuadConfig::default() }
    }

    #[test]
    fn st_single_extension_equals_ml_worst_case() {
        for dc in [1.0, 2.0, 4.0] {
            let b = st_lower_bound(14.0, 14.0 - dc, 1, &QuadConfig::default()).unwrap();
            let wc = ml_worst_case_outage(dc).unwrap().value;
            assert!((b.bound.value - wc).abs() <= 2.0 * b.bound.abs_error.max(1e-12), "{b:?} vs {wc}");
            assert_eq!(b.k, 1);
        }
    }

    #[test]
    fn st_zero_rate() {
        assert_eq!(st_lower_bound(14.0, 0.0, 2, &fast_cfg()).unwrap().bound.value, 0.0);
    }

    #[test]
    fn st_two_extensions_below_ml_worst_case() {
        let b = st_lower_bound(14.0, 11.0, 2, &fast_cfg()).unwrap();
        assert!(b.bound.value <= ml_worst_case_outage(3.0).unwrap().value);
        assert!(b.bound.value > 0.0);
    }

    #[test]
    fn two_dim_region_matches_monte_carlo() {
        let spec = StRegionSpec::new(2, 2, 7.0, 60.0, 3.0).unwrap();
        let quad = st_subset_outage(&spec, &QuadConfig::default()).unwrap();
        assert_eq!(quad.method, BoundMethod::Quadrature);
        let law = spec.law().unwrap();
        let cfg = QuadConfig { mc_samples: 50_000, ..QuadConfig::default() };
        let mc = mc_region(&spec, &jacobi_samples(law, &cfg));
        assert!((quad.value - mc.value).abs() < 4.0 * mc.abs_error + 1e-9, "{quad:?} {mc:?}");
    }

    #[test]
    fn two_dim_full_region_is_one() {
        let spec = StRegionSpec::new(2, 2, 1e3, 60.0, 3.0).unwrap();
        let v = st_subset_outage(&spec, &QuadConfig::default()).unwrap().value;
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn complementary_threshold() {
        let spec = StRegionSpec::new(2, 4, 8.0, 15.0, 15.0).unwrap();
        assert!(spec.law().is_none());
        assert_eq!(st_subset_outage(&spec, &fast_cfg()).unwrap().value, 0.0);
        let spec = StRegionSpec::new(2, 3, 8.0, 15.0, 15.0).unwrap();
        // C = 8, threshold 2^{12 − 8} = 16 = (1+ρ)^1 exactly at the boundary.
        assert!((spec.log2_threshold() - 4.0).abs() < 1e-12);
        assert!(StRegionSpec::new(2, 5, 8.0, 15.0, 15.0).is_err());
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1.0, 16.0, 5);
        assert_eq!(g.len(), 5);
        assert!((g[2] - 4.0).abs() < 1e-12 && (g[4] - 16.0).abs() < 1e-12);
    }
}
