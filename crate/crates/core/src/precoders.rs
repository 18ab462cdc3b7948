//! Space and space-time precoders as real-orthonormal symbol maps.
//!
//! A precoder for `n_t` antennas over `t` channel uses is an
//! `2·n_t·t × n_symbols` real matrix with orthonormal columns. Rows follow
//! the real embedding of the time-extended transmit vector,
//! `[Re x; Im x]` with `x[slot·n_t + antenna]`. Columns carry
//! `[Re s_1 … Re s_m, Im s_1 … Im s_m]` for `m = n_symbols / 2` complex
//! symbols.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ensembles::{cue_from_rng, UnitaryMatrix};
use crate::error::{domain, shape, Error, Result};
use crate::linalg::{complex_to_real, time_extend, CMatrix, RMatrix};

/// Tolerance on `mapᵀ map = I`.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrecoderKind {
    CueSpace,
    CueSpaceTime,
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Precoder {
    kind: PrecoderKind,
    t: usize,
    n_symbols: usize,
    map: RMatrix,
    label: String,
}

impl Precoder {
    /// Wraps a real map after checking its shape and orthonormality.
    pub fn new(kind: PrecoderKind, t: usize, map: RMatrix, label: impl Into<String>) -> Result<Self> {
        if t == 0 {
            return Err(domain("time extension must be at least 1"));
        }
        let (rows, cols) = map.shape();
        if rows == 0 || rows % (2 * t) != 0 || cols == 0 || cols % 2 != 0 || cols > rows {
            return Err(shape(format!("precoder map of shape {rows}×{cols} does not fit T = {t}")));
        }
        let defect = orthonormality_defect(&map);
        if defect > ORTHONORMAL_TOLERANCE {
            return Err(Error::Domain(format!("precoder columns not orthonormal (defect {defect:.3e})")));
        }
        Ok(Self { kind, t, n_symbols: cols, map, label: label.into() })
    }

    /// `n × n` complex identity, no precoding.
    pub fn identity(n_t: usize) -> Self {
        let map = RMatrix::identity(2 * n_t, 2 * n_t);
        Self { kind: PrecoderKind::Fixed, t: 1, n_symbols: 2 * n_t, map, label: "none".into() }
    }

    pub fn kind(&self) -> PrecoderKind {
        self.kind
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn n_t(&self) -> usize {
        self.map.nrows() / (2 * self.t)
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn map(&self) -> &RMatrix {
        &self.map
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_full_rate(&self) -> bool {
        self.n_symbols == self.map.nrows()
    }

    /// Amplitude gain that keeps the transmit power at `n_t` per channel use
    /// when only `n_symbols` of the `2 n_t t` real dimensions are used.
    pub fn power_gain(&self) -> f64 {
        (self.map.nrows() as f64 / self.n_symbols as f64).sqrt()
    }

    /// Precedes this code with the same unitary `u` on the antennas in every
    /// slot, i.e. replaces the map by `real(I_t ⊗ u) · map`.
    pub fn with_physical_rotation(&self, u: &UnitaryMatrix) -> Result<Self> {
        if u.dim() != self.n_t() {
            return Err(shape(format!("rotation of dimension {} for {} antennas", u.dim(), self.n_t())));
        }
        let big = complex_to_real(&time_extend(u.as_matrix(), self.t)?);
        Ok(Self { map: big * &self.map, label: format!("{}+cue", self.label), ..self.clone() })
    }
}

/// `max |mapᵀ map − I|`.
pub fn orthonormality_defect(map: &RMatrix) -> f64 {
    let g = map.transpose() * map;
    let n = g.nrows();
    (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (g[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max)
}

fn from_unitary(u: UnitaryMatrix, kind: PrecoderKind, t: usize, label: &str) -> Precoder {
    let map = complex_to_real(u.as_matrix());
    Precoder { kind, t, n_symbols: map.ncols(), map, label: label.into() }
}

/// Space-only CUE precoder.
pub fn cue_space<R: Rng + ?Sized>(n_t: usize, rng: &mut R) -> Result<Precoder> {
    if n_t == 0 {
        return Err(domain("need at least one transmit antenna"));
    }
    Ok(from_unitary(cue_from_rng(n_t, rng), PrecoderKind::CueSpace, 1, "cue"))
}

/// CUE precoder over `n_t · t` space-time dimensions.
pub fn cue_space_time<R: Rng + ?Sized>(n_t: usize, t: usize, rng: &mut R) -> Result<Precoder> {
    if n_t == 0 || t == 0 {
        return Err(domain("need n_t >= 1 and t >= 1"));
    }
    Ok(from_unitary(cue_from_rng(n_t * t, rng), PrecoderKind::CueSpaceTime, t, "cue-st"))
}

/// Alamouti code: slot 1 sends `(s₁, s₂)`, slot 2 sends `(−s₂*, s₁*)`.
/// Two complex symbols over two antennas and two slots, so the map is 8×4.
pub fn alamouti() -> Precoder {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    // Rows: Re x0..x3 then Im x0..x3, x[slot·2 + antenna].
    // Columns: Re s1, Re s2, Im s1, Im s2.
    let mut m = RMatrix::zeros(8, 4);
    m[(0, 0)] = h; // Re x0 = Re s1
    m[(4, 2)] = h; // Im x0 = Im s1
    m[(1, 1)] = h; // Re x1 = Re s2
    m[(5, 3)] = h; // Im x1 = Im s2
    m[(2, 1)] = -h; // Re x2 = −Re s2
    m[(6, 3)] = h; // Im x2 = Im s2
    m[(3, 0)] = h; // Re x3 = Re s1
    m[(7, 2)] = -h; // Im x3 = −Im s1
    Precoder { kind: PrecoderKind::Fixed, t: 2, n_symbols: 4, map: m, label: "alamouti".into() }
}

fn golden_constants() -> (f64, f64, Complex64, Complex64) {
    let theta = (1.0 + 5f64.sqrt()) / 2.0;
    let theta_bar = 1.0 - theta;
    let alpha = Complex64::new(1.0, 1.0 - theta);
    let alpha_bar = Complex64::new(1.0, 1.0 - theta_bar);
    (theta, theta_bar, alpha, alpha_bar)
}

/// Complex 4×4 generator of the golden code, codeword
/// `X = (1/√5) [[α(a+bθ), α(c+dθ)], [iᾱ(c+dθ̄), ᾱ(a+bθ̄)]]`
/// (rows antennas, columns slots) vectorised as `x[slot·2 + antenna]`.
pub fn golden_generator() -> CMatrix {
    let (theta, theta_bar, alpha, alpha_bar) = golden_constants();
    let s = 1.0 / 5f64.sqrt();
    let i = Complex64::i();
    let z = Complex64::new(0.0, 0.0);
    // Symbol order a, b, c, d.
    let rows = [
        // slot 0, antenna 0: α(a + bθ)
        [alpha, alpha * theta, z, z],
        // slot 0, antenna 1: iᾱ(c + dθ̄)
        [z, z, i * alpha_bar, i * alpha_bar * theta_bar],
        // slot 1, antenna 0: α(c + dθ)
        [z, z, alpha, alpha * theta],
        // slot 1, antenna 1: ᾱ(a + bθ̄)
        [alpha_bar, alpha_bar * theta_bar, z, z],
    ];
    CMatrix::from_fn(4, 4, |r, c| rows[r][c] * s)
}

/// Golden-code codeword for four complex symbols, as a 2×2 matrix with rows
/// indexing antennas and columns slots.
pub fn golden_codeword(sym: [Complex64; 4]) -> CMatrix {
    let g = golden_generator();
    let x: Vec<Complex64> = (0..4).map(|r| (0..4).map(|c| g[(r, c)] * sym[c]).sum()).collect();
    CMatrix::from_fn(2, 2, |ant, slot| x[slot * 2 + ant])
}

pub fn golden_code() -> Precoder {
    let u = UnitaryMatrix::new(golden_generator()).expect("golden generator is unitary");
    from_unitary(u, PrecoderKind::Fixed, 2, "golden")
}

/// Per-user 2×2 complex matrices of the two-user distributed code,
/// `P¹ = (1/√5)[[α, αφ], [ᾱ, ᾱφ̄]]` and `P²` equal to `P¹` with the first
/// row multiplied by `i`. Rows index slots, columns the user's two symbols.
pub fn badr_belfiore_matrices() -> (CMatrix, CMatrix) {
    let (phi, phi_bar, alpha, alpha_bar) = golden_constants();
    let s = 1.0 / 5f64.sqrt();
    let p1 = CMatrix::from_row_slice(2, 2, &[alpha * s, alpha * phi * s, alpha_bar * s, alpha_bar * phi_bar * s]);
    let mut p2 = p1.clone();
    p2[(0, 0)] *= Complex64::i();
    p2[(0, 1)] *= Complex64::i();
    (p1, p2)
}

/// Single-antenna precoders for two users over two slots.
pub fn badr_belfiore() -> (Precoder, Precoder) {
    let (p1, p2) = badr_belfiore_matrices();
    let mk = |p: CMatrix| {
        let u = UnitaryMatrix::new(p).expect("Badr-Belfiore matrices are unitary");
        from_unitary(u, PrecoderKind::Fixed, 2, "badr-belfiore")
    };
    (mk(p1), mk(p2))
}

/// Real effective channel `real(I_t ⊗ h) · map`, scaled by
/// [`Precoder::power_gain`] so rate-deficient codes use the full power.
pub fn apply_precoder(h: &CMatrix, p: &Precoder) -> Result<RMatrix> {
    if 2 * h.ncols() * p.t != p.map.nrows() {
        return Err(shape(format!(
            "channel with {} transmit antennas does not match a {}-row precoder over T = {}",
            h.ncols(),
            p.map.nrows(),
            p.t
        )));
    }
    let big = complex_to_real(&time_extend(h, p.t)?);
    let mut out = big * &p.map;
    let g = p.power_gain();
    if g != 1.0 {
        out *= g;
    }
    Ok(out)
}

/// Precoder families selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrecoderLabel {
    None,
    Cue,
    CueSt,
    Alamouti,
    Golden,
    BadrBelfiore,
}

impl PrecoderLabel {
    pub const ALL: [PrecoderLabel; 6] = [
        PrecoderLabel::None,
        PrecoderLabel::Cue,
        PrecoderLabel::CueSt,
        PrecoderLabel::Alamouti,
        PrecoderLabel::Golden,
        PrecoderLabel::BadrBelfiore,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PrecoderLabel::None => "none",
            PrecoderLabel::Cue => "cue",
            PrecoderLabel::CueSt => "cue-st",
            PrecoderLabel::Alamouti => "alamouti",
            PrecoderLabel::Golden => "golden",
            PrecoderLabel::BadrBelfiore => "badr-belfiore",
        }
    }

    /// True when a fresh precoder must be drawn for every trial.
    pub fn is_random(&self) -> bool {
        matches!(self, PrecoderLabel::Cue | PrecoderLabel::CueSt)
    }

    /// Builds a point-to-point precoder for `n_t` antennas and `t` slots.
    /// The MAC code has no point-to-point form.
    pub fn build<R: Rng + ?Sized>(&self, n_t: usize, t: usize, rng: &mut R) -> Result<Precoder> {
        let need = |nt: usize, tt: usize| -> Result<()> {
            if n_t != nt || t != tt {
                return Err(domain(format!("{} needs n_t = {nt} and t = {tt}, got n_t = {n_t}, t = {t}", self)));
            }
            Ok(())
        };
        match self {
            PrecoderLabel::None => {
                need(n_t, 1)?;
                Ok(Precoder::identity(n_t))
            }
            PrecoderLabel::Cue => {
                need(n_t, 1)?;
                cue_space(n_t, rng)
            }
            PrecoderLabel::CueSt => cue_space_time(n_t, t, rng),
            PrecoderLabel::Alamouti => {
                need(2, 2)?;
                Ok(alamouti())
            }
            PrecoderLabel::Golden => {
                need(2, 2)?;
                Ok(golden_code())
            }
            PrecoderLabel::BadrBelfiore => {
                Err(domain("badr-belfiore is a per-user multiple-access code, not a point-to-point precoder"))
            }
        }
    }
}

impl fmt::Display for PrecoderLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PrecoderLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| domain(format!("unknown precoder '{s}' (expected one of none, cue, cue-st, alamouti, golden, badr-belfiore)")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::sample_cue;
    use crate::integer_forcing::{if_sic_rate, ml_rate_real, SearchConfig};
    use crate::linalg::{singular_values, wi_capacity, CompoundChannel};
    use crate::rng::{complex_gaussian, RngSeed};
    use crate::stats::ks_two_sample;

    fn random_channel(n_r: usize, n_t: usize, seed: u64) -> CMatrix {
        let mut rng = RngSeed::new(seed, 0).rng();
        CMatrix::from_fn(n_r, n_t, |_, _| complex_gaussian(&mut rng) * 3.0)
    }

    /// Real-embedded capacity per channel use: `(1/2T) log₂det(I + HᵀH)`.
    fn real_wi(h_real: &RMatrix, t: usize) -> f64 {
        let n = h_real.ncols();
        let g = RMatrix::identity(n, n) + h_real.transpose() * h_real;
        let l = crate::linalg::cholesky_lower(&g).unwrap();
        (0..n).map(|i| l[(i, i)].log2()).sum::<f64>() / t as f64
    }

    #[test]
    fn all_maps_orthonormal() {
        let mut rng = RngSeed::new(1, 0).rng();
        let mut ps = vec![alamouti(), golden_code(), badr_belfiore().0, badr_belfiore().1, Precoder::identity(3)];
        ps.push(cue_space(3, &mut rng).unwrap());
        ps.push(cue_space_time(2, 3, &mut rng).unwrap());
        for p in ps {
            assert!(orthonormality_defect(p.map()) <= ORTHONORMAL_TOLERANCE, "{}", p.label());
        }
    }

    #[test]
    fn identity_is_plain_embedding() {
        let h = random_channel(2, 2, 3);
        assert_eq!(apply_precoder(&h, &Precoder::identity(2)).unwrap(), complex_to_real(&h));
    }

    #[test]
    fn full_rate_precoders_keep_capacity() {
        let h = random_channel(2, 2, 7);
        let c = wi_capacity(&h);
        let mut rng = RngSeed::new(2, 0).rng();
        for p in [cue_space(2, &mut rng).unwrap(), cue_space_time(2, 3, &mut rng).unwrap(), golden_code()] {
            let eff = apply_precoder(&h, &p).unwrap();
            assert!((real_wi(&eff, p.t()) - c).abs() < 1e-8, "{}", p.label());
        }
    }

    #[test]
    fn precoders_are_deterministic() {
        assert_eq!(golden_code(), golden_code());
        assert_eq!(alamouti(), alamouti());
        let a = cue_space_time(2, 2, &mut RngSeed::new(9, 4).rng()).unwrap();
        let b = cue_space_time(2, 2, &mut RngSeed::new(9, 4).rng()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cue_singular_values_ignore_right_rotation() {
        // Effective singular values of H V P with P ~ CUE do not depend on V.
        let h = random_channel(2, 2, 11);
        let v = sample_cue(2, RngSeed::new(12, 0));
        let hv = &h * v.as_matrix();
        let n = 3000;
        let (mut a, mut b) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for i in 0..n as u64 {
            let p = sample_cue(2, RngSeed::new(13, i));
            let q = sample_cue(2, RngSeed::new(14, i));
            a.push(singular_values(&(&h * p.as_matrix()).columns(0, 1).into_owned())[0]);
            b.push(singular_values(&(&hv * q.as_matrix()).columns(0, 1).into_owned())[0]);
        }
        let (_, p) = ks_two_sample(&a, &b);
        assert!(p > 1e-3, "p = {p}");
    }

    #[test]
    fn alamouti_effective_channel_is_orthogonal() {
        for seed in 0..20 {
            let h = random_channel(1, 2, seed);
            let eff = apply_precoder(&h, &alamouti()).unwrap();
            let g = eff.transpose() * &eff;
            let norm: f64 = h.iter().map(|z| z.norm_sqr()).sum();
            // Power gain √2 and 1/√2 per slot cancel: Gram = ‖h‖² I.
            let target = RMatrix::identity(4, 4) * norm;
            assert!((g - target).abs().max() < 1e-10 * norm.max(1.0));
        }
    }

    #[test]
    fn alamouti_if_sic_equals_ml_on_diagonal_channel() {
        let ch = CompoundChannel::two_mode(8.0, 3.0).unwrap();
        let h = ch.diag_matrix(2).unwrap();
        let eff = apply_precoder(&h, &alamouti()).unwrap();
        let sic = if_sic_rate(&eff, 2, &SearchConfig::default()).unwrap().rate_bits;
        let ml = ml_rate_real(&eff, 2).unwrap();
        assert!((sic - ml).abs() < 1e-9, "{sic} vs {ml}");
    }

    #[test]
    fn golden_full_rate_and_nonvanishing_determinant() {
        let p = golden_code();
        assert!(p.is_full_rate());
        assert_eq!(p.n_symbols(), 2 * 2 * 2);
        let mut rng = RngSeed::new(21, 0).rng();
        let mut min_det = f64::INFINITY;
        for _ in 0..10_000 {
            let mut sym = [Complex64::new(0.0, 0.0); 4];
            loop {
                for s in sym.iter_mut() {
                    *s = Complex64::new(rng.random_range(-3..=3) as f64, rng.random_range(-3..=3) as f64);
                }
                if sym.iter().any(|z| z.norm_sqr() > 0.0) {
                    break;
                }
            }
            let x = golden_codeword(sym);
            let d = (x[(0, 0)] * x[(1, 1)] - x[(0, 1)] * x[(1, 0)]).norm_sqr();
            min_det = min_det.min(d);
        }
        assert!(min_det >= 1.0 / 5.0 - 1e-9, "{min_det}");
    }

    #[test]
    fn badr_belfiore_identities() {
        let (phi, phi_bar, alpha, alpha_bar) = golden_constants();
        assert!((alpha.norm_sqr() * (1.0 + phi * phi) - 5.0).abs() < 1e-12);
        assert!((alpha_bar.norm_sqr() * (1.0 + phi_bar * phi_bar) - 5.0).abs() < 1e-12);
        assert!((1.0 + phi * phi_bar).abs() < 1e-12);
        let (p1, p2) = badr_belfiore_matrices();
        for p in [&p1, &p2] {
            let g = p.adjoint() * p;
            assert!((g - CMatrix::identity(2, 2)).iter().all(|z| z.norm() < 1e-12));
        }
        assert!((p2[(1, 0)] - p1[(1, 0)]).norm() == 0.0);
        assert!((p2[(0, 1)] - p1[(0, 1)] * Complex64::i()).norm() < 1e-15);
    }

    #[test]
    fn physical_rotation_composes() {
        let u = sample_cue(2, RngSeed::new(5, 5));
        let p = golden_code().with_physical_rotation(&u).unwrap();
        assert!(orthonormality_defect(p.map()) < 1e-10);
        let h = random_channel(2, 2, 8);
        let direct = apply_precoder(&(&h * u.as_matrix()), &golden_code()).unwrap();
        assert!((apply_precoder(&h, &p).unwrap() - direct).abs().max() < 1e-10);
    }

    #[test]
    fn shape_and_label_errors() {
        let h = random_channel(2, 3, 1);
        assert!(matches!(apply_precoder(&h, &alamouti()), Err(Error::Shape(_))));
        for l in PrecoderLabel::ALL {
            assert_eq!(l.as_str().parse::<PrecoderLabel>().unwrap(), l);
        }
        assert!("stbc".parse::<PrecoderLabel>().is_err());
        let mut rng = RngSeed::new(0, 0).rng();
        assert!(PrecoderLabel::Alamouti.build(2, 1, &mut rng).is_err());
        assert!(PrecoderLabel::BadrBelfiore.build(1, 2, &mut rng).is_err());
        assert_eq!(PrecoderLabel::CueSt.build(2, 2, &mut rng).unwrap().n_symbols(), 8);
    }
}
