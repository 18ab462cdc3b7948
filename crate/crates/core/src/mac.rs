//! Rayleigh fading multiple-access channel with single-antenna users.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::sphere_from_rng;
use crate::error::{domain, shape, Result};
use crate::integer_forcing::{if_plain_rate, if_sic_rate, IfRateResult, SearchConfig};
use crate::linalg::{complex_to_real, CMatrix, RMatrix};
use crate::montecarlo::{OutageEstimate, Receiver};
use crate::precoders::{badr_belfiore, Precoder, PrecoderLabel};
use crate::rng::{complex_gaussian, RngSeed};

/// Subset enumeration is over `2^n_t − 1` subsets.
pub const MAX_USERS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct MacChannel {
    /// Per-user gains with the SNR absorbed.
    pub h: Vec<Complex64>,
    pub snr: f64,
}

impl MacChannel {
    pub fn new(h: Vec<Complex64>, snr: f64) -> Result<Self> {
        if h.is_empty() || h.len() > MAX_USERS {
            return Err(shape(format!("need 1..={MAX_USERS} users, got {}", h.len())));
        }
        if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(crate::Error::NonFinite("channel gain".into()));
        }
        Ok(Self { h, snr })
    }

    pub fn n_t(&self) -> usize {
        self.h.len()
    }

    /// The channel as a `1 × n_t` matrix.
    pub fn row(&self) -> CMatrix {
        CMatrix::from_row_slice(1, self.h.len(), &self.h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacRates {
    pub c_sum: f64,
    /// Symmetric-rate capacity, expressed as a total rate.
    pub c_sym: f64,
    /// Bit mask of the subset attaining the minimum (lowest mask on ties).
    pub bottleneck_subset: u32,
}

impl MacRates {
    pub fn bottleneck_is_full_set(&self, n_t: usize) -> bool {
        self.bottleneck_subset == (1u32 << n_t) - 1
    }
}

pub fn sample_rayleigh_mac_from_rng<R: Rng + ?Sized>(n_t: usize, snr: f64, rng: &mut R) -> Result<MacChannel> {
    if !(snr > 0.0) || !snr.is_finite() {
        return Err(domain(format!("snr must be positive, got {snr}")));
    }
    let a = snr.sqrt();
    MacChannel::new((0..n_t).map(|_| complex_gaussian(rng) * a).collect(), snr)
}

/// `h_i ~ √snr · CN(0, 1)`, independent.
pub fn sample_rayleigh_mac(n_t: usize, snr: f64, seed: RngSeed) -> Result<MacChannel> {
    sample_rayleigh_mac_from_rng(n_t, snr, &mut seed.rng())
}

/// `c_sum = log₂(1 + Σ|h_i|²)` and
/// `c_sym = min_S (n_t/|S|) log₂(1 + Σ_{i∈S}|h_i|²)`.
pub fn mac_rates(ch: &MacChannel) -> MacRates {
    let g: Vec<f64> = ch.h.iter().map(|z| z.norm_sqr()).collect();
    let n = g.len();
    let mut best = (f64::INFINITY, 0u32);
    for mask in 1u32..(1u32 << n) {
        let (mut s, mut k) = (0.0, 0u32);
        for (i, gi) in g.iter().enumerate() {
            if mask >> i & 1 == 1 {
                s += gi;
                k += 1;
            }
        }
        let v = n as f64 / k as f64 * s.ln_1p() / std::f64::consts::LN_2;
        if v < best.0 {
            best = (v, mask);
        }
    }
    let c_sum = g.iter().sum::<f64>().ln_1p() / std::f64::consts::LN_2;
    MacRates { c_sum, c_sym: best.0.min(c_sum), bottleneck_subset: best.1 }
}

/// Gains uniformly distributed on the sphere `Σ|h_i|² = 2^C − 1`.
fn channel_given_c<R: Rng + ?Sized>(n_t: usize, c: f64, rng: &mut R) -> Result<MacChannel> {
    MacChannel::new(sphere_from_rng(n_t, c, rng), f64::NAN)
}

fn check_given_c(n_t: usize, c: f64, trials: usize) -> Result<()> {
    if !(2..=MAX_USERS).contains(&n_t) {
        return Err(domain(format!("need 2..={MAX_USERS} users, got {n_t}")));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(domain(format!("sum capacity must be positive, got {c}")));
    }
    if trials == 0 {
        return Err(domain("trials must be at least 1"));
    }
    Ok(())
}

/// Symmetric-rate capacities of `trials` channels conditioned on the sum
/// capacity `c`; trial `i` uses stream `i` of `seed`.
pub fn sym_rates_given_c(n_t: usize, c: f64, trials: usize, seed: u64) -> Result<Vec<MacRates>> {
    check_given_c(n_t, c, trials)?;
    (0..trials as u64)
        .into_par_iter()
        .map(|i| Ok(rates_given_c(&channel_given_c(n_t, c, &mut RngSeed::new(seed, i).rng())?, c)))
        .collect()
}

/// [`mac_rates`] with the sum capacity known to be exactly `c`, so that a
/// full-set bottleneck gives `c_sym = c` without rounding.
fn rates_given_c(ch: &MacChannel, c: f64) -> MacRates {
    let mut m = mac_rates(ch);
    m.c_sum = c;
    if m.bottleneck_is_full_set(ch.n_t()) {
        m.c_sym = c;
    }
    m.c_sym = m.c_sym.min(c);
    m
}

/// Estimate of `P(C_sym < R | C)`.
pub fn sym_outage_given_c(n_t: usize, c: f64, r: f64, trials: usize, seed: u64) -> Result<OutageEstimate> {
    Ok(sym_outage_curve_given_c(n_t, c, &[r], trials, seed)?.remove(0))
}

/// [`sym_outage_given_c`] at several rates on common draws.
pub fn sym_outage_curve_given_c(n_t: usize, c: f64, rates: &[f64], trials: usize, seed: u64) -> Result<Vec<OutageEstimate>> {
    if rates.iter().any(|r| !(*r >= 0.0)) {
        return Err(domain("rates must be non-negative"));
    }
    let draws = sym_rates_given_c(n_t, c, trials, seed)?;
    Ok(rates
        .iter()
        .map(|&r| {
            let hits = draws.iter().filter(|m| m.c_sym < r).count();
            OutageEstimate::from_count(hits, trials, Receiver::Ml, None, seed)
        })
        .collect())
}

/// Density of `C_sym | C` on `[0, C)` plus the point mass at `C_sym = C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymCapacityPdf {
    pub c: f64,
    /// `bins + 1` edges spanning `[0, C]`.
    pub bin_edges: Vec<f64>,
    pub density: Vec<f64>,
    pub atom: f64,
    pub atom_stderr: f64,
    pub trials: usize,
}

impl SymCapacityPdf {
    /// Histogram mass plus the atom.
    pub fn total_mass(&self) -> f64 {
        let w = self.bin_edges.windows(2).map(|e| e[1] - e[0]);
        self.density.iter().zip(w).map(|(d, w)| d * w).sum::<f64>() + self.atom
    }
}

/// A trial lands in the atom exactly when its bottleneck subset is the full
/// set of users.
pub fn sym_capacity_pdf_data(n_t: usize, c: f64, trials: usize, bins: usize, seed: u64) -> Result<SymCapacityPdf> {
    if bins == 0 {
        return Err(domain("need at least one bin"));
    }
    let draws = sym_rates_given_c(n_t, c, trials, seed)?;
    let width = c / bins as f64;
    let mut counts = vec![0usize; bins];
    let mut atom = 0usize;
    for m in &draws {
        if m.bottleneck_is_full_set(n_t) {
            atom += 1;
        } else {
            let b = ((m.c_sym / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
    }
    let n = trials as f64;
    let bin_edges = (0..=bins).map(|i| c * i as f64 / bins as f64).collect();
    let density = counts.iter().map(|&k| k as f64 / (n * width)).collect();
    let p = atom as f64 / n;
    Ok(SymCapacityPdf {
        c,
        bin_edges,
        density,
        atom: p,
        atom_stderr: crate::stats::binomial_stderr(p, trials),
        trials,
    })
}

/// Per-user precoders for a label: `none` gives one identity per user with
/// `T = 1`, `badr-belfiore` the two-user code over `T = 2`.
pub fn mac_precoders(label: PrecoderLabel, n_t: usize) -> Result<Vec<Precoder>> {
    match label {
        PrecoderLabel::None => Ok(vec![Precoder::identity(1); n_t]),
        PrecoderLabel::BadrBelfiore if n_t == 2 => {
            let (a, b) = badr_belfiore();
            Ok(vec![a, b])
        }
        PrecoderLabel::BadrBelfiore => Err(domain(format!("badr-belfiore needs exactly two users, got {n_t}"))),
        other => Err(domain(format!("{other} is not a multiple-access precoder (use none or badr-belfiore)"))),
    }
}

/// Real effective channel of the users' precoded streams over `T` slots.
/// User `i` sends `p_i` on its own antenna, so its block is
/// `real(h_i I_T) · map_i`. Columns are reordered to
/// `[Re of all symbols, Im of all symbols]`.
pub fn distributed_effective_channel(ch: &MacChannel, precoders: &[Precoder]) -> Result<RMatrix> {
    if precoders.len() != ch.n_t() {
        return Err(shape(format!("{} precoders for {} users", precoders.len(), ch.n_t())));
    }
    let t = precoders[0].t();
    if precoders.iter().any(|p| p.t() != t || p.n_t() != 1) {
        return Err(shape("per-user precoders must be single-antenna and share T"));
    }
    let mut re_cols = Vec::new();
    let mut im_cols = Vec::new();
    for (h, p) in ch.h.iter().zip(precoders) {
        let block = complex_to_real(&CMatrix::from_diagonal_element(t, t, *h)) * p.map() * p.power_gain();
        let m = p.n_symbols() / 2;
        re_cols.extend((0..m).map(|j| block.column(j).into_owned()));
        im_cols.extend((m..2 * m).map(|j| block.column(j).into_owned()));
    }
    re_cols.extend(im_cols);
    Ok(RMatrix::from_columns(&re_cols))
}

/// IF-SIC rate of the distributed code, normalised per channel use.
pub fn distributed_if_rate(ch: &MacChannel, precoders: &[Precoder], cfg: &SearchConfig) -> Result<IfRateResult> {
    let eff = distributed_effective_channel(ch, precoders)?;
    if_sic_rate(&eff, precoders[0].t(), cfg)
}

/// Total rate achieved by `receiver` on the multiple-access channel.
/// Joint decoding achieves the symmetric-rate capacity with or without
/// per-user precoding.
pub fn mac_receiver_rate(ch: &MacChannel, precoders: &[Precoder], receiver: Receiver, cfg: &SearchConfig) -> Result<f64> {
    match receiver {
        Receiver::Ml => Ok(mac_rates(ch).c_sym),
        Receiver::IfSic => Ok(distributed_if_rate(ch, precoders, cfg)?.rate_bits),
        Receiver::If => {
            let eff = distributed_effective_channel(ch, precoders)?;
            Ok(if_plain_rate(&eff, precoders[0].t(), cfg)?.rate_bits)
        }
    }
}

/// Outage of `receiver` at each rate, conditioned on sum capacity `c`,
/// with common draws across rates.
#[allow(clippy::too_many_arguments)]
pub fn mac_outage_given_c(
    n_t: usize,
    c: f64,
    rates: &[f64],
    label: PrecoderLabel,
    receiver: Receiver,
    cfg: &SearchConfig,
    trials: usize,
    seed: u64,
) -> Result<Vec<OutageEstimate>> {
    check_given_c(n_t, c, trials)?;
    let pre = mac_precoders(label, n_t)?;
    let achieved: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let ch = channel_given_c(n_t, c, &mut RngSeed::new(seed, i).rng())?;
            mac_receiver_rate(&ch, &pre, receiver, cfg)
        })
        .collect::<Result<_>>()?;
    let tag = (receiver != Receiver::Ml).then_some(cfg.method);
    Ok(rates
        .iter()
        .map(|&r| OutageEstimate::from_count(achieved.iter().filter(|&&x| x < r).count(), trials, receiver, tag, seed))
        .collect())
}

/// Conditional means in one sum-capacity bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErgodicRow {
    pub c_sum_lo: f64,
    pub c_sum_hi: f64,
    pub count: usize,
    pub mean_rate: f64,
    pub mean_c_sym: f64,
    /// `mean_rate / mean_c_sym`.
    pub fraction: f64,
}

/// Rayleigh draws at every SNR in `snr_grid` (`trials` each), binned by
/// sum capacity into bins of width `bin_width`; empty bins are dropped.
/// The fraction is the ratio of the conditional means.
#[allow(clippy::too_many_arguments)]
pub fn ergodic_fraction_data(
    n_t: usize,
    snr_grid: &[f64],
    receiver: Receiver,
    label: PrecoderLabel,
    cfg: &SearchConfig,
    trials: usize,
    bin_width: f64,
    seed: u64,
) -> Result<Vec<ErgodicRow>> {
    if trials == 0 || snr_grid.is_empty() {
        return Err(domain("need at least one trial and one SNR"));
    }
    if !(bin_width > 0.0) {
        return Err(domain(format!("bin width must be positive, got {bin_width}")));
    }
    let pre = mac_precoders(label, n_t)?;
    let total = trials * snr_grid.len();
    let samples: Vec<(f64, f64, f64)> = (0..total as u64)
        .into_par_iter()
        .map(|i| {
            let snr = snr_grid[i as usize / trials];
            let ch = sample_rayleigh_mac(n_t, snr, RngSeed::new(seed, i))?;
            let m = mac_rates(&ch);
            Ok((m.c_sum, m.c_sym, mac_receiver_rate(&ch, &pre, receiver, cfg)?))
        })
        .collect::<Result<_>>()?;
    let nbins = samples.iter().map(|s| (s.0 / bin_width) as usize).max().unwrap_or(0) + 1;
    let mut acc = vec![(0usize, 0.0, 0.0); nbins];
    for &(c, sym, rate) in &samples {
        let b = &mut acc[(c / bin_width) as usize];
        b.0 += 1;
        b.1 += rate;
        b.2 += sym;
    }
    Ok(acc
        .iter()
        .enumerate()
        .filter(|(_, a)| a.0 > 0)
        .map(|(i, &(count, rate, sym))| {
            let n = count as f64;
            let fraction = if sym > 0.0 { rate / sym } else { 1.0 };
            ErgodicRow {
                c_sum_lo: i as f64 * bin_width,
                c_sum_hi: (i + 1) as f64 * bin_width,
                count,
                mean_rate: rate / n,
                mean_c_sym: sym / n,
                fraction,
            }
        })
        .collect())
}
