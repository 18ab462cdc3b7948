//! Outage experiments over the compound channel class.
//!
//! Every trial `i` draws its random precoder from stream `i` of the
//! experiment seed, and the same draw is reused for every `ρ₂`, rate and
//! receiver. Outage curves are therefore monotone in the rate sample by
//! sample, and results do not depend on the number of worker threads.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{log_grid, rho2_star};
use crate::ensembles::cue_from_rng;
use crate::error::{domain, Error, Result};
use crate::integer_forcing::{if_plain_rate, if_sic_rate, ml_rate_real, SearchConfig, SearchMethod};
use crate::linalg::{CompoundChannel, RMatrix};
use crate::precoders::{apply_precoder, Precoder, PrecoderLabel};
use crate::rng::RngSeed;
use crate::stats::binomial_stderr;

pub const DEFAULT_TRIALS: usize = 10_000;
pub const DEFAULT_RHO2_POINTS: usize = 64;
pub const BISECTION_STEPS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Receiver {
    If,
    IfSic,
    Ml,
}

impl Receiver {
    pub const ALL: [Receiver; 3] = [Receiver::If, Receiver::IfSic, Receiver::Ml];

    pub fn as_str(&self) -> &'static str {
        match self {
            Receiver::If => "if",
            Receiver::IfSic => "if-sic",
            Receiver::Ml => "ml",
        }
    }

    /// Rate in bits per complex channel use of a real effective channel
    /// spanning `t` channel uses.
    pub fn rate(&self, h_real: &RMatrix, t: usize, search: &SearchConfig) -> Result<f64> {
        match self {
            Receiver::If => Ok(if_plain_rate(h_real, t, search)?.rate_bits),
            Receiver::IfSic => Ok(if_sic_rate(h_real, t, search)?.rate_bits),
            Receiver::Ml => ml_rate_real(h_real, t),
        }
    }
}

impl fmt::Display for Receiver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Receiver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| domain(format!("unknown receiver '{s}' (expected if, if-sic or ml)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageEstimate {
    pub p_hat: f64,
    pub stderr: f64,
    pub trials: usize,
    pub receiver: Receiver,
    /// Integer-matrix search, absent for joint decoding.
    pub search: Option<SearchMethod>,
    pub seed: u64,
}

impl OutageEstimate {
    pub fn from_count(hits: usize, trials: usize, receiver: Receiver, search: Option<SearchMethod>, seed: u64) -> Self {
        let p_hat = hits as f64 / trials as f64;
        Self { p_hat, stderr: binomial_stderr(p_hat, trials), trials, receiver, search, seed }
    }
}

/// Everything needed to reproduce an outage experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub n_r: usize,
    pub n_t: usize,
    pub t: usize,
    pub capacity_bits: f64,
    /// Weak-mode SNRs of the compound class to search.
    pub rho2_grid: Vec<f64>,
    pub r_grid: Vec<f64>,
    pub precoder: PrecoderLabel,
    /// Rotate the physical antennas by a fresh CUE matrix in every trial
    /// before a fixed space-time code.
    pub cue_physical: bool,
    pub receiver: Receiver,
    pub trials: usize,
    pub seed: u64,
    pub search: SearchConfig,
}

impl ExperimentSpec {
    /// Defaults: `n_r = n_t`, `T` implied by the precoder, the default
    /// `ρ₂` grid and [`DEFAULT_TRIALS`] trials.
    pub fn new(n_t: usize, capacity_bits: f64, precoder: PrecoderLabel, receiver: Receiver) -> Self {
        let t = match precoder {
            PrecoderLabel::Alamouti | PrecoderLabel::Golden | PrecoderLabel::BadrBelfiore => 2,
            _ => 1,
        };
        Self {
            n_r: n_t,
            n_t,
            t,
            capacity_bits,
            rho2_grid: default_rho2_grid(n_t, capacity_bits, DEFAULT_RHO2_POINTS),
            r_grid: Vec::new(),
            precoder,
            cue_physical: false,
            receiver,
            trials: DEFAULT_TRIALS,
            seed: 0,
            search: SearchConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_t == 0 || self.n_r < self.n_t || self.t == 0 {
            return Err(domain(format!("need 1 <= n_t <= n_r and t >= 1, got n_t={}, n_r={}, t={}", self.n_t, self.n_r, self.t)));
        }
        if !(self.capacity_bits > 0.0) || !self.capacity_bits.is_finite() {
            return Err(domain(format!("capacity must be positive, got {}", self.capacity_bits)));
        }
        if self.trials == 0 {
            return Err(domain("trials must be at least 1"));
        }
        if self.rho2_grid.is_empty() {
            return Err(domain("ρ₂ grid is empty"));
        }
        let hi = self.rho2_max();
        if let Some(bad) = self.rho2_grid.iter().find(|&&r| !(r >= 0.0 && r <= hi * (1.0 + 1e-12) + 1e-12)) {
            return Err(domain(format!("ρ₂ = {bad} outside [0, {hi}]")));
        }
        if self.r_grid.iter().any(|r| !(*r >= 0.0)) {
            return Err(domain("rates must be non-negative"));
        }
        if self.precoder == PrecoderLabel::BadrBelfiore {
            return Err(domain("badr-belfiore is only available for the multiple-access channel"));
        }
        if self.cue_physical && self.precoder.is_random() {
            return Err(domain("--cue-physical only applies to fixed space-time codes"));
        }
        // Surfaces dimension errors before any trial runs.
        self.precoder.build(self.n_t, self.t, &mut RngSeed::new(self.seed, 0).rng())?;
        let dim = self.precoder_dim();
        self.search.validate(dim)
    }

    pub fn rho2_max(&self) -> f64 {
        CompoundChannel::rho_weak_max(self.n_t, self.capacity_bits)
    }

    fn precoder_dim(&self) -> usize {
        match self.precoder {
            PrecoderLabel::Alamouti => 4,
            _ => 2 * self.n_t * self.t,
        }
    }

    fn search_tag(&self) -> Option<SearchMethod> {
        (self.receiver != Receiver::Ml).then_some(self.search.method)
    }

    /// The precoder used in trial `trial`.
    pub fn trial_precoder(&self, trial: u64) -> Result<Precoder> {
        let mut rng = RngSeed::new(self.seed, trial).rng();
        let p = self.precoder.build(self.n_t, self.t, &mut rng)?;
        if self.cue_physical {
            return p.with_physical_rotation(&cue_from_rng(self.n_t, &mut rng));
        }
        Ok(p)
    }

    /// Real effective channel of trial `trial` at weak-mode SNR `rho2`.
    pub fn effective_channel(&self, precoder: &Precoder, rho2: f64) -> Result<RMatrix> {
        let ch = CompoundChannel::one_strong_mode(self.n_t, self.capacity_bits, rho2)?;
        apply_precoder(&ch.diag_matrix(self.n_r)?, precoder)
    }
}

/// `0` followed by `points − 1` log-spaced values up to the largest
/// admissible weak-mode SNR.
pub fn default_rho2_grid(n_t: usize, c: f64, points: usize) -> Vec<f64> {
    let hi = CompoundChannel::rho_weak_max(n_t, c);
    if points <= 1 || !(hi > 0.0) {
        return vec![0.0];
    }
    let mut g = vec![0.0];
    g.extend(log_grid(hi * 1e-4, hi, points - 1));
    g
}

/// Receiver rates for every trial at every `ρ₂` of a fixed list.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub rho2: Vec<f64>,
    /// `rates[j][i]` is the rate of trial `i` at `rho2[j]`.
    pub rates: Vec<Vec<f64>>,
    pub receiver: Receiver,
    pub search: Option<SearchMethod>,
    pub seed: u64,
}

impl RateTable {
    pub fn trials(&self) -> usize {
        self.rates.first().map_or(0, Vec::len)
    }

    pub fn outage_at(&self, j: usize, r: f64) -> OutageEstimate {
        let hits = self.rates[j].iter().filter(|&&x| x < r).count();
        OutageEstimate::from_count(hits, self.trials(), self.receiver, self.search, self.seed)
    }

    /// Largest outage over the table and the `ρ₂` achieving it (first on ties).
    pub fn worst_case(&self, r: f64) -> WorstCase {
        let mut best = (self.outage_at(0, r), self.rho2[0]);
        for j in 1..self.rho2.len() {
            let e = self.outage_at(j, r);
            if e.p_hat > best.0.p_hat {
                best = (e, self.rho2[j]);
            }
        }
        WorstCase { estimate: best.0, rho2: best.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    pub estimate: OutageEstimate,
    pub rho2: f64,
}

/// Computes the rates of all trials at each value in `rho2`.
pub fn rate_table(spec: &ExperimentSpec, rho2: &[f64]) -> Result<RateTable> {
    spec.validate()?;
    if rho2.is_empty() {
        return Err(domain("ρ₂ list is empty"));
    }
    let per_trial: Vec<Vec<f64>> = (0..spec.trials as u64)
        .into_par_iter()
        .map(|i| {
            let p = spec.trial_precoder(i)?;
            rho2.iter()
                .map(|&r2| spec.receiver.rate(&spec.effective_channel(&p, r2)?, p.t(), &spec.search))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let rates = (0..rho2.len()).map(|j| per_trial.iter().map(|row| row[j]).collect()).collect();
    Ok(RateTable { rho2: rho2.to_vec(), rates, receiver: spec.receiver, search: spec.search_tag(), seed: spec.seed })
}

/// Fraction of trials whose rate at `rho2` is below `r`.
pub fn estimate_outage(spec: &ExperimentSpec, rho2: f64, r: f64) -> Result<OutageEstimate> {
    if !(r >= 0.0) {
        return Err(domain(format!("rate must be non-negative, got {r}")));
    }
    Ok(rate_table(spec, &[rho2])?.outage_at(0, r))
}

/// The `ρ₂` list searched for rate `r`: the spec grid plus, for two
/// antennas, the maximiser of the joint-decoding outage at `r`.
pub fn search_points(spec: &ExperimentSpec, rates: &[f64]) -> Vec<f64> {
    let mut pts = spec.rho2_grid.clone();
    if spec.n_t == 2 {
        for &r in rates {
            if let Ok(s) = rho2_star(spec.capacity_bits, r) {
                pts.push(s);
            }
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Worst outage over the searched `ρ₂` values.
pub fn worst_case_outage(spec: &ExperimentSpec, r: f64) -> Result<WorstCase> {
    if !(r >= 0.0) {
        return Err(domain(format!("rate must be non-negative, got {r}")));
    }
    Ok(rate_table(spec, &search_points(spec, &[r]))?.worst_case(r))
}

/// Worst-case outage at each rate, sharing one rate table.
pub fn worst_case_curve(spec: &ExperimentSpec, rates: &[f64]) -> Result<Vec<WorstCase>> {
    let table = rate_table(spec, &search_points(spec, rates))?;
    Ok(rates.iter().map(|&r| table.worst_case(r)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonRate {
    pub rate_bits: f64,
    /// Outage exceeds ε even at the smallest rate tried.
    pub saturated: bool,
    pub worst: WorstCase,
}

/// Largest rate whose worst-case outage is at most `epsilon`, by
/// [`BISECTION_STEPS`] bisection steps on `[0, C]`.
pub fn epsilon_outage_rate(spec: &ExperimentSpec, epsilon: f64) -> Result<EpsilonRate> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(domain(format!("ε must lie in (0, 1), got {epsilon}")));
    }
    let table = rate_table(spec, &spec.rho2_grid)?;
    let c = spec.capacity_bits;
    let extra = |r: f64| -> Result<Option<RateTable>> {
        if spec.n_t != 2 {
            return Ok(None);
        }
        match rho2_star(c, r) {
            Ok(s) => Ok(Some(rate_table(spec, &[s])?)),
            Err(_) => Ok(None),
        }
    };
    let worst = |r: f64| -> Result<WorstCase> {
        let mut w = table.worst_case(r);
        if let Some(t) = extra(r)? {
            let e = t.outage_at(0, r);
            if e.p_hat > w.estimate.p_hat {
                w = WorstCase { estimate: e, rho2: t.rho2[0] };
            }
        }
        Ok(w)
    };
    let top = worst(c)?;
    if top.estimate.p_hat <= epsilon {
        return Ok(EpsilonRate { rate_bits: c, saturated: false, worst: top });
    }
    let (mut lo, mut hi) = (0.0, c);
    let mut lo_worst = table.worst_case(0.0);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let w = worst(mid)?;
        if w.estimate.p_hat <= epsilon {
            lo = mid;
            lo_worst = w;
        } else {
            hi = mid;
        }
    }
    Ok(EpsilonRate { rate_bits: lo, saturated: lo == 0.0, worst: lo_worst })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Efficiency {
    pub eta: f64,
    pub rate: EpsilonRate,
}

/// `R(ε) / C`.
pub fn efficiency(spec: &ExperimentSpec, epsilon: f64) -> Result<Efficiency> {
    let rate = epsilon_outage_rate(spec, epsilon)?;
    Ok(Efficiency { eta: (rate.rate_bits / spec.capacity_bits).clamp(0.0, 1.0), rate })
}

/// Gap `ΔC` at which joint decoding with space-only CUE precoding on two
/// antennas reaches worst-case outage `ε`: `−log₂(2ε − ε²)`.
pub fn ml_gap_at_outage(epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(domain(format!("ε must lie in (0, 1), got {epsilon}")));
    }
    Ok(-(2.0 * epsilon - epsilon * epsilon).log2())
}
