//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the test
//! fails if any criterion fails.

use std::io::Write;
use std::time::Instant;

use ifsim_core::bounds::{
    if_sic_upper_simple, if_sic_upper_tight, ml_worst_case_outage, st_lower_bound, mac_outage_bounds, QuadConfig,
};
use ifsim_core::ensembles::{cue_from_rng, jacobi_from_rng, sample_cue, JacobiSpec};
use ifsim_core::integer_forcing::{if_plain_rate, if_sic_rate, ml_mac_rate, ml_rate_real, SearchConfig, SearchMethod};
use ifsim_core::linalg::{complex_to_real, hermitian_eigenvalues, log2_det_hpd, CMatrix, CompoundChannel};
use ifsim_core::mac::{mac_outage_given_c, sym_capacity_pdf_data, sym_outage_curve_given_c, sym_outage_given_c};
use ifsim_core::montecarlo::{
    default_rho2_grid, estimate_outage, worst_case_curve, ExperimentSpec, Receiver,
};
use ifsim_core::precoders::{apply_precoder, cue_space, PrecoderLabel};
use ifsim_core::rng::{complex_gaussian, RngSeed};
use ifsim_core::stats::{chi_square_pvalue, ks_one_sample};
use num_complex::Complex64;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn ml_worst_case_reproduction() -> Outcome {
    let c = 14.0;
    let gaps = [0.5, 1.0, 2.0, 4.0];
    let spec = ExperimentSpec { trials: 100_000, seed: 2024, ..ExperimentSpec::new(2, c, PrecoderLabel::Cue, Receiver::Ml) };
    let rates: Vec<f64> = gaps.iter().map(|g| c - g).collect();
    let wc = worst_case_curve(&spec, &rates).expect("worst-case curve");
    let mut ok = true;
    let mut parts = Vec::new();
    for (g, w) in gaps.iter().zip(&wc) {
        let exact = ml_worst_case_outage(*g).unwrap().value;
        let z = (w.estimate.p_hat - exact) / w.estimate.stderr;
        ok &= z.abs() <= 3.0;
        parts.push(format!("ΔC={g}: {:.5} vs {:.5} (z={z:+.2})", w.estimate.p_hat, exact));
    }
    outcome(ok, parts.join("; "))
}

fn bracketing() -> Outcome {
    let c = 14.0;
    let gaps: Vec<f64> = (0..16).map(|i| 0.5 + 0.5 * i as f64).collect();
    let spec = ExperimentSpec { trials: 10_000, seed: 7, ..ExperimentSpec::new(2, c, PrecoderLabel::Cue, Receiver::IfSic) };
    let rates: Vec<f64> = gaps.iter().map(|g| c - g).collect();
    let wc = worst_case_curve(&spec, &rates).expect("worst-case curve");
    let mut ok = true;
    let mut worst_margin = f64::INFINITY;
    for (g, w) in gaps.iter().zip(&wc) {
        let p = w.estimate.p_hat;
        let s = w.estimate.stderr;
        let lower = ml_worst_case_outage(*g).unwrap().value;
        ok &= p >= lower - 3.0 * s;
        worst_margin = worst_margin.min(p - lower + 3.0 * s);
        if *g > 1.0 {
            let simple = if_sic_upper_simple(*g).unwrap().value;
            let tight = if_sic_upper_tight(c, *g, 4, 64).map(|b| b.value).unwrap_or(1.0);
            let upper = simple.min(tight);
            ok &= p <= upper + 3.0 * s;
            worst_margin = worst_margin.min(upper + 3.0 * s - p);
        }
    }
    outcome(ok, format!("16 gaps in [0.5, 8], smallest margin {worst_margin:.4}"))
}

fn mac_exact_law() -> Outcome {
    let e = sym_outage_given_c(2, 2.0, 2.0, 100_000, 11).unwrap();
    let pdf = sym_capacity_pdf_data(2, 2.0, 100_000, 20, 12).unwrap();
    let ok = (e.p_hat - 2.0 / 3.0).abs() <= 3.0 * e.stderr && (pdf.atom - 1.0 / 3.0).abs() <= 3.0 * pdf.atom_stderr;
    outcome(ok, format!("P(C_sym<2|C=2) = {:.5} ± {:.5}, atom = {:.5} ± {:.5}", e.p_hat, e.stderr, pdf.atom, pdf.atom_stderr))
}

fn four_user_bracket() -> Outcome {
    let c = 8.0;
    let rates: Vec<f64> = (1..=16).map(|i| c * i as f64 / 16.0).collect();
    let est = sym_outage_curve_given_c(4, c, &rates, 100_000, 13).unwrap();
    let mut ok = true;
    for (r, e) in rates.iter().zip(&est) {
        let (lo, up) = mac_outage_bounds(4, *r, c).unwrap();
        ok &= e.p_hat >= lo.value - 3.0 * e.stderr && e.p_hat <= up.value + 3.0 * e.stderr;
    }
    outcome(ok, "n_t=4, C=8, 16 rates, 10^5 draws")
}

fn ensemble_correctness() -> Outcome {
    // J(2,2,1) against 6λ(1−λ).
    let spec = JacobiSpec::new(2, 2, 1).unwrap();
    let n = 100_000;
    let mut rng = RngSeed::new(21, 0).rng();
    let bins = 20;
    let mut obs = vec![0.0; bins];
    for _ in 0..n {
        let l = jacobi_from_rng(spec, &mut rng)[0];
        obs[((l * bins as f64) as usize).min(bins - 1)] += 1.0;
    }
    let cdf = |x: f64| 3.0 * x * x - 2.0 * x * x * x;
    let exp: Vec<f64> = (0..bins).map(|i| n as f64 * (cdf((i + 1) as f64 / bins as f64) - cdf(i as f64 / bins as f64))).collect();
    let p_chi = chi_square_pvalue(&obs, &exp, 0);

    // |u₁₁|² of a 2×2 CUE matrix is uniform.
    let mut rng = RngSeed::new(22, 0).rng();
    let entries: Vec<f64> = (0..n).map(|_| cue_from_rng(2, &mut rng).as_matrix()[(0, 0)].norm_sqr()).collect();
    let (_, p_ks) = ks_one_sample(&entries, |x| x.clamp(0.0, 1.0));

    // Complementary blocks of a 4×4 CUE matrix.
    let mut max_dev: f64 = 0.0;
    for i in 0..1000 {
        let u = sample_cue(4, RngSeed::new(23, i));
        let m = u.as_matrix();
        let top = m.view((0, 0), (2, 2)).into_owned();
        let bottom = m.view((2, 0), (2, 2)).into_owned();
        let l1 = hermitian_eigenvalues(&(top.adjoint() * &top));
        let mut l2 = hermitian_eigenvalues(&(bottom.adjoint() * &bottom));
        l2.reverse();
        for (a, b) in l1.iter().zip(&l2) {
            max_dev = max_dev.max((a - (1.0 - b)).abs());
        }
    }
    let ok = p_chi > 1e-3 && p_ks > 1e-3 && max_dev <= 1e-8;
    outcome(ok, format!("χ² p={p_chi:.3}, KS p={p_ks:.3}, complement defect {max_dev:.1e}"))
}

fn dominance_and_disjointness() -> Outcome {
    let c = 10.0;
    let cfg = SearchConfig::default();
    let trials = 100_000u64;
    let rho_hi = CompoundChannel::rho_weak_max(2, c);
    let (violations, overlaps) = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngSeed::new(31, i).rng();
            let rho2 = rho_hi * (i % 101) as f64 / 100.0;
            let h = CompoundChannel::two_mode(c, rho2).unwrap().diag_matrix(2).unwrap();
            let p = cue_space(2, &mut rng).unwrap();
            let eff = apply_precoder(&h, &p).unwrap();
            let plain = if_plain_rate(&eff, 1, &cfg).unwrap().rate_bits;
            let sic = if_sic_rate(&eff, 1, &cfg).unwrap().rate_bits;
            let ml = ml_rate_real(&eff, 1).unwrap();
            let bad = (plain > sic + 1e-9 || sic > ml + 1e-9) as u64;
            // Single-stream rates of the two precoded streams.
            let hc = &h * CMatrix::from_fn(2, 2, |r, k| Complex64::new(p.map()[(r, k)], p.map()[(r + 2, k)]));
            let single = |k: usize| 2.0 * hc.column(k).norm_squared().ln_1p() / std::f64::consts::LN_2;
            // At ρ₁ = ρ₂ both single-stream rates equal C exactly, so R = C
            // is a tie decided by rounding; rates stay strictly below C.
            let r = c * (i % 37) as f64 / 37.0;
            let overlap = (single(0) < r && single(1) < r) as u64;
            (bad, overlap)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    outcome(violations == 0 && overlaps == 0, format!("{trials} trials: {violations} rate-order violations, {overlaps} joint single-stream outages"))
}

fn oracle_equivalence() -> Outcome {
    let exhaustive = SearchConfig::with_method(SearchMethod::Exhaustive);
    let mut max_gap: f64 = 0.0;
    for i in 0..200u64 {
        let mut rng = RngSeed::new(41, i).rng();
        let scale = [1.0, 4.0, 16.0, 64.0][i as usize % 4];
        let h = CMatrix::from_fn(2, 2, |_, _| complex_gaussian(&mut rng) * scale);
        let hr = complex_to_real(&h);
        let best = if_sic_rate(&hr, 1, &exhaustive).unwrap().rate_bits;
        for m in [SearchMethod::Lll, SearchMethod::LllPermutations] {
            let v = if_sic_rate(&hr, 1, &SearchConfig::with_method(m)).unwrap().rate_bits;
            max_gap = max_gap.max((v - best).abs());
        }
    }
    let mut max_ml: f64 = 0.0;
    for n_t in 1..=4usize {
        for i in 0..50u64 {
            let mut rng = RngSeed::new(42, i * 10 + n_t as u64).rng();
            let n_r = 1 + (i as usize % 4);
            let h = CMatrix::from_fn(n_r, n_t, |_, _| complex_gaussian(&mut rng) * 5.0);
            let mut brute = f64::INFINITY;
            for mask in 1usize..(1 << n_t) {
                let cols: Vec<usize> = (0..n_t).filter(|k| mask >> k & 1 == 1).collect();
                let hs = h.select_columns(cols.iter());
                let g = CMatrix::identity(cols.len(), cols.len()) + hs.adjoint() * &hs;
                brute = brute.min(n_t as f64 / cols.len() as f64 * log2_det_hpd(&g).unwrap());
            }
            max_ml = max_ml.max((ml_mac_rate(&h, 1).unwrap() - brute).abs());
        }
    }
    outcome(max_gap <= 1e-9 && max_ml <= 1e-9, format!("LLL vs exhaustive max gap {max_gap:.1e}, ML vs subsets max gap {max_ml:.1e}"))
}

fn space_time_lower_consistency() -> Outcome {
    let c = 14.0;
    let cfg = QuadConfig::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for g in [1.0, 2.0, 4.0] {
        let b = st_lower_bound(c, c - g, 1, &cfg).unwrap();
        let exact = ml_worst_case_outage(g).unwrap().value;
        let err = (b.bound.value - exact).abs();
        ok &= err <= 2.0 * b.bound.abs_error;
        parts.push(format!("T=1 ΔC={g}: |diff|={err:.1e} (abs_error {:.1e})", b.bound.abs_error));
    }
    let cfg2 = QuadConfig { mc_samples: 200_000, ..QuadConfig::default() };
    for g in [1.0, 2.0, 4.0] {
        let r = c - g;
        let b = st_lower_bound(c, r, 2, &cfg2).unwrap();
        let mut spec = ExperimentSpec { trials: 10_000, seed: 51, ..ExperimentSpec::new(2, c, PrecoderLabel::CueSt, Receiver::Ml) };
        spec.t = 2;
        spec.rho2_grid = default_rho2_grid(2, c, 2);
        let e = estimate_outage(&spec, b.rho2, r).unwrap();
        ok &= b.bound.value <= e.p_hat + 3.0 * e.stderr;
        parts.push(format!("T=2 ΔC={g}: bound {:.4} (k={}) vs empirical {:.4}", b.bound.value, b.k, e.p_hat));
    }
    outcome(ok, parts.join("; "))
}

fn mac_if_qualitative() -> Outcome {
    let c = 10.0;
    let cfg = SearchConfig::default();
    let rates: Vec<f64> = [0.4, 0.5, 0.6].iter().map(|f| f * c).collect();
    let plain = mac_outage_given_c(2, c, &rates, PrecoderLabel::None, Receiver::IfSic, &cfg, 10_000, 61).unwrap();
    let bb = mac_outage_given_c(2, c, &rates, PrecoderLabel::BadrBelfiore, Receiver::IfSic, &cfg, 10_000, 61).unwrap();
    let ok = plain.iter().zip(&bb).all(|(p, b)| b.p_hat < p.p_hat);
    let parts: Vec<String> = rates
        .iter()
        .zip(plain.iter().zip(&bb))
        .map(|(r, (p, b))| format!("R={r}: {:.4} vs {:.4}", b.p_hat, p.p_hat))
        .collect();
    outcome(ok, format!("precoded vs unprecoded: {}", parts.join(", ")))
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("joint-decoding worst-case outage closed form", ml_worst_case_reproduction),
        ("IF-SIC worst-case outage bracketed by bounds", bracketing),
        ("two-user MAC conditional law and atom", mac_exact_law),
        ("four-user MAC bracket", four_user_bracket),
        ("ensemble samplers", ensemble_correctness),
        ("rate dominance and single-stream disjointness", dominance_and_disjointness),
        ("search and subset oracles", oracle_equivalence),
        ("space-time lower bound consistency", space_time_lower_consistency),
        ("distributed code improves MAC IF-SIC outage", mac_if_qualitative),
    ];
    std::io::stdout().write_all(b"\n").unwrap();
    let mut failed = Vec::new();
    for (name, run) in criteria {
        let t0 = Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        // Written to the handle directly so the report survives output capture.
        let line = format!("{tag} {name} [{:.1}s] {}\n", t0.elapsed().as_secs_f64(), o.detail);
        std::io::stdout().write_all(line.as_bytes()).unwrap();
        if !o.pass {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
