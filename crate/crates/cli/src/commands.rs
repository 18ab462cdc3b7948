use std::collections::BTreeMap;

use anyhow::Context;
use ifsim_core::bounds::{
    if_sic_upper_simple, if_sic_upper_tight, mac2_outage_given_c, mac_outage_bounds, mac_subset_outage, ml_worst_case_outage,
    st_lower_bound, QuadConfig,
};
use ifsim_core::mac::{ergodic_fraction_data, mac_outage_given_c, sym_capacity_pdf_data, sym_outage_curve_given_c, ErgodicRow};
use ifsim_core::montecarlo::{default_rho2_grid, efficiency, ml_gap_at_outage, worst_case_curve};
use ifsim_core::{Error, ExperimentSpec, PrecoderLabel, SearchConfig};

use crate::output::{Cell, Table};
use crate::{BoundsArgs, Cli, Command, EfficiencyArgs, MacArgs, MacMode, Outage2txArgs};

/// Grid points for the tight upper bound's `d_max` search.
const TIGHT_GRID: usize = 64;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments; reported like a clap error (exit code 2).
    Usage(String),
    Run(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Run(e)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e.into())
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(e: impl ToString) -> CliError {
    CliError::Usage(e.to_string())
}

pub fn default_name(cmd: &Command) -> String {
    match cmd {
        Command::Bounds(a) if a.mac => "bounds-mac".into(),
        Command::Bounds(_) => "bounds".into(),
        Command::FigOutage2tx(_) => "fig-outage-2tx".into(),
        Command::FigEfficiency(_) => "fig-efficiency".into(),
        Command::Mac(a) => format!("mac-{}", mode_name(a.mode)),
    }
}

fn mode_name(m: MacMode) -> &'static str {
    match m {
        MacMode::Pdf => "pdf",
        MacMode::Bounds => "bounds",
        MacMode::Outage => "outage",
        MacMode::Ergodic => "ergodic",
    }
}

pub fn run(cli: &Cli) -> Result<Table> {
    let mut table = match &cli.command {
        Command::Bounds(a) if a.mac => bounds_mac(a)?,
        Command::Bounds(a) => bounds(a)?,
        Command::FigOutage2tx(a) => outage_2tx(cli, a)?,
        Command::FigEfficiency(a) => fig_efficiency(cli, a)?,
        Command::Mac(a) => mac(cli, a)?,
    };
    let c = &cli.common;
    let mut meta = vec![
        ("version".to_string(), ifsim_core::VERSION.to_string()),
        ("command".to_string(), default_name(&cli.command)),
        ("seed".to_string(), c.seed.to_string()),
        ("trials".to_string(), c.trials.to_string()),
        ("search".to_string(), c.search.to_string()),
        ("units".to_string(), "bits_per_complex_channel_use".to_string()),
    ];
    meta.append(&mut table.metadata);
    table.metadata = meta;
    Ok(table)
}

fn cols(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn gaps_for(c: f64, gaps: &crate::GapGrid) -> Result<Vec<f64>> {
    let g = gaps.points().map_err(usage)?;
    if let Some(bad) = g.iter().find(|&&d| d > c) {
        return Err(usage(format!("gap {bad} exceeds the capacity {c}")));
    }
    Ok(g)
}

fn tight_cell(table: &mut Table, row: usize, c: f64, d: f64, n_dim: usize) -> Cell {
    match if_sic_upper_tight(c, d, n_dim, TIGHT_GRID) {
        Ok(b) => b.value.into(),
        Err(Error::Resource { limit, partial }) => {
            table.fail(format!("row {row}/if_sic_upper_tight"), format!("enumeration budget of {limit} vectors exceeded"));
            partial.into()
        }
        Err(e) => {
            table.fail(format!("row {row}/if_sic_upper_tight"), e);
            Cell::Empty
        }
    }
}

fn bounds(a: &BoundsArgs) -> Result<Table> {
    let c = a.c;
    let gaps = gaps_for(c, &a.gaps)?;
    if a.t == Some(0) {
        return Err(usage("--t must be at least 1"));
    }
    let mut names = vec!["delta_c", "rate_bits", "if_sic_upper_simple", "if_sic_upper_tight", "ml_worst_case"];
    if a.t.is_some() {
        names.extend(["st_lower", "st_lower_abs_error", "st_lower_method", "st_lower_rho2", "st_lower_k"]);
    }
    let mut table = Table::new(cols(&names));
    table.meta("c", c);
    if let Some(t) = a.t {
        table.meta("t", t);
    }
    let quad = QuadConfig { mc_samples: a.mc_samples, ..QuadConfig::default() };
    for (i, &d) in gaps.iter().enumerate() {
        let simple = if d > 1.0 { Some(if_sic_upper_simple(d)?.value) } else { None };
        let tight = if d > 0.0 { tight_cell(&mut table, i, c, d, 4) } else { Cell::Num(1.0) };
        let ml = if d > 0.0 { ml_worst_case_outage(d)?.value } else { 1.0 };
        let mut row = vec![d.into(), (c - d).into(), simple.into(), tight, ml.into()];
        if let Some(t) = a.t {
            let st = st_lower_bound(c, c - d, t, &quad).with_context(|| format!("space-time lower bound at ΔC={d}"))?;
            row.extend([
                st.bound.value.into(),
                st.bound.abs_error.into(),
                st.bound.method.label().into(),
                st.rho2.into(),
                st.k.into(),
            ]);
        }
        table.push(row);
    }
    Ok(table)
}

fn bounds_mac(a: &BoundsArgs) -> Result<Table> {
    let (c, n) = (a.c, a.n_t);
    if !(2..=ifsim_core::mac::MAX_USERS).contains(&n) {
        return Err(usage(format!("--n-t must be in 2..={}", ifsim_core::mac::MAX_USERS)));
    }
    let rates = a.rates.points(c).map_err(usage)?;
    let mut names: Vec<String> = vec!["rate_bits".into()];
    names.extend((1..n).map(|k| format!("subset_k{k}")));
    names.extend(cols(&["lower", "upper"]));
    if n == 2 {
        names.push("two_user_exact".into());
    }
    let mut table = Table::new(names);
    table.meta("c", c);
    table.meta("n_t", n);
    for &r in &rates {
        let mut row = vec![r.into()];
        for k in 1..n {
            row.push(mac_subset_outage(k, n, r, c)?.value.into());
        }
        let (lo, up) = mac_outage_bounds(n, r, c)?;
        row.push(lo.value.into());
        row.push(up.value.min(1.0).into());
        if n == 2 {
            row.push(mac2_outage_given_c(c, r.min(c)).map(|b| if r > c { 1.0 } else { b.value })?.into());
        }
        table.push(row);
    }
    Ok(table)
}

fn search(cli: &Cli) -> SearchConfig {
    SearchConfig::with_method(cli.common.search)
}

fn outage_2tx(cli: &Cli, a: &Outage2txArgs) -> Result<Table> {
    let c = a.c;
    let gaps = gaps_for(c, &a.gaps)?;
    let mut spec = ExperimentSpec::new(2, c, PrecoderLabel::Cue, a.receiver);
    spec.n_r = a.n_r.unwrap_or(2);
    spec.trials = cli.common.trials as usize;
    spec.seed = cli.common.seed;
    spec.search = search(cli);
    spec.rho2_grid = default_rho2_grid(2, c, a.rho2_points);
    spec.validate().map_err(usage)?;
    let rates: Vec<f64> = gaps.iter().map(|d| c - d).collect();
    let wc = worst_case_curve(&spec, &rates)?;

    let mut names = vec!["delta_c", "rate_bits", "if_sic_upper_simple", "if_sic_upper_tight", "ml_worst_case", "empirical", "empirical_stderr", "worst_rho2"];
    if a.complement {
        names.push("empirical_complement");
    }
    let mut table = Table::new(cols(&names));
    table.meta("c", c);
    table.meta("receiver", a.receiver);
    table.meta("precoder", "cue");
    table.meta("n_r", spec.n_r);
    table.meta("rho2_points", a.rho2_points);
    for (i, (&d, w)) in gaps.iter().zip(&wc).enumerate() {
        let simple = if d > 1.0 { Some(if_sic_upper_simple(d)?.value) } else { None };
        let tight = if d > 0.0 { tight_cell(&mut table, i, c, d, 4) } else { Cell::Num(1.0) };
        let ml = if d > 0.0 { ml_worst_case_outage(d)?.value } else { 1.0 };
        let p = w.estimate.p_hat;
        let mut row = vec![d.into(), (c - d).into(), simple.into(), tight, ml.into(), p.into(), w.estimate.stderr.into(), w.rho2.into()];
        if a.complement {
            row.push((1.0 - p).into());
        }
        table.push(row);
    }
    Ok(table)
}

fn fig_efficiency(cli: &Cli, a: &EfficiencyArgs) -> Result<Table> {
    if a.t == 0 {
        return Err(usage("--t must be at least 1"));
    }
    let mut precoders = vec![(PrecoderLabel::Cue, 1)];
    if a.t >= 2 {
        precoders.push((PrecoderLabel::CueSt, a.t));
    }
    if a.t == 2 && a.n_t == 2 {
        precoders.push((PrecoderLabel::Alamouti, 2));
        precoders.push((PrecoderLabel::Golden, 2));
    }
    let ml_closed = a.n_t == 2;
    let mut names: Vec<String> = vec!["capacity_bits".into()];
    if ml_closed {
        names.push("ml_closed_form".into());
    }
    for r in &a.receivers {
        for (p, _) in &precoders {
            names.push(format!("eta_{}_{}", r.as_str().replace('-', "_"), p.as_str().replace('-', "_")));
        }
    }
    let mut table = Table::new(names);
    table.meta("epsilon", a.epsilon);
    table.meta("n_t", a.n_t);
    table.meta("t", a.t);
    table.meta("cue_physical", a.cue_physical);
    table.meta("rho2_points", a.rho2_points);

    let gap = ml_gap_at_outage(a.epsilon)?;
    for &c in &a.c {
        let mut row: Vec<Cell> = vec![c.into()];
        if ml_closed {
            row.push(((c - gap) / c).clamp(0.0, 1.0).into());
        }
        for &receiver in &a.receivers {
            for &(label, t) in &precoders {
                let mut spec = ExperimentSpec::new(a.n_t, c, label, receiver);
                spec.t = t;
                spec.n_r = a.n_r.unwrap_or(a.n_t);
                spec.trials = cli.common.trials as usize;
                spec.seed = cli.common.seed;
                spec.search = search(cli);
                spec.rho2_grid = default_rho2_grid(a.n_t, c, a.rho2_points);
                spec.cue_physical = a.cue_physical && !label.is_random();
                spec.validate().map_err(usage)?;
                let e = efficiency(&spec, a.epsilon)?;
                if e.rate.saturated {
                    table.fail(format!("C={c}/{receiver}/{label}"), "outage exceeds epsilon at every rate");
                }
                row.push(e.eta.into());
            }
        }
        table.push(row);
    }
    Ok(table)
}

fn mac(cli: &Cli, a: &MacArgs) -> Result<Table> {
    let n = a.n_t;
    if !(2..=ifsim_core::mac::MAX_USERS).contains(&n) {
        return Err(usage(format!("--n-t must be in 2..={}", ifsim_core::mac::MAX_USERS)));
    }
    let trials = cli.common.trials as usize;
    let seed = cli.common.seed;
    let need_c = || a.c.ok_or_else(|| usage(format!("--c is required for --mode {}", mode_name(a.mode))));
    let mut table = match a.mode {
        MacMode::Pdf => {
            let c = need_c()?;
            if a.bins == 0 {
                return Err(usage("--bins must be at least 1"));
            }
            let pdf = sym_capacity_pdf_data(n, c, trials, a.bins, seed)?;
            let mut t = Table::new(cols(&["bin_lo", "bin_hi", "density", "atom", "atom_stderr"]));
            t.meta("c", c);
            for (i, d) in pdf.density.iter().enumerate() {
                let (atom, se) = if i == 0 { (pdf.atom.into(), pdf.atom_stderr.into()) } else { (Cell::Empty, Cell::Empty) };
                t.push(vec![pdf.bin_edges[i].into(), pdf.bin_edges[i + 1].into(), (*d).into(), atom, se]);
            }
            t
        }
        MacMode::Bounds => {
            let c = need_c()?;
            let rates = a.rates.points(c).map_err(usage)?;
            let est = sym_outage_curve_given_c(n, c, &rates, trials, seed)?;
            let mut t = Table::new(cols(&["rate_bits", "lower", "upper", "empirical", "empirical_stderr"]));
            t.meta("c", c);
            for (&r, e) in rates.iter().zip(&est) {
                let (lo, up) = mac_outage_bounds(n, r, c)?;
                t.push(vec![r.into(), lo.value.into(), up.value.min(1.0).into(), e.p_hat.into(), e.stderr.into()]);
            }
            t
        }
        MacMode::Outage => {
            let c = need_c()?;
            check_mac_precoders(a)?;
            let rates = a.rates.points(c).map_err(usage)?;
            let cfg = search(cli);
            let mut curves = Vec::new();
            for &p in &a.precoders {
                curves.push(mac_outage_given_c(n, c, &rates, p, a.receiver, &cfg, trials, seed)?);
            }
            let ml = sym_outage_curve_given_c(n, c, &rates, trials, seed)?;
            let mut names: Vec<String> = vec!["rate_bits".into()];
            for p in &a.precoders {
                let tag = p.as_str().replace('-', "_");
                names.push(format!("outage_{tag}"));
                names.push(format!("stderr_{tag}"));
            }
            names.extend(cols(&["outage_ml", "stderr_ml"]));
            let mut t = Table::new(names);
            t.meta("c", c);
            t.meta("receiver", a.receiver);
            for (i, &r) in rates.iter().enumerate() {
                let mut row = vec![r.into()];
                for curve in &curves {
                    row.push(curve[i].p_hat.into());
                    row.push(curve[i].stderr.into());
                }
                row.push(ml[i].p_hat.into());
                row.push(ml[i].stderr.into());
                t.push(row);
            }
            t
        }
        MacMode::Ergodic => ergodic(cli, a)?,
    };
    table.meta("n_t", n);
    table.meta("mode", mode_name(a.mode));
    Ok(table)
}

fn check_mac_precoders(a: &MacArgs) -> Result<()> {
    if a.precoders.is_empty() {
        return Err(usage("--precoders is empty"));
    }
    for &p in &a.precoders {
        ifsim_core::mac::mac_precoders(p, a.n_t).map_err(usage)?;
    }
    Ok(())
}

fn ergodic(cli: &Cli, a: &MacArgs) -> Result<Table> {
    check_mac_precoders(a)?;
    if a.snr_db_steps == 0 || a.snr_db_max < a.snr_db_min {
        return Err(usage("need --snr-db-steps >= 1 and --snr-db-max >= --snr-db-min"));
    }
    let db = crate::Grid { min: a.snr_db_min, max: a.snr_db_max, steps: a.snr_db_steps }.points();
    let snr: Vec<f64> = db.iter().map(|d| 10f64.powf(d / 10.0)).collect();
    let cfg = search(cli);
    let trials = cli.common.trials as usize;

    // Bin index -> one row per precoder.
    let mut joined: BTreeMap<i64, Vec<Option<ErgodicRow>>> = BTreeMap::new();
    let k = a.precoders.len();
    for (j, &p) in a.precoders.iter().enumerate() {
        for row in ergodic_fraction_data(a.n_t, &snr, a.receiver, p, &cfg, trials, a.bin_width, cli.common.seed)? {
            let idx = (row.c_sum_lo / a.bin_width).round() as i64;
            joined.entry(idx).or_insert_with(|| vec![None; k])[j] = Some(row);
        }
    }
    let mut names: Vec<String> = cols(&["c_sum_lo", "c_sum_hi", "count", "mean_c_sym"]);
    for p in &a.precoders {
        names.push(format!("fraction_{}", p.as_str().replace('-', "_")));
    }
    let mut t = Table::new(names);
    t.meta("receiver", a.receiver);
    t.meta("snr_db", format!("{}..{}x{}", a.snr_db_min, a.snr_db_max, a.snr_db_steps));
    t.meta("bin_width", a.bin_width);
    for (idx, rows) in joined {
        let first = rows.iter().flatten().next().expect("bin has a row");
        let mut row = vec![
            (idx as f64 * a.bin_width).into(),
            ((idx + 1) as f64 * a.bin_width).into(),
            first.count.into(),
            first.mean_c_sym.into(),
        ];
        row.extend(rows.iter().map(|r| Cell::from(r.map(|r| r.fraction))));
        t.push(row);
    }
    Ok(t)
}
