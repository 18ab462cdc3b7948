//! `ifsim`: outage experiments for integer-forcing receivers.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ifsim_core::{PrecoderLabel, Receiver, SearchMethod};

use crate::output::Format;

#[derive(Debug, Parser)]
#[command(name = "ifsim", version, about = "Outage bounds and simulations for integer-forcing receivers")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output format.
    #[arg(long, value_enum, default_value = "csv", global = true)]
    pub format: Format,
    /// Output file. Defaults to `$IFSIM_OUTPUT_DIR/<command>.<ext>` when the
    /// variable is set, stdout otherwise.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, env = "IFSIM_OUTPUT_DIR", global = true, hide_env_values = true)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 1, global = true)]
    pub seed: u64,
    /// Monte Carlo trials per estimate.
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..), global = true)]
    pub trials: u64,
    /// Integer-matrix search for IF receivers.
    #[arg(long, default_value = "lll+permutations", value_parser = parse_search, global = true)]
    pub search: SearchMethod,
}

fn parse_search(s: &str) -> Result<SearchMethod, String> {
    s.parse().map_err(|e: ifsim_core::Error| e.to_string())
}

fn parse_receiver(s: &str) -> Result<Receiver, String> {
    s.parse().map_err(|e: ifsim_core::Error| e.to_string())
}

fn parse_precoder(s: &str) -> Result<PrecoderLabel, String> {
    s.parse().map_err(|e: ifsim_core::Error| e.to_string())
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("{v} is not a positive finite number")),
        Err(e) => Err(e.to_string()),
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("{v} is not a non-negative finite number")),
        Err(e) => Err(e.to_string()),
    }
}

fn probability(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v < 1.0 => Ok(v),
        Ok(v) => Err(format!("{v} is not in (0, 1)")),
        Err(e) => Err(e.to_string()),
    }
}

/// A closed interval sampled at `steps` evenly spaced points.
#[derive(Debug, Clone, Copy)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        (0..self.steps).map(|i| self.min + (self.max - self.min) * i as f64 / (self.steps - 1) as f64).collect()
    }

    fn check(&self, name: &str) -> Result<(), String> {
        if self.steps == 0 {
            return Err(format!("--{name}-steps must be at least 1"));
        }
        if self.max < self.min {
            return Err(format!("--{name}-max is below --{name}-min"));
        }
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct GapGrid {
    /// A single capacity gap ΔC; overrides the grid.
    #[arg(long, value_parser = non_negative)]
    pub delta_c: Option<f64>,
    #[arg(long, default_value_t = 0.5, value_parser = non_negative)]
    pub delta_c_min: f64,
    #[arg(long, default_value_t = 8.0, value_parser = non_negative)]
    pub delta_c_max: f64,
    #[arg(long, default_value_t = 16)]
    pub delta_c_steps: usize,
}

impl GapGrid {
    pub fn points(&self) -> Result<Vec<f64>, String> {
        if let Some(d) = self.delta_c {
            return Ok(vec![d]);
        }
        let g = Grid { min: self.delta_c_min, max: self.delta_c_max, steps: self.delta_c_steps };
        g.check("delta-c")?;
        Ok(g.points())
    }
}

#[derive(Debug, Args)]
pub struct RateGrid {
    /// A single target rate R in bits per channel use; overrides the grid.
    #[arg(long, value_parser = non_negative)]
    pub r: Option<f64>,
    /// Grid endpoints as fractions of C.
    #[arg(long, default_value_t = 1.0 / 16.0, value_parser = non_negative)]
    pub r_frac_min: f64,
    #[arg(long, default_value_t = 1.0, value_parser = non_negative)]
    pub r_frac_max: f64,
    #[arg(long, default_value_t = 16)]
    pub r_steps: usize,
}

impl RateGrid {
    pub fn points(&self, c: f64) -> Result<Vec<f64>, String> {
        if let Some(r) = self.r {
            return Ok(vec![r]);
        }
        let g = Grid { min: self.r_frac_min, max: self.r_frac_max, steps: self.r_steps };
        g.check("r-frac")?;
        Ok(g.points().into_iter().map(|f| f * c).collect())
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate the closed-form and numerical outage bounds.
    Bounds(BoundsArgs),
    /// Worst-case outage of a two-antenna compound channel against the gap
    /// to capacity, with bound envelopes.
    #[command(name = "fig-outage-2tx")]
    FigOutage2tx(Outage2txArgs),
    /// Guaranteed efficiency R(ε)/C for several receivers and precoders.
    FigEfficiency(EfficiencyArgs),
    /// Rayleigh multiple-access channel experiments.
    Mac(MacArgs),
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// Capacity C in bits per channel use.
    #[arg(long, value_parser = positive)]
    pub c: f64,
    #[command(flatten)]
    pub gaps: GapGrid,
    /// Also tabulate the space-time lower bound over this many channel uses.
    #[arg(long)]
    pub t: Option<usize>,
    /// Multiple-access bounds against the target rate instead.
    #[arg(long)]
    pub mac: bool,
    #[arg(long, default_value_t = 2)]
    pub n_t: usize,
    #[command(flatten)]
    pub rates: RateGrid,
    /// Jacobi samples for space-time regions of dimension above two.
    #[arg(long, default_value_t = 1_000_000)]
    pub mc_samples: usize,
}

#[derive(Debug, Args)]
pub struct Outage2txArgs {
    #[arg(long, value_parser = positive)]
    pub c: f64,
    #[command(flatten)]
    pub gaps: GapGrid,
    #[arg(long, default_value = "if-sic", value_parser = parse_receiver)]
    pub receiver: Receiver,
    /// Number of weak-mode SNR grid points searched for the worst case.
    #[arg(long, default_value_t = 64)]
    pub rho2_points: usize,
    #[arg(long)]
    pub n_r: Option<usize>,
    /// Add a `1 − outage` column.
    #[arg(long)]
    pub complement: bool,
}

#[derive(Debug, Args)]
pub struct EfficiencyArgs {
    /// Capacities to evaluate.
    #[arg(long, value_delimiter = ',', default_values_t = [8.0, 14.0, 20.0], value_parser = positive)]
    pub c: Vec<f64>,
    #[arg(long, default_value_t = 0.01, value_parser = probability)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 2)]
    pub n_t: usize,
    #[arg(long)]
    pub n_r: Option<usize>,
    /// Channel uses for space-time precoders; fixed 2×2 codes need 2.
    #[arg(long, default_value_t = 1)]
    pub t: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [Receiver::IfSic, Receiver::Ml], value_parser = parse_receiver)]
    pub receivers: Vec<Receiver>,
    /// Rotate the physical antennas by a fresh CUE matrix before fixed codes.
    #[arg(long)]
    pub cue_physical: bool,
    #[arg(long, default_value_t = 64)]
    pub rho2_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MacMode {
    /// Density of the symmetric-rate capacity given the sum capacity.
    Pdf,
    /// Conditional outage against its lower and upper bounds.
    Bounds,
    /// Conditional outage of IF receivers with and without precoding.
    Outage,
    /// Fraction of the symmetric capacity achieved, binned by sum capacity.
    Ergodic,
}

#[derive(Debug, Args)]
pub struct MacArgs {
    #[arg(long, value_enum)]
    pub mode: MacMode,
    /// Sum capacity to condition on (pdf, bounds, outage).
    #[arg(long, value_parser = positive)]
    pub c: Option<f64>,
    #[arg(long, default_value_t = 2)]
    pub n_t: usize,
    #[command(flatten)]
    pub rates: RateGrid,
    #[arg(long, default_value_t = 40)]
    pub bins: usize,
    #[arg(long, default_value = "if-sic", value_parser = parse_receiver)]
    pub receiver: Receiver,
    /// Precoders to compare (outage, ergodic): none, badr-belfiore.
    #[arg(long, value_delimiter = ',', default_values_t = [PrecoderLabel::None, PrecoderLabel::BadrBelfiore], value_parser = parse_precoder)]
    pub precoders: Vec<PrecoderLabel>,
    #[arg(long, default_value_t = 0.0)]
    pub snr_db_min: f64,
    #[arg(long, default_value_t = 40.0)]
    pub snr_db_max: f64,
    #[arg(long, default_value_t = 9)]
    pub snr_db_steps: usize,
    /// Sum-capacity bin width for the ergodic table.
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    pub bin_width: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(table) => {
            let name = commands::default_name(&cli.command);
            let dest = output::destination(cli.common.output.as_deref(), cli.common.output_dir.as_deref(), &name, cli.common.format);
            if let Err(e) = output::write_table(&table, cli.common.format, dest.as_deref()) {
                eprintln!("error: {e:#}");
                return ExitCode::from(1);
            }
            if table.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: {} cell(s) failed:", table.failures.len());
                for f in &table.failures {
                    eprintln!("  {f}");
                }
                ExitCode::from(1)
            }
        }
        Err(commands::CliError::Usage(msg)) => {
            use clap::CommandFactory;
            let mut cmd = Cli::command();
            cmd.error(clap::error::ErrorKind::ValueValidation, msg).exit()
        }
        Err(commands::CliError::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
