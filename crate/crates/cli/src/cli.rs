//! Command line surface.

use clap::{Args as ClapArgs, Parser, Subcommand, ValueEnum};
use qperc_core::ensemble::{Regime, SeedMode};
use qperc_core::lattice::SpanRule;
use qperc_core::propagator::Method;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "qperc",
    version,
    about = "Quantum and classical site percolation on honeycomb photonic lattices"
)]
pub struct Args {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a random lattice realization.
    Generate(GenerateArgs),
    /// Propagate a single wavepacket and export traces.
    Evolve(EvolveArgs),
    /// Run a Monte Carlo sweep over occupation probability.
    Sweep(SweepArgs),
    /// Derive figure tables from finished sweep directories.
    Figures(FiguresArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum LatticeFormat {
    Json,
    Grid,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceFormat {
    Csv,
    Binary,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum MethodArg {
    Auto,
    Dense,
    Chebyshev,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Auto => Method::Auto,
            MethodArg::Dense => Method::Dense,
            MethodArg::Chebyshev => Method::Chebyshev,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum RegimeArg {
    Quantum,
    Classical,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Regime {
        match r {
            RegimeArg::Quantum => Regime::Quantum,
            RegimeArg::Classical => Regime::Classical,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum SeedModeArg {
    Coupled,
    PerProbability,
}

impl From<SeedModeArg> for SeedMode {
    fn from(s: SeedModeArg) -> SeedMode {
        match s {
            SeedModeArg::Coupled => SeedMode::Coupled,
            SeedModeArg::PerProbability => SeedMode::PerProbability,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum SpanRuleArg {
    CornerToCorner,
    Rows,
    Cols,
    Either,
}

impl From<SpanRuleArg> for SpanRule {
    fn from(s: SpanRuleArg) -> SpanRule {
        match s {
            SpanRuleArg::CornerToCorner => SpanRule::CornerToCorner,
            SpanRuleArg::Rows => SpanRule::Rows,
            SpanRuleArg::Cols => SpanRule::Cols,
            SpanRuleArg::Either => SpanRule::Either,
        }
    }
}

/// Parses an occupation probability, rejecting values outside (0, 1]
/// at the flag level so they surface as usage errors.
pub fn parse_probability(raw: &str) -> Result<f64, String> {
    let p: f64 = raw
        .parse()
        .map_err(|_| format!("{raw:?} is not a number"))?;
    if p > 0.0 && p <= 1.0 {
        Ok(p)
    } else {
        Err(format!("occupation probability {p} is outside (0, 1]"))
    }
}

#[derive(ClapArgs, Debug)]
pub struct GenerateArgs {
    #[arg(long)]
    pub rows: usize,
    #[arg(long)]
    pub cols: usize,
    /// Occupation probability in (0, 1].
    #[arg(long, value_parser = parse_probability)]
    pub p: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 15.0)]
    pub pitch_um: f64,
    #[arg(long, value_enum, default_value_t = LatticeFormat::Json)]
    pub format: LatticeFormat,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ClapArgs, Debug)]
pub struct EvolveArgs {
    /// Lattice file to load instead of generating one.
    #[arg(long, conflicts_with_all = ["rows", "cols", "p", "seed"])]
    pub lattice: Option<PathBuf>,
    /// Input format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    pub lattice_format: Option<LatticeFormat>,
    #[arg(long, requires_all = ["cols", "p"])]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
    #[arg(long, value_parser = parse_probability)]
    pub p: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 15.0)]
    pub pitch_um: f64,
    /// Nearest-neighbor coupling in 1/mm.
    #[arg(long, default_value_t = 0.45)]
    pub t1_per_mm: f64,
    /// Next-nearest to nearest coupling ratio.
    #[arg(long, conflicts_with = "beta_per_um")]
    pub t2_ratio: Option<f64>,
    /// Coupling decay constant in 1/um.
    #[arg(long)]
    pub beta_per_um: Option<f64>,
    #[arg(long, alias = "zmax", default_value_t = 20.0)]
    pub z_max_mm: f64,
    #[arg(long, alias = "zstep", default_value_t = 0.5)]
    pub z_step_mm: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,
    /// Side of the square bound in index units.
    #[arg(long, default_value_t = 16)]
    pub bound_side: usize,
    /// Escaped-intensity fraction that counts as percolation.
    #[arg(long, default_value_t = 0.1)]
    pub portion_threshold: f64,
    /// Intensity trace output.
    #[arg(long)]
    pub out_trace: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TraceFormat::Csv)]
    pub trace_format: TraceFormat,
    /// Final intensity grid CSV.
    #[arg(long)]
    pub out_final: Option<PathBuf>,
    /// Coupling matrix COO export.
    #[arg(long)]
    pub out_hamiltonian: Option<PathBuf>,
}

#[derive(ClapArgs, Debug)]
pub struct SweepArgs {
    /// Sweep configuration JSON.
    #[arg(long, conflicts_with_all = ["preset", "rerun"])]
    pub config: Option<PathBuf>,
    /// Built-in configuration name; see --preset list.
    #[arg(long, conflicts_with = "rerun")]
    pub preset: Option<String>,
    /// Manifest of a previous run to reproduce.
    #[arg(long)]
    pub rerun: Option<PathBuf>,
    /// Output directory, created if absent.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, value_enum)]
    pub regime: Option<RegimeArg>,
    /// Worker threads; 0 means one per CPU. Also QPERC_JOBS.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Also QPERC_MASTER_SEED.
    #[arg(long)]
    pub master_seed: Option<u64>,
    #[arg(long)]
    pub trials_per_p: Option<usize>,
    /// Probability grid as start:step:stop, inclusive.
    #[arg(long)]
    pub p_grid: Option<String>,
    #[arg(long, value_enum)]
    pub seed_mode: Option<SeedModeArg>,
    #[arg(long, value_enum)]
    pub span_rule: Option<SpanRuleArg>,
    #[arg(long, value_enum)]
    pub propagator: Option<MethodArg>,
}

#[derive(ClapArgs, Debug)]
pub struct FiguresArgs {
    /// Finished sweep directory; repeatable.
    #[arg(long, required = true)]
    pub sweep_dir: Vec<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Transport fit window lower edge in mm; default z_max / 2.
    #[arg(long)]
    pub fit_lo_mm: Option<f64>,
    /// Transport fit window upper edge in mm; default z_max.
    #[arg(long)]
    pub fit_hi_mm: Option<f64>,
}
