use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ssmcheck_core::{parse_rat, Rat};

#[derive(Parser, Debug)]
#[command(name = "ssmcheck", version, about = "Exact certificates for strong spatial mixing of the Potts model on Z^2")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Worker threads (0 picks one per core).
    #[arg(long, global = true, env = "SSMCHECK_THREADS", default_value_t = 0)]
    pub threads: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Full certificate: region bounds, left-endpoint maxima and induction.
    Certify(CertifyArgs),
    /// Re-check a stored certificate independently.
    Recheck(RecheckArgs),
    /// Certify one region's bound on an interval.
    RegionBound(RegionBoundArgs),
    /// Exact maximum of μ over each region's boundary pairs.
    PValues(PValuesArgs),
    /// Search small regions whose maxima match the targets.
    Reconstruct(ReconstructArgs),
    /// Check the recurrence induction, searching for constants if needed.
    Induction(InductionArgs),
    /// ν(X), μ(X) and the subregion comparison for a boundary pair.
    Nu(NuArgs),
    /// Build the coupling tree and report Γ_d.
    Tree(TreeArgs),
    /// Heat-bath Glauber runs.
    Glauber(GlauberArgs),
    /// Closed-form threshold checks.
    Threshold(ThresholdArgs),
    /// Print a built-in dataset.
    Export(ExportArgs),
}

pub fn rational(s: &str) -> Result<Rat, String> {
    parse_rat(s).map_err(|e| e.to_string())
}

pub fn rational_list(s: &str) -> Result<Vec<Rat>, String> {
    s.split(',').map(rational).collect()
}

/// `builtin` or a file path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Source {
    Builtin,
    File(PathBuf),
}

pub fn source(s: &str) -> Result<Source, String> {
    Ok(if s == "builtin" { Source::Builtin } else { Source::File(PathBuf::from(s)) })
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Constant table: `builtin` or a constants file.
    #[arg(long, value_parser = source, default_value = "builtin")]
    pub constants: Source,
    /// Region file with seven regions, or `builtin`.
    #[arg(long, value_parser = source, default_value = "builtin")]
    pub regions: Source,
    /// Case-system file, or `builtin`.
    #[arg(long, value_parser = source, default_value = "builtin")]
    pub system: Source,
}

#[derive(Args, Debug)]
pub struct CertifyArgs {
    #[arg(long)]
    pub q: u8,
    /// Left end of the λ interval (default: the table's, or 1/1000 when that is 0).
    #[arg(long, value_parser = rational)]
    pub lambda_min: Option<Rat>,
    /// Right end of the λ interval (default: the table's).
    #[arg(long, value_parser = rational)]
    pub lambda_max: Option<Rat>,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 40)]
    pub max_depth: u32,
    /// Certificate file (default `certificate-q<q>.json`).
    #[arg(long)]
    pub certificate: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RecheckArgs {
    pub certificate: PathBuf,
}

#[derive(Args, Debug)]
pub struct RegionBoundArgs {
    #[arg(long)]
    pub q: u8,
    #[arg(long, value_parser = source, default_value = "builtin")]
    pub regions: Source,
    /// 1-based index into the region file.
    #[arg(long)]
    pub index: usize,
    #[arg(long, value_parser = rational)]
    pub a: Rat,
    #[arg(long, value_parser = rational)]
    pub b: Rat,
    #[arg(long, value_parser = rational)]
    pub target: Rat,
    #[arg(long, default_value_t = 40)]
    pub max_depth: u32,
}

#[derive(Args, Debug)]
pub struct PValuesArgs {
    #[arg(long)]
    pub q: u8,
    #[arg(long, value_parser = rational, default_value = "0")]
    pub lambda: Rat,
    #[arg(long, value_parser = source, default_value = "builtin")]
    pub regions: Source,
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    #[arg(long, default_value_t = 6)]
    pub q: u8,
    #[arg(long, value_parser = rational, default_value = "0")]
    pub lambda: Rat,
    /// Comma-separated targets (default: the built-in p values for q).
    #[arg(long, value_parser = rational_list)]
    pub targets: Option<Vec<Rat>>,
    #[arg(long, default_value_t = 5)]
    pub max_sites: usize,
    #[arg(long, default_value_t = 2)]
    pub radius: u32,
    /// Write the matching regions to this region file.
    #[arg(long)]
    pub regions_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct InductionArgs {
    #[arg(long)]
    pub q: Option<u8>,
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Args, Debug)]
pub struct PairArgs {
    /// Boundary-pair file, or `builtin` for the two-site example.
    #[arg(long, value_parser = source, default_value = "builtin")]
    pub pair: Source,
    #[arg(long, value_parser = rational)]
    pub lambda: Rat,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum CompletionArg {
    Colours,
    WithFree,
}

#[derive(Args, Debug)]
pub struct NuArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    /// Subregion as `x,y;x,y;...` for the ν versus μ comparison.
    #[arg(long)]
    pub subregion: Option<String>,
    #[arg(long, value_enum, default_value_t = CompletionArg::Colours)]
    pub completion: CompletionArg,
}

#[derive(Args, Debug)]
pub struct TreeArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    #[arg(long, default_value_t = 3)]
    pub depth: u32,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum GlauberMode {
    Stationarity,
    Decay,
}

#[derive(Args, Debug)]
pub struct GlauberArgs {
    #[arg(long, value_enum, default_value_t = GlauberMode::Stationarity)]
    pub mode: GlauberMode,
    #[arg(long)]
    pub q: u8,
    #[arg(long, value_parser = rational)]
    pub lambda: Rat,
    #[arg(long, default_value_t = 2)]
    pub width: i32,
    #[arg(long, default_value_t = 2)]
    pub height: i32,
    /// Spin on every outer boundary site (0 is free).
    #[arg(long, default_value_t = 1)]
    pub boundary_spin: u8,
    /// Decay mode: spin at the first boundary site in the second chain.
    #[arg(long, default_value_t = 2)]
    pub other_spin: u8,
    #[arg(long, default_value_t = 1_000_000)]
    pub steps: u64,
    #[arg(long, default_value_t = 1)]
    pub sample_every: u64,
    #[arg(long, default_value_t = 10_000)]
    pub burn_in: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct ThresholdArgs {
    #[arg(long)]
    pub q: u32,
    #[arg(long, value_parser = rational)]
    pub lambda: Rat,
    /// Maximum degree.
    #[arg(long, default_value_t = 4)]
    pub delta: u32,
    /// Use the general-graph condition `q > (1 − λ)(2Δ − 1)`.
    #[arg(long)]
    pub general: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum Dataset {
    System,
    Constants,
    Regions,
    Pair,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    #[arg(value_enum)]
    pub dataset: Dataset,
    /// Which constant table (3, 4, 5 or 6).
    #[arg(long, default_value_t = 6)]
    pub q: u8,
}
