use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ncpain_core::dressing::LinearConvention;
use ncpain_core::{Complex64, GridSpec};

use crate::parse;

#[derive(Debug, Parser)]
#[command(name = "ncpain", version, about = "Noncommutative Painleve II experiments")]
pub struct Cli {
    /// Directory for the JSON report and CSV grids.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quasideterminant of a block matrix, checked against the inverse.
    Quasidet(QuasidetArgs),
    /// Zero-curvature residual of the two-by-two Lax pair.
    Zc(ZcArgs),
    /// Darboux dressing of a seed solution.
    Dress(DressArgs),
    /// Flow of the three-field system and its reduction.
    Symmetric(SymmetricArgs),
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["inline", "file", "identity", "random"])))]
pub struct QuasidetArgs {
    /// Matrix as JSON rows; entries are numbers, "a+bi" strings, [re, im]
    /// pairs or square arrays of those.
    #[arg(long)]
    pub inline: Option<String>,
    #[arg(long)]
    pub file: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    pub identity: Option<usize>,
    /// Random n x n block matrix with d x d entries.
    #[arg(long, num_args = 2, value_names = ["N", "D"])]
    pub random: Option<Vec<usize>>,
    /// Entry size for --identity.
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// One-based row and column.
    #[arg(long, num_args = 2, value_names = ["I", "J"], required = true)]
    pub pos: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ZcSeed {
    Rational,
    Random,
}

#[derive(Debug, Args)]
pub struct ZcArgs {
    #[arg(long, value_enum, default_value_t = ZcSeed::Rational)]
    pub seed_kind: ZcSeed,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Constant of the equation; `v = (C/4) one / z` for the rational seed,
    /// which needs C = 4 or C = -4.
    #[arg(long = "C", value_parser = parse::complex, allow_hyphen_values = true)]
    pub c: Option<Complex64>,
    #[arg(long, value_delimiter = ',', value_parser = parse::complex, default_value = "1,i,2-3i", allow_hyphen_values = true)]
    pub lambda: Vec<Complex64>,
    /// Sample points for the rational seed.
    #[arg(long, value_delimiter = ',', default_value = "1,1.5,2", allow_hyphen_values = true)]
    pub z: Vec<f64>,
    /// Random field triples per spectral parameter.
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DressSeed {
    Rational,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Convention {
    #[value(name = "b-matrix")]
    BMatrix,
    D7,
}

impl From<Convention> for LinearConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::BMatrix => LinearConvention::BMatrix,
            Convention::D7 => LinearConvention::D7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitKind {
    Identity,
    Random,
}

#[derive(Debug, Args)]
pub struct DressArgs {
    /// Number of Darboux steps (at most 4).
    #[arg(long = "N", default_value_t = 1)]
    pub n: usize,
    /// Spectral points, one per step.
    #[arg(long, value_delimiter = ',', value_parser = parse::complex, allow_hyphen_values = true)]
    pub gamma: Vec<Complex64>,
    /// Seed solution.
    #[arg(long = "seed", visible_alias = "seed-kind", value_enum, default_value_t = DressSeed::Rational)]
    pub seed_kind: DressSeed,
    #[arg(long = "C", value_parser = parse::complex, allow_hyphen_values = true)]
    pub c: Option<Complex64>,
    #[arg(long, value_parser = parse::z_range, default_value = "1:2:0.001")]
    pub z: GridSpec,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, value_enum, default_value_t = Convention::BMatrix)]
    pub dt_convention: Convention,
    /// Initial data (chi, Phi) at the left end of the grid.
    #[arg(long, value_enum, default_value_t = InitKind::Random)]
    pub init: InitKind,
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
    /// Spectral point used to compare the quasideterminant eigenfunctions
    /// with direct iteration.
    #[arg(long, value_parser = parse::complex, default_value = "0.5+0.5i", allow_hyphen_values = true)]
    pub probe_gamma: Complex64,
    /// Write grids for every v[k], not only v[N].
    #[arg(long)]
    pub all_grids: bool,
}

#[derive(Debug, Args)]
pub struct SymmetricArgs {
    #[arg(long, value_parser = parse::complex, default_value = "1", allow_hyphen_values = true)]
    pub v0: Complex64,
    #[arg(long, value_parser = parse::complex, default_value = "1", allow_hyphen_values = true)]
    pub v1: Complex64,
    #[arg(long, value_parser = parse::complex, default_value = "0.5", allow_hyphen_values = true)]
    pub v2: Complex64,
    /// Random d x d initial data instead of scalar multiples of one.
    #[arg(long)]
    pub random: bool,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = parse::complex, default_value = "1", allow_hyphen_values = true)]
    pub alpha0: Complex64,
    #[arg(long, value_parser = parse::complex, default_value = "1", allow_hyphen_values = true)]
    pub alpha1: Complex64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub t0: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub h: f64,
    /// Reset v1 so the first integral equals --integral-constant; requires
    /// alpha0 + alpha1 = 2 and adds the reduction residual of v2.
    #[arg(long)]
    pub normalize: bool,
    #[arg(long, value_parser = parse::complex, default_value = "0", allow_hyphen_values = true)]
    pub integral_constant: Complex64,
    /// Lax residual is sampled every this many steps.
    #[arg(long, default_value_t = 50)]
    pub sample_every: usize,
}
