//! Command-line arguments.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Environment variable holding the default seed of `simulate` and `scan`.
pub const SEED_ENV: &str = "QNG_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "qng",
    version,
    about = "Quantum non-Gaussianity witnesses from photon-number mean and variance"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format [default: csv for curve/depth, json otherwise]
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write to this file instead of stdout
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,

    /// Exit with status 3 when a result is flagged nonphysical
    #[arg(long, global = true)]
    pub strict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a boundary formulation on a log-uniform r grid
    Curve(CurveArgs),
    /// Classify measured moments or probabilities
    Classify(ClassifyArgs),
    /// QNG depth of lossy state families
    Depth(DepthArgs),
    /// Simulate a measurement scheme and estimate the moments
    Simulate(SimulateArgs),
    /// Search Gaussian states and mixtures for points below the boundary
    Scan(ScanArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CurveKind {
    Moment,
    Intensity,
    G2,
    Fano,
    Quadrature,
    Prob,
    #[value(name = "converted_prob", alias = "converted-prob")]
    ConvertedProb,
    Multimode,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(value_enum)]
    pub which: CurveKind,
    /// Smallest r; 0 adds an r = 0 row ahead of the log grid
    #[arg(long, default_value_t = 0.0)]
    pub r_min: f64,
    #[arg(long, default_value_t = 2.0)]
    pub r_max: f64,
    /// Number of rows
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    /// Mode count for the multimode curve
    #[arg(long, default_value_t = 1)]
    pub modes: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseStage {
    /// Noise added before the amplifier; removed with the loss after gain inversion
    Pre,
    /// Noise added after the amplifier; removed before gain inversion
    Post,
}

#[derive(Debug, Args)]
#[allow(non_snake_case)]
pub struct ClassifyArgs {
    /// Photon-number mean
    #[arg(long)]
    pub m: Option<f64>,
    /// Photon-number variance
    #[arg(long)]
    pub s2: Option<f64>,
    /// Integrated-intensity first moment
    #[arg(long)]
    pub w1: Option<f64>,
    /// Integrated-intensity second moment
    #[arg(long)]
    pub w2: Option<f64>,
    /// Second-order correlation (with --m)
    #[arg(long)]
    pub g2: Option<f64>,
    /// Vacuum probability
    #[arg(long)]
    pub p0: Option<f64>,
    /// Single-photon probability
    #[arg(long)]
    pub p1: Option<f64>,
    /// Amplified mean
    #[arg(long = "M")]
    pub M: Option<f64>,
    /// Amplified variance
    #[arg(long = "S2")]
    pub S2: Option<f64>,
    /// Phase-insensitive amplifier gain (point estimate)
    #[arg(long)]
    pub gain: Option<f64>,
    #[arg(long, requires = "gain")]
    pub gain_min: Option<f64>,
    #[arg(long, requires = "gain")]
    pub gain_max: Option<f64>,
    /// Invert the gain with --gain-min
    #[arg(long, requires = "gain_min")]
    pub conservative: bool,
    /// Quadrature sample files: one phase-random set or four homodyne directions
    #[arg(long, num_args = 1..)]
    pub samples: Vec<PathBuf>,
    /// Transmittance to correct for
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    /// Additive noise: poisson:<mean>, thermal:<mean> or additive:<mean>:<variance>
    #[arg(long)]
    pub noise: Option<String>,
    #[arg(long, value_enum, default_value_t = NoiseStage::Post)]
    pub noise_stage: NoiseStage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WitnessArg {
    Moment,
    Prob,
    Both,
}

#[derive(Debug, Args)]
pub struct DepthArgs {
    /// Fock states 1..5, both witnesses
    #[arg(long)]
    pub table1: bool,
    /// Photon-added thermal states k = 1..3, nbar = 0..0.4, both witnesses
    #[arg(long)]
    pub table2: bool,
    /// Fock numbers, comma separated
    #[arg(long, value_delimiter = ',')]
    pub fock: Vec<u32>,
    /// Photons added to a thermal state
    #[arg(long)]
    pub pat: Option<u32>,
    /// Thermal occupation for --pat
    #[arg(long, default_value_t = 0.0)]
    pub nbar: f64,
    #[arg(long, value_enum, default_value_t = WitnessArg::Both)]
    pub witness: WitnessArg,
    /// Additive detection noise for --fock: poisson:<mean>, thermal:<mean> or additive:<mean>:<variance>
    #[arg(long)]
    pub noise: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    Homodyne4,
    #[value(name = "phase_random", alias = "phase-random")]
    PhaseRandom,
    #[value(name = "double_homodyne", alias = "double-homodyne")]
    DoubleHomodyne,
    Pia,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub scheme: Scheme,
    /// vacuum, coherent:<a>[:<p>], thermal:<nbar>, squeezed:<r>[:<phi>],
    /// gaussian:<sigma2>:<r>:<phi>:<dx>:<dp>, fock:<n>, lossy_fock:<n>:<eta>,
    /// pats:<k>:<nbar>
    #[arg(long, default_value = "vacuum")]
    pub state: String,
    /// Samples per quadrature set
    #[arg(long, default_value_t = 100_000)]
    pub count: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    /// Amplifier gain (pia)
    #[arg(long)]
    pub gain: Option<f64>,
    /// Input mean for pia instead of --state
    #[arg(long, requires = "s2")]
    pub m: Option<f64>,
    /// Input variance for pia instead of --state
    #[arg(long, requires = "m")]
    pub s2: Option<f64>,
    /// Also write the raw quadrature samples into this directory
    #[arg(long)]
    pub samples_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Target means, comma separated
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,5,10")]
    pub m: Vec<f64>,
    #[arg(long, default_value_t = 0.02)]
    pub r_step: f64,
    #[arg(long, default_value_t = 0.05)]
    pub d_step: f64,
    #[arg(long, default_value_t = 12)]
    pub phi_count: usize,
    /// Random two-component mixtures per target
    #[arg(long, default_value_t = 2000)]
    pub mixtures: usize,
    /// Points per axis of the grid of boundary-state pairs
    #[arg(long, default_value_t = 40)]
    pub mixture_grid: usize,
    /// Lowest candidates rebuilt in the Fock basis
    #[arg(long, default_value_t = 4)]
    pub confirm: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
}
