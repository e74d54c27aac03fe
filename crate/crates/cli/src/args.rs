use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sawlab_core::lattice::LatticeSpec;

#[derive(Parser, Debug)]
#[command(name = "sawlab", version, about = "Exact enumeration and identity checks for self-avoiding walks")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Working precision for floating evaluations; 53 selects f64.
    #[arg(long = "precision-bits", global = true, default_value_t = 106,
          value_parser = clap::value_parser!(u32).range(53..=4096))]
    pub precision_bits: u32,
    /// Worker thread cap.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..=1024))]
    pub threads: Option<u32>,
    /// Abort enumerations after this many visited nodes.
    #[arg(long = "node-budget", global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub node_budget: Option<u64>,
    /// Result cache directory; SAWLAB_CACHE takes precedence.
    #[arg(long = "cache-dir", global = true)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long = "no-cache", global = true)]
    pub no_cache: bool,
    /// Add wall time and cache status to the output.
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Human,
}

fn lattice(s: &str) -> Result<LatticeSpec, String> {
    s.parse().map_err(|e| format!("{e}"))
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Walk counts c_n (or weakly self-avoiding weights for lambda < 1).
    Count {
        #[arg(long, value_parser = lattice)]
        lattice: LatticeSpec,
        #[arg(long, value_parser = clap::value_parser!(u32).range(0..=60))]
        n: u32,
        /// Exact rational in [0, 1].
        #[arg(long, default_value = "1")]
        lambda: String,
    },
    /// Bridge and half-space counts and the connective-constant bracket.
    Bridge {
        #[arg(long, value_parser = lattice)]
        lattice: LatticeSpec,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=60))]
        n: u32,
        /// Candidate connective constant, as a decimal or p/q.
        #[arg(long)]
        mu: Option<String>,
    },
    /// Polygon counts and the bridge-square inequality.
    Polygon {
        #[arg(long, value_parser = lattice)]
        lattice: LatticeSpec,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=30))]
        n: u32,
    },
    /// The Hammersley–Welsh inequality chain.
    Hw {
        #[arg(long, value_parser = lattice)]
        lattice: LatticeSpec,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=60))]
        n: u32,
    },
    /// Lace-expansion coefficients.
    Lace {
        #[arg(long, value_parser = lattice)]
        lattice: LatticeSpec,
        #[arg(long = "m-max", value_parser = clap::value_parser!(u32).range(1..=15))]
        m_max: u32,
        /// Largest lace size; defaults to all.
        #[arg(long = "n-max", value_parser = clap::value_parser!(u32).range(1..=15))]
        n_max: Option<u32>,
        #[arg(long = "check-recursion")]
        check_recursion: bool,
        /// Also check the K and J identities on all walks of length <= this.
        #[arg(long = "kj-b-max", value_parser = clap::value_parser!(u32).range(1..=12))]
        kj_b_max: Option<u32>,
    },
    /// Generating-function checks.
    Series {
        #[arg(long, value_parser = lattice)]
        lattice: LatticeSpec,
        #[arg(long, value_enum, default_value_t = SeriesCheck::Coefficients)]
        check: SeriesCheck,
        #[arg(long = "n-max", value_parser = clap::value_parser!(u32).range(1..=40))]
        n_max: u32,
        /// Exact rational p/q.
        #[arg(long)]
        z: Option<String>,
        /// Wave vector as comma-separated multiples of pi, each p/q.
        #[arg(long)]
        k: Option<String>,
        #[arg(long, default_value = "1")]
        lambda: String,
        #[arg(long = "half-width", default_value_t = 1, value_parser = clap::value_parser!(i32).range(0..=20))]
        half_width: i32,
        /// Comma-separated start point; defaults to the origin.
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
        /// Comma-separated end point; defaults to e_1.
        #[arg(long, allow_hyphen_values = true)]
        y: Option<String>,
    },
    /// Hexagonal-lattice observable checks.
    Hex {
        #[arg(long = "T", value_parser = clap::value_parser!(u32).range(1..=12))]
        t: Option<u32>,
        #[arg(long = "L", value_parser = clap::value_parser!(u32).range(1..=24))]
        l: Option<u32>,
        /// `zc`, `p/q*zc` or `p/q`.
        #[arg(long, default_value = "zc")]
        z: String,
        #[arg(long, default_value = "5/8")]
        sigma: String,
        #[arg(long, value_enum)]
        check: HexCheck,
        /// Largest L per strip width T = 1, 2, ...
        #[arg(long = "l-max", default_value = "12,8,5")]
        l_max: String,
    },
    /// Gaussian superintegral checks.
    Grassmann {
        #[arg(long = "M", default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..=16))]
        m: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of consecutive seeds to check.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=10000))]
        seeds: u32,
        #[arg(long, value_enum)]
        check: GrassmannCheck,
        /// Covariance matrix as JSON: rows of [re, im] pairs.
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// Exact rational arithmetic.
        #[arg(long)]
        exact: bool,
    },
    /// Simple random walk reference integrals.
    Srw {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=12))]
        d: u32,
        #[arg(long, value_enum)]
        task: SrwArg,
    },
    /// Evict least-recently-used cache entries down to a size.
    CacheGc {
        #[arg(long = "max-bytes")]
        max_bytes: u64,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesCheck {
    Coefficients,
    Ode,
    ChiBound,
    Fourier,
    SimonLieb,
    Diagrammatic,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum HexCheck {
    Vertex,
    Strip,
    Recursion,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrassmannCheck {
    Norm,
    Wick,
    Ibp,
    Repsaw,
    Loops,
    Tau,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrwArg {
    Return,
    Intersection,
    Green,
}
