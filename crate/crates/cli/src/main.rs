//! `wm`: evaluate, sample and verify from the command line.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use wm_core::tolerance::DEFAULT_RATIONAL_GUARD;
use wm_core::ToleranceConfig;

#[derive(Debug, Parser)]
#[command(name = "wm", version, about = "Continued fractions, Wilton's function and moments of g")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Absolute tolerance handed to every evaluator.
    #[arg(long, global = true, env = "WM_ABS_TOL", allow_negative_numbers = true, default_value_t = 1e-10)]
    pub abs_tol: f64,

    #[arg(long, global = true, env = "WM_REL_TOL", allow_negative_numbers = true, default_value_t = 1e-8)]
    pub rel_tol: f64,

    /// Cap on series terms.
    #[arg(long, global = true, env = "WM_MAX_TERMS", default_value_t = 200)]
    pub max_terms: usize,

    /// Cap on the continued-fraction depth.
    #[arg(long, global = true, env = "WM_MAX_ORBIT_DEPTH", default_value_t = 40)]
    pub max_orbit_depth: usize,

    /// Smallest Gauss-map iterate accepted before a point is declared
    /// effectively rational.
    #[arg(long, global = true, env = "WM_RATIONAL_GUARD", allow_negative_numbers = true, default_value_t = DEFAULT_RATIONAL_GUARD)]
    pub rational_guard: f64,

    #[arg(long, global = true, env = "WM_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, env = "WM_THREADS")]
    pub threads: Option<usize>,

    /// Output format. `table` is only available for `verify`, where it is
    /// the default; everything else defaults to `json`.
    #[arg(long, alias = "out", global = true, env = "WM_FORMAT", value_enum)]
    pub format: Option<Format>,

    /// Write the report here instead of stdout.
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
}

impl GlobalArgs {
    pub fn tolerance(&self) -> ToleranceConfig {
        ToleranceConfig {
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            max_terms: self.max_terms,
            max_orbit_depth: self.max_orbit_depth,
            rational_guard: self.rational_guard,
            ..ToleranceConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Function {
    #[value(name = "g")]
    G,
    #[value(name = "W")]
    W,
    #[value(name = "H")]
    H,
    #[value(name = "A")]
    A,
    #[value(name = "F")]
    F,
    #[value(name = "Phi2")]
    Phi2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GRoute {
    #[value(name = "wilton_plus_H", alias = "wilton")]
    WiltonPlusH,
    #[value(name = "direct_series", alias = "direct")]
    DirectSeries,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    #[value(alias = "mc_stratified")]
    Mc,
    #[value(alias = "quad_log_substitution")]
    Quad,
}

/// Points given explicitly or as an evenly spaced grid.
#[derive(Debug, Args)]
pub struct PointArgs {
    /// Evaluation points, comma separated or repeated.
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
    pub x: Vec<f64>,

    /// Grid `lo,hi,n`: n points spaced evenly over [lo, hi].
    #[arg(long, value_delimiter = ',', num_args = 1, conflicts_with = "x", allow_negative_numbers = true)]
    pub grid: Option<Vec<f64>>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate g, W, H, A, F or Phi2.
    Eval {
        #[arg(long = "fn", value_enum)]
        function: Function,
        #[command(flatten)]
        points: PointArgs,
        /// Route for g.
        #[arg(long, value_enum, default_value = "wilton_plus_H")]
        method: GRoute,
    },
    /// Continued-fraction expansion of a point.
    Cf {
        #[arg(long, allow_negative_numbers = true)]
        x: f64,
        #[arg(long, default_value_t = 10)]
        depth: usize,
    },
    /// Wilton's function at given points or at Gauss-measure samples.
    Wilton {
        #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
        x: Vec<f64>,
        /// Draw this many points from the Gauss measure instead.
        #[arg(long, conflicts_with = "x")]
        samples: Option<usize>,
    },
    /// Absolute moments of g.
    Moment {
        #[arg(long, required_unless_present = "sweep", conflicts_with = "sweep")]
        k: Option<f64>,
        /// Several K values, comma separated, in increasing order.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        sweep: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, value_enum, default_value = "mc")]
        method: MethodArg,
        /// Quadrature panels.
        #[arg(long, default_value_t = 1 << 14)]
        panels: usize,
        /// Relative accuracy asked of each integrand value.
        #[arg(long, default_value_t = 1e-5)]
        rel_accuracy: f64,
    },
    /// Distribution of the cotangent sum over a residue range.
    CotangentDist {
        #[arg(long)]
        b: u64,
        #[arg(long, default_value_t = 0.5)]
        a0: f64,
        #[arg(long, default_value_t = 1.0)]
        a1: f64,
        /// Highest even moment order is 2*kmax.
        #[arg(long, default_value_t = 4)]
        kmax: usize,
        /// Sample this many residues instead of a full sweep.
        #[arg(long)]
        sample: Option<usize>,
        /// Also write the per-residue values as CSV (r, c0, c0/b).
        #[arg(long)]
        values: Option<PathBuf>,
    },
    /// Run acceptance suites.
    Verify {
        /// Suite name; repeat for several.
        #[arg(long, required_unless_present = "all")]
        suite: Vec<String>,
        #[arg(long, conflicts_with = "suite")]
        all: bool,
        /// Monte Carlo draws per K for the gamma-trend suite.
        #[arg(long)]
        moment_samples: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match commands::run(&cli) {
        Ok(status) => status,
        Err(commands::Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(commands::Failure::Computation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
