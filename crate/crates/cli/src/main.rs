//! `affdim`: command-line front end.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "affdim",
    version,
    about = "Dimension diagnostics for planar self-affine sets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Built-in system: grid-2x3, figure1, ex1-diag, ex2-triangular, singleton-degenerate.
    #[arg(long, conflicts_with = "system")]
    pub preset: Option<String>,
    /// Number of maps for ex2-triangular.
    #[arg(long)]
    pub n: Option<usize>,
    /// System definition in JSON.
    #[arg(long)]
    pub system: Option<PathBuf>,
    /// Directory for JSON, CSV and SVG outputs.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the JSON report instead of the text summary.
    #[arg(long)]
    pub json: bool,
    #[arg(long, default_value_t = 0x5EED)]
    pub seed: u64,
    /// Add wall-clock columns to CSV outputs.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw the cylinder images f_w(square) for all words of a given length.
    Render {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        depth: usize,
        /// Base shape: square or ball (default: square when it is invariant).
        #[arg(long)]
        shape: Option<String>,
    },
    /// Affinity dimension: closed form where available and level upper bounds.
    Dim {
        #[command(flatten)]
        common: Common,
        /// Deepest level; levels 1, 2, 4, … up to it are evaluated.
        #[arg(long, default_value_t = 8)]
        depth: usize,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Search for an invariant multicone of the transposes.
    Domination {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = affdim::domination::DEFAULT_MAX_INTERVALS)]
        max_intervals: usize,
        #[arg(long, default_value_t = affdim::domination::DEFAULT_MAX_ITER)]
        max_iter: usize,
        /// Word length for the comparability constant.
        #[arg(long, default_value_t = 6)]
        depth: usize,
    },
    /// Eigenfunction, conformal measure and Kaenmaki cylinder masses.
    Kaenmaki {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 6)]
        depth: usize,
        #[arg(long, default_value_t = 1e-13)]
        tol: f64,
    },
    /// Slice contents along V(ī) and their integral.
    Slices {
        #[command(flatten)]
        common: Common,
        /// Period of ī, e.g. "1,4".
        #[arg(long, default_value = "0")]
        word: String,
        #[arg(long, default_value_t = affdim::slices::DEFAULT_QUAD_POINTS)]
        quad: usize,
        /// Resolution as a fraction of |X|.
        #[arg(long, default_value_t = 2e-3)]
        r_min: f64,
        /// Slice exponent; defaults to s0 - 1.
        #[arg(long)]
        exponent: Option<f64>,
        /// Single offset t instead of the integral.
        #[arg(long, allow_hyphen_values = true)]
        t: Option<f64>,
    },
    /// Separation and mass-distribution diagnostics.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mass: bool,
        #[arg(long)]
        projection: bool,
        #[arg(long)]
        obnc: bool,
        #[arg(long)]
        ssc: bool,
        /// Comma-separated radii; default 3^-2, 3^-3, 3^-4 times |X|.
        #[arg(long)]
        scales: Option<String>,
        #[arg(long, default_value_t = affdim::diagnostics::DEFAULT_SAMPLES)]
        samples: usize,
        /// Refinement depth for the separation check.
        #[arg(long, default_value_t = 6)]
        depth: usize,
        /// Open rectangle U as "x0,y0,x1,y1".
        #[arg(long, default_value = "0,0,1,1")]
        rect: String,
    },
    /// Evaluate the hypotheses of the diagonal and triangular examples.
    VerifyExample {
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Render {
            common,
            depth,
            shape,
        } => commands::render(&common, depth, shape.as_deref()),
        Command::Dim { common, depth, tol } => commands::dim(&common, depth, tol),
        Command::Domination {
            common,
            max_intervals,
            max_iter,
            depth,
        } => commands::domination(&common, max_intervals, max_iter, depth),
        Command::Kaenmaki { common, depth, tol } => commands::kaenmaki(&common, depth, tol),
        Command::Slices {
            common,
            word,
            quad,
            r_min,
            exponent,
            t,
        } => commands::slices(&common, &word, quad, r_min, exponent, t),
        Command::Check {
            common,
            mass,
            projection,
            obnc,
            ssc,
            scales,
            samples,
            depth,
            rect,
        } => commands::check(
            &common,
            commands::Checks {
                mass,
                projection,
                obnc,
                ssc,
            },
            scales.as_deref(),
            samples,
            depth,
            &rect,
        ),
        Command::VerifyExample { common } => commands::verify_example(&common),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
