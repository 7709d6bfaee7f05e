mod commands;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use covertime::mc::Start;

/// Random-walk cover times on graphs of bounded genus.
#[derive(Debug, Parser)]
#[command(name = "covertime", version)]
struct Cli {
    /// Output format. Matrices support csv; bounds and verify support text.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the output document here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a graph or triangulation.
    Gen {
        #[command(subcommand)]
        family: Family,
    },
    /// Check a graph or triangulation file.
    Validate {
        #[arg(long, conflicts_with = "tri", required_unless_present = "tri")]
        graph: Option<String>,
        #[arg(long)]
        tri: Option<String>,
    },
    /// Hitting, commute and difference times and effective resistances.
    Exact {
        #[arg(long)]
        graph: String,
        /// Relative residual tolerance for the linear solves.
        #[arg(long, default_value_t = covertime::exact::DEFAULT_RESIDUAL_TOL)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = TableChoice::All)]
        table: TableChoice,
    },
    /// Exact expected cover time by dynamic programming over visited sets.
    CoverExact {
        #[arg(long)]
        graph: String,
        /// Largest n attempted.
        #[arg(long, default_value_t = covertime::exact::DEFAULT_COVER_CAP)]
        cap: usize,
    },
    /// Monte Carlo estimate of the expected cover time.
    CoverMc {
        #[arg(long)]
        graph: String,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Evaluate cover-time bounds against an observed value.
    Bounds {
        #[arg(long)]
        graph: String,
        /// A number, or `auto` for the exact value (n <= cap) or a Monte Carlo estimate.
        #[arg(long, default_value = "auto")]
        observed: String,
        /// Constant used in bounds with an unspecified constant.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = covertime::exact::DEFAULT_COVER_CAP)]
        cap: usize,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Cell counts, Euler characteristic and genus of a triangulation.
    Genus {
        #[arg(long)]
        tri: String,
        /// Apply hexagonal refinement this many times first.
        #[arg(long, default_value_t = 0)]
        refine: usize,
    },
    /// Riemann-Hurwitz consistency of a covering ledger and branch-point budgets.
    RhCheck {
        #[arg(long, required_unless_present = "budget")]
        ledger: Option<String>,
        /// `g,deg`
        #[arg(long)]
        budget: Option<String>,
    },
    /// Circle packing of a torus triangulation.
    Pack {
        #[arg(long)]
        tri: String,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Also write an SVG drawing of one fundamental domain.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Dirichlet lower bound on R(u,w) from the logarithmic cutoff function.
    Certify {
        #[arg(long)]
        graph: String,
        #[arg(long)]
        packing: String,
        /// `u,w`
        #[arg(long)]
        pair: String,
        #[arg(long, allow_hyphen_values = true)]
        a: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        b: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        c: Option<f64>,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        /// Defaults to the graph's genus hint, else 1.
        #[arg(long)]
        genus: Option<u32>,
    },
    /// Extract a maximal well-separated subset from a packed configuration.
    Extract {
        #[arg(long)]
        config: String,
        #[arg(long, default_value_t = 1.0 / 6.0)]
        s: f64,
        /// Overrides the configuration's eps.
        #[arg(long)]
        eps: Option<f64>,
        /// Comma-separated vertex set; defaults to every vertex.
        #[arg(long)]
        vertices: Option<String>,
    },
    /// Run the identity suite on the built-in corpus.
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableChoice {
    All,
    H,
    C,
    D,
    R,
}

#[derive(Debug, Clone, clap::Args)]
struct McArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    replicas: usize,
    /// A vertex, or `worst` to take the largest estimate over all starts.
    #[arg(long, default_value = "worst", value_parser = parse_start)]
    start: Start,
    /// Per-replica step cap; defaults to max(1000 n², 10⁷).
    #[arg(long)]
    max_steps: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Family {
    Path {
        n: usize,
    },
    Complete {
        n: usize,
    },
    TorusGrid {
        k: usize,
    },
    Lollipop {
        clique: usize,
        path: usize,
    },
    TreePlusK5 {
        n: usize,
        g: usize,
    },
    /// Random recursive tree plus independent extra edges.
    Random {
        n: usize,
        p: f64,
        seed: u64,
    },
    TriangularTorus {
        k: usize,
        #[command(flatten)]
        surface: SurfaceArgs,
    },
    Tetrahedron {
        #[command(flatten)]
        surface: SurfaceArgs,
    },
}

#[derive(Debug, Clone, clap::Args)]
struct SurfaceArgs {
    /// Apply hexagonal refinement this many times.
    #[arg(long, default_value_t = 0)]
    refine: usize,
    /// Emit the 1-skeleton graph instead of the triangulation.
    #[arg(long)]
    skeleton: bool,
}

fn parse_start(s: &str) -> Result<Start, String> {
    if s == "worst" {
        return Ok(Start::Worst);
    }
    s.parse()
        .map(Start::Vertex)
        .map_err(|_| format!("expected a vertex index or `worst`, got `{s}`"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(fail) => {
            eprintln!("error: {}", fail.message);
            ExitCode::from(fail.code)
        }
    }
}
