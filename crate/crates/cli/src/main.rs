//! `gstrip`: build, verify and draw near-identity flattening maps.
//!
//! Every run is deterministic for a fixed command line: reports are
//! byte-identical across repetitions and figures identical up to the
//! version banner.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gstrip_cli::{commands, CliError};
use gstrip_core::gstrip::DEFAULT_PIECE_CAP;
use gstrip_core::polyfun::Tolerances;

#[derive(Parser)]
#[command(
    name = "gstrip",
    version,
    about = "Polyhedral strips: proximal maps, boundary covers and flattening pipelines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Tolerance overrides shared by the point-wise commands.
#[derive(Args)]
struct TolArgs {
    /// Relative activity tolerance for piece classification
    #[arg(long)]
    act_tol: Option<f64>,
    /// Gradient agreement tolerance for differentiability
    #[arg(long)]
    grad_tol: Option<f64>,
}

impl TolArgs {
    fn resolve(&self) -> Tolerances {
        let mut tol = Tolerances::default();
        if let Some(a) = self.act_tol {
            tol.act_tol = a;
        }
        if let Some(g) = self.grad_tol {
            tol.grad_tol = g;
        }
        tol
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the proximal map of a function file at a point
    Prox {
        #[arg(long)]
        func: PathBuf,
        /// Comma-separated coordinates, e.g. --point=1.5,-2
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        /// Expected ambient dimension (checked against the file)
        #[arg(long)]
        dim: Option<usize>,
        /// Also write the result as JSON
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        tol: TolArgs,
    },
    /// Test membership of a point in the strip of a function file
    Member {
        #[arg(long)]
        func: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(long)]
        dim: Option<usize>,
        #[command(flatten)]
        tol: TolArgs,
    },
    /// Merge strip functions so the result's strip contains every input strip
    Merge {
        /// Two or more function files
        #[arg(long, num_args = 2.., required = true)]
        inputs: Vec<PathBuf>,
        /// Piece cap for the merged function
        #[arg(long, default_value_t = DEFAULT_PIECE_CAP)]
        cap: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a verified strip cover of a set's boundary
    Cover {
        #[command(subcommand)]
        strategy: CoverCommand,
    },
    /// Cover, merge, flatten and verify a named set end to end
    Pipeline {
        /// Target set, e.g. square, disk:r=1, koch:k=3, carpet:k=2
        #[arg(long)]
        set: String,
        /// Displacement budget for the final map
        #[arg(long)]
        eps: f64,
        /// Override the set's natural cover strategy
        #[arg(long)]
        strategy: Option<String>,
        /// Cover file supplying external strips
        #[arg(long)]
        cover: Option<PathBuf>,
        /// Write the verification report as JSON
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write a figure of the merged strip and the target boundary
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Verification and boundary sample count
        #[arg(long)]
        samples: Option<usize>,
        /// Monte-Carlo samples for the measure-loss estimate
        #[arg(long)]
        area_samples: Option<usize>,
        /// Piece cap for merging
        #[arg(long)]
        cap: Option<usize>,
        /// Raster width of the figure in pixels
        #[arg(long, default_value_t = 360)]
        px: usize,
    },
    /// Re-check invariants of a function or cover file
    Verify {
        #[arg(long)]
        func: Option<PathBuf>,
        #[arg(long)]
        cover: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Draw the strip decomposition of a 2D function as SVG
    Render {
        #[arg(long)]
        func: PathBuf,
        /// Window as x0,y0,x1,y1
        #[arg(long, allow_hyphen_values = true)]
        bbox: String,
        #[arg(long)]
        out: PathBuf,
        /// Raster width in pixels
        #[arg(long, default_value_t = 420)]
        px: usize,
        /// Skip the dashed piece-equality lines
        #[arg(long)]
        no_planes: bool,
        #[arg(long)]
        dim: Option<usize>,
        #[command(flatten)]
        tol: TolArgs,
    },
    /// Cross-check the prox solver against the grid-refinement oracle
    Oracle {
        #[arg(long)]
        func: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        /// Grid refinement levels
        #[arg(long, default_value_t = 6)]
        levels: usize,
        /// Search radius (defaults to 2 lip + 1)
        #[arg(long)]
        radius: Option<f64>,
        /// Fail when solver and oracle disagree by more than this
        #[arg(long)]
        max_dev: Option<f64>,
        #[arg(long)]
        dim: Option<usize>,
    },
}

#[derive(Subcommand)]
enum CoverCommand {
    /// One classical slab per boundary support line
    Grid {
        #[command(flatten)]
        common: CoverArgs,
    },
    /// A shell strip around a convex set
    Convex {
        #[command(flatten)]
        common: CoverArgs,
        /// Shell depth around the body
        #[arg(long)]
        r: f64,
    },
    /// A graph cover of a C^2 subgraph boundary
    Surface {
        #[command(flatten)]
        common: CoverArgs,
    },
    /// Annulus strips for radial sets
    Radial {
        #[command(flatten)]
        common: CoverArgs,
    },
}

#[derive(Args)]
struct CoverArgs {
    /// Target set, e.g. square, disk:r=1, radial:0.1-0.2
    #[arg(long)]
    set: String,
    /// Construction tolerance
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    out: PathBuf,
    /// Containment samples checked on the boundary
    #[arg(long, default_value_t = 2_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Prox {
            func,
            point,
            dim,
            out,
            tol,
        } => commands::cmd_prox(&func, &point, tol.resolve(), dim, out.as_deref()),
        Command::Member {
            func,
            point,
            dim,
            tol,
        } => commands::cmd_member(&func, &point, tol.resolve(), dim),
        Command::Merge { inputs, cap, out } => commands::cmd_merge(&inputs, cap, &out),
        Command::Cover { strategy } => {
            let (kind, common) = match strategy {
                CoverCommand::Grid { common } => (commands::CoverKind::Grid, common),
                CoverCommand::Convex { common, r } => (commands::CoverKind::Convex { r }, common),
                CoverCommand::Surface { common } => (commands::CoverKind::Surface, common),
                CoverCommand::Radial { common } => (commands::CoverKind::Radial, common),
            };
            commands::cmd_cover(
                kind,
                &common.set,
                common.eps,
                common.samples,
                common.seed,
                &common.out,
            )
        }
        Command::Pipeline {
            set,
            eps,
            strategy,
            cover,
            report,
            svg,
            seed,
            samples,
            area_samples,
            cap,
            px,
        } => commands::cmd_pipeline(
            &set,
            eps,
            strategy.as_deref(),
            cover.as_deref(),
            report.as_deref(),
            svg.as_deref(),
            seed,
            samples,
            area_samples,
            cap,
            px,
        ),
        Command::Verify {
            func,
            cover,
            samples,
            seed,
            dim,
        } => commands::cmd_verify(func.as_deref(), cover.as_deref(), samples, seed, dim),
        Command::Render {
            func,
            bbox,
            out,
            px,
            no_planes,
            dim,
            tol,
        } => commands::cmd_render(&func, &bbox, &out, px, tol.resolve(), !no_planes, dim),
        Command::Oracle {
            func,
            point,
            levels,
            radius,
            max_dev,
            dim,
        } => commands::cmd_oracle(&func, &point, levels, radius, max_dev, dim),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}
