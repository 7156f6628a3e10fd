use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use geowalk_cli::commands::{self, Ctx};
use geowalk_cli::config::{load_config, resolve_seed, ExperimentConfig};
use geowalk_cli::{exit_code_for, EXIT_CONFIG};
use geowalk_core::geometry::GraphKind;

#[derive(Parser)]
#[command(
    name = "geowalk",
    about = "Point-process graph walks: sampling, proximity graphs, resistances, recurrence diagnostics",
    version
)]
struct Cli {
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed (beats GEOWALK_SEED and the config).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (beats the config).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    /// Worker threads for replica-level parallelism (results do not depend
    /// on this).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Dt,
    Gab,
    Vs,
}

impl From<KindArg> for GraphKind {
    fn from(k: KindArg) -> GraphKind {
        match k {
            KindArg::Dt => GraphKind::Delaunay,
            KindArg::Gab => GraphKind::Gabriel,
            KindArg::Vs => GraphKind::VoronoiSkeleton,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample the configured point process into points.csv (+ sidecar).
    Sample,
    /// Build a graph over a stored sample.
    BuildGraph {
        #[arg(long)]
        points: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build and trim a graph to the analysis region.
    Trim {
        #[arg(long)]
        points: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate void/deviation constants for the configured process.
    VerifyAssumptions,
    /// Annulus crossing statistics of a trimmed graph.
    Annuli {
        #[arg(long)]
        points: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        i0: u32,
        #[arg(long)]
        imax: u32,
    },
    /// Partial sums of the recurrence series over annulus cuts.
    RecurrenceSeries {
        #[arg(long)]
        points: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        i0: u32,
        #[arg(long)]
        imax: u32,
    },
    /// Envelope event frequencies over replicas (dimension 2).
    Envelopes,
    /// Classify good boxes for a stored sample.
    GoodBoxes {
        #[arg(long)]
        points: PathBuf,
    },
    /// Build verified paths between adjacent good boxes (exit 3 on demotion).
    BoxPaths {
        #[arg(long)]
        points: PathBuf,
    },
    /// Realized rough-embedding constants (exit 3 when beta exceeds 2d).
    RoughEmbedding {
        #[arg(long)]
        points: PathBuf,
    },
    /// Effective resistance from the window center to outside B_n, with the
    /// certified annulus lower bound.
    Resistance {
        #[arg(long)]
        points: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        n: u32,
    },
    /// Simulate walks: escape estimate (--n) or fixed-length summaries
    /// (--max-steps).
    Walk {
        #[arg(long)]
        points: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        max_steps: Option<u64>,
        #[arg(long, default_value_t = 10_000)]
        replicas: u64,
    },
    /// Short Gabriel path with its exact certificate (exit 3 on failure).
    ShortPath {
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        x: usize,
        #[arg(long)]
        y: usize,
    },
    /// Search for descending chains.
    Chains {
        #[arg(long)]
        points: PathBuf,
        #[arg(long, default_value_t = 2)]
        min_len: usize,
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
    },
    /// Full pipeline: sample, build, trim, assign, analyze.
    Run,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}

fn real_main(cli: Cli) -> anyhow::Result<i32> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().ok();
    }
    let config: ExperimentConfig = match &cli.config {
        Some(path) => load_config(path)?,
        None => {
            eprintln!("error: --config is required");
            return Ok(EXIT_CONFIG);
        }
    };
    let seed = resolve_seed(config.seed, cli.seed)?;
    let ctx = Ctx::new(config, seed, cli.output_dir.clone())?;

    match cli.command {
        Command::Sample => commands::cmd_sample(&ctx),
        Command::BuildGraph { points, kind, out } => {
            commands::cmd_build_graph(&points, kind.into(), false, &out)
        }
        Command::Trim { points, kind, out } => {
            commands::cmd_build_graph(&points, kind.into(), true, &out)
        }
        Command::VerifyAssumptions => commands::cmd_verify_assumptions(&ctx),
        Command::Annuli { points, kind, i0, imax } => {
            commands::cmd_annuli(&ctx, &points, kind.into(), i0, imax, None)
        }
        Command::RecurrenceSeries { points, kind, i0, imax } => {
            commands::cmd_recurrence_series(&ctx, &points, kind.into(), i0, imax)
        }
        Command::Envelopes => commands::cmd_envelopes(&ctx),
        Command::GoodBoxes { points } => commands::cmd_good_boxes(&ctx, &points),
        Command::BoxPaths { points } => commands::cmd_box_paths(&ctx, &points),
        Command::RoughEmbedding { points } => commands::cmd_rough_embedding(&ctx, &points),
        Command::Resistance { points, kind, n } => {
            commands::cmd_resistance(&ctx, &points, kind.into(), n)
        }
        Command::Walk { points, kind, n, max_steps, replicas } => {
            commands::cmd_walk(&ctx, &points, kind.into(), n, max_steps, replicas)
        }
        Command::ShortPath { points, x, y } => commands::cmd_short_path(&ctx, &points, x, y),
        Command::Chains { points, min_len, budget } => {
            commands::cmd_chains(&ctx, &points, min_len, budget)
        }
        Command::Run => commands::cmd_run(&ctx),
    }
}
