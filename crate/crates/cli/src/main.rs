use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use msns_cli::commands::{self, CliError, Context};
use msns_cli::config::ConfigError;

#[derive(Parser)]
#[command(name = "msns", version, about = "Mini-batch stochastic Nesterov smoothing experiments")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Master seed, replacing the configured one.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, replacing the configured one.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic train/test pair and a manifest.
    Gen {
        #[arg(long, required_unless_present = "manifest")]
        config: Option<PathBuf>,
        /// Regenerate from an existing manifest instead of a config.
        #[arg(long, conflicts_with = "config")]
        manifest: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate parameters, solve every configured run and evaluate.
    Solve(Common),
    /// Grid search over (t, lambda1) by repeated k-fold cross-validation.
    Cv(Common),
    /// Run several solvers with equal oracle budgets.
    Bench(Common),
    /// Print the estimated constants and (N, m, mu) without solving.
    Estimate(Common),
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| ConfigError::Invalid(format!("--jobs: {e}")))?;
    }
    match cli.command {
        Command::Gen {
            config,
            manifest,
            seed,
            out,
        } => {
            let (manifest, out) = match (manifest, config) {
                (Some(path), _) => {
                    let dir = path.parent().map(PathBuf::from).unwrap_or_default();
                    (commands::load_manifest(&path)?, out.unwrap_or(dir))
                }
                (None, Some(config)) => {
                    let ctx = Context::load(&config, seed, out)?;
                    (commands::manifest_from_config(&ctx)?, ctx.cfg.output_dir.clone())
                }
                (None, None) => unreachable!("clap requires one of --config and --manifest"),
            };
            commands::cmd_gen(manifest, &out).map(drop)
        }
        Command::Solve(c) => commands::cmd_solve(&load(c)?).map(drop),
        Command::Cv(c) => commands::cmd_cv(&load(c)?).map(drop),
        Command::Bench(c) => commands::cmd_bench(&load(c)?).map(drop),
        Command::Estimate(c) => commands::cmd_estimate(&load(c)?).map(drop),
    }
}

fn load(c: Common) -> Result<Context, CliError> {
    Context::load(&c.config, c.seed, c.out)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
