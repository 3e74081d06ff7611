use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::Rng;

use semibandit::graph::DEFAULT_EXACT_CAP;
use semibandit::harness::{
    run, separation_experiment, separation_gap, sweep_and_fit, write_outputs, ExperimentConfig,
    OUT_DIR_ENV,
};
use semibandit::polytope::{kl_project, DualPoint, PolytopeSpec};
use semibandit::rng::stream;
use semibandit::rounding::{certify_sampler, SamplerKind};
use semibandit::FeedbackGraph;

#[derive(Parser)]
#[command(name = "semibandit", version, about = "Combinatorial semi-bandit experiments with graph feedback")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config for each seed and write traces plus a summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seeds, e.g. `1,2,3`.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long, env = OUT_DIR_ENV)]
        out: Option<PathBuf>,
    },
    /// Run a config over a horizon grid and fit the log-log regret slope.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',')]
        horizons: Option<Vec<usize>>,
        #[arg(long, env = OUT_DIR_ENV)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo check of a sampler's marginals and pairwise covariances
    /// at a random target.
    CheckSampler {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        s: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Sampler::Swap)]
        sampler: Sampler,
    },
    /// Independence number, domination bound and observability of a graph file.
    GraphInfo {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EXACT_CAP)]
        exact_cap: usize,
    },
    /// Swap rounding versus the clique-aligned sampler on disjoint cliques.
    Separation {
        #[arg(long)]
        cliques: usize,
        #[arg(long)]
        budget: usize,
        #[arg(long)]
        horizon: usize,
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        /// Reward gap of the best clique; defaults to sqrt(cliques/horizon).
        #[arg(long)]
        gap: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Sampler {
    Swap,
    MeanOnly,
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn load_config(path: &PathBuf, out: Option<PathBuf>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    if out.is_some() {
        cfg.output = out;
    }
    Ok(cfg)
}

/// Returns `false` when an invariant check failed.
fn execute(command: Command) -> Result<bool> {
    match command {
        Command::Run { config, seeds, out } => {
            let mut cfg = load_config(&config, out)?;
            if let Some(seeds) = seeds {
                cfg.seeds = seeds;
            }
            cfg.validate()?;
            let traces = run(&cfg)?;
            for t in &traces {
                let drift = (t.recomputed_regret() - t.final_regret).abs();
                if drift > 1e-9 {
                    bail!("seed {}: final regret differs from the trace by {drift:e}", t.seed);
                }
            }
            let dir = semibandit::harness::output_dir(&cfg);
            let summary = write_outputs(&cfg, &traces, &dir)?;
            print_json(&summary)?;
            Ok(true)
        }
        Command::Sweep { config, horizons, out } => {
            let cfg = load_config(&config, out)?;
            let grid = horizons.unwrap_or_else(|| cfg.horizons.clone());
            let report = sweep_and_fit(&cfg, &grid)?;
            let dir = semibandit::harness::output_dir(&cfg);
            std::fs::create_dir_all(&dir)?;
            let path = dir.join(format!("{}-{}-sweep.json", cfg.policy.id, cfg.hash()));
            std::fs::write(&path, serde_json::to_string_pretty(&report)?)?;
            print_json(&report)?;
            Ok(true)
        }
        Command::CheckSampler { k, s, samples, seed, sampler } => {
            let spec = PolytopeSpec::new(k, s, 0.0)?;
            let mut rng = stream(seed, 0);
            let w: Vec<f64> = (0..k).map(|_| rng.gen_range(-3.0f64..3.0).exp()).collect();
            let x = kl_project(&DualPoint::new(w)?, &spec)?;
            let kind = match sampler {
                Sampler::Swap => SamplerKind::SwapRounding,
                Sampler::MeanOnly => SamplerKind::MeanOnly,
            };
            let report = certify_sampler(&kind, &x, s, samples, &mut rng)?;
            print_json(&report)?;
            Ok(report.passes())
        }
        Command::GraphInfo { graph, exact_cap } => {
            let g = FeedbackGraph::load(&graph).with_context(|| format!("loading {}", graph.display()))?;
            print_json(&g.profile(exact_cap))?;
            Ok(true)
        }
        Command::Separation { cliques, budget, horizon, seeds, gap } => {
            let seeds: Vec<u64> = (0..seeds).collect();
            let gap = gap.unwrap_or_else(|| separation_gap(cliques, horizon));
            let report = separation_experiment(cliques, budget, horizon, &seeds, gap)?;
            print_json(&report)?;
            Ok(report.alignment_held)
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    match execute(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("invariant check failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
