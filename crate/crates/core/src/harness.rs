//! Experiment orchestration: seeded runs, regret traces, horizon sweeps and
//! the clique separation experiment.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::action::Action;
use crate::env::{
    load_reward_csv, lower_bound_instance, partition_decision_subset, CliqueBase, DecisionSet,
    GraphSchedule, RewardSource,
};
use crate::error::{Error, Result};
use crate::feedback::FeedbackView;
use crate::graph::{FeedbackGraph, DEFAULT_EXACT_CAP};
use crate::policy::{
    recommended_parameters, ArmElimination, Diagnostics, ExploreThenCommit, Osmdg, OsmdgConfig,
    Policy, UniformRandom,
};
use crate::polytope::PolytopeSpec;
use crate::rng::{stream, ENVIRONMENT_STREAM, POLICY_STREAM, RNG_ALGORITHM};
use crate::rounding::SamplerKind;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SEMIBANDIT_OUT_DIR";

pub const POLICY_IDS: [&str; 6] = ["osmdg", "osmd-vanilla", "osmd-clique", "arm-elimination", "etc", "uniform"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum GraphSpec {
    Complete { num_arms: usize },
    SelfLoops { num_arms: usize },
    Cycle { num_arms: usize, #[serde(default)] self_loops: bool },
    Star { num_arms: usize, #[serde(default)] center: usize },
    CliquePartition { cliques: Box<GraphSpec>, clique_size: usize },
    /// Independent arms `0..alpha` with self-loops, the rest a revealing clique.
    LowerBound { num_arms: usize, alpha: usize },
    File { path: PathBuf },
    Edges { num_arms: usize, edges: Vec<[usize; 2]> },
}

impl GraphSpec {
    pub fn build(&self) -> Result<FeedbackGraph> {
        match self {
            Self::Complete { num_arms } => FeedbackGraph::complete(*num_arms),
            Self::SelfLoops { num_arms } => FeedbackGraph::self_loops(*num_arms),
            Self::Cycle { num_arms, self_loops } => FeedbackGraph::cycle(*num_arms, *self_loops),
            Self::Star { num_arms, center } => FeedbackGraph::star(*num_arms, *center),
            Self::CliquePartition { cliques, clique_size } => {
                FeedbackGraph::clique_partition(&cliques.build()?, *clique_size)
            }
            Self::LowerBound { num_arms, alpha } => {
                let mut edges: Vec<(usize, usize)> = (0..*alpha).map(|a| (a, a)).collect();
                for b in *alpha..*num_arms {
                    for a in 0..*num_arms {
                        edges.extend([(a, b), (b, a)]);
                    }
                }
                FeedbackGraph::new(*num_arms, edges)
            }
            Self::File { path } => FeedbackGraph::load(path),
            Self::Edges { num_arms, edges } => {
                FeedbackGraph::new(*num_arms, edges.iter().map(|e| (e[0], e[1])))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecisionSpec {
    Full { budget: usize },
    /// Consecutive blocks of `budget` arms.
    Partition { budget: usize },
    Explicit { decisions: Vec<Vec<usize>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardSpec {
    Bernoulli { means: Vec<f64> },
    /// CSV file, one row of `K` rewards per round.
    Sequence { path: PathBuf },
    /// Clique `i` draws `h_i = clique_size * Bernoulli(means[i])`, shared
    /// equally by its arms.
    CliqueAveraged { clique_size: usize, means: Vec<f64> },
    /// Lower-bound means; the gap follows from the horizon.
    LowerBound { alpha: usize, u: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceConfig {
    pub graph: GraphSpec,
    pub decisions: DecisionSpec,
    pub rewards: RewardSpec,
    pub horizon: usize,
}

/// Policy id plus optional overrides of the default tuning.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Independence number used for tuning; computed from the graph if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_prob: Option<f64>,
    /// Block size for the clique-aligned sampler; defaults to the budget.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clique_size: Option<usize>,
}

impl PolicyConfig {
    pub fn named(id: &str) -> Self {
        Self {
            id: id.to_string(),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub instance: InstanceConfig,
    pub policy: PolicyConfig,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub horizons: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("no seeds".into()));
        }
        if self.instance.horizon == 0 {
            return Err(Error::Config("horizon must be positive".into()));
        }
        if self.horizons.windows(2).any(|w| w[0] >= w[1]) || self.horizons.first() == Some(&0) {
            return Err(Error::Config("horizon grid must be positive and strictly increasing".into()));
        }
        if !POLICY_IDS.contains(&self.policy.id.as_str()) {
            return Err(Error::Config(format!("unknown policy {:?}", self.policy.id)));
        }
        Ok(())
    }

    /// First 12 hex digits of the SHA-256 of the canonical JSON form,
    /// ignoring the output location.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(&Self {
            output: None,
            ..self.clone()
        })
        .expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))[..12].to_string()
    }

    pub fn with_horizon(&self, horizon: usize) -> Self {
        let mut cfg = self.clone();
        cfg.instance.horizon = horizon;
        cfg
    }
}

/// A built instance: graph, decisions and a reward template.
#[derive(Debug, Clone)]
pub struct Instance {
    pub graphs: GraphSchedule,
    pub decisions: DecisionSet,
    pub rewards: RewardSource,
    pub horizon: usize,
}

impl Instance {
    pub fn new(graph: FeedbackGraph, decisions: DecisionSet, rewards: RewardSource, horizon: usize) -> Result<Self> {
        decisions.validate()?;
        if graph.num_arms() != decisions.num_arms() || rewards.num_arms() != graph.num_arms() {
            return Err(Error::BadShape(format!(
                "graph has {} arms, decisions {}, rewards {}",
                graph.num_arms(),
                decisions.num_arms(),
                rewards.num_arms()
            )));
        }
        if horizon == 0 {
            return Err(Error::Config("horizon must be positive".into()));
        }
        Ok(Self {
            graphs: GraphSchedule::Fixed(graph),
            decisions,
            rewards,
            horizon,
        })
    }

    pub fn build(cfg: &InstanceConfig) -> Result<Self> {
        let graph = cfg.graph.build()?;
        let k = graph.num_arms();
        let decisions = match &cfg.decisions {
            DecisionSpec::Full { budget } => DecisionSet::Full { num_arms: k, budget: *budget },
            DecisionSpec::Partition { budget } => DecisionSet::Explicit {
                decisions: partition_decision_subset(k, *budget)?,
            },
            DecisionSpec::Explicit { decisions } => DecisionSet::Explicit {
                decisions: decisions
                    .iter()
                    .map(|v| Action::new(k, v.iter().copied()))
                    .collect::<Result<_>>()?,
            },
        };
        let placeholder = stream(0, ENVIRONMENT_STREAM);
        let rewards = match &cfg.rewards {
            RewardSpec::Bernoulli { means } => RewardSource::bernoulli(means.clone(), placeholder)?,
            RewardSpec::Sequence { path } => RewardSource::fixed(load_reward_csv(path)?)?,
            RewardSpec::CliqueAveraged { clique_size, means } => {
                let SamplerKind::CliqueAligned { cliques } = SamplerKind::contiguous_cliques(k, *clique_size)? else {
                    unreachable!()
                };
                let base = CliqueBase::Bernoulli {
                    means: means.clone(),
                    scale: *clique_size as f64,
                };
                RewardSource::clique_averaged(cliques, base, placeholder)?
            }
            RewardSpec::LowerBound { alpha, u } => {
                let inst = lower_bound_instance(k, decisions.budget(), *alpha, cfg.horizon, u)?;
                RewardSource::bernoulli(inst.means, placeholder)?
            }
        };
        Self::new(graph, decisions, rewards, cfg.horizon)
    }

    pub fn graph(&self) -> &FeedbackGraph {
        self.graphs.at(0)
    }

    /// Reward source with its own stream for `seed`.
    pub fn rewards_for_seed(&self, seed: u64) -> RewardSource {
        let mut src = self.rewards.clone();
        match &mut src {
            RewardSource::FixedSequence(_) => {}
            RewardSource::StochasticBernoulli { rng, .. } | RewardSource::CliqueAveraged { rng, .. } => {
                *rng = stream(seed, ENVIRONMENT_STREAM)
            }
        }
        src
    }

    fn admits(&self, v: &Action) -> bool {
        match &self.decisions {
            DecisionSet::Full { num_arms, budget } => v.num_arms() == *num_arms && v.size() == *budget,
            DecisionSet::Explicit { decisions } => decisions.contains(v),
        }
    }
}

fn full_set(instance: &Instance, id: &str) -> Result<(usize, usize)> {
    match instance.decisions {
        DecisionSet::Full { num_arms, budget } => Ok((num_arms, budget)),
        DecisionSet::Explicit { .. } => Err(Error::Config(format!("{id} needs the full decision set"))),
    }
}

/// Instantiates the configured policy for one run.
pub fn build_policy(cfg: &PolicyConfig, instance: &Instance) -> Result<Box<dyn Policy>> {
    let horizon = instance.horizon;
    let graph = instance.graph();
    match cfg.id.as_str() {
        id @ ("osmdg" | "osmd-vanilla" | "osmd-clique") => {
            let (k, s) = full_set(instance, id)?;
            let alpha = match cfg.alpha {
                Some(a) => a,
                None => {
                    let profile = graph.profile(DEFAULT_EXACT_CAP);
                    if !profile.alpha_is_exact {
                        return Err(Error::Config(format!(
                            "independence number of a {k}-arm graph is not computed exactly; set policy.alpha"
                        )));
                    }
                    profile.alpha
                }
            };
            let tuning = recommended_parameters(k, s, horizon, alpha)?;
            let spec = PolytopeSpec::new(k, s, cfg.epsilon.unwrap_or(tuning.epsilon))?;
            let sampler = match id {
                "osmdg" => SamplerKind::SwapRounding,
                "osmd-vanilla" => SamplerKind::MeanOnly,
                _ => SamplerKind::contiguous_cliques(k, cfg.clique_size.unwrap_or(s))?,
            };
            Ok(Box::new(Osmdg::new(OsmdgConfig::new(spec, cfg.eta.unwrap_or(tuning.eta), sampler)?)))
        }
        "arm-elimination" => {
            let decisions = match &instance.decisions {
                DecisionSet::Explicit { decisions } => decisions.clone(),
                DecisionSet::Full { .. } => {
                    return Err(Error::Config("arm-elimination needs an explicit decision set".into()))
                }
            };
            Ok(Box::new(ArmElimination::new(decisions, horizon, cfg.failure_prob.unwrap_or(0.05))?))
        }
        "etc" => {
            let (_, s) = full_set(instance, "etc")?;
            let t0 = cfg.t0.unwrap_or_else(|| ExploreThenCommit::default_explore_rounds(horizon));
            Ok(Box::new(ExploreThenCommit::new(graph, s, t0)?))
        }
        "uniform" => Ok(Box::new(match &instance.decisions {
            DecisionSet::Full { num_arms, budget } => UniformRandom::full(*num_arms, *budget)?,
            DecisionSet::Explicit { decisions } => UniformRandom::explicit(decisions.clone())?,
        })),
        other => Err(Error::Config(format!("unknown policy {other:?}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based round.
    pub t: usize,
    pub action: Action,
    /// Realized payoff of the action this round.
    pub payoff: f64,
    /// Running hindsight-best payoff minus realized payoff so far.
    pub cumulative_regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    pub policy: String,
    pub seed: u64,
    pub horizon: usize,
    pub rounds: Vec<RoundRecord>,
    pub best_action: Action,
    pub best_payoff: f64,
    pub realized_payoff: f64,
    pub final_regret: f64,
    pub diagnostics: Diagnostics,
    pub rng_algorithm: String,
}

impl RegretTrace {
    /// `best_payoff` minus the sum of per-round payoffs in the trace.
    pub fn recomputed_regret(&self) -> f64 {
        self.best_payoff - self.rounds.iter().map(|r| r.payoff).sum::<f64>()
    }

    /// Fraction of rounds whose action is one of `blocks`.
    pub fn block_fraction(&self, blocks: &[Action]) -> f64 {
        let hits = self.rounds.iter().filter(|r| blocks.contains(&r.action)).count();
        hits as f64 / self.rounds.len().max(1) as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,action,payoff,cumulative_regret\n");
        for r in &self.rounds {
            writeln!(out, "{},{},{:?},{:?}", r.t, r.action, r.payoff, r.cumulative_regret).expect("string write");
        }
        out
    }
}

/// Plays `policy` against `instance` for one seed.
///
/// The policy draws from the policy stream of `seed`, the environment from
/// the environment stream. Any read outside the observed neighborhood or
/// any action outside the decision set aborts the run.
pub fn run_single(instance: &Instance, policy: &mut dyn Policy, seed: u64) -> Result<RegretTrace> {
    let k = instance.decisions.num_arms();
    let mut rng = stream(seed, POLICY_STREAM);
    let mut source = instance.rewards_for_seed(seed);
    let mut cumulative = vec![0.0; k];
    let mut realized = 0.0;
    let mut rounds = Vec::with_capacity(instance.horizon);
    for t in 0..instance.horizon {
        let graph = instance.graphs.at(t);
        let action = policy.select(t, graph, &mut rng)?;
        if !instance.admits(&action) {
            return Err(Error::Config(format!("{} played {action} outside the decision set at round {}", policy.id(), t + 1)));
        }
        let rewards = source.emit(t)?;
        let view = FeedbackView::new(graph, &action, &rewards);
        let outcome = policy.observe(&action, &view);
        if let Some(arm) = view.violation() {
            return Err(Error::UnobservedRead { arm });
        }
        outcome?;
        let payoff = action.payoff(&rewards);
        realized += payoff;
        cumulative.iter_mut().zip(&rewards).for_each(|(c, r)| *c += r);
        let (_, best) = instance.decisions.best(&cumulative);
        rounds.push(RoundRecord {
            t: t + 1,
            action,
            payoff,
            cumulative_regret: best - realized,
        });
    }
    let (best_action, best_payoff) = instance.decisions.best(&cumulative);
    Ok(RegretTrace {
        policy: policy.id().to_string(),
        seed,
        horizon: instance.horizon,
        rounds,
        best_action,
        best_payoff,
        realized_payoff: realized,
        final_regret: best_payoff - realized,
        diagnostics: policy.diagnostics(),
        rng_algorithm: RNG_ALGORITHM.to_string(),
    })
}

/// Runs every seed in parallel; traces come back in seed order.
pub fn run_seeds(instance: &Instance, policy: &PolicyConfig, seeds: &[u64]) -> Result<Vec<RegretTrace>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let mut p = build_policy(policy, instance)?;
            run_single(instance, p.as_mut(), seed)
        })
        .collect()
}

pub fn run(cfg: &ExperimentConfig) -> Result<Vec<RegretTrace>> {
    cfg.validate()?;
    let instance = Instance::build(&cfg.instance)?;
    run_seeds(&instance, &cfg.policy, &cfg.seeds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub policy: String,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    pub final_regrets: Vec<f64>,
    pub mean_final_regret: f64,
    pub std_final_regret: f64,
    pub files: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

pub fn trace_file_name(policy: &str, config_hash: &str, seed: u64) -> String {
    format!("{policy}-{config_hash}-seed{seed}.csv")
}

/// Writes one CSV per trace and a JSON summary into `dir`.
pub fn write_outputs(cfg: &ExperimentConfig, traces: &[RegretTrace], dir: &Path) -> Result<RunSummary> {
    std::fs::create_dir_all(dir)?;
    let hash = cfg.hash();
    let mut files = Vec::with_capacity(traces.len());
    for trace in traces {
        let name = trace_file_name(&trace.policy, &hash, trace.seed);
        std::fs::write(dir.join(&name), trace.to_csv())?;
        files.push(name);
    }
    let finals: Vec<f64> = traces.iter().map(|t| t.final_regret).collect();
    let (mean, std) = mean_std(&finals);
    let summary = RunSummary {
        config_hash: hash.clone(),
        policy: cfg.policy.id.clone(),
        horizon: cfg.instance.horizon,
        seeds: cfg.seeds.clone(),
        final_regrets: finals,
        mean_final_regret: mean,
        std_final_regret: std,
        files,
        slope: None,
    };
    let path = dir.join(format!("{}-{hash}-summary.json", cfg.policy.id));
    std::fs::write(path, serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

/// Output directory from the config, else the environment, else `./out`.
pub fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Least-squares fit of `ln y = slope ln x + intercept`.
pub fn fit_log_log(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::InsufficientData("need two or more points with positive coordinates".into()));
    }
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all x values coincide".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub horizon: usize,
    pub mean_regret: f64,
    pub std_regret: f64,
    pub std_error: f64,
    pub final_regrets: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub policy: String,
    pub points: Vec<SweepPoint>,
    pub slope: f64,
    pub intercept: f64,
}

pub const MIN_SWEEP_POINTS: usize = 3;
pub const MIN_SWEEP_SEEDS: usize = 10;

/// Runs the config at every horizon and fits the regret growth exponent.
pub fn sweep_and_fit(cfg: &ExperimentConfig, horizons: &[usize]) -> Result<SweepReport> {
    if horizons.len() < MIN_SWEEP_POINTS || cfg.seeds.len() < MIN_SWEEP_SEEDS {
        return Err(Error::InsufficientData(format!(
            "sweep needs >= {MIN_SWEEP_POINTS} horizons and >= {MIN_SWEEP_SEEDS} seeds, got {} and {}",
            horizons.len(),
            cfg.seeds.len()
        )));
    }
    let mut points = Vec::with_capacity(horizons.len());
    for &h in horizons {
        let sub = ExperimentConfig {
            horizons: Vec::new(),
            ..cfg.with_horizon(h)
        };
        let traces = run(&sub)?;
        points.push(sweep_point(h, traces.iter().map(|t| t.final_regret).collect()));
    }
    let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.horizon as f64, p.mean_regret)).collect();
    let (slope, intercept) = fit_log_log(&xy)?;
    Ok(SweepReport {
        policy: cfg.policy.id.clone(),
        points,
        slope,
        intercept,
    })
}

pub fn sweep_point(horizon: usize, final_regrets: Vec<f64>) -> SweepPoint {
    let (mean, std) = mean_std(&final_regrets);
    SweepPoint {
        horizon,
        mean_regret: mean,
        std_regret: std,
        std_error: std / (final_regrets.len() as f64).sqrt(),
        final_regrets,
    }
}

/// Default gap of the best clique: `sqrt(n/T)`, capped at `1/4`.
pub fn separation_gap(num_cliques: usize, horizon: usize) -> f64 {
    (num_cliques as f64 / horizon as f64).sqrt().min(0.25)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub num_cliques: usize,
    pub budget: usize,
    pub horizon: usize,
    pub gap: f64,
    pub seeds: Vec<u64>,
    pub swap_regrets: Vec<f64>,
    pub clique_regrets: Vec<f64>,
    pub swap_mean: f64,
    pub clique_mean: f64,
    /// Clique-aligned mean regret over swap-rounding mean regret.
    pub ratio: f64,
    pub alignment_held: bool,
    /// Share of swap-rounding rounds whose action mixed arms of several cliques.
    pub swap_mixed_fraction: f64,
}

/// The clique instance: `n` disjoint cliques of `S` arms, all cliques at
/// `1/4` except clique `seed % n` at `1/4 + gap`, every arm of a clique
/// sharing one Bernoulli draw.
pub fn separation_instance(num_cliques: usize, budget: usize, horizon: usize, gap: f64, seed: u64) -> Result<Instance> {
    let h = FeedbackGraph::self_loops(num_cliques)?;
    let graph = FeedbackGraph::clique_partition(&h, budget)?;
    let k = num_cliques * budget;
    let mut means = vec![0.25; num_cliques];
    means[(seed % num_cliques as u64) as usize] += gap;
    let SamplerKind::CliqueAligned { cliques } = SamplerKind::contiguous_cliques(k, budget)? else {
        unreachable!()
    };
    let base = CliqueBase::Bernoulli {
        means,
        scale: budget as f64,
    };
    let rewards = RewardSource::clique_averaged(cliques, base, stream(seed, ENVIRONMENT_STREAM))?;
    Instance::new(graph, DecisionSet::Full { num_arms: k, budget }, rewards, horizon)
}

/// Swap rounding against the clique-aligned sampler on paired reward streams.
pub fn separation_experiment(
    num_cliques: usize,
    budget: usize,
    horizon: usize,
    seeds: &[u64],
    gap: f64,
) -> Result<SeparationReport> {
    if seeds.is_empty() {
        return Err(Error::InsufficientData("no seeds".into()));
    }
    let blocks = partition_decision_subset(num_cliques * budget, budget)?;
    let policy = |id: &str| PolicyConfig {
        alpha: Some(num_cliques),
        clique_size: Some(budget),
        ..PolicyConfig::named(id)
    };
    let pairs: Vec<(RegretTrace, RegretTrace)> = seeds
        .par_iter()
        .map(|&seed| {
            let instance = separation_instance(num_cliques, budget, horizon, gap, seed)?;
            let mut swap = build_policy(&policy("osmdg"), &instance)?;
            let mut clique = build_policy(&policy("osmd-clique"), &instance)?;
            let a = run_single(&instance, swap.as_mut(), seed)?;
            let b = run_single(&instance, clique.as_mut(), seed)?;
            if let Some(&round) = b.diagnostics.alignment_breaks.first() {
                return Err(Error::AlignmentBroken { round });
            }
            if let Some(r) = b.rounds.iter().find(|r| !blocks.contains(&r.action)) {
                return Err(Error::AlignmentBroken { round: r.t });
            }
            Ok((a, b))
        })
        .collect::<Result<_>>()?;
    let swap_regrets: Vec<f64> = pairs.iter().map(|(a, _)| a.final_regret).collect();
    let clique_regrets: Vec<f64> = pairs.iter().map(|(_, b)| b.final_regret).collect();
    let swap_mean = mean_std(&swap_regrets).0;
    let clique_mean = mean_std(&clique_regrets).0;
    let swap_mixed_fraction =
        pairs.iter().map(|(a, _)| 1.0 - a.block_fraction(&blocks)).sum::<f64>() / pairs.len() as f64;
    Ok(SeparationReport {
        num_cliques,
        budget,
        horizon,
        gap,
        seeds: seeds.to_vec(),
        swap_regrets,
        clique_regrets,
        swap_mean,
        clique_mean,
        ratio: clique_mean / swap_mean,
        alignment_held: true,
        swap_mixed_fraction,
    })
}

/// Shared sequences for tests and tools that replay fixed rewards.
pub fn fixed_instance(graph: FeedbackGraph, decisions: DecisionSet, rows: Vec<Vec<f64>>) -> Result<Instance> {
    let horizon = rows.len();
    Instance::new(graph, decisions, RewardSource::FixedSequence(Arc::new(rows)), horizon)
}
