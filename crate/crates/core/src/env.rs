//! Reward processes, decision sets and instance constructions.

use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::action::Action;
use crate::error::{Error, Result};
use crate::graph::FeedbackGraph;
use crate::rng::SimRng;

/// Base sequence of a clique-averaged source, one value per clique.
#[derive(Debug, Clone)]
pub enum CliqueBase {
    /// `h^t` read row by row; entries in `[0, |V_i|]`.
    Fixed(Arc<Vec<Vec<f64>>>),
    /// `h_i = scale * Bernoulli(means[i])`.
    Bernoulli { means: Vec<f64>, scale: f64 },
}

/// Emits the full reward vector `r^t` each round.
#[derive(Debug, Clone)]
pub enum RewardSource {
    FixedSequence(Arc<Vec<Vec<f64>>>),
    StochasticBernoulli { means: Vec<f64>, rng: SimRng },
    /// `r_a = h_i / |V_i|` for `a` in clique `V_i`.
    CliqueAveraged {
        cliques: Vec<Vec<usize>>,
        num_arms: usize,
        base: CliqueBase,
        rng: SimRng,
    },
}

fn check_unit(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|r| !(0.0..=1.0).contains(r)) {
        Some(i) => Err(Error::InvalidReward(format!("{what}[{i}] = {} not in [0,1]", values[i]))),
        None => Ok(()),
    }
}

impl RewardSource {
    pub fn fixed(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        for (t, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::BadShape(format!("row {t} has {} entries, expected {k}", row.len())));
            }
            check_unit(row, &format!("row {t}"))?;
        }
        Ok(Self::FixedSequence(Arc::new(rows)))
    }

    pub fn bernoulli(means: Vec<f64>, rng: SimRng) -> Result<Self> {
        check_unit(&means, "means")?;
        Ok(Self::StochasticBernoulli { means, rng })
    }

    pub fn clique_averaged(cliques: Vec<Vec<usize>>, base: CliqueBase, rng: SimRng) -> Result<Self> {
        let num_arms = cliques.iter().map(Vec::len).sum();
        let mut seen = vec![false; num_arms];
        for &a in cliques.iter().flatten() {
            if a >= num_arms || std::mem::replace(&mut seen[a], true) {
                return Err(Error::BadPartition(format!("arm {a} repeated or out of range")));
            }
        }
        if cliques.iter().any(Vec::is_empty) {
            return Err(Error::BadPartition("empty clique".into()));
        }
        let n = cliques.len();
        match &base {
            CliqueBase::Fixed(rows) => {
                for (t, row) in rows.iter().enumerate() {
                    if row.len() != n {
                        return Err(Error::BadShape(format!("base row {t} has {} entries, expected {n}", row.len())));
                    }
                    for (h, c) in row.iter().zip(&cliques) {
                        if !(0.0..=c.len() as f64).contains(h) {
                            return Err(Error::InvalidReward(format!("base row {t}: {h} outside [0, {}]", c.len())));
                        }
                    }
                }
            }
            CliqueBase::Bernoulli { means, scale } => {
                if means.len() != n {
                    return Err(Error::BadShape(format!("{} clique means for {n} cliques", means.len())));
                }
                check_unit(means, "clique means")?;
                if cliques.iter().any(|c| !(0.0..=c.len() as f64).contains(scale)) {
                    return Err(Error::InvalidReward(format!("scale {scale} exceeds a clique size")));
                }
            }
        }
        Ok(Self::CliqueAveraged {
            cliques,
            num_arms,
            base,
            rng,
        })
    }

    pub fn num_arms(&self) -> usize {
        match self {
            Self::FixedSequence(rows) => rows.first().map_or(0, Vec::len),
            Self::StochasticBernoulli { means, .. } => means.len(),
            Self::CliqueAveraged { num_arms, .. } => *num_arms,
        }
    }

    /// Expected rewards, when time-invariant.
    pub fn means(&self) -> Option<Vec<f64>> {
        match self {
            Self::FixedSequence(_) => None,
            Self::StochasticBernoulli { means, .. } => Some(means.clone()),
            Self::CliqueAveraged {
                cliques,
                num_arms,
                base: CliqueBase::Bernoulli { means, scale },
                ..
            } => {
                let mut mu = vec![0.0; *num_arms];
                for (c, m) in cliques.iter().zip(means) {
                    c.iter().for_each(|&a| mu[a] = scale * m / c.len() as f64);
                }
                Some(mu)
            }
            Self::CliqueAveraged { .. } => None,
        }
    }

    /// Reward vector for 0-based round `t`.
    pub fn emit(&mut self, t: usize) -> Result<Vec<f64>> {
        match self {
            Self::FixedSequence(rows) => rows.get(t).cloned().ok_or(Error::ExhaustedSequence {
                round: t,
                len: rows.len(),
            }),
            Self::StochasticBernoulli { means, rng } => {
                Ok(means.iter().map(|&m| f64::from(u8::from(rng.gen_bool(m)))).collect())
            }
            Self::CliqueAveraged {
                cliques,
                num_arms,
                base,
                rng,
            } => {
                let h: Vec<f64> = match base {
                    CliqueBase::Fixed(rows) => rows.get(t).cloned().ok_or(Error::ExhaustedSequence {
                        round: t,
                        len: rows.len(),
                    })?,
                    CliqueBase::Bernoulli { means, scale } => means
                        .iter()
                        .map(|&m| if rng.gen_bool(m) { *scale } else { 0.0 })
                        .collect(),
                };
                let mut r = vec![0.0; *num_arms];
                for (c, hi) in cliques.iter().zip(h) {
                    let share = hi / c.len() as f64;
                    c.iter().for_each(|&a| r[a] = share);
                }
                Ok(r)
            }
        }
    }
}

/// Reads a `T x K` reward table; `#` lines and blank lines are skipped.
pub fn load_reward_csv(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path.as_ref())
        .map_err(|e| Error::Io(e.to_string()))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Io(e.to_string()))?;
        let row = record
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| Error::InvalidReward(format!("{f:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    RewardSource::fixed(rows.clone())?;
    Ok(rows)
}

pub fn write_reward_csv(path: impl AsRef<Path>, rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path.as_ref())
        .map_err(|e| Error::Io(e.to_string()))?;
    for row in rows {
        w.write_record(row.iter().map(|r| format!("{r:?}")))
            .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// The decisions a policy may play.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DecisionSet {
    /// Every `budget`-subset of the arms.
    Full { num_arms: usize, budget: usize },
    Explicit { decisions: Vec<Action> },
}

impl DecisionSet {
    pub fn num_arms(&self) -> usize {
        match self {
            Self::Full { num_arms, .. } => *num_arms,
            Self::Explicit { decisions } => decisions.first().map_or(0, Action::num_arms),
        }
    }

    pub fn budget(&self) -> usize {
        match self {
            Self::Full { budget, .. } => *budget,
            Self::Explicit { decisions } => decisions.first().map_or(0, Action::size),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Full { num_arms, budget } => {
                if *budget == 0 || budget > num_arms {
                    return Err(Error::BudgetExceeded {
                        budget: *budget,
                        available: *num_arms,
                    });
                }
            }
            Self::Explicit { decisions } => {
                let first = decisions.first().ok_or(Error::EmptyActive)?;
                if decisions
                    .iter()
                    .any(|v| v.num_arms() != first.num_arms() || v.size() != first.size())
                {
                    return Err(Error::BadShape("decisions differ in arm count or size".into()));
                }
            }
        }
        Ok(())
    }

    /// Best decision for a cumulative reward vector, with its value.
    ///
    /// Full sets take the top `budget` arms, lowest index first among ties;
    /// explicit sets are scanned in order and keep the first maximizer.
    pub fn best(&self, cumulative: &[f64]) -> (Action, f64) {
        match self {
            Self::Full { num_arms, budget } => {
                let mut order: Vec<usize> = (0..*num_arms).collect();
                order.sort_by(|&a, &b| cumulative[b].total_cmp(&cumulative[a]));
                let v = Action::new(*num_arms, order[..*budget].iter().copied())
                    .expect("distinct in-range arms");
                let value = v.payoff(cumulative);
                (v, value)
            }
            Self::Explicit { decisions } => {
                let mut best = (decisions[0].clone(), decisions[0].payoff(cumulative));
                for v in &decisions[1..] {
                    let value = v.payoff(cumulative);
                    if value > best.1 {
                        best = (v.clone(), value);
                    }
                }
                best
            }
        }
    }
}

/// The feedback graph in force at each round.
#[derive(Debug, Clone)]
pub enum GraphSchedule {
    Fixed(FeedbackGraph),
    /// Graph `t` at round `t`, the last one repeated afterwards.
    PerRound(Vec<FeedbackGraph>),
}

impl GraphSchedule {
    pub fn at(&self, t: usize) -> &FeedbackGraph {
        match self {
            Self::Fixed(g) => g,
            Self::PerRound(gs) => &gs[t.min(gs.len() - 1)],
        }
    }
}

/// A hard instance from the lower-bound family.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundInstance {
    pub graph: FeedbackGraph,
    pub means: Vec<f64>,
    pub delta: f64,
    /// Arms `0..alpha`, split into `S` consecutive groups of `alpha/S`.
    pub independent: Vec<usize>,
    pub optimal: Action,
}

/// `Delta = sqrt(n/T)/64`, clamped below `1/4`.
pub fn lower_bound_gap(n: usize, horizon: usize) -> f64 {
    ((n as f64 / horizon as f64).sqrt() / 64.0).min(0.25 - 1e-12)
}

/// Builds the hard instance indexed by `u` (one position per group).
///
/// Arms `0..alpha` are independent with self-loops; the remaining arms form
/// a clique joined in both directions to every arm.
pub fn lower_bound_instance(
    num_arms: usize,
    budget: usize,
    alpha: usize,
    horizon: usize,
    u: &[usize],
) -> Result<LowerBoundInstance> {
    if budget == 0 || !alpha.is_multiple_of(budget) {
        return Err(Error::BadShape(format!("budget {budget} does not divide alpha {alpha}")));
    }
    let n = alpha / budget;
    if n < 4 {
        return Err(Error::BadShape(format!("alpha/S = {n} < 4")));
    }
    if alpha > num_arms || horizon == 0 {
        return Err(Error::BadShape(format!("alpha {alpha} > K {num_arms} or empty horizon")));
    }
    if u.len() != budget || u.iter().any(|&j| j >= n) {
        return Err(Error::BadShape(format!("u must hold {budget} positions below {n}")));
    }
    let mut edges: Vec<(usize, usize)> = (0..alpha).map(|a| (a, a)).collect();
    for b in alpha..num_arms {
        for a in 0..num_arms {
            edges.push((a, b));
            edges.push((b, a));
        }
    }
    let graph = FeedbackGraph::new(num_arms, edges)?;
    let delta = lower_bound_gap(n, horizon);
    let mut means = vec![0.0; num_arms];
    means[..alpha].iter_mut().for_each(|m| *m = 0.25);
    let best: Vec<usize> = u.iter().enumerate().map(|(m, &j)| m * n + j).collect();
    for &a in &best {
        means[a] += delta;
    }
    Ok(LowerBoundInstance {
        graph,
        means,
        delta,
        independent: (0..alpha).collect(),
        optimal: Action::new(num_arms, best)?,
    })
}

/// Blocks of `clique_size` arms, each a clique, joined according to `h`.
pub fn clique_partition_instance(h: &FeedbackGraph, clique_size: usize) -> Result<FeedbackGraph> {
    FeedbackGraph::clique_partition(h, clique_size)
}

/// The `K/S` consecutive blocks of `S` arms.
pub fn partition_decision_subset(num_arms: usize, budget: usize) -> Result<Vec<Action>> {
    if budget == 0 || !num_arms.is_multiple_of(budget) {
        return Err(Error::BadShape(format!("budget {budget} does not divide {num_arms}")));
    }
    (0..num_arms / budget)
        .map(|i| Action::new(num_arms, i * budget..(i + 1) * budget))
        .collect()
}

/// Arms with capacities, recast as a unit-capacity problem on copies.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityReduction {
    pub capacities: Vec<usize>,
    pub budget: usize,
    /// Copies of the original arms, one disjoint clique per original arm.
    pub graph: FeedbackGraph,
    /// Original arm of each copy.
    pub owner: Vec<usize>,
}

pub fn capacity_reduction(capacities: &[usize], budget: usize) -> Result<CapacityReduction> {
    if capacities.contains(&0) {
        return Err(Error::BadShape("capacities must be positive".into()));
    }
    let total: usize = capacities.iter().sum();
    if budget == 0 || budget > total {
        return Err(Error::BudgetExceeded {
            budget,
            available: total,
        });
    }
    let owner: Vec<usize> = capacities
        .iter()
        .enumerate()
        .flat_map(|(a, &n)| std::iter::repeat_n(a, n))
        .collect();
    let edges = (0..total).flat_map(|i| {
        let owner = &owner;
        (0..total).filter(move |&j| owner[i] == owner[j]).map(move |j| (i, j))
    });
    let graph = FeedbackGraph::new(total, edges)?;
    Ok(CapacityReduction {
        capacities: capacities.to_vec(),
        budget,
        graph,
        owner,
    })
}

impl CapacityReduction {
    pub fn num_copies(&self) -> usize {
        self.owner.len()
    }

    /// Every copy carries its original arm's reward.
    pub fn lift_rewards(&self, rewards: &[f64]) -> Result<Vec<f64>> {
        if rewards.len() != self.capacities.len() {
            return Err(Error::BadShape(format!(
                "{} rewards for {} arms",
                rewards.len(),
                self.capacities.len()
            )));
        }
        Ok(self.owner.iter().map(|&a| rewards[a]).collect())
    }

    /// Multiplicity of each original arm in a copy-action.
    pub fn fold_action(&self, action: &Action) -> Result<Vec<usize>> {
        if action.num_arms() != self.num_copies() {
            return Err(Error::BadShape("action is not over the copy arms".into()));
        }
        let mut counts = vec![0; self.capacities.len()];
        action.arms().iter().for_each(|&i| counts[self.owner[i]] += 1);
        Ok(counts)
    }
}
