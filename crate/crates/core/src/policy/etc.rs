//! Explore-then-commit over a dominating set, for weakly observable graphs.

use super::{Diagnostics, Policy};
use crate::action::Action;
use crate::error::{Error, Result};
use crate::feedback::FeedbackView;
use crate::graph::FeedbackGraph;
use crate::rng::SimRng;

#[derive(Debug, Clone)]
pub struct ExploreThenCommit {
    num_arms: usize,
    budget: usize,
    explore_rounds: usize,
    /// Exploration actions, cycled in order.
    schedule: Vec<Action>,
    means: Vec<f64>,
    counts: Vec<usize>,
    committed: Option<Action>,
}

impl ExploreThenCommit {
    /// `round(T^{2/3})`, capped at `T`.
    pub fn default_explore_rounds(horizon: usize) -> usize {
        ((horizon as f64).powf(2.0 / 3.0).round() as usize).min(horizon)
    }

    pub fn new(graph: &FeedbackGraph, budget: usize, explore_rounds: usize) -> Result<Self> {
        let k = graph.num_arms();
        if budget == 0 || budget > k {
            return Err(Error::BudgetExceeded {
                budget,
                available: k,
            });
        }
        let schedule = graph
            .greedy_dominating_set()?
            .into_iter()
            .map(|d| exploration_action(k, budget, d))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            num_arms: k,
            budget,
            explore_rounds,
            schedule,
            means: vec![0.0; k],
            counts: vec![0; k],
            committed: None,
        })
    }

    pub fn explore_rounds(&self) -> usize {
        self.explore_rounds
    }

    pub fn schedule(&self) -> &[Action] {
        &self.schedule
    }

    pub fn committed(&self) -> Option<&Action> {
        self.committed.as_ref()
    }

    pub fn empirical_means(&self) -> &[f64] {
        &self.means
    }

    fn commit(&self) -> Action {
        let mut order: Vec<usize> = (0..self.num_arms).collect();
        // stable sort keeps the lowest index first among equal means
        order.sort_by(|&a, &b| self.means[b].total_cmp(&self.means[a]));
        Action::from_mask(&{
            let mut mask = vec![false; self.num_arms];
            order[..self.budget].iter().for_each(|&a| mask[a] = true);
            mask
        })
    }
}

/// `d` together with the `S - 1` lowest-index other arms.
fn exploration_action(num_arms: usize, budget: usize, d: usize) -> Result<Action> {
    let pad = (0..num_arms).filter(|&a| a != d).take(budget - 1);
    Action::new(num_arms, std::iter::once(d).chain(pad))
}

impl Policy for ExploreThenCommit {
    fn id(&self) -> &'static str {
        "etc"
    }

    fn select(&mut self, round: usize, _graph: &FeedbackGraph, _rng: &mut SimRng) -> Result<Action> {
        if round < self.explore_rounds {
            return Ok(self.schedule[round % self.schedule.len()].clone());
        }
        if self.committed.is_none() {
            self.committed = Some(self.commit());
        }
        Ok(self.committed.clone().expect("set above"))
    }

    fn observe(&mut self, _action: &Action, feedback: &FeedbackView<'_>) -> Result<()> {
        if self.committed.is_some() {
            return Ok(());
        }
        for (a, r) in feedback.observation() {
            self.counts[a] += 1;
            self.means[a] += (r - self.means[a]) / self.counts[a] as f64;
        }
        Ok(())
    }

    fn diagnostics(&self) -> Diagnostics {
        Diagnostics {
            committed: self.committed.clone(),
            ..Diagnostics::default()
        }
    }
}
