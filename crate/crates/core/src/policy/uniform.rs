use rand::seq::index::sample;
use rand::Rng;

use super::Policy;
use crate::action::Action;
use crate::error::{Error, Result};
use crate::feedback::FeedbackView;
use crate::graph::FeedbackGraph;
use crate::rng::SimRng;

/// Baseline that ignores feedback and plays a uniformly random decision.
#[derive(Debug, Clone)]
pub enum UniformRandom {
    /// Uniform over all `budget`-subsets of `num_arms`.
    Full { num_arms: usize, budget: usize },
    /// Uniform over an explicit list.
    Explicit(Vec<Action>),
}

impl UniformRandom {
    pub fn full(num_arms: usize, budget: usize) -> Result<Self> {
        if budget == 0 || budget > num_arms {
            return Err(Error::BudgetExceeded {
                budget,
                available: num_arms,
            });
        }
        Ok(Self::Full { num_arms, budget })
    }

    pub fn explicit(decisions: Vec<Action>) -> Result<Self> {
        if decisions.is_empty() {
            return Err(Error::Config("empty decision list".into()));
        }
        Ok(Self::Explicit(decisions))
    }
}

impl Policy for UniformRandom {
    fn id(&self) -> &'static str {
        "uniform"
    }

    fn select(&mut self, _round: usize, _graph: &FeedbackGraph, rng: &mut SimRng) -> Result<Action> {
        match self {
            Self::Full { num_arms, budget } => {
                Action::new(*num_arms, sample(rng, *num_arms, *budget))
            }
            Self::Explicit(list) => Ok(list[rng.gen_range(0..list.len())].clone()),
        }
    }

    fn observe(&mut self, _action: &Action, _feedback: &FeedbackView<'_>) -> Result<()> {
        Ok(())
    }
}
