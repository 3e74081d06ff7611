use std::cell::Cell;

use crate::action::Action;
use crate::error::{Error, Result};
use crate::graph::FeedbackGraph;

/// The slice of a round's rewards a policy is allowed to see.
///
/// Holds the full reward vector but only serves arms in `N_out(v)`. Every
/// read is counted; a read outside the neighborhood is refused and
/// remembered so the harness can fail the run even if the policy swallowed
/// the error.
pub struct FeedbackView<'a> {
    graph: &'a FeedbackGraph,
    rewards: &'a [f64],
    observed: Vec<bool>,
    reads: Cell<usize>,
    violation: Cell<Option<usize>>,
}

impl<'a> FeedbackView<'a> {
    pub fn new(graph: &'a FeedbackGraph, action: &Action, rewards: &'a [f64]) -> Self {
        Self {
            graph,
            rewards,
            observed: graph.observed_mask(action),
            reads: Cell::new(0),
            violation: Cell::new(None),
        }
    }

    /// The feedback graph in force this round.
    pub fn graph(&self) -> &'a FeedbackGraph {
        self.graph
    }

    pub fn num_arms(&self) -> usize {
        self.observed.len()
    }

    pub fn is_observed(&self, arm: usize) -> bool {
        self.observed.get(arm).copied().unwrap_or(false)
    }

    pub fn observed_arms(&self) -> impl Iterator<Item = usize> + '_ {
        self.observed
            .iter()
            .enumerate()
            .filter_map(|(a, &o)| o.then_some(a))
    }

    pub fn reward(&self, arm: usize) -> Result<f64> {
        if !self.is_observed(arm) {
            if self.violation.get().is_none() {
                self.violation.set(Some(arm));
            }
            return Err(Error::UnobservedRead { arm });
        }
        self.reads.set(self.reads.get() + 1);
        Ok(self.rewards[arm])
    }

    /// All observed `(arm, reward)` pairs.
    pub fn observation(&self) -> Vec<(usize, f64)> {
        self.observed_arms()
            .map(|a| {
                self.reads.set(self.reads.get() + 1);
                (a, self.rewards[a])
            })
            .collect()
    }

    pub fn reads(&self) -> usize {
        self.reads.get()
    }

    /// First arm read outside the neighborhood, if any.
    pub fn violation(&self) -> Option<usize> {
        self.violation.get()
    }
}
