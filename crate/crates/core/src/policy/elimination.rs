//! Combinatorial arm elimination for stochastic rewards on an explicit
//! decision subset.

use serde::{Deserialize, Serialize};

use super::{Diagnostics, Policy};
use crate::action::Action;
use crate::error::{Error, Result};
use crate::feedback::FeedbackView;
use crate::graph::FeedbackGraph;
use crate::rng::SimRng;

/// `6 S sqrt(ln(2T) ln(KT/fail) / N)`; infinite at `N = 0`.
pub fn elimination_radius(
    budget: usize,
    horizon: usize,
    num_arms: usize,
    failure_prob: f64,
    min_count: usize,
) -> f64 {
    if min_count == 0 {
        return f64::INFINITY;
    }
    let (s, t, k, n) = (budget as f64, horizon as f64, num_arms as f64, min_count as f64);
    6.0 * s * ((2.0 * t).ln() * (k * t / failure_prob).ln() / n).sqrt()
}

/// One pass of the elimination rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EliminationEvent {
    /// 0-based round after whose feedback the pass ran.
    pub round: usize,
    pub min_count: usize,
    pub radius: f64,
    pub best_empirical: f64,
    pub eliminated: Vec<Action>,
    pub active_after: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EliminationState {
    /// Indices into the decision list, ascending.
    pub active: Vec<usize>,
    pub means: Vec<f64>,
    pub counts: Vec<usize>,
    pub min_count: usize,
}

impl EliminationState {
    fn decision_count(&self, v: &Action) -> usize {
        v.arms().iter().map(|&a| self.counts[a]).min().unwrap_or(0)
    }

    fn decision_mean(&self, v: &Action) -> f64 {
        v.arms().iter().map(|&a| self.means[a]).sum()
    }
}

#[derive(Debug, Clone)]
pub struct ArmElimination {
    decisions: Vec<Action>,
    budget: usize,
    horizon: usize,
    failure_prob: f64,
    state: EliminationState,
    /// Least-observed decisions fixed at the start of the current round.
    pending: Vec<usize>,
    round: usize,
    history: Vec<EliminationEvent>,
}

impl ArmElimination {
    /// `decisions` is sorted and deduplicated; all must share one size.
    pub fn new(mut decisions: Vec<Action>, horizon: usize, failure_prob: f64) -> Result<Self> {
        decisions.sort();
        decisions.dedup();
        let first = decisions.first().ok_or(Error::EmptyActive)?;
        let (k, s) = (first.num_arms(), first.size());
        if decisions.iter().any(|v| v.num_arms() != k || v.size() != s) {
            return Err(Error::Config("decisions must share arm count and size".into()));
        }
        if !(failure_prob > 0.0 && failure_prob < 1.0) {
            return Err(Error::Config(format!("failure probability {failure_prob} not in (0,1)")));
        }
        if horizon == 0 {
            return Err(Error::Config("horizon must be positive".into()));
        }
        let state = EliminationState {
            active: (0..decisions.len()).collect(),
            means: vec![0.0; k],
            counts: vec![0; k],
            min_count: 0,
        };
        Ok(Self {
            decisions,
            budget: s,
            horizon,
            failure_prob,
            state,
            pending: Vec::new(),
            round: 0,
            history: Vec::new(),
        })
    }

    pub fn state(&self) -> &EliminationState {
        &self.state
    }

    pub fn history(&self) -> &[EliminationEvent] {
        &self.history
    }

    pub fn active_decisions(&self) -> Vec<Action> {
        self.state.active.iter().map(|&i| self.decisions[i].clone()).collect()
    }

    pub fn radius(&self, min_count: usize) -> f64 {
        let k = self.decisions[0].num_arms();
        elimination_radius(self.budget, self.horizon, k, self.failure_prob, min_count)
    }

    fn least_observed(&self) -> Vec<usize> {
        self.state
            .active
            .iter()
            .copied()
            .filter(|&i| self.state.decision_count(&self.decisions[i]) == self.state.min_count)
            .collect()
    }

    /// Raises `N` to the active minimum and drops decisions below the threshold.
    fn eliminate(&mut self, round: usize) -> Result<()> {
        let st = &self.state;
        let n = st
            .active
            .iter()
            .map(|&i| st.decision_count(&self.decisions[i]))
            .min()
            .ok_or(Error::EmptyActive)?;
        let best = st
            .active
            .iter()
            .map(|&i| st.decision_mean(&self.decisions[i]))
            .fold(f64::NEG_INFINITY, f64::max);
        let radius = self.radius(n);
        let (keep, drop): (Vec<usize>, Vec<usize>) = st
            .active
            .iter()
            .partition(|&&i| st.decision_mean(&self.decisions[i]) >= best - radius);
        if keep.is_empty() {
            return Err(Error::EmptyActive);
        }
        self.history.push(EliminationEvent {
            round,
            min_count: n,
            radius,
            best_empirical: best,
            eliminated: drop.iter().map(|&i| self.decisions[i].clone()).collect(),
            active_after: keep.len(),
        });
        self.state.active = keep;
        self.state.min_count = n;
        Ok(())
    }
}

impl Policy for ArmElimination {
    fn id(&self) -> &'static str {
        "arm-elimination"
    }

    fn select(&mut self, round: usize, graph: &FeedbackGraph, _rng: &mut SimRng) -> Result<Action> {
        let mut least = self.least_observed();
        // every least-observed decision was eliminated in the last pass
        while least.is_empty() {
            self.eliminate(round.saturating_sub(1))?;
            least = self.least_observed();
        }
        let mut in_union = vec![false; graph.num_arms()];
        for &i in &least {
            for &a in self.decisions[i].arms() {
                in_union[a] = true;
            }
        }
        let degree = |a: usize| graph.out_neighbors(a).iter().filter(|&&b| in_union[b]).count();
        let hub = (0..graph.num_arms())
            .filter(|&a| in_union[a])
            .max_by(|&a, &b| degree(a).cmp(&degree(b)).then(b.cmp(&a)))
            .ok_or(Error::EmptyActive)?;
        // `least` is ascending and the decision list is sorted
        let chosen = least
            .iter()
            .copied()
            .find(|&i| self.decisions[i].contains(hub))
            .ok_or(Error::EmptyActive)?;
        self.pending = least;
        self.round = round;
        Ok(self.decisions[chosen].clone())
    }

    fn observe(&mut self, _action: &Action, feedback: &FeedbackView<'_>) -> Result<()> {
        for (a, r) in feedback.observation() {
            let n = self.state.counts[a] + 1;
            self.state.means[a] += (r - self.state.means[a]) / n as f64;
            self.state.counts[a] = n;
        }
        let round = self.round;
        let n = self.state.min_count;
        let pending_min = self
            .pending
            .iter()
            .map(|&i| self.state.decision_count(&self.decisions[i]))
            .min()
            .unwrap_or(usize::MAX);
        if pending_min > n {
            self.eliminate(round)?;
        }
        Ok(())
    }

    fn diagnostics(&self) -> Diagnostics {
        Diagnostics {
            eliminations: self.history.clone(),
            active_decisions: Some(self.active_decisions()),
            ..Diagnostics::default()
        }
    }
}
