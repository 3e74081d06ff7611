//! Learning policies.
//!
//! A policy picks an action each round and then sees only the graph-feedback
//! slice of that round's rewards through a [`FeedbackView`].

use serde::{Deserialize, Serialize};

use crate::action::Action;
use crate::error::Result;
use crate::feedback::FeedbackView;
use crate::graph::FeedbackGraph;
use crate::rng::SimRng;

pub mod elimination;
pub mod etc;
pub mod osmdg;
pub mod uniform;

pub use elimination::{elimination_radius, ArmElimination, EliminationEvent, EliminationState};
pub use etc::ExploreThenCommit;
pub use osmdg::{
    estimate_rewards, osmdg_update, recommended_parameters, Osmdg, OsmdgConfig, OsmdgState,
    RewardEstimate, Tuning,
};
pub use uniform::UniformRandom;

pub trait Policy: Send {
    fn id(&self) -> &'static str;

    /// Chooses the action for round `round` (0-based) under `graph`.
    fn select(&mut self, round: usize, graph: &FeedbackGraph, rng: &mut SimRng) -> Result<Action>;

    /// Feedback for the action returned by the last `select`.
    fn observe(&mut self, action: &Action, feedback: &FeedbackView<'_>) -> Result<()>;

    fn diagnostics(&self) -> Diagnostics {
        Diagnostics::default()
    }
}

/// Policy-specific facts collected over a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Rounds after which a clique-aligned iterate left alignment.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alignment_breaks: Vec<usize>,
    /// Rounds whose action was drawn on the aligned branch of the clique sampler.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aligned_draws: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eliminations: Vec<EliminationEvent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active_decisions: Option<Vec<Action>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub committed: Option<Action>,
}
