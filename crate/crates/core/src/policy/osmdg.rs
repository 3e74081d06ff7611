//! Online stochastic mirror descent under graph feedback.
//!
//! Each round: realize `x^t` as an action through the configured sampler,
//! build importance-weighted reward estimates from the observed
//! neighborhood, tilt `x^t` by `exp(eta * estimate)` and project back onto
//! the truncated polytope.

use serde::{Deserialize, Serialize};

use super::{Diagnostics, Policy};
use crate::action::Action;
use crate::error::{Error, Result};
use crate::feedback::FeedbackView;
use crate::graph::FeedbackGraph;
use crate::polytope::{dual_step, kl_project, DecisionPoint, PolytopeSpec, VertexDecomposition};
use crate::rng::SimRng;
use crate::rounding::{clique_aligned_draw, clique_values, draw, SamplerKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OsmdgConfig {
    pub spec: PolytopeSpec,
    pub eta: f64,
    pub sampler: SamplerKind,
}

impl OsmdgConfig {
    pub fn new(spec: PolytopeSpec, eta: f64, sampler: SamplerKind) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {eta}")));
        }
        if !(spec.truncation() > 0.0) {
            return Err(Error::Config("mirror descent needs a positive truncation".into()));
        }
        Ok(Self { spec, eta, sampler })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OsmdgState {
    pub x: DecisionPoint,
    pub round: usize,
}

impl OsmdgState {
    pub fn initial(spec: &PolytopeSpec) -> Self {
        Self {
            x: spec.initial_point(),
            round: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tuning {
    pub epsilon: f64,
    pub eta: f64,
}

/// `epsilon = 1/(KT)` and
/// `eta = sqrt(5 S ln(K/S) / ((6S + 4 alpha ln(4 S K^2 T / alpha)) T))`.
pub fn recommended_parameters(
    num_arms: usize,
    budget: usize,
    horizon: usize,
    alpha: usize,
) -> Result<Tuning> {
    if budget == 0 || budget > num_arms || horizon == 0 || alpha == 0 || alpha > num_arms {
        return Err(Error::Config(format!(
            "tuning needs 1 <= S <= K, T >= 1, 1 <= alpha <= K; got K = {num_arms}, S = {budget}, T = {horizon}, alpha = {alpha}"
        )));
    }
    if budget == num_arms {
        return Err(Error::DegenerateTuning(num_arms));
    }
    let (k, s, t, a) = (num_arms as f64, budget as f64, horizon as f64, alpha as f64);
    let epsilon = 1.0 / (k * t);
    let eta = (5.0 * s * (k / s).ln() / ((6.0 * s + 4.0 * a * (4.0 * s * k * k * t / a).ln()) * t))
        .sqrt();
    Ok(Tuning { epsilon, eta })
}

/// Output of [`estimate_rewards`].
#[derive(Debug, Clone, PartialEq)]
pub struct RewardEstimate {
    /// Importance-weighted loss estimates, nonnegative.
    pub loss: Vec<f64>,
    /// Estimates fed to the dual step (`1 - loss`, minus `shift` when `S = 1`).
    pub reward: Vec<f64>,
    /// The common offset subtracted in the `S = 1` branch, zero otherwise.
    pub shift: f64,
}

impl RewardEstimate {
    /// `1 - loss`, before any shift.
    pub fn unshifted(&self) -> Vec<f64> {
        self.loss.iter().map(|h| 1.0 - h).collect()
    }
}

/// Reward estimates from graph feedback.
///
/// `loss_a = (#{i in N_in(a) : v_i = 1}) (1 - r_a) / sum_{i in N_in(a)} x_i`,
/// `reward_a = 1 - loss_a`. When `S = 1`, every estimate is further shifted
/// by `1 + sum_{a : loss_a <= 1/((K-1) eps)} x_a loss_a`.
pub fn estimate_rewards(
    action: &Action,
    x: &DecisionPoint,
    feedback: &FeedbackView<'_>,
    spec: &PolytopeSpec,
) -> Result<RewardEstimate> {
    let graph = feedback.graph();
    let k = graph.num_arms();
    let xs = x.coords();
    let mask = action.mask();
    let mut loss = vec![0.0; k];
    for (a, h) in loss.iter_mut().enumerate() {
        let ins = graph.in_neighbors(a);
        let mass: f64 = ins.iter().map(|&i| xs[i]).sum();
        if !(mass > 0.0) {
            return Err(Error::DenominatorZero { arm: a });
        }
        let hits = ins.iter().filter(|&&i| mask[i]).count();
        if hits > 0 {
            *h = hits as f64 * (1.0 - feedback.reward(a)?) / mass;
        }
    }
    let mut reward: Vec<f64> = loss.iter().map(|h| 1.0 - h).collect();
    let mut shift = 0.0;
    if spec.budget() == 1 {
        let threshold = 1.0 / ((k as f64 - 1.0) * spec.truncation());
        shift = 1.0
            + loss
                .iter()
                .zip(xs)
                .filter(|(&h, _)| h <= threshold)
                .map(|(h, x)| x * h)
                .sum::<f64>();
        reward.iter_mut().for_each(|r| *r -= shift);
    }
    Ok(RewardEstimate { loss, reward, shift })
}

/// `x^{t+1} = project(x^t exp(eta * estimate))`.
pub fn osmdg_update(
    state: &OsmdgState,
    spec: &PolytopeSpec,
    eta: f64,
    estimate: &[f64],
) -> Result<OsmdgState> {
    let w = dual_step(&state.x, estimate, eta)?;
    Ok(OsmdgState {
        x: kl_project(&w, spec)?,
        round: state.round + 1,
    })
}

/// OSMD-G with a pluggable sampler.
#[derive(Debug, Clone)]
pub struct Osmdg {
    config: OsmdgConfig,
    state: OsmdgState,
    last_decomposition: Option<VertexDecomposition>,
    alignment_breaks: Vec<usize>,
    aligned_draws: usize,
}

impl Osmdg {
    pub fn new(config: OsmdgConfig) -> Self {
        let state = OsmdgState::initial(&config.spec);
        Self {
            config,
            state,
            last_decomposition: None,
            alignment_breaks: Vec::new(),
            aligned_draws: 0,
        }
    }

    pub fn config(&self) -> &OsmdgConfig {
        &self.config
    }

    pub fn state(&self) -> &OsmdgState {
        &self.state
    }

    /// Decomposition behind the most recent draw.
    pub fn last_decomposition(&self) -> Option<&VertexDecomposition> {
        self.last_decomposition.as_ref()
    }

    /// Draws `v^t` from the current iterate.
    pub fn osmdg_select(&mut self, rng: &mut SimRng) -> Result<(Action, VertexDecomposition)> {
        let budget = self.config.spec.budget();
        match &self.config.sampler {
            SamplerKind::CliqueAligned { cliques } => {
                let (v, d, aligned) = clique_aligned_draw(&self.state.x, cliques, budget, rng)?;
                if aligned {
                    self.aligned_draws += 1;
                }
                Ok((v, d))
            }
            kind => draw(kind, &self.state.x, budget, rng),
        }
    }

    /// Applies one mirror step with an externally computed estimate.
    pub fn update(&mut self, estimate: &[f64]) -> Result<()> {
        self.state = osmdg_update(&self.state, &self.config.spec, self.config.eta, estimate)?;
        if let SamplerKind::CliqueAligned { cliques } = &self.config.sampler {
            if clique_values(self.state.x.coords(), cliques).is_none() {
                log::warn!("iterate left clique alignment after round {}", self.state.round);
                self.alignment_breaks.push(self.state.round);
            }
        }
        Ok(())
    }
}

impl Policy for Osmdg {
    fn id(&self) -> &'static str {
        match self.config.sampler {
            SamplerKind::SwapRounding => "osmdg",
            SamplerKind::MeanOnly => "osmd-vanilla",
            SamplerKind::CliqueAligned { .. } => "osmd-clique",
        }
    }

    fn select(&mut self, _round: usize, _graph: &FeedbackGraph, rng: &mut SimRng) -> Result<Action> {
        let (v, d) = self.osmdg_select(rng)?;
        self.last_decomposition = Some(d);
        Ok(v)
    }

    fn observe(&mut self, action: &Action, feedback: &FeedbackView<'_>) -> Result<()> {
        let estimate = estimate_rewards(action, &self.state.x, feedback, &self.config.spec)?;
        self.update(&estimate.reward)
    }

    fn diagnostics(&self) -> Diagnostics {
        let aligned_draws = matches!(self.config.sampler, SamplerKind::CliqueAligned { .. })
            .then_some(self.aligned_draws);
        Diagnostics {
            alignment_breaks: self.alignment_breaks.clone(),
            aligned_draws,
            ..Diagnostics::default()
        }
    }
}
