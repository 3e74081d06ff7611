//! The decision polytope `Conv(A)` for `A = {v in {0,1}^K : |v| = S}`, its
//! truncation to `x_i >= epsilon`, and the negative-entropy mirror geometry.
//!
//! `F(x) = sum_i (x_i ln x_i - x_i)`, so `grad F(x)_i = ln x_i` and the dual
//! step is a coordinate-wise multiplicative tilt. The Bregman projection onto
//! the truncated polytope has the KKT form `x_i = clamp(w_i e^theta, eps, 1)`.

use serde::{Deserialize, Serialize};

use crate::action::Action;
use crate::error::{Error, Result};

/// Absolute tolerance for every feasibility check.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Bound on `|eta * estimate|` before exponentiation.
pub const EXPONENT_CLAMP: f64 = 700.0;

const PROJECTION_SUM_TOL: f64 = 1e-12;
const PROJECTION_MAX_ITER: usize = 200;
/// Residuals this close to 0 or to the remaining mass are snapped in `decompose`.
const SNAP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolytopeSpec {
    num_arms: usize,
    budget: usize,
    truncation: f64,
}

impl PolytopeSpec {
    /// `truncation` of zero means the untruncated hull.
    pub fn new(num_arms: usize, budget: usize, truncation: f64) -> Result<Self> {
        if num_arms == 0 || budget == 0 || budget > num_arms {
            return Err(Error::InvalidPolytope(format!(
                "need 1 <= S <= K, got K = {num_arms}, S = {budget}"
            )));
        }
        if !(truncation >= 0.0) {
            return Err(Error::InvalidPolytope(format!("truncation {truncation} is negative")));
        }
        let limit = budget as f64 / num_arms as f64;
        if truncation > limit {
            return Err(Error::EmptyPolytope {
                epsilon: truncation,
                limit,
            });
        }
        Ok(Self {
            num_arms,
            budget,
            truncation,
        })
    }

    pub fn num_arms(&self) -> usize {
        self.num_arms
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    /// Minimizer of `F` over the truncated polytope: the uniform point.
    pub fn initial_point(&self) -> DecisionPoint {
        DecisionPoint(vec![
            self.budget as f64 / self.num_arms as f64;
            self.num_arms
        ])
    }

    /// Checks `x` against the point invariants of this polytope.
    pub fn check(&self, x: &DecisionPoint) -> Result<()> {
        let coords = x.coords();
        if coords.len() != self.num_arms {
            return Err(Error::InfeasiblePoint(format!(
                "{} coordinates for {} arms",
                coords.len(),
                self.num_arms
            )));
        }
        let sum: f64 = coords.iter().sum();
        if (sum - self.budget as f64).abs() > FEASIBILITY_TOL {
            return Err(Error::InfeasiblePoint(format!(
                "coordinates sum to {sum}, budget is {}",
                self.budget
            )));
        }
        if let Some((i, &c)) = coords
            .iter()
            .enumerate()
            .find(|(_, &c)| !(c >= self.truncation && c <= 1.0))
        {
            return Err(Error::InfeasiblePoint(format!(
                "coordinate {i} = {c} outside [{}, 1]",
                self.truncation
            )));
        }
        Ok(())
    }
}

/// A fractional action in the (truncated) decision polytope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DecisionPoint(Vec<f64>);

impl DecisionPoint {
    /// Unchecked; validate with [`PolytopeSpec::check`] when the source is untrusted.
    pub fn new(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<&Action> for DecisionPoint {
    fn from(v: &Action) -> Self {
        Self(v.indicator())
    }
}

/// Pre-projection iterate, strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint(Vec<f64>);

impl DualPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some((i, c)) = coords.iter().enumerate().find(|(_, &c)| !(c > 0.0 && c.is_finite())) {
            return Err(Error::NumericalFailure(format!(
                "dual coordinate {i} = {c} is not positive and finite"
            )));
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

/// `x = sum_j w_j v_j` with positive weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexDecomposition {
    pub terms: Vec<(f64, Action)>,
}

impl VertexDecomposition {
    pub fn single(v: Action) -> Self {
        Self {
            terms: vec![(1.0, v)],
        }
    }

    pub fn num_arms(&self) -> usize {
        self.terms.first().map_or(0, |(_, v)| v.num_arms())
    }

    /// `sum_j w_j v_j`
    pub fn mean(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.num_arms()];
        for (w, v) in &self.terms {
            for &a in v.arms() {
                x[a] += w;
            }
        }
        x
    }

    pub fn total_weight(&self) -> f64 {
        self.terms.iter().map(|(w, _)| w).sum()
    }
}

/// `F(x) = sum (x ln x - x)` with `0 ln 0 = 0`.
pub fn negative_entropy(x: &[f64]) -> f64 {
    x.iter()
        .map(|&v| if v > 0.0 { v * v.ln() - v } else { 0.0 })
        .sum()
}

/// `D_F(x, y) = sum (x ln(x/y) - x + y)`.
pub fn bregman_divergence(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&a, &b)| if a > 0.0 { a * (a / b).ln() - a + b } else { b })
        .sum()
}

/// `w_i = x_i exp(eta * estimate_i)`, the closed-form solution of
/// `grad F(w) = grad F(x) + eta * estimate`.
pub fn dual_step(x: &DecisionPoint, estimate: &[f64], eta: f64) -> Result<DualPoint> {
    debug_assert_eq!(x.len(), estimate.len());
    let mut clamped = 0usize;
    let coords = x
        .coords()
        .iter()
        .zip(estimate)
        .map(|(&xi, &ri)| {
            let mut e = eta * ri;
            if e.abs() > EXPONENT_CLAMP {
                clamped += 1;
                e = e.clamp(-EXPONENT_CLAMP, EXPONENT_CLAMP);
            }
            xi * e.exp()
        })
        .collect();
    if clamped > 0 {
        log::warn!("dual step exponent clamped on {clamped} coordinate(s)");
    }
    DualPoint::new(coords)
}

/// Bregman projection of `w` onto `{eps <= x_i <= 1, sum x = S}`.
///
/// Bisection on the multiplier `theta` of `x_i(theta) = clamp(w_i e^theta,
/// eps, 1)`, followed by an exact rescale of the free coordinates once the
/// active set is known.
pub fn kl_project(w: &DualPoint, spec: &PolytopeSpec) -> Result<DecisionPoint> {
    let k = spec.num_arms();
    if w.coords().len() != k {
        return Err(Error::InfeasiblePoint(format!(
            "dual point has {} coordinates for {k} arms",
            w.coords().len()
        )));
    }
    let eps = spec.truncation();
    let s = spec.budget() as f64;
    if spec.budget() == k {
        return Ok(DecisionPoint(vec![1.0; k]));
    }
    if eps * k as f64 >= s {
        return Ok(DecisionPoint(vec![eps; k]));
    }

    let logs: Vec<f64> = w.coords().iter().map(|v| v.ln()).collect();
    let ln_eps = if eps > 0.0 { eps.ln() } else { f64::NEG_INFINITY };
    let at = |theta: f64| -> Vec<f64> {
        logs.iter()
            .map(|&l| (l + theta).exp().clamp(eps, 1.0))
            .collect()
    };
    let sum_at = |theta: f64| -> f64 { at(theta).iter().sum() };

    let max_log = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_log = logs.iter().cloned().fold(f64::INFINITY, f64::min);
    // every coordinate at 1 (sum K > S)
    let mut hi = -min_log;
    // every coordinate at eps, or below S when untruncated
    let mut lo = if ln_eps.is_finite() {
        ln_eps - max_log
    } else {
        (s / k as f64).ln() - max_log - 1.0
    };
    if !(sum_at(lo) <= s && sum_at(hi) >= s) {
        return Err(Error::NumericalFailure(format!(
            "projection bracket [{lo}, {hi}] does not contain the root"
        )));
    }

    let mut theta = 0.5 * (lo + hi);
    for _ in 0..PROJECTION_MAX_ITER {
        theta = 0.5 * (lo + hi);
        let diff = sum_at(theta) - s;
        if diff.abs() <= PROJECTION_SUM_TOL {
            break;
        }
        if diff < 0.0 {
            lo = theta;
        } else {
            hi = theta;
        }
        if hi - lo <= f64::EPSILON * theta.abs().max(1.0) {
            break;
        }
    }
    let mut x = at(theta);

    // Rescale the free coordinates so the sum is exact for this active set.
    let (mut fixed, mut free) = (0.0, 0.0);
    for &v in &x {
        if v <= eps || v >= 1.0 {
            fixed += v;
        } else {
            free += v;
        }
    }
    if free > 0.0 {
        let scale = (s - fixed) / free;
        let polished: Vec<f64> = x
            .iter()
            .map(|&v| if v <= eps || v >= 1.0 { v } else { v * scale })
            .collect();
        if polished.iter().all(|&v| v >= eps && v <= 1.0) {
            x = polished;
        }
    }

    let sum: f64 = x.iter().sum();
    if (sum - s).abs() > FEASIBILITY_TOL {
        return Err(Error::NumericalFailure(format!(
            "projection sums to {sum}, expected {s}"
        )));
    }
    Ok(DecisionPoint(x))
}

/// Writes `x` as a convex combination of at most `K` vertices by greedy
/// peeling: take the `S` largest residuals, remove as much of that vertex as
/// keeps the residual inside `m * Conv(A)`, repeat.
pub fn decompose(x: &[f64], budget: usize) -> Result<VertexDecomposition> {
    let k = x.len();
    if budget == 0 || budget > k {
        return Err(Error::InfeasiblePoint(format!(
            "budget {budget} for {k} coordinates"
        )));
    }
    if let Some((i, &c)) = x
        .iter()
        .enumerate()
        .find(|(_, &c)| !(-FEASIBILITY_TOL..=1.0 + FEASIBILITY_TOL).contains(&c))
    {
        return Err(Error::InfeasiblePoint(format!("coordinate {i} = {c} outside [0, 1]")));
    }
    let sum: f64 = x.iter().sum();
    if (sum - budget as f64).abs() > FEASIBILITY_TOL {
        return Err(Error::InfeasiblePoint(format!(
            "coordinates sum to {sum}, budget is {budget}"
        )));
    }

    let mut residual: Vec<f64> = x.iter().map(|&c| c.clamp(0.0, 1.0)).collect();
    let mut mass = 1.0f64;
    let mut terms: Vec<(f64, Action)> = Vec::new();
    let mut order: Vec<usize> = (0..k).collect();
    let mut selected = vec![false; k];

    while mass > SNAP_TOL && terms.len() < k {
        residual.iter_mut().for_each(|r| *r = r.clamp(0.0, mass));
        order.sort_by(|&a, &b| residual[b].total_cmp(&residual[a]).then(a.cmp(&b)));
        selected.iter_mut().for_each(|s| *s = false);
        for &a in &order[..budget] {
            selected[a] = true;
        }
        let mut gamma = mass;
        for a in 0..k {
            let room = if selected[a] { residual[a] } else { mass - residual[a] };
            gamma = gamma.min(room);
        }
        if terms.len() + 1 == k {
            // last slot: the residual is a vertex up to rounding
            gamma = mass;
        }
        let gamma = gamma.max(0.0);
        if gamma <= 0.0 && mass <= FEASIBILITY_TOL {
            // fewer than `budget` positive residuals: the rest is rounding error
            break;
        }
        if gamma <= 0.0 {
            return Err(Error::NumericalFailure(format!(
                "decomposition stalled with remaining mass {mass}"
            )));
        }
        mass -= gamma;
        for a in 0..k {
            if selected[a] {
                residual[a] -= gamma;
            }
            if residual[a] <= SNAP_TOL {
                residual[a] = 0.0;
            } else if residual[a] >= mass - SNAP_TOL {
                residual[a] = mass;
            }
        }
        let vertex = Action::new(k, order[..budget].iter().copied())?;
        terms.push((gamma, vertex));
    }
    // fold any rounding leftover into the heaviest term
    if mass > 0.0 {
        if let Some(t) = terms.iter_mut().max_by(|a, b| a.0.total_cmp(&b.0)) {
            t.0 += mass;
        }
    }
    Ok(VertexDecomposition { terms })
}
