//! Realizing fractional decisions as random actions.
//!
//! Three samplers share one contract, `E[v] = x`:
//!
//! - [`swap_round`] merges the vertices of a decomposition pairwise with
//!   biased coin flips. Its output is also pairwise negatively correlated.
//! - [`mean_only_sample`] picks one vertex of the decomposition. Marginals are
//!   right, correlations can be strongly positive.
//! - [`clique_aligned_sample`] plays a whole clique whenever `x` is constant
//!   on every block of a clique partition, which collapses mirror descent to
//!   a bandit over the cliques.
//!
//! [`certify_sampler`] checks the mean and correlation properties by Monte
//! Carlo.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::action::Action;
use crate::error::{Error, Result};
use crate::polytope::{decompose, DecisionPoint, VertexDecomposition};

/// Tolerance for "x is constant within a clique".
pub const ALIGNMENT_TOL: f64 = 1e-9;

/// Standard errors beyond which a positive covariance is flagged.
pub const FLAG_Z: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplerKind {
    SwapRounding,
    MeanOnly,
    CliqueAligned { cliques: Vec<Vec<usize>> },
}

impl SamplerKind {
    /// Cliques of `size` consecutive arms covering `num_arms`.
    pub fn contiguous_cliques(num_arms: usize, size: usize) -> Result<Self> {
        if size == 0 || !num_arms.is_multiple_of(size) {
            return Err(Error::BadPartition(format!(
                "{num_arms} arms do not split into blocks of {size}"
            )));
        }
        Ok(Self::CliqueAligned {
            cliques: (0..num_arms / size)
                .map(|i| (i * size..(i + 1) * size).collect())
                .collect(),
        })
    }
}

/// Randomized swap rounding of `d` into a single vertex.
///
/// The running vertex `u` carries weight `beta` (the total of the terms
/// merged so far). Against the next vertex `c` of weight `w`, arms of
/// `u \ c` and `c \ u` are paired in increasing index order; each pair keeps
/// `u`'s arm with probability `beta / (beta + w)` and takes `c`'s otherwise.
pub fn swap_round<R: Rng + ?Sized>(d: &VertexDecomposition, rng: &mut R) -> Result<Action> {
    let (first_weight, first) = d
        .terms
        .first()
        .ok_or_else(|| Error::InfeasiblePoint("empty decomposition".into()))?;
    let mut u = first.mask();
    let mut beta = *first_weight;
    let mut u_only = Vec::new();
    let mut c_only = Vec::new();
    for (w, c) in &d.terms[1..] {
        let c_mask = c.mask();
        u_only.clear();
        c_only.clear();
        for a in 0..u.len() {
            match (u[a], c_mask[a]) {
                (true, false) => u_only.push(a),
                (false, true) => c_only.push(a),
                _ => {}
            }
        }
        if u_only.len() != c_only.len() {
            return Err(Error::ExchangeFailure);
        }
        let keep = beta / (beta + w);
        for (&a, &b) in u_only.iter().zip(&c_only) {
            if rng.gen::<f64>() >= keep {
                u[a] = false;
                u[b] = true;
            }
        }
        beta += w;
    }
    Ok(Action::from_mask(&u))
}

/// Returns vertex `v_j` with probability `w_j`.
pub fn mean_only_sample<R: Rng + ?Sized>(d: &VertexDecomposition, rng: &mut R) -> Result<Action> {
    let total = d.total_weight();
    let mut u = rng.gen::<f64>() * total;
    for (w, v) in &d.terms {
        if u < *w {
            return Ok(v.clone());
        }
        u -= w;
    }
    d.terms
        .last()
        .map(|(_, v)| v.clone())
        .ok_or_else(|| Error::InfeasiblePoint("empty decomposition".into()))
}

fn validate_cliques(cliques: &[Vec<usize>], num_arms: usize, budget: usize) -> Result<()> {
    let mut seen = vec![false; num_arms];
    for block in cliques {
        if block.len() != budget {
            return Err(Error::BadPartition(format!(
                "block {block:?} has size {}, budget is {budget}",
                block.len()
            )));
        }
        for &a in block {
            if a >= num_arms || seen[a] {
                return Err(Error::BadPartition(format!(
                    "arm {a} out of range or in two blocks"
                )));
            }
            seen[a] = true;
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::BadPartition("blocks do not cover every arm".into()));
    }
    Ok(())
}

/// Common value of `x` on each clique, or `None` if some clique is not
/// constant within [`ALIGNMENT_TOL`].
pub fn clique_values(x: &[f64], cliques: &[Vec<usize>]) -> Option<Vec<f64>> {
    cliques
        .iter()
        .map(|block| {
            let (lo, hi) = block.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| {
                (lo.min(x[a]), hi.max(x[a]))
            });
            (hi - lo <= ALIGNMENT_TOL).then(|| block.iter().map(|&a| x[a]).sum::<f64>() / block.len() as f64)
        })
        .collect()
}

/// Clique-aligned sampler together with the decomposition it sampled from.
///
/// When `x` is constant on every clique, clique `V_i` is returned with
/// probability equal to the common value of `x` on `V_i` (these values sum
/// to one). Otherwise falls back to [`mean_only_sample`] on [`decompose`].
pub fn clique_aligned_draw<R: Rng + ?Sized>(
    x: &DecisionPoint,
    cliques: &[Vec<usize>],
    budget: usize,
    rng: &mut R,
) -> Result<(Action, VertexDecomposition, bool)> {
    let k = x.len();
    validate_cliques(cliques, k, budget)?;
    match clique_values(x.coords(), cliques) {
        Some(values) => {
            let d = VertexDecomposition {
                terms: values
                    .iter()
                    .zip(cliques)
                    .map(|(&p, block)| Ok((p, Action::new(k, block.iter().copied())?)))
                    .collect::<Result<_>>()?,
            };
            Ok((mean_only_sample(&d, rng)?, d, true))
        }
        None => {
            let d = decompose(x.coords(), budget)?;
            Ok((mean_only_sample(&d, rng)?, d, false))
        }
    }
}

pub fn clique_aligned_sample<R: Rng + ?Sized>(
    x: &DecisionPoint,
    cliques: &[Vec<usize>],
    budget: usize,
    rng: &mut R,
) -> Result<Action> {
    clique_aligned_draw(x, cliques, budget, rng).map(|(v, _, _)| v)
}

/// Draws an action from `x` with the given sampler, returning the
/// decomposition that was sampled.
pub fn draw<R: Rng + ?Sized>(
    kind: &SamplerKind,
    x: &DecisionPoint,
    budget: usize,
    rng: &mut R,
) -> Result<(Action, VertexDecomposition)> {
    match kind {
        SamplerKind::SwapRounding => {
            let d = decompose(x.coords(), budget)?;
            Ok((swap_round(&d, rng)?, d))
        }
        SamplerKind::MeanOnly => {
            let d = decompose(x.coords(), budget)?;
            Ok((mean_only_sample(&d, rng)?, d))
        }
        SamplerKind::CliqueAligned { cliques } => {
            let (v, d, _) = clique_aligned_draw(x, cliques, budget, rng)?;
            Ok((v, d))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmStat {
    pub arm: usize,
    pub target: f64,
    pub empirical: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairStat {
    pub i: usize,
    pub j: usize,
    pub covariance: f64,
    pub std_error: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerReport {
    pub sampler: SamplerKind,
    pub n_samples: usize,
    pub arms: Vec<ArmStat>,
    pub worst_mean_z: f64,
    pub pairs: Vec<PairStat>,
    pub max_positive_cov_z: f64,
    pub flagged_pairs: Vec<(usize, usize)>,
    /// Draws that were not exactly `budget` distinct arms.
    pub invalid_draws: usize,
}

impl SamplerReport {
    /// Marginals within [`FLAG_Z`] standard errors and no flagged pair.
    pub fn passes(&self) -> bool {
        self.invalid_draws == 0 && self.worst_mean_z <= FLAG_Z && self.flagged_pairs.is_empty()
    }
}

fn ratio_z(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff / se
    } else if diff.abs() <= 1e-12 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

/// Monte Carlo certification of a sampler at target `x`.
pub fn certify_sampler<R: Rng + ?Sized>(
    kind: &SamplerKind,
    x: &DecisionPoint,
    budget: usize,
    n_samples: usize,
    rng: &mut R,
) -> Result<SamplerReport> {
    // the decomposition is prepared once; per draw only the rounding runs
    let d = match kind {
        SamplerKind::SwapRounding | SamplerKind::MeanOnly => decompose(x.coords(), budget)?,
        SamplerKind::CliqueAligned { cliques } => clique_aligned_draw(x, cliques, budget, rng)?.1,
    };
    certify_decomposition(kind, &d, x.coords(), budget, n_samples, rng)
}

/// Certification against an explicit decomposition. `SwapRounding` rounds
/// `d`; the other kinds pick one of its vertices. Marginals are compared to
/// `target`.
pub fn certify_decomposition<R: Rng + ?Sized>(
    kind: &SamplerKind,
    d: &VertexDecomposition,
    target: &[f64],
    budget: usize,
    n_samples: usize,
    rng: &mut R,
) -> Result<SamplerReport> {
    if n_samples == 0 {
        return Err(Error::InsufficientData("certification needs at least one sample".into()));
    }
    let k = target.len();
    let swap = matches!(kind, SamplerKind::SwapRounding);

    let mut single = vec![0u64; k];
    let mut joint = vec![0u64; k * k];
    let mut invalid_draws = 0;
    for _ in 0..n_samples {
        let v = if swap {
            swap_round(d, rng)?
        } else {
            mean_only_sample(d, rng)?
        };
        if v.size() != budget || v.num_arms() != k {
            invalid_draws += 1;
        }
        let arms = v.arms();
        for (p, &i) in arms.iter().enumerate() {
            single[i] += 1;
            for &j in &arms[p + 1..] {
                joint[i * k + j] += 1;
            }
        }
    }

    let n = n_samples as f64;
    let means: Vec<f64> = single.iter().map(|&c| c as f64 / n).collect();
    let arms: Vec<ArmStat> = (0..k)
        .map(|a| {
            let target = target[a];
            let se = (target * (1.0 - target) / n).max(0.0).sqrt();
            ArmStat {
                arm: a,
                target,
                empirical: means[a],
                z: ratio_z(means[a] - target, se),
            }
        })
        .collect();
    let worst_mean_z = arms.iter().map(|s| s.z.abs()).fold(0.0, f64::max);

    let mut pairs = Vec::with_capacity(k * k.saturating_sub(1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let (mi, mj) = (means[i], means[j]);
            let n11 = joint[i * k + j] as f64;
            let n10 = single[i] as f64 - n11;
            let n01 = single[j] as f64 - n11;
            let n00 = n - n11 - n10 - n01;
            let covariance = n11 / n - mi * mj;
            let second = (n11 * ((1.0 - mi) * (1.0 - mj)).powi(2)
                + n10 * ((1.0 - mi) * mj).powi(2)
                + n01 * (mi * (1.0 - mj)).powi(2)
                + n00 * (mi * mj).powi(2))
                / n;
            let std_error = ((second - covariance * covariance).max(0.0) / n).sqrt();
            pairs.push(PairStat {
                i,
                j,
                covariance,
                std_error,
                z: ratio_z(covariance, std_error),
            });
        }
    }
    let max_positive_cov_z = pairs.iter().map(|p| p.z).fold(0.0, f64::max);
    let flagged_pairs = pairs
        .iter()
        .filter(|p| p.covariance > 0.0 && p.z > FLAG_Z)
        .map(|p| (p.i, p.j))
        .collect();

    Ok(SamplerReport {
        sampler: kind.clone(),
        n_samples,
        arms,
        worst_mean_z,
        pairs,
        max_positive_cov_z,
        flagged_pairs,
        invalid_draws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn act(k: usize, arms: &[usize]) -> Action {
        Action::new(k, arms.iter().copied()).unwrap()
    }

    #[test]
    fn single_term_is_deterministic() {
        let d = VertexDecomposition::single(act(5, &[1, 3]));
        let mut rng = stream(1, 0);
        for _ in 0..100 {
            assert_eq!(swap_round(&d, &mut rng).unwrap(), act(5, &[1, 3]));
            assert_eq!(mean_only_sample(&d, &mut rng).unwrap(), act(5, &[1, 3]));
        }
    }

    #[test]
    fn swap_rounding_worked_example() {
        // {(0.8, {1,2}), (0.2, {1,3})} in 1-based arms
        let d = VertexDecomposition {
            terms: vec![(0.8, act(3, &[0, 1])), (0.2, act(3, &[0, 2]))],
        };
        let mut rng = stream(2, 0);
        let n = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            let v = swap_round(&d, &mut rng).unwrap();
            match v.arms() {
                [0, 1] => counts[0] += 1,
                [0, 2] => counts[1] += 1,
                [1, 2] => counts[2] += 1,
                other => panic!("unexpected action {other:?}"),
            }
        }
        let p12 = counts[0] as f64 / n as f64;
        let se = (0.8f64 * 0.2 / n as f64).sqrt();
        assert!((p12 - 0.8).abs() < 4.0 * se, "P({{1,2}}) = {p12}");
        assert_eq!(counts[2], 0);
    }

    #[test]
    fn exchange_failure_on_mismatched_sizes() {
        let d = VertexDecomposition {
            terms: vec![(0.5, act(3, &[0, 1])), (0.5, act(3, &[2]))],
        };
        assert_eq!(swap_round(&d, &mut stream(0, 0)), Err(Error::ExchangeFailure));
    }

    #[test]
    fn mean_only_two_block_covariance() {
        let d = VertexDecomposition {
            terms: vec![(0.5, act(4, &[0, 1])), (0.5, act(4, &[2, 3]))],
        };
        let x = d.mean();
        let report =
            certify_decomposition(&SamplerKind::MeanOnly, &d, &x, 2, 20_000, &mut stream(3, 0))
                .unwrap();
        let pair = report.pairs.iter().find(|p| (p.i, p.j) == (0, 1)).unwrap();
        assert!((pair.covariance - 0.25).abs() < 0.01, "{pair:?}");
        assert!(report.flagged_pairs.contains(&(0, 1)));
        assert!(report.worst_mean_z <= FLAG_Z);
    }

    #[test]
    fn clique_aligned_examples() {
        let cliques = vec![vec![0, 1], vec![2, 3]];
        let x = DecisionPoint::new(vec![0.5; 4]);
        let mut rng = stream(4, 0);
        let n = 20_000;
        let mut first = 0;
        for _ in 0..n {
            let v = clique_aligned_sample(&x, &cliques, 2, &mut rng).unwrap();
            assert!(v.arms() == [0, 1] || v.arms() == [2, 3]);
            first += (v.arms() == [0, 1]) as usize;
        }
        let p = first as f64 / n as f64;
        assert!((p - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt());

        let x = DecisionPoint::new(vec![0.9, 0.9, 0.1, 0.1]);
        let mut first = 0;
        for _ in 0..n {
            let v = clique_aligned_sample(&x, &cliques, 2, &mut rng).unwrap();
            first += (v.arms() == [0, 1]) as usize;
        }
        let p = first as f64 / n as f64;
        assert!((p - 0.9).abs() < 4.0 * (0.09 / n as f64).sqrt());
    }

    #[test]
    fn clique_aligned_fallback_keeps_marginals() {
        let cliques = vec![vec![0, 1], vec![2, 3]];
        let x = DecisionPoint::new(vec![0.9, 0.5, 0.4, 0.2]);
        let kind = SamplerKind::CliqueAligned { cliques };
        let report = certify_sampler(&kind, &x, 2, 50_000, &mut stream(5, 0)).unwrap();
        assert!(report.worst_mean_z <= FLAG_Z, "{report:?}");
        assert_eq!(report.invalid_draws, 0);
    }

    #[test]
    fn bad_partition_rejected() {
        let x = DecisionPoint::new(vec![0.5; 4]);
        let mut rng = stream(6, 0);
        assert!(matches!(
            clique_aligned_sample(&x, &[vec![0, 1, 2], vec![3]], 2, &mut rng),
            Err(Error::BadPartition(_))
        ));
        assert!(matches!(
            clique_aligned_sample(&x, &[vec![0, 1], vec![1, 2]], 2, &mut rng),
            Err(Error::BadPartition(_))
        ));
        assert!(SamplerKind::contiguous_cliques(6, 4).is_err());
    }

    #[test]
    fn vertex_target_has_zero_covariance() {
        let x = DecisionPoint::new(vec![1.0, 0.0, 1.0, 0.0, 0.0]);
        for kind in [SamplerKind::SwapRounding, SamplerKind::MeanOnly] {
            let r = certify_sampler(&kind, &x, 2, 1000, &mut stream(7, 0)).unwrap();
            assert!(r.pairs.iter().all(|p| p.covariance == 0.0));
            assert!(r.passes());
        }
    }

    #[test]
    fn swap_rounding_certifies_on_random_target() {
        use rand::Rng;
        let mut rng = stream(8, 0);
        let k = 10;
        let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
        let spec = crate::polytope::PolytopeSpec::new(k, 3, 0.01).unwrap();
        let x = crate::polytope::kl_project(&crate::polytope::DualPoint::new(raw).unwrap(), &spec)
            .unwrap();
        let report = certify_sampler(&SamplerKind::SwapRounding, &x, 3, 100_000, &mut rng).unwrap();
        assert!(report.passes(), "{:?}", report.flagged_pairs);
    }

    #[test]
    fn same_seed_same_draws() {
        let d = decompose(&[0.3, 0.6, 0.5, 0.6], 2).unwrap();
        let run = |seed| {
            let mut rng = stream(seed, 0);
            (0..50).map(|_| swap_round(&d, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(run(11), run(11));
    }
}
