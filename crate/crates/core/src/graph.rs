//! Directed feedback graphs over arms.
//!
//! Playing arm `a` reveals the rewards of its out-neighbors. The graph also
//! decides how much can be learned per round: the independence number drives
//! the learning-rate tuning, the domination structure drives exploration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::action::Action;
use crate::error::{Error, Result};

/// Default arm count above which the exact independence number is refused.
pub const DEFAULT_EXACT_CAP: usize = 24;

/// Hard limit of the bitset search.
const MAX_EXACT_ARMS: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Observability {
    StronglyObservable,
    WeaklyObservable,
    Unobservable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphProfile {
    pub num_arms: usize,
    pub alpha: usize,
    pub alpha_is_exact: bool,
    pub delta_upper: usize,
    pub observability: Observability,
}

/// On-disk form: `{"num_arms": K, "edges": [[from, to], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphFile {
    pub num_arms: usize,
    pub edges: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct FeedbackGraph {
    num_arms: usize,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
}

impl TryFrom<GraphFile> for FeedbackGraph {
    type Error = Error;

    fn try_from(file: GraphFile) -> Result<Self> {
        FeedbackGraph::new(file.num_arms, file.edges.iter().map(|e| (e[0], e[1])))
    }
}

impl From<FeedbackGraph> for GraphFile {
    fn from(g: FeedbackGraph) -> Self {
        GraphFile {
            num_arms: g.num_arms,
            edges: g.edges().map(|(a, b)| [a, b]).collect(),
        }
    }
}

/// Subgraph on a subset of arms, relabeled to `0..len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RestrictedGraph {
    pub graph: FeedbackGraph,
    /// `original_ids[new] = old`
    pub original_ids: Vec<usize>,
}

impl FeedbackGraph {
    /// Builds a graph from directed edges. Duplicate edges are merged.
    pub fn new(num_arms: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if num_arms == 0 {
            return Err(Error::InvalidGraph("graph needs at least one arm".into()));
        }
        let mut out_edges = vec![Vec::new(); num_arms];
        let mut in_edges = vec![Vec::new(); num_arms];
        for (a, b) in edges {
            for arm in [a, b] {
                if arm >= num_arms {
                    return Err(Error::InvalidArm { arm, num_arms });
                }
            }
            out_edges[a].push(b);
            in_edges[b].push(a);
        }
        for list in out_edges.iter_mut().chain(in_edges.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self {
            num_arms,
            out_edges,
            in_edges,
        })
    }

    /// Full information: every arm observes every arm.
    pub fn complete(num_arms: usize) -> Result<Self> {
        Self::new(
            num_arms,
            (0..num_arms).flat_map(|a| (0..num_arms).map(move |b| (a, b))),
        )
    }

    /// Semi-bandit feedback: every arm observes only itself.
    pub fn self_loops(num_arms: usize) -> Result<Self> {
        Self::new(num_arms, (0..num_arms).map(|a| (a, a)))
    }

    /// Undirected cycle (edges in both directions), optionally with self-loops.
    pub fn cycle(num_arms: usize, with_self_loops: bool) -> Result<Self> {
        let mut edges = Vec::new();
        for a in 0..num_arms {
            let b = (a + 1) % num_arms;
            if a != b {
                edges.push((a, b));
                edges.push((b, a));
            }
            if with_self_loops {
                edges.push((a, a));
            }
        }
        Self::new(num_arms, edges)
    }

    /// `center -> i` for all `i`, plus the self-loop on `center`.
    pub fn star(num_arms: usize, center: usize) -> Result<Self> {
        Self::new(num_arms, (0..num_arms).map(|b| (center, b)))
    }

    /// Blocks of `clique_size` consecutive arms, one per node of `h`. Arms in
    /// the same block are all connected (self-loops included); `(a, b)` is an
    /// edge across blocks iff the blocks are joined by an edge of `h`.
    pub fn clique_partition(h: &FeedbackGraph, clique_size: usize) -> Result<Self> {
        if clique_size == 0 {
            return Err(Error::BadShape("clique size must be positive".into()));
        }
        let n = h.num_arms();
        let mut edges = Vec::new();
        for i in 0..n {
            let block_i = i * clique_size..(i + 1) * clique_size;
            for a in block_i.clone() {
                for b in block_i.clone() {
                    edges.push((a, b));
                }
            }
            for &j in h.out_neighbors(i) {
                if j == i {
                    continue;
                }
                for a in block_i.clone() {
                    for b in j * clique_size..(j + 1) * clique_size {
                        edges.push((a, b));
                    }
                }
            }
        }
        Self::new(n * clique_size, edges)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph serialization cannot fail")
    }

    pub fn num_arms(&self) -> usize {
        self.num_arms
    }

    pub fn out_neighbors(&self, arm: usize) -> &[usize] {
        &self.out_edges[arm]
    }

    pub fn in_neighbors(&self, arm: usize) -> &[usize] {
        &self.in_edges[arm]
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.out_edges[from].binary_search(&to).is_ok()
    }

    pub fn has_self_loop(&self, arm: usize) -> bool {
        self.has_edge(arm, arm)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out_edges
            .iter()
            .enumerate()
            .flat_map(|(a, outs)| outs.iter().map(move |&b| (a, b)))
    }

    pub fn num_edges(&self) -> usize {
        self.out_edges.iter().map(Vec::len).sum()
    }

    pub fn observability(&self) -> Observability {
        let k = self.num_arms;
        let strong = (0..k).all(|a| {
            self.has_self_loop(a) || (0..k).filter(|&b| b != a).all(|b| self.has_edge(b, a))
        });
        if strong {
            Observability::StronglyObservable
        } else if (0..k).all(|a| !self.in_edges[a].is_empty()) {
            Observability::WeaklyObservable
        } else {
            Observability::Unobservable
        }
    }

    /// Arms observed when playing `action`: the union of out-neighborhoods.
    pub fn out_neighborhood(&self, action: &Action) -> Vec<usize> {
        let mask = self.observed_mask(action);
        (0..self.num_arms).filter(|&a| mask[a]).collect()
    }

    pub fn observed_mask(&self, action: &Action) -> Vec<bool> {
        let mut mask = vec![false; self.num_arms];
        for &a in action.arms() {
            for &b in &self.out_edges[a] {
                mask[b] = true;
            }
        }
        mask
    }

    /// Induced subgraph on `arms` (deduplicated and sorted before relabeling).
    pub fn restricted_subgraph(&self, arms: &[usize]) -> Result<RestrictedGraph> {
        let mut ids = arms.to_vec();
        ids.sort_unstable();
        ids.dedup();
        if let Some(&arm) = ids.iter().find(|&&a| a >= self.num_arms) {
            return Err(Error::InvalidArm {
                arm,
                num_arms: self.num_arms,
            });
        }
        if ids.is_empty() {
            return Err(Error::InvalidGraph("restriction to an empty arm set".into()));
        }
        let mut new_id = vec![usize::MAX; self.num_arms];
        for (i, &a) in ids.iter().enumerate() {
            new_id[a] = i;
        }
        let edges = ids.iter().flat_map(|&a| {
            let new_id = &new_id;
            self.out_edges[a]
                .iter()
                .filter(move |&&b| new_id[b] != usize::MAX)
                .map(move |&b| (new_id[a], new_id[b]))
        });
        Ok(RestrictedGraph {
            graph: FeedbackGraph::new(ids.len(), edges.collect::<Vec<_>>())?,
            original_ids: ids,
        })
    }

    /// Symmetrized adjacency without self-loops, as bitsets.
    fn conflict_masks(&self) -> Vec<u128> {
        let mut masks = vec![0u128; self.num_arms];
        for (a, b) in self.edges() {
            if a != b {
                masks[a] |= 1 << b;
                masks[b] |= 1 << a;
            }
        }
        masks
    }

    /// Exact independence number by branch and bound, bounded with a greedy
    /// clique cover of the remaining candidates.
    pub fn independence_number_exact(&self, cap: usize) -> Result<usize> {
        let cap = cap.min(MAX_EXACT_ARMS);
        if self.num_arms > cap {
            return Err(Error::CapExceeded {
                num_arms: self.num_arms,
                cap,
            });
        }
        let conflicts = self.conflict_masks();
        let all = if self.num_arms == 128 {
            u128::MAX
        } else {
            (1u128 << self.num_arms) - 1
        };
        let mut best = 0;
        expand_independent(&conflicts, all, 0, &mut best);
        Ok(best)
    }

    /// Size of a greedily built maximal independent set (a lower bound on
    /// the independence number). Picks the fewest-conflict arm first.
    pub fn greedy_independent_set(&self) -> Vec<usize> {
        let k = self.num_arms;
        let mut conflicts = vec![Vec::new(); k];
        for (a, b) in self.edges() {
            if a != b {
                conflicts[a].push(b);
                conflicts[b].push(a);
            }
        }
        let mut alive = vec![true; k];
        let mut chosen = Vec::new();
        loop {
            let next = (0..k)
                .filter(|&a| alive[a])
                .min_by_key(|&a| conflicts[a].iter().filter(|&&b| alive[b]).count());
            let Some(a) = next else { break };
            chosen.push(a);
            alive[a] = false;
            for &b in &conflicts[a] {
                alive[b] = false;
            }
        }
        chosen.sort_unstable();
        chosen
    }

    /// Greedy dominating set: repeatedly take the arm covering the most
    /// not-yet-dominated arms (lowest index on ties).
    pub fn greedy_dominating_set(&self) -> Result<Vec<usize>> {
        if let Some(arm) = (0..self.num_arms).find(|&a| self.in_edges[a].is_empty()) {
            return Err(Error::NotObservable { arm });
        }
        let mut dominated = vec![false; self.num_arms];
        let mut remaining = self.num_arms;
        let mut chosen = Vec::new();
        while remaining > 0 {
            let (best, gain) = (0..self.num_arms)
                .map(|a| {
                    let gain = self.out_edges[a].iter().filter(|&&b| !dominated[b]).count();
                    (a, gain)
                })
                .fold((0, 0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            debug_assert!(gain > 0);
            chosen.push(best);
            for &b in &self.out_edges[best] {
                if !dominated[b] {
                    dominated[b] = true;
                    remaining -= 1;
                }
            }
        }
        Ok(chosen)
    }

    /// Graph quantities used for tuning. Above `cap` the independence number
    /// falls back to a greedy lower bound and is flagged inexact.
    pub fn profile(&self, cap: usize) -> GraphProfile {
        let (alpha, alpha_is_exact) = match self.independence_number_exact(cap) {
            Ok(alpha) => (alpha, true),
            Err(_) => (self.greedy_independent_set().len(), false),
        };
        let observability = self.observability();
        let delta_upper = self
            .greedy_dominating_set()
            .map(|d| d.len())
            .unwrap_or(self.num_arms);
        GraphProfile {
            num_arms: self.num_arms,
            alpha,
            alpha_is_exact,
            delta_upper,
            observability,
        }
    }
}

fn expand_independent(conflicts: &[u128], candidates: u128, size: usize, best: &mut usize) {
    if candidates == 0 {
        *best = (*best).max(size);
        return;
    }
    // Cover candidates by cliques of the conflict graph; an independent set
    // takes at most one arm per clique.
    let mut order: Vec<(usize, usize)> = Vec::with_capacity(candidates.count_ones() as usize);
    let mut uncovered = candidates;
    let mut class = 0;
    while uncovered != 0 {
        class += 1;
        let mut open = uncovered;
        while open != 0 {
            let v = open.trailing_zeros() as usize;
            open &= conflicts[v];
            uncovered &= !(1u128 << v);
            order.push((v, class));
        }
    }
    let mut candidates = candidates;
    for &(v, bound) in order.iter().rev() {
        if size + bound <= *best {
            return;
        }
        expand_independent(conflicts, candidates & !conflicts[v] & !(1u128 << v), size + 1, best);
        candidates &= !(1u128 << v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_alpha(g: &FeedbackGraph) -> usize {
        let k = g.num_arms();
        (0u32..1 << k)
            .filter(|&s| {
                (0..k).all(|i| {
                    (0..k).all(|j| {
                        i == j || s >> i & 1 == 0 || s >> j & 1 == 0 || !g.has_edge(i, j)
                    })
                })
            })
            .map(|s| s.count_ones() as usize)
            .max()
            .unwrap()
    }

    #[test]
    fn observability_examples() {
        assert_eq!(
            FeedbackGraph::complete(4).unwrap().observability(),
            Observability::StronglyObservable
        );
        assert_eq!(
            FeedbackGraph::self_loops(4).unwrap().observability(),
            Observability::StronglyObservable
        );
        let path = FeedbackGraph::new(3, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(path.observability(), Observability::Unobservable);
        let weak = FeedbackGraph::new(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
        assert_eq!(weak.observability(), Observability::WeaklyObservable);
        // no self-loop anywhere but everyone observed by everyone else
        let loopless = FeedbackGraph::new(
            3,
            (0..3).flat_map(|a| (0..3).filter(move |&b| b != a).map(move |b| (a, b))),
        )
        .unwrap();
        assert_eq!(loopless.observability(), Observability::StronglyObservable);
    }

    #[test]
    fn independence_examples() {
        assert_eq!(FeedbackGraph::complete(5).unwrap().independence_number_exact(24), Ok(1));
        assert_eq!(FeedbackGraph::self_loops(7).unwrap().independence_number_exact(24), Ok(7));
        let c5 = FeedbackGraph::cycle(5, true).unwrap();
        assert_eq!(brute_alpha(&c5), 2);
        assert_eq!(c5.independence_number_exact(24), Ok(2));
        let big = FeedbackGraph::self_loops(30).unwrap();
        assert_eq!(
            big.independence_number_exact(DEFAULT_EXACT_CAP),
            Err(Error::CapExceeded { num_arms: 30, cap: 24 })
        );
        assert_eq!(big.independence_number_exact(64), Ok(30));
    }

    #[test]
    fn one_directional_edge_is_a_conflict() {
        let g = FeedbackGraph::new(2, [(0, 1), (0, 0), (1, 1)]).unwrap();
        assert_eq!(g.independence_number_exact(24), Ok(1));
    }

    #[test]
    fn dominating_set_examples() {
        let star = FeedbackGraph::star(6, 2).unwrap();
        assert_eq!(star.greedy_dominating_set().unwrap(), vec![2]);
        let loops = FeedbackGraph::self_loops(6).unwrap();
        assert_eq!(loops.greedy_dominating_set().unwrap(), (0..6).collect::<Vec<_>>());
        let path = FeedbackGraph::new(3, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(path.greedy_dominating_set(), Err(Error::NotObservable { arm: 0 }));
    }

    #[test]
    fn restriction_examples() {
        let k5 = FeedbackGraph::complete(5).unwrap();
        let r = k5.restricted_subgraph(&[4, 1, 2]).unwrap();
        assert_eq!(r.graph, FeedbackGraph::complete(3).unwrap());
        assert_eq!(r.original_ids, vec![1, 2, 4]);
        assert_eq!(k5.restricted_subgraph(&[0, 1, 2, 3, 4]).unwrap().graph, k5);
        assert_eq!(
            k5.restricted_subgraph(&[5]).unwrap_err(),
            Error::InvalidArm { arm: 5, num_arms: 5 }
        );

        let h = FeedbackGraph::self_loops(3).unwrap();
        let cp = FeedbackGraph::clique_partition(&h, 2).unwrap();
        let r = cp.restricted_subgraph(&[2, 3]).unwrap();
        assert_eq!(r.graph, FeedbackGraph::complete(2).unwrap());
    }

    #[test]
    fn out_neighborhood_examples() {
        let k4 = FeedbackGraph::complete(4).unwrap();
        let v = Action::new(4, [1]).unwrap();
        assert_eq!(k4.out_neighborhood(&v), vec![0, 1, 2, 3]);

        let loops = FeedbackGraph::self_loops(7).unwrap();
        let v = Action::new(7, [2, 5]).unwrap();
        assert_eq!(loops.out_neighborhood(&v), vec![2, 5]);

        // cliques {0,1}, {2,3}, {4,5}; H has 0 -> 1 only
        let h = FeedbackGraph::new(3, [(0, 0), (1, 1), (2, 2), (0, 1)]).unwrap();
        let cp = FeedbackGraph::clique_partition(&h, 2).unwrap();
        let v = Action::new(6, [0, 1]).unwrap();
        assert_eq!(cp.out_neighborhood(&v), vec![0, 1, 2, 3]);
        let v = Action::new(6, [2, 3]).unwrap();
        assert_eq!(cp.out_neighborhood(&v), vec![2, 3]);
    }

    #[test]
    fn json_round_trip() {
        let g = FeedbackGraph::cycle(4, false).unwrap();
        let text = g.to_json();
        assert!(text.contains("\"num_arms\":4"));
        assert_eq!(FeedbackGraph::from_json_str(&text).unwrap(), g);
        assert!(FeedbackGraph::from_json_str(r#"{"num_arms":2,"edges":[[0,2]]}"#).is_err());
    }
}
