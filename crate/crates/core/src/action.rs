use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A combinatorial decision: a set of distinct arms out of `num_arms`.
///
/// Arms are kept sorted, so the derived ordering is lexicographic on the
/// arm lists for actions over the same arm count.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Action {
    num_arms: usize,
    arms: Vec<usize>,
}

impl Action {
    pub fn new(num_arms: usize, arms: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut arms: Vec<usize> = arms.into_iter().collect();
        arms.sort_unstable();
        if let Some(&arm) = arms.iter().find(|&&a| a >= num_arms) {
            return Err(Error::InvalidArm { arm, num_arms });
        }
        if arms.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::BadShape(format!("duplicate arm in action {arms:?}")));
        }
        Ok(Self { num_arms, arms })
    }

    pub fn from_mask(mask: &[bool]) -> Self {
        Self {
            num_arms: mask.len(),
            arms: mask
                .iter()
                .enumerate()
                .filter_map(|(i, &m)| m.then_some(i))
                .collect(),
        }
    }

    pub fn num_arms(&self) -> usize {
        self.num_arms
    }

    pub fn arms(&self) -> &[usize] {
        &self.arms
    }

    /// Number of selected arms.
    pub fn size(&self) -> usize {
        self.arms.len()
    }

    pub fn contains(&self, arm: usize) -> bool {
        self.arms.binary_search(&arm).is_ok()
    }

    pub fn mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.num_arms];
        for &a in &self.arms {
            mask[a] = true;
        }
        mask
    }

    /// The 0/1 incidence vector.
    pub fn indicator(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.num_arms];
        for &a in &self.arms {
            v[a] = 1.0;
        }
        v
    }

    /// `<v, r>`
    pub fn payoff(&self, rewards: &[f64]) -> f64 {
        self.arms.iter().map(|&a| rewards[a]).sum()
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.arms.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}
