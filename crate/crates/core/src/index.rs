use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vector of per-dimension refinement levels, each at least 1.
///
/// Ordering is lexicographic over the level vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(levels: Vec<usize>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidArgument(
                "multi-index needs dimension >= 1".into(),
            ));
        }
        if levels.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "multi-index components must be >= 1, got {levels:?}"
            )));
        }
        Ok(Self(levels))
    }

    /// The all-ones index, first entry of every admissible set.
    pub fn ones(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        Self(vec![1; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn levels(&self) -> &[usize] {
        &self.0
    }

    pub fn level_sum(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn is_ones(&self) -> bool {
        self.0.iter().all(|&l| l == 1)
    }

    /// `self + e_j`.
    pub fn forward(&self, j: usize) -> Self {
        let mut levels = self.0.clone();
        levels[j] += 1;
        Self(levels)
    }

    /// `self - e_j`, if that stays a valid index.
    pub fn backward(&self, j: usize) -> Option<Self> {
        if self.0[j] > 1 {
            let mut levels = self.0.clone();
            levels[j] -= 1;
            Some(Self(levels))
        } else {
            None
        }
    }

    /// Forward neighbours in dimension order.
    pub fn forward_indices(&self) -> Vec<Self> {
        (0..self.dim()).map(|j| self.forward(j)).collect()
    }

    /// Backward neighbours in dimension order, skipping components already at 1.
    pub fn backward_indices(&self) -> Vec<Self> {
        (0..self.dim()).filter_map(|j| self.backward(j)).collect()
    }
}

impl TryFrom<Vec<usize>> for MultiIndex {
    type Error = Error;

    fn try_from(levels: Vec<usize>) -> Result<Self> {
        Self::new(levels)
    }
}

impl From<MultiIndex> for Vec<usize> {
    fn from(index: MultiIndex) -> Self {
        index.0
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

/// All indices of dimension `dim` whose levels sum to `dim + q`, in lexicographic
/// order. Empty for negative `q`.
pub fn enumerate_level_sum(dim: usize, q: i64) -> Vec<MultiIndex> {
    assert!(dim >= 1, "dimension must be at least 1");
    if q < 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(dim);
    fill(dim, q as usize, &mut current, &mut out);
    out
}

fn fill(remaining_dims: usize, excess: usize, current: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
    if remaining_dims == 1 {
        current.push(1 + excess);
        out.push(MultiIndex(current.clone()));
        current.pop();
        return;
    }
    for extra in 0..=excess {
        current.push(1 + extra);
        fill(remaining_dims - 1, excess - extra, current, out);
        current.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(levels: &[usize]) -> MultiIndex {
        MultiIndex::new(levels.to_vec()).unwrap()
    }

    fn binomial(n: u64, k: u64) -> u64 {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn rejects_zero_levels_and_empty() {
        assert!(MultiIndex::new(vec![]).is_err());
        assert!(MultiIndex::new(vec![1, 0]).is_err());
    }

    #[test]
    fn forward_neighbours() {
        assert_eq!(
            mi(&[1, 1]).forward_indices(),
            vec![mi(&[2, 1]), mi(&[1, 2])]
        );
        assert_eq!(
            mi(&[2, 1]).forward_indices(),
            vec![mi(&[3, 1]), mi(&[2, 2])]
        );
        assert_eq!(mi(&[1, 1, 1]).forward_indices().len(), 3);
    }

    #[test]
    fn backward_neighbours() {
        assert!(mi(&[1, 1]).backward_indices().is_empty());
        assert_eq!(
            mi(&[2, 2]).backward_indices(),
            vec![mi(&[1, 2]), mi(&[2, 1])]
        );
        assert_eq!(mi(&[3, 1]).backward_indices(), vec![mi(&[2, 1])]);
    }

    #[test]
    fn enumerate_small_cases() {
        assert_eq!(enumerate_level_sum(2, 0), vec![mi(&[1, 1])]);
        assert_eq!(enumerate_level_sum(2, 1), vec![mi(&[1, 2]), mi(&[2, 1])]);
        assert!(enumerate_level_sum(3, -1).is_empty());
    }

    #[test]
    fn enumerate_counts_match_brute_force() {
        // Brute force: scan the full box of levels and keep the right sums.
        for dim in 1..=4usize {
            for q in 0..=4usize {
                let mut brute = Vec::new();
                let side = q + 1;
                for code in 0..side.pow(dim as u32) {
                    let mut c = code;
                    let levels: Vec<usize> = (0..dim)
                        .map(|_| {
                            let l = c % side + 1;
                            c /= side;
                            l
                        })
                        .collect();
                    if levels.iter().sum::<usize>() == dim + q {
                        brute.push(mi(&levels));
                    }
                }
                brute.sort();
                assert_eq!(enumerate_level_sum(dim, q as i64), brute);
            }
        }
        let six = enumerate_level_sum(6, 2);
        assert_eq!(six.len() as u64, binomial(7, 2));
        assert!(six.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn serde_validates() {
        let ok: MultiIndex = serde_json::from_str("[1,2,3]").unwrap();
        assert_eq!(ok, mi(&[1, 2, 3]));
        assert!(serde_json::from_str::<MultiIndex>("[0,1]").is_err());
    }
}
