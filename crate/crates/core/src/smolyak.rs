//! Tensor-product rules, difference increments and the Smolyak combination.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gh::{gauss_hermite_rule, rule_for_level, Rule1D};
use crate::grid::{GridBuilder, WeightedGrid};
use crate::index::{enumerate_level_sum, MultiIndex};

fn accumulate_tensor(rules: &[&Rule1D], scale: f64, builder: &mut GridBuilder) {
    let dim = rules.len();
    let mut counter = vec![0usize; dim];
    let mut point = vec![0.0; dim];
    loop {
        let mut w = scale;
        for (j, rule) in rules.iter().enumerate() {
            point[j] = rule.nodes()[counter[j]];
            w *= rule.weights()[counter[j]];
        }
        builder.add(&point, w);

        let mut j = 0;
        loop {
            if j == dim {
                return;
            }
            counter[j] += 1;
            if counter[j] < rules[j].len() {
                break;
            }
            counter[j] = 0;
            j += 1;
        }
    }
}

/// Cartesian product of arbitrary univariate rules.
pub fn tensor_product(rules: &[&Rule1D]) -> WeightedGrid {
    assert!(
        !rules.is_empty(),
        "tensor product needs at least one factor"
    );
    let mut builder = GridBuilder::new(rules.len());
    accumulate_tensor(rules, 1.0, &mut builder);
    builder.build()
}

/// Full tensor Gauss-Hermite grid with `points_per_dim` nodes along each of `dim` axes.
pub fn full_tensor_grid(dim: usize, points_per_dim: usize) -> Result<WeightedGrid> {
    if dim == 0 {
        return Err(Error::InvalidArgument(
            "dimension must be at least 1".into(),
        ));
    }
    let rule = gauss_hermite_rule(points_per_dim)?;
    let rules = vec![&rule; dim];
    Ok(tensor_product(&rules))
}

fn level_rules(index: &MultiIndex) -> Result<Vec<Arc<Rule1D>>> {
    index.levels().iter().map(|&l| rule_for_level(l)).collect()
}

/// Tensor rule `I_{l1} x ... x I_{ln}` for the levels of `index`.
pub fn tensor_rule(index: &MultiIndex) -> Result<WeightedGrid> {
    let rules = level_rules(index)?;
    let refs: Vec<&Rule1D> = rules.iter().map(|r| r.as_ref()).collect();
    Ok(tensor_product(&refs))
}

/// Adds `scale * Delta_index` to `builder`.
///
/// `Delta_index` expands into `2^c` signed tensor rules, `c` being the number
/// of components above level 1; each decremented component flips the sign.
pub fn accumulate_increment(
    index: &MultiIndex,
    scale: f64,
    builder: &mut GridBuilder,
) -> Result<()> {
    let levels = index.levels();
    let refinable: Vec<usize> = (0..levels.len()).filter(|&j| levels[j] > 1).collect();
    let mut decremented = levels.to_vec();
    for mask in 0u64..(1u64 << refinable.len()) {
        decremented.copy_from_slice(levels);
        let mut sign = scale;
        for (bit, &j) in refinable.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                decremented[j] -= 1;
                sign = -sign;
            }
        }
        let rules: Vec<Arc<Rule1D>> = decremented
            .iter()
            .map(|&l| rule_for_level(l))
            .collect::<Result<_>>()?;
        let refs: Vec<&Rule1D> = rules.iter().map(|r| r.as_ref()).collect();
        accumulate_tensor(&refs, sign, builder);
    }
    Ok(())
}

/// `Delta_index = (Delta_{l1} x ... x Delta_{ln})`, with `Delta_l = I_l - I_{l-1}` and `I_0 = 0`.
pub fn difference_increment(index: &MultiIndex) -> Result<WeightedGrid> {
    let mut builder = GridBuilder::new(index.dim());
    accumulate_increment(index, 1.0, &mut builder)?;
    Ok(builder.build())
}

/// Indices whose levels sum to `dim + q`. Empty for `q < 0`.
pub fn enumerate_nqn(dim: usize, q: i64) -> Vec<MultiIndex> {
    enumerate_level_sum(dim, q)
}

/// Combination-technique coefficients of a downward-closed index set.
///
/// Summing `Delta_index` over the set equals summing `c_index * I_index`, with
/// `c_index = sum over z in {0,1}^n with index + z in the set of (-1)^|z|`.
/// Indices with a zero coefficient are omitted.
pub fn combination_coefficients(set: &BTreeSet<MultiIndex>) -> Vec<(MultiIndex, i64)> {
    let mut out = Vec::new();
    for index in set {
        let dim = index.dim();
        let mut coefficient = 0i64;
        let mut shifted = index.levels().to_vec();
        for mask in 0u64..(1u64 << dim) {
            for (j, s) in shifted.iter_mut().enumerate() {
                *s = index.levels()[j] + ((mask >> j) & 1) as usize;
            }
            let probe = MultiIndex::new(shifted.clone()).expect("levels stay positive");
            if set.contains(&probe) {
                coefficient += if mask.count_ones() % 2 == 0 { 1 } else { -1 };
            }
        }
        if coefficient != 0 {
            out.push((index.clone(), coefficient));
        }
    }
    out
}

/// Quadrature grid equal to the sum of the increments over a downward-closed set.
pub fn combination_grid(dim: usize, set: &BTreeSet<MultiIndex>) -> Result<WeightedGrid> {
    let mut builder = GridBuilder::new(dim);
    for (index, coefficient) in combination_coefficients(set) {
        let rules = level_rules(&index)?;
        let refs: Vec<&Rule1D> = rules.iter().map(|r| r.as_ref()).collect();
        accumulate_tensor(&refs, coefficient as f64, &mut builder);
    }
    Ok(builder.build())
}

/// Isotropic Smolyak grid of accuracy level `level`: the sum of all increments
/// with `|index| <= dim + level - 1`.
pub fn smolyak_grid(dim: usize, level: usize) -> Result<WeightedGrid> {
    if dim == 0 || level == 0 {
        return Err(Error::InvalidArgument(
            "Smolyak grid needs dimension >= 1 and level >= 1".into(),
        ));
    }
    let set: BTreeSet<MultiIndex> = (0..level as i64)
        .flat_map(|q| enumerate_nqn(dim, q))
        .collect();
    combination_grid(dim, &set)
}

/// Sum of `difference_increment` over the same indices as [`smolyak_grid`],
/// without dropping points whose tensor grids cancel.
pub fn smolyak_grid_by_increments(dim: usize, level: usize) -> Result<WeightedGrid> {
    if dim == 0 || level == 0 {
        return Err(Error::InvalidArgument(
            "Smolyak grid needs dimension >= 1 and level >= 1".into(),
        ));
    }
    let mut builder = GridBuilder::new(dim);
    for q in 0..level as i64 {
        for index in enumerate_nqn(dim, q) {
            accumulate_increment(&index, 1.0, &mut builder)?;
        }
    }
    Ok(builder.build())
}

/// `sum_i w_i f(x_i)` over `grid`.
pub fn apply_grid<F>(grid: &WeightedGrid, f: F) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    grid.apply(f)
}
