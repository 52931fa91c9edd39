//! Univariate Gauss-Hermite rules for the standard normal weight.
//!
//! Nodes and weights come from the Golub-Welsch eigen-decomposition of the
//! Jacobi matrix of the probabilists' Hermite polynomials. Level `l` maps to
//! a rule with `2l - 1` points.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use crate::error::{Error, Result};
use crate::tridiag::symmetric_tridiagonal_eigen;

/// Univariate quadrature rule in standard-normal space.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule1D {
    level: Option<usize>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Rule1D {
    /// Refinement level, if the rule was produced by [`rule_for_level`].
    pub fn level(&self) -> Option<usize> {
        self.level
    }

    /// Ascending abscissas.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Sum of `w_j * f(x_j)`, accumulated over mirror pairs from the centre out
    /// so that odd integrands cancel exactly.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let m = self.nodes.len();
        let term = |j: usize| self.weights[j] * f(self.nodes[j]);
        let mut total = if m % 2 == 1 { term(m / 2) } else { 0.0 };
        for j in (0..m / 2).rev() {
            total += term(j) + term(m - 1 - j);
        }
        total
    }
}

/// Number of points used by the rule at `level`, with level 0 denoting the empty rule.
pub fn points_for_level(level: usize) -> usize {
    if level == 0 {
        0
    } else {
        2 * level - 1
    }
}

/// `m`-point Gauss-Hermite rule, exact for polynomials up to degree `2m - 1`
/// against N(0, 1).
pub fn gauss_hermite_rule(m: usize) -> Result<Rule1D> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "Gauss-Hermite rule needs at least one point".into(),
        ));
    }

    let diag = vec![0.0; m];
    let offdiag: Vec<f64> = (1..m).map(|k| (k as f64).sqrt()).collect();
    let eig = symmetric_tridiagonal_eigen(&diag, &offdiag)?;

    let mut pairs: Vec<(f64, f64)> = eig
        .values
        .iter()
        .zip(&eig.first_components)
        .map(|(&x, &z)| (x, z * z))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut nodes: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();

    // Mirror pairs are averaged so the rule is exactly symmetric.
    for j in 0..m / 2 {
        let k = m - 1 - j;
        let x = 0.5 * (nodes[k] - nodes[j]);
        let w = 0.5 * (weights[j] + weights[k]);
        nodes[j] = -x;
        nodes[k] = x;
        weights[j] = w;
        weights[k] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }

    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }

    Ok(Rule1D {
        level: None,
        nodes,
        weights,
    })
}

fn level_cache() -> &'static RwLock<HashMap<usize, Arc<Rule1D>>> {
    static CACHE: OnceLock<RwLock<HashMap<usize, Arc<Rule1D>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Cached `(2l - 1)`-point rule tagged with level `l`.
pub fn rule_for_level(level: usize) -> Result<Arc<Rule1D>> {
    if level == 0 {
        return Err(Error::InvalidArgument("level must be at least 1".into()));
    }
    if let Some(rule) = level_cache()
        .read()
        .expect("rule cache poisoned")
        .get(&level)
    {
        return Ok(Arc::clone(rule));
    }

    let mut rule = gauss_hermite_rule(points_for_level(level))?;
    rule.level = Some(level);
    let mut cache = level_cache().write().expect("rule cache poisoned");
    let entry = cache.entry(level).or_insert_with(|| Arc::new(rule));
    Ok(Arc::clone(entry))
}
