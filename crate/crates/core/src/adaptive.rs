//! Dimension-adaptive sparse-grid quadrature.
//!
//! Starting from the all-ones index, the active index with the largest local
//! error indicator is repeatedly moved to the old set and its admissible
//! forward neighbours are added to the active set, until the sum of active
//! indicators drops to the tolerance or a budget runs out. Every point and
//! weight used along the way is captured in a [`CompiledGrid`] that can be
//! reused for other integrands of the same dimension.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gh::points_for_level;
use crate::grid::{point_key, PointKey, WeightedGrid};
use crate::index::MultiIndex;
use crate::smolyak::{combination_grid, difference_increment};

/// Reference norms below this are treated as zero.
pub const DEGENERATE_REFERENCE: f64 = 1e-300;

/// How the per-index work `varpi` entering the cost term is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostModel {
    /// Points of the tensor rule of the index: `prod_j (2 l_j - 1)`.
    TensorPoints,
    /// Evaluations in the signed expansion of the increment before merging:
    /// `prod_j (m(l_j) + m(l_j - 1))` with `m(0) = 0`. Gives 1, 4, 8, 16 for
    /// (1,1), (2,1), (3,1), (2,2).
    #[default]
    IncrementEvaluations,
}

impl CostModel {
    pub fn cost(self, index: &MultiIndex) -> f64 {
        index
            .levels()
            .iter()
            .map(|&l| match self {
                CostModel::TensorPoints => points_for_level(l),
                CostModel::IncrementEvaluations => points_for_level(l) + points_for_level(l - 1),
            } as f64)
            .product()
    }
}

/// Parameters of the adaptive loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptConfig {
    /// Error weighting parameter in [0, 1]; larger values favour accuracy over cost.
    pub psi: f64,
    /// Stop once the global error estimate is at or below this value.
    pub tol: f64,
    #[serde(default = "default_max_indices")]
    pub max_indices: usize,
    #[serde(default = "default_max_evals")]
    pub max_evals: usize,
    #[serde(default)]
    pub cost_model: CostModel,
}

fn default_max_indices() -> usize {
    10_000
}

fn default_max_evals() -> usize {
    1_000_000
}

impl AdaptConfig {
    pub fn new(psi: f64, tol: f64) -> Result<Self> {
        let cfg = Self {
            psi,
            tol,
            max_indices: default_max_indices(),
            max_evals: default_max_evals(),
            cost_model: CostModel::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_cost_model(mut self, cost_model: CostModel) -> Self {
        self.cost_model = cost_model;
        self
    }

    pub fn with_budgets(mut self, max_indices: usize, max_evals: usize) -> Self {
        self.max_indices = max_indices;
        self.max_evals = max_evals;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.psi) {
            return Err(Error::InvalidArgument(format!(
                "psi must lie in [0, 1], got {}",
                self.psi
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_indices == 0 || self.max_evals == 0 {
            return Err(Error::InvalidArgument("budgets must be positive".into()));
        }
        Ok(())
    }
}

/// `{index + e_j : j = 1..n}` in dimension order.
pub fn forward_indices(index: &MultiIndex) -> Vec<MultiIndex> {
    index.forward_indices()
}

/// `{index - e_j : index_j > 1}` in dimension order.
pub fn backward_indices(index: &MultiIndex) -> Vec<MultiIndex> {
    index.backward_indices()
}

/// True iff every backward neighbour of `index` is already in `old`.
pub fn is_admissible_insertion(old: &BTreeSet<MultiIndex>, index: &MultiIndex) -> bool {
    index.backward_indices().iter().all(|b| old.contains(b))
}

/// True iff the set is downward closed.
pub fn is_admissible_set(set: &BTreeSet<MultiIndex>) -> bool {
    set.iter()
        .all(|idx| idx.backward_indices().iter().all(|b| set.contains(b)))
}

fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Normaliser of the increment ratio. Falls back to 1 (absolute increments)
/// when the first increment vanishes; the flag reports the fallback.
pub fn reference_norm(first_increment: &[f64]) -> (f64, bool) {
    let norm = l1_norm(first_increment);
    if norm < DEGENERATE_REFERENCE {
        (1.0, true)
    } else {
        (norm, false)
    }
}

/// `g = max(psi * |Delta_index f|_1 / |Delta_ones f|_1, (1 - psi) / varpi)`.
pub fn local_error_indicator(
    increment: &[f64],
    first_increment: &[f64],
    cost: f64,
    psi: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&psi) {
        return Err(Error::InvalidArgument(format!(
            "psi must lie in [0, 1], got {psi}"
        )));
    }
    if !(cost >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "cost must be >= 1, got {cost}"
        )));
    }
    let (reference, _) = reference_norm(first_increment);
    let accuracy = psi * l1_norm(increment) / reference;
    let work = (1.0 - psi) / cost;
    Ok(accuracy.max(work))
}

/// Snapshot of the index sets after one refinement step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptStep {
    pub selected: MultiIndex,
    pub old: Vec<MultiIndex>,
    /// Active indices in insertion order with their indicators.
    pub active: Vec<(MultiIndex, f64)>,
    pub global_error: f64,
}

/// Full bookkeeping of an adaptive run.
#[derive(Debug, Clone)]
pub struct IndexSetState {
    pub dim: usize,
    pub config: AdaptConfig,
    /// Active indices in insertion order.
    pub active: Vec<MultiIndex>,
    /// Old indices in the order they were accepted.
    pub old: Vec<MultiIndex>,
    pub increments: BTreeMap<MultiIndex, Vec<f64>>,
    pub indicators: BTreeMap<MultiIndex, f64>,
    /// Sum of the indicators of the active indices.
    pub global_error: f64,
    pub running_integral: Vec<f64>,
    /// Distinct points at which the integrand was evaluated.
    pub eval_count: usize,
    pub budget_exhausted: bool,
    /// The first increment vanished and absolute increments were used.
    pub degenerate_reference: bool,
    pub trace: Vec<AdaptStep>,
    old_set: BTreeSet<MultiIndex>,
}

impl IndexSetState {
    pub fn old_set(&self) -> &BTreeSet<MultiIndex> {
        &self.old_set
    }

    /// Union of old and active indices.
    pub fn index_set(&self) -> BTreeSet<MultiIndex> {
        self.old.iter().chain(&self.active).cloned().collect()
    }

    pub fn index_count(&self) -> usize {
        self.old.len() + self.active.len()
    }

    fn active_indicator_sum(&self) -> f64 {
        self.active.iter().map(|i| self.indicators[i]).sum()
    }
}

/// Every point and weight used by an adaptive run, merged into one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledGrid {
    pub grid: WeightedGrid,
    /// Final admissible index set, sorted.
    pub indices: Vec<MultiIndex>,
    pub sidecar: GridSidecar,
}

/// JSON metadata written next to the CSV dump of a compiled grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSidecar {
    pub dimension: usize,
    pub psi: f64,
    pub tol: f64,
    pub index_count: usize,
    pub point_count: usize,
    pub final_global_error: f64,
    pub budget_exhausted: bool,
}

impl CompiledGrid {
    pub fn point_count(&self) -> usize {
        self.grid.len()
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`; returns both paths.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{stem}.csv"));
        let json_path = dir.join(format!("{stem}.json"));
        self.grid.write_csv(fs::File::create(&csv_path)?)?;
        fs::write(&json_path, serde_json::to_string_pretty(&self.sidecar)?)?;
        Ok((csv_path, json_path))
    }

    /// Reads a grid saved with [`CompiledGrid::save`]. The index set is not stored.
    pub fn load(dir: &Path, stem: &str) -> Result<Self> {
        let grid = WeightedGrid::read_csv(fs::File::open(dir.join(format!("{stem}.csv")))?)?;
        let sidecar: GridSidecar =
            serde_json::from_str(&fs::read_to_string(dir.join(format!("{stem}.json")))?)?;
        if sidecar.dimension != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: sidecar.dimension,
                found: grid.dim(),
            });
        }
        Ok(Self {
            grid,
            indices: Vec::new(),
            sidecar,
        })
    }
}

/// Summary of an adaptive run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptReport {
    pub index_count: usize,
    pub point_count: usize,
    pub eval_count: usize,
    pub iterations: usize,
    pub final_global_error: f64,
    pub budget_exhausted: bool,
    pub degenerate_reference: bool,
}

#[derive(Debug, Clone)]
pub struct AdaptOutcome {
    pub grid: CompiledGrid,
    pub state: IndexSetState,
    pub report: AdaptReport,
}

impl AdaptOutcome {
    pub fn integral(&self) -> &[f64] {
        &self.state.running_integral
    }
}

struct CachedIntegrand<F> {
    f: F,
    cache: HashMap<PointKey, Vec<f64>>,
    out_dim: Option<usize>,
}

impl<F: FnMut(&[f64]) -> Vec<f64>> CachedIntegrand<F> {
    fn increment(&mut self, index: &MultiIndex) -> Result<Vec<f64>> {
        let grid = difference_increment(index)?;
        let mut acc: Option<Vec<f64>> = None;
        for (p, w) in grid.iter() {
            let key = point_key(p);
            if !self.cache.contains_key(&key) {
                let value = (self.f)(p);
                if value.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NumericalEvaluation { point: p.to_vec() });
                }
                match self.out_dim {
                    None => self.out_dim = Some(value.len()),
                    Some(d) if d != value.len() => {
                        return Err(Error::DimensionMismatch {
                            expected: d,
                            found: value.len(),
                        })
                    }
                    Some(_) => {}
                }
                self.cache.insert(key.clone(), value);
            }
            let value = &self.cache[&key];
            let a = acc.get_or_insert_with(|| vec![0.0; value.len()]);
            for (ai, vi) in a.iter_mut().zip(value) {
                *ai += w * vi;
            }
        }
        let d = self.out_dim.unwrap_or(0);
        let mut inc = acc.unwrap_or_else(|| vec![0.0; d]);
        if inc.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalEvaluation {
                point: index.levels().iter().map(|&l| l as f64).collect(),
            });
        }
        inc.resize(d, 0.0);
        Ok(inc)
    }
}

/// Runs the adaptive loop on `f` over N(0, I_dim).
///
/// Active-set ties on the indicator go to the index inserted first.
pub fn adapt<F>(f: F, dim: usize, config: &AdaptConfig) -> Result<AdaptOutcome>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    config.validate()?;
    if dim == 0 {
        return Err(Error::InvalidArgument(
            "dimension must be at least 1".into(),
        ));
    }

    let mut integrand = CachedIntegrand {
        f,
        cache: HashMap::new(),
        out_dim: None,
    };

    let ones = MultiIndex::ones(dim);
    let first = integrand.increment(&ones)?;
    let (_, degenerate_reference) = reference_norm(&first);
    let g_ones = local_error_indicator(&first, &first, config.cost_model.cost(&ones), config.psi)?;

    let mut state = IndexSetState {
        dim,
        config: *config,
        active: vec![ones.clone()],
        old: Vec::new(),
        increments: BTreeMap::from([(ones.clone(), first.clone())]),
        indicators: BTreeMap::from([(ones.clone(), g_ones)]),
        global_error: g_ones,
        running_integral: first.clone(),
        eval_count: integrand.cache.len(),
        budget_exhausted: false,
        degenerate_reference,
        trace: Vec::new(),
        old_set: BTreeSet::new(),
    };

    // The stopping statistic starts at +inf so that the all-ones index is
    // always refined once.
    let mut stopping = f64::INFINITY;
    while stopping > config.tol && !state.active.is_empty() {
        if state.index_count() >= config.max_indices || state.eval_count >= config.max_evals {
            state.budget_exhausted = true;
            break;
        }

        let mut best = 0;
        for (pos, idx) in state.active.iter().enumerate() {
            if state.indicators[idx] > state.indicators[&state.active[best]] {
                best = pos;
            }
        }
        let selected = state.active.remove(best);
        state.old.push(selected.clone());
        state.old_set.insert(selected.clone());

        for candidate in selected.forward_indices() {
            if state.increments.contains_key(&candidate)
                || !is_admissible_insertion(&state.old_set, &candidate)
            {
                continue;
            }
            let inc = integrand.increment(&candidate)?;
            for (r, d) in state.running_integral.iter_mut().zip(&inc) {
                *r += d;
            }
            let g = local_error_indicator(
                &inc,
                &first,
                config.cost_model.cost(&candidate),
                config.psi,
            )?;
            state.indicators.insert(candidate.clone(), g);
            state.increments.insert(candidate.clone(), inc);
            state.active.push(candidate);
        }

        state.eval_count = integrand.cache.len();
        state.global_error = state.active_indicator_sum();
        stopping = state.global_error;
        state.trace.push(AdaptStep {
            selected,
            old: state.old.clone(),
            active: state
                .active
                .iter()
                .map(|i| (i.clone(), state.indicators[i]))
                .collect(),
            global_error: state.global_error,
        });
    }

    let grid = compile_grid(&state)?;
    let report = AdaptReport {
        index_count: state.index_count(),
        point_count: grid.point_count(),
        eval_count: state.eval_count,
        iterations: state.trace.len(),
        final_global_error: state.global_error,
        budget_exhausted: state.budget_exhausted,
        degenerate_reference: state.degenerate_reference,
    };
    Ok(AdaptOutcome {
        grid,
        state,
        report,
    })
}

/// Merges the increments of every old and active index into one grid.
///
/// Tensor grids whose combination coefficient vanishes are left out, so the
/// point count can be below the number of evaluations made while adapting.
pub fn compile_grid(state: &IndexSetState) -> Result<CompiledGrid> {
    let set = state.index_set();
    let grid = combination_grid(state.dim, &set)?;
    let indices: Vec<MultiIndex> = set.into_iter().collect();
    let sidecar = GridSidecar {
        dimension: state.dim,
        psi: state.config.psi,
        tol: state.config.tol,
        index_count: indices.len(),
        point_count: grid.len(),
        final_global_error: state.global_error,
        budget_exhausted: state.budget_exhausted,
    };
    Ok(CompiledGrid {
        grid,
        indices,
        sidecar,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(levels: &[usize]) -> MultiIndex {
        MultiIndex::new(levels.to_vec()).unwrap()
    }

    fn set(items: &[&[usize]]) -> BTreeSet<MultiIndex> {
        items.iter().map(|l| mi(l)).collect()
    }

    #[test]
    fn admissible_insertion_examples() {
        assert!(is_admissible_insertion(
            &set(&[&[1, 1], &[2, 1], &[1, 2]]),
            &mi(&[2, 2])
        ));
        assert!(!is_admissible_insertion(
            &set(&[&[1, 1], &[2, 1]]),
            &mi(&[2, 2])
        ));
        assert!(is_admissible_insertion(&BTreeSet::new(), &mi(&[1, 1])));
        assert!(is_admissible_set(&set(&[
            &[1, 1],
            &[2, 1],
            &[1, 2],
            &[2, 2]
        ])));
        assert!(!is_admissible_set(&set(&[&[1, 1], &[2, 1], &[2, 2]])));
    }

    #[test]
    fn indicator_examples() {
        let g = local_error_indicator(&[1.0, 1.0], &[1.0, 1.0], 1.0, 0.725).unwrap();
        assert!((g - 0.725).abs() < 1e-15);
        let g = local_error_indicator(&[0.3], &[0.3], 1.0, 0.5).unwrap();
        assert!((g - 0.5).abs() < 1e-15);
        let g = local_error_indicator(&[7.0], &[2.0], 4.0, 0.0).unwrap();
        assert!((g - 0.25).abs() < 1e-15);
        assert!(local_error_indicator(&[1.0], &[1.0], 1.0, 1.5).is_err());
        assert!(local_error_indicator(&[1.0], &[1.0], 1.0, -0.1).is_err());
    }

    #[test]
    fn vanishing_reference_uses_absolute_increments() {
        let g = local_error_indicator(&[3.0], &[0.0], 9.0, 0.4).unwrap();
        assert!((g - 1.2).abs() < 1e-15);
        assert_eq!(reference_norm(&[0.0, 0.0]), (1.0, true));
    }

    #[test]
    fn cost_models() {
        assert_eq!(CostModel::TensorPoints.cost(&mi(&[1, 1])), 1.0);
        assert_eq!(CostModel::TensorPoints.cost(&mi(&[2, 1])), 3.0);
        assert_eq!(CostModel::TensorPoints.cost(&mi(&[2, 3])), 15.0);
        assert_eq!(CostModel::IncrementEvaluations.cost(&mi(&[1, 1])), 1.0);
        assert_eq!(CostModel::IncrementEvaluations.cost(&mi(&[2, 1])), 4.0);
        assert_eq!(CostModel::IncrementEvaluations.cost(&mi(&[3, 1])), 8.0);
        assert_eq!(CostModel::IncrementEvaluations.cost(&mi(&[2, 2])), 16.0);
    }

    #[test]
    fn config_validation() {
        assert!(AdaptConfig::new(0.5, 0.1).is_ok());
        assert!(AdaptConfig::new(1.1, 0.1).is_err());
        assert!(AdaptConfig::new(0.5, 0.0).is_err());
        assert!(AdaptConfig::new(0.5, f64::NAN).is_err());
    }

    #[test]
    fn compile_three_indices_gives_five_points() {
        let cfg = AdaptConfig::new(0.5, 1e9).unwrap();
        // One forced refinement of (1,1) yields exactly {(1,1),(2,1),(1,2)}.
        let out = adapt(|x| vec![x[0].exp() + x[1].cos()], 2, &cfg).unwrap();
        assert_eq!(
            out.grid.indices,
            vec![mi(&[1, 1]), mi(&[1, 2]), mi(&[2, 1])]
        );
        assert_eq!(out.grid.point_count(), 5);
        assert!((out.grid.grid.weight_sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn affine_integrand_is_exact_and_stays_small() {
        let cfg = AdaptConfig::new(0.9, 0.5).unwrap();
        let out = adapt(|x| vec![2.0 + 3.0 * x[0] - x[1] + 0.5 * x[2]], 3, &cfg).unwrap();
        assert!((out.integral()[0] - 2.0).abs() < 1e-10);
        assert!(out.state.index_set().iter().all(|i| i.level_sum() <= 5));
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let cfg = AdaptConfig::new(1.0, 1e-12)
            .unwrap()
            .with_budgets(5, 1_000_000);
        let out = adapt(|x| vec![(x[0] + 0.3 * x[1]).sin().exp()], 2, &cfg).unwrap();
        assert!(out.report.budget_exhausted, "{:?}", out.report);
        assert!(out.grid.sidecar.budget_exhausted);
    }

    #[test]
    fn non_finite_integrand_errors() {
        let cfg = AdaptConfig::new(0.5, 0.01).unwrap();
        let err = adapt(|x| vec![1.0 / x[0]], 1, &cfg).unwrap_err();
        assert!(matches!(err, Error::NumericalEvaluation { .. }));
    }

    #[test]
    fn compiled_grid_reproduces_running_integral() {
        let cfg = AdaptConfig::new(0.8, 2e-2).unwrap();
        let f = |x: &[f64]| vec![(0.3 * x[0]).exp() * (0.5 * x[1]).cos(), x[1].powi(4)];
        let out = adapt(f, 2, &cfg).unwrap();
        let applied = out.grid.grid.apply(f).unwrap();
        for (a, r) in applied.iter().zip(out.integral()) {
            assert!((a - r).abs() < 1e-10);
        }
        let sum: Vec<f64> = out
            .state
            .increments
            .values()
            .fold(vec![0.0; 2], |mut acc, d| {
                acc[0] += d[0];
                acc[1] += d[1];
                acc
            });
        for (s, r) in sum.iter().zip(out.integral()) {
            assert!((s - r).abs() < 1e-10);
        }
    }

    fn illustration(xi: &[f64]) -> Vec<f64> {
        // Mean 0, covariance diag(0.4, 0.2), pulled back to standard normals.
        let x1 = 0.4f64.sqrt() * xi[0];
        let x2 = 0.2f64.sqrt() * xi[1];
        vec![(-x1).exp(), (-x2 * x2).exp()]
    }

    fn active_indices(step: &AdaptStep) -> Vec<MultiIndex> {
        step.active.iter().map(|(i, _)| i.clone()).collect()
    }

    #[test]
    fn two_dimensional_illustration_trace() {
        for model in [CostModel::IncrementEvaluations, CostModel::TensorPoints] {
            let cfg = AdaptConfig::new(0.725, 0.05)
                .unwrap()
                .with_cost_model(model);
            let out = adapt(illustration, 2, &cfg).unwrap();
            let trace = &out.state.trace;
            assert!(trace.len() >= 2, "{model:?}");
            assert_eq!(trace[0].old, vec![mi(&[1, 1])]);
            assert_eq!(active_indices(&trace[0]), vec![mi(&[2, 1]), mi(&[1, 2])]);
            assert_eq!(trace[1].selected, mi(&[2, 1]));
            assert_eq!(trace[1].old, vec![mi(&[1, 1]), mi(&[2, 1])]);
            assert_eq!(active_indices(&trace[1]), vec![mi(&[1, 2]), mi(&[3, 1])]);
            assert!(out.state.global_error < 0.05, "{model:?}");
            assert!(!out.report.budget_exhausted);
        }
    }

    #[test]
    fn illustration_indicators_under_increment_costs() {
        let cfg = AdaptConfig::new(0.725, 0.05).unwrap();
        let out = adapt(illustration, 2, &cfg).unwrap();
        let step = &out.state.trace[1];
        assert!((step.active[0].1 - 0.275 / 4.0).abs() < 1e-12);
        assert!((step.active[1].1 - 0.275 / 8.0).abs() < 1e-12);
        assert!((step.active[0].1 - 0.0688).abs() < 5e-5);
        assert!((step.active[1].1 - 0.0344).abs() < 5e-5);
    }

    #[test]
    fn sidecar_round_trip() {
        let cfg = AdaptConfig::new(0.6, 0.05).unwrap();
        let out = adapt(|x| vec![x[0].sin() + x[1] * x[1]], 2, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        out.grid.save(dir.path(), "process").unwrap();
        let back = CompiledGrid::load(dir.path(), "process").unwrap();
        assert_eq!(back.grid, out.grid.grid);
        assert_eq!(back.sidecar, out.grid.sidecar);
        assert_eq!(back.sidecar.point_count, back.grid.len());
    }
}
