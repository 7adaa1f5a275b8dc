//! Hyperparameter search.
//!
//! Two searches live here: the small seeded random search that picks the
//! booster configuration at every cascade node, and the exhaustive grid
//! search with k-fold cross-validation used to choose ensemble-level
//! parameters (`n_estimators`, `max_depth`).

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{kfold_indices, Dataset, FeatureMatrix, Targets, Task};
use crate::ensemble::{fit, LceConfig};
use crate::error::{LceError, Result};
use crate::gbt::{fit_gbt, GbtConfig, GbtModel};
use crate::num::Float;
use crate::seed;

/// Nodes smaller than this skip the holdout search.
pub const SMALL_NODE_ROWS: usize = 10;

/// Fraction of node rows held out to score candidates.
pub const HOLDOUT_FRACTION: f64 = 0.2;

/// Discrete booster search space. Candidate `i` enumerates the Cartesian
/// product in row-major order with `n_rounds` varying slowest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseSearchSpace {
    pub n_rounds: Vec<usize>,
    pub max_depth: Vec<usize>,
    pub learning_rate: Vec<f64>,
}

impl Default for BaseSearchSpace {
    fn default() -> Self {
        BaseSearchSpace {
            n_rounds: vec![10, 30, 50],
            max_depth: vec![1, 2, 3],
            learning_rate: vec![0.1, 0.3],
        }
    }
}

impl BaseSearchSpace {
    pub fn len(&self) -> usize {
        self.n_rounds.len() * self.max_depth.len() * self.learning_rate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Candidate `i`, all other booster fields at their defaults.
    pub fn config<F: Float>(&self, i: usize) -> GbtConfig<F> {
        let lr = self.learning_rate.len();
        let md = self.max_depth.len();
        GbtConfig {
            n_rounds: self.n_rounds[i / (md * lr)],
            max_depth: self.max_depth[(i / lr) % md],
            learning_rate: F::of(self.learning_rate[i % lr]),
            ..GbtConfig::default()
        }
    }
}

/// One evaluated candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate<P, F> {
    pub params: P,
    pub mean_score: F,
    pub fold_scores: Vec<F>,
}

/// Outcome of a search. `candidates` is in evaluation order.
#[derive(Clone, Debug, PartialEq)]
pub struct TuneResult<P, F> {
    pub best: P,
    pub best_index: Option<usize>,
    pub candidates: Vec<Candidate<P, F>>,
}

/// Accuracy in `[0, 1]` for classification, negative mean squared error for
/// regression. Higher is better.
pub fn score_predictions<F: Float>(targets: &Targets<F>, predictions: &[F]) -> F {
    let n = F::of_usize(targets.len().max(1));
    match targets {
        Targets::Classes { labels, .. } => {
            let hits = labels
                .iter()
                .zip(predictions)
                .filter(|(&l, &p)| F::of_usize(l) == p)
                .count();
            F::of_usize(hits) / n
        }
        Targets::Values(v) => {
            let sse: F = v
                .iter()
                .zip(predictions)
                .map(|(&t, &p)| (p - t) * (p - t))
                .sum();
            -sse / n
        }
    }
}

/// Argmax with ties broken towards the lowest index.
pub(crate) fn argmax<F: Float>(values: &[F]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn score_gbt<F: Float>(
    model: &GbtModel<F>,
    x: &FeatureMatrix<F>,
    targets: &Targets<F>,
) -> Result<F> {
    let preds = (0..x.n_rows())
        .map(|i| {
            let out = model.predict_output(x.row(i))?;
            Ok(match targets.task() {
                Task::Classification => F::of_usize(argmax(&out)),
                Task::Regression => out[0],
            })
        })
        .collect::<Result<Vec<F>>>()?;
    Ok(score_predictions(targets, &preds))
}

/// Picks a booster configuration for one node's data.
///
/// Draws `budget` candidates uniformly (with replacement) from the default
/// space, scores each on a seeded holdout of 20% of the rows, and returns the
/// best; ties go to the earliest draw. Nodes with fewer than
/// [`SMALL_NODE_ROWS`] rows return the space's first candidate unscored.
pub fn tune_base_learner<F: Float>(
    x: &FeatureMatrix<F>,
    targets: &Targets<F>,
    budget: usize,
    seed: u64,
) -> Result<TuneResult<GbtConfig<F>, F>> {
    tune_base_learner_in(&BaseSearchSpace::default(), x, targets, budget, seed)
}

pub fn tune_base_learner_in<F: Float>(
    space: &BaseSearchSpace,
    x: &FeatureMatrix<F>,
    targets: &Targets<F>,
    budget: usize,
    seed: u64,
) -> Result<TuneResult<GbtConfig<F>, F>> {
    if budget == 0 {
        return Err(LceError::invalid("tuning budget must be >= 1"));
    }
    if space.is_empty() {
        return Err(LceError::invalid("empty booster search space"));
    }
    let n = x.n_rows();
    if n == 0 {
        return Err(LceError::EmptyDataset);
    }
    if n < SMALL_NODE_ROWS {
        return Ok(TuneResult {
            best: space.config(0),
            best_index: None,
            candidates: Vec::new(),
        });
    }

    let mut draw_rng = seed::rng(seed::derive_seed(seed, 0));
    let draws: Vec<usize> = (0..budget)
        .map(|_| draw_rng.gen_range(0..space.len()))
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed::derive_seed(seed, 1)));
    let n_hold = ((n as f64) * HOLDOUT_FRACTION).ceil() as usize;
    let (hold, fit_rows) = order.split_at(n_hold);
    let (x_fit, y_fit) = (x.select(fit_rows), targets.select(fit_rows));
    let (x_hold, y_hold) = (x.select(hold), targets.select(hold));

    let mut cache: Vec<Option<F>> = vec![None; space.len()];
    let mut candidates: Vec<Candidate<GbtConfig<F>, F>> = Vec::with_capacity(budget);
    let mut best_index = 0;
    for (pos, &d) in draws.iter().enumerate() {
        let config = space.config::<F>(d);
        let score = match cache[d] {
            Some(s) => s,
            None => {
                let model = fit_gbt(&x_fit, &y_fit, &config)?;
                let s = score_gbt(&model, &x_hold, &y_hold)?;
                cache[d] = Some(s);
                s
            }
        };
        if candidates.is_empty() || score > candidates[best_index].mean_score {
            best_index = pos;
        }
        candidates.push(Candidate {
            params: config,
            mean_score: score,
            fold_scores: vec![score],
        });
    }
    Ok(TuneResult {
        best: candidates[best_index].params.clone(),
        best_index: Some(best_index),
        candidates,
    })
}

/// Grid-searchable ensemble parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridParam {
    /// Number of trees (for a lone booster: boosting rounds).
    NEstimators,
    /// Cascade depth (for a lone booster: tree depth).
    MaxDepth,
}

impl GridParam {
    pub fn name(self) -> &'static str {
        match self {
            GridParam::NEstimators => "n_estimators",
            GridParam::MaxDepth => "max_depth",
        }
    }
}

impl FromStr for GridParam {
    type Err = LceError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n_estimators" => Ok(GridParam::NEstimators),
            "max_depth" => Ok(GridParam::MaxDepth),
            other => Err(LceError::invalid(format!(
                "unknown grid parameter `{other}`"
            ))),
        }
    }
}

/// One assignment of every grid axis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridPoint(pub Vec<(GridParam, usize)>);

impl GridPoint {
    pub fn get(&self, param: GridParam) -> Option<usize> {
        self.0.iter().find(|(p, _)| *p == param).map(|&(_, v)| v)
    }
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(p, v)| format!("{}={v}", p.name()))
            .collect();
        f.write_str(&parts.join(", "))
    }
}

/// Cartesian grid over ensemble parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamGrid {
    axes: Vec<(GridParam, Vec<usize>)>,
}

impl ParamGrid {
    pub fn new(axes: Vec<(GridParam, Vec<usize>)>) -> Result<Self> {
        if axes.is_empty() {
            return Err(LceError::invalid("empty grid"));
        }
        for (i, (p, values)) in axes.iter().enumerate() {
            if values.is_empty() {
                return Err(LceError::invalid(format!(
                    "grid axis `{}` has no values",
                    p.name()
                )));
            }
            if axes[..i].iter().any(|(q, _)| q == p) {
                return Err(LceError::invalid(format!(
                    "grid axis `{}` repeated",
                    p.name()
                )));
            }
        }
        Ok(ParamGrid { axes })
    }

    pub fn axes(&self) -> &[(GridParam, Vec<usize>)] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|(_, v)| v.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All points in row-major order (first axis varies slowest).
    pub fn points(&self) -> Vec<GridPoint> {
        let mut points = vec![GridPoint(Vec::new())];
        for (param, values) in &self.axes {
            points = points
                .into_iter()
                .flat_map(|pt| {
                    values.iter().map(move |&v| {
                        let mut next = pt.0.clone();
                        next.push((*param, v));
                        GridPoint(next)
                    })
                })
                .collect();
        }
        points
    }
}

impl FromStr for ParamGrid {
    type Err = LceError;

    /// Parses `name=v1,v2;name=v1,...`.
    fn from_str(s: &str) -> Result<Self> {
        let mut axes = Vec::new();
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, values) = part
                .split_once('=')
                .ok_or_else(|| LceError::invalid(format!("grid axis `{part}` lacks `=`")))?;
            let param: GridParam = name.trim().parse()?;
            let values = values
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<usize>()
                        .map_err(|_| LceError::invalid(format!("bad grid value `{v}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            axes.push((param, values));
        }
        ParamGrid::new(axes)
    }
}

/// Exhaustive grid search with k-fold cross-validation.
///
/// Folds are stratified for classification. For every point, `fit_score`
/// trains on `k - 1` folds and scores the held-out fold; the point with the
/// highest mean score wins, ties going to the first point in grid order.
pub fn grid_search_cv<F, S>(
    ds: &Dataset<F>,
    grid: &ParamGrid,
    k: usize,
    seed: u64,
    fit_score: S,
) -> Result<TuneResult<GridPoint, F>>
where
    F: Float,
    S: Fn(&Dataset<F>, &Dataset<F>, &GridPoint) -> Result<F>,
{
    let stratified = ds.task() == Task::Classification;
    let folds = kfold_indices(ds.targets(), k, seed, stratified)?;
    let splits: Vec<(Dataset<F>, Dataset<F>)> = (0..k)
        .map(|f| {
            let mut train: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != f)
                .flat_map(|(_, fold)| fold.iter().copied())
                .collect();
            train.sort_unstable();
            (ds.subset(&train), ds.subset(&folds[f]))
        })
        .collect();

    let mut candidates: Vec<Candidate<GridPoint, F>> = Vec::with_capacity(grid.len());
    let mut best_index = 0;
    for point in grid.points() {
        let fold_scores = splits
            .iter()
            .map(|(train, test)| fit_score(train, test, &point))
            .collect::<Result<Vec<F>>>()?;
        let mean_score = fold_scores.iter().copied().sum::<F>() / F::of_usize(k);
        if candidates.is_empty() || mean_score > candidates[best_index].mean_score {
            best_index = candidates.len();
        }
        candidates.push(Candidate {
            params: point,
            mean_score,
            fold_scores,
        });
    }
    Ok(TuneResult {
        best: candidates[best_index].params.clone(),
        best_index: Some(best_index),
        candidates,
    })
}

/// Applies a grid point to an ensemble configuration.
pub fn apply_point<F: Float>(base: &LceConfig<F>, point: &GridPoint) -> LceConfig<F> {
    let mut config = base.clone();
    if let Some(n) = point.get(GridParam::NEstimators) {
        config.n_estimators = n;
    }
    if let Some(d) = point.get(GridParam::MaxDepth) {
        config.cascade.max_depth = d;
    }
    config
}

/// Grid search over ensemble parameters on top of `base`.
pub fn grid_search_lce<F: Float>(
    ds: &Dataset<F>,
    grid: &ParamGrid,
    k: usize,
    seed: u64,
    base: &LceConfig<F>,
) -> Result<TuneResult<GridPoint, F>> {
    grid_search_cv(ds, grid, k, seed, |train, test, point| {
        let model = fit(train, &apply_point(base, point))?;
        model.score(test)
    })
}
