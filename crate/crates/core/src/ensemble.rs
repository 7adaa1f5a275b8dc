//! Bagged cascade trees: the LCE classifier and regressor.
//!
//! Tree `i` is fitted on a bootstrap replicate drawn with
//! `derive_seed(config.seed, i)`, so the fitted ensemble is independent of how
//! many threads train it. Predictions average the trees' outputs; each
//! output coordinate is summed in sorted order, which makes the average
//! bitwise invariant to tree order.

use std::num::NonZeroUsize;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade::{fit_tree, CascadeConfig, CascadeTree};
use crate::dataset::{bootstrap_indices, Cell, Dataset, Task};
use crate::error::{LceError, Result};
use crate::num::{sorted_sum, Float};
use crate::seed::derive_seed;
use crate::tuning::{argmax, score_predictions};

/// Worker threads used for fitting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parallelism {
    Threads(NonZeroUsize),
    AllCores,
}

impl Parallelism {
    pub fn threads(n: usize) -> Result<Self> {
        NonZeroUsize::new(n)
            .map(Parallelism::Threads)
            .ok_or_else(|| LceError::invalid("parallelism must be >= 1"))
    }

    pub fn resolve(self) -> usize {
        match self {
            Parallelism::Threads(n) => n.get(),
            Parallelism::AllCores => {
                std::thread::available_parallelism().map_or(1, NonZeroUsize::get)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LceConfig<F> {
    pub n_estimators: usize,
    pub cascade: CascadeConfig<F>,
    pub seed: u64,
    pub parallelism: Parallelism,
    /// Fit every tree on the full dataset instead of a bootstrap replicate.
    #[doc(hidden)]
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub no_bootstrap: bool,
}

impl<F: Float> Default for LceConfig<F> {
    fn default() -> Self {
        LceConfig {
            n_estimators: 10,
            cascade: CascadeConfig::default(),
            seed: 0,
            parallelism: Parallelism::AllCores,
            no_bootstrap: false,
        }
    }
}

impl<F: Float> LceConfig<F> {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators < 1 {
            return Err(LceError::invalid("n_estimators must be >= 1"));
        }
        self.cascade.validate()
    }
}

/// Output of [`LceModel::predict`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Prediction<F> {
    Class(usize),
    Value(F),
}

/// A fitted ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct LceModel<F> {
    trees: Vec<CascadeTree<F>>,
    task: Task,
    feature_names: Vec<String>,
    class_names: Vec<String>,
    config: LceConfig<F>,
}

/// Fits `config.n_estimators` cascade trees on bootstrap replicates of `ds`.
pub fn fit<F: Float>(ds: &Dataset<F>, config: &LceConfig<F>) -> Result<LceModel<F>> {
    config.validate()?;
    if ds.n_rows() == 0 {
        return Err(LceError::EmptyDataset);
    }
    ds.features().check_finite()?;

    let fit_one = |i: usize| -> Result<CascadeTree<F>> {
        let tree_seed = derive_seed(config.seed, i as u64);
        if config.no_bootstrap {
            fit_tree(ds.features(), ds.targets(), &config.cascade, tree_seed)
        } else {
            let idx = bootstrap_indices(ds.n_rows(), tree_seed)?;
            let x = ds.features().select(&idx);
            let y = ds.targets().select(&idx);
            fit_tree(&x, &y, &config.cascade, tree_seed)
        }
    };

    let threads = config.parallelism.resolve().min(config.n_estimators);
    let trees = if threads <= 1 {
        (0..config.n_estimators)
            .map(fit_one)
            .collect::<Result<Vec<_>>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| LceError::invalid(format!("thread pool: {e}")))?;
        pool.install(|| {
            (0..config.n_estimators)
                .into_par_iter()
                .map(fit_one)
                .collect::<Result<Vec<_>>>()
        })?
    };

    Ok(LceModel {
        trees,
        task: ds.task(),
        feature_names: ds.feature_names().to_vec(),
        class_names: ds.class_names().to_vec(),
        config: config.clone(),
    })
}

impl<F: Float> LceModel<F> {
    /// Assembles a model from fitted trees, checking that they agree on the
    /// schema.
    pub fn from_trees(
        trees: Vec<CascadeTree<F>>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
        config: LceConfig<F>,
    ) -> Result<Self> {
        let first = trees
            .first()
            .ok_or_else(|| LceError::invalid("an ensemble needs at least one tree"))?;
        let task = first.task;
        let width = feature_names.len();
        let n_classes = match task {
            Task::Classification => Some(class_names.len()),
            Task::Regression => None,
        };
        for (i, t) in trees.iter().enumerate() {
            if t.task != task || t.input_width != width || t.n_classes != n_classes {
                return Err(LceError::ModelSchema {
                    location: format!("trees[{i}]"),
                    message: "tree schema disagrees with the ensemble".into(),
                });
            }
            t.validate().map_err(|message| LceError::ModelSchema {
                location: format!("trees[{i}]"),
                message,
            })?;
        }
        Ok(LceModel {
            trees,
            task,
            feature_names,
            class_names,
            config,
        })
    }

    pub fn trees(&self) -> &[CascadeTree<F>] {
        &self.trees
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn input_width(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_classes(&self) -> Option<usize> {
        match self.task {
            Task::Classification => Some(self.class_names.len()),
            Task::Regression => None,
        }
    }

    pub fn config(&self) -> &LceConfig<F> {
        &self.config
    }

    /// Coordinate-wise mean of the trees' outputs, each coordinate summed in
    /// sorted order.
    fn mean_output(&self, row: &[Cell<F>]) -> Result<Vec<F>> {
        if row.len() != self.input_width() {
            return Err(LceError::WidthMismatch {
                expected: self.input_width(),
                found: row.len(),
            });
        }
        let outputs = self
            .trees
            .iter()
            .map(|t| t.predict(row))
            .collect::<Result<Vec<_>>>()?;
        let width = outputs[0].len();
        let n = F::of_usize(outputs.len());
        let mut column = vec![F::zero(); outputs.len()];
        Ok((0..width)
            .map(|c| {
                for (slot, out) in column.iter_mut().zip(&outputs) {
                    *slot = out[c];
                }
                sorted_sum(&mut column) / n
            })
            .collect())
    }

    /// Mean class-probability vector of length `K`.
    pub fn predict_proba(&self, row: &[Cell<F>]) -> Result<Vec<F>> {
        if self.task != Task::Classification {
            return Err(LceError::WrongTask {
                operation: "predict_proba",
                task: "regression",
            });
        }
        self.mean_output(row)
    }

    /// Most probable class (lowest index on ties), or the mean regression
    /// output.
    pub fn predict(&self, row: &[Cell<F>]) -> Result<Prediction<F>> {
        let out = self.mean_output(row)?;
        Ok(match self.task {
            Task::Classification => Prediction::Class(argmax(&out)),
            Task::Regression => Prediction::Value(out[0]),
        })
    }

    /// Prediction encoded as a real: class index or value.
    pub fn predict_real(&self, row: &[Cell<F>]) -> Result<F> {
        Ok(match self.predict(row)? {
            Prediction::Class(c) => F::of_usize(c),
            Prediction::Value(v) => v,
        })
    }

    /// Accuracy in `[0, 1]` (classification) or negative MSE (regression).
    pub fn score(&self, ds: &Dataset<F>) -> Result<F> {
        let preds = (0..ds.n_rows())
            .map(|i| self.predict_real(ds.row(i)))
            .collect::<Result<Vec<F>>>()?;
        Ok(score_predictions(ds.targets(), &preds))
    }
}
