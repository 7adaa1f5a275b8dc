//! Newton-boosted regression trees: the base learner fitted at every cascade
//! node.
//!
//! Each round computes first and second derivatives of the loss at the
//! current margins, grows one tree per margin with the regularized gain of
//! [`split_gain`], and adds `learning_rate * leaf_weight` to the margins.
//! Splits are found by an exact greedy scan over presorted feature values;
//! rows with a missing split value follow a learned default direction.

mod objective;
mod split;
mod tree;

use serde::{Deserialize, Serialize};

pub use objective::{grad_hess, Objective, Target};
pub use split::{best_split, leaf_weight, split_gain, GbtSplit};
pub use tree::{RegTree, TreeNode};

use crate::dataset::{Cell, FeatureMatrix, Targets};
use crate::error::{LceError, Result};
use crate::num::Float;
use objective::{target_at, validate_targets};
use split::{presort, SplitParams};
use tree::{grow_tree, GrowParams};

/// Booster hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbtConfig<F> {
    pub n_rounds: usize,
    pub max_depth: usize,
    pub learning_rate: F,
    pub reg_lambda: F,
    pub gamma: F,
    pub min_child_weight: F,
    /// Initial margin. `None` picks 0 for classification and the target mean
    /// for regression.
    pub base_score: Option<F>,
}

impl<F: Float> Default for GbtConfig<F> {
    fn default() -> Self {
        GbtConfig {
            n_rounds: 30,
            max_depth: 3,
            learning_rate: F::of(0.3),
            reg_lambda: F::one(),
            gamma: F::zero(),
            min_child_weight: F::of(1e-3),
            base_score: None,
        }
    }
}

impl<F: Float> GbtConfig<F> {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(LceError::invalid(format!("GbtConfig: {m}")));
        if self.n_rounds < 1 {
            return bad("n_rounds must be >= 1");
        }
        if self.max_depth < 1 {
            return bad("max_depth must be >= 1");
        }
        if !(self.learning_rate > F::zero() && self.learning_rate <= F::one()) {
            return bad("learning_rate must be in (0, 1]");
        }
        if !(self.reg_lambda >= F::zero() && self.reg_lambda.is_finite()) {
            return bad("reg_lambda must be >= 0");
        }
        if !(self.gamma >= F::zero() && self.gamma.is_finite()) {
            return bad("gamma must be >= 0");
        }
        if !(self.min_child_weight >= F::zero() && self.min_child_weight.is_finite()) {
            return bad("min_child_weight must be >= 0");
        }
        if self.base_score.is_some_and(|b| !b.is_finite()) {
            return bad("base_score must be finite");
        }
        Ok(())
    }
}

/// A fitted booster.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbtModel<F> {
    objective: Objective,
    feature_width: usize,
    base_score: F,
    config: GbtConfig<F>,
    /// One group per round; each group holds one tree per margin.
    rounds: Vec<Vec<RegTree<F>>>,
}

/// Fits a booster on `x` against `targets`.
///
/// Classification targets keep their global class count, so classes absent
/// from `x` still get a margin (driven towards zero probability).
pub fn fit_gbt<F: Float>(
    x: &FeatureMatrix<F>,
    targets: &Targets<F>,
    config: &GbtConfig<F>,
) -> Result<GbtModel<F>> {
    config.validate()?;
    let n = x.n_rows();
    if n == 0 || targets.is_empty() {
        return Err(LceError::EmptyDataset);
    }
    if targets.len() != n {
        return Err(LceError::invalid(format!(
            "{} targets for {n} rows",
            targets.len()
        )));
    }
    x.check_finite()?;
    let objective = Objective::for_targets(targets);
    validate_targets(objective, targets)?;

    let base_score = config.base_score.unwrap_or_else(|| match targets {
        Targets::Values(v) => v.iter().copied().sum::<F>() / F::of_usize(v.len()),
        Targets::Classes { .. } => F::zero(),
    });
    let k = objective.n_margins();
    let params = GrowParams {
        split: SplitParams {
            lambda: config.reg_lambda,
            gamma: config.gamma,
            min_child_weight: config.min_child_weight,
        },
        max_depth: config.max_depth,
        learning_rate: config.learning_rate,
    };

    let rows: Vec<u32> = (0..n as u32).collect();
    let sorted = presort(x, &rows);
    let mut margins = vec![base_score; n * k];
    let mut grad = vec![F::zero(); n * k];
    let mut hess = vec![F::zero(); n * k];
    let mut g_col = vec![F::zero(); n];
    let mut h_col = vec![F::zero(); n];
    let mut rounds = Vec::with_capacity(config.n_rounds);

    for _ in 0..config.n_rounds {
        for i in 0..n {
            let s = i * k..(i + 1) * k;
            objective.grad_hess_into(
                &margins[s.clone()],
                target_at(targets, i),
                &mut grad[s.clone()],
                &mut hess[s],
            );
        }
        let mut group = Vec::with_capacity(k);
        for out in 0..k {
            for i in 0..n {
                g_col[i] = grad[i * k + out];
                h_col[i] = hess[i * k + out];
            }
            let tree = grow_tree(x, &rows, &sorted, &g_col, &h_col, &params);
            for i in 0..n {
                margins[i * k + out] += tree.predict(x.row(i));
            }
            group.push(tree);
        }
        rounds.push(group);
    }

    Ok(GbtModel {
        objective,
        feature_width: x.width(),
        base_score,
        config: config.clone(),
        rounds,
    })
}

impl<F: Float> GbtModel<F> {
    pub fn objective(&self) -> Objective {
        self.objective
    }

    pub fn feature_width(&self) -> usize {
        self.feature_width
    }

    pub fn config(&self) -> &GbtConfig<F> {
        &self.config
    }

    pub fn base_score(&self) -> F {
        self.base_score
    }

    pub fn rounds(&self) -> &[Vec<RegTree<F>>] {
        &self.rounds
    }

    /// Width of [`GbtModel::predict_output`].
    pub fn output_width(&self) -> usize {
        self.objective.output_width()
    }

    fn check_width(&self, row: &[Cell<F>]) -> Result<()> {
        if row.len() == self.feature_width {
            Ok(())
        } else {
            Err(LceError::WidthMismatch {
                expected: self.feature_width,
                found: row.len(),
            })
        }
    }

    /// Raw margins using only the first `n_rounds` rounds.
    pub fn predict_margins_partial(&self, row: &[Cell<F>], n_rounds: usize) -> Result<Vec<F>> {
        self.check_width(row)?;
        let mut m = vec![self.base_score; self.objective.n_margins()];
        for group in self.rounds.iter().take(n_rounds) {
            for (acc, tree) in m.iter_mut().zip(group) {
                *acc += tree.predict(row);
            }
        }
        Ok(m)
    }

    pub fn predict_margins(&self, row: &[Cell<F>]) -> Result<Vec<F>> {
        self.predict_margins_partial(row, self.rounds.len())
    }

    /// Class probabilities (`K` entries, binary as `[1 - p, p]`) or a
    /// single regression value.
    pub fn predict_output(&self, row: &[Cell<F>]) -> Result<Vec<F>> {
        Ok(self.objective.transform(&self.predict_margins(row)?))
    }

    pub fn predict_proba(&self, row: &[Cell<F>]) -> Result<Vec<F>> {
        if !self.objective.is_classification() {
            return Err(LceError::WrongTask {
                operation: "predict_proba",
                task: "regression",
            });
        }
        self.predict_output(row)
    }

    pub fn predict_value(&self, row: &[Cell<F>]) -> Result<F> {
        if self.objective.is_classification() {
            return Err(LceError::WrongTask {
                operation: "predict_value",
                task: "classification",
            });
        }
        Ok(self.predict_margins(row)?[0])
    }

    /// Mean training loss of the model truncated to `n_rounds` rounds.
    pub fn mean_loss(
        &self,
        x: &FeatureMatrix<F>,
        targets: &Targets<F>,
        n_rounds: usize,
    ) -> Result<F> {
        validate_targets(self.objective, targets)?;
        let mut total = F::zero();
        for i in 0..x.n_rows() {
            let m = self.predict_margins_partial(x.row(i), n_rounds)?;
            total += self.objective.loss(&m, target_at(targets, i));
        }
        Ok(total / F::of_usize(x.n_rows().max(1)))
    }

    pub(crate) fn validate(&self) -> std::result::Result<(), String> {
        self.config.validate().map_err(|e| e.to_string())?;
        if let Objective::Multiclass(k) = self.objective {
            if k < 3 {
                return Err(format!("multiclass objective with {k} classes"));
            }
        }
        if !self.base_score.is_finite() {
            return Err("non-finite base_score".into());
        }
        if self.rounds.len() != self.config.n_rounds {
            return Err(format!(
                "{} rounds for n_rounds = {}",
                self.rounds.len(),
                self.config.n_rounds
            ));
        }
        let k = self.objective.n_margins();
        for (r, group) in self.rounds.iter().enumerate() {
            if group.len() != k {
                return Err(format!("round {r}: {} trees, expected {k}", group.len()));
            }
            for (t, tree) in group.iter().enumerate() {
                tree.validate(self.feature_width)
                    .map_err(|e| format!("round {r} tree {t}: {e}"))?;
            }
        }
        Ok(())
    }
}
