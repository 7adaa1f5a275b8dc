//! Cascade trees.
//!
//! Every node fits a booster on the rows that reach it, appends the
//! booster's per-row outputs (class probabilities, or the predicted value) as
//! new feature columns, and then splits the augmented rows with a classical
//! impurity criterion. Children receive the augmented matrix, so a node at
//! depth `d` sees `input_width + d * augment_width` columns and emits
//! `input_width + (d + 1) * augment_width` after augmenting. Leaves predict
//! with their own booster.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::dataset::{Cell, FeatureMatrix, Targets, Task};
use crate::error::{LceError, Result};
use crate::gbt::{fit_gbt, GbtConfig, GbtModel, Objective};
use crate::num::{midpoint, Float};
use crate::seed::derive_seed;
use crate::tuning::tune_base_learner;

/// How each node obtains its booster.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseLearner<F> {
    /// Random search with `CascadeConfig::tuning_budget` candidates per node.
    Tuned,
    /// Same configuration at every node.
    Fixed(GbtConfig<F>),
    /// No booster and no augmentation: a plain decision tree whose leaves
    /// predict the class histogram (or target mean).
    Disabled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeConfig<F> {
    /// Depth of the cascade tree; 0 makes the root a leaf.
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Booster candidates evaluated per node when tuning.
    pub tuning_budget: usize,
    pub base: BaseLearner<F>,
}

impl<F: Float> Default for CascadeConfig<F> {
    fn default() -> Self {
        CascadeConfig {
            max_depth: 2,
            min_samples_split: 2,
            min_samples_leaf: 1,
            tuning_budget: 3,
            base: BaseLearner::Tuned,
        }
    }
}

impl<F: Float> CascadeConfig<F> {
    pub fn validate(&self) -> Result<()> {
        if self.min_samples_leaf < 1 {
            return Err(LceError::invalid("min_samples_leaf must be >= 1"));
        }
        if self.min_samples_split < 2 || self.min_samples_split < 2 * self.min_samples_leaf {
            return Err(LceError::invalid(
                "min_samples_split must be >= 2 and >= 2 * min_samples_leaf",
            ));
        }
        if self.tuning_budget < 1 {
            return Err(LceError::invalid("tuning_budget must be >= 1"));
        }
        if let BaseLearner::Fixed(c) = &self.base {
            c.validate()?;
        }
        Ok(())
    }
}

/// Axis-aligned split of augmented rows. `value <= threshold` goes left,
/// missing values follow `missing_left`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CascadeSplit<F> {
    pub feature: usize,
    pub threshold: F,
    pub missing_left: bool,
    /// Weighted impurity decrease.
    pub decrease: F,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeKind<F> {
    Internal {
        /// Index into the node's augmented schema.
        feature: usize,
        threshold: F,
        missing_left: bool,
        left: Box<CascadeNode<F>>,
        right: Box<CascadeNode<F>>,
    },
    Leaf {
        /// Constant prediction for plain trees; `None` when the node's
        /// booster predicts.
        constant: Option<Vec<F>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeNode<F> {
    pub base: Option<GbtModel<F>>,
    pub kind: NodeKind<F>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeTree<F> {
    pub root: CascadeNode<F>,
    pub input_width: usize,
    pub task: Task,
    /// Global class count (classification only).
    pub n_classes: Option<usize>,
    /// Columns appended per node; 0 for plain trees.
    pub augment_width: usize,
}

/// Gini impurity `1 - sum (c / n)^2`.
pub fn gini<F: Float>(counts: &[usize], n: usize) -> F {
    if n == 0 {
        return F::zero();
    }
    let nf = F::of_usize(n);
    let mut s = F::zero();
    for &c in counts {
        let p = F::of_usize(c) / nf;
        s += p * p;
    }
    F::one() - s
}

/// Population variance from running sums, clamped at 0.
pub fn variance<F: Float>(sum: F, sum_sq: F, n: usize) -> F {
    if n == 0 {
        return F::zero();
    }
    let nf = F::of_usize(n);
    let mean = sum / nf;
    (sum_sq / nf - mean * mean).max(F::zero())
}

fn weighted_decrease<F: Float>(parent: F, n: usize, nl: usize, il: F, nr: usize, ir: F) -> F {
    let nf = F::of_usize(n);
    parent - (F::of_usize(nl) / nf) * il - (F::of_usize(nr) / nf) * ir
}

/// Appends the booster's outputs to every row.
pub fn augment<F: Float>(rows: &FeatureMatrix<F>, base: &GbtModel<F>) -> Result<FeatureMatrix<F>> {
    if rows.width() != base.feature_width() {
        return Err(LceError::WidthMismatch {
            expected: base.feature_width(),
            found: rows.width(),
        });
    }
    let width = rows.width() + base.output_width();
    let mut out = FeatureMatrix::with_capacity(width, rows.n_rows());
    let mut buf = Vec::with_capacity(width);
    for row in rows.rows().take(rows.n_rows()) {
        buf.clear();
        buf.extend_from_slice(row);
        buf.extend(base.predict_output(row)?.into_iter().map(Some));
        out.push_row(&buf)?;
    }
    Ok(out)
}

/// Impurity-decrease split over every column of `x`.
///
/// Thresholds are midpoints between adjacent distinct present values; each
/// is tried with missing rows sent left, then right. Candidates leaving fewer
/// than `min_samples_leaf` rows on a side are skipped. Returns the first
/// candidate with the strictly largest positive decrease in (feature,
/// threshold, missing-left-first) order.
pub fn best_split<F: Float>(
    x: &FeatureMatrix<F>,
    targets: &Targets<F>,
    min_samples_leaf: usize,
) -> Result<Option<CascadeSplit<F>>> {
    let n = x.n_rows();
    if n < 2 {
        return Err(LceError::invalid("best_split needs at least 2 rows"));
    }
    if targets.len() != n {
        return Err(LceError::invalid(format!(
            "{} targets for {n} rows",
            targets.len()
        )));
    }
    let msl = min_samples_leaf.max(1);
    let mut best: Option<CascadeSplit<F>> = None;
    let mut consider = |feature, threshold, missing_left, decrease: F| {
        if decrease > F::zero() && best.is_none_or(|b| decrease > b.decrease) {
            best = Some(CascadeSplit {
                feature,
                threshold,
                missing_left,
                decrease,
            });
        }
    };

    let mut present: Vec<(F, usize)> = Vec::with_capacity(n);
    match targets {
        Targets::Classes { labels, n_classes } => {
            let k = *n_classes;
            let mut total = vec![0usize; k];
            labels.iter().for_each(|&l| total[l] += 1);
            let parent: F = gini(&total, n);
            let mut left = vec![0usize; k];
            let mut miss = vec![0usize; k];
            let mut l_cnt = vec![0usize; k];
            let mut r_cnt = vec![0usize; k];
            for j in 0..x.width() {
                sorted_present(x, j, &mut present);
                if present.len() < 2 {
                    continue;
                }
                miss.copy_from_slice(&total);
                present.iter().for_each(|&(_, r)| miss[labels[r]] -= 1);
                let n_miss = n - present.len();
                left.iter_mut().for_each(|c| *c = 0);
                for i in 0..present.len() - 1 {
                    left[labels[present[i].1]] += 1;
                    let (v, v_next) = (present[i].0, present[i + 1].0);
                    if v >= v_next {
                        continue;
                    }
                    let thr = midpoint(v, v_next);
                    for missing_left in [true, false] {
                        for c in 0..k {
                            l_cnt[c] = left[c] + if missing_left { miss[c] } else { 0 };
                            r_cnt[c] = total[c] - l_cnt[c];
                        }
                        let nl = i + 1 + if missing_left { n_miss } else { 0 };
                        let nr = n - nl;
                        if nl < msl || nr < msl {
                            continue;
                        }
                        let d = weighted_decrease(
                            parent,
                            n,
                            nl,
                            gini(&l_cnt, nl),
                            nr,
                            gini(&r_cnt, nr),
                        );
                        consider(j, thr, missing_left, d);
                    }
                }
            }
        }
        Targets::Values(values) => {
            let (sum, sum_sq) = values
                .iter()
                .fold((F::zero(), F::zero()), |(s, q), &v| (s + v, q + v * v));
            let parent = variance(sum, sum_sq, n);
            for j in 0..x.width() {
                sorted_present(x, j, &mut present);
                if present.len() < 2 {
                    continue;
                }
                let (mut ps, mut pq) = (F::zero(), F::zero());
                for &(_, r) in &present {
                    ps += values[r];
                    pq += values[r] * values[r];
                }
                let (ms, mq) = (sum - ps, sum_sq - pq);
                let n_miss = n - present.len();
                let (mut ls, mut lq) = (F::zero(), F::zero());
                for i in 0..present.len() - 1 {
                    let y = values[present[i].1];
                    ls += y;
                    lq += y * y;
                    let (v, v_next) = (present[i].0, present[i + 1].0);
                    if v >= v_next {
                        continue;
                    }
                    let thr = midpoint(v, v_next);
                    for missing_left in [true, false] {
                        let (s, q, nl) = if missing_left {
                            (ls + ms, lq + mq, i + 1 + n_miss)
                        } else {
                            (ls, lq, i + 1)
                        };
                        let nr = n - nl;
                        if nl < msl || nr < msl {
                            continue;
                        }
                        let il = variance(s, q, nl);
                        let ir = variance(sum - s, sum_sq - q, nr);
                        consider(
                            j,
                            thr,
                            missing_left,
                            weighted_decrease(parent, n, nl, il, nr, ir),
                        );
                    }
                }
            }
        }
    }
    Ok(best)
}

fn sorted_present<F: Float>(x: &FeatureMatrix<F>, j: usize, out: &mut Vec<(F, usize)>) {
    out.clear();
    out.extend((0..x.n_rows()).filter_map(|r| x.get(r, j).map(|v| (v, r))));
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
}

fn is_pure<F: Float>(targets: &Targets<F>) -> bool {
    match targets {
        Targets::Classes { labels, .. } => labels.windows(2).all(|w| w[0] == w[1]),
        Targets::Values(v) => v.windows(2).all(|w| w[0] == w[1]),
    }
}

fn constant_output<F: Float>(targets: &Targets<F>) -> Vec<F> {
    match targets {
        Targets::Classes { labels, n_classes } => {
            let mut hist = vec![F::zero(); *n_classes];
            labels.iter().for_each(|&l| hist[l] += F::one());
            let n = F::of_usize(labels.len());
            hist.iter_mut().for_each(|h| *h /= n);
            hist
        }
        Targets::Values(v) => {
            vec![v.iter().copied().sum::<F>() / F::of_usize(v.len())]
        }
    }
}

struct NodeFitter<'a, F> {
    config: &'a CascadeConfig<F>,
    seed: u64,
}

impl<F: Float> NodeFitter<'_, F> {
    /// `node_id` numbers nodes heap-style (root 1, children 2i and 2i + 1)
    /// and selects the node's seed stream.
    fn fit_node(
        &self,
        x: &FeatureMatrix<F>,
        targets: &Targets<F>,
        depth: usize,
        node_id: u64,
    ) -> Result<CascadeNode<F>> {
        if x.n_rows() == 0 {
            return Err(LceError::EmptyDataset);
        }
        let cfg = self.config;
        let base = match &cfg.base {
            BaseLearner::Tuned => {
                let tuned = tune_base_learner(
                    x,
                    targets,
                    cfg.tuning_budget,
                    derive_seed(self.seed, node_id),
                )?;
                Some(fit_gbt(x, targets, &tuned.best)?)
            }
            BaseLearner::Fixed(c) => Some(fit_gbt(x, targets, c)?),
            BaseLearner::Disabled => None,
        };
        let augmented = match &base {
            Some(b) => Cow::Owned(augment(x, b)?),
            None => Cow::Borrowed(x),
        };
        let leaf = |base| {
            let constant = match &cfg.base {
                BaseLearner::Disabled => Some(constant_output(targets)),
                _ => None,
            };
            CascadeNode {
                base,
                kind: NodeKind::Leaf { constant },
            }
        };

        let n = x.n_rows();
        if depth >= cfg.max_depth || n < cfg.min_samples_split || is_pure(targets) {
            return Ok(leaf(base));
        }
        let Some(split) = best_split(&augmented, targets, cfg.min_samples_leaf)? else {
            return Ok(leaf(base));
        };

        let (mut li, mut ri) = (Vec::new(), Vec::new());
        for r in 0..n {
            let go_left = match augmented.get(r, split.feature) {
                Some(v) => v <= split.threshold,
                None => split.missing_left,
            };
            if go_left { &mut li } else { &mut ri }.push(r);
        }
        let left = self.fit_node(
            &augmented.select(&li),
            &targets.select(&li),
            depth + 1,
            node_id * 2,
        )?;
        let right = self.fit_node(
            &augmented.select(&ri),
            &targets.select(&ri),
            depth + 1,
            node_id * 2 + 1,
        )?;
        Ok(CascadeNode {
            base,
            kind: NodeKind::Internal {
                feature: split.feature,
                threshold: split.threshold,
                missing_left: split.missing_left,
                left: Box::new(left),
                right: Box::new(right),
            },
        })
    }
}

/// Fits one cascade tree.
pub fn fit_tree<F: Float>(
    x: &FeatureMatrix<F>,
    targets: &Targets<F>,
    config: &CascadeConfig<F>,
    seed: u64,
) -> Result<CascadeTree<F>> {
    config.validate()?;
    if x.n_rows() == 0 {
        return Err(LceError::EmptyDataset);
    }
    if targets.len() != x.n_rows() {
        return Err(LceError::invalid(format!(
            "{} targets for {} rows",
            targets.len(),
            x.n_rows()
        )));
    }
    x.check_finite()?;
    let root = NodeFitter { config, seed }.fit_node(x, targets, 0, 1)?;
    let augment_width = match config.base {
        BaseLearner::Disabled => 0,
        _ => Objective::for_targets(targets).output_width(),
    };
    Ok(CascadeTree {
        root,
        input_width: x.width(),
        task: targets.task(),
        n_classes: targets.n_classes(),
        augment_width,
    })
}

impl<F: Float> CascadeTree<F> {
    /// Width of the prediction: `K` probabilities or 1 value.
    pub fn output_width(&self) -> usize {
        self.n_classes.unwrap_or(1)
    }

    /// Routes `row` from the root, augmenting at every node, and returns the
    /// leaf's output.
    pub fn predict(&self, row: &[Cell<F>]) -> Result<Vec<F>> {
        self.predict_traced(row, |_, _| {})
    }

    /// Like [`CascadeTree::predict`], calling `visit(depth, working_row)`
    /// after each node's augmentation.
    pub fn predict_traced(
        &self,
        row: &[Cell<F>],
        mut visit: impl FnMut(usize, &[Cell<F>]),
    ) -> Result<Vec<F>> {
        if row.len() != self.input_width {
            return Err(LceError::WidthMismatch {
                expected: self.input_width,
                found: row.len(),
            });
        }
        let mut work: Vec<Cell<F>> = row.to_vec();
        let mut node = &self.root;
        let mut depth = 0;
        loop {
            let out = match &node.base {
                Some(b) => {
                    let out = b.predict_output(&work)?;
                    work.extend(out.iter().copied().map(Some));
                    Some(out)
                }
                None => None,
            };
            visit(depth, &work);
            match &node.kind {
                NodeKind::Leaf { constant } => {
                    return match (constant, out) {
                        (Some(c), _) => Ok(c.clone()),
                        (None, Some(o)) => Ok(o),
                        (None, None) => Err(LceError::ModelSchema {
                            location: format!("leaf at depth {depth}"),
                            message: "leaf without booster or constant".into(),
                        }),
                    };
                }
                NodeKind::Internal {
                    feature,
                    threshold,
                    missing_left,
                    left,
                    right,
                } => {
                    let go_left = match work[*feature] {
                        Some(v) => v <= *threshold,
                        None => *missing_left,
                    };
                    node = if go_left { left } else { right };
                    depth += 1;
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk<F>(n: &CascadeNode<F>) -> usize {
            match &n.kind {
                NodeKind::Leaf { .. } => 0,
                NodeKind::Internal { left, right, .. } => 1 + walk(left).max(walk(right)),
            }
        }
        walk(&self.root)
    }

    pub fn n_nodes(&self) -> usize {
        fn walk<F>(n: &CascadeNode<F>) -> usize {
            match &n.kind {
                NodeKind::Leaf { .. } => 1,
                NodeKind::Internal { left, right, .. } => 1 + walk(left) + walk(right),
            }
        }
        walk(&self.root)
    }

    /// Structural check of widths and node payloads.
    pub(crate) fn validate(&self) -> std::result::Result<(), String> {
        let out_width = self.output_width();
        match (self.task, self.n_classes) {
            (Task::Classification, Some(k)) if k >= 2 => {}
            (Task::Regression, None) => {}
            _ => return Err("task and class count disagree".into()),
        }
        let boosted = self.augment_width > 0;
        if boosted {
            let expected = self.n_classes.unwrap_or(1);
            if self.augment_width != expected {
                return Err(format!(
                    "augment width {} != {expected}",
                    self.augment_width
                ));
            }
        }
        let mut stack = vec![(&self.root, 0usize, String::from("root"))];
        while let Some((node, depth, path)) = stack.pop() {
            let width = self.input_width + depth * self.augment_width;
            match (&node.base, boosted) {
                (Some(b), true) => {
                    if b.feature_width() != width {
                        return Err(format!(
                            "{path}: booster width {} != {width}",
                            b.feature_width()
                        ));
                    }
                    if b.output_width() != self.augment_width {
                        return Err(format!("{path}: booster output width mismatch"));
                    }
                    b.validate().map_err(|e| format!("{path}: {e}"))?;
                }
                (None, false) => {}
                _ => {
                    return Err(format!(
                        "{path}: booster presence disagrees with augment width"
                    ))
                }
            }
            match &node.kind {
                NodeKind::Leaf { constant } => match (constant, boosted) {
                    (None, true) => {}
                    (Some(c), false) if c.len() == out_width && c.iter().all(|v| v.is_finite()) => {
                    }
                    _ => return Err(format!("{path}: bad leaf payload")),
                },
                NodeKind::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    let aug = width + self.augment_width;
                    if *feature >= aug {
                        return Err(format!("{path}: split feature {feature} >= width {aug}"));
                    }
                    if !threshold.is_finite() {
                        return Err(format!("{path}: non-finite threshold"));
                    }
                    stack.push((left, depth + 1, format!("{path}.left")));
                    stack.push((right, depth + 1, format!("{path}.right")));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn classes(labels: Vec<usize>, k: usize) -> Targets<f64> {
        Targets::Classes {
            labels,
            n_classes: k,
        }
    }

    fn column(values: &[f64]) -> FeatureMatrix<f64> {
        let rows: Vec<[f64; 1]> = values.iter().map(|&v| [v]).collect();
        FeatureMatrix::from_dense(1, &rows).unwrap()
    }

    fn fixed(max_depth: usize) -> CascadeConfig<f64> {
        CascadeConfig {
            max_depth,
            base: BaseLearner::Fixed(GbtConfig {
                n_rounds: 5,
                max_depth: 2,
                ..GbtConfig::default()
            }),
            ..CascadeConfig::default()
        }
    }

    #[test]
    fn impurities() {
        assert_abs_diff_eq!(
            gini::<f64>(&[2, 3, 1], 6),
            1.0 - (1.0 / 9.0 + 0.25 + 1.0 / 36.0),
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(gini::<f64>(&[2, 3, 1], 6), 0.611111, epsilon = 1e-6);
        assert_eq!(variance(2.0f64, 4.0, 2), 1.0);
        assert_eq!(gini::<f64>(&[3, 0], 3), 0.0);
    }

    #[test]
    fn pure_labels_have_no_split() {
        let x = column(&[1.0, 2.0, 3.0]);
        assert_eq!(best_split(&x, &classes(vec![1, 1, 1], 2), 1).unwrap(), None);
    }

    #[test]
    fn perfect_two_class_split() {
        let x = column(&[1.0, 2.0]);
        let s = best_split(&x, &classes(vec![0, 1], 2), 1).unwrap().unwrap();
        assert_eq!(s.decrease, 0.5);
        assert_eq!(s.threshold, 1.5);
    }

    #[test]
    fn regression_split() {
        let x = column(&[1.0, 2.0]);
        let s = best_split(&x, &Targets::Values(vec![0.0, 2.0]), 1)
            .unwrap()
            .unwrap();
        assert_eq!(s.decrease, 1.0);
    }

    #[test]
    fn min_samples_leaf_filters() {
        let x = column(&[1.0, 2.0, 3.0]);
        let t = classes(vec![0, 1, 1], 2);
        assert!(best_split(&x, &t, 1).unwrap().is_some());
        assert!(best_split(&x, &t, 2).unwrap().is_none());
        assert!(best_split(&column(&[1.0]), &classes(vec![0], 2), 1).is_err());
    }

    #[test]
    fn augment_widths() {
        let x = FeatureMatrix::from_dense(
            4,
            &[
                [1.0f64, 2.0, 3.0, 4.0],
                [2.0, 1.0, 0.0, 1.0],
                [0.0, 0.0, 1.0, 2.0],
            ],
        )
        .unwrap();
        let b = fit_gbt(&x, &classes(vec![0, 1, 2], 3), &GbtConfig::default()).unwrap();
        let a = augment(&x, &b).unwrap();
        assert_eq!(a.width(), 7);
        for (i, r) in a.rows().enumerate() {
            let s: f64 = r[4..].iter().map(|c| c.unwrap()).sum();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-9);
            assert_eq!(&r[..4], x.row(i));
        }
        let xr = FeatureMatrix::from_dense(5, &[[0.0f64; 5], [1.0; 5]]).unwrap();
        let br = fit_gbt(&xr, &Targets::Values(vec![0.0, 1.0]), &GbtConfig::default()).unwrap();
        assert_eq!(augment(&xr, &br).unwrap().width(), 6);
        assert!(augment(&x, &br).is_err());
    }

    #[test]
    fn pure_node_is_leaf() {
        let x = column(&[1.0, 2.0, 3.0, 4.0]);
        let t = fit_tree(&x, &classes(vec![1, 1, 1, 1], 2), &fixed(3), 0).unwrap();
        assert!(matches!(t.root.kind, NodeKind::Leaf { .. }));
        assert!(t.root.base.is_some());
    }

    #[test]
    fn depth_zero_equals_base_learner() {
        let x = column(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let y = classes(vec![0, 0, 1, 1, 0, 1], 2);
        let t = fit_tree(&x, &y, &fixed(0), 0).unwrap();
        let b = t.root.base.as_ref().unwrap();
        for v in [0.0, 2.5, 7.0] {
            let row = [Some(v)];
            assert_eq!(t.predict(&row).unwrap(), b.predict_output(&row).unwrap());
        }
        assert_eq!(t.depth(), 0);
    }

    #[test]
    fn separable_toy_depth_one() {
        let xs: Vec<f64> = (0..50).map(|i| (i as f64 - 25.0) / 5.0).collect();
        let labels: Vec<usize> = xs.iter().map(|&v| usize::from(v >= 0.0)).collect();
        let x = column(&xs);
        let cfg = CascadeConfig {
            max_depth: 1,
            ..CascadeConfig::default()
        };
        let t = fit_tree(&x, &classes(labels.clone(), 2), &cfg, 3).unwrap();
        t.validate().unwrap();
        for (i, &l) in labels.iter().enumerate() {
            let p = t.predict(x.row(i)).unwrap();
            assert_eq!(usize::from(p[1] > p[0]), l);
        }
    }

    #[test]
    fn widths_grow_by_augment_width_per_level() {
        let xs: Vec<[f64; 2]> = (0..60).map(|i| [(i % 7) as f64, (i % 11) as f64]).collect();
        let labels: Vec<usize> = (0..60).map(|i| (i * 7 % 5) % 3).collect();
        let x = FeatureMatrix::from_dense(2, &xs).unwrap();
        let t = fit_tree(&x, &classes(labels, 3), &fixed(3), 1).unwrap();
        t.validate().unwrap();
        assert!(t.depth() >= 1);
        let mut seen = Vec::new();
        let p = t
            .predict_traced(&[None, Some(3.0)], |d, w| seen.push((d, w.len())))
            .unwrap();
        for (d, w) in seen {
            assert_eq!(w, 2 + (d + 1) * 3);
        }
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
        assert!(t.predict(&[None]).is_err());
    }

    #[test]
    fn plain_tree_predicts_histograms() {
        let x = column(&[1.0, 2.0, 3.0, 4.0]);
        let cfg = CascadeConfig {
            max_depth: 1,
            base: BaseLearner::Disabled,
            ..CascadeConfig::default()
        };
        let t = fit_tree(&x, &classes(vec![0, 0, 1, 1], 2), &cfg, 0).unwrap();
        assert_eq!(t.augment_width, 0);
        assert_eq!(t.predict(&[Some(1.0)]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(t.predict(&[Some(4.0)]).unwrap(), vec![0.0, 1.0]);
        t.validate().unwrap();
    }

    #[test]
    fn config_bounds() {
        let bad = CascadeConfig::<f64> {
            min_samples_split: 3,
            min_samples_leaf: 2,
            ..CascadeConfig::default()
        };
        assert!(bad.validate().is_err());
        let x = column(&[1.0]);
        assert!(fit_tree(
            &FeatureMatrix::<f64>::new(1),
            &classes(vec![], 2),
            &fixed(1),
            0
        )
        .is_err());
        assert!(fit_tree(&x, &classes(vec![0], 2), &fixed(1), 0).is_ok());
    }
}
