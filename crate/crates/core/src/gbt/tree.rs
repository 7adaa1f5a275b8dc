use serde::{Deserialize, Serialize};

use super::split::{leaf_weight, scan_node, GbtSplit, SplitParams};
use crate::dataset::{Cell, FeatureMatrix};
use crate::num::Float;

/// Node of a regression tree stored in a flat arena; the root is index 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode<F> {
    Split {
        feature: usize,
        threshold: F,
        missing_left: bool,
        left: usize,
        right: usize,
    },
    Leaf {
        weight: F,
    },
}

/// Regression tree with real-valued leaf weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegTree<F> {
    nodes: Vec<TreeNode<F>>,
}

impl<F: Float> RegTree<F> {
    pub fn nodes(&self) -> &[TreeNode<F>] {
        &self.nodes
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    /// Leaf weight reached by `row`; the width is not checked here.
    #[inline]
    pub fn predict(&self, row: &[Cell<F>]) -> F {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { weight } => return *weight,
                TreeNode::Split {
                    feature,
                    threshold,
                    missing_left,
                    left,
                    right,
                } => {
                    let go_left = match row[*feature] {
                        Some(v) => v <= *threshold,
                        None => *missing_left,
                    };
                    i = if go_left { *left } else { *right };
                }
            }
        }
    }

    /// Checks arena links and value finiteness against a feature width.
    pub(crate) fn validate(&self, width: usize) -> Result<(), String> {
        if self.nodes.is_empty() {
            return Err("empty tree".into());
        }
        let mut reached = vec![0usize; self.nodes.len()];
        reached[0] = 1;
        for (i, node) in self.nodes.iter().enumerate() {
            match node {
                TreeNode::Leaf { weight } => {
                    if !weight.is_finite() {
                        return Err(format!("node {i}: non-finite leaf weight"));
                    }
                }
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    if *feature >= width {
                        return Err(format!("node {i}: feature {feature} >= width {width}"));
                    }
                    if !threshold.is_finite() {
                        return Err(format!("node {i}: non-finite threshold"));
                    }
                    for &c in [left, right] {
                        if c <= i || c >= self.nodes.len() {
                            return Err(format!("node {i}: bad child index {c}"));
                        }
                        reached[c] += 1;
                    }
                }
            }
        }
        if reached.iter().any(|&r| r != 1) {
            return Err("nodes are not a tree".into());
        }
        Ok(())
    }
}

pub(crate) struct GrowParams<F> {
    pub split: SplitParams<F>,
    pub max_depth: usize,
    pub learning_rate: F,
}

struct Grower<'a, F> {
    x: &'a FeatureMatrix<F>,
    grad: &'a [F],
    hess: &'a [F],
    params: &'a GrowParams<F>,
    goes_left: Vec<bool>,
    nodes: Vec<TreeNode<F>>,
}

impl<F: Float> Grower<'_, F> {
    fn grow(&mut self, rows: Vec<u32>, sorted: Vec<Vec<u32>>, depth: usize) -> usize {
        let (mut g, mut h) = (F::zero(), F::zero());
        for &r in &rows {
            g += self.grad[r as usize];
            h += self.hess[r as usize];
        }
        let id = self.nodes.len();
        let leaf = TreeNode::Leaf {
            weight: self.params.learning_rate * leaf_weight(g, h, self.params.split.lambda),
        };
        self.nodes.push(leaf.clone());
        if depth >= self.params.max_depth {
            return id;
        }
        let Some(split) = scan_node(
            self.x,
            &sorted,
            self.grad,
            self.hess,
            g,
            h,
            &self.params.split,
        ) else {
            return id;
        };
        let GbtSplit {
            feature,
            threshold,
            missing_left,
            ..
        } = split;

        for &r in &rows {
            self.goes_left[r as usize] = match self.x.get(r as usize, feature) {
                Some(v) => v <= threshold,
                None => missing_left,
            };
        }
        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) =
            rows.iter().partition(|&&r| self.goes_left[r as usize]);
        let mut left_sorted = Vec::with_capacity(sorted.len());
        let mut right_sorted = Vec::with_capacity(sorted.len());
        for order in sorted {
            let (l, r): (Vec<u32>, Vec<u32>) =
                order.into_iter().partition(|&r| self.goes_left[r as usize]);
            left_sorted.push(l);
            right_sorted.push(r);
        }
        drop(rows);

        let left = self.grow(left_rows, left_sorted, depth + 1);
        let right = self.grow(right_rows, right_sorted, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature,
            threshold,
            missing_left,
            left,
            right,
        };
        id
    }
}

/// Grows one tree greedily on gradient statistics of `rows`.
pub(crate) fn grow_tree<F: Float>(
    x: &FeatureMatrix<F>,
    rows: &[u32],
    presorted: &[Vec<u32>],
    grad: &[F],
    hess: &[F],
    params: &GrowParams<F>,
) -> RegTree<F> {
    let mut grower = Grower {
        x,
        grad,
        hess,
        params,
        goes_left: vec![false; x.n_rows()],
        nodes: Vec::new(),
    };
    grower.grow(rows.to_vec(), presorted.to_vec(), 0);
    RegTree {
        nodes: grower.nodes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gbt::split::presort;

    fn params(max_depth: usize) -> GrowParams<f64> {
        GrowParams {
            split: SplitParams {
                lambda: 0.0,
                gamma: 0.0,
                min_child_weight: 0.0,
            },
            max_depth,
            learning_rate: 1.0,
        }
    }

    #[test]
    fn grows_exact_step_function() {
        let x = FeatureMatrix::from_dense(1, &[[0.0f64], [1.0], [2.0], [3.0]]).unwrap();
        let rows: Vec<u32> = (0..4).collect();
        let sorted = presort(&x, &rows);
        // residual pred - target with targets (0, 0, 4, 4) at pred 0
        let g = [0.0, 0.0, -4.0, -4.0];
        let h = [1.0; 4];
        let tree = grow_tree(&x, &rows, &sorted, &g, &h, &params(3));
        assert_eq!(tree.predict(&[Some(0.5)]), 0.0);
        assert_eq!(tree.predict(&[Some(2.5)]), 4.0);
        assert_eq!(tree.n_leaves(), 2);
        tree.validate(1).unwrap();
    }

    #[test]
    fn missing_follows_default_direction() {
        let x =
            FeatureMatrix::from_rows(1, &[[Some(0.0f64)], [Some(1.0)], [None], [None]]).unwrap();
        let rows: Vec<u32> = (0..4).collect();
        let sorted = presort(&x, &rows);
        let g = [1.0, -1.0, -1.0, -1.0];
        let tree = grow_tree(&x, &rows, &sorted, &g, &[1.0; 4], &params(1));
        let TreeNode::Split { missing_left, .. } = tree.nodes()[0] else {
            panic!("expected split");
        };
        assert!(!missing_left);
        assert_eq!(tree.predict(&[None]), tree.predict(&[Some(1.0)]));
    }

    #[test]
    fn validate_rejects_bad_links() {
        let t = RegTree {
            nodes: vec![TreeNode::Split {
                feature: 0,
                threshold: 0.0f64,
                missing_left: true,
                left: 1,
                right: 1,
            }],
        };
        assert!(t.validate(1).is_err());
    }
}
