//! Regularized second-order split scoring.

use crate::dataset::FeatureMatrix;
use crate::num::{midpoint, Float};

/// `G^2 / (H + lambda)`, defined as 0 when the denominator vanishes.
#[inline]
fn score<F: Float>(g: F, h: F, lambda: F) -> F {
    let d = h + lambda;
    if d == F::zero() {
        F::zero()
    } else {
        g * g / d
    }
}

/// Gain of splitting a node into (left, right):
/// `1/2 [GL^2/(HL+l) + GR^2/(HR+l) - (GL+GR)^2/(HL+HR+l)] - gamma`.
///
/// Any term whose denominator is zero contributes 0, so the degenerate
/// `lambda = 0, HL + HR = 0` case evaluates to `-gamma`.
pub fn split_gain<F: Float>(gl: F, hl: F, gr: F, hr: F, lambda: F, gamma: F) -> F {
    let half = F::of(0.5);
    half * (score(gl, hl, lambda) + score(gr, hr, lambda) - score(gl + gr, hl + hr, lambda)) - gamma
}

/// Optimal leaf value `-G / (H + lambda)`; 0 when `H + lambda = 0`.
pub fn leaf_weight<F: Float>(g: F, h: F, lambda: F) -> F {
    let d = h + lambda;
    if d == F::zero() {
        F::zero()
    } else {
        -g / d
    }
}

/// Split of a booster tree node. Rows with `value <= threshold` go left;
/// missing values follow `missing_left`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GbtSplit<F> {
    pub feature: usize,
    pub threshold: F,
    pub missing_left: bool,
    pub gain: F,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct SplitParams<F> {
    pub lambda: F,
    pub gamma: F,
    pub min_child_weight: F,
}

/// Per feature, the rows with a present value sorted by (value, row index).
pub(crate) fn presort<F: Float>(x: &FeatureMatrix<F>, rows: &[u32]) -> Vec<Vec<u32>> {
    (0..x.width())
        .map(|j| {
            let mut present: Vec<(F, u32)> = rows
                .iter()
                .filter_map(|&r| x.get(r as usize, j).map(|v| (v, r)))
                .collect();
            present.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            present.into_iter().map(|(_, r)| r).collect()
        })
        .collect()
}

/// Exact greedy scan over every feature of a node.
///
/// Candidates are the midpoints between adjacent distinct present values,
/// each tried with missing rows sent left and then right. A candidate is
/// admissible when both children have hessian sum `>= min_child_weight`.
/// The first admissible candidate with the strictly largest positive gain in
/// (feature, threshold, missing-left-first) order wins.
pub(crate) fn scan_node<F: Float>(
    x: &FeatureMatrix<F>,
    sorted: &[Vec<u32>],
    grad: &[F],
    hess: &[F],
    g_total: F,
    h_total: F,
    params: &SplitParams<F>,
) -> Option<GbtSplit<F>> {
    let mut best: Option<GbtSplit<F>> = None;
    let mut consider = |feature, threshold, missing_left, gl: F, hl: F| {
        let (gr, hr) = (g_total - gl, h_total - hl);
        if hl < params.min_child_weight || hr < params.min_child_weight {
            return;
        }
        let gain = split_gain(gl, hl, gr, hr, params.lambda, params.gamma);
        if gain > F::zero() && best.is_none_or(|b| gain > b.gain) {
            best = Some(GbtSplit {
                feature,
                threshold,
                missing_left,
                gain,
            });
        }
    };

    for (j, order) in sorted.iter().enumerate() {
        if order.len() < 2 {
            continue;
        }
        let (mut gp, mut hp) = (F::zero(), F::zero());
        for &r in order {
            gp += grad[r as usize];
            hp += hess[r as usize];
        }
        let (gm, hm) = (g_total - gp, h_total - hp);

        let (mut gl, mut hl) = (F::zero(), F::zero());
        for w in order.windows(2) {
            let (r, next) = (w[0] as usize, w[1] as usize);
            gl += grad[r];
            hl += hess[r];
            let v = x.get(r, j).expect("presorted rows are present");
            let v_next = x.get(next, j).expect("presorted rows are present");
            if v < v_next {
                let thr = midpoint(v, v_next);
                consider(j, thr, true, gl + gm, hl + hm);
                consider(j, thr, false, gl, hl);
            }
        }
    }
    best
}

/// Best split of all rows of `x` under gradient statistics `(grad, hess)`.
pub fn best_split<F: Float>(
    x: &FeatureMatrix<F>,
    grad: &[F],
    hess: &[F],
    lambda: F,
    gamma: F,
    min_child_weight: F,
) -> Option<GbtSplit<F>> {
    let rows: Vec<u32> = (0..x.n_rows() as u32).collect();
    let sorted = presort(x, &rows);
    let g_total = grad.iter().copied().sum();
    let h_total = hess.iter().copied().sum();
    let params = SplitParams {
        lambda,
        gamma,
        min_child_weight,
    };
    scan_node(x, &sorted, grad, hess, g_total, h_total, &params)
}
