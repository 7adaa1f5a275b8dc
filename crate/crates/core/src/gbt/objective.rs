use serde::{Deserialize, Serialize};

use crate::dataset::Targets;
use crate::error::{LceError, Result};
use crate::num::Float;

/// Loss minimized by the booster.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Logistic loss on one margin; two classes.
    Binary,
    /// Softmax cross-entropy over `K >= 3` margins.
    Multiclass(usize),
    /// Squared error on one margin.
    Regression,
}

/// Supervision for a single row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Target<F> {
    Class(usize),
    Value(F),
}

impl Objective {
    /// Objective matching a target set. Two global classes use the logistic
    /// loss, more use softmax.
    pub fn for_targets<F: Float>(targets: &Targets<F>) -> Self {
        match targets {
            Targets::Classes { n_classes: 2, .. } => Objective::Binary,
            Targets::Classes { n_classes, .. } => Objective::Multiclass(*n_classes),
            Targets::Values(_) => Objective::Regression,
        }
    }

    /// Number of margins (trees per round).
    pub fn n_margins(self) -> usize {
        match self {
            Objective::Multiclass(k) => k,
            Objective::Binary | Objective::Regression => 1,
        }
    }

    /// Number of values emitted by [`Objective::transform`].
    pub fn output_width(self) -> usize {
        match self {
            Objective::Binary => 2,
            Objective::Multiclass(k) => k,
            Objective::Regression => 1,
        }
    }

    pub fn is_classification(self) -> bool {
        !matches!(self, Objective::Regression)
    }

    fn check_target<F: Float>(self, target: Target<F>) -> Result<()> {
        match (self, target) {
            (Objective::Binary, Target::Class(c)) if c < 2 => Ok(()),
            (Objective::Multiclass(k), Target::Class(c)) if c < k => Ok(()),
            (Objective::Regression, Target::Value(v)) if v.is_finite() => Ok(()),
            (Objective::Regression, Target::Value(_)) => Err(LceError::NonFinite("target")),
            _ => Err(LceError::invalid(format!(
                "target {target:?} does not fit objective {self:?}"
            ))),
        }
    }

    /// Writes first and second derivatives of the loss w.r.t. each margin.
    pub fn grad_hess_into<F: Float>(
        self,
        margins: &[F],
        target: Target<F>,
        grad: &mut [F],
        hess: &mut [F],
    ) {
        match (self, target) {
            (Objective::Binary, Target::Class(y)) => {
                let p = sigmoid(margins[0]);
                let y = if y == 1 { F::one() } else { F::zero() };
                grad[0] = p - y;
                hess[0] = p * (F::one() - p);
            }
            (Objective::Multiclass(_), Target::Class(y)) => {
                softmax_into(margins, grad);
                for (k, (g, h)) in grad.iter_mut().zip(hess.iter_mut()).enumerate() {
                    let p = *g;
                    *h = p * (F::one() - p);
                    if k == y {
                        *g = p - F::one();
                    }
                }
            }
            (Objective::Regression, Target::Value(t)) => {
                grad[0] = margins[0] - t;
                hess[0] = F::one();
            }
            _ => unreachable!("target validated against objective"),
        }
    }

    /// Loss of one row.
    pub fn loss<F: Float>(self, margins: &[F], target: Target<F>) -> F {
        match (self, target) {
            (Objective::Binary, Target::Class(y)) => {
                let m = margins[0];
                let y = if y == 1 { F::one() } else { F::zero() };
                softplus(m) - y * m
            }
            (Objective::Multiclass(_), Target::Class(y)) => log_sum_exp(margins) - margins[y],
            (Objective::Regression, Target::Value(t)) => {
                let r = margins[0] - t;
                F::of(0.5) * r * r
            }
            _ => unreachable!("target validated against objective"),
        }
    }

    /// Maps margins to the emitted output: class probabilities (binary as
    /// `[1 - p, p]`) or the regression value.
    pub fn transform<F: Float>(self, margins: &[F]) -> Vec<F> {
        match self {
            Objective::Binary => {
                let p = sigmoid(margins[0]);
                vec![F::one() - p, p]
            }
            Objective::Multiclass(k) => {
                let mut out = vec![F::zero(); k];
                softmax_into(margins, &mut out);
                out
            }
            Objective::Regression => vec![margins[0]],
        }
    }
}

/// Per-margin `(gradient, hessian)` of the loss at `margins`.
///
/// Logistic: `g = p - y`, `h = p(1 - p)`. Softmax: `g_k = p_k - [k = y]`,
/// `h_k = p_k(1 - p_k)` (exact diagonal). Squared error: `g = m - t`, `h = 1`.
pub fn grad_hess<F: Float>(
    margins: &[F],
    target: Target<F>,
    objective: Objective,
) -> Result<Vec<(F, F)>> {
    if margins.len() != objective.n_margins() {
        return Err(LceError::WidthMismatch {
            expected: objective.n_margins(),
            found: margins.len(),
        });
    }
    if !margins.iter().all(|m| m.is_finite()) {
        return Err(LceError::NonFinite("margin"));
    }
    objective.check_target(target)?;
    let mut g = vec![F::zero(); margins.len()];
    let mut h = vec![F::zero(); margins.len()];
    objective.grad_hess_into(margins, target, &mut g, &mut h);
    Ok(g.into_iter().zip(h).collect())
}

pub(crate) fn validate_targets<F: Float>(objective: Objective, targets: &Targets<F>) -> Result<()> {
    for i in 0..targets.len() {
        objective.check_target(target_at(targets, i))?;
    }
    Ok(())
}

#[inline]
pub(crate) fn target_at<F: Float>(targets: &Targets<F>, i: usize) -> Target<F> {
    match targets {
        Targets::Classes { labels, .. } => Target::Class(labels[i]),
        Targets::Values(v) => Target::Value(v[i]),
    }
}

pub(crate) fn sigmoid<F: Float>(m: F) -> F {
    if m >= F::zero() {
        F::one() / (F::one() + (-m).exp())
    } else {
        let e = m.exp();
        e / (F::one() + e)
    }
}

fn softplus<F: Float>(m: F) -> F {
    // log(1 + e^m)
    if m > F::zero() {
        m + (-m).exp().ln_1p()
    } else {
        m.exp().ln_1p()
    }
}

fn log_sum_exp<F: Float>(m: &[F]) -> F {
    let max = m.iter().copied().fold(F::neg_infinity(), F::max);
    let s: F = m.iter().map(|&v| (v - max).exp()).sum();
    max + s.ln()
}

fn softmax_into<F: Float>(m: &[F], out: &mut [F]) {
    let max = m.iter().copied().fold(F::neg_infinity(), F::max);
    let mut total = F::zero();
    for (o, &v) in out.iter_mut().zip(m) {
        *o = (v - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn binary_at_zero_margin() {
        let gh = grad_hess(&[0.0f64], Target::Class(1), Objective::Binary).unwrap();
        assert_eq!(gh, vec![(-0.5, 0.25)]);
    }

    #[test]
    fn binary_at_margin_two() {
        let gh = grad_hess(&[2.0f64], Target::Class(0), Objective::Binary).unwrap();
        assert_abs_diff_eq!(gh[0].0, 0.880797, epsilon = 1e-6);
        assert_abs_diff_eq!(gh[0].1, 0.104994, epsilon = 1e-6);
    }

    #[test]
    fn softmax_equal_margins() {
        let gh = grad_hess(
            &[0.3f64, 0.3, 0.3],
            Target::Class(0),
            Objective::Multiclass(3),
        )
        .unwrap();
        let expected = [
            (-2.0 / 3.0, 2.0 / 9.0),
            (1.0 / 3.0, 2.0 / 9.0),
            (1.0 / 3.0, 2.0 / 9.0),
        ];
        for ((g, h), (eg, eh)) in gh.iter().zip(expected) {
            assert_abs_diff_eq!(*g, eg, epsilon = 1e-12);
            assert_abs_diff_eq!(*h, eh, epsilon = 1e-12);
        }
    }

    #[test]
    fn squared_error_at_target() {
        let gh = grad_hess(&[1.5f64], Target::Value(1.5), Objective::Regression).unwrap();
        assert_eq!(gh, vec![(0.0, 1.0)]);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(grad_hess(&[f64::NAN], Target::Class(0), Objective::Binary).is_err());
        assert!(grad_hess(&[0.0f64], Target::Class(2), Objective::Binary).is_err());
        assert!(grad_hess(&[0.0f64, 1.0], Target::Class(0), Objective::Binary).is_err());
        assert!(grad_hess(
            &[0.0f64],
            Target::Value(f64::INFINITY),
            Objective::Regression
        )
        .is_err());
    }

    #[test]
    fn extreme_margins_stay_finite() {
        let p = Objective::Binary.transform(&[800.0f64]);
        assert!(p.iter().all(|v| v.is_finite()));
        let l = Objective::Binary.loss(&[-800.0f64], Target::Class(1));
        assert_abs_diff_eq!(l, 800.0, epsilon = 1e-9);
        let q = Objective::Multiclass(3).transform(&[1000.0f64, -1000.0, 0.0]);
        assert_abs_diff_eq!(q.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }
}
