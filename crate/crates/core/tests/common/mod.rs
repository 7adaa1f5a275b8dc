//! Reference implementations used as oracles by the integration tests.
//!
//! Everything here is written from the definitions, without calling into the
//! crate's split search or loss code.

#![allow(dead_code)]

use std::path::PathBuf;

use lce::{Dataset64, FeatureMatrix64, Targets};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

pub fn load(name: &str, label: &str) -> Dataset64 {
    lce::load_csv(
        data_path(name),
        label,
        lce::Task::Classification,
        &Default::default(),
    )
    .unwrap()
}

/// One candidate partition: rows with `value <= threshold` go left, missing
/// rows go left iff `missing_left`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub feature: usize,
    pub threshold: f64,
    pub missing_left: bool,
    pub score: f64,
}

/// Every (feature, boundary between adjacent distinct values, missing
/// direction) triple, in the documented scan order.
pub fn enumerate_partitions(x: &FeatureMatrix64) -> Vec<(usize, f64, bool, Vec<bool>)> {
    let mut out = Vec::new();
    for j in 0..x.width() {
        let mut values: Vec<f64> = (0..x.n_rows()).filter_map(|r| x.get(r, j)).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let thr = (lo + hi) / 2.0;
            assert!(
                lo <= thr && thr < hi,
                "oracle inputs must have exact midpoints"
            );
            for missing_left in [true, false] {
                let goes_left = (0..x.n_rows())
                    .map(|r| match x.get(r, j) {
                        Some(v) => v <= lo,
                        None => missing_left,
                    })
                    .collect();
                out.push((j, thr, missing_left, goes_left));
            }
        }
    }
    out
}

/// Keeps the first candidate with the strictly largest positive score.
fn pick(cands: impl Iterator<Item = Candidate>) -> Option<Candidate> {
    let mut best: Option<Candidate> = None;
    for c in cands {
        if c.score > 0.0 && best.is_none_or(|b| c.score > b.score) {
            best = Some(c);
        }
    }
    best
}

fn term(g: f64, h: f64, lambda: f64) -> f64 {
    if h + lambda == 0.0 {
        0.0
    } else {
        g * g / (h + lambda)
    }
}

/// Exhaustive second-order split search.
pub fn brute_gbt_split(
    x: &FeatureMatrix64,
    grad: &[f64],
    hess: &[f64],
    lambda: f64,
    gamma: f64,
    min_child_weight: f64,
) -> Option<Candidate> {
    let g: f64 = grad.iter().sum();
    let h: f64 = hess.iter().sum();
    pick(enumerate_partitions(x).into_iter().filter_map(
        |(feature, threshold, missing_left, left)| {
            let (mut gl, mut hl, mut gr, mut hr) = (0.0, 0.0, 0.0, 0.0);
            for (r, &l) in left.iter().enumerate() {
                if l {
                    gl += grad[r];
                    hl += hess[r];
                } else {
                    gr += grad[r];
                    hr += hess[r];
                }
            }
            if hl < min_child_weight || hr < min_child_weight {
                return None;
            }
            let score =
                0.5 * (term(gl, hl, lambda) + term(gr, hr, lambda) - term(g, h, lambda)) - gamma;
            Some(Candidate {
                feature,
                threshold,
                missing_left,
                score,
            })
        },
    ))
}

fn gini(labels: &[usize], k: usize) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let n = labels.len() as f64;
    let mut s = 0.0;
    for c in 0..k {
        let p = labels.iter().filter(|&&l| l == c).count() as f64 / n;
        s += p * p;
    }
    1.0 - s
}

fn variance(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let sum: f64 = values.iter().sum();
    let sq: f64 = values.iter().map(|v| v * v).sum();
    let mean = sum / n;
    (sq / n - mean * mean).max(0.0)
}

/// Exhaustive impurity-decrease split search (Gini or population variance).
pub fn brute_cascade_split(
    x: &FeatureMatrix64,
    targets: &Targets<f64>,
    min_samples_leaf: usize,
) -> Option<Candidate> {
    let n = x.n_rows();
    let impurity = |rows: &[usize]| -> f64 {
        match targets {
            Targets::Classes { labels, n_classes } => {
                let sub: Vec<usize> = rows.iter().map(|&r| labels[r]).collect();
                gini(&sub, *n_classes)
            }
            Targets::Values(v) => {
                let sub: Vec<f64> = rows.iter().map(|&r| v[r]).collect();
                variance(&sub)
            }
        }
    };
    let all: Vec<usize> = (0..n).collect();
    let parent = impurity(&all);
    pick(enumerate_partitions(x).into_iter().filter_map(
        |(feature, threshold, missing_left, left)| {
            let l: Vec<usize> = (0..n).filter(|&r| left[r]).collect();
            let r: Vec<usize> = (0..n).filter(|&r| !left[r]).collect();
            if l.len() < min_samples_leaf || r.len() < min_samples_leaf {
                return None;
            }
            let nf = n as f64;
            let score = parent
                - (l.len() as f64 / nf) * impurity(&l)
                - (r.len() as f64 / nf) * impurity(&r);
            Some(Candidate {
                feature,
                threshold,
                missing_left,
                score,
            })
        },
    ))
}

/// A random split-search instance: up to 50 rows, up to 4 features with small
/// integer values, roughly 20% missing cells, dyadic gradient statistics and
/// integer targets, so every sum is exact in any order.
pub struct Instance {
    pub x: FeatureMatrix64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
    pub classes: Targets<f64>,
    pub values: Targets<f64>,
    pub lambda: f64,
    pub gamma: f64,
    pub min_child_weight: f64,
    pub min_samples_leaf: usize,
}

pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=50);
    let width = rng.gen_range(1..=4);
    let levels = rng.gen_range(2..=8);
    let rows: Vec<Vec<Option<f64>>> = (0..n)
        .map(|_| {
            (0..width)
                .map(|_| (rng.gen::<f64>() >= 0.2).then(|| rng.gen_range(0..levels) as f64))
                .collect()
        })
        .collect();
    let k = rng.gen_range(2..=4);
    Instance {
        x: FeatureMatrix64::from_rows(width, &rows).unwrap(),
        grad: (0..n)
            .map(|_| rng.gen_range(-16..=16) as f64 / 16.0)
            .collect(),
        hess: (0..n)
            .map(|_| rng.gen_range(0..=16) as f64 / 16.0)
            .collect(),
        classes: Targets::Classes {
            labels: (0..n).map(|_| rng.gen_range(0..k)).collect(),
            n_classes: k,
        },
        values: Targets::Values((0..n).map(|_| rng.gen_range(-5..=5) as f64).collect()),
        lambda: [0.0, 1.0][rng.gen_range(0..2)],
        gamma: [0.0, 0.0, 0.5][rng.gen_range(0..3)],
        min_child_weight: [0.0, 0.25, 1.0][rng.gen_range(0..3)],
        min_samples_leaf: rng.gen_range(1..=3),
    }
}

/// A loss as a function of the margin vector.
pub type Loss = Box<dyn Fn(&[f64]) -> f64>;

/// Loss functions written from their definitions.
pub fn logistic_loss(m: f64, y: f64) -> f64 {
    // log(1 + e^m) - y m, stable on both tails
    m.max(0.0) + (-m.abs()).exp().ln_1p() - y * m
}

pub fn softmax_loss(m: &[f64], y: usize) -> f64 {
    let top = m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    top + m.iter().map(|v| (v - top).exp()).sum::<f64>().ln() - m[y]
}

pub fn squared_loss(m: f64, t: f64) -> f64 {
    0.5 * (m - t) * (m - t)
}

/// Central difference of `f` along coordinate `k`, Richardson-extrapolated
/// to fourth order.
pub fn central_diff(f: &dyn Fn(&[f64]) -> f64, at: &[f64], k: usize, step: f64) -> f64 {
    let d = |h: f64| {
        let mut up = at.to_vec();
        let mut down = at.to_vec();
        up[k] += h;
        down[k] -= h;
        (f(&up) - f(&down)) / (2.0 * h)
    };
    (4.0 * d(step / 2.0) - d(step)) / 3.0
}

/// First and diagonal second derivatives of `f` along coordinate `k`.
pub fn fd_grad_hess(f: &dyn Fn(&[f64]) -> f64, at: &[f64], k: usize) -> (f64, f64) {
    let deriv = |z: &[f64]| central_diff(f, z, k, 1e-3);
    (deriv(at), central_diff(&deriv, at, k, 1e-2))
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + 1e-12
}
