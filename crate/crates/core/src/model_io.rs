//! Versioned model files.
//!
//! A model is stored as one JSON document with a fixed field order:
//!
//! ```text
//! {
//!   "format_version": 1,
//!   "task": "classification" | "regression",
//!   "feature_names": [...],
//!   "class_names": [...],
//!   "config": { ... },          // LceConfig echo
//!   "trees": [ CascadeTree, ... ]
//! }
//! ```
//!
//! Reals are written in shortest round-trip decimal form and parsed with
//! correct rounding, so a save/load cycle reproduces every value bit for bit.
//! Every collection is a JSON array; there are no maps with unstable order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cascade::CascadeTree;
use crate::dataset::Task;
use crate::ensemble::{LceConfig, LceModel};
use crate::error::{LceError, Result};
use crate::num::Float;

/// Version written by this release.
pub const FORMAT_VERSION: u64 = 1;

#[derive(Serialize)]
struct EnvelopeRef<'a, F> {
    format_version: u64,
    task: Task,
    feature_names: &'a [String],
    class_names: &'a [String],
    config: &'a LceConfig<F>,
    trees: &'a [CascadeTree<F>],
}

#[derive(Deserialize)]
#[serde(bound = "F: Float")]
struct Envelope<F> {
    #[allow(dead_code)]
    format_version: u64,
    task: Task,
    feature_names: Vec<String>,
    class_names: Vec<String>,
    config: LceConfig<F>,
    trees: Vec<CascadeTree<F>>,
}

#[derive(Deserialize)]
struct Header {
    format_version: u64,
}

/// Serializes a model to its canonical text form.
pub fn to_string<F: Float>(model: &LceModel<F>) -> Result<String> {
    let env = EnvelopeRef {
        format_version: FORMAT_VERSION,
        task: model.task(),
        feature_names: model.feature_names(),
        class_names: model.class_names(),
        config: model.config(),
        trees: model.trees(),
    };
    let mut s = serde_json::to_string_pretty(&env).map_err(|e| LceError::ModelSchema {
        location: "model".into(),
        message: e.to_string(),
    })?;
    s.push('\n');
    Ok(s)
}

pub fn save<F: Float>(model: &LceModel<F>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_string(model)?).map_err(|e| LceError::io(path, e))
}

fn map_json_error(e: serde_json::Error, location: &str) -> LceError {
    use serde_json::error::Category;
    match e.classify() {
        Category::Data => LceError::ModelSchema {
            location: format!("{location} (line {}, column {})", e.line(), e.column()),
            message: e.to_string(),
        },
        Category::Syntax | Category::Eof | Category::Io => LceError::ModelCorrupt {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        },
    }
}

/// Parses a model document and checks its structural invariants.
pub fn from_str<F: Float>(text: &str) -> Result<LceModel<F>> {
    let header: Header =
        serde_json::from_str(text).map_err(|e| map_json_error(e, "format_version"))?;
    if header.format_version != FORMAT_VERSION {
        return Err(LceError::UnknownVersion(header.format_version));
    }
    let env: Envelope<F> = serde_json::from_str(text).map_err(|e| map_json_error(e, "model"))?;
    match (env.task, env.class_names.len()) {
        (Task::Classification, k) if k < 2 => {
            return Err(LceError::ModelSchema {
                location: "class_names".into(),
                message: format!("classification model with {k} classes"),
            })
        }
        (Task::Regression, k) if k > 0 => {
            return Err(LceError::ModelSchema {
                location: "class_names".into(),
                message: "regression model with class names".into(),
            })
        }
        _ => {}
    }
    if env.trees.iter().any(|t| t.task != env.task) {
        return Err(LceError::ModelSchema {
            location: "trees".into(),
            message: "tree task disagrees with header".into(),
        });
    }
    if env.trees.len() != env.config.n_estimators {
        return Err(LceError::ModelSchema {
            location: "trees".into(),
            message: format!(
                "{} trees for n_estimators = {}",
                env.trees.len(),
                env.config.n_estimators
            ),
        });
    }
    LceModel::from_trees(env.trees, env.feature_names, env.class_names, env.config)
}

pub fn load<F: Float>(path: impl AsRef<Path>) -> Result<LceModel<F>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| LceError::io(path, e))?;
    from_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::{BaseLearner, CascadeConfig};
    use crate::dataset::{Dataset, FeatureMatrix, Targets};
    use crate::ensemble::{fit, Parallelism};
    use crate::gbt::GbtConfig;

    fn small_model() -> LceModel<f64> {
        let xs: Vec<[f64; 2]> = (0..24)
            .map(|i| [i as f64 * 0.1, ((i * 7) % 5) as f64])
            .collect();
        let labels = (0..24).map(|i| (i / 8) % 3).collect();
        let ds = Dataset::new(
            FeatureMatrix::from_dense(2, &xs).unwrap(),
            vec!["a".into(), "b".into()],
            "y",
            Targets::Classes {
                labels,
                n_classes: 3,
            },
            vec!["p".into(), "q".into(), "r".into()],
        )
        .unwrap();
        let cfg = LceConfig {
            n_estimators: 2,
            parallelism: Parallelism::threads(1).unwrap(),
            cascade: CascadeConfig {
                max_depth: 1,
                base: BaseLearner::Fixed(GbtConfig {
                    n_rounds: 3,
                    ..GbtConfig::default()
                }),
                ..CascadeConfig::default()
            },
            ..LceConfig::default()
        };
        fit(&ds, &cfg).unwrap()
    }

    #[test]
    fn round_trip_and_version() {
        let m = small_model();
        let s = to_string(&m).unwrap();
        assert!(s.contains("\"format_version\": 1"));
        let back: LceModel<f64> = from_str(&s).unwrap();
        assert_eq!(back, m);
        assert_eq!(to_string(&back).unwrap(), s);
    }

    #[test]
    fn unknown_version_is_named() {
        let s = to_string(&small_model()).unwrap().replacen(
            "\"format_version\": 1",
            "\"format_version\": 999",
            1,
        );
        let err = from_str::<f64>(&s).unwrap_err();
        assert!(matches!(err, LceError::UnknownVersion(999)));
        assert!(err.to_string().contains("999"));
    }

    #[test]
    fn truncated_is_corrupt() {
        let s = to_string(&small_model()).unwrap();
        let err = from_str::<f64>(&s[..s.len() / 2]).unwrap_err();
        assert!(matches!(err, LceError::ModelCorrupt { .. }), "{err}");
    }

    #[test]
    fn wrong_types_are_schema_errors() {
        let s = to_string(&small_model()).unwrap().replacen(
            "\"feature_names\": [",
            "\"feature_names\": 3, \"x\": [",
            1,
        );
        let r = from_str::<f64>(&s);
        assert!(
            matches!(r, Err(LceError::ModelSchema { .. })),
            "{:?}",
            r.err()
        );
        let s = to_string(&small_model()).unwrap().replacen(
            "\"input_width\": 2",
            "\"input_width\": 5",
            1,
        );
        assert!(matches!(
            from_str::<f64>(&s),
            Err(LceError::ModelSchema { .. })
        ));
    }
}
