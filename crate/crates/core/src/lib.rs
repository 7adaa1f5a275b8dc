//! Local cascade ensembles: bagged decision trees whose every node fits a
//! gradient-boosted base learner and passes its outputs down as extra
//! features.
//!
//! The core is generic over the scalar type; `f64` and `f32` aliases are
//! provided below.
//!
//! ```
//! use lce::{fit, Dataset64, LceConfig64, Task};
//!
//! let csv = "x,y\n0,a\n1,a\n2,a\n3,a\n10,b\n11,b\n12,b\n13,b\n";
//! let ds: Dataset64 = lce::read_csv(csv.as_bytes(), "y", Task::Classification, &Default::default()).unwrap();
//! let cfg = LceConfig64 { n_estimators: 2, ..Default::default() };
//! let model = fit(&ds, &cfg).unwrap();
//! assert_eq!(model.score(&ds).unwrap(), 1.0);
//! ```

pub mod cascade;
pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod gbt;
pub mod model_io;
pub mod num;
pub mod seed;
pub mod tuning;

pub use cascade::{BaseLearner, CascadeConfig, CascadeTree};
pub use dataset::{
    bootstrap_indices, bootstrap_sample, kfold_indices, load_csv, read_csv, read_for_schema,
    train_test_indices, train_test_split, Cell, CsvOptions, Dataset, FeatureMatrix, SchemaRows,
    Targets, Task,
};
pub use ensemble::{fit, LceConfig, LceModel, Parallelism, Prediction};
pub use error::{LceError, Result};
pub use gbt::{fit_gbt, GbtConfig, GbtModel, Objective};
pub use num::Float;
pub use seed::derive_seed;
pub use tuning::{grid_search_lce, tune_base_learner, GridPoint, ParamGrid};

pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type FeatureMatrix64 = FeatureMatrix<f64>;
pub type FeatureMatrix32 = FeatureMatrix<f32>;
pub type LceConfig64 = LceConfig<f64>;
pub type LceConfig32 = LceConfig<f32>;
pub type LceModel64 = LceModel<f64>;
pub type LceModel32 = LceModel<f32>;
pub type GbtConfig64 = GbtConfig<f64>;
pub type GbtConfig32 = GbtConfig<f32>;
pub type GbtModel64 = GbtModel<f64>;
pub type GbtModel32 = GbtModel<f32>;
pub type CascadeTree64 = CascadeTree<f64>;
pub type CascadeTree32 = CascadeTree<f32>;
