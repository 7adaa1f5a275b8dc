//! Metrics and the benchmark protocol.
//!
//! A benchmark run takes a manifest of CSV datasets, splits each one 75/25
//! (stratified, fixed seed), grid-searches every method with 3-fold
//! cross-validation on the training side, refits the best point on the whole
//! training side and reports test accuracy. The report carries average ranks
//! under the min-rank rule and per-method win/tie counts.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::cascade::BaseLearner;
use crate::dataset::{load_csv, train_test_split, CsvOptions, Dataset, Task};
use crate::ensemble::{fit, LceConfig};
use crate::error::{LceError, Result};
use crate::gbt::{fit_gbt, GbtConfig, GbtModel};
use crate::num::Float;
use crate::tuning::{
    apply_point, argmax, grid_search_cv, score_predictions, GridParam, GridPoint, ParamGrid,
};

/// Percentage of matching labels.
pub fn accuracy(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(LceError::invalid(format!(
            "{} labels vs {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(LceError::invalid("accuracy of an empty label set"));
    }
    let hits = y_true.iter().zip(y_pred).filter(|(a, b)| a == b).count();
    Ok(100.0 * hits as f64 / y_true.len() as f64)
}

/// Rounds to one decimal, halves away from zero.
pub fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

/// `Accuracy: X.X%`.
pub fn format_accuracy(percent: f64) -> String {
    format!("Accuracy: {:.1}%", round1(percent))
}

fn check_table(acc: &[Vec<f64>]) -> Result<usize> {
    let methods = acc
        .first()
        .map(Vec::len)
        .ok_or_else(|| LceError::Table("no datasets".into()))?;
    if methods == 0 {
        return Err(LceError::Table("no methods".into()));
    }
    if let Some(i) = acc.iter().position(|row| row.len() != methods) {
        return Err(LceError::Table(format!(
            "row {i} has {} entries, expected {methods}",
            acc[i].len()
        )));
    }
    Ok(methods)
}

/// Average rank per method. On each dataset a method's rank is one plus the
/// number of methods with strictly higher accuracy, so tied methods share the
/// best rank of their group.
pub fn min_rank_table(acc: &[Vec<f64>]) -> Result<Vec<f64>> {
    let methods = check_table(acc)?;
    let mut totals = vec![0usize; methods];
    for row in acc {
        for (m, &a) in row.iter().enumerate() {
            totals[m] += 1 + row.iter().filter(|&&b| b > a).count();
        }
    }
    Ok(totals
        .into_iter()
        .map(|t| t as f64 / acc.len() as f64)
        .collect())
}

/// Per method, the number of datasets on which it attains the best accuracy.
pub fn wins_ties(acc: &[Vec<f64>]) -> Result<Vec<usize>> {
    let methods = check_table(acc)?;
    let mut wins = vec![0usize; methods];
    for row in acc {
        let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (m, &a) in row.iter().enumerate() {
            if a == best {
                wins[m] += 1;
            }
        }
    }
    Ok(wins)
}

/// Methods compared by the benchmark.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    /// Local cascade ensemble.
    Lce,
    /// Bagged plain decision trees with histogram leaves.
    BaggedTrees,
    /// A single booster.
    Gbt,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::BaggedTrees, Method::Gbt, Method::Lce];

    pub fn name(self) -> &'static str {
        match self {
            Method::Lce => "lce",
            Method::BaggedTrees => "bagged_trees",
            Method::Gbt => "gbt",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = LceError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lce" => Ok(Method::Lce),
            "bagged_trees" => Ok(Method::BaggedTrees),
            "gbt" => Ok(Method::Gbt),
            other => Err(LceError::invalid(format!("unknown method `{other}`"))),
        }
    }
}

/// A fitted benchmark model.
pub enum Fitted<F> {
    Ensemble(crate::ensemble::LceModel<F>),
    Booster(GbtModel<F>),
}

impl<F: Float> Fitted<F> {
    pub fn predict_real(&self, row: &[Option<F>]) -> Result<F> {
        match self {
            Fitted::Ensemble(m) => m.predict_real(row),
            Fitted::Booster(m) => {
                let out = m.predict_output(row)?;
                Ok(if m.objective().is_classification() {
                    F::of_usize(argmax(&out))
                } else {
                    out[0]
                })
            }
        }
    }

    pub fn score(&self, ds: &Dataset<F>) -> Result<F> {
        let preds = (0..ds.n_rows())
            .map(|i| self.predict_real(ds.row(i)))
            .collect::<Result<Vec<F>>>()?;
        Ok(score_predictions(ds.targets(), &preds))
    }
}

/// Fits `method` at a grid point on top of `base`.
///
/// For the booster, `n_estimators` sets the number of rounds and
/// `max_depth` the tree depth (at least 1).
pub fn fit_method<F: Float>(
    method: Method,
    ds: &Dataset<F>,
    point: &GridPoint,
    base: &LceConfig<F>,
) -> Result<Fitted<F>> {
    match method {
        Method::Lce => Ok(Fitted::Ensemble(fit(ds, &apply_point(base, point))?)),
        Method::BaggedTrees => {
            let mut cfg = apply_point(base, point);
            cfg.cascade.base = BaseLearner::Disabled;
            Ok(Fitted::Ensemble(fit(ds, &cfg)?))
        }
        Method::Gbt => {
            let mut cfg = GbtConfig::default();
            if let Some(n) = point.get(GridParam::NEstimators) {
                cfg.n_rounds = n;
            }
            if let Some(d) = point.get(GridParam::MaxDepth) {
                cfg.max_depth = d.max(1);
            }
            Ok(Fitted::Booster(fit_gbt(ds.features(), ds.targets(), &cfg)?))
        }
    }
}

/// Grid values of one manifest dataset.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_estimators: Option<Vec<usize>>,
    pub max_depth: Option<Vec<usize>>,
}

impl GridSpec {
    pub fn to_grid(&self) -> Result<ParamGrid> {
        let mut axes = Vec::new();
        if let Some(v) = &self.n_estimators {
            axes.push((GridParam::NEstimators, v.clone()));
        }
        if let Some(v) = &self.max_depth {
            axes.push((GridParam::MaxDepth, v.clone()));
        }
        ParamGrid::new(axes)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestDataset {
    pub name: String,
    /// Relative paths resolve against the manifest's directory.
    pub path: PathBuf,
    pub label: String,
    #[serde(default = "default_task")]
    pub task: String,
    pub grid: GridSpec,
    /// Published accuracies printed for reference.
    #[serde(default)]
    pub reference: BTreeMap<String, f64>,
}

fn default_task() -> String {
    "classification".into()
}

/// Benchmark manifest (TOML).
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(rename = "dataset")]
    pub datasets: Vec<ManifestDataset>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_test_fraction() -> f64 {
    0.25
}

fn default_folds() -> usize {
    3
}

impl Manifest {
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut m: Manifest =
            toml::from_str(text).map_err(|e| LceError::Manifest(e.to_string()))?;
        m.base_dir = base_dir.into();
        if m.datasets.is_empty() {
            return Err(LceError::Manifest("no datasets".into()));
        }
        for d in &m.datasets {
            if d.task != "classification" {
                return Err(LceError::Manifest(format!(
                    "dataset `{}`: only classification is benchmarked",
                    d.name
                )));
            }
            d.grid
                .to_grid()
                .map_err(|e| LceError::Manifest(format!("dataset `{}`: {e}", d.name)))?;
        }
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| LceError::io(path, e))?;
        Manifest::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

/// Description columns of a report row.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetInfo {
    pub name: String,
    pub samples: Option<usize>,
    pub dimensions: Option<usize>,
    pub classes: Option<usize>,
}

/// Accuracy table with rank statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub methods: Vec<String>,
    pub datasets: Vec<DatasetInfo>,
    /// Percent accuracies, one row per dataset, one column per method.
    pub accuracy: Vec<Vec<f64>>,
    pub average_rank: Vec<f64>,
    pub wins_ties: Vec<usize>,
    /// Per dataset, published numbers shown alongside.
    pub reference: Vec<BTreeMap<String, f64>>,
}

impl BenchReport {
    pub fn new(
        methods: Vec<String>,
        datasets: Vec<DatasetInfo>,
        accuracy: Vec<Vec<f64>>,
        reference: Vec<BTreeMap<String, f64>>,
    ) -> Result<Self> {
        if datasets.len() != accuracy.len() {
            return Err(LceError::Table("dataset count mismatch".into()));
        }
        if accuracy
            .iter()
            .flatten()
            .any(|a| !(0.0..=100.0).contains(a))
        {
            return Err(LceError::Table("accuracy outside [0, 100]".into()));
        }
        let average_rank = min_rank_table(&accuracy)?;
        let wins_ties = wins_ties(&accuracy)?;
        if methods.len() != average_rank.len() {
            return Err(LceError::Table("method count mismatch".into()));
        }
        Ok(BenchReport {
            methods,
            datasets,
            accuracy,
            average_rank,
            wins_ties,
            reference,
        })
    }

    /// Reads the CSV written by [`BenchReport::to_csv`]:
    /// `dataset,samples,dimensions,classes,<method>...`. The description
    /// columns may be empty; summary rows are ignored and recomputed.
    pub fn from_csv(text: &str) -> Result<Self> {
        let raw = crate::dataset::read_raw_csv(text.as_bytes())?;
        let desc = ["samples", "dimensions", "classes"];
        let n_desc = raw.header[1..]
            .iter()
            .take_while(|h| desc.contains(&h.as_str()))
            .count();
        let methods: Vec<String> = raw.header[1 + n_desc..].to_vec();
        if methods.is_empty() {
            return Err(LceError::Table("no method columns".into()));
        }
        let mut datasets = Vec::new();
        let mut accuracy = Vec::new();
        for (line, rec) in raw.records {
            if rec[0] == AVERAGE_RANK || rec[0] == WINS_TIES {
                continue;
            }
            let field = |name: &str| -> Result<Option<usize>> {
                match raw.header[1..1 + n_desc].iter().position(|h| h == name) {
                    Some(i) if !rec[1 + i].is_empty() => rec[1 + i]
                        .parse()
                        .map(Some)
                        .map_err(|_| LceError::Table(format!("line {line}: bad `{name}`"))),
                    _ => Ok(None),
                }
            };
            datasets.push(DatasetInfo {
                name: rec[0].clone(),
                samples: field("samples")?,
                dimensions: field("dimensions")?,
                classes: field("classes")?,
            });
            accuracy.push(
                rec[1 + n_desc..]
                    .iter()
                    .map(|v| {
                        v.trim().parse::<f64>().map_err(|_| {
                            LceError::Table(format!("line {line}: bad accuracy `{v}`"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        let reference = vec![BTreeMap::new(); datasets.len()];
        BenchReport::new(methods, datasets, accuracy, reference)
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!(
            "dataset,samples,dimensions,classes,{}\n",
            self.methods.join(",")
        );
        let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        for (d, row) in self.datasets.iter().zip(&self.accuracy) {
            let accs: Vec<String> = row.iter().map(|a| format!("{a:.1}")).collect();
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                d.name,
                opt(d.samples),
                opt(d.dimensions),
                opt(d.classes),
                accs.join(",")
            );
        }
        let ranks: Vec<String> = self
            .average_rank
            .iter()
            .map(|r| format!("{r:.1}"))
            .collect();
        let wins: Vec<String> = self.wins_ties.iter().map(ToString::to_string).collect();
        let _ = writeln!(s, "{AVERAGE_RANK},,,,{}", ranks.join(","));
        let _ = writeln!(s, "{WINS_TIES},,,,{}", wins.join(","));
        s
    }

    /// Aligned text table with summary rows.
    pub fn to_text(&self) -> String {
        let mut header = vec![
            "Dataset".to_string(),
            "Samples".into(),
            "Dims".into(),
            "Classes".into(),
        ];
        header.extend(self.methods.iter().cloned());
        let opt = |v: Option<usize>| v.map_or("-".to_string(), |x| x.to_string());
        let mut rows: Vec<Vec<String>> = self
            .datasets
            .iter()
            .zip(&self.accuracy)
            .map(|(d, acc)| {
                let mut r = vec![
                    d.name.clone(),
                    opt(d.samples),
                    opt(d.dimensions),
                    opt(d.classes),
                ];
                r.extend(acc.iter().map(|a| format!("{a:.1}")));
                r
            })
            .collect();
        let dash = || "-".to_string();
        let mut rank_row = vec![AVERAGE_RANK.to_string(), dash(), dash(), dash()];
        rank_row.extend(self.average_rank.iter().map(|r| format!("{r:.1}")));
        let mut wins_row = vec![WINS_TIES.to_string(), dash(), dash(), dash()];
        wins_row.extend(self.wins_ties.iter().map(ToString::to_string));

        let widths: Vec<usize> = (0..header.len())
            .map(|c| {
                std::iter::once(&header)
                    .chain(&rows)
                    .chain([&rank_row, &wins_row])
                    .map(|r| r[c].len())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let render = |r: &[String]| -> String {
            let cells: Vec<String> = r
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, w))| {
                    if i == 0 {
                        format!("{c:<w$}")
                    } else {
                        format!("{c:>w$}")
                    }
                })
                .collect();
            cells.join("  ").trim_end().to_string()
        };
        let rule = "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1));
        let mut out = String::new();
        let _ = writeln!(out, "{}", render(&header));
        let _ = writeln!(out, "{rule}");
        for r in rows.drain(..) {
            let _ = writeln!(out, "{}", render(&r));
        }
        let _ = writeln!(out, "{rule}");
        let _ = writeln!(out, "{}", render(&rank_row));
        let _ = writeln!(out, "{}", render(&wins_row));
        for (d, reference) in self.datasets.iter().zip(&self.reference) {
            if !reference.is_empty() {
                let parts: Vec<String> = reference
                    .iter()
                    .map(|(k, v)| format!("{k} {v:.1}"))
                    .collect();
                let _ = writeln!(out, "published {}: {}", d.name, parts.join(", "));
            }
        }
        out
    }
}

const AVERAGE_RANK: &str = "Average Rank";
const WINS_TIES: &str = "Wins/Ties";

/// Result of one (dataset, method) cell.
#[derive(Clone, Debug)]
pub struct CellResult {
    pub best_point: GridPoint,
    pub cv_score: f64,
    pub test_accuracy: f64,
}

/// Runs the grid-search protocol for one method on a train/test pair and
/// returns the test accuracy in percent (unrounded).
pub fn evaluate_method<F: Float>(
    method: Method,
    train: &Dataset<F>,
    test: &Dataset<F>,
    grid: &ParamGrid,
    folds: usize,
    seed: u64,
    base: &LceConfig<F>,
) -> Result<CellResult> {
    let tuned = grid_search_cv(train, grid, folds, seed, |tr, te, point| {
        fit_method(method, tr, point, base)?.score(te)
    })?;
    let model = fit_method(method, train, &tuned.best, base)?;
    let frac = model.score(test)?;
    Ok(CellResult {
        cv_score: tuned.candidates[tuned.best_index.unwrap_or(0)]
            .mean_score
            .to_f64_lossy(),
        best_point: tuned.best,
        test_accuracy: 100.0 * frac.to_f64_lossy(),
    })
}

/// Runs every manifest dataset through every method in `methods`.
///
/// Accuracies are rounded to one decimal before ranking, matching what the
/// report shows. `progress` receives one line per finished cell.
pub fn run_benchmark<F: Float>(
    manifest: &Manifest,
    methods: &[Method],
    base: &LceConfig<F>,
    mut progress: impl FnMut(&str),
) -> Result<BenchReport> {
    if methods.is_empty() {
        return Err(LceError::invalid("no benchmark methods selected"));
    }
    let mut datasets = Vec::new();
    let mut accuracy = Vec::new();
    let mut reference = Vec::new();
    for entry in &manifest.datasets {
        let task: Task = entry.task.parse()?;
        let ds: Dataset<F> = load_csv(
            manifest.resolve(&entry.path),
            &entry.label,
            task,
            &CsvOptions::default(),
        )?;
        let grid = entry.grid.to_grid()?;
        let (train, test) = train_test_split(&ds, manifest.test_fraction, manifest.seed, true)?;
        let mut row = Vec::with_capacity(methods.len());
        for &method in methods {
            let cell = evaluate_method(
                method,
                &train,
                &test,
                &grid,
                manifest.folds,
                manifest.seed,
                base,
            )?;
            progress(&format!(
                "{} / {}: best {} (cv {:.4}), test accuracy {:.1}%",
                entry.name, method, cell.best_point, cell.cv_score, cell.test_accuracy
            ));
            row.push(round1(cell.test_accuracy));
        }
        datasets.push(DatasetInfo {
            name: entry.name.clone(),
            samples: Some(ds.n_rows()),
            dimensions: Some(ds.width()),
            classes: ds.n_classes(),
        });
        accuracy.push(row);
        reference.push(entry.reference.clone());
    }
    BenchReport::new(
        methods.iter().map(|m| m.name().to_string()).collect(),
        datasets,
        accuracy,
        reference,
    )
}
