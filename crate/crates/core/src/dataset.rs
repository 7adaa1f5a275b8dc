//! Tabular data model, CSV ingestion and the resampling primitives used by
//! training, tuning and benchmarking.
//!
//! Missing values are a first-class cell state: a [`Cell`] is `None` when the
//! value is absent and `Some(x)` otherwise. No sentinel reals are used.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LceError, Result};
use crate::num::Float;
use crate::seed;

/// A feature cell: `None` is missing.
pub type Cell<F> = Option<F>;

/// A borrowed row of cells; its width is validated by whoever consumes it.
pub type RowView<'a, F> = &'a [Cell<F>];

/// Learning task.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classification,
    Regression,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Classification => "classification",
            Task::Regression => "regression",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = LceError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classification" => Ok(Task::Classification),
            "regression" => Ok(Task::Regression),
            other => Err(LceError::invalid(format!("unknown task `{other}`"))),
        }
    }
}

/// Row-major matrix of cells with a fixed width.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix<F> {
    width: usize,
    cells: Vec<Cell<F>>,
}

impl<F: Float> FeatureMatrix<F> {
    pub fn new(width: usize) -> Self {
        FeatureMatrix {
            width,
            cells: Vec::new(),
        }
    }

    pub fn with_capacity(width: usize, rows: usize) -> Self {
        FeatureMatrix {
            width,
            cells: Vec::with_capacity(width * rows),
        }
    }

    /// Builds a matrix from row slices; every row must have `width` cells.
    pub fn from_rows<R: AsRef<[Cell<F>]>>(width: usize, rows: &[R]) -> Result<Self> {
        let mut m = Self::with_capacity(width, rows.len());
        for r in rows {
            m.push_row(r.as_ref())?;
        }
        Ok(m)
    }

    /// Builds a matrix without missing cells.
    pub fn from_dense<R: AsRef<[F]>>(width: usize, rows: &[R]) -> Result<Self> {
        let mut m = Self::with_capacity(width, rows.len());
        for r in rows {
            let cells: Vec<Cell<F>> = r.as_ref().iter().map(|&v| Some(v)).collect();
            m.push_row(&cells)?;
        }
        Ok(m)
    }

    pub fn push_row(&mut self, row: &[Cell<F>]) -> Result<()> {
        if row.len() != self.width {
            return Err(LceError::WidthMismatch {
                expected: self.width,
                found: row.len(),
            });
        }
        self.cells.extend_from_slice(row);
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn n_rows(&self) -> usize {
        self.cells.len().checked_div(self.width).unwrap_or(0)
    }

    pub fn row(&self, i: usize) -> RowView<'_, F> {
        &self.cells[i * self.width..(i + 1) * self.width]
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Cell<F> {
        self.cells[row * self.width + col]
    }

    pub fn rows(&self) -> impl Iterator<Item = RowView<'_, F>> {
        self.cells.chunks_exact(self.width.max(1))
    }

    /// Rows at `indices`, in that order (duplicates allowed).
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut m = Self::with_capacity(self.width, indices.len());
        for &i in indices {
            m.cells.extend_from_slice(self.row(i));
        }
        m
    }

    /// Fails if any present cell is not finite.
    pub fn check_finite(&self) -> Result<()> {
        if self.cells.iter().flatten().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(LceError::NonFinite("feature matrix"))
        }
    }
}

/// Per-row supervision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Targets<F> {
    /// Class indices in `[0, n_classes)`. `n_classes` is global to the
    /// original dataset and is never re-derived from a subset.
    Classes {
        labels: Vec<usize>,
        n_classes: usize,
    },
    Values(Vec<F>),
}

impl<F: Float> Targets<F> {
    pub fn len(&self) -> usize {
        match self {
            Targets::Classes { labels, .. } => labels.len(),
            Targets::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn task(&self) -> Task {
        match self {
            Targets::Classes { .. } => Task::Classification,
            Targets::Values(_) => Task::Regression,
        }
    }

    pub fn n_classes(&self) -> Option<usize> {
        match self {
            Targets::Classes { n_classes, .. } => Some(*n_classes),
            Targets::Values(_) => None,
        }
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        match self {
            Targets::Classes { labels, n_classes } => Targets::Classes {
                labels: indices.iter().map(|&i| labels[i]).collect(),
                n_classes: *n_classes,
            },
            Targets::Values(v) => Targets::Values(indices.iter().map(|&i| v[i]).collect()),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Targets::Classes { labels, n_classes } => {
                if let Some(&bad) = labels.iter().find(|&&l| l >= *n_classes) {
                    return Err(LceError::invalid(format!(
                        "class index {bad} out of range for {n_classes} classes"
                    )));
                }
                Ok(())
            }
            Targets::Values(v) => {
                if v.iter().all(|x| x.is_finite()) {
                    Ok(())
                } else {
                    Err(LceError::NonFinite("regression targets"))
                }
            }
        }
    }
}

/// A labelled table. Immutable once built; cheap to share across threads.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<F> {
    features: FeatureMatrix<F>,
    feature_names: Vec<String>,
    label_name: String,
    targets: Targets<F>,
    class_names: Vec<String>,
}

impl<F: Float> Dataset<F> {
    /// Validates and assembles a dataset.
    pub fn new(
        features: FeatureMatrix<F>,
        feature_names: Vec<String>,
        label_name: impl Into<String>,
        targets: Targets<F>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        if feature_names.len() != features.width() {
            return Err(LceError::invalid(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                features.width()
            )));
        }
        if targets.len() != features.n_rows() {
            return Err(LceError::invalid(format!(
                "{} labels for {} rows",
                targets.len(),
                features.n_rows()
            )));
        }
        match &targets {
            Targets::Classes { n_classes, .. } => {
                if *n_classes < 2 {
                    return Err(LceError::TooFewClasses(*n_classes));
                }
                if class_names.len() != *n_classes {
                    return Err(LceError::invalid(format!(
                        "{} class names for {} classes",
                        class_names.len(),
                        n_classes
                    )));
                }
            }
            Targets::Values(_) => {
                if !class_names.is_empty() {
                    return Err(LceError::invalid("regression dataset with class names"));
                }
            }
        }
        targets.validate()?;
        Ok(Dataset {
            features,
            feature_names,
            label_name: label_name.into(),
            targets,
            class_names,
        })
    }

    pub fn features(&self) -> &FeatureMatrix<F> {
        &self.features
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    pub fn targets(&self) -> &Targets<F> {
        &self.targets
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_rows(&self) -> usize {
        self.targets.len()
    }

    pub fn width(&self) -> usize {
        self.features.width()
    }

    pub fn task(&self) -> Task {
        self.targets.task()
    }

    pub fn n_classes(&self) -> Option<usize> {
        self.targets.n_classes()
    }

    pub fn row(&self, i: usize) -> RowView<'_, F> {
        self.features.row(i)
    }

    /// Rows at `indices` with the schema unchanged.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Dataset {
            features: self.features.select(indices),
            feature_names: self.feature_names.clone(),
            label_name: self.label_name.clone(),
            targets: self.targets.select(indices),
            class_names: self.class_names.clone(),
        }
    }

    /// Same rows with some feature cells replaced.
    pub fn with_features(&self, features: FeatureMatrix<F>) -> Result<Self> {
        Dataset::new(
            features,
            self.feature_names.clone(),
            self.label_name.clone(),
            self.targets.clone(),
            self.class_names.clone(),
        )
    }

    /// Writes the dataset as CSV: features in order, label column last,
    /// missing cells as `NA`, reals in shortest round-trip form.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header = self.feature_names.join(",");
        if !header.is_empty() {
            header.push(',');
        }
        header.push_str(&self.label_name);
        writeln!(out, "{header}")?;
        for i in 0..self.n_rows() {
            let mut line = String::new();
            for cell in self.row(i) {
                match cell {
                    Some(v) => line.push_str(&v.to_string()),
                    None => line.push_str("NA"),
                }
                line.push(',');
            }
            match &self.targets {
                Targets::Classes { labels, .. } => line.push_str(&self.class_names[labels[i]]),
                Targets::Values(v) => line.push_str(&v[i].to_string()),
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| LceError::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv(&mut w).map_err(|e| LceError::io(path, e))?;
        w.flush().map_err(|e| LceError::io(path, e))
    }
}

/// CSV ingestion options.
#[derive(Clone, Debug)]
pub struct CsvOptions {
    /// Cells textually equal to one of these (case-sensitive) are missing.
    pub missing_tokens: Vec<String>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            missing_tokens: vec![String::new(), "NA".into(), "NaN".into()],
        }
    }
}

impl CsvOptions {
    fn is_missing(&self, cell: &str) -> bool {
        self.missing_tokens.iter().any(|t| t == cell)
    }
}

/// Parses one numeric cell. Missing tokens and parsed NaN become `None`.
pub(crate) fn parse_cell<F: Float>(
    text: &str,
    opts: &CsvOptions,
    line: u64,
    column: &str,
) -> Result<Cell<F>> {
    if opts.is_missing(text) {
        return Ok(None);
    }
    let non_numeric = || LceError::NonNumericCell {
        line,
        column: column.to_string(),
        value: text.to_string(),
    };
    let v: F = text.trim().parse().map_err(|_| non_numeric())?;
    if v.is_nan() {
        Ok(None)
    } else if v.is_infinite() {
        Err(non_numeric())
    } else {
        Ok(Some(v))
    }
}

/// Header and raw records of a headered, unquoted CSV.
pub(crate) struct RawCsv {
    pub header: Vec<String>,
    /// (line number, cells)
    pub records: Vec<(u64, Vec<String>)>,
}

pub(crate) fn read_raw_csv<R: Read>(reader: R) -> Result<RawCsv> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .quoting(false)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| LceError::Csv {
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(LceError::Csv {
            line: 1,
            message: "missing header row".into(),
        });
    }
    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| LceError::Csv {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(LceError::Csv {
                line,
                message: format!("expected {} cells, found {}", header.len(), rec.len()),
            });
        }
        records.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(RawCsv { header, records })
}

/// Loads a labelled dataset from a CSV file.
pub fn load_csv<F: Float>(
    path: impl AsRef<Path>,
    label_column: &str,
    task: Task,
    opts: &CsvOptions,
) -> Result<Dataset<F>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| LceError::io(path, e))?;
    read_csv(std::io::BufReader::new(file), label_column, task, opts)
}

/// Reads a labelled dataset from any CSV source.
pub fn read_csv<F: Float, R: Read>(
    reader: R,
    label_column: &str,
    task: Task,
    opts: &CsvOptions,
) -> Result<Dataset<F>> {
    let raw = read_raw_csv(reader)?;
    let label_idx = raw
        .header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| LceError::MissingLabelColumn(label_column.to_string()))?;
    let feature_cols: Vec<usize> = (0..raw.header.len()).filter(|&c| c != label_idx).collect();
    let feature_names: Vec<String> = feature_cols
        .iter()
        .map(|&c| raw.header[c].clone())
        .collect();

    let mut features = FeatureMatrix::with_capacity(feature_cols.len(), raw.records.len());
    let mut class_index: HashMap<String, usize> = HashMap::new();
    let mut class_names = Vec::new();
    let mut labels = Vec::new();
    let mut values = Vec::new();
    let mut row = Vec::with_capacity(feature_cols.len());

    for (line, rec) in &raw.records {
        row.clear();
        for &c in &feature_cols {
            row.push(parse_cell::<F>(&rec[c], opts, *line, &raw.header[c])?);
        }
        features.push_row(&row)?;

        let label = &rec[label_idx];
        if opts.is_missing(label) {
            return Err(LceError::MissingLabel { line: *line });
        }
        match task {
            Task::Classification => {
                let next = class_names.len();
                let idx = *class_index.entry(label.clone()).or_insert_with(|| {
                    class_names.push(label.clone());
                    next
                });
                labels.push(idx);
            }
            Task::Regression => match parse_cell::<F>(label, opts, *line, label_column)? {
                Some(v) => values.push(v),
                None => return Err(LceError::MissingLabel { line: *line }),
            },
        }
    }

    let targets = match task {
        Task::Classification => {
            if class_names.len() < 2 {
                return Err(LceError::TooFewClasses(class_names.len()));
            }
            Targets::Classes {
                labels,
                n_classes: class_names.len(),
            }
        }
        Task::Regression => {
            if values.is_empty() {
                return Err(LceError::EmptyDataset);
            }
            Targets::Values(values)
        }
    };
    Dataset::new(features, feature_names, label_column, targets, class_names)
}

/// Rows read against a fitted model's feature schema.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemaRows<F> {
    /// Columns in schema order.
    pub features: FeatureMatrix<F>,
    /// Raw label text, when the label column was present.
    pub labels: Option<Vec<String>>,
}

/// Reads a CSV whose columns must be exactly `feature_names` (in any order)
/// plus, optionally, `label_column`.
pub fn read_for_schema<F: Float, R: Read>(
    reader: R,
    feature_names: &[String],
    label_column: Option<&str>,
    opts: &CsvOptions,
) -> Result<SchemaRows<F>> {
    let raw = read_raw_csv(reader)?;
    let label_idx = label_column.and_then(|l| raw.header.iter().position(|h| h == l));
    for (c, h) in raw.header.iter().enumerate() {
        if Some(c) != label_idx && !feature_names.contains(h) {
            return Err(LceError::ColumnMismatch(format!("unexpected column `{h}`")));
        }
        if raw.header[..c].contains(h) {
            return Err(LceError::ColumnMismatch(format!("duplicate column `{h}`")));
        }
    }
    let cols = feature_names
        .iter()
        .map(|name| {
            raw.header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| LceError::ColumnMismatch(format!("missing column `{name}`")))
        })
        .collect::<Result<Vec<usize>>>()?;
    if raw.records.is_empty() {
        return Err(LceError::EmptyDataset);
    }
    let mut features = FeatureMatrix::with_capacity(cols.len(), raw.records.len());
    let mut labels = label_idx.map(|_| Vec::with_capacity(raw.records.len()));
    let mut row = Vec::with_capacity(cols.len());
    for (line, rec) in &raw.records {
        row.clear();
        for &c in &cols {
            row.push(parse_cell::<F>(&rec[c], opts, *line, &raw.header[c])?);
        }
        features.push_row(&row)?;
        if let (Some(l), Some(out)) = (label_idx, labels.as_mut()) {
            if opts.is_missing(&rec[l]) {
                return Err(LceError::MissingLabel { line: *line });
            }
            out.push(rec[l].clone());
        }
    }
    Ok(SchemaRows { features, labels })
}

fn check_fraction(fraction: f64) -> Result<()> {
    if fraction > 0.0 && fraction < 1.0 {
        Ok(())
    } else {
        Err(LceError::invalid(format!(
            "test fraction {fraction} outside (0, 1)"
        )))
    }
}

/// `ceil(n * fraction)`, tolerant to representation error in the product.
fn test_size(n: usize, fraction: f64) -> usize {
    ((n as f64) * fraction - 1e-9).ceil().max(0.0) as usize
}

fn class_groups(labels: &[usize], n_classes: usize) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        groups[l].push(i);
    }
    groups
}

/// Index partition behind [`train_test_split`]: `(train, test)`, each sorted.
///
/// The test side has `ceil(n * fraction)` rows. In stratified mode every
/// class first gets `floor(n_c * fraction)` test rows and the remaining slots
/// go to the classes with the largest fractional remainders (lowest class
/// index on ties), so each class contributes the floor or ceil of its share.
pub fn train_test_indices<F: Float>(
    targets: &Targets<F>,
    fraction: f64,
    seed: u64,
    stratified: bool,
) -> Result<(Vec<usize>, Vec<usize>)> {
    check_fraction(fraction)?;
    let n = targets.len();
    let n_test = test_size(n, fraction);
    if n_test == 0 || n_test >= n {
        return Err(LceError::invalid(format!(
            "splitting {n} rows with test fraction {fraction} leaves an empty side"
        )));
    }
    let mut rng = seed::rng(seed);
    let mut test = Vec::with_capacity(n_test);
    if stratified {
        let Targets::Classes { labels, n_classes } = targets else {
            return Err(LceError::invalid(
                "stratified split requires classification",
            ));
        };
        let mut groups = class_groups(labels, *n_classes);
        if let Some(empty) = groups.iter().position(Vec::is_empty) {
            return Err(LceError::invalid(format!(
                "stratified split: class {empty} has no rows"
            )));
        }
        let shares: Vec<f64> = groups.iter().map(|g| g.len() as f64 * fraction).collect();
        let mut quota: Vec<usize> = shares.iter().map(|s| (s + 1e-9).floor() as usize).collect();
        let assigned: usize = quota.iter().sum();
        let mut order: Vec<usize> = (0..groups.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = shares[a] - quota[a] as f64;
            let rb = shares[b] - quota[b] as f64;
            rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
        });
        for &c in order.iter().take(n_test.saturating_sub(assigned)) {
            quota[c] += 1;
        }
        for (group, q) in groups.iter_mut().zip(&quota) {
            group.shuffle(&mut rng);
            test.extend_from_slice(&group[..*q]);
        }
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        test.extend_from_slice(&all[..n_test]);
    }
    test.sort_unstable();
    let mut in_test = vec![false; n];
    for &i in &test {
        in_test[i] = true;
    }
    let train = (0..n).filter(|&i| !in_test[i]).collect();
    Ok((train, test))
}

/// Deterministic train/test split, returned as `(train, test)`.
pub fn train_test_split<F: Float>(
    ds: &Dataset<F>,
    test_fraction: f64,
    seed: u64,
    stratified: bool,
) -> Result<(Dataset<F>, Dataset<F>)> {
    let (train, test) = train_test_indices(ds.targets(), test_fraction, seed, stratified)?;
    Ok((ds.subset(&train), ds.subset(&test)))
}

/// `n` indices drawn uniformly with replacement from `[0, n)`.
pub fn bootstrap_indices(n: usize, seed: u64) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(LceError::EmptyDataset);
    }
    let mut rng = seed::rng(seed);
    Ok((0..n).map(|_| rng.gen_range(0..n)).collect())
}

/// Bootstrap replicate of `ds` and the indices it was drawn from.
pub fn bootstrap_sample<F: Float>(ds: &Dataset<F>, seed: u64) -> Result<(Dataset<F>, Vec<usize>)> {
    let idx = bootstrap_indices(ds.n_rows(), seed)?;
    Ok((ds.subset(&idx), idx))
}

/// Splits `[0, rows)` into `k` disjoint folds whose sizes differ by at most 1.
///
/// Stratified mode groups rows by class, shuffles each group, concatenates
/// the groups in class order and deals positions round-robin, so every class
/// is spread as evenly as its count allows.
pub fn kfold_indices<F: Float>(
    targets: &Targets<F>,
    k: usize,
    seed: u64,
    stratified: bool,
) -> Result<Vec<Vec<usize>>> {
    let n = targets.len();
    if k < 2 || k > n {
        return Err(LceError::invalid(format!(
            "k = {k} folds invalid for {n} rows"
        )));
    }
    let mut rng = seed::rng(seed);
    let order: Vec<usize> = if stratified {
        let Targets::Classes { labels, n_classes } = targets else {
            return Err(LceError::invalid("stratified folds require classification"));
        };
        let mut groups = class_groups(labels, *n_classes);
        groups.iter_mut().for_each(|g| g.shuffle(&mut rng));
        groups.concat()
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        all
    };
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    for (pos, &i) in order.iter().enumerate() {
        folds[pos % k].push(i);
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}
