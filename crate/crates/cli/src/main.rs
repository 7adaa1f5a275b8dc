use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use lce::eval::{format_accuracy, run_benchmark, BenchReport, Manifest, Method};
use lce::{
    fit, grid_search_lce, load_csv, model_io, read_for_schema, CascadeConfig, CsvOptions,
    LceConfig64, LceModel64, Parallelism, ParamGrid, Prediction, SchemaRows, Task,
};

#[derive(Parser)]
#[command(name = "lce", version, about = "Local cascade ensemble learner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model on a labelled CSV and save it.
    Train(TrainArgs),
    /// Write predictions for a feature CSV.
    Predict(PredictArgs),
    /// Print the accuracy of a model on a labelled CSV.
    Evaluate(EvaluateArgs),
    /// Run the benchmark protocol over a manifest of datasets.
    Bench(BenchArgs),
}

#[derive(Args)]
struct ThreadArgs {
    /// Worker threads (default: all cores).
    #[arg(long, env = "LCE_THREADS")]
    parallelism: Option<usize>,
}

impl ThreadArgs {
    fn resolve(&self) -> Result<Parallelism> {
        Ok(match self.parallelism {
            Some(n) => Parallelism::threads(n)?,
            None => Parallelism::AllCores,
        })
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    label: String,
    #[arg(long, default_value = "classification")]
    task: Task,
    #[arg(long, default_value_t = 10)]
    n_estimators: usize,
    /// Depth of the cascade trees.
    #[arg(long, default_value_t = 2)]
    max_depth: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Base-learner candidates tried per node.
    #[arg(long, default_value_t = 3)]
    tuning_budget: usize,
    /// Grid searched by cross-validation, e.g. "n_estimators=5,10;max_depth=1,2".
    #[arg(long)]
    grid: Option<ParamGrid>,
    #[arg(long, default_value_t = 3, requires = "grid")]
    folds: usize,
    #[command(flatten)]
    threads: ThreadArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Label column to skip if present.
    #[arg(long)]
    label: Option<String>,
    /// Add one probability column per class.
    #[arg(long)]
    proba: bool,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    label: String,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, required_unless_present = "from_table")]
    manifest: Option<PathBuf>,
    /// Comma-separated methods.
    #[arg(long, value_delimiter = ',', default_value = "bagged_trees,gbt,lce")]
    modes: Vec<Method>,
    /// Compute rank statistics from an accuracy CSV instead of training.
    #[arg(long, conflicts_with = "manifest")]
    from_table: Option<PathBuf>,
    /// Write the report as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    threads: ThreadArgs,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn train(args: TrainArgs) -> Result<()> {
    let ds = load_csv::<f64>(&args.data, &args.label, args.task, &CsvOptions::default())?;
    let mut config = LceConfig64 {
        n_estimators: args.n_estimators,
        seed: args.seed,
        parallelism: args.threads.resolve()?,
        cascade: CascadeConfig {
            max_depth: args.max_depth,
            tuning_budget: args.tuning_budget,
            ..CascadeConfig::default()
        },
        ..LceConfig64::default()
    };
    let mut chosen = None;
    if let Some(grid) = &args.grid {
        let result = grid_search_lce(&ds, grid, args.folds, args.seed, &config)?;
        config = lce::tuning::apply_point(&config, &result.best);
        chosen = Some(result.best);
    }
    let model = fit(&ds, &config)?;
    model_io::save(&model, &args.out)?;
    let depth = model.trees().iter().map(|t| t.depth()).max().unwrap_or(0);
    let mut summary = format!(
        "trained {} trees (max depth {depth}) on {} rows",
        model.trees().len(),
        ds.n_rows()
    );
    if let Some(point) = chosen {
        summary.push_str(&format!("; grid choice: {point}"));
    }
    println!("{summary}");
    Ok(())
}

fn read_rows(model: &LceModel64, data: &Path, label: Option<&str>) -> Result<SchemaRows<f64>> {
    let rows = read_for_schema(
        open(data)?,
        model.feature_names(),
        label,
        &CsvOptions::default(),
    )
    .with_context(|| format!("reading {}", data.display()))?;
    Ok(rows)
}

fn predict(args: PredictArgs) -> Result<()> {
    let model: LceModel64 = model_io::load(&args.model)?;
    let rows = read_rows(&model, &args.data, args.label.as_deref())?;
    if args.proba && model.task() != Task::Classification {
        bail!("--proba needs a classification model");
    }
    let mut out = output(args.out.as_deref())?;
    let mut header = vec!["prediction".to_string()];
    if args.proba {
        header.extend(model.class_names().iter().cloned());
    }
    writeln!(out, "{}", header.join(","))?;
    for row in rows.features.rows() {
        let mut line = match model.predict(row)? {
            Prediction::Class(c) => model.class_names()[c].clone(),
            Prediction::Value(v) => v.to_string(),
        };
        if args.proba {
            for p in model.predict_proba(row)? {
                line.push(',');
                line.push_str(&p.to_string());
            }
        }
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let model: LceModel64 = model_io::load(&args.model)?;
    let rows = read_rows(&model, &args.data, Some(&args.label))?;
    let Some(labels) = rows.labels else {
        bail!(
            "label column `{}` not found in {}",
            args.label,
            args.data.display()
        );
    };
    match model.task() {
        Task::Classification => {
            let mut hits = 0usize;
            for (row, label) in rows.features.rows().zip(&labels) {
                if let Prediction::Class(c) = model.predict(row)? {
                    hits += usize::from(model.class_names()[c] == *label);
                }
            }
            println!(
                "{}",
                format_accuracy(100.0 * hits as f64 / labels.len() as f64)
            );
        }
        Task::Regression => {
            let mut sse = 0.0;
            for (row, label) in rows.features.rows().zip(&labels) {
                let target: f64 = label
                    .trim()
                    .parse()
                    .with_context(|| format!("non-numeric target `{label}`"))?;
                sse += (model.predict_real(row)? - target).powi(2);
            }
            println!("MSE: {}", sse / labels.len() as f64);
        }
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let report = if let Some(table) = &args.from_table {
        let text = std::fs::read_to_string(table)
            .with_context(|| format!("cannot read {}", table.display()))?;
        BenchReport::from_csv(&text)?
    } else {
        let path = args.manifest.as_deref().expect("clap enforces --manifest");
        let manifest = Manifest::load(path)?;
        let base = LceConfig64 {
            parallelism: args.threads.resolve()?,
            ..LceConfig64::default()
        };
        run_benchmark(&manifest, &args.modes, &base, |line| eprintln!("{line}"))?
    };
    print!("{}", report.to_text());
    if let Some(out) = &args.out {
        std::fs::write(out, report.to_csv())
            .with_context(|| format!("cannot write {}", out.display()))?;
    }
    Ok(())
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain()
        .filter_map(|c| c.downcast_ref::<io::Error>())
        .any(|io| io.kind() == io::ErrorKind::BrokenPipe)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
