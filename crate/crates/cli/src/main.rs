use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use arf_core::cost::{calibrate_defaults, estimate, CostParams};
use arf_core::engine::{adaptive_infer, qwyc_infer, qwyc_order_trees};
use arf_core::ingest::{ingest_csv, write_csv, CsvOptions, Delimiter, LabelColumn};
use arf_core::policy::{PolicyConfig, PolicyKind};
use arf_core::quantize::{quantize_forest, quantize_input, QuantizedForest};
use arf_core::report::{write_drop_table, write_points, write_reduced, Format};
use arf_core::sweep::{evaluate_policy, run_sweep, SweepSpec, ThresholdGrid};
use arf_core::{export_c, train_forest, train_test_split, Dataset, Forest, TrainConfig};

/// Random forests with early-stopping inference for microcontrollers.
#[derive(Parser)]
#[command(name = "arf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a float forest and write it as JSON.
    Train(TrainArgs),
    /// Quantize a float forest using a calibration CSV.
    Quantize(QuantizeArgs),
    /// Evaluate one policy on a test CSV.
    Eval(EvalArgs),
    /// Sweep stopping thresholds and report accuracy vs cost.
    Sweep(SweepArgs),
    /// Emit a quantized forest as C source.
    ExportC(ExportArgs),
    /// Stratified train/test split of a CSV.
    Split(SplitArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DelimiterArg {
    Auto,
    Comma,
    Whitespace,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    AggSm,
    AggMax,
    LastSm,
    Qwyc,
}

impl From<PolicyArg> for PolicyKind {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::AggSm => PolicyKind::AggSm,
            PolicyArg::AggMax => PolicyKind::AggMax,
            PolicyArg::LastSm => PolicyKind::LastSm,
            PolicyArg::Qwyc => PolicyKind::Qwyc,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Table,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
            FormatArg::Table => Format::Table,
        }
    }
}

#[derive(Args, Clone)]
struct CsvArgs {
    /// Label column: `first`, `last`, a zero-based index or a header name.
    #[arg(long, default_value = "last")]
    label_col: String,
    /// The file has no header row.
    #[arg(long)]
    no_header: bool,
    #[arg(long, value_enum, default_value = "auto")]
    delimiter: DelimiterArg,
    /// Binary task: this label is class 0, every other label class 1.
    #[arg(long)]
    binarize_against: Option<String>,
}

impl CsvArgs {
    fn options(&self, class_names: Option<&[String]>) -> Result<CsvOptions> {
        Ok(CsvOptions {
            label_column: self.label_col.parse::<LabelColumn>()?,
            has_header: !self.no_header,
            delimiter: match self.delimiter {
                DelimiterArg::Auto => Delimiter::Auto,
                DelimiterArg::Comma => Delimiter::Comma,
                DelimiterArg::Whitespace => Delimiter::Whitespace,
            },
            binarize_against: self.binarize_against.clone(),
            class_names: if self.binarize_against.is_some() {
                None
            } else {
                class_names.map(<[String]>::to_vec)
            },
        })
    }

    fn load(&self, path: &Path, class_names: Option<&[String]>) -> Result<Dataset> {
        let data = ingest_csv(path, &self.options(class_names)?)
            .with_context(|| format!("reading {}", path.display()))?;
        if let (Some(want), Some(got)) = (class_names, data.class_names()) {
            if want != got {
                bail!(
                    "{}: classes {got:?} do not match the model's {want:?}",
                    path.display()
                );
            }
        }
        Ok(data)
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Training CSV.
    #[arg(long)]
    data: PathBuf,
    /// Output forest JSON.
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 40)]
    trees: usize,
    #[arg(long, default_value_t = 3)]
    depth: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Features tried per split; defaults to floor(sqrt(F)).
    #[arg(long)]
    features_per_split: Option<usize>,
    #[arg(long, default_value_t = 1)]
    min_samples_leaf: usize,
    /// Grow every tree on the full training set.
    #[arg(long)]
    no_bootstrap: bool,
    #[command(flatten)]
    csv: CsvArgs,
}

#[derive(Args)]
struct QuantizeArgs {
    /// Float forest JSON.
    #[arg(long)]
    forest: PathBuf,
    /// Calibration CSV, usually the training set.
    #[arg(long)]
    calibration: PathBuf,
    /// Output quantized forest JSON.
    #[arg(long, short)]
    out: PathBuf,
    #[command(flatten)]
    csv: CsvArgs,
}

#[derive(Args)]
struct ModelArgs {
    /// Quantized forest JSON, or a float forest JSON together with
    /// `--calibration`.
    #[arg(long)]
    model: PathBuf,
    /// Calibration CSV: quantizes float forests and orders trees for qwyc.
    #[arg(long)]
    calibration: Option<PathBuf>,
    #[arg(long)]
    cost_config: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Test CSV.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "agg-sm")]
    policy: PolicyArg,
    /// Stopping threshold for agg-sm / agg-max / last-sm; default runs every tree.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    eps_minus: f64,
    #[arg(long, default_value_t = 1.0)]
    eps_plus: f64,
    #[arg(long, default_value_t = 1)]
    batch: usize,
    /// Write per-input predictions and traces as CSV.
    #[arg(long)]
    predictions: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    format: FormatArg,
    #[command(flatten)]
    csv: CsvArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Test CSV.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "agg-sm")]
    policy: PolicyArg,
    /// Explicit comma-separated alpha grid.
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<f64>,
    /// Number of evenly spaced alphas in [0, N] when `--alpha` is absent.
    #[arg(long, default_value_t = 64)]
    grid_points: usize,
    /// Explicit eps_minus values for qwyc (crossed with `--eps-plus`).
    #[arg(long, value_delimiter = ',')]
    eps_minus: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    eps_plus: Vec<f64>,
    /// Comma-separated batch sizes.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    batch: Vec<usize>,
    /// Comma-separated accuracy drops relative to the full forest.
    #[arg(long, value_delimiter = ',', default_value = "0,0.005")]
    drop_targets: Vec<f64>,
    /// Rank drop targets by macro-averaged accuracy.
    #[arg(long)]
    macro_acc: bool,
    /// Report only Pareto-optimal points.
    #[arg(long)]
    pareto_only: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Points output; stdout if absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Accuracy-drop table output.
    #[arg(long)]
    drops_out: Option<PathBuf>,
    /// Static prefix-forest curve output.
    #[arg(long)]
    reduced_out: Option<PathBuf>,
    #[command(flatten)]
    csv: CsvArgs,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Symbol prefix.
    #[arg(long, default_value = "rf")]
    prefix: String,
    /// Output file; stdout if absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[command(flatten)]
    csv: CsvArgs,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    train_out: PathBuf,
    #[arg(long)]
    test_out: PathBuf,
    #[command(flatten)]
    csv: CsvArgs,
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_params(path: Option<&Path>) -> Result<CostParams> {
    match path {
        Some(p) => CostParams::load(p).with_context(|| format!("reading {}", p.display())),
        None => Ok(calibrate_defaults()),
    }
}

struct Loaded {
    qf: QuantizedForest,
    calibration: Option<Dataset>,
}

fn load_model(args: &ModelArgs, csv: &CsvArgs) -> Result<Loaded> {
    let text = std::fs::read_to_string(&args.model)
        .with_context(|| format!("reading {}", args.model.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", args.model.display()))?;
    let is_quantized = value.get("nodes").is_some();
    if is_quantized {
        let qf = QuantizedForest::from_json(&text)
            .with_context(|| format!("loading {}", args.model.display()))?;
        let calibration = match &args.calibration {
            Some(p) => Some(csv.load(p, qf.class_names())?),
            None => None,
        };
        return Ok(Loaded { qf, calibration });
    }
    let forest =
        Forest::from_json(&text).with_context(|| format!("loading {}", args.model.display()))?;
    let Some(cal_path) = &args.calibration else {
        bail!(
            "{} is a float forest; pass --calibration to quantize it",
            args.model.display()
        );
    };
    let cal = csv.load(cal_path, forest.class_names.as_deref())?;
    let qf = quantize_forest(&forest, &cal)?;
    Ok(Loaded {
        qf,
        calibration: Some(cal),
    })
}

fn report_mapping(data: &Dataset) {
    if let Some(names) = data.class_names() {
        let counts = data.class_counts();
        for (i, name) in names.iter().enumerate() {
            eprintln!("class {i}: {name} ({} samples)", counts[i]);
        }
    }
}

fn train(a: &TrainArgs) -> Result<()> {
    let data = a.csv.load(&a.data, None)?;
    eprintln!(
        "loaded {} samples, {} features, {} classes",
        data.len(),
        data.n_features(),
        data.num_classes()
    );
    report_mapping(&data);
    let mut cfg = TrainConfig::new(a.trees, a.depth)
        .with_seed(a.seed)
        .with_bootstrap(!a.no_bootstrap)
        .with_min_samples_leaf(a.min_samples_leaf);
    if let Some(k) = a.features_per_split {
        cfg = cfg.with_features_per_split(k);
    }
    let forest = train_forest(&data, &cfg)?;
    write_text(&a.out, &forest.to_json()?)?;
    eprintln!(
        "wrote {} trees ({} nodes) to {}",
        forest.num_trees(),
        forest.node_count(),
        a.out.display()
    );
    Ok(())
}

fn quantize(a: &QuantizeArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.forest)
        .with_context(|| format!("reading {}", a.forest.display()))?;
    let forest =
        Forest::from_json(&text).with_context(|| format!("loading {}", a.forest.display()))?;
    let cal = a.csv.load(&a.calibration, forest.class_names.as_deref())?;
    let qf = quantize_forest(&forest, &cal)?;
    let check = arf_core::comparison_consistency_check(&forest, &qf, &cal)?;
    write_text(&a.out, &qf.to_json()?)?;
    eprintln!(
        "wrote {} nodes, {} leaves to {}; float/quantized disagreement on calibration set: {}/{}",
        qf.nodes().len(),
        qf.num_leaves(),
        a.out.display(),
        check.disagreements,
        check.samples
    );
    Ok(())
}

fn eval(a: &EvalArgs) -> Result<()> {
    let Loaded { qf, calibration } = load_model(&a.model, &a.csv)?;
    let params = load_params(a.model.cost_config.as_deref())?;
    let test = a.csv.load(&a.data, qf.class_names())?;
    let kind = PolicyKind::from(a.policy);
    let policy = match kind {
        PolicyKind::Qwyc => PolicyConfig::qwyc(a.eps_minus, a.eps_plus),
        PolicyKind::LastSm => PolicyConfig::last_sm(a.alpha.unwrap_or(f64::INFINITY)),
        _ => PolicyConfig {
            kind,
            ..PolicyConfig::agg_sm(a.alpha.unwrap_or(f64::INFINITY), a.batch)
        },
    };
    if let Some(path) = &a.predictions {
        write_predictions(&qf, &test, calibration.as_ref(), &policy, &params, path)?;
    }
    let point = evaluate_policy(&qf, &test, calibration.as_ref(), &policy, &params)?;
    let mut out = open_out(None)?;
    write_points(&[point], a.format.into(), &mut out)?;
    out.flush()?;
    Ok(())
}

fn write_predictions(
    qf: &QuantizedForest,
    test: &Dataset,
    calibration: Option<&Dataset>,
    policy: &PolicyConfig,
    params: &CostParams,
    path: &Path,
) -> Result<()> {
    policy.validate(qf)?;
    let order = match (policy.kind, calibration) {
        (PolicyKind::Qwyc, Some(cal)) => Some(qwyc_order_trees(
            qf,
            cal,
            policy.eps_minus,
            policy.eps_plus,
        )?),
        (PolicyKind::Qwyc, None) => Some((0..qf.num_trees()).collect()),
        _ => None,
    };
    let mut out = open_out(Some(path))?;
    writeln!(out, "index,label,predicted,trees_executed,nodes_visited,policy_evaluations,stopped_early,cycles,energy_uj")?;
    for (i, x) in test.rows().enumerate() {
        let q = quantize_input(x, qf)?;
        let r = match &order {
            Some(o) => qwyc_infer(qf, o, &q, policy.eps_minus, policy.eps_plus)?,
            None => adaptive_infer(qf, &q, policy)?,
        };
        let c = estimate(&r.trace, qf.num_classes(), params)?;
        writeln!(
            out,
            "{i},{},{},{},{},{},{},{},{}",
            test.label(i),
            r.class,
            r.trace.trees_executed,
            r.trace.nodes_visited,
            r.trace.policy_evaluations,
            r.trace.stopped_early,
            c.cycles,
            c.energy_uj
        )?;
    }
    out.flush()?;
    Ok(())
}

fn sweep(a: &SweepArgs) -> Result<()> {
    let Loaded { qf, calibration } = load_model(&a.model, &a.csv)?;
    let params = load_params(a.model.cost_config.as_deref())?;
    let test = a.csv.load(&a.data, qf.class_names())?;
    let mut spec = SweepSpec::new(a.policy.into());
    spec.thresholds = if a.alpha.is_empty() {
        ThresholdGrid::Linspace(a.grid_points)
    } else {
        ThresholdGrid::Explicit(a.alpha.clone())
    };
    match (a.eps_minus.is_empty(), a.eps_plus.is_empty()) {
        (true, true) => {}
        (false, false) => {
            spec.eps_grid = a
                .eps_minus
                .iter()
                .flat_map(|&lo| a.eps_plus.iter().map(move |&hi| (lo, hi)))
                .collect();
        }
        _ => bail!("--eps-minus and --eps-plus must be given together"),
    }
    spec.batches = a.batch.clone();
    spec.drop_targets = a.drop_targets.clone();
    if a.macro_acc {
        spec.metric = arf_core::sweep::AccuracyMetric::MacroAccuracy;
    }
    if spec.policy == PolicyKind::Qwyc && calibration.is_none() {
        eprintln!("no --calibration given; qwyc keeps the training tree order");
    }
    let result = run_sweep(&qf, &test, calibration.as_ref(), &spec, &params)?;
    eprintln!(
        "full forest: accuracy {:.4}, macro accuracy {:.4}, {} trees",
        result.baseline.accuracy, result.baseline.macro_avg_accuracy, result.baseline.trees
    );
    let format: Format = a.format.into();
    let points = if a.pareto_only {
        result.pareto_points()
    } else {
        result.points.clone()
    };
    let mut out = open_out(a.out.as_deref())?;
    write_points(&points, format, &mut out)?;
    out.flush()?;
    match &a.drops_out {
        Some(p) => write_drop_table(&result.drop_table, format, open_out(Some(p))?)?,
        None => {
            let mut err = io::stderr().lock();
            write_drop_table(&result.drop_table, Format::Table, &mut err)?;
        }
    }
    if let Some(p) = &a.reduced_out {
        write_reduced(&result.reduced, format, open_out(Some(p))?)?;
    }
    Ok(())
}

fn export(a: &ExportArgs) -> Result<()> {
    let Loaded { qf, .. } = load_model(&a.model, &a.csv)?;
    let c = export_c(&qf, &a.prefix)?;
    let mut out = open_out(a.out.as_deref())?;
    out.write_all(c.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn split(a: &SplitArgs) -> Result<()> {
    let data = a.csv.load(&a.data, None)?;
    report_mapping(&data);
    let (train, test) = train_test_split(&data, a.test_fraction, a.seed)?;
    write_csv(&train, open_out(Some(&a.train_out))?)?;
    write_csv(&test, open_out(Some(&a.test_out))?)?;
    eprintln!(
        "train: {} samples, test: {} samples",
        train.len(),
        test.len()
    );
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Train(a) => train(&a),
        Command::Quantize(a) => quantize(&a),
        Command::Eval(a) => eval(&a),
        Command::Sweep(a) => sweep(&a),
        Command::ExportC(a) => export(&a),
        Command::Split(a) => split(&a),
    }
}
