//! `noisyknn` command-line tool.
//!
//! Exit codes: 0 success, 1 a `--check` run found a failing check, 2 usage
//! or parameter error, 3 I/O or malformed input.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use noisyknn::bounds::{self, BoundParams};
use noisyknn::data::{format_float, read_points_csv, LabeledDataset};
use noisyknn::harness::{self, ExperimentConfig, ExperimentResult, KPolicy};
use noisyknn::knn::{KnnRegressor, ModelSummary, RobustKnnModel};
use noisyknn::noise::corrupt_with;
use noisyknn::rng::{rng_from_seed, substream};
use noisyknn::synthetic::{Distribution, DistributionSpec};
use noisyknn::{Error, Metric, NoiseRates};

#[derive(Debug, Parser)]
#[command(name = "noisyknn", version, about = "kNN classification under class-conditional label noise")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    /// Only errors on stderr.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a labelled dataset from a synthetic distribution.
    Generate(GenerateArgs),
    /// Flip the labels of a dataset through a noise channel.
    Corrupt(CorruptArgs),
    /// Fit on a training CSV and label the points of a query CSV.
    FitPredict(FitPredictArgs),
    /// Estimate the two flip rates from a training CSV.
    EstimateNoise(EstimateArgs),
    /// Score the robust, standard and known-rate classifiers.
    Evaluate(EvaluateArgs),
    /// Print the finite-sample bounds for a parameter set.
    Bounds(BoundsArgs),
    /// Run a Monte Carlo experiment.
    Experiment(ExperimentArgs),
    /// Choose k by cross-validation.
    CvK(CvArgs),
}

#[derive(Debug, Args)]
struct SeedArg {
    /// Master seed; falls back to NOISYKNN_SEED, then 0.
    #[arg(long, env = "NOISYKNN_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct DistributionArg {
    /// JSON distribution descriptor; defaults to the three-piece example.
    #[arg(long)]
    distribution: Option<PathBuf>,
    /// Flip rates that shape the three-piece example.
    #[arg(long, num_args = 2, value_names = ["P0", "P1"], default_values_t = [0.1, 0.3])]
    example_rates: Vec<f64>,
}

impl DistributionArg {
    fn spec(&self) -> Result<DistributionSpec, CliError> {
        match &self.distribution {
            Some(path) => Ok(serde_json::from_str(&read_text(path)?).map_err(Error::from)?),
            None => Ok(DistributionSpec::ThreePieceExample { p0: self.example_rates[0], p1: self.example_rates[1] }),
        }
    }
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    distribution: DistributionArg,
    /// Flip probability of true class 0.
    #[arg(long, default_value_t = 0.0)]
    p0: f64,
    /// Flip probability of true class 1.
    #[arg(long, default_value_t = 0.0)]
    p1: f64,
    /// Add a clean_label column.
    #[arg(long)]
    keep_clean: bool,
    #[command(flatten)]
    seed: SeedArg,
    /// Output CSV (stdout when absent).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CorruptArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long)]
    p0: f64,
    #[arg(long)]
    p1: f64,
    #[arg(long)]
    keep_clean: bool,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KPolicyArg {
    Fixed,
    Optimal,
    Cv,
}

#[derive(Debug, Args)]
struct KArgs {
    /// Number of neighbours (fixed policy).
    #[arg(short, long)]
    k: Option<usize>,
    #[arg(long, value_enum)]
    k_policy: Option<KPolicyArg>,
    /// Confidence level for the optimal policy.
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 3.0)]
    omega: f64,
    /// Cross-validation grid (comma separated); geometric from 5 to n/2 when absent.
    #[arg(long, value_delimiter = ',')]
    cv_grid: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    folds: usize,
}

impl KArgs {
    fn resolve(&self, data: &LabeledDataset, seed: u64) -> Result<usize, CliError> {
        let n = data.len();
        let policy = match (self.k_policy, self.k) {
            (Some(p), _) => p,
            (None, Some(_)) => KPolicyArg::Fixed,
            (None, None) => return Err(CliError::Usage("give --k or --k-policy".into())),
        };
        match policy {
            KPolicyArg::Fixed => self.k.ok_or_else(|| CliError::Usage("the fixed policy needs --k".into())),
            KPolicyArg::Optimal => Ok(bounds::optimal_k(n, self.delta, self.lambda, self.omega)?),
            KPolicyArg::Cv => {
                let grid = if self.cv_grid.is_empty() {
                    harness::geometric_grid(5, (n / 2).max(5), 12)
                } else {
                    self.cv_grid.clone()
                };
                let report = harness::cross_validate_k_report(&data.to_sample(), &grid, self.folds, seed)?;
                log::info!("cross-validation errors: {:?}", report.errors);
                Ok(report.k)
            }
        }
    }
}

#[derive(Debug, Args)]
struct FitPredictArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    query: PathBuf,
    #[command(flatten)]
    k: KArgs,
    /// Plain kNN with threshold 1/2.
    #[arg(long, conflicts_with = "known_rates")]
    standard: bool,
    /// Use these flip rates instead of estimating them.
    #[arg(long, num_args = 2, value_names = ["P0", "P1"])]
    known_rates: Option<Vec<f64>>,
    #[command(flatten)]
    seed: SeedArg,
    /// Predictions CSV (stdout when absent).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Model summary JSON (stderr when absent).
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[command(flatten)]
    k: KArgs,
    #[command(flatten)]
    seed: SeedArg,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    train: PathBuf,
    /// Labelled test CSV for empirical error rates.
    #[arg(long)]
    test: Option<PathBuf>,
    #[command(flatten)]
    k: KArgs,
    /// Exact excess risks against this distribution (1-D exact descriptors only).
    #[command(flatten)]
    distribution: DistributionArg,
    /// True flip rates, for the known-rate classifier and the corrupted excess risk.
    #[arg(long, num_args = 2, value_names = ["P0", "P1"], default_values_t = [0.1, 0.3])]
    rates: Vec<f64>,
    #[command(flatten)]
    seed: SeedArg,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    /// BoundParams as JSON; flags override its fields.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    /// Defaults to the optimal k.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    c_alpha: Option<f64>,
    #[arg(long)]
    p0: Option<f64>,
    #[arg(long)]
    p1: Option<f64>,
    /// Ball-measure slack for the tail bounds.
    #[arg(long, default_value_t = 0.2)]
    zeta: f64,
    /// Print JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExperimentKind {
    Ball,
    Pointwise,
    Max,
    Rate,
    Inconsistency,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    kind: ExperimentKind,
    /// ExperimentConfig JSON; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, env = "NOISYKNN_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    /// Worker threads (default: available parallelism); results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Record CSV; the summary is written next to it as .summary.json.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Exit with status 1 when any check fails.
    #[arg(long)]
    check: bool,
}

#[derive(Debug, Args)]
struct CvArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long, value_delimiter = ',')]
    grid: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[command(flatten)]
    seed: SeedArg,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Lib(Error),
    CheckFailed,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Lib(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Lib(e.into())
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Lib(Error::Io(format!("{}: {e}", path.display()))))
}

fn load_dataset(path: &Path) -> Result<LabeledDataset, CliError> {
    LabeledDataset::load(path).map_err(|e| match e {
        Error::Io(m) => CliError::Lib(Error::Io(format!("{}: {m}", path.display()))),
        Error::Parse(m) => CliError::Lib(Error::Parse(format!("{}: {m}", path.display()))),
        other => CliError::Lib(other),
    })
}

fn write_dataset(data: &LabeledDataset, output: &Option<PathBuf>) -> Result<(), CliError> {
    match output {
        Some(path) => data.save(path)?,
        None => data.write_csv(std::io::stdout().lock())?,
    }
    Ok(())
}

fn echo_seed(seed: u64) {
    eprintln!("seed: {seed}");
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn rates_from(values: &[f64]) -> Result<NoiseRates, CliError> {
    Ok(NoiseRates::channel(values[0], values[1])?)
}

fn cmd_generate(args: GenerateArgs) -> Result<(), CliError> {
    let seed = args.seed.seed;
    echo_seed(seed);
    let dist = args.distribution.spec()?.build()?;
    let rates = NoiseRates::channel(args.p0, args.p1)?;
    let mut data = harness::corrupted_sample(&dist, rates, args.n, seed)?;
    if !args.keep_clean {
        data.clean_labels = None;
    }
    write_dataset(&data, &args.output)
}

fn cmd_corrupt(args: CorruptArgs) -> Result<(), CliError> {
    let seed = args.seed.seed;
    echo_seed(seed);
    let rates = NoiseRates::channel(args.p0, args.p1)?;
    let data = load_dataset(&args.input)?;
    let noisy = corrupt_with(&data.labels, rates, &mut rng_from_seed(substream(seed, 1)));
    let mut out = LabeledDataset::new(data.points.clone(), noisy)?;
    if args.keep_clean {
        out = out.with_clean_labels(data.labels)?;
    }
    write_dataset(&out, &args.output)
}

#[derive(Serialize)]
struct FitSummary {
    seed: u64,
    #[serde(flatten)]
    model: ModelSummary,
    mode: &'static str,
}

fn fit_model(
    data: &LabeledDataset,
    k: usize,
    standard: bool,
    known: Option<NoiseRates>,
) -> Result<(RobustKnnModel, &'static str), CliError> {
    let regressor = KnnRegressor::fit(data.to_sample(), k, Metric::Euclidean)?;
    Ok(match (standard, known) {
        (true, _) => (RobustKnnModel::standard(regressor), "standard"),
        (false, Some(rates)) => (RobustKnnModel::with_rates(regressor, rates), "known_rates"),
        (false, None) => {
            let rates = regressor.noise_rate_estimates();
            if rates.is_degenerate() {
                log::warn!("degenerate rate estimates p0_hat={} p1_hat={}", rates.p0, rates.p1);
            }
            (RobustKnnModel::with_rates(regressor, rates), "robust")
        }
    })
}

fn cmd_fit_predict(args: FitPredictArgs) -> Result<(), CliError> {
    let seed = args.seed.seed;
    let train = load_dataset(&args.train)?;
    let query = read_points_csv(std::fs::File::open(&args.query).map_err(|e| {
        CliError::Lib(Error::Io(format!("{}: {e}", args.query.display())))
    })?)?;
    if query.dim() != train.dim() {
        return Err(Error::DimensionMismatch { expected: train.dim(), got: query.dim() }.into());
    }
    let k = args.k.resolve(&train, seed)?;
    let known = args.known_rates.as_deref().map(rates_from).transpose()?;
    let (model, mode) = fit_model(&train, k, args.standard, known)?;

    let mut buf = Vec::new();
    {
        let mut w = csv_writer(&mut buf);
        let mut header: Vec<String> = (1..=query.dim()).map(|j| format!("x{j}")).collect();
        header.push("label".into());
        header.push("regression".into());
        w.write_record(&header).map_err(csv_err)?;
        for x in query.iter() {
            let f = model.predict(x)?;
            let mut row: Vec<String> = x.iter().map(|v| format_float(*v)).collect();
            row.push(((f >= model.threshold()) as u8).to_string());
            row.push(format_float(f));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
    }
    match &args.output {
        Some(path) => std::fs::write(path, &buf)?,
        None => std::io::stdout().lock().write_all(&buf)?,
    }
    let summary = FitSummary { seed, model: model.summary(), mode };
    let text = serde_json::to_string_pretty(&summary)? + "\n";
    match &args.summary {
        Some(path) => std::fs::write(path, text)?,
        None => eprint!("{text}"),
    }
    Ok(())
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::Writer::from_writer(w)
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Lib(Error::Io(e.to_string()))
}

fn cmd_estimate(args: EstimateArgs) -> Result<(), CliError> {
    let seed = args.seed.seed;
    let data = load_dataset(&args.input)?;
    let k = args.k.resolve(&data, seed)?;
    let (model, _) = fit_model(&data, k, false, None)?;
    print_json(&FitSummary { seed, model: model.summary(), mode: "robust" })
}

#[derive(Serialize)]
struct Scores {
    robust: f64,
    standard: f64,
    known_rates: f64,
}

#[derive(Serialize)]
struct Evaluation {
    seed: u64,
    model: ModelSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    excess_risk: Option<Scores>,
    #[serde(skip_serializing_if = "Option::is_none")]
    corrupted_excess_risk: Option<Scores>,
    #[serde(skip_serializing_if = "Option::is_none")]
    test_error: Option<Scores>,
    #[serde(skip_serializing_if = "Option::is_none")]
    clean_test_error: Option<Scores>,
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let seed = args.seed.seed;
    let train = load_dataset(&args.train)?;
    let k = args.k.resolve(&train, seed)?;
    let rates = rates_from(&args.rates)?;
    let (model, _) = fit_model(&train, k, false, None)?;
    let thresholds = [model.threshold(), 0.5, rates.threshold()];
    let scores = |v: [f64; 3]| Scores { robust: v[0], standard: v[1], known_rates: v[2] };

    let mut eval = Evaluation {
        seed,
        model: model.summary(),
        excess_risk: None,
        corrupted_excess_risk: None,
        test_error: None,
        clean_test_error: None,
    };
    let dist = args.distribution.spec()?.build()?;
    if let (Distribution::Exact(d), Some(step)) = (&dist, model.regressor().line_partition()) {
        let tilde = d.corrupted_regression(rates);
        eval.excess_risk = Some(scores(thresholds.map(|t| noisyknn::synthetic::excess_risk_of_step(&d.regression, &step, t))));
        eval.corrupted_excess_risk = Some(scores(thresholds.map(|t| noisyknn::synthetic::excess_risk_of_step(&tilde, &step, t))));
    }
    if let Some(path) = &args.test {
        let test = load_dataset(path)?;
        if test.dim() != train.dim() {
            return Err(Error::DimensionMismatch { expected: train.dim(), got: test.dim() }.into());
        }
        let preds: Vec<f64> = test.points.iter().map(|x| model.predict(x)).collect::<Result<_, _>>()?;
        let error_against = |labels: &[u8]| {
            thresholds.map(|t| {
                preds.iter().zip(labels).filter(|(f, &y)| ((**f >= t) as u8) != y).count() as f64 / labels.len() as f64
            })
        };
        eval.test_error = Some(scores(error_against(&test.labels)));
        eval.clean_test_error = test.clean_labels.as_deref().map(|c| scores(error_against(c)));
    }
    print_json(&eval)
}

#[derive(Serialize)]
struct BoundsTable {
    params: BoundParams,
    optimal_k: usize,
    sample_size_ok: bool,
    pointwise_bound: f64,
    max_bound: f64,
    xi_error_term: f64,
    xi_closed_form: f64,
    risk_bound: f64,
    ball_measure_tail: f64,
    ball_measure_tail_data_centre: f64,
}

fn cmd_bounds(args: BoundsArgs) -> Result<(), CliError> {
    let mut p: serde_json::Value = match &args.params {
        Some(path) => serde_json::from_str(&read_text(path)?)?,
        None => serde_json::json!({}),
    };
    let obj = p.as_object_mut().ok_or_else(|| CliError::Usage("--params must hold a JSON object".into()))?;
    let mut set = |key: &str, v: Option<serde_json::Value>| {
        if let Some(v) = v {
            obj.insert(key.to_string(), v);
        }
    };
    set("n", args.n.map(Into::into));
    set("k", args.k.map(Into::into));
    set("delta", args.delta.map(Into::into));
    set("lambda", args.lambda.map(Into::into));
    set("omega", args.omega.map(Into::into));
    set("alpha", args.alpha.map(Into::into));
    set("c_alpha", args.c_alpha.map(Into::into));
    set("p0", args.p0.map(Into::into));
    set("p1", args.p1.map(Into::into));
    for (key, default) in [("delta", 0.1), ("lambda", 1.0), ("omega", 3.0)] {
        obj.entry(key).or_insert(default.into());
    }
    let n = obj
        .get("n")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| CliError::Usage("--n is required".into()))? as usize;
    let (delta, lambda, omega) =
        (obj["delta"].as_f64().unwrap_or(0.1), obj["lambda"].as_f64().unwrap_or(1.0), obj["omega"].as_f64().unwrap_or(3.0));
    let optimal_k = bounds::optimal_k(n, delta, lambda, omega)?;
    obj.entry("k").or_insert(optimal_k.into());
    let params: BoundParams = serde_json::from_value(p)?;
    params.validate()?;
    let table = BoundsTable {
        params,
        optimal_k,
        sample_size_ok: bounds::optimal_k_sample_size_ok(n, delta, lambda, omega),
        pointwise_bound: bounds::pointwise_bound(&params)?,
        max_bound: bounds::max_bound(&params)?,
        xi_error_term: bounds::xi_error_term(n, params.k, delta, lambda, omega)?,
        xi_closed_form: bounds::xi_closed_form(n, delta, lambda, omega)?,
        risk_bound: bounds::risk_bound(&params)?,
        ball_measure_tail: bounds::ball_measure_tail(params.k, args.zeta)?,
        ball_measure_tail_data_centre: bounds::ball_measure_tail_data_centre(params.k, args.zeta)?,
    };
    if args.json {
        return print_json(&table);
    }
    let p = &table.params;
    println!("n = {}  k = {}  delta = {}  lambda = {}  omega = {}", p.n, p.k, p.delta, p.lambda, p.omega);
    println!("alpha = {}  c_alpha = {}  p0 = {}  p1 = {}  zeta = {}", p.alpha, p.c_alpha, p.p0, p.p1, args.zeta);
    let rows = [
        ("optimal k", table.optimal_k as f64),
        ("pointwise bound", table.pointwise_bound),
        ("max bound", table.max_bound),
        ("xi error term", table.xi_error_term),
        ("xi closed form", table.xi_closed_form),
        ("risk bound", table.risk_bound),
        ("ball tail (fixed centre)", table.ball_measure_tail),
        ("ball tail (data centre)", table.ball_measure_tail_data_centre),
    ];
    for (name, value) in rows {
        println!("{name:<26}{value:>16.6}");
    }
    if !table.sample_size_ok {
        println!("note: n is below the sample size the optimal-k guarantee needs");
    }
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> Result<(), CliError> {
    let mut config = match &args.config {
        Some(path) => serde_json::from_str::<ExperimentConfig>(&read_text(path)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(r) = args.replicates {
        config.replicates = r;
    }
    if let Some(grid) = args.n_grid {
        config.n_grid = grid;
    }
    if let Some(k) = args.k {
        config.k_policy = KPolicy::Fixed { k };
    }
    if let Some(d) = args.delta {
        config.delta = d;
    }
    if args.workers.is_some() {
        config.workers = args.workers;
    }
    if args.output.is_some() {
        config.output = args.output;
    }
    echo_seed(config.seed);
    let start = std::time::Instant::now();
    let result: ExperimentResult = match args.kind {
        ExperimentKind::Ball => harness::run_ball_experiment(&config)?,
        ExperimentKind::Pointwise => harness::run_pointwise_experiment(&config)?,
        ExperimentKind::Max => harness::run_max_experiment(&config)?,
        ExperimentKind::Rate => harness::run_rate_experiment(&config)?,
        ExperimentKind::Inconsistency => harness::run_inconsistency_demo(&config)?,
    };
    log::info!("experiment finished in {:.2}s", start.elapsed().as_secs_f64());
    if let Some(path) = &config.output {
        let summary = result.save(path)?;
        eprintln!("wrote {} and {}", path.display(), summary.display());
    } else {
        print!("{}", result.summary_json()?);
    }
    for c in &result.summary.checks {
        eprintln!(
            "{} {}: {:.6} {} {:.6}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.relation,
            c.limit
        );
    }
    if args.check && !result.summary.passed() {
        return Err(CliError::CheckFailed);
    }
    Ok(())
}

fn cmd_cv(args: CvArgs) -> Result<(), CliError> {
    let seed = args.seed.seed;
    echo_seed(seed);
    let data = load_dataset(&args.input)?;
    let grid = if args.grid.is_empty() {
        harness::geometric_grid(5, (data.len() / 2).max(5), 12)
    } else {
        args.grid
    };
    let report = harness::cross_validate_k_report(&data.to_sample(), &grid, args.folds, seed)?;
    print_json(&report)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Corrupt(a) => cmd_corrupt(a),
        Command::FitPredict(a) => cmd_fit_predict(a),
        Command::EstimateNoise(a) => cmd_estimate(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::CvK(a) => cmd_cv(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::CheckFailed) => ExitCode::from(1),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Lib(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) | Error::Parse(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
