use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gemith::dataset::{make_fold_plan, standardize_apply, standardize_fit, train_test_split, write_csv, Friedman1, Generator};
use gemith::diagnostics::{bias_variance_estimate, FitProcedure, LearnerProcedure};
use gemith::ensembles::{select_base_learners, Method};
use gemith::experiment::{report_hyperparams, report_timings, run_experiment, DataSource, MethodProcedure, RunConfig, RunRecord, StageSeeds};
use gemith::learners::{Domain, ParamValue};
use gemith::search::SearchParams;
use gemith::{HyperConfig, LearnerKind, LearnerSpec, OobCache};

/// Regression ensembles with jointly tuned hyperparameters and weights.
#[derive(Parser, Debug)]
#[command(name = "gemith", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run repeated train/test experiments and write a run record.
    Run(RunArgs),
    /// Generate a synthetic Friedman #1 dataset as CSV.
    Gen(GenArgs),
    /// Pick four diverse base learners from a pool.
    SelectLearners(SelectArgs),
    /// Monte Carlo bias-variance decomposition on Friedman #1.
    BiasVariance(BiasVarianceArgs),
    /// Tables built from a saved run record.
    Report(ReportArgs),
}

#[derive(Args, Debug, Default)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Target column name or 0-based index.
    #[arg(long, requires = "csv")]
    target: Option<String>,
    /// Use Friedman #1 with this many rows instead of a CSV.
    #[arg(long, value_name = "N", conflicts_with = "csv")]
    friedman_n: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    friedman_noise: f64,
    #[arg(long, default_value_t = 0)]
    friedman_seed: u64,
}

impl DataArgs {
    fn source(&self) -> Result<Option<DataSource>> {
        match (&self.csv, self.friedman_n) {
            (Some(path), _) => {
                let Some(target) = &self.target else { bail!("--csv needs --target") };
                Ok(Some(DataSource::Csv { path: path.clone(), target: target.clone() }))
            }
            (None, Some(n)) => Ok(Some(DataSource::Friedman1 { n, noise_sd: self.friedman_noise, seed: self.friedman_seed })),
            (None, None) => Ok(None),
        }
    }
}

#[derive(Args, Debug, Default)]
struct SearchArgs {
    /// TPE trials per learner.
    #[arg(long)]
    n_trials: Option<usize>,
    /// Random trials before TPE takes over.
    #[arg(long)]
    n_startup: Option<usize>,
    /// Candidates kept per learner for GEM-ITH.
    #[arg(long)]
    b: Option<usize>,
}

impl SearchArgs {
    fn apply(&self, search: &mut SearchParams) {
        if let Some(v) = self.n_trials {
            search.n_trials = v;
        }
        if let Some(v) = self.n_startup {
            search.n_startup = v;
        }
        if let Some(v) = self.b {
            search.b = v;
        }
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON file with a run configuration; flags override its fields.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Comma separated, e.g. BEM,GEM,GEM-ITH,STACKED-LR.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    /// Fixed base learners (comma separated kinds); otherwise chosen from the pool.
    #[arg(long, value_delimiter = ',')]
    learners: Option<Vec<LearnerKind>>,
    /// Pool to choose base learners from.
    #[arg(long, value_delimiter = ',')]
    pool: Option<Vec<LearnerKind>>,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long)]
    seed: Option<u64>,
    /// Maximum GEM-ITH combinations evaluated.
    #[arg(long)]
    combo_cap: Option<usize>,
    /// Evaluate every GEM-ITH combination.
    #[arg(long, conflicts_with = "combo_cap")]
    no_combo_cap: bool,
    /// Keep raw feature scales.
    #[arg(long)]
    no_standardize: bool,
    /// Directory for record.json, summary.csv and summary.txt.
    #[arg(long, short, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, short = 'j')]
    parallelism: Option<usize>,
}

fn specs_for(kinds: &[LearnerKind]) -> Vec<LearnerSpec> {
    kinds.iter().map(|&k| LearnerSpec::default_for(k)).collect()
}

impl RunArgs {
    fn to_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_json_file(path).with_context(|| format!("reading {}", path.display()))?,
            None => RunConfig::default(),
        };
        if let Some(src) = self.data.source()? {
            cfg.data = src;
        }
        if let Some(v) = self.test_fraction {
            cfg.test_fraction = v;
        }
        if let Some(v) = self.folds {
            cfg.folds = v;
        }
        if let Some(v) = self.repeats {
            cfg.repeats = v;
        }
        if let Some(v) = &self.methods {
            cfg.methods = v.clone();
        }
        if let Some(v) = &self.learners {
            cfg.learners = specs_for(v);
        }
        if let Some(v) = &self.pool {
            cfg.pool = specs_for(v);
        }
        self.search.apply(&mut cfg.search);
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if self.no_combo_cap {
            cfg.combo_cap = None;
        } else if let Some(v) = self.combo_cap {
            cfg.combo_cap = Some(v);
        }
        if self.no_standardize {
            cfg.standardize = false;
        }
        if self.out.is_some() {
            cfg.output_dir = self.out.clone();
        }
        if self.parallelism.is_some() {
            cfg.parallelism = self.parallelism;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SelectArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Candidate learners (default: all six).
    #[arg(long, value_delimiter = ',')]
    pool: Option<Vec<LearnerKind>>,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short = 'j')]
    parallelism: Option<usize>,
}

#[derive(Args, Debug)]
struct BiasVarianceArgs {
    /// Single learner to analyse; needs every hyperparameter via --param.
    #[arg(long, conflicts_with = "method")]
    learner: Option<LearnerKind>,
    /// Hyperparameter as name=value; repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
    /// Ensemble method to analyse instead of a single learner.
    #[arg(long)]
    method: Option<Method>,
    /// Base learners for --method.
    #[arg(long, value_delimiter = ',', default_value = "ridge,knn,tree,gradient_boosting")]
    learners: Vec<LearnerKind>,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    #[arg(long, default_value_t = 200)]
    n_train: usize,
    #[arg(long, default_value_t = 500)]
    n_test: usize,
    #[arg(long, default_value_t = 200)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, short = 'j')]
    parallelism: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ReportKind {
    Summary,
    Hyperparams,
    Timings,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// A record.json written by `run`.
    record: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportKind::Summary)]
    kind: ReportKind,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(f),
        None => f(),
    }
}

fn parse_param(kind: LearnerKind, arg: &str) -> Result<(String, ParamValue)> {
    let Some((name, raw)) = arg.split_once('=') else { bail!("expected NAME=VALUE, got {arg:?}") };
    let spec = LearnerSpec::default_for(kind);
    let integer = match spec.space.domain(name) {
        Some(Domain::Integer { .. }) => true,
        Some(Domain::Categorical { values }) => values.iter().all(|v| matches!(v, ParamValue::Int(_))),
        Some(_) => false,
        None => bail!("{kind} has no hyperparameter {name:?}"),
    };
    let value = if integer {
        ParamValue::Int(raw.parse().with_context(|| format!("{name} needs an integer"))?)
    } else {
        ParamValue::Float(raw.parse().with_context(|| format!("{name} needs a number"))?)
    };
    Ok((name.to_string(), value))
}

fn write_or_print(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, body).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn cmd_run(args: &RunArgs) -> Result<ExitCode> {
    let cfg = args.to_config()?;
    let record = run_experiment(&cfg)?;
    print!("{}", record.summary_text());
    if let Some(dir) = &cfg.output_dir {
        eprintln!("wrote {}", dir.join("record.json").display());
    }
    let failed = record.failed_repeats();
    if failed > 0 {
        eprintln!("{failed} of {} repeats failed", record.repeats.len());
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_gen(args: &GenArgs) -> Result<ExitCode> {
    let ds = Friedman1 { noise_sd: args.noise }.generate(args.n, args.seed)?;
    write_csv(&ds, &args.out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_select(args: &SelectArgs) -> Result<ExitCode> {
    let source = args.data.source()?.unwrap_or(DataSource::Friedman1 { n: 500, noise_sd: 1.0, seed: 0 });
    let data = source.load()?;
    let pool = specs_for(args.pool.as_deref().unwrap_or(&LearnerKind::ALL));
    let mut search = SearchParams::default();
    args.search.apply(&mut search);
    let seeds = StageSeeds::for_repeat(args.seed, 0);
    let (train, _) = train_test_split(&data, args.test_fraction, seeds.split)?;
    let train = standardize_apply(&standardize_fit(&train), &train)?;
    let plan = make_fold_plan(train.n_rows(), args.folds, seeds.folds)?;
    let cache = OobCache::from_env()?;
    let sel = with_threads(args.parallelism, || Ok(select_base_learners(&train, &pool, &plan, &search, seeds.search, &cache)?))?;
    println!("{}", serde_json::to_string_pretty(&serde_json::to_value(&sel)?)?);
    Ok(ExitCode::SUCCESS)
}

fn cmd_bias_variance(args: &BiasVarianceArgs) -> Result<ExitCode> {
    let gen = Friedman1 { noise_sd: args.noise };
    let proc: Box<dyn FitProcedure> = match (args.learner, args.method) {
        (Some(kind), _) => {
            let values = args.params.iter().map(|p| parse_param(kind, p)).collect::<Result<Vec<_>>>()?;
            let config = HyperConfig::new(kind, values);
            // Values outside the default search space are allowed.
            let space = LearnerSpec::default_for(kind).space;
            let missing: Vec<&str> = space.iter().map(|(n, _)| n).filter(|n| !config.values.contains_key(*n)).collect();
            if !missing.is_empty() {
                bail!("{kind} needs --param for {}", missing.join(", "));
            }
            Box::new(LearnerProcedure(config))
        }
        (None, Some(method)) => {
            let mut search = SearchParams::default();
            args.search.apply(&mut search);
            search.validate()?;
            Box::new(MethodProcedure { method, specs: specs_for(&args.learners), search, folds: args.folds, combo_cap: Some(25_000) })
        }
        (None, None) => bail!("give --learner or --method"),
    };
    let report = with_threads(args.parallelism, || Ok(bias_variance_estimate(proc.as_ref(), &gen, args.n_train, args.n_test, args.reps, args.seed)?))?;
    write_or_print(args.out.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(args: &ReportArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.record).with_context(|| format!("reading {}", args.record.display()))?;
    let rec = RunRecord::from_json(&text)?;
    let body = match (args.kind, args.format) {
        (ReportKind::Summary, Format::Text) => rec.summary_text(),
        (ReportKind::Summary, Format::Csv) => rec.summary_csv(),
        (ReportKind::Summary, Format::Json) => serde_json::to_string_pretty(&rec.summary)? + "\n",
        (ReportKind::Hyperparams, format) => {
            let table = report_hyperparams(&rec)?;
            match format {
                Format::Json => serde_json::to_string_pretty(&table)? + "\n",
                Format::Csv => {
                    let mut s = String::from("repeat,learner,param,gem,gem_ith,differs\n");
                    for r in &table.rows {
                        s += &format!("{},{},{},{},{},{}\n", r.repeat, r.learner, r.param, r.gem, r.gem_ith, r.differs);
                    }
                    s
                }
                Format::Text => format!("{}{} of {} values differ\n", table.render(), table.n_differ(), table.rows.len()),
            }
        }
        (ReportKind::Timings, format) => {
            let table = report_timings(&rec);
            match format {
                Format::Json => serde_json::to_string_pretty(&table)? + "\n",
                Format::Csv => {
                    let mut s = String::from("method,total_s,mean_s\n");
                    for r in &table.rows {
                        s += &format!("{},{},{}\n", r.method, r.total_s, r.mean_s);
                    }
                    s + &format!("total,{},\n", table.total_s)
                }
                Format::Text => table.render(),
            }
        }
    };
    print!("{body}");
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Gen(a) => cmd_gen(a),
        Command::SelectLearners(a) => cmd_select(a),
        Command::BiasVariance(a) => cmd_bias_variance(a),
        Command::Report(a) => cmd_report(a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(1)
    })
}
