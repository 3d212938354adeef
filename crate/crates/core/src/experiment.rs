//! Repeated train/test experiments comparing ensemble methods, and the
//! reports built from their records.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    load_csv, make_fold_plan, standardize_apply, standardize_fit, synthetic_friedman1, train_test_split, Dataset, FoldPlan,
    TargetColumn,
};
use crate::diagnostics::FitProcedure;
use crate::ensembles::{
    evaluate, gem_from_searches, gem_ith_from_candidates, select_base_learners, tune_learners, EnsembleModel, Method,
    DEFAULT_COMBO_CAP,
};
use crate::error::{Error, Result};
use crate::learners::{default_spaces, HyperConfig, LearnerSpec, ParamValue};
use crate::oob::OobCache;
use crate::search::SearchParams;
use crate::seeds;

/// Tolerance used when checking the objective ordering between methods.
pub const ORDER_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    Csv { path: PathBuf, target: String },
    Friedman1 { n: usize, noise_sd: f64, seed: u64 },
}

impl DataSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DataSource::Csv { path, target } => {
                let Ok(target) = target.parse::<TargetColumn>();
                load_csv(path, &target)
            }
            DataSource::Friedman1 { n, noise_sd, seed } => synthetic_friedman1(*n, *noise_sd, *seed),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSource,
    pub test_fraction: f64,
    pub folds: usize,
    pub repeats: usize,
    pub methods: Vec<Method>,
    pub search: SearchParams,
    pub seed: u64,
    /// Base learners. When empty, four are chosen from `pool` in every repeat.
    pub learners: Vec<LearnerSpec>,
    pub pool: Vec<LearnerSpec>,
    /// Upper bound on GEM-ITH combinations; `None` enumerates all.
    pub combo_cap: Option<usize>,
    /// Standardize features with training-split statistics.
    pub standardize: bool,
    /// Directory for the record and summaries. Not part of the record.
    #[serde(skip_serializing)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads; defaults to all cores. Not part of the record.
    #[serde(skip_serializing)]
    pub parallelism: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: DataSource::Friedman1 { n: 500, noise_sd: 1.0, seed: 0 },
            test_fraction: 0.2,
            folds: 5,
            repeats: 5,
            methods: Method::ALL.to_vec(),
            search: SearchParams::default(),
            seed: 0,
            learners: Vec::new(),
            pool: default_spaces(),
            combo_cap: Some(DEFAULT_COMBO_CAP),
            standardize: true,
            output_dir: None,
            parallelism: None,
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad(format!("test_fraction {} must lie in (0, 1)", self.test_fraction));
        }
        if self.folds < 2 {
            return bad(format!("folds must be at least 2, got {}", self.folds));
        }
        if self.repeats == 0 {
            return bad("repeats must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("no methods requested".into());
        }
        if self.combo_cap == Some(0) {
            return bad("combo_cap must be positive".into());
        }
        if self.parallelism == Some(0) {
            return bad("parallelism must be positive".into());
        }
        self.search.validate().map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let specs = if self.learners.is_empty() {
            if self.pool.len() < 4 {
                return bad(format!("pool needs at least 4 learners, has {}", self.pool.len()));
            }
            &self.pool
        } else {
            &self.learners
        };
        for (i, s) in specs.iter().enumerate() {
            if s.space.is_empty() {
                return bad(format!("learner {} has an empty space", s.name));
            }
            if specs[..i].iter().any(|t| t.name == s.name) {
                return bad(format!("learner name {} used twice", s.name));
            }
        }
        Ok(())
    }
}

/// Seeds used by one repeat.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSeeds {
    pub split: u64,
    pub folds: u64,
    /// Search, out-of-fold fits and refits.
    pub search: u64,
}

impl StageSeeds {
    pub fn for_repeat(seed: u64, repeat: usize) -> Self {
        Self {
            split: seeds::derive_indexed(seed, "split", repeat as u64),
            folds: seeds::derive_indexed(seed, "folds", repeat as u64),
            search: seeds::derive_indexed(seed, "search", repeat as u64),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedConfig {
    pub learner: String,
    pub config: HyperConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodRecord {
    pub method: Method,
    pub configs: Vec<NamedConfig>,
    pub weights: Option<Vec<f64>>,
    /// Out-of-fold blend MSE; in-sample meta MSE for stacking.
    pub oob_objective: f64,
    pub test_mse: f64,
    /// Includes the shared hyperparameter search.
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub pool_oob_mse: BTreeMap<String, f64>,
    pub pruned: Vec<String>,
    pub selected: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GemIthStats {
    pub total_combinations: String,
    pub evaluated: usize,
    pub subsampled: bool,
    pub oob_fits: usize,
    pub choice: Vec<usize>,
}

/// Objective orderings that hold by construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderChecks {
    pub gem_le_min_base: bool,
    pub gem_le_bem: bool,
    pub gem_ith_le_gem: Option<bool>,
}

impl OrderChecks {
    pub fn all_hold(&self) -> bool {
        self.gem_le_min_base && self.gem_le_bem && self.gem_ith_le_gem.unwrap_or(true)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepeatRecord {
    pub repeat: usize,
    pub seeds: StageSeeds,
    pub ok: bool,
    pub error: Option<String>,
    pub n_train: usize,
    pub n_test: usize,
    pub selection: Option<SelectionRecord>,
    pub base_oob_mse: BTreeMap<String, f64>,
    pub methods: Vec<MethodRecord>,
    pub gem_ith: Option<GemIthStats>,
    pub checks: Option<OrderChecks>,
    pub search_time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    pub mean_test_mse: f64,
    pub mean_oob_objective: f64,
    pub test_mse: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub version: String,
    pub config: RunConfig,
    pub repeats: Vec<RepeatRecord>,
    pub summary: Vec<SummaryRow>,
    pub wall_time_s: f64,
}

/// Keys holding wall-clock measurements.
pub fn is_timing_key(key: &str) -> bool {
    key.ends_with("_time_s")
}

fn strip_timings(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Object(map) => {
            map.retain(|k, _| !is_timing_key(k));
            map.values_mut().for_each(strip_timings);
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(strip_timings),
        _ => {}
    }
}

impl RunRecord {
    /// Pretty JSON with sorted keys.
    pub fn to_json(&self) -> Result<String> {
        let value = serde_json::to_value(self)?;
        Ok(serde_json::to_string_pretty(&value)? + "\n")
    }

    /// JSON with every timing field removed.
    pub fn to_json_without_timings(&self) -> Result<String> {
        let mut value = serde_json::to_value(self)?;
        strip_timings(&mut value);
        Ok(serde_json::to_string_pretty(&value)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn failed_repeats(&self) -> usize {
        self.repeats.iter().filter(|r| !r.ok).count()
    }

    pub fn summary_csv(&self) -> String {
        let reps = self.config.repeats;
        let mut out = String::from("method,mean_test_mse,mean_oob_objective,n_ok");
        for r in 0..reps {
            let _ = write!(out, ",test_mse_{r}");
        }
        out.push('\n');
        for row in &self.summary {
            let _ = write!(out, "{},{:e},{:e},{}", row.method, row.mean_test_mse, row.mean_oob_objective, row.test_mse.len());
            for r in 0..reps {
                match self.method_in_repeat(r, row.method) {
                    Some(m) => {
                        let _ = write!(out, ",{:e}", m.test_mse);
                    }
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn summary_text(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .summary
            .iter()
            .map(|r| {
                vec![r.method.to_string(), format!("{:.6}", r.mean_test_mse), format!("{:.6}", r.mean_oob_objective), r.test_mse.len().to_string()]
            })
            .collect();
        render_table(&["method", "mean test MSE", "mean OOB objective", "repeats"], &rows, 1)
    }

    fn method_in_repeat(&self, repeat: usize, method: Method) -> Option<&MethodRecord> {
        self.repeats.get(repeat).filter(|r| r.ok)?.methods.iter().find(|m| m.method == method)
    }

    /// Write `record.json`, `summary.csv` and `summary.txt` into `dir`.
    pub fn write_outputs(&self, dir: &Path) -> Result<()> {
        let io = |path: PathBuf| move |source| Error::Io { path, source };
        std::fs::create_dir_all(dir).map_err(io(dir.to_path_buf()))?;
        for (name, body) in [("record.json", self.to_json()?), ("summary.csv", self.summary_csv()), ("summary.txt", self.summary_text())] {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(io(path.clone()))?;
        }
        Ok(())
    }
}

/// Plain-text table; the first `left` columns are left-aligned, the rest
/// right-aligned.
pub fn render_table(header: &[&str], rows: &[Vec<String>], left: usize) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            let sep = if i == 0 { "" } else { "  " };
            if i < left {
                let _ = write!(s, "{sep}{cell:<w$}");
            } else {
                let _ = write!(s, "{sep}{cell:>w$}");
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    out += &line(widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(String::as_str).collect());
    for row in rows {
        out += &line(row.iter().map(String::as_str).collect());
    }
    out
}

/// Everything the requested methods produced on one training split.
pub struct MethodsOutcome {
    pub models: Vec<(EnsembleModel, f64)>,
    pub base_oob_mse: Vec<(String, f64)>,
    pub gem_ith: Option<GemIthStats>,
    pub checks: OrderChecks,
    pub search_time_s: f64,
}

/// Tune `specs` once and build every method in `methods` from the shared
/// searches. Returned models follow the order of `methods`; each comes with
/// its wall time, including the shared search.
#[allow(clippy::too_many_arguments)]
pub fn fit_methods(
    train: &Dataset,
    specs: &[LearnerSpec],
    methods: &[Method],
    plan: &FoldPlan,
    search: &SearchParams,
    seed: u64,
    combo_cap: Option<usize>,
    cache: &OobCache,
) -> Result<MethodsOutcome> {
    let t0 = Instant::now();
    let searches = tune_learners(train, specs, plan, search, seed, cache)?;
    let search_time_s = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let gem = gem_from_searches(train, specs, &searches, plan, seed, cache)?;
    let gem_time = t1.elapsed().as_secs_f64();
    let base_mses = gem.base_mses();
    let bem = gem.bem()?;
    let gem_obj = gem.model.objective();
    let mut checks = OrderChecks {
        gem_le_min_base: base_mses.iter().all(|&m| gem_obj <= m + ORDER_TOL),
        gem_le_bem: gem_obj <= bem.objective() + ORDER_TOL,
        gem_ith_le_gem: None,
    };

    let mut models = Vec::with_capacity(methods.len());
    let mut gem_ith_stats = None;
    for &method in methods {
        let t = Instant::now();
        let model = match method {
            Method::Bem => bem.clone(),
            Method::Gem => gem.model.clone(),
            Method::GemIth => {
                let candidates: Vec<Vec<HyperConfig>> =
                    searches.iter().map(|s| s.candidates.iter().map(|t| t.config.clone()).collect()).collect();
                let r = gem_ith_from_candidates(train, specs, &candidates, plan, seed, combo_cap, cache, false)?;
                checks.gem_ith_le_gem = Some(r.objective() <= gem_obj + ORDER_TOL);
                gem_ith_stats = Some(GemIthStats {
                    total_combinations: r.total_combinations.to_string(),
                    evaluated: r.evaluated,
                    subsampled: r.subsampled,
                    oob_fits: r.oob_fits,
                    choice: r.best.choice.clone(),
                });
                r.model
            }
            Method::Stacked(meta) => gem.stacked(meta, seed)?,
        };
        let own = t.elapsed().as_secs_f64();
        // GEM's blend and refits are shared by BEM and stacking.
        let extra = if matches!(method, Method::GemIth) { 0.0 } else { gem_time };
        models.push((model, search_time_s + extra + own));
    }
    if !checks.all_hold() {
        log::error!("objective ordering violated: {checks:?}");
    }
    Ok(MethodsOutcome {
        models,
        base_oob_mse: specs.iter().map(|s| s.name.clone()).zip(base_mses).collect(),
        gem_ith: gem_ith_stats,
        checks,
        search_time_s,
    })
}

fn named_configs(model: &EnsembleModel) -> Vec<NamedConfig> {
    model.configs().into_iter().map(|(learner, config)| NamedConfig { learner, config }).collect()
}

fn run_repeat(cfg: &RunConfig, data: &Dataset, repeat: usize) -> Result<RepeatRecord> {
    let seeds = StageSeeds::for_repeat(cfg.seed, repeat);
    let (mut train, mut test) = train_test_split(data, cfg.test_fraction, seeds.split)?;
    if cfg.standardize {
        let scaler = standardize_fit(&train);
        train = standardize_apply(&scaler, &train)?;
        test = standardize_apply(&scaler, &test)?;
    }
    let plan = make_fold_plan(train.n_rows(), cfg.folds, seeds.folds)?;
    let cache = OobCache::from_env()?;
    log::info!("repeat {repeat}: {} training rows, {} test rows", train.n_rows(), test.n_rows());

    let mut selection = None;
    let specs = if cfg.learners.is_empty() {
        let sel = select_base_learners(&train, &cfg.pool, &plan, &cfg.search, seeds.search, &cache)?;
        let name = |i: usize| cfg.pool[i].name.clone();
        selection = Some(SelectionRecord {
            pool_oob_mse: cfg.pool.iter().map(|s| s.name.clone()).zip(sel.oob_mse.iter().copied()).collect(),
            pruned: sel.pruned.iter().map(|&i| name(i)).collect(),
            selected: sel.selected_indices.iter().map(|&i| name(i)).collect(),
        });
        sel.selected
    } else {
        cfg.learners.clone()
    };

    let out = fit_methods(&train, &specs, &cfg.methods, &plan, &cfg.search, seeds.search, cfg.combo_cap, &cache)?;
    let methods = out
        .models
        .iter()
        .map(|(model, wall)| {
            Ok(MethodRecord {
                method: model.method,
                configs: named_configs(model),
                weights: model.weights().map(<[f64]>::to_vec),
                oob_objective: model.objective(),
                test_mse: evaluate(model, &test)?,
                wall_time_s: *wall,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RepeatRecord {
        repeat,
        seeds,
        ok: true,
        error: None,
        n_train: train.n_rows(),
        n_test: test.n_rows(),
        selection,
        base_oob_mse: out.base_oob_mse.into_iter().collect(),
        methods,
        gem_ith: out.gem_ith,
        checks: Some(out.checks),
        search_time_s: out.search_time_s,
    })
}

fn summarize(cfg: &RunConfig, repeats: &[RepeatRecord]) -> Vec<SummaryRow> {
    cfg.methods
        .iter()
        .filter_map(|&method| {
            let found: Vec<&MethodRecord> =
                repeats.iter().filter(|r| r.ok).filter_map(|r| r.methods.iter().find(|m| m.method == method)).collect();
            if found.is_empty() {
                return None;
            }
            let n = found.len() as f64;
            Some(SummaryRow {
                method,
                mean_test_mse: found.iter().map(|m| m.test_mse).sum::<f64>() / n,
                mean_oob_objective: found.iter().map(|m| m.oob_objective).sum::<f64>() / n,
                test_mse: found.iter().map(|m| m.test_mse).collect(),
            })
        })
        .collect()
}

fn execute(cfg: &RunConfig) -> Result<RunRecord> {
    let start = Instant::now();
    let data = cfg.data.load()?;
    let repeats: Vec<RepeatRecord> = (0..cfg.repeats)
        .map(|r| {
            run_repeat(cfg, &data, r).unwrap_or_else(|e| {
                log::error!("repeat {r} failed: {e}");
                RepeatRecord {
                    repeat: r,
                    seeds: StageSeeds::for_repeat(cfg.seed, r),
                    ok: false,
                    error: Some(e.to_string()),
                    n_train: 0,
                    n_test: 0,
                    selection: None,
                    base_oob_mse: BTreeMap::new(),
                    methods: Vec::new(),
                    gem_ith: None,
                    checks: None,
                    search_time_s: 0.0,
                }
            })
        })
        .collect();
    Ok(RunRecord {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        summary: summarize(cfg, &repeats),
        repeats,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Run every repeat. Configuration and data-loading problems are returned
/// as errors; a failing repeat is recorded and the others still run.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let record = match cfg.parallelism {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(|| execute(cfg))?,
        None => execute(cfg)?,
    };
    if let Some(dir) = &cfg.output_dir {
        record.write_outputs(dir)?;
    }
    Ok(record)
}

/// One hyperparameter of one learner under GEM and GEM-ITH.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperparamRow {
    pub repeat: usize,
    pub learner: String,
    pub param: String,
    pub gem: ParamValue,
    pub gem_ith: ParamValue,
    pub differs: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperparamTable {
    pub rows: Vec<HyperparamRow>,
}

impl HyperparamTable {
    pub fn n_differ(&self) -> usize {
        self.rows.iter().filter(|r| r.differs).count()
    }

    pub fn render(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.repeat.to_string(),
                    r.learner.clone(),
                    r.param.clone(),
                    r.gem.to_string(),
                    r.gem_ith.to_string(),
                    if r.differs { "*".into() } else { String::new() },
                ]
            })
            .collect();
        render_table(&["repeat", "learner", "param", "GEM", "GEM-ITH", "differs"], &rows, 3)
    }
}

/// Side-by-side GEM and GEM-ITH hyperparameters for every successful repeat
/// that ran both.
pub fn report_hyperparams(rec: &RunRecord) -> Result<HyperparamTable> {
    let mut rows = Vec::new();
    let mut any = false;
    for r in rec.repeats.iter().filter(|r| r.ok) {
        let find = |m: Method| r.methods.iter().find(|x| x.method == m);
        let (Some(gem), Some(ith)) = (find(Method::Gem), find(Method::GemIth)) else { continue };
        any = true;
        for a in &gem.configs {
            let b = ith
                .configs
                .iter()
                .find(|b| b.learner == a.learner)
                .ok_or_else(|| Error::InvalidArgument(format!("GEM-ITH has no learner {}", a.learner)))?;
            for (param, va) in &a.config.values {
                let vb = b.config.get(param)?;
                rows.push(HyperparamRow {
                    repeat: r.repeat,
                    learner: a.learner.clone(),
                    param: param.clone(),
                    gem: va.clone(),
                    gem_ith: vb.clone(),
                    differs: va.canonical() != vb.canonical(),
                });
            }
        }
    }
    if !any {
        return Err(Error::InvalidArgument("record has no repeat with both GEM and GEM-ITH".into()));
    }
    Ok(HyperparamTable { rows })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub method: Method,
    pub total_s: f64,
    pub mean_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingTable {
    pub rows: Vec<TimingRow>,
    pub total_s: f64,
}

impl TimingTable {
    pub fn render(&self) -> String {
        let mut rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| vec![r.method.to_string(), format!("{:.3}", r.total_s), format!("{:.3}", r.mean_s)])
            .collect();
        rows.push(vec!["total".into(), format!("{:.3}", self.total_s), String::new()]);
        render_table(&["method", "wall time (s)", "per repeat (s)"], &rows, 1)
    }
}

/// Wall time per method, summed over successful repeats.
pub fn report_timings(rec: &RunRecord) -> TimingTable {
    let rows: Vec<TimingRow> = rec
        .config
        .methods
        .iter()
        .filter_map(|&method| {
            let times: Vec<f64> =
                rec.repeats.iter().filter_map(|r| r.methods.iter().find(|m| m.method == method)).map(|m| m.wall_time_s).collect();
            if times.is_empty() {
                return None;
            }
            let total: f64 = times.iter().sum();
            Some(TimingRow { method, total_s: total, mean_s: total / times.len() as f64 })
        })
        .collect();
    let total_s = rows.iter().map(|r| r.total_s).sum();
    TimingTable { rows, total_s }
}

/// One ensemble method, searched and fitted from scratch on each training
/// set; usable with the bias-variance estimator.
#[derive(Clone, Debug)]
pub struct MethodProcedure {
    pub method: Method,
    pub specs: Vec<LearnerSpec>,
    pub search: SearchParams,
    pub folds: usize,
    pub combo_cap: Option<usize>,
}

impl FitProcedure for MethodProcedure {
    fn fit_predict(&self, train: &Dataset, x_test: ArrayView2<f64>, seed: u64) -> Result<Vec<f64>> {
        let plan = make_fold_plan(train.n_rows(), self.folds, seeds::derive(seed, "folds"))?;
        let cache = OobCache::new();
        let out = fit_methods(train, &self.specs, &[self.method], &plan, &self.search, seed, self.combo_cap, &cache)?;
        out.models[0].0.predict(x_test)
    }
}
