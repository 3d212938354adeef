//! Out-of-fold predictions.
//!
//! Row `r` of an [`OobVector`] is predicted by a model trained on every fold
//! except `fold(r)`. Vectors depend only on (learner, config, fold plan,
//! seed), which is what lets GEM-ITH evaluate `b^k` combinations while
//! fitting only `b * k` learners: [`OobCache`] memoizes them under that key.

use std::collections::HashMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use parking_lot::Mutex;
use rayon::prelude::*;

use crate::dataset::{Dataset, FoldPlan};
use crate::error::{Error, Result};
use crate::learners::{fit_config, HyperConfig, LearnerSpec};
use crate::seeds;

/// Environment variable naming an on-disk cache directory.
pub const CACHE_DIR_ENV: &str = "GEMITH_CACHE_DIR";

/// Identity of an out-of-fold vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OobKey {
    pub config: String,
    pub plan: u64,
    pub seed: u64,
}

impl OobKey {
    pub fn new(config: &HyperConfig, plan: &FoldPlan, seed: u64) -> Self {
        Self { config: config.canonical(), plan: plan.fingerprint(), seed }
    }

    pub fn canonical(&self) -> String {
        format!("{}|plan={:016x}|seed={}", self.config, self.plan, self.seed)
    }

    pub fn hash64(&self) -> u64 {
        seeds::hash64(self.canonical().as_bytes())
    }
}

#[derive(Clone, Debug)]
pub struct OobVector {
    pub key: OobKey,
    pub predictions: Arc<Vec<f64>>,
}

/// Per-fold seed: independent of the order folds are fitted in.
pub fn fold_seed(seed: u64, fold: usize, config: &HyperConfig) -> u64 {
    seeds::derive(seed, &format!("fold:{fold}:{}", config.kind))
}

fn compute(ds: &Dataset, config: &HyperConfig, plan: &FoldPlan, seed: u64) -> Result<Vec<f64>> {
    if plan.n() != ds.n_rows() {
        return Err(Error::DimensionMismatch { expected: ds.n_rows(), got: plan.n() });
    }
    let per_fold: Vec<(Vec<usize>, Vec<f64>)> = (0..plan.folds())
        .into_par_iter()
        .map(|fold| {
            let (train, held) = plan.split(fold);
            assert!(!train.is_empty() && !held.is_empty(), "fold plan invariant violated");
            let train_ds = ds.select_rows(&train);
            let held_ds = ds.select_rows(&held);
            let model = fit_config(config, train_ds.features().view(), train_ds.target(), fold_seed(seed, fold, config))?;
            Ok((held, model.predict(held_ds.features().view())?))
        })
        .collect::<Result<_>>()
        .map_err(|e| Error::Fit { learner: config.kind.to_string(), config: config.to_string(), source: Box::new(e) })?;
    let mut out = vec![0.0; ds.n_rows()];
    for (rows, preds) in per_fold {
        for (r, p) in rows.into_iter().zip(preds) {
            out[r] = p;
        }
    }
    Ok(out)
}

/// Out-of-fold predictions of one learner configuration.
pub fn oob_predict(ds: &Dataset, spec: &LearnerSpec, config: &HyperConfig, plan: &FoldPlan, seed: u64) -> Result<OobVector> {
    spec.space.validate(config)?;
    let predictions = compute(ds, config, plan, seed)?;
    Ok(OobVector { key: OobKey::new(config, plan, seed), predictions: Arc::new(predictions) })
}

/// Entries sharing a key hash; collisions are resolved by the full key.
type Bucket = Vec<(OobKey, Arc<Vec<f64>>)>;

/// Memo table of out-of-fold vectors, safe to share between threads.
#[derive(Debug)]
pub struct OobCache {
    enabled: bool,
    dir: Option<PathBuf>,
    map: Mutex<HashMap<u64, Bucket>>,
    hits: AtomicUsize,
    misses: AtomicUsize,
    fits: AtomicUsize,
}

impl Default for OobCache {
    fn default() -> Self {
        Self::new()
    }
}

impl OobCache {
    pub fn new() -> Self {
        Self {
            enabled: true,
            dir: None,
            map: Mutex::new(HashMap::new()),
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
            fits: AtomicUsize::new(0),
        }
    }

    /// A cache that never stores anything; every request refits.
    pub fn disabled() -> Self {
        Self { enabled: false, ..Self::new() }
    }

    /// Memory cache backed by one file per key under `dir`.
    pub fn with_dir(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|source| Error::Io { path: dir.clone(), source })?;
        Ok(Self { dir: Some(dir), ..Self::new() })
    }

    /// Uses [`CACHE_DIR_ENV`] when set.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(d) if !d.is_empty() => Self::with_dir(PathBuf::from(d)),
            _ => Ok(Self::new()),
        }
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::SeqCst)
    }

    /// Number of single-fold model fits performed through this cache.
    pub fn fits(&self) -> usize {
        self.fits.load(Ordering::SeqCst)
    }

    pub fn len(&self) -> usize {
        self.map.lock().values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn lookup(&self, key: &OobKey) -> Option<Arc<Vec<f64>>> {
        if !self.enabled {
            return None;
        }
        let h = key.hash64();
        if let Some(v) = self.map.lock().get(&h).and_then(|b| b.iter().find(|(k, _)| k == key)).map(|(_, v)| v.clone()) {
            return Some(v);
        }
        let dir = self.dir.as_ref()?;
        let v = Arc::new(read_entry(&entry_path(dir, h), key)?);
        self.map.lock().entry(h).or_default().push((key.clone(), v.clone()));
        Some(v)
    }

    fn store(&self, key: &OobKey, value: Arc<Vec<f64>>) -> Result<()> {
        if !self.enabled {
            return Ok(());
        }
        let h = key.hash64();
        {
            let mut map = self.map.lock();
            let bucket = map.entry(h).or_default();
            if bucket.iter().any(|(k, _)| k == key) {
                return Ok(());
            }
            bucket.push((key.clone(), value.clone()));
        }
        if let Some(dir) = &self.dir {
            let path = entry_path(dir, h);
            // on a hash collision the first key keeps the file
            if !path.exists() {
                write_entry(&path, key, &value)?;
            }
        }
        Ok(())
    }

    /// Cached out-of-fold vector for one configuration.
    pub fn get_or_compute(&self, ds: &Dataset, spec: &LearnerSpec, config: &HyperConfig, plan: &FoldPlan, seed: u64) -> Result<OobVector> {
        Ok(oob_matrix(ds, &[(spec, config)], plan, seed, self)?.columns.remove(0))
    }
}

fn entry_path(dir: &Path, hash: u64) -> PathBuf {
    dir.join(format!("{hash:016x}.oob"))
}

/// Entry file: a magic line, the canonical key, the length, then one
/// `f64::to_bits` value per line in hex (exact round trip).
fn write_entry(path: &Path, key: &OobKey, values: &[f64]) -> Result<()> {
    let io = |source| Error::Io { path: path.to_path_buf(), source };
    let tmp = path.with_extension("tmp");
    let mut f = std::io::BufWriter::new(fs::File::create(&tmp).map_err(io)?);
    writeln!(f, "gemith-oob 1").map_err(io)?;
    writeln!(f, "{}", key.canonical()).map_err(io)?;
    writeln!(f, "{}", values.len()).map_err(io)?;
    for v in values {
        writeln!(f, "{:016x}", v.to_bits()).map_err(io)?;
    }
    f.flush().map_err(io)?;
    drop(f);
    fs::rename(&tmp, path).map_err(io)
}

fn read_entry(path: &Path, key: &OobKey) -> Option<Vec<f64>> {
    let text = fs::read_to_string(path).ok()?;
    let mut lines = text.lines();
    if lines.next()? != "gemith-oob 1" || lines.next()? != key.canonical() {
        return None;
    }
    let n: usize = lines.next()?.parse().ok()?;
    let values: Vec<f64> = lines
        .map(|l| u64::from_str_radix(l, 16).ok().map(f64::from_bits))
        .collect::<Option<_>>()?;
    (values.len() == n).then_some(values)
}

/// Out-of-fold predictions of several configurations sharing one fold plan.
#[derive(Clone, Debug)]
pub struct OobMatrix {
    columns: Vec<OobVector>,
    y: Arc<Vec<f64>>,
}

impl OobMatrix {
    /// Build from raw columns (keys are synthetic); useful for blending
    /// predictions that did not come from [`oob_matrix`].
    pub fn from_columns(columns: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::InvalidArgument("need at least one column".into()));
        }
        if y.is_empty() {
            return Err(Error::EmptyDataset("empty target".into()));
        }
        for c in &columns {
            if c.len() != y.len() {
                return Err(Error::DimensionMismatch { expected: y.len(), got: c.len() });
            }
        }
        let columns = columns
            .into_iter()
            .enumerate()
            .map(|(j, c)| OobVector {
                key: OobKey { config: format!("column{j}"), plan: 0, seed: 0 },
                predictions: Arc::new(c),
            })
            .collect();
        Ok(Self { columns, y: Arc::new(y) })
    }

    pub fn from_vectors(columns: Vec<OobVector>, y: Arc<Vec<f64>>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::InvalidArgument("need at least one column".into()));
        }
        let plan = columns[0].key.plan;
        for c in &columns {
            if c.predictions.len() != y.len() {
                return Err(Error::DimensionMismatch { expected: y.len(), got: c.predictions.len() });
            }
            if c.key.plan != plan {
                return Err(Error::InvalidArgument("columns come from different fold plans".into()));
            }
        }
        Ok(Self { columns, y })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn k(&self) -> usize {
        self.columns.len()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j].predictions
    }

    pub fn vectors(&self) -> &[OobVector] {
        &self.columns
    }

    pub fn column_slices(&self) -> Vec<&[f64]> {
        self.columns.iter().map(|c| c.predictions.as_slice()).collect()
    }

    /// Sub-matrix with the given columns, in the given order.
    pub fn select(&self, indices: &[usize]) -> OobMatrix {
        OobMatrix { columns: indices.iter().map(|&j| self.columns[j].clone()).collect(), y: self.y.clone() }
    }

    /// Row-major n x k copy, for feeding a meta-learner.
    pub fn to_features(&self) -> ndarray::Array2<f64> {
        ndarray::Array2::from_shape_fn((self.n(), self.k()), |(i, j)| self.columns[j].predictions[i])
    }

    pub fn column_mse(&self, j: usize) -> f64 {
        mse(self.column(j), &self.y)
    }
}

pub fn mse(pred: &[f64], y: &[f64]) -> f64 {
    pred.iter().zip(y).map(|(p, t)| (t - p) * (t - p)).sum::<f64>() / y.len() as f64
}

/// Assemble out-of-fold columns, fitting only keys the cache does not hold.
pub fn oob_matrix(
    ds: &Dataset,
    items: &[(&LearnerSpec, &HyperConfig)],
    plan: &FoldPlan,
    seed: u64,
    cache: &OobCache,
) -> Result<OobMatrix> {
    if items.is_empty() {
        return Err(Error::InvalidArgument("oob_matrix needs at least one item".into()));
    }
    if plan.n() != ds.n_rows() {
        return Err(Error::DimensionMismatch { expected: ds.n_rows(), got: plan.n() });
    }
    for (spec, config) in items {
        if config.kind != spec.kind {
            return Err(Error::InvalidConfig(format!("config for {} given to {}", config.kind, spec.name)));
        }
        spec.space.validate(config)?;
    }
    let keys: Vec<OobKey> = items.iter().map(|(_, c)| OobKey::new(c, plan, seed)).collect();

    // Decide sequentially what must be fitted so counters do not depend on
    // thread scheduling.
    let mut resolved: Vec<Option<Arc<Vec<f64>>>> = vec![None; items.len()];
    let mut todo: Vec<usize> = Vec::new();
    let mut first_of: HashMap<&OobKey, usize> = HashMap::new();
    let mut alias: Vec<Option<usize>> = vec![None; items.len()];
    for (i, key) in keys.iter().enumerate() {
        if let Some(v) = cache.lookup(key) {
            cache.hits.fetch_add(1, Ordering::SeqCst);
            resolved[i] = Some(v);
        } else if let (true, Some(&j)) = (cache.enabled, first_of.get(key)) {
            cache.hits.fetch_add(1, Ordering::SeqCst);
            alias[i] = Some(j);
        } else {
            cache.misses.fetch_add(1, Ordering::SeqCst);
            first_of.insert(key, i);
            todo.push(i);
        }
    }

    let computed: Vec<Arc<Vec<f64>>> = todo
        .par_iter()
        .map(|&i| compute(ds, items[i].1, plan, seed).map(Arc::new))
        .collect::<Result<_>>()?;
    cache.fits.fetch_add(todo.len() * plan.folds(), Ordering::SeqCst);
    for (&i, v) in todo.iter().zip(computed) {
        cache.store(&keys[i], v.clone())?;
        resolved[i] = Some(v);
    }
    for i in 0..items.len() {
        if let Some(j) = alias[i] {
            resolved[i] = resolved[j].clone();
        }
    }

    let columns = keys
        .into_iter()
        .zip(resolved)
        .map(|(key, v)| OobVector { key, predictions: v.expect("every column resolved") })
        .collect();
    Ok(OobMatrix { columns, y: Arc::new(ds.target().to_vec()) })
}
