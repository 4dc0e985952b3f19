//! Evaluation harness: random splits, Brier scoring, Student-t confidence
//! intervals, grid search and the benchmark runner with its report files.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use thiserror::Error;

use crate::eventlog::{load_database, Alphabet, IngestionOptions, LogError, LogFormat, Sequence, SequenceDatabase, Symbol};
use crate::methods::{FittedModel, GridSpec, MethodSpec};
use crate::predictors::{NextSymbolDistribution, PredictError, Predictor};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("split: {0}")]
    Split(String),
    #[error("the test data has no prediction points")]
    NoPredictionPoints,
    #[error("symbol `{0}` is not in the scoring alphabet")]
    SymbolOutsideAlphabet(Symbol),
    #[error(transparent)]
    Predict(#[from] PredictError),
    #[error("confidence interval needs at least two scores, got {0}")]
    TooFewScores(usize),
    #[error("every grid configuration failed: {}", .0.join("; "))]
    AllConfigurationsFailed(Vec<String>),
    #[error("invalid benchmark configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV output: {0}")]
    Csv(#[from] csv::Error),
}

/// Number of training instances for `fraction` of `n`, rounded up.
fn train_size(fraction: f64, n: usize) -> usize {
    // the small offset keeps products such as (2/3)·3 from rounding up past the integer
    ((fraction * n as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Shuffles the multiplicity-expanded instances and puts the first
/// `⌈fraction·N⌉` into the training part.
pub fn split(db: &SequenceDatabase, fraction: f64, seed: u64) -> Result<(SequenceDatabase, SequenceDatabase), HarnessError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(HarnessError::Split(format!("fraction {fraction} outside (0, 1)")));
    }
    let mut instances: Vec<&Sequence> = db.instances().collect();
    if instances.len() < 2 {
        return Err(HarnessError::Split(format!("{} sequences cannot be split", instances.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    instances.shuffle(&mut rng);
    let n_train = train_size(fraction, instances.len());
    if n_train == 0 || n_train >= instances.len() {
        return Err(HarnessError::Split(format!(
            "fraction {fraction} of {} sequences leaves an empty part",
            instances.len()
        )));
    }
    let (train, test) = instances.split_at(n_train);
    Ok((
        SequenceDatabase::from_sequences(train.iter().map(|s| (*s).clone())),
        SequenceDatabase::from_sequences(test.iter().map(|s| (*s).clone())),
    ))
}

/// 80/20 split of a training set for hyper-parameter validation.
pub fn inner_split(train: &SequenceDatabase, seed: u64) -> Result<(SequenceDatabase, SequenceDatabase), HarnessError> {
    split(train, 0.8, seed)
}

/// `(1/|Σ|) · Σ_a (p(a) − 1[a = actual])²`.
pub fn brier_event(pred: &NextSymbolDistribution, actual: &Symbol) -> Result<f64, HarnessError> {
    let alphabet = pred.alphabet();
    let hit = alphabet
        .index_of(actual)
        .ok_or_else(|| HarnessError::SymbolOutsideAlphabet(actual.clone()))?;
    let sum: f64 = pred
        .probs()
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let target = if i == hit { 1.0 } else { 0.0 };
            (p - target) * (p - target)
        })
        .sum();
    Ok(sum / alphabet.len() as f64)
}

/// Mean Brier score over every prediction point of `test`, multiplicities included.
pub fn evaluate(predictor: &dyn Predictor, test: &SequenceDatabase, include_empty_prefix: bool) -> Result<f64, HarnessError> {
    let points: Vec<(&[Symbol], &Symbol, usize)> = test.weighted_prediction_points(include_empty_prefix).collect();
    let weight: usize = points.iter().map(|p| p.2).sum();
    if weight == 0 {
        return Err(HarnessError::NoPredictionPoints);
    }
    let mut index: HashMap<&[Symbol], usize> = HashMap::new();
    let mut prefixes: Vec<&[Symbol]> = Vec::new();
    for (prefix, _, _) in &points {
        index.entry(prefix).or_insert_with(|| {
            prefixes.push(prefix);
            prefixes.len() - 1
        });
    }
    let predictions = predictor.predict_batch(&prefixes)?;
    let mut total = 0.0;
    for (prefix, actual, n) in &points {
        total += *n as f64 * brier_event(&predictions[index[prefix]], actual)?;
    }
    Ok(total / weight as f64)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CiMode {
    /// Student-t with n − 1 degrees of freedom.
    #[default]
    T,
    Normal,
}

/// Mean and 95% half-width.
pub fn confidence_interval(scores: &[f64], mode: CiMode) -> Result<(f64, f64), HarnessError> {
    let n = scores.len();
    if n < 2 {
        return Err(HarnessError::TooFewScores(n));
    }
    let mean = scores.iter().sum::<f64>() / n as f64;
    if scores.iter().all(|&s| s == scores[0]) {
        return Ok((scores[0], 0.0));
    }
    let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1) as f64;
    let q = match mode {
        CiMode::T => StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("df ≥ 1").inverse_cdf(0.975),
        CiMode::Normal => Normal::standard().inverse_cdf(0.975),
    };
    Ok((mean, q * var.sqrt() / (n as f64).sqrt()))
}

pub struct GridOutcome {
    pub index: usize,
    pub spec: MethodSpec,
    /// Validation score per configuration, or the reason it failed.
    pub scores: Vec<Result<f64, String>>,
    pub model: FittedModel,
}

/// Fits every configuration on an inner training split, keeps the lowest
/// validation score (first wins ties) and refits it on all of `train`.
pub fn grid_search(
    configs: &[MethodSpec],
    train: &SequenceDatabase,
    alphabet: &Alphabet,
    seed: u64,
    include_empty_prefix: bool,
) -> Result<GridOutcome, HarnessError> {
    if configs.is_empty() {
        return Err(HarnessError::Config("empty grid".into()));
    }
    let (inner, validation) = inner_split(train, seed ^ 0x9E37_79B9_7F4A_7C15)?;
    let scores: Vec<Result<f64, String>> = configs
        .par_iter()
        .map(|spec| {
            let model = spec.fit(&inner, alphabet, seed).map_err(|e| format!("{spec}: {e}"))?;
            evaluate(&model, &validation, include_empty_prefix).map_err(|e| format!("{spec}: {e}"))
        })
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.iter().enumerate() {
        if let Ok(v) = s {
            if best.is_none_or(|(_, b)| *v < b) {
                best = Some((i, *v));
            }
        }
    }
    let Some((index, _)) = best else {
        return Err(HarnessError::AllConfigurationsFailed(
            scores.into_iter().filter_map(Result::err).collect(),
        ));
    };
    let spec = configs[index].clone();
    let model = spec.fit(train, alphabet, seed)?;
    Ok(GridOutcome { index, spec, scores, model })
}

/// Log with strong sequential structure: the opening symbol decides the
/// closing one several steps later.
pub fn synthetic_database(sequences: usize, seed: u64) -> SequenceDatabase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut db = SequenceDatabase::new();
    for _ in 0..sequences {
        let upper = rng.random::<f64>() < 0.7;
        let mut s = vec![if upper { "a" } else { "b" }];
        loop {
            let first = if upper { rng.random::<f64>() < 0.85 } else { rng.random::<f64>() < 0.15 };
            s.push(if first { "c" } else { "d" });
            if rng.random::<f64>() < 0.4 {
                break;
            }
            s.push("e");
        }
        let expected = rng.random::<f64>() < 0.9;
        s.push(if upper == expected { "f" } else { "g" });
        db.add(Sequence::new(s.into_iter().map(Symbol::new).collect()), 1);
    }
    db
}

fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3]
}

fn default_fraction() -> f64 {
    2.0 / 3.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub sequences: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub name: String,
    pub path: Option<PathBuf>,
    pub synthetic: Option<SyntheticSpec>,
    /// `line` or `csv`; inferred from the extension when absent.
    pub format: Option<String>,
    pub case_column: Option<String>,
    pub activity_column: Option<String>,
    pub timestamp_column: Option<String>,
}

impl DatasetConfig {
    pub fn load(&self, base: &Path) -> Result<SequenceDatabase, HarnessError> {
        match (&self.path, &self.synthetic) {
            (Some(_), Some(_)) | (None, None) => Err(HarnessError::Config(format!(
                "dataset `{}` needs exactly one of `path` and `synthetic`",
                self.name
            ))),
            (None, Some(s)) => Ok(synthetic_database(s.sequences, s.seed)),
            (Some(p), None) => {
                let path = if p.is_absolute() { p.clone() } else { base.join(p) };
                let format = match self.format.as_deref() {
                    None => LogFormat::from_path(&path),
                    Some("line") => LogFormat::Line,
                    Some("csv") => LogFormat::Csv,
                    Some(f) => return Err(HarnessError::Config(format!("unknown log format `{f}`"))),
                };
                let mut opts = IngestionOptions::default();
                if let Some(c) = &self.case_column {
                    opts.case_column = c.clone();
                }
                if let Some(c) = &self.activity_column {
                    opts.activity_column = c.clone();
                }
                if let Some(c) = &self.timestamp_column {
                    opts.timestamp_column = c.clone();
                }
                Ok(load_database(&path, format, &opts)?)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    pub name: String,
    #[serde(flatten)]
    pub spec: MethodSpec,
    pub grid: Option<GridSpec>,
    /// Search the method's default grid when no explicit grid is given.
    #[serde(default)]
    pub tune: bool,
}

impl MethodConfig {
    /// `None` when the method is fitted directly without a search.
    pub fn configurations(&self) -> Result<Option<Vec<MethodSpec>>, HarnessError> {
        let grid = match (&self.grid, self.tune) {
            (Some(g), _) => g.clone(),
            (None, true) => GridSpec::default_for(&self.spec)
                .ok_or_else(|| HarnessError::Config(format!("method `{}` has no default grid", self.name)))?,
            (None, false) => return Ok(None),
        };
        Ok(Some(grid.configurations(&self.spec)?))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub include_empty_prefix: bool,
    #[serde(default)]
    pub ci: CiMode,
    pub output_dir: Option<PathBuf>,
    pub datasets: Vec<DatasetConfig>,
    pub methods: Vec<MethodConfig>,
}

impl BenchConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let config: BenchConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.seeds.is_empty() {
            return Err(HarnessError::Config("at least one seed is required".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(HarnessError::Config(format!("train_fraction {} outside (0, 1)", self.train_fraction)));
        }
        if self.datasets.is_empty() || self.methods.is_empty() {
            return Err(HarnessError::Config("datasets and methods must be nonempty".into()));
        }
        for m in &self.methods {
            m.configurations()?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub dataset: String,
    pub method: String,
    pub rep: usize,
    pub seed: u64,
    pub brier: Result<f64, String>,
    /// Hyper-parameters actually used (the grid winner when searching).
    pub params: String,
    pub runtime: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub dataset: String,
    pub method: String,
    pub scores: Vec<f64>,
    pub mean: Option<f64>,
    /// `None` when fewer than two repetitions succeeded.
    pub half_width: Option<f64>,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkReport {
    pub cells: Vec<CellResult>,
    pub summary: Vec<SummaryRow>,
    pub warnings: Vec<String>,
    pub datasets: Vec<String>,
    pub methods: Vec<String>,
}

impl BenchmarkReport {
    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.brier.is_err()).count()
    }

    pub fn row(&self, dataset: &str, method: &str) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.dataset == dataset && r.method == method)
    }

    /// One line per cell: `method,dataset,rep,seed,brier,params,error`.
    pub fn results_csv(&self) -> Result<String, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["method", "dataset", "rep", "seed", "brier", "params", "error"])?;
        for c in &self.cells {
            let (brier, error) = match &c.brier {
                Ok(b) => (b.to_string(), String::new()),
                Err(e) => (String::new(), e.clone()),
            };
            w.write_record([c.method.as_str(), &c.dataset, &c.rep.to_string(), &c.seed.to_string(), &brier, &c.params, &error])?;
        }
        let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("CSV of UTF-8 fields"))
    }

    /// Method × dataset matrix of `μ ± CI` rounded to four decimals, then runtimes.
    pub fn markdown(&self) -> String {
        let mut out = String::from("# Benchmark results\n\nMean Brier score ± 95% confidence half-width.\n\n");
        let _ = writeln!(out, "| method | {} |", self.datasets.join(" | "));
        let _ = writeln!(out, "|---|{}", "---|".repeat(self.datasets.len()));
        for m in &self.methods {
            let cells: Vec<String> = self
                .datasets
                .iter()
                .map(|d| match self.row(d, m) {
                    Some(SummaryRow { mean: Some(mu), half_width: Some(hw), .. }) => format!("{mu:.4} ± {hw:.4}"),
                    Some(SummaryRow { mean: Some(mu), .. }) => format!("{mu:.4} (n<2)"),
                    _ => "failed".to_string(),
                })
                .collect();
            let _ = writeln!(out, "| {m} | {} |", cells.join(" | "));
        }
        out.push_str("\n## Runtime (seconds, summed over repetitions)\n\n");
        let _ = writeln!(out, "| method | {} |", self.datasets.join(" | "));
        let _ = writeln!(out, "|---|{}", "---|".repeat(self.datasets.len()));
        for m in &self.methods {
            let cells: Vec<String> = self
                .datasets
                .iter()
                .map(|d| {
                    let secs: f64 = self
                        .cells
                        .iter()
                        .filter(|c| &c.dataset == d && &c.method == m)
                        .map(|c| c.runtime.as_secs_f64())
                        .sum();
                    format!("{secs:.2}")
                })
                .collect();
            let _ = writeln!(out, "| {m} | {} |", cells.join(" | "));
        }
        out
    }

    pub fn write_outputs(&self, dir: &Path) -> Result<(), HarnessError> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("results.csv"), self.results_csv()?)?;
        std::fs::write(dir.join("report.md"), self.markdown())?;
        let mut warnings = self.warnings.join("\n");
        if !warnings.is_empty() {
            warnings.push('\n');
        }
        std::fs::write(dir.join("warnings.log"), warnings)?;
        Ok(())
    }
}

fn run_cell(
    db: &SequenceDatabase,
    alphabet: &Alphabet,
    method: &MethodConfig,
    seed: u64,
    config: &BenchConfig,
) -> (Result<f64, String>, String) {
    let run = || -> Result<(f64, String), HarnessError> {
        let (train, test) = split(db, config.train_fraction, seed)?;
        let (model, params) = match method.configurations()? {
            None => (method.spec.fit(&train, alphabet, seed)?, method.spec.params()),
            Some(configs) => {
                let outcome = grid_search(&configs, &train, alphabet, seed, config.include_empty_prefix)?;
                (outcome.model, outcome.spec.params())
            }
        };
        Ok((evaluate(&model, &test, config.include_empty_prefix)?, params))
    };
    match run() {
        Ok((b, p)) => (Ok(b), p),
        Err(e) => (Err(e.to_string()), method.spec.params()),
    }
}

/// Runs every dataset × method × repetition cell; failures are confined to their cell.
pub fn run_benchmark(config: &BenchConfig, base: &Path) -> Result<BenchmarkReport, HarnessError> {
    config.validate()?;
    let datasets: Vec<Result<(SequenceDatabase, Alphabet), String>> = config
        .datasets
        .iter()
        .map(|d| {
            d.load(base)
                .map(|db| {
                    let alphabet = db.alphabet();
                    (db, alphabet)
                })
                .map_err(|e| format!("dataset `{}`: {e}", d.name))
        })
        .collect();

    let mut jobs = Vec::new();
    for d in 0..config.datasets.len() {
        for m in 0..config.methods.len() {
            for (rep, &seed) in config.seeds.iter().enumerate() {
                jobs.push((d, m, rep, seed));
            }
        }
    }
    let cells: Vec<CellResult> = jobs
        .par_iter()
        .map(|&(d, m, rep, seed)| {
            let method = &config.methods[m];
            let start = Instant::now();
            let (brier, params) = match &datasets[d] {
                Ok((db, alphabet)) => run_cell(db, alphabet, method, seed, config),
                Err(e) => (Err(e.clone()), method.spec.params()),
            };
            CellResult {
                dataset: config.datasets[d].name.clone(),
                method: method.name.clone(),
                rep,
                seed,
                brier,
                params,
                runtime: start.elapsed(),
            }
        })
        .collect();

    let mut warnings: Vec<String> = datasets.iter().filter_map(|d| d.as_ref().err().cloned()).collect();
    let mut summary = Vec::new();
    for d in &config.datasets {
        for m in &config.methods {
            let group: Vec<&CellResult> = cells.iter().filter(|c| c.dataset == d.name && c.method == m.name).collect();
            let scores: Vec<f64> = group.iter().filter_map(|c| c.brier.as_ref().ok().copied()).collect();
            let failures = group.len() - scores.len();
            for c in group.iter().filter(|c| c.brier.is_err()) {
                warnings.push(format!("{} / {} rep {}: {}", c.dataset, c.method, c.rep, c.brier.as_ref().unwrap_err()));
            }
            let mean = (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64);
            let half_width = confidence_interval(&scores, config.ci).ok().map(|(_, h)| h);
            if scores.len() == 1 {
                warnings.push(format!("{} / {}: a single repetition gives no confidence interval (n<2)", d.name, m.name));
            }
            summary.push(SummaryRow { dataset: d.name.clone(), method: m.name.clone(), scores, mean, half_width, failures });
        }
    }
    warnings.dedup();
    Ok(BenchmarkReport {
        cells,
        summary,
        warnings,
        datasets: config.datasets.iter().map(|d| d.name.clone()).collect(),
        methods: config.methods.iter().map(|m| m.name.clone()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictors::RandomBaseline;
    use approx::assert_relative_eq;

    #[test]
    fn split_sizes_and_determinism() {
        let db = SequenceDatabase::from_counts(&[("a", 1), ("b", 1), ("c", 1)]);
        let (train, test) = split(&db, 2.0 / 3.0, 5).unwrap();
        assert_eq!((train.total_sequences(), test.total_sequences()), (2, 1));
        let again = split(&db, 2.0 / 3.0, 5).unwrap();
        assert_eq!((train, test), again);
        assert!(split(&SequenceDatabase::from_counts(&[("a", 1)]), 0.5, 0).is_err());
        assert!(split(&db, 1.0, 0).is_err());
    }

    #[test]
    fn duplicated_instances_can_separate() {
        let db = SequenceDatabase::from_counts(&[("a b", 2)]);
        for seed in 0..8 {
            let (train, test) = split(&db, 0.5, seed).unwrap();
            assert_eq!(train.multiplicity(&Sequence::parse("a b")), 1);
            assert_eq!(test.multiplicity(&Sequence::parse("a b")), 1);
        }
    }

    #[test]
    fn inner_split_sizes() {
        let db = synthetic_database(10, 1);
        let (inner, val) = inner_split(&db, 3).unwrap();
        assert_eq!((inner.total_sequences(), val.total_sequences()), (8, 2));
        for (s, n) in inner.iter() {
            assert!(db.multiplicity(s) >= n);
        }
        let big = synthetic_database(100, 1);
        let (train, _) = split(&big, 2.0 / 3.0, 1).unwrap();
        let (inner, val) = inner_split(&train, 1).unwrap();
        assert!((inner.total_sequences() as i64 - 53).abs() <= 2);
        assert!((val.total_sequences() as i64 - 13).abs() <= 2);
    }

    #[test]
    fn brier_examples() {
        let abc = Alphabet::from_names(&["a", "b", "c"]);
        let d = NextSymbolDistribution::new(abc.clone(), vec![0.5, 0.5, 0.0]).unwrap();
        assert_relative_eq!(brier_event(&d, &Symbol::new("a")).unwrap(), 1.0 / 6.0);
        let one_hot = NextSymbolDistribution::point(&abc, &Symbol::new("b")).unwrap();
        assert_eq!(brier_event(&one_hot, &Symbol::new("b")).unwrap(), 0.0);
        assert_relative_eq!(brier_event(&one_hot, &Symbol::new("c")).unwrap(), 2.0 / 3.0);
        assert!(brier_event(&d, &Symbol::new("z")).is_err());

        let names: Vec<String> = (0..23).map(|i| format!("s{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let sigma = Alphabet::from_names(&refs);
        let u = NextSymbolDistribution::uniform(&sigma);
        assert_relative_eq!(brier_event(&u, &Symbol::new("s3")).unwrap(), 22.0 / 529.0, epsilon = 1e-15);
    }

    #[test]
    fn random_baseline_closed_form() {
        let db = synthetic_database(30, 4);
        let alphabet = db.alphabet();
        let n = alphabet.len() as f64;
        let score = evaluate(&RandomBaseline::new(&alphabet).unwrap(), &db, false).unwrap();
        assert!((score - (n - 1.0) / (n * n)).abs() < 1e-12);
        assert!(matches!(
            evaluate(&RandomBaseline::new(&alphabet).unwrap(), &SequenceDatabase::from_counts(&[("a", 4)]), false),
            Err(HarnessError::NoPredictionPoints)
        ));
    }

    #[test]
    fn confidence_intervals() {
        let (mu, hw) = confidence_interval(&[0.1, 0.2, 0.3], CiMode::T).unwrap();
        assert_relative_eq!(mu, 0.2, epsilon = 1e-12);
        assert!((hw - 4.302_652_7 * 0.1 / 3f64.sqrt()).abs() < 1e-6);
        assert_eq!(confidence_interval(&[0.05, 0.05, 0.05], CiMode::T).unwrap().1, 0.0);
        let (_, hw) = confidence_interval(&[0.0, 0.2], CiMode::T).unwrap();
        assert!((hw - 1.270_620_5).abs() < 1e-5);
        let (_, hw) = confidence_interval(&[0.1, 0.2, 0.3], CiMode::Normal).unwrap();
        assert!((hw - 1.959_964 * 0.1 / 3f64.sqrt()).abs() < 1e-6);
        assert!(matches!(confidence_interval(&[0.1], CiMode::T), Err(HarnessError::TooFewScores(1))));
    }

    #[test]
    fn proportional_on_its_training_data() {
        let db = SequenceDatabase::from_counts(&[("a a", 1), ("a b", 1)]);
        let alphabet = db.alphabet();
        let model = crate::predictors::ProportionalBaseline::fit(&db, &alphabet).unwrap();
        // frequencies (3/4, 1/4); points: a after ⟨a⟩ and b after ⟨a⟩
        let hit_a = ((0.75f64 - 1.0).powi(2) + 0.25f64.powi(2)) / 2.0;
        let hit_b = (0.75f64.powi(2) + (0.25f64 - 1.0).powi(2)) / 2.0;
        assert_relative_eq!(evaluate(&model, &db, false).unwrap(), (hit_a + hit_b) / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn grid_search_prefers_the_model_that_fits() {
        // the symbol two steps back decides the next one, which order 1 cannot see
        let db = SequenceDatabase::from_counts(&[("x a c", 20), ("y a d", 20)]);
        let alphabet = db.alphabet();
        let configs = GridSpec { order: Some(vec![1, 2]), ..GridSpec::default() }
            .configurations(&MethodSpec::Markov { order: 1 })
            .unwrap();
        let outcome = grid_search(&configs, &db, &alphabet, 7, false).unwrap();
        assert_eq!(outcome.spec, MethodSpec::Markov { order: 2 });
        let scores: Vec<f64> = outcome.scores.iter().map(|s| *s.as_ref().unwrap()).collect();
        assert!(scores[1] < scores[0]);
        assert_eq!(grid_search(&configs, &db, &alphabet, 7, false).unwrap().index, outcome.index);

        let single = grid_search(&configs[..1], &db, &alphabet, 7, false).unwrap();
        assert_eq!(single.index, 0);
        assert_eq!(single.model, MethodSpec::Markov { order: 1 }.fit(&db, &alphabet, 7).unwrap());
    }

    fn small_config(methods: &str, seeds: &str) -> BenchConfig {
        BenchConfig::from_toml(&format!(
            "seeds = {seeds}\n[[datasets]]\nname = \"syn\"\nsynthetic = {{ sequences = 150, seed = 11 }}\n{methods}"
        ))
        .unwrap()
    }

    #[test]
    fn benchmark_ordering_and_determinism() {
        let methods = "[[methods]]\nname = \"random\"\nmethod = \"random\"\n\
                       [[methods]]\nname = \"proportional\"\nmethod = \"proportional\"\n\
                       [[methods]]\nname = \"markov1\"\nmethod = \"markov\"\norder = 1\n";
        let config = small_config(methods, "[1, 2, 3]");
        let report = run_benchmark(&config, Path::new(".")).unwrap();
        assert_eq!(report.failed_cells(), 0);
        let mu = |m: &str| report.row("syn", m).unwrap().mean.unwrap();
        assert!(mu("markov1") <= mu("proportional") && mu("proportional") <= mu("random"));
        let again = run_benchmark(&config, Path::new(".")).unwrap();
        assert_eq!(report.results_csv().unwrap(), again.results_csv().unwrap());
        assert!(report.markdown().contains(" ± "));
    }

    #[test]
    fn single_repetition_is_flagged() {
        let config = small_config("[[methods]]\nname = \"random\"\nmethod = \"random\"\n", "[4]");
        let report = run_benchmark(&config, Path::new(".")).unwrap();
        assert_eq!(report.row("syn", "random").unwrap().half_width, None);
        assert!(report.markdown().contains("(n<2)"));
        assert!(report.warnings.iter().any(|w| w.contains("n<2")));
    }

    #[test]
    fn cell_failures_are_isolated() {
        let mut config = small_config("[[methods]]\nname = \"random\"\nmethod = \"random\"\n", "[1, 2]");
        config.datasets.push(DatasetConfig {
            name: "missing".into(),
            path: Some("no/such/file.txt".into()),
            synthetic: None,
            format: None,
            case_column: None,
            activity_column: None,
            timestamp_column: None,
        });
        let report = run_benchmark(&config, Path::new(".")).unwrap();
        assert_eq!(report.failed_cells(), 2);
        assert!(report.row("syn", "random").unwrap().half_width.is_some());
        assert!(report.results_csv().unwrap().lines().filter(|l| l.contains("missing")).count() == 2);
    }

    #[test]
    fn config_parsing() {
        let text = r#"
            seeds = [1, 2]
            [[datasets]]
            name = "syn"
            synthetic = { sequences = 50, seed = 3 }
            [[methods]]
            name = "akom"
            method = "akom"
            k_max = 1
            grid = { k_max = [1, 2] }
            [[methods]]
            name = "random"
            method = "random"
        "#;
        let config = BenchConfig::from_toml(text).unwrap();
        assert_eq!(config.train_fraction, 2.0 / 3.0);
        assert_eq!(config.methods[0].configurations().unwrap().unwrap().len(), 2);
        assert_eq!(config.methods[1].configurations().unwrap(), None);
        assert!(BenchConfig::from_toml("seeds = []\ndatasets = []\nmethods = []").is_err());
    }
}
