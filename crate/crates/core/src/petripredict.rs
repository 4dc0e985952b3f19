//! Next-symbol prediction with an accepting Petri net: a prefix is mapped to
//! a marking by prefix-alignment, and the marking to a label distribution by
//! walking through τ-transitions until a labelled transition fires.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alignment::{AlignError, Aligner, Alignment, MoveCostScheme, MoveKind, SearchBudget};
use crate::eventlog::{Alphabet, Sequence, SequenceDatabase, Symbol};
use crate::petrinet::{AcceptingPetriNet, Marking};
use crate::predictors::{check_alphabet, entries, NextSymbolDistribution, PredictError, Predictor};

const WALK_CHUNK: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PetriMode {
    Uniform,
    Empirical,
}

/// Which moves of a training alignment's extension step get counted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CreditMode {
    /// Every transition fired in the step, at the marking it fires from.
    #[default]
    All,
    /// Only the synchronous move on the next symbol.
    Strict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Evaluation {
    /// Exact when the τ-closure is small and acyclic, sampling otherwise.
    #[default]
    Auto,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PetriPredictorConfig {
    pub mode: PetriMode,
    pub iterations: usize,
    pub seed: u64,
    pub alpha: f64,
    pub tau_depth_limit: usize,
    pub evaluation: Evaluation,
    pub exact_max_markings: usize,
    pub credit: CreditMode,
}

impl Default for PetriPredictorConfig {
    fn default() -> Self {
        PetriPredictorConfig {
            mode: PetriMode::Uniform,
            iterations: 10_000,
            seed: 0,
            alpha: 0.5,
            tau_depth_limit: 1_000,
            evaluation: Evaluation::Auto,
            exact_max_markings: 64,
            credit: CreditMode::All,
        }
    }
}

impl PetriPredictorConfig {
    pub fn validate(&self) -> Result<(), PredictError> {
        if self.iterations == 0 {
            return Err(PredictError::InvalidParameter("Monte Carlo iterations must be positive".into()));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(PredictError::InvalidParameter(format!("smoothing α = {}", self.alpha)));
        }
        if self.tau_depth_limit == 0 {
            return Err(PredictError::InvalidParameter("τ-chain depth limit must be positive".into()));
        }
        Ok(())
    }
}

/// Per-marking firing counts learned from training alignments.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MarkingDistributionTable {
    #[serde(with = "entries")]
    entries: BTreeMap<Marking, BTreeMap<usize, u64>>,
    /// Prediction points skipped because their alignment failed.
    pub failed_points: u64,
    pub failures: Vec<String>,
}

impl MarkingDistributionTable {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, m: &Marking, t: usize) -> u64 {
        self.entries.get(m).and_then(|e| e.get(&t)).copied().unwrap_or(0)
    }

    pub fn counts(&self, m: &Marking) -> Option<&BTreeMap<usize, u64>> {
        self.entries.get(m)
    }

    pub fn markings(&self) -> impl Iterator<Item = (&Marking, &BTreeMap<usize, u64>)> {
        self.entries.iter()
    }

    pub fn add(&mut self, m: Marking, t: usize, n: u64) {
        *self.entries.entry(m).or_default().entry(t).or_insert(0) += n;
    }

    fn merge(&mut self, other: MarkingDistributionTable) {
        for (m, ts) in other.entries {
            let e = self.entries.entry(m).or_default();
            for (t, n) in ts {
                *e.entry(t).or_insert(0) += n;
            }
        }
        self.failed_points += other.failed_points;
        self.failures.extend(other.failures);
    }
}

/// Transitions credited for predicting the last symbol of `prefix` from
/// the rest, replayed along the prefix-alignment of the whole `prefix`.
fn credited_moves(apn: &AcceptingPetriNet, alignment: &Alignment, mode: CreditMode) -> Vec<(Marking, usize)> {
    let consumed_before = alignment
        .moves
        .iter()
        .filter(|mv| mv.kind != MoveKind::ModelMove)
        .count()
        .saturating_sub(1);
    let mut m = apn.initial.clone();
    let mut consumed = 0;
    let mut out = Vec::new();
    for mv in &alignment.moves {
        let step = consumed >= consumed_before;
        if let Some(t) = mv.transition {
            let credit = step && (mode == CreditMode::All || mv.kind == MoveKind::Synchronous);
            if credit {
                out.push((m.clone(), t));
            }
            m = apn.net.fire(&m, t).expect("alignment moves are firable");
        }
        if mv.kind != MoveKind::ModelMove {
            consumed += 1;
        }
    }
    out
}

/// Counts, for every training prediction point, the transitions fired to
/// explain the next symbol. Distinct prefixes are aligned once, in parallel.
pub fn train_marking_distributions(
    apn: &AcceptingPetriNet,
    train: &SequenceDatabase,
    costs: MoveCostScheme,
    budget: SearchBudget,
    mode: CreditMode,
) -> Result<MarkingDistributionTable, AlignError> {
    costs.validate()?;
    let mut weights: HashMap<&[Symbol], u64> = HashMap::new();
    for (seq, n) in train.iter() {
        for k in 1..=seq.len() {
            *weights.entry(&seq[..k]).or_insert(0) += n as u64;
        }
    }
    let mut prefixes: Vec<(&[Symbol], u64)> = weights.into_iter().collect();
    prefixes.sort();
    let table = prefixes
        .par_iter()
        .fold(
            || (None::<Aligner>, MarkingDistributionTable::default()),
            |(aligner, mut table), &(prefix, n)| {
                let aligner = aligner.unwrap_or_else(|| Aligner::new(apn, costs, budget).expect("validated costs"));
                match aligner.prefix_align(prefix) {
                    Ok(a) => {
                        for (m, t) in credited_moves(apn, &a, mode) {
                            table.add(m, t, n);
                        }
                    }
                    Err(e) => {
                        table.failed_points += n;
                        table.failures.push(format!("{}: {e}", Sequence::new(prefix.to_vec())));
                    }
                }
                (Some(aligner), table)
            },
        )
        .map(|(_, t)| t)
        .reduce(MarkingDistributionTable::default, |mut a, b| {
            a.merge(b);
            a
        });
    let mut table = table;
    table.failures.sort();
    if table.failed_points > 0 {
        log::warn!("{} training prediction points skipped after alignment failures", table.failed_points);
    }
    Ok(table)
}

/// Firing probabilities of the transitions enabled in `m`, in index order.
/// Unseen markings and missing tables give the uniform distribution.
pub fn marking_transition_distribution(
    apn: &AcceptingPetriNet,
    m: &Marking,
    table: Option<&MarkingDistributionTable>,
    alpha: f64,
) -> Vec<(usize, f64)> {
    let enabled = apn.net.enabled_transitions(m);
    if enabled.is_empty() {
        return Vec::new();
    }
    let uniform = || enabled.iter().map(|&t| (t, 1.0 / enabled.len() as f64)).collect();
    let Some(counts) = table.and_then(|t| t.counts(m)) else {
        return uniform();
    };
    let weights: Vec<f64> = enabled
        .iter()
        .map(|t| counts.get(t).copied().unwrap_or(0) as f64 + alpha)
        .collect();
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return uniform();
    }
    enabled.iter().zip(weights).map(|(&t, w)| (t, w / total)).collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkStats {
    pub exact: bool,
    pub walks: u64,
    /// Walks cut off by the τ-chain depth limit and resampled.
    pub aborted: u64,
    /// Walks that reached a marking without enabled transitions.
    pub dead: u64,
    /// Walks that fired a label outside the alphabet.
    pub unmapped: u64,
    /// No label could be credited; the distribution is uniform over Σ.
    pub fallback: bool,
}

impl WalkStats {
    pub fn abort_ratio(&self) -> f64 {
        if self.walks + self.aborted == 0 {
            0.0
        } else {
            self.aborted as f64 / (self.walks + self.aborted) as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PetriPrediction {
    pub distribution: NextSymbolDistribution,
    pub marking: Marking,
    pub stats: WalkStats,
}

enum Visit {
    Open,
    Done(Vec<f64>, f64),
}

/// Exact label distribution over the τ-closure of `m`: per-label mass plus
/// the mass of walks that end in a dead marking. `None` when the closure
/// is cyclic or larger than `limit`.
fn exact_closure(
    apn: &AcceptingPetriNet,
    m: &Marking,
    alphabet: &Alphabet,
    table: Option<&MarkingDistributionTable>,
    alpha: f64,
    limit: usize,
) -> Option<(Vec<f64>, f64, f64)> {
    fn visit(
        ctx: &(&AcceptingPetriNet, &Alphabet, Option<&MarkingDistributionTable>, f64, usize),
        m: &Marking,
        seen: &mut HashMap<Marking, Visit>,
    ) -> Option<(Vec<f64>, f64)> {
        let (apn, alphabet, table, alpha, limit) = *ctx;
        match seen.get(m) {
            Some(Visit::Open) => return None,
            Some(Visit::Done(p, d)) => return Some((p.clone(), *d)),
            None => {}
        }
        if seen.len() >= limit {
            return None;
        }
        seen.insert(m.clone(), Visit::Open);
        let mut probs = vec![0.0; alphabet.len() + 1];
        let dist = marking_transition_distribution(apn, m, table, alpha);
        let mut dead = if dist.is_empty() { 1.0 } else { 0.0 };
        for (t, p) in dist {
            match apn.net.label(t) {
                // last slot collects labels outside the alphabet
                Some(l) => probs[alphabet.index_of(l).unwrap_or(alphabet.len())] += p,
                None => {
                    let next = apn.net.fire(m, t).expect("enabled");
                    let (sub, sub_dead) = visit(ctx, &next, seen)?;
                    for (a, b) in probs.iter_mut().zip(sub) {
                        *a += p * b;
                    }
                    dead += p * sub_dead;
                }
            }
        }
        seen.insert(m.clone(), Visit::Done(probs.clone(), dead));
        Some((probs, dead))
    }
    let mut seen = HashMap::new();
    let (mut probs, dead) = visit(&(apn, alphabet, table, alpha, limit), m, &mut seen)?;
    let unmapped = probs.pop().expect("extra slot");
    Some((probs, dead, unmapped))
}

#[derive(Default)]
struct WalkCounts {
    labels: Vec<u64>,
    aborted: u64,
    dead: u64,
    unmapped: u64,
}

impl WalkCounts {
    fn add(mut self, other: WalkCounts) -> WalkCounts {
        if self.labels.is_empty() {
            self.labels = other.labels;
        } else {
            for (a, b) in self.labels.iter_mut().zip(other.labels) {
                *a += b;
            }
        }
        self.aborted += other.aborted;
        self.dead += other.dead;
        self.unmapped += other.unmapped;
        self
    }
}

fn sample(dist: &[(usize, f64)], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for &(t, p) in dist {
        acc += p;
        if u < acc {
            return t;
        }
    }
    dist.last().expect("nonempty").0
}

fn monte_carlo(
    apn: &AcceptingPetriNet,
    m: &Marking,
    alphabet: &Alphabet,
    table: Option<&MarkingDistributionTable>,
    config: &PetriPredictorConfig,
) -> WalkCounts {
    let chunks = config.iterations.div_ceil(WALK_CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(c as u64);
            let walks = WALK_CHUNK.min(config.iterations - c * WALK_CHUNK);
            let mut counts = WalkCounts { labels: vec![0; alphabet.len()], ..WalkCounts::default() };
            let mut dist_cache: HashMap<Marking, Vec<(usize, f64)>> = HashMap::new();
            let mut done = 0;
            // a walk cut off by the depth limit is resampled, up to a bounded number of retries
            let mut retries = 10 * walks;
            while done < walks {
                let mut cur = m.clone();
                let mut depth = 0;
                let outcome = loop {
                    let dist = dist_cache
                        .entry(cur.clone())
                        .or_insert_with(|| marking_transition_distribution(apn, &cur, table, config.alpha));
                    if dist.is_empty() {
                        break Some(None);
                    }
                    let t = sample(dist, &mut rng);
                    if let Some(l) = apn.net.label(t) {
                        break Some(Some(l));
                    }
                    depth += 1;
                    if depth > config.tau_depth_limit {
                        break None;
                    }
                    cur = apn.net.fire(&cur, t).expect("enabled");
                };
                match outcome {
                    None => {
                        counts.aborted += 1;
                        if retries == 0 {
                            done += 1;
                        } else {
                            retries -= 1;
                        }
                        continue;
                    }
                    Some(None) => counts.dead += 1,
                    Some(Some(l)) => match alphabet.index_of(l) {
                        Some(i) => counts.labels[i] += 1,
                        None => counts.unmapped += 1,
                    },
                }
                done += 1;
            }
            counts
        })
        .reduce(WalkCounts::default, WalkCounts::add)
}

/// Label distribution of the first visible transition fired from `m`.
/// Walks that die without a label are dropped and the rest renormalized.
pub fn next_symbol_distribution(
    apn: &AcceptingPetriNet,
    m: &Marking,
    alphabet: &Alphabet,
    table: Option<&MarkingDistributionTable>,
    config: &PetriPredictorConfig,
) -> PetriPrediction {
    let table = match config.mode {
        PetriMode::Uniform => None,
        PetriMode::Empirical => table,
    };
    let mut stats = WalkStats::default();
    let uniform = NextSymbolDistribution::uniform(alphabet);
    if apn.net.enabled_transitions(m).is_empty() {
        stats.fallback = true;
        return PetriPrediction { distribution: uniform, marking: m.clone(), stats };
    }
    let exact = match config.evaluation {
        Evaluation::Auto => exact_closure(apn, m, alphabet, table, config.alpha, config.exact_max_markings),
        Evaluation::MonteCarlo => None,
    };
    let weights = match exact {
        Some((probs, dead, unmapped)) => {
            stats.exact = true;
            stats.dead = u64::from(dead > 0.0);
            stats.unmapped = u64::from(unmapped > 0.0);
            probs
        }
        None => {
            let counts = monte_carlo(apn, m, alphabet, table, config);
            stats.walks = config.iterations as u64;
            stats.aborted = counts.aborted;
            stats.dead = counts.dead;
            stats.unmapped = counts.unmapped;
            if stats.abort_ratio() > 0.1 {
                log::warn!("{:.1}% of walks from {} hit the τ-chain depth limit", 100.0 * stats.abort_ratio(), apn.net.format_marking(m));
            }
            counts.labels.iter().map(|&c| c as f64).collect()
        }
    };
    let distribution = NextSymbolDistribution::from_weights(alphabet, &weights).unwrap_or_else(|| {
        stats.fallback = true;
        uniform
    });
    PetriPrediction { distribution, marking: m.clone(), stats }
}

/// Prefix-alignment followed by [`next_symbol_distribution`].
pub fn petri_predict(
    aligner: &Aligner<'_>,
    prefix: &[Symbol],
    alphabet: &Alphabet,
    table: Option<&MarkingDistributionTable>,
    config: &PetriPredictorConfig,
) -> Result<PetriPrediction, PredictError> {
    let apn = aligner.net();
    let alignment = aligner.prefix_align(prefix).map_err(|source| PredictError::Alignment {
        prefix: Sequence::new(prefix.to_vec()).to_string(),
        source,
    })?;
    Ok(next_symbol_distribution(apn, &alignment.final_marking, alphabet, table, config))
}

/// Fitted Petri-net predictor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PetriPredictor {
    #[serde(skip, default = "empty_net")]
    apn: AcceptingPetriNet,
    alphabet: Alphabet,
    table: Option<MarkingDistributionTable>,
    config: PetriPredictorConfig,
    costs: MoveCostScheme,
    budget: SearchBudget,
}

fn empty_net() -> AcceptingPetriNet {
    let net = crate::petrinet::LabeledPetriNet::new();
    let m = net.empty_marking();
    AcceptingPetriNet::new(net, m.clone(), m).expect("empty markings fit the empty net")
}

impl PetriPredictor {
    pub fn fit(
        apn: AcceptingPetriNet,
        train: &SequenceDatabase,
        alphabet: &Alphabet,
        config: PetriPredictorConfig,
        costs: MoveCostScheme,
        budget: SearchBudget,
    ) -> Result<Self, PredictError> {
        check_alphabet(alphabet)?;
        config.validate()?;
        let table = match config.mode {
            PetriMode::Uniform => None,
            PetriMode::Empirical => Some(
                train_marking_distributions(&apn, train, costs, budget, config.credit).map_err(|source| {
                    PredictError::Alignment { prefix: String::new(), source }
                })?,
            ),
        };
        Ok(PetriPredictor { apn, alphabet: alphabet.clone(), table, config, costs, budget })
    }

    pub fn net(&self) -> &AcceptingPetriNet {
        &self.apn
    }

    pub(crate) fn set_net(&mut self, apn: AcceptingPetriNet) {
        self.apn = apn;
    }

    pub fn table(&self) -> Option<&MarkingDistributionTable> {
        self.table.as_ref()
    }

    pub fn config(&self) -> &PetriPredictorConfig {
        &self.config
    }

    fn aligner(&self) -> Aligner<'_> {
        Aligner::new(&self.apn, self.costs, self.budget).expect("costs validated at fit")
    }

    pub fn predict_detailed(&self, prefix: &[Symbol]) -> Result<PetriPrediction, PredictError> {
        petri_predict(&self.aligner(), prefix, &self.alphabet, self.table.as_ref(), &self.config)
    }
}

impl Predictor for PetriPredictor {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn predict(&self, prefix: &[Symbol]) -> Result<NextSymbolDistribution, PredictError> {
        Ok(self.predict_detailed(prefix)?.distribution)
    }

    /// Shares one aligner (and its reachability cache) per worker thread.
    fn predict_batch(&self, prefixes: &[&[Symbol]]) -> Result<Vec<NextSymbolDistribution>, PredictError> {
        prefixes
            .par_iter()
            .map_init(
                || self.aligner(),
                |aligner, prefix| {
                    petri_predict(aligner, prefix, &self.alphabet, self.table.as_ref(), &self.config)
                        .map(|p| p.distribution)
                },
            )
            .collect()
    }
}
