//! Probabilistic next-symbol predictors.
//!
//! Every predictor is fitted on a [`SequenceDatabase`] over a fixed
//! [`Alphabet`] and maps a prefix to a [`NextSymbolDistribution`].

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::AlignError;
use crate::eventlog::{Alphabet, SequenceDatabase, Symbol};

pub mod automaton;
pub mod hmm;
pub mod lezi;
pub mod markov;

pub use automaton::{abstraction_of, AbstractionKind, AbstractionState, ProbabilisticAutomaton};
pub use hmm::{HmmConfig, HmmModel, Regularizer};
pub use lezi::ActiveLeZi;
pub use markov::{AkomModel, MarkovModel};

/// Tolerance used when checking that a distribution sums to one.
pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum PredictError {
    #[error("the alphabet is empty")]
    EmptyAlphabet,
    #[error("the training data contains no events")]
    NoTrainingEvents,
    #[error("training symbol `{0}` is not in the alphabet")]
    SymbolOutsideAlphabet(Symbol),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("alignment failed for prefix {prefix}: {source}")]
    Alignment {
        prefix: String,
        #[source]
        source: AlignError,
    },
}

/// Categorical distribution over a fixed alphabet, stored densely in alphabet order.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct NextSymbolDistribution {
    alphabet: Alphabet,
    probs: Vec<f64>,
}

impl NextSymbolDistribution {
    pub fn new(alphabet: Alphabet, probs: Vec<f64>) -> Result<Self, PredictError> {
        let d = NextSymbolDistribution { alphabet, probs };
        d.validate()?;
        Ok(d)
    }

    pub fn uniform(alphabet: &Alphabet) -> Self {
        let n = alphabet.len();
        NextSymbolDistribution { alphabet: alphabet.clone(), probs: vec![1.0 / n as f64; n] }
    }

    pub fn point(alphabet: &Alphabet, symbol: &Symbol) -> Option<Self> {
        let i = alphabet.index_of(symbol)?;
        let mut probs = vec![0.0; alphabet.len()];
        probs[i] = 1.0;
        Some(NextSymbolDistribution { alphabet: alphabet.clone(), probs })
    }

    /// Normalizes non-negative weights; `None` when they sum to zero.
    pub fn from_weights(alphabet: &Alphabet, weights: &[f64]) -> Option<Self> {
        debug_assert_eq!(weights.len(), alphabet.len());
        let total: f64 = weights.iter().sum();
        if !total.is_finite() || total <= 0.0 {
            return None;
        }
        Some(NextSymbolDistribution {
            alphabet: alphabet.clone(),
            probs: weights.iter().map(|w| w / total).collect(),
        })
    }

    pub fn from_counts(alphabet: &Alphabet, counts: &[u64]) -> Option<Self> {
        let w: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        Self::from_weights(alphabet, &w)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of `s`; zero for symbols outside the alphabet.
    pub fn prob(&self, s: &Symbol) -> f64 {
        self.alphabet.index_of(s).map_or(0.0, |i| self.probs[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, f64)> {
        self.alphabet.symbols().iter().zip(self.probs.iter().copied())
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Symbol with the highest probability; ties go to the first in alphabet order.
    pub fn argmax(&self) -> Option<&Symbol> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &p) in self.probs.iter().enumerate() {
            if best.is_none_or(|(_, q)| p > q) {
                best = Some((i, p));
            }
        }
        best.map(|(i, _)| self.alphabet.symbol(i))
    }

    pub fn validate(&self) -> Result<(), PredictError> {
        if self.probs.len() != self.alphabet.len() {
            return Err(PredictError::InvalidDistribution(format!(
                "{} probabilities for {} symbols",
                self.probs.len(),
                self.alphabet.len()
            )));
        }
        if let Some(p) = self.probs.iter().find(|p| !(0.0..=1.0 + SUM_TOLERANCE).contains(*p)) {
            return Err(PredictError::InvalidDistribution(format!("probability {p} out of range")));
        }
        let total = self.total();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(PredictError::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        Ok(())
    }
}

impl fmt::Debug for NextSymbolDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.iter()).finish()
    }
}

impl fmt::Display for NextSymbolDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (s, p)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{s}:{p:.4}")?;
        }
        Ok(())
    }
}

pub trait Predictor: Send + Sync {
    fn alphabet(&self) -> &Alphabet;

    fn predict(&self, prefix: &[Symbol]) -> Result<NextSymbolDistribution, PredictError>;

    fn predict_batch(&self, prefixes: &[&[Symbol]]) -> Result<Vec<NextSymbolDistribution>, PredictError> {
        prefixes.iter().map(|p| self.predict(p)).collect()
    }
}

impl<P: Predictor + ?Sized> Predictor for Box<P> {
    fn alphabet(&self) -> &Alphabet {
        (**self).alphabet()
    }

    fn predict(&self, prefix: &[Symbol]) -> Result<NextSymbolDistribution, PredictError> {
        (**self).predict(prefix)
    }

    fn predict_batch(&self, prefixes: &[&[Symbol]]) -> Result<Vec<NextSymbolDistribution>, PredictError> {
        (**self).predict_batch(prefixes)
    }
}

/// Per-symbol event counts of `db`, checked against `alphabet`.
pub(crate) fn event_counts(db: &SequenceDatabase, alphabet: &Alphabet) -> Result<Vec<u64>, PredictError> {
    let mut counts = vec![0u64; alphabet.len()];
    for (seq, n) in db.iter() {
        for s in seq.iter() {
            let i = alphabet
                .index_of(s)
                .ok_or_else(|| PredictError::SymbolOutsideAlphabet(s.clone()))?;
            counts[i] += n as u64;
        }
    }
    Ok(counts)
}

pub(crate) fn check_alphabet(alphabet: &Alphabet) -> Result<(), PredictError> {
    if alphabet.is_empty() {
        Err(PredictError::EmptyAlphabet)
    } else {
        Ok(())
    }
}

/// Global training frequency of every symbol; the common fallback of the other predictors.
pub(crate) fn proportional_distribution(
    db: &SequenceDatabase,
    alphabet: &Alphabet,
) -> Result<NextSymbolDistribution, PredictError> {
    check_alphabet(alphabet)?;
    let counts = event_counts(db, alphabet)?;
    NextSymbolDistribution::from_counts(alphabet, &counts).ok_or(PredictError::NoTrainingEvents)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomBaseline {
    alphabet: Alphabet,
}

impl RandomBaseline {
    pub fn new(alphabet: &Alphabet) -> Result<Self, PredictError> {
        check_alphabet(alphabet)?;
        Ok(RandomBaseline { alphabet: alphabet.clone() })
    }
}

impl Predictor for RandomBaseline {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn predict(&self, _prefix: &[Symbol]) -> Result<NextSymbolDistribution, PredictError> {
        Ok(NextSymbolDistribution::uniform(&self.alphabet))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProportionalBaseline {
    distribution: NextSymbolDistribution,
}

impl ProportionalBaseline {
    pub fn fit(train: &SequenceDatabase, alphabet: &Alphabet) -> Result<Self, PredictError> {
        Ok(ProportionalBaseline { distribution: proportional_distribution(train, alphabet)? })
    }

    pub fn distribution(&self) -> &NextSymbolDistribution {
        &self.distribution
    }
}

impl Predictor for ProportionalBaseline {
    fn alphabet(&self) -> &Alphabet {
        self.distribution.alphabet()
    }

    fn predict(&self, _prefix: &[Symbol]) -> Result<NextSymbolDistribution, PredictError> {
        Ok(self.distribution.clone())
    }
}

/// Serializes a `BTreeMap` as a list of pairs so that non-string keys survive JSON.
pub(crate) mod entries {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<K: Serialize, V: Serialize, S: Serializer>(
        map: &BTreeMap<K, V>,
        serializer: S,
    ) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(map.iter())
    }

    pub fn deserialize<'de, K, V, D>(deserializer: D) -> Result<BTreeMap<K, V>, D::Error>
    where
        K: Deserialize<'de> + Ord,
        V: Deserialize<'de>,
        D: Deserializer<'de>,
    {
        let pairs: Vec<(K, V)> = Vec::deserialize(deserializer)?;
        Ok(pairs.into_iter().collect())
    }
}
