//! Active LeZi: LZ78 phrase parsing with a sliding window whose length is the
//! longest phrase seen so far, and a frequency table over every context
//! ending at the newest symbol of the window.
//!
//! Prediction mixes orders from the longest matching context downward:
//! `P_j(x) = c(ctx_j·x) / c(ctx_j) + e_j · P_{j-1}(x)` with escape mass
//! `e_j = 1 - Σ_y c(ctx_j·y) / c(ctx_j)`; order 0 is the plain symbol frequency.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{check_alphabet, entries, proportional_distribution, NextSymbolDistribution, PredictError, Predictor};
use crate::eventlog::{Alphabet, SequenceDatabase, Symbol};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActiveLeZi {
    alphabet: Alphabet,
    phrases: BTreeSet<Vec<usize>>,
    max_phrase_len: usize,
    /// Occurrence counts of every context; the empty context holds the total.
    #[serde(with = "entries")]
    counts: BTreeMap<Vec<usize>, u64>,
    fallback: NextSymbolDistribution,
}

impl ActiveLeZi {
    pub fn fit(train: &SequenceDatabase, alphabet: &Alphabet) -> Result<Self, PredictError> {
        check_alphabet(alphabet)?;
        let fallback = proportional_distribution(train, alphabet)
            .or_else(|e| match e {
                PredictError::NoTrainingEvents => Ok(NextSymbolDistribution::uniform(alphabet)),
                e => Err(e),
            })?;
        let mut model = ActiveLeZi {
            alphabet: alphabet.clone(),
            phrases: BTreeSet::new(),
            max_phrase_len: 0,
            counts: BTreeMap::new(),
            fallback,
        };
        for (seq, n) in train.iter() {
            let encoded = alphabet.encode(seq).expect("checked by proportional_distribution");
            for _ in 0..n {
                model.learn(&encoded);
            }
        }
        Ok(model)
    }

    /// One pass over a sequence; phrase and window restart at sequence boundaries.
    fn learn(&mut self, seq: &[usize]) {
        let mut phrase: Vec<usize> = Vec::new();
        let mut window: Vec<usize> = Vec::new();
        for &v in seq {
            phrase.push(v);
            if !self.phrases.contains(&phrase) {
                self.max_phrase_len = self.max_phrase_len.max(phrase.len());
                self.phrases.insert(std::mem::take(&mut phrase));
            }
            window.push(v);
            if window.len() > self.max_phrase_len {
                window.remove(0);
            }
            for start in 0..window.len() {
                *self.counts.entry(window[start..].to_vec()).or_insert(0) += 1;
            }
            *self.counts.entry(Vec::new()).or_insert(0) += 1;
        }
    }

    pub fn phrases(&self) -> Vec<Vec<Symbol>> {
        self.phrases
            .iter()
            .map(|p| p.iter().map(|&i| self.alphabet.symbol(i).clone()).collect())
            .collect()
    }

    pub fn max_phrase_len(&self) -> usize {
        self.max_phrase_len
    }

    pub fn count(&self, context: &[Symbol]) -> u64 {
        self.alphabet
            .encode(context)
            .and_then(|c| self.counts.get(&c).copied())
            .unwrap_or(0)
    }

    fn count_encoded(&self, context: &[usize]) -> u64 {
        self.counts.get(context).copied().unwrap_or(0)
    }

    /// Mixture over contexts `prefix[len-j..]`, `j = 0..=order`.
    fn blend(&self, tail: &[usize], order: usize) -> Vec<f64> {
        let m = self.alphabet.len();
        let ctx = &tail[tail.len() - order..];
        let total = self.count_encoded(ctx);
        if order == 0 {
            return (0..m).map(|x| self.count_encoded(&[x]) as f64 / total as f64).collect();
        }
        let lower = self.blend(tail, order - 1);
        if total == 0 {
            return lower;
        }
        let mut key = ctx.to_vec();
        key.push(0);
        let direct: Vec<f64> = (0..m)
            .map(|x| {
                *key.last_mut().expect("pushed") = x;
                self.count_encoded(&key) as f64 / total as f64
            })
            .collect();
        let escape = (1.0 - direct.iter().sum::<f64>()).max(0.0);
        direct.iter().zip(lower).map(|(d, l)| d + escape * l).collect()
    }
}

impl Predictor for ActiveLeZi {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn predict(&self, prefix: &[Symbol]) -> Result<NextSymbolDistribution, PredictError> {
        if self.count_encoded(&[]) == 0 {
            return Ok(self.fallback.clone());
        }
        let max_order = self.max_phrase_len.saturating_sub(1).min(prefix.len());
        // contexts containing unknown symbols were never counted
        let known = prefix[prefix.len() - max_order..]
            .iter()
            .rev()
            .map_while(|s| self.alphabet.index_of(s))
            .count();
        let tail: Vec<usize> = prefix[prefix.len() - known..]
            .iter()
            .map(|s| self.alphabet.index_of(s).expect("known"))
            .collect();
        let weights = self.blend(&tail, known);
        Ok(NextSymbolDistribution::from_weights(&self.alphabet, &weights).unwrap_or_else(|| self.fallback.clone()))
    }
}
