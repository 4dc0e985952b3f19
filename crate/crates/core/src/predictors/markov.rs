//! Fixed-order Markov chains and all-k-order Markov models (AKOM).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{check_alphabet, entries, proportional_distribution, NextSymbolDistribution, PredictError, Predictor};
use crate::eventlog::{tail, Alphabet, SequenceDatabase, Symbol};

/// Order-k chain. A prefix shorter than k is its own (shorter) state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovModel {
    order: usize,
    alphabet: Alphabet,
    #[serde(with = "entries")]
    counts: BTreeMap<Vec<usize>, Vec<u64>>,
    fallback: NextSymbolDistribution,
}

impl MarkovModel {
    pub fn fit(train: &SequenceDatabase, alphabet: &Alphabet, order: usize) -> Result<Self, PredictError> {
        if order == 0 {
            return Err(PredictError::InvalidParameter("Markov order must be at least 1".into()));
        }
        check_alphabet(alphabet)?;
        let fallback = proportional_distribution(train, alphabet)?;
        let mut counts: BTreeMap<Vec<usize>, Vec<u64>> = BTreeMap::new();
        for (seq, n) in train.iter() {
            let encoded = alphabet
                .encode(seq)
                .expect("checked by proportional_distribution");
            for i in 0..encoded.len() {
                let state = encoded[i.saturating_sub(order)..i].to_vec();
                counts.entry(state).or_insert_with(|| vec![0; alphabet.len()])[encoded[i]] += n as u64;
            }
        }
        Ok(MarkovModel { order, alphabet: alphabet.clone(), counts, fallback })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Successor counts of the state reached by `prefix`, if that state was seen.
    pub fn state_counts(&self, prefix: &[Symbol]) -> Option<&[u64]> {
        let state = self.alphabet.encode(tail(prefix, self.order))?;
        self.counts.get(&state).map(Vec::as_slice)
    }

    pub fn state_count(&self) -> usize {
        self.counts.len()
    }

    pub(crate) fn predict_seen(&self, prefix: &[Symbol]) -> Option<NextSymbolDistribution> {
        let counts = self.state_counts(prefix)?;
        NextSymbolDistribution::from_counts(&self.alphabet, counts)
    }

    pub fn fallback(&self) -> &NextSymbolDistribution {
        &self.fallback
    }
}

impl Predictor for MarkovModel {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn predict(&self, prefix: &[Symbol]) -> Result<NextSymbolDistribution, PredictError> {
        Ok(self.predict_seen(prefix).unwrap_or_else(|| self.fallback.clone()))
    }
}

/// Uses the highest order whose state was seen in training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AkomModel {
    models: Vec<MarkovModel>,
}

impl AkomModel {
    pub fn fit(train: &SequenceDatabase, alphabet: &Alphabet, k_max: usize) -> Result<Self, PredictError> {
        if k_max == 0 {
            return Err(PredictError::InvalidParameter("AKOM k_max must be at least 1".into()));
        }
        let models = (1..=k_max)
            .map(|k| MarkovModel::fit(train, alphabet, k))
            .collect::<Result<_, _>>()?;
        Ok(AkomModel { models })
    }

    pub fn k_max(&self) -> usize {
        self.models.len()
    }

    /// Order used for `prefix`, or `None` when every order falls back.
    pub fn matching_order(&self, prefix: &[Symbol]) -> Option<usize> {
        self.models
            .iter()
            .rev()
            .find(|m| m.state_counts(prefix).is_some())
            .map(MarkovModel::order)
    }
}

impl Predictor for AkomModel {
    fn alphabet(&self) -> &Alphabet {
        self.models[0].alphabet()
    }

    fn predict(&self, prefix: &[Symbol]) -> Result<NextSymbolDistribution, PredictError> {
        for m in self.models.iter().rev() {
            if let Some(d) = m.predict_seen(prefix) {
                return Ok(d);
            }
        }
        Ok(self.models[0].fallback().clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eventlog::Sequence;

    fn train() -> SequenceDatabase {
        SequenceDatabase::from_counts(&[("a b c", 2), ("b a c", 3)])
    }

    fn abc() -> Alphabet {
        Alphabet::from_names(&["a", "b", "c"])
    }

    fn p(d: &NextSymbolDistribution, s: &str) -> f64 {
        d.prob(&Symbol::new(s))
    }

    fn predict(m: &impl Predictor, prefix: &str) -> NextSymbolDistribution {
        m.predict(Sequence::parse(prefix).symbols()).unwrap()
    }

    #[test]
    fn first_order_counts() {
        let m = MarkovModel::fit(&train(), &abc(), 1).unwrap();
        let d = predict(&m, "b a");
        assert_eq!((p(&d, "a"), p(&d, "b"), p(&d, "c")), (0.0, 2.0 / 5.0, 3.0 / 5.0));
        // c is never followed by anything
        let d = predict(&m, "a b c");
        assert_eq!(d, *m.fallback());
        assert_eq!((p(&d, "a"), p(&d, "b"), p(&d, "c")), (5.0 / 15.0, 5.0 / 15.0, 5.0 / 15.0));
    }

    #[test]
    fn second_order_and_short_states() {
        let m = MarkovModel::fit(&train(), &abc(), 2).unwrap();
        assert_eq!(p(&predict(&m, "b a"), "c"), 1.0);
        // the length-1 state <a> only covers words starting with a
        let d = predict(&m, "a");
        assert_eq!(p(&d, "b"), 1.0);
        let d = predict(&m, "");
        assert_eq!((p(&d, "a"), p(&d, "b")), (2.0 / 5.0, 3.0 / 5.0));
    }

    #[test]
    fn unknown_symbols_fall_back() {
        let m = MarkovModel::fit(&train(), &abc(), 1).unwrap();
        assert_eq!(predict(&m, "a zz"), *m.fallback());
    }

    #[test]
    fn akom_uses_highest_matching_order() {
        let m = AkomModel::fit(&train(), &abc(), 2).unwrap();
        assert_eq!(m.matching_order(Sequence::parse("b a").symbols()), Some(2));
        assert_eq!(p(&predict(&m, "b a"), "c"), 1.0);
        assert_eq!(m.matching_order(Sequence::parse("c a").symbols()), Some(1));
        let d = predict(&m, "c a");
        assert_eq!((p(&d, "b"), p(&d, "c")), (2.0 / 5.0, 3.0 / 5.0));
        assert_eq!(m.matching_order(Sequence::parse("a b c").symbols()), None);
    }

    #[test]
    fn akom_of_order_one_is_a_first_order_chain() {
        let akom = AkomModel::fit(&train(), &abc(), 1).unwrap();
        let markov = MarkovModel::fit(&train(), &abc(), 1).unwrap();
        for prefix in ["", "a", "b", "c", "a b", "b a c", "zz"] {
            assert_eq!(predict(&akom, prefix), predict(&markov, prefix), "{prefix}");
        }
    }

    #[test]
    fn order_zero_is_rejected() {
        assert!(MarkovModel::fit(&train(), &abc(), 0).is_err());
        assert!(AkomModel::fit(&train(), &abc(), 0).is_err());
    }
}
