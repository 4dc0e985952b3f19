//! Probabilistic automata built from sequence, set or multiset abstractions
//! of the last k symbols.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{check_alphabet, entries, proportional_distribution, NextSymbolDistribution, PredictError, Predictor};
use crate::eventlog::{parikh, symbol_set, tail, Alphabet, Sequence, SequenceDatabase, Symbol, SymbolMultiset};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AbstractionKind {
    Seq,
    Set,
    Mult,
}

impl fmt::Display for AbstractionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AbstractionKind::Seq => "seq",
            AbstractionKind::Set => "set",
            AbstractionKind::Mult => "mult",
        })
    }
}

impl FromStr for AbstractionKind {
    type Err = PredictError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "seq" => Ok(AbstractionKind::Seq),
            "set" => Ok(AbstractionKind::Set),
            "mult" => Ok(AbstractionKind::Mult),
            other => Err(PredictError::InvalidParameter(format!("unknown abstraction `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AbstractionState {
    Seq(Sequence),
    Set(BTreeSet<Symbol>),
    Mult(SymbolMultiset),
}

impl fmt::Display for AbstractionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbstractionState::Seq(s) => write!(f, "{s:?}"),
            AbstractionState::Set(s) => {
                let names: Vec<&str> = s.iter().map(Symbol::name).collect();
                write!(f, "{{{}}}", names.join(","))
            }
            AbstractionState::Mult(m) => {
                let parts: Vec<String> = m
                    .iter()
                    .map(|(s, n)| if n == 1 { s.to_string() } else { format!("{s}^{n}") })
                    .collect();
                write!(f, "[{}]", parts.join(","))
            }
        }
    }
}

/// Abstraction of the last `min(k, |σ|)` symbols of `sigma`.
pub fn abstraction_of(sigma: &[Symbol], kind: AbstractionKind, k: usize) -> AbstractionState {
    let window = tail(sigma, k);
    match kind {
        AbstractionKind::Seq => AbstractionState::Seq(Sequence::new(window.to_vec())),
        AbstractionKind::Set => AbstractionState::Set(symbol_set(window)),
        AbstractionKind::Mult => AbstractionState::Mult(parikh(window)),
    }
}

/// States with counted transitions `c(q, a, q')`; `γ` is the count over the
/// total outgoing count of `q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilisticAutomaton {
    kind: AbstractionKind,
    k: usize,
    alphabet: Alphabet,
    states: Vec<AbstractionState>,
    #[serde(skip)]
    index: HashMap<AbstractionState, usize>,
    #[serde(with = "entries")]
    counts: BTreeMap<(usize, Symbol, usize), u64>,
    outgoing: Vec<u64>,
    accepting: BTreeSet<usize>,
    fallback: NextSymbolDistribution,
}

impl ProbabilisticAutomaton {
    pub fn build(
        train: &SequenceDatabase,
        alphabet: &Alphabet,
        kind: AbstractionKind,
        k: usize,
    ) -> Result<Self, PredictError> {
        if k == 0 {
            return Err(PredictError::InvalidParameter("abstraction window k must be at least 1".into()));
        }
        check_alphabet(alphabet)?;
        let fallback = proportional_distribution(train, alphabet)?;
        let mut pa = ProbabilisticAutomaton {
            kind,
            k,
            alphabet: alphabet.clone(),
            states: Vec::new(),
            index: HashMap::new(),
            counts: BTreeMap::new(),
            outgoing: Vec::new(),
            accepting: BTreeSet::new(),
            fallback,
        };
        pa.state_id(abstraction_of(&[], kind, k));
        for (seq, n) in train.iter() {
            let mut q = pa.state_id(abstraction_of(&[], kind, k));
            for i in 0..seq.len() {
                let next = pa.state_id(abstraction_of(&seq[..=i], kind, k));
                *pa.counts.entry((q, seq[i].clone(), next)).or_insert(0) += n as u64;
                pa.outgoing[q] += n as u64;
                q = next;
            }
            pa.accepting.insert(q);
        }
        Ok(pa)
    }

    fn state_id(&mut self, state: AbstractionState) -> usize {
        if let Some(&i) = self.index.get(&state) {
            return i;
        }
        let i = self.states.len();
        self.index.insert(state.clone(), i);
        self.states.push(state);
        self.outgoing.push(0);
        i
    }

    /// Rebuilds the state index after deserialization.
    pub(crate) fn reindex(&mut self) {
        self.index = self.states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    }

    pub fn kind(&self) -> AbstractionKind {
        self.kind
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn states(&self) -> &[AbstractionState] {
        &self.states
    }

    pub fn initial_state(&self) -> &AbstractionState {
        &self.states[0]
    }

    pub fn accepting_states(&self) -> impl Iterator<Item = &AbstractionState> {
        self.accepting.iter().map(|&i| &self.states[i])
    }

    pub fn state_index(&self, state: &AbstractionState) -> Option<usize> {
        self.index.get(state).copied()
    }

    /// Every `(q, a, q', γ)` with positive probability.
    pub fn transitions(&self) -> impl Iterator<Item = (&AbstractionState, &Symbol, &AbstractionState, f64)> {
        self.counts.iter().map(|((q, a, r), &c)| {
            (&self.states[*q], a, &self.states[*r], c as f64 / self.outgoing[*q] as f64)
        })
    }

    pub fn transition_count(&self) -> usize {
        self.counts.len()
    }

    pub fn gamma(&self, q: &AbstractionState, a: &Symbol, r: &AbstractionState) -> f64 {
        match (self.state_index(q), self.state_index(r)) {
            (Some(qi), Some(ri)) => self
                .counts
                .get(&(qi, a.clone(), ri))
                .map_or(0.0, |&c| c as f64 / self.outgoing[qi] as f64),
            _ => 0.0,
        }
    }

    /// Successor states of `q` on `a`.
    pub fn delta(&self, q: &AbstractionState, a: &Symbol) -> Vec<&AbstractionState> {
        let Some(qi) = self.state_index(q) else { return Vec::new() };
        self.counts
            .range((qi, a.clone(), 0)..=(qi, a.clone(), usize::MAX))
            .map(|((_, _, r), _)| &self.states[*r])
            .collect()
    }

    fn outgoing_range(q: usize) -> std::ops::Range<(usize, Symbol, usize)> {
        // the empty name sorts before every symbol
        (q, Symbol::new(""), 0)..(q + 1, Symbol::new(""), 0)
    }

    /// `P(a | q)` for every symbol, or `None` when `q` is unknown or has no outgoing mass.
    pub fn symbol_distribution(&self, q: &AbstractionState) -> Option<NextSymbolDistribution> {
        let qi = self.state_index(q)?;
        if self.outgoing[qi] == 0 {
            return None;
        }
        let mut counts = vec![0u64; self.alphabet.len()];
        for ((_, a, _), &c) in self.counts.range(Self::outgoing_range(qi)) {
            counts[self.alphabet.index_of(a).expect("trained symbol")] += c;
        }
        NextSymbolDistribution::from_counts(&self.alphabet, &counts)
    }

    pub fn fallback(&self) -> &NextSymbolDistribution {
        &self.fallback
    }
}

impl Predictor for ProbabilisticAutomaton {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn predict(&self, prefix: &[Symbol]) -> Result<NextSymbolDistribution, PredictError> {
        let q = abstraction_of(prefix, self.kind, self.k);
        Ok(self.symbol_distribution(&q).unwrap_or_else(|| self.fallback.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(s: &str) -> Sequence {
        Sequence::parse(s)
    }

    fn set(names: &[&str]) -> AbstractionState {
        AbstractionState::Set(names.iter().map(|n| Symbol::new(n)).collect())
    }

    #[test]
    fn abstractions() {
        let s = seq("a b b");
        assert_eq!(abstraction_of(&s, AbstractionKind::Set, 2), set(&["b"]));
        assert_eq!(
            abstraction_of(&s, AbstractionKind::Mult, 2),
            AbstractionState::Mult(SymbolMultiset::from([("b", 2)]))
        );
        assert_eq!(abstraction_of(&seq("a"), AbstractionKind::Seq, 2), AbstractionState::Seq(seq("a")));
        assert_eq!(abstraction_of(&s, AbstractionKind::Mult, 2).to_string(), "[b^2]");
    }

    #[test]
    fn set_automaton_of_single_word() {
        let db = SequenceDatabase::from_counts(&[("a b b c", 1)]);
        let pa = ProbabilisticAutomaton::build(&db, &db.alphabet(), AbstractionKind::Set, 2).unwrap();
        assert_eq!(pa.states().len(), 5);
        assert_eq!(pa.transition_count(), 4);
        let path: Vec<(String, String, String)> = pa
            .transitions()
            .map(|(q, a, r, g)| {
                assert_eq!(g, 1.0);
                (q.to_string(), a.to_string(), r.to_string())
            })
            .collect();
        let expected = [("{}", "a", "{a}"), ("{a}", "b", "{a,b}"), ("{a,b}", "b", "{b}"), ("{b}", "c", "{b,c}")];
        assert_eq!(path.len(), expected.len());
        for (q, a, r) in expected {
            assert!(path.contains(&(q.into(), a.into(), r.into())), "{q} {a} {r}");
        }
        assert_eq!(pa.accepting_states().collect::<Vec<_>>(), vec![&set(&["b", "c"])]);

        let c = Symbol::new("c");
        assert_eq!(pa.predict(&seq("a b b")).unwrap().prob(&c), 1.0);
        assert_eq!(pa.predict(&seq("a b b a b c b b")).unwrap().prob(&c), 1.0);
        let d = pa.predict(&seq("a b b d")).unwrap();
        assert_eq!(d.probs(), &[0.25, 0.5, 0.25]);
    }

    #[test]
    fn branching_sequence_states() {
        let db = SequenceDatabase::from_counts(&[("a b", 1), ("a c", 1)]);
        let pa = ProbabilisticAutomaton::build(&db, &db.alphabet(), AbstractionKind::Seq, 1).unwrap();
        let a = AbstractionState::Seq(seq("a"));
        assert_eq!(pa.gamma(&a, &Symbol::new("b"), &AbstractionState::Seq(seq("b"))), 0.5);
        assert_eq!(pa.gamma(&a, &Symbol::new("c"), &AbstractionState::Seq(seq("c"))), 0.5);
        assert_eq!(pa.delta(&a, &Symbol::new("b")), vec![&AbstractionState::Seq(seq("b"))]);
        assert!(pa.delta(&a, &Symbol::new("a")).is_empty());
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("mult".parse::<AbstractionKind>().unwrap(), AbstractionKind::Mult);
        assert!("bag".parse::<AbstractionKind>().is_err());
        assert!(ProbabilisticAutomaton::build(&SequenceDatabase::from_counts(&[("a", 1)]), &Alphabet::from_names(&["a"]), AbstractionKind::Seq, 0).is_err());
    }
}
