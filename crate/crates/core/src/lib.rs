//! Probabilistic next-element prediction over symbol sequences.
//!
//! The crate bundles process-mining predictors (prefix-alignments on
//! accepting Petri nets, abstraction automata, Inductive Miner discovery),
//! classical sequence models (Markov chains, all-k-order Markov, HMM,
//! Active LeZi) and an evaluation harness built on the Brier score.

pub mod alignment;
pub mod discovery;
pub mod eventlog;
pub mod harness;
pub mod methods;
pub mod persist;
pub mod petrinet;
pub mod petripredict;
pub mod predictors;

pub use eventlog::{Alphabet, Sequence, SequenceDatabase, Symbol, SymbolMultiset};
pub use petrinet::{AcceptingPetriNet, LabeledPetriNet, Marking};
