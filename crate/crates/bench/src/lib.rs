//! Shared workloads for the criterion benchmarks in `benches/`.

use seqpredict::eventlog::Sequence;
use seqpredict::harness::synthetic_database;
use seqpredict::SequenceDatabase;

pub fn training_log(sequences: usize) -> SequenceDatabase {
    synthetic_database(sequences, 7)
}

/// Every proper nonempty prefix of the distinct sequences of `db`.
pub fn prefixes(db: &SequenceDatabase) -> Vec<Sequence> {
    let mut out: Vec<Sequence> = db
        .iter()
        .flat_map(|(s, _)| (1..s.len()).map(move |k| Sequence::new(s[..k].to_vec())))
        .collect();
    out.sort();
    out.dedup();
    out
}
