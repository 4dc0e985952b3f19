//! Symbols, sequences, multisets and sequence databases, plus file ingestion.
//!
//! A [`SequenceDatabase`] is a multiset of [`Sequence`]s. Two on-disk formats
//! are supported:
//!
//! * line format (`.sdb`): one sequence per line, symbols separated by ASCII
//!   spaces, `#` starts a comment line, blank lines are skipped;
//! * CSV: a header row with `case`, `activity` and an optional RFC 3339
//!   `timestamp` column. Events are grouped by case and ordered by timestamp,
//!   ties keeping file order.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Name reserved for unobservable transitions; never part of an alphabet.
pub const TAU: &str = "tau";

#[derive(Debug, Error)]
pub enum LogError {
    #[error("index {k} out of range for sequence of length {len}")]
    Range { k: usize, len: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("database is empty")]
    Empty,
    #[error("symbol name `{0}` is reserved")]
    ReservedSymbol(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An interned activity name. Equality, ordering and hashing follow the name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: &str) -> Self {
        Symbol(Arc::from(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    pub fn is_tau(&self) -> bool {
        &*self.0 == TAU
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

impl Serialize for Symbol {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Symbol {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(Symbol::new(&s))
    }
}

/// A finite ordered list of symbols.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Sequence(Vec<Symbol>);

impl Sequence {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        Sequence(symbols)
    }

    pub fn empty() -> Self {
        Sequence(Vec::new())
    }

    /// Builds a sequence from whitespace-separated names, e.g. `"a b c"`.
    pub fn parse(text: &str) -> Self {
        Sequence(text.split_ascii_whitespace().map(Symbol::new).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn push(&mut self, s: Symbol) {
        self.0.push(s);
    }

    /// First `k` elements.
    pub fn head(&self, k: usize) -> Result<Sequence, LogError> {
        head(&self.0, k).map(|s| Sequence(s.to_vec()))
    }

    /// Last `min(k, len)` elements.
    pub fn tail(&self, k: usize) -> Sequence {
        Sequence(tail(&self.0, k).to_vec())
    }

    /// Last `k` elements; errors if `k` exceeds the length.
    pub fn tail_strict(&self, k: usize) -> Result<Sequence, LogError> {
        tail_strict(&self.0, k).map(|s| Sequence(s.to_vec()))
    }

    pub fn symbol_set(&self) -> BTreeSet<Symbol> {
        symbol_set(&self.0)
    }

    pub fn parikh(&self) -> SymbolMultiset {
        parikh(&self.0)
    }
}

impl fmt::Debug for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, ">")
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.0.iter().map(Symbol::name).collect();
        f.write_str(&names.join(" "))
    }
}

impl std::ops::Deref for Sequence {
    type Target = [Symbol];
    fn deref(&self) -> &[Symbol] {
        &self.0
    }
}

impl FromIterator<Symbol> for Sequence {
    fn from_iter<I: IntoIterator<Item = Symbol>>(iter: I) -> Self {
        Sequence(iter.into_iter().collect())
    }
}

pub fn head(seq: &[Symbol], k: usize) -> Result<&[Symbol], LogError> {
    if k > seq.len() {
        return Err(LogError::Range { k, len: seq.len() });
    }
    Ok(&seq[..k])
}

pub fn tail(seq: &[Symbol], k: usize) -> &[Symbol] {
    &seq[seq.len().saturating_sub(k)..]
}

pub fn tail_strict(seq: &[Symbol], k: usize) -> Result<&[Symbol], LogError> {
    if k > seq.len() {
        return Err(LogError::Range { k, len: seq.len() });
    }
    Ok(&seq[seq.len() - k..])
}

pub fn symbol_set(seq: &[Symbol]) -> BTreeSet<Symbol> {
    seq.iter().cloned().collect()
}

pub fn parikh(seq: &[Symbol]) -> SymbolMultiset {
    let mut m = SymbolMultiset::default();
    for s in seq {
        m.insert(s.clone(), 1);
    }
    m
}

/// Multiset over symbols; zero counts are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SymbolMultiset(BTreeMap<Symbol, usize>);

impl SymbolMultiset {
    pub fn insert(&mut self, s: Symbol, n: usize) {
        if n > 0 {
            *self.0.entry(s).or_insert(0) += n;
        }
    }

    pub fn count(&self, s: &Symbol) -> usize {
        self.0.get(s).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, usize)> {
        self.0.iter().map(|(s, &n)| (s, n))
    }

    pub fn total(&self) -> usize {
        self.0.values().sum()
    }

    pub fn support(&self) -> BTreeSet<Symbol> {
        self.0.keys().cloned().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<const N: usize> From<[(&str, usize); N]> for SymbolMultiset {
    fn from(items: [(&str, usize); N]) -> Self {
        let mut m = SymbolMultiset::default();
        for (s, n) in items {
            m.insert(Symbol::new(s), n);
        }
        m
    }
}

/// A sorted set of symbols with dense indices, shared cheaply between models.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "Vec<Symbol>", into = "Vec<Symbol>")]
pub struct Alphabet(Arc<[Symbol]>);

impl From<Vec<Symbol>> for Alphabet {
    fn from(v: Vec<Symbol>) -> Self {
        Alphabet::new(v)
    }
}

impl From<Alphabet> for Vec<Symbol> {
    fn from(a: Alphabet) -> Self {
        a.0.to_vec()
    }
}

impl Alphabet {
    pub fn new<I: IntoIterator<Item = Symbol>>(symbols: I) -> Self {
        let set: BTreeSet<Symbol> = symbols.into_iter().collect();
        Alphabet(set.into_iter().collect::<Vec<_>>().into())
    }

    pub fn from_names(names: &[&str]) -> Self {
        Alphabet::new(names.iter().map(|n| Symbol::new(n)))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn index_of(&self, s: &Symbol) -> Option<usize> {
        self.0.binary_search(s).ok()
    }

    pub fn symbol(&self, i: usize) -> &Symbol {
        &self.0[i]
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn contains(&self, s: &Symbol) -> bool {
        self.index_of(s).is_some()
    }

    /// Dense indices for `seq`, or `None` if some symbol is not in the alphabet.
    pub fn encode(&self, seq: &[Symbol]) -> Option<Vec<usize>> {
        seq.iter().map(|s| self.index_of(s)).collect()
    }
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.iter()).finish()
    }
}

/// A finite multiset of sequences. Distinct sequences keep first-seen order.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SequenceDatabase {
    entries: Vec<(Sequence, usize)>,
    index: HashMap<Sequence, usize>,
}

impl SequenceDatabase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_sequences<I: IntoIterator<Item = Sequence>>(seqs: I) -> Self {
        let mut db = Self::new();
        for s in seqs {
            db.add(s, 1);
        }
        db
    }

    /// Convenience constructor: `[("a b c", 2), ("b a c", 3)]`.
    pub fn from_counts(items: &[(&str, usize)]) -> Self {
        let mut db = Self::new();
        for (text, n) in items {
            db.add(Sequence::parse(text), *n);
        }
        db
    }

    pub fn add(&mut self, seq: Sequence, multiplicity: usize) {
        if multiplicity == 0 {
            return;
        }
        match self.index.get(&seq) {
            Some(&i) => self.entries[i].1 += multiplicity,
            None => {
                self.index.insert(seq.clone(), self.entries.len());
                self.entries.push((seq, multiplicity));
            }
        }
    }

    /// Distinct sequences with their multiplicities.
    pub fn iter(&self) -> impl Iterator<Item = (&Sequence, usize)> {
        self.entries.iter().map(|(s, n)| (s, *n))
    }

    /// Every sequence instance, repeated according to its multiplicity.
    pub fn instances(&self) -> impl Iterator<Item = &Sequence> {
        self.entries
            .iter()
            .flat_map(|(s, n)| std::iter::repeat_n(s, *n))
    }

    pub fn multiplicity(&self, seq: &Sequence) -> usize {
        self.index.get(seq).map_or(0, |&i| self.entries[i].1)
    }

    pub fn distinct_len(&self) -> usize {
        self.entries.len()
    }

    /// Number of sequence instances (sum of multiplicities).
    pub fn total_sequences(&self) -> usize {
        self.entries.iter().map(|(_, n)| n).sum()
    }

    pub fn total_events(&self) -> usize {
        self.entries.iter().map(|(s, n)| s.len() * n).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet::new(self.entries.iter().flat_map(|(s, _)| s.iter().cloned()))
    }

    /// Per-symbol event counts over all instances.
    pub fn symbol_counts(&self) -> SymbolMultiset {
        let mut m = SymbolMultiset::default();
        for (s, n) in &self.entries {
            for sym in s.iter() {
                m.insert(sym.clone(), *n);
            }
        }
        m
    }

    /// `(prefix, actual_next)` pairs for every position after the first of
    /// every instance, in database order.
    pub fn prediction_points(&self) -> Vec<(Sequence, Symbol)> {
        self.prediction_points_with(false)
    }

    /// As [`prediction_points`](Self::prediction_points); with
    /// `include_empty_prefix` the first symbol of each sequence is also
    /// predicted from the empty prefix.
    pub fn prediction_points_with(&self, include_empty_prefix: bool) -> Vec<(Sequence, Symbol)> {
        let mut out = Vec::new();
        for (prefix, next, n) in self.weighted_prediction_points(include_empty_prefix) {
            for _ in 0..n {
                out.push((Sequence(prefix.to_vec()), next.clone()));
            }
        }
        out
    }

    /// Prediction points over distinct sequences, with the multiplicity as weight.
    pub fn weighted_prediction_points(
        &self,
        include_empty_prefix: bool,
    ) -> impl Iterator<Item = (&[Symbol], &Symbol, usize)> {
        let start = if include_empty_prefix { 0 } else { 1 };
        self.entries.iter().flat_map(move |(s, n)| {
            (start..s.len()).map(move |k| (&s[..k], &s[k], *n))
        })
    }
}

/// Options for [`load_database`].
#[derive(Clone, Debug)]
pub struct IngestionOptions {
    pub case_column: String,
    pub activity_column: String,
    pub timestamp_column: String,
}

impl Default for IngestionOptions {
    fn default() -> Self {
        IngestionOptions {
            case_column: "case".into(),
            activity_column: "activity".into(),
            timestamp_column: "timestamp".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogFormat {
    Line,
    Csv,
}

impl LogFormat {
    /// `.csv` files are CSV, everything else is line format.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => LogFormat::Csv,
            _ => LogFormat::Line,
        }
    }
}

pub fn load_database(
    path: &Path,
    format: LogFormat,
    options: &IngestionOptions,
) -> Result<SequenceDatabase, LogError> {
    let bytes = std::fs::read(path)?;
    match format {
        LogFormat::Line => {
            let text = String::from_utf8(bytes).map_err(|e| LogError::Parse {
                line: 0,
                msg: format!("invalid UTF-8: {e}"),
            })?;
            parse_line_format(&text)
        }
        LogFormat::Csv => parse_csv(bytes.as_slice(), options),
    }
}

fn check_symbol(name: &str, line: usize) -> Result<Symbol, LogError> {
    if name == TAU {
        return Err(LogError::ReservedSymbol(format!("{name} (line {line})")));
    }
    Ok(Symbol::new(name))
}

pub fn parse_line_format(text: &str) -> Result<SequenceDatabase, LogError> {
    let mut db = SequenceDatabase::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        if let Some(bad) = line.chars().find(|c| c.is_whitespace() && *c != ' ') {
            return Err(LogError::Parse {
                line: i + 1,
                msg: format!("unexpected whitespace character {bad:?}; symbols are space separated"),
            });
        }
        let seq = line
            .split(' ')
            .filter(|t| !t.is_empty())
            .map(|t| check_symbol(t, i + 1))
            .collect::<Result<Sequence, _>>()?;
        db.add(seq, 1);
    }
    if db.is_empty() {
        return Err(LogError::Empty);
    }
    Ok(db)
}

pub fn parse_csv<R: Read>(reader: R, options: &IngestionOptions) -> Result<SequenceDatabase, LogError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| csv_error(e, 1))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let case_idx = col(&options.case_column).ok_or_else(|| LogError::Parse {
        line: 1,
        msg: format!("missing `{}` column", options.case_column),
    })?;
    let act_idx = col(&options.activity_column).ok_or_else(|| LogError::Parse {
        line: 1,
        msg: format!("missing `{}` column", options.activity_column),
    })?;
    let ts_idx = col(&options.timestamp_column);

    // case id -> (first-seen order, events (timestamp, file order, symbol))
    type Event = (Option<i64>, usize, Symbol);
    let mut cases: HashMap<String, (usize, Vec<Event>)> = HashMap::new();
    for (row_no, record) in rdr.records().enumerate() {
        let line = row_no + 2;
        let record = record.map_err(|e| csv_error(e, line))?;
        let case = record.get(case_idx).map(str::trim).unwrap_or("");
        if case.is_empty() {
            return Err(LogError::Parse { line, msg: "missing case id".into() });
        }
        let act = record.get(act_idx).map(str::trim).unwrap_or("");
        if act.is_empty() {
            return Err(LogError::Parse { line, msg: "missing activity".into() });
        }
        let ts = match ts_idx.and_then(|i| record.get(i)).map(str::trim) {
            None | Some("") => None,
            Some(t) => Some(parse_timestamp(t).ok_or_else(|| LogError::Parse {
                line,
                msg: format!("unrecognized timestamp `{t}`"),
            })?),
        };
        let sym = check_symbol(act, line)?;
        let next_order = cases.len();
        cases
            .entry(case.to_string())
            .or_insert_with(|| (next_order, Vec::new()))
            .1
            .push((ts, row_no, sym));
    }
    if cases.is_empty() {
        return Err(LogError::Empty);
    }
    let mut ordered: Vec<(usize, Vec<Event>)> = cases.into_values().collect();
    ordered.sort_by_key(|(order, _)| *order);
    let mut db = SequenceDatabase::new();
    for (_, mut events) in ordered {
        // Events without a timestamp sort before timestamped ones; ties keep file order.
        events.sort_by_key(|(ts, row, _)| (*ts, *row));
        db.add(events.into_iter().map(|(_, _, s)| s).collect(), 1);
    }
    Ok(db)
}

/// Nanoseconds since the epoch from RFC 3339, `YYYY-MM-DD[ T]HH:MM:SS[.f]`
/// (taken as UTC), a bare date, or an integer epoch value.
fn parse_timestamp(t: &str) -> Option<i64> {
    use chrono::{DateTime, NaiveDate, NaiveDateTime};
    if let Ok(d) = DateTime::parse_from_rfc3339(t) {
        return Some(d.timestamp_nanos_opt().unwrap_or(i64::MAX));
    }
    for fmt in ["%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M:%S%.f", "%Y/%m/%d %H:%M:%S%.f", "%d-%m-%Y %H:%M:%S%.f"] {
        if let Ok(d) = NaiveDateTime::parse_from_str(t, fmt) {
            return Some(d.and_utc().timestamp_nanos_opt().unwrap_or(i64::MAX));
        }
    }
    if let Ok(d) = NaiveDate::parse_from_str(t, "%Y-%m-%d") {
        return d.and_hms_opt(0, 0, 0)?.and_utc().timestamp_nanos_opt();
    }
    t.parse::<i64>().ok()
}

fn csv_error(e: csv::Error, fallback_line: usize) -> LogError {
    let line = e
        .position()
        .map(|p| p.line() as usize)
        .unwrap_or(fallback_line);
    LogError::Parse { line, msg: e.to_string() }
}

/// Writes a database in line format, one line per instance.
pub fn write_line_format(db: &SequenceDatabase) -> String {
    let mut out = String::new();
    for seq in db.instances() {
        out.push_str(&seq.to_string());
        out.push('\n');
    }
    out
}
