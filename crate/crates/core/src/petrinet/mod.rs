//! Labelled and accepting Petri nets with standard firing semantics.
//!
//! Places and transitions are addressed by dense indices in hot paths; the
//! string ids given at construction time are kept for display and PNML.

mod pnml;

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eventlog::{Sequence, Symbol};

pub use pnml::{load_pnml, parse_pnml, save_pnml, write_pnml};

/// Default total-token budget for bounded state-space exploration.
pub const DEFAULT_TOKEN_BUDGET: u32 = 32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NetError {
    #[error("duplicate node id `{0}`")]
    DuplicateId(String),
    #[error("unknown node id `{0}`")]
    UnknownId(String),
    #[error("transition `{transition}` is not enabled: place `{place}` holds no token")]
    NotEnabled { transition: String, place: String },
    #[error("firing step {index} failed: {source}")]
    FiringSequence { index: usize, source: Box<NetError> },
    #[error("search exceeded the token budget of {0} before deciding membership")]
    UndecidedWithinBound(u32),
    #[error("marking references {got} places but the net has {expected}")]
    MarkingSize { got: usize, expected: usize },
    #[error("PNML format error: {0}")]
    Format(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for NetError {
    fn from(e: std::io::Error) -> Self {
        NetError::Io(e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub id: String,
    /// `None` for τ-transitions.
    pub label: Option<Symbol>,
}

impl Transition {
    pub fn is_tau(&self) -> bool {
        self.label.is_none()
    }
}

/// A labelled Petri net `(P, T, F, ℓ)` with arc weights fixed to 1.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabeledPetriNet {
    places: Vec<String>,
    transitions: Vec<Transition>,
    preset: Vec<Vec<usize>>,
    postset: Vec<Vec<usize>>,
    /// Arc list in insertion order, used for faithful export.
    arcs: Vec<Arc>,
    ids: HashMap<String, NodeRef>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeRef {
    Place(usize),
    Transition(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Arc {
    PlaceToTransition(usize, usize),
    TransitionToPlace(usize, usize),
}

impl LabeledPetriNet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_place(&mut self, id: &str) -> Result<usize, NetError> {
        if self.ids.contains_key(id) {
            return Err(NetError::DuplicateId(id.to_string()));
        }
        let idx = self.places.len();
        self.places.push(id.to_string());
        self.ids.insert(id.to_string(), NodeRef::Place(idx));
        Ok(idx)
    }

    pub fn add_transition(&mut self, id: &str, label: Option<Symbol>) -> Result<usize, NetError> {
        if self.ids.contains_key(id) {
            return Err(NetError::DuplicateId(id.to_string()));
        }
        let label = label.filter(|l| !l.is_tau());
        let idx = self.transitions.len();
        self.transitions.push(Transition { id: id.to_string(), label });
        self.preset.push(Vec::new());
        self.postset.push(Vec::new());
        self.ids.insert(id.to_string(), NodeRef::Transition(idx));
        Ok(idx)
    }

    /// Adds an arc between two existing nodes given by id. Duplicate arcs are ignored.
    pub fn add_arc(&mut self, source: &str, target: &str) -> Result<(), NetError> {
        let s = *self
            .ids
            .get(source)
            .ok_or_else(|| NetError::UnknownId(source.to_string()))?;
        let t = *self
            .ids
            .get(target)
            .ok_or_else(|| NetError::UnknownId(target.to_string()))?;
        match (s, t) {
            (NodeRef::Place(p), NodeRef::Transition(tr)) => self.add_arc_pt(p, tr),
            (NodeRef::Transition(tr), NodeRef::Place(p)) => self.add_arc_tp(tr, p),
            _ => {
                return Err(NetError::Format(format!(
                    "arc {source} -> {target} must connect a place and a transition"
                )))
            }
        }
        Ok(())
    }

    pub fn add_arc_pt(&mut self, place: usize, transition: usize) {
        if !self.preset[transition].contains(&place) {
            self.preset[transition].push(place);
            self.preset[transition].sort_unstable();
            self.arcs.push(Arc::PlaceToTransition(place, transition));
        }
    }

    pub fn add_arc_tp(&mut self, transition: usize, place: usize) {
        if !self.postset[transition].contains(&place) {
            self.postset[transition].push(place);
            self.postset[transition].sort_unstable();
            self.arcs.push(Arc::TransitionToPlace(transition, place));
        }
    }

    pub fn places(&self) -> &[String] {
        &self.places
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn place_count(&self) -> usize {
        self.places.len()
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.len()
    }

    pub fn place_index(&self, id: &str) -> Option<usize> {
        match self.ids.get(id) {
            Some(NodeRef::Place(p)) => Some(*p),
            _ => None,
        }
    }

    pub fn transition_index(&self, id: &str) -> Option<usize> {
        match self.ids.get(id) {
            Some(NodeRef::Transition(t)) => Some(*t),
            _ => None,
        }
    }

    pub fn label(&self, t: usize) -> Option<&Symbol> {
        self.transitions[t].label.as_ref()
    }

    pub fn preset(&self, t: usize) -> &[usize] {
        &self.preset[t]
    }

    pub fn postset(&self, t: usize) -> &[usize] {
        &self.postset[t]
    }

    /// Visible labels used by at least one transition.
    pub fn labels(&self) -> HashSet<Symbol> {
        self.transitions.iter().filter_map(|t| t.label.clone()).collect()
    }

    pub fn empty_marking(&self) -> Marking {
        Marking(vec![0; self.places.len()])
    }

    /// Builds a marking from `(place id, tokens)` pairs.
    pub fn marking(&self, tokens: &[(&str, u32)]) -> Result<Marking, NetError> {
        let mut m = self.empty_marking();
        for (id, n) in tokens {
            let p = self
                .place_index(id)
                .ok_or_else(|| NetError::UnknownId(id.to_string()))?;
            m.0[p] += n;
        }
        Ok(m)
    }

    /// Builds a marking from a list of place ids, one token per occurrence.
    pub fn marking_of(&self, places: &[&str]) -> Result<Marking, NetError> {
        let pairs: Vec<(&str, u32)> = places.iter().map(|p| (*p, 1)).collect();
        self.marking(&pairs)
    }

    fn check_marking(&self, m: &Marking) -> Result<(), NetError> {
        if m.0.len() != self.places.len() {
            return Err(NetError::MarkingSize { got: m.0.len(), expected: self.places.len() });
        }
        Ok(())
    }

    pub fn is_enabled(&self, m: &Marking, t: usize) -> bool {
        self.preset[t].iter().all(|&p| m.0[p] > 0)
    }

    /// `ω(m)`: transitions whose every input place is marked, in index order.
    /// Transitions without input places are always enabled.
    pub fn enabled_transitions(&self, m: &Marking) -> Vec<usize> {
        (0..self.transitions.len())
            .filter(|&t| self.is_enabled(m, t))
            .collect()
    }

    /// `m − •t + t•`.
    pub fn fire(&self, m: &Marking, t: usize) -> Result<Marking, NetError> {
        self.check_marking(m)?;
        if let Some(&p) = self.preset[t].iter().find(|&&p| m.0[p] == 0) {
            return Err(NetError::NotEnabled {
                transition: self.transitions[t].id.clone(),
                place: self.places[p].clone(),
            });
        }
        Ok(self.fire_unchecked(m, t))
    }

    /// Fires `t` without checking enabledness; callers must have checked.
    pub(crate) fn fire_unchecked(&self, m: &Marking, t: usize) -> Marking {
        let mut next = m.clone();
        for &p in &self.preset[t] {
            next.0[p] -= 1;
        }
        for &p in &self.postset[t] {
            next.0[p] += 1;
        }
        next
    }

    pub fn format_marking(&self, m: &Marking) -> String {
        let mut parts = Vec::new();
        for (p, &n) in m.0.iter().enumerate() {
            match n {
                0 => {}
                1 => parts.push(self.places[p].clone()),
                n => parts.push(format!("{}^{}", self.places[p], n)),
            }
        }
        format!("[{}]", parts.join(","))
    }
}

/// A multiset of places, stored densely over the owning net's places.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Marking(Vec<u32>);

impl Marking {
    pub fn from_counts(counts: Vec<u32>) -> Self {
        Marking(counts)
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn tokens(&self, place: usize) -> u32 {
        self.0[place]
    }

    pub fn total_tokens(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|&n| n == 0)
    }
}

/// `(N, m0, mf)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AcceptingPetriNet {
    pub net: LabeledPetriNet,
    pub initial: Marking,
    pub final_marking: Marking,
}

impl AcceptingPetriNet {
    pub fn new(net: LabeledPetriNet, initial: Marking, final_marking: Marking) -> Result<Self, NetError> {
        net.check_marking(&initial)?;
        net.check_marking(&final_marking)?;
        Ok(AcceptingPetriNet { net, initial, final_marking })
    }

    /// Fires `ts` (transition indices) from the initial marking.
    pub fn fire_sequence(&self, ts: &[usize]) -> Result<Marking, NetError> {
        let mut m = self.initial.clone();
        for (index, &t) in ts.iter().enumerate() {
            m = self.net.fire(&m, t).map_err(|e| NetError::FiringSequence {
                index,
                source: Box::new(e),
            })?;
        }
        Ok(m)
    }

    /// As [`fire_sequence`](Self::fire_sequence) with transitions given by id.
    pub fn fire_sequence_ids(&self, ids: &[&str]) -> Result<Marking, NetError> {
        let ts = ids
            .iter()
            .map(|id| {
                self.net
                    .transition_index(id)
                    .ok_or_else(|| NetError::UnknownId(id.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        self.fire_sequence(&ts)
    }

    /// Whether `word` is in the language of the net, exploring only markings
    /// with at most `bound` tokens. If a marking had to be pruned and no
    /// accepting run was found, the answer is undecided within the bound.
    pub fn accepts(&self, word: &[Symbol], bound: u32) -> Result<bool, NetError> {
        let start = (0usize, self.initial.clone());
        let mut seen: HashSet<(usize, Marking)> = HashSet::new();
        let mut queue = VecDeque::new();
        seen.insert(start.clone());
        queue.push_back(start);
        let mut pruned = false;
        while let Some((pos, m)) = queue.pop_front() {
            if pos == word.len() && m == self.final_marking {
                return Ok(true);
            }
            for t in self.net.enabled_transitions(&m) {
                let next_pos = match self.net.label(t) {
                    None => pos,
                    Some(l) if pos < word.len() && *l == word[pos] => pos + 1,
                    Some(_) => continue,
                };
                let next = self.net.fire_unchecked(&m, t);
                if next.total_tokens() > bound {
                    pruned = true;
                    continue;
                }
                let state = (next_pos, next);
                if seen.insert(state.clone()) {
                    queue.push_back(state);
                }
            }
        }
        if pruned {
            Err(NetError::UndecidedWithinBound(bound))
        } else {
            Ok(false)
        }
    }

    pub fn accepts_sequence(&self, word: &Sequence, bound: u32) -> Result<bool, NetError> {
        self.accepts(word.symbols(), bound)
    }
}

impl fmt::Display for AcceptingPetriNet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "places: {}", self.net.places.join(", "))?;
        for (i, t) in self.net.transitions.iter().enumerate() {
            let label = t.label.as_ref().map_or("tau", |l| l.name());
            let pre: Vec<&str> = self.net.preset[i].iter().map(|&p| self.net.places[p].as_str()).collect();
            let post: Vec<&str> = self.net.postset[i].iter().map(|&p| self.net.places[p].as_str()).collect();
            writeln!(f, "{} ({label}): {{{}}} -> {{{}}}", t.id, pre.join(","), post.join(","))?;
        }
        writeln!(f, "initial: {}", self.net.format_marking(&self.initial))?;
        write!(f, "final: {}", self.net.format_marking(&self.final_marking))
    }
}

/// The ticket-handling net used throughout the documentation: register (a),
/// examine casually or thoroughly (b, c) in parallel with a check (d), decide
/// (e) or skip the decision (τ), then restart (f), pay (g) or reject (h).
pub fn running_example() -> AcceptingPetriNet {
    let mut net = LabeledPetriNet::new();
    for p in 1..=7 {
        net.add_place(&format!("p{p}")).expect("fresh id");
    }
    type Row<'a> = (&'a str, Option<&'a str>, &'a [&'a str], &'a [&'a str]);
    let transitions: [Row; 9] = [
        ("t1", Some("a"), &["p1"], &["p2", "p3"]),
        ("t2", Some("b"), &["p2"], &["p4"]),
        ("t3", Some("c"), &["p2"], &["p4"]),
        ("t4", Some("d"), &["p3"], &["p5"]),
        ("t5", None, &["p4", "p5"], &["p6"]),
        ("t6", Some("e"), &["p4", "p5"], &["p6"]),
        ("t7", Some("f"), &["p6"], &["p2", "p3"]),
        ("t8", Some("g"), &["p6"], &["p7"]),
        ("t9", Some("h"), &["p6"], &["p7"]),
    ];
    for (id, label, pre, post) in transitions {
        net.add_transition(id, label.map(Symbol::new)).expect("fresh id");
        for p in pre {
            net.add_arc(p, id).expect("known ids");
        }
        for p in post {
            net.add_arc(id, p).expect("known ids");
        }
    }
    let initial = net.marking_of(&["p1"]).expect("known place");
    let final_marking = net.marking_of(&["p7"]).expect("known place");
    AcceptingPetriNet::new(net, initial, final_marking).expect("valid markings")
}
