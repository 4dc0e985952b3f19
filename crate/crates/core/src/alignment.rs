//! Optimal alignments and prefix-alignments against an accepting Petri net.
//!
//! The search is a uniform-cost (Dijkstra) search over the synchronous
//! product of the word and the net. Edge weights are the lexicographic triple
//! `(move cost, log moves, moves)`: every edge adds one move, so weights are
//! strictly positive even for zero-cost τ moves and every product state is
//! settled once. Among paths of equal weight the one whose move sequence is
//! lexicographically smallest (by transition id) wins, which makes results
//! fully deterministic.

use std::cell::RefCell;
use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eventlog::{Sequence, SequenceDatabase, Symbol};
use crate::petrinet::{AcceptingPetriNet, Marking, DEFAULT_TOKEN_BUDGET};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlignError {
    #[error("search budget exhausted after expanding {expanded} states")]
    BudgetExhausted { expanded: usize },
    #[error("the final marking is unreachable from every candidate marking")]
    Infeasible,
    #[error("aligning {word:?}: {source}")]
    Word { word: Sequence, source: Box<AlignError> },
    #[error("invalid cost scheme: {0}")]
    Costs(String),
}

/// Integer move costs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveCostScheme {
    pub sync: u32,
    pub log_move: u32,
    pub visible_model_move: u32,
    pub tau_model_move: u32,
}

impl Default for MoveCostScheme {
    fn default() -> Self {
        MoveCostScheme { sync: 0, log_move: 1, visible_model_move: 1, tau_model_move: 0 }
    }
}

impl MoveCostScheme {
    pub fn validate(&self) -> Result<(), AlignError> {
        if self.sync > self.log_move.min(self.visible_model_move) {
            return Err(AlignError::Costs(
                "synchronous moves may not cost more than log or model moves".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    /// Markings with more tokens than this are pruned.
    pub token_budget: u32,
    /// Maximum number of product states (plus reachability states) expanded.
    pub max_expanded: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { token_budget: DEFAULT_TOKEN_BUDGET, max_expanded: 5_000_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MoveKind {
    Synchronous,
    LogMove,
    ModelMove,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Move {
    pub kind: MoveKind,
    /// `None` is the gap `>>`.
    pub log_symbol: Option<Symbol>,
    /// Transition index; `None` is the gap `>>`.
    pub transition: Option<usize>,
}

/// An (optionally prefix-) alignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alignment {
    pub moves: Vec<Move>,
    pub final_marking: Marking,
    pub cost: u64,
}

impl Alignment {
    /// Moves as `(symbol|>>, transition id|>>)` pairs.
    pub fn describe(&self, apn: &AcceptingPetriNet) -> Vec<(String, String)> {
        self.moves
            .iter()
            .map(|m| {
                let l = m.log_symbol.as_ref().map_or(">>".to_string(), |s| s.name().to_string());
                let t = m
                    .transition
                    .map_or(">>".to_string(), |t| apn.net.transitions()[t].id.clone());
                (l, t)
            })
            .collect()
    }

    /// The fired transitions in order.
    pub fn firing_sequence(&self) -> Vec<usize> {
        self.moves.iter().filter_map(|m| m.transition).collect()
    }

    /// The aligned symbols in order.
    pub fn log_projection(&self) -> Vec<Symbol> {
        self.moves.iter().filter_map(|m| m.log_symbol.clone()).collect()
    }

    pub fn display<'a>(&'a self, apn: &'a AcceptingPetriNet) -> impl fmt::Display + 'a {
        DisplayAlignment(self, apn)
    }
}

struct DisplayAlignment<'a>(&'a Alignment, &'a AcceptingPetriNet);

impl fmt::Display for DisplayAlignment<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .describe(self.1)
            .into_iter()
            .map(|(l, t)| format!("({l},{t})"))
            .collect();
        f.write_str(&parts.join(" "))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
struct Weight {
    cost: u64,
    log_moves: u32,
    moves: u32,
}

#[derive(Clone, Copy)]
struct PathNode {
    parent: u32,
    /// `(transition rank or u32::MAX for a log move, kind)`
    key: (u32, MoveKind),
    transition: u32,
    log_pos: u32,
}

const ROOT: u32 = u32::MAX;
const NO_TRANSITION: u32 = u32::MAX;

struct StateInfo {
    weight: Weight,
    path: u32,
    settled: bool,
}

/// Reusable aligner for one net. Caches reachability of the final marking
/// per marking; not `Sync`, so parallel callers build one per worker.
pub struct Aligner<'a> {
    apn: &'a AcceptingPetriNet,
    costs: MoveCostScheme,
    budget: SearchBudget,
    /// rank[t] orders transitions by id.
    rank: Vec<u32>,
    by_label: HashMap<Symbol, Vec<usize>>,
    coreachable: RefCell<HashMap<Marking, bool>>,
}

impl<'a> Aligner<'a> {
    pub fn new(apn: &'a AcceptingPetriNet, costs: MoveCostScheme, budget: SearchBudget) -> Result<Self, AlignError> {
        costs.validate()?;
        let ts = apn.net.transitions();
        let mut order: Vec<usize> = (0..ts.len()).collect();
        order.sort_by(|&a, &b| ts[a].id.cmp(&ts[b].id));
        let mut rank = vec![0u32; ts.len()];
        for (r, &t) in order.iter().enumerate() {
            rank[t] = r as u32;
        }
        let mut by_label: HashMap<Symbol, Vec<usize>> = HashMap::new();
        for (t, tr) in ts.iter().enumerate() {
            if let Some(l) = &tr.label {
                by_label.entry(l.clone()).or_default().push(t);
            }
        }
        Ok(Aligner { apn, costs, budget, rank, by_label, coreachable: RefCell::new(HashMap::new()) })
    }

    pub fn net(&self) -> &AcceptingPetriNet {
        self.apn
    }

    /// Minimum-cost prefix-alignment: the prefix is fully explained and the
    /// reached marking can still reach the final marking.
    pub fn prefix_align(&self, prefix: &[Symbol]) -> Result<Alignment, AlignError> {
        self.search(prefix, true)
    }

    /// Minimum-cost alignment ending exactly in the final marking.
    pub fn align(&self, word: &[Symbol]) -> Result<Alignment, AlignError> {
        self.search(word, false)
    }

    /// Whether `mf` is reachable from `m` within the token budget.
    pub fn reaches_final(&self, m: &Marking) -> Result<bool, AlignError> {
        if let Some(&known) = self.coreachable.borrow().get(m) {
            return Ok(known);
        }
        let net = &self.apn.net;
        let target = &self.apn.final_marking;
        let mut parent: HashMap<Marking, Option<Marking>> = HashMap::new();
        let mut queue = VecDeque::new();
        parent.insert(m.clone(), None);
        queue.push_back(m.clone());
        let mut found: Option<Marking> = None;
        let mut expanded = 0usize;
        {
            let cache = self.coreachable.borrow();
            while let Some(cur) = queue.pop_front() {
                if &cur == target || cache.get(&cur) == Some(&true) {
                    found = Some(cur);
                    break;
                }
                expanded += 1;
                if expanded > self.budget.max_expanded {
                    return Err(AlignError::BudgetExhausted { expanded });
                }
                for t in net.enabled_transitions(&cur) {
                    let next = net.fire_unchecked(&cur, t);
                    if next.total_tokens() > self.budget.token_budget
                        || parent.contains_key(&next)
                        || cache.get(&next) == Some(&false)
                    {
                        continue;
                    }
                    parent.insert(next.clone(), Some(cur.clone()));
                    queue.push_back(next);
                }
            }
        }
        let mut cache = self.coreachable.borrow_mut();
        match found {
            Some(mut cur) => {
                loop {
                    cache.insert(cur.clone(), true);
                    match parent.get(&cur).cloned().flatten() {
                        Some(p) => cur = p,
                        None => break,
                    }
                }
                Ok(true)
            }
            None => {
                // the explored region is closed under firing within the budget
                for marking in parent.into_keys() {
                    cache.insert(marking, false);
                }
                Ok(false)
            }
        }
    }

    fn search(&self, word: &[Symbol], prefix_mode: bool) -> Result<Alignment, AlignError> {
        let net = &self.apn.net;
        let n = word.len();
        let mut arena: Vec<PathNode> = Vec::new();
        let mut ids: HashMap<(u32, Marking), u32> = HashMap::new();
        let mut states: Vec<(u32, Marking, StateInfo)> = Vec::new();
        let mut heap: BinaryHeap<Reverse<(Weight, u32)>> = BinaryHeap::new();
        let zero = Weight { cost: 0, log_moves: 0, moves: 0 };

        let start = (0u32, self.apn.initial.clone());
        ids.insert(start.clone(), 0);
        states.push((0, start.1, StateInfo { weight: zero, path: ROOT, settled: false }));
        heap.push(Reverse((zero, 0)));
        let mut expanded = 0usize;

        while let Some(Reverse((w, sid))) = heap.pop() {
            let s = sid as usize;
            if states[s].2.settled || states[s].2.weight != w {
                continue;
            }
            states[s].2.settled = true;
            let pos = states[s].0 as usize;
            let marking = states[s].1.clone();
            let path = states[s].2.path;

            if pos == n {
                let done = if prefix_mode {
                    self.reaches_final(&marking)?
                } else {
                    marking == self.apn.final_marking
                };
                if done {
                    return Ok(self.rebuild(word, &arena, path, marking, w.cost));
                }
            }
            expanded += 1;
            if expanded > self.budget.max_expanded {
                return Err(AlignError::BudgetExhausted { expanded });
            }

            let mut relax = |next_pos: usize, next_marking: Marking, kind: MoveKind, t: Option<usize>, step: u32| {
                if next_marking.total_tokens() > self.budget.token_budget {
                    return;
                }
                let nw = Weight {
                    cost: w.cost + u64::from(step),
                    log_moves: w.log_moves + u32::from(kind == MoveKind::LogMove),
                    moves: w.moves + 1,
                };
                let node = PathNode {
                    parent: path,
                    key: (t.map_or(u32::MAX, |t| self.rank[t]), kind),
                    transition: t.map_or(NO_TRANSITION, |t| t as u32),
                    log_pos: if kind == MoveKind::ModelMove { u32::MAX } else { pos as u32 },
                };
                let key = (next_pos as u32, next_marking);
                match ids.get(&key) {
                    None => {
                        let id = states.len() as u32;
                        arena.push(node);
                        let p = (arena.len() - 1) as u32;
                        ids.insert(key.clone(), id);
                        states.push((key.0, key.1, StateInfo { weight: nw, path: p, settled: false }));
                        heap.push(Reverse((nw, id)));
                    }
                    Some(&id) => {
                        let info = &states[id as usize].2;
                        if info.settled || nw > info.weight {
                            return;
                        }
                        let better = nw < info.weight
                            || compare_paths(&arena, &node, info.path) == Ordering::Less;
                        if better {
                            arena.push(node);
                            let p = (arena.len() - 1) as u32;
                            let info = &mut states[id as usize].2;
                            info.weight = nw;
                            info.path = p;
                            heap.push(Reverse((nw, id)));
                        }
                    }
                }
            };

            if pos < n {
                relax(pos + 1, marking.clone(), MoveKind::LogMove, None, self.costs.log_move);
                if let Some(ts) = self.by_label.get(&word[pos]) {
                    for &t in ts {
                        if net.is_enabled(&marking, t) {
                            relax(pos + 1, net.fire_unchecked(&marking, t), MoveKind::Synchronous, Some(t), self.costs.sync);
                        }
                    }
                }
            }
            for t in net.enabled_transitions(&marking) {
                let step = if net.label(t).is_some() {
                    self.costs.visible_model_move
                } else {
                    self.costs.tau_model_move
                };
                relax(pos, net.fire_unchecked(&marking, t), MoveKind::ModelMove, Some(t), step);
            }
        }
        Err(AlignError::Infeasible)
    }

    fn rebuild(&self, word: &[Symbol], arena: &[PathNode], mut path: u32, final_marking: Marking, cost: u64) -> Alignment {
        let mut moves = Vec::new();
        while path != ROOT {
            let node = arena[path as usize];
            let kind = node.key.1;
            moves.push(Move {
                kind,
                log_symbol: (kind != MoveKind::ModelMove).then(|| word[node.log_pos as usize].clone()),
                transition: (node.transition != NO_TRANSITION).then_some(node.transition as usize),
            });
            path = node.parent;
        }
        moves.reverse();
        Alignment { moves, final_marking, cost }
    }
}

/// Lexicographic comparison of the move sequence ending in `candidate`
/// (whose parent chain has the same length as `existing`'s) with `existing`.
fn compare_paths(arena: &[PathNode], candidate: &PathNode, existing: u32) -> Ordering {
    let mut ord = candidate.key.cmp(&arena[existing as usize].key);
    let mut a = candidate.parent;
    let mut b = arena[existing as usize].parent;
    while a != b && a != ROOT && b != ROOT {
        let c = arena[a as usize].key.cmp(&arena[b as usize].key);
        if c != Ordering::Equal {
            ord = c;
        }
        a = arena[a as usize].parent;
        b = arena[b as usize].parent;
    }
    ord
}

pub fn prefix_align(
    apn: &AcceptingPetriNet,
    prefix: &[Symbol],
    costs: MoveCostScheme,
    budget: SearchBudget,
) -> Result<Alignment, AlignError> {
    Aligner::new(apn, costs, budget)?.prefix_align(prefix)
}

pub fn align_full(
    apn: &AcceptingPetriNet,
    word: &[Symbol],
    costs: MoveCostScheme,
    budget: SearchBudget,
) -> Result<Alignment, AlignError> {
    Aligner::new(apn, costs, budget)?.align(word)
}

/// Whether every distinct word of `db` aligns with cost 0 under the default costs.
pub fn is_fitting(apn: &AcceptingPetriNet, db: &SequenceDatabase, budget: SearchBudget) -> Result<bool, AlignError> {
    let aligner = Aligner::new(apn, MoveCostScheme::default(), budget)?;
    let mut seen = HashSet::new();
    for (word, _) in db.iter() {
        if !seen.insert(word) {
            continue;
        }
        let a = aligner.align(word).map_err(|e| AlignError::Word {
            word: word.clone(),
            source: Box::new(e),
        })?;
        if a.cost > 0 {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::petrinet::{running_example, LabeledPetriNet};

    fn pairs(v: &[(&str, &str)]) -> Vec<(String, String)> {
        v.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn prefix_alignment_of_fitting_prefix() {
        let apn = running_example();
        let a = prefix_align(&apn, &Sequence::parse("a b"), MoveCostScheme::default(), SearchBudget::default()).unwrap();
        assert_eq!(a.cost, 0);
        assert_eq!(a.describe(&apn), pairs(&[("a", "t1"), ("b", "t2")]));
        assert_eq!(a.final_marking, apn.net.marking_of(&["p3", "p4"]).unwrap());
    }

    #[test]
    fn prefix_alignment_with_model_move() {
        let apn = running_example();
        let a = prefix_align(&apn, &Sequence::parse("a b e"), MoveCostScheme::default(), SearchBudget::default()).unwrap();
        assert_eq!(a.cost, 1);
        assert_eq!(a.describe(&apn), pairs(&[("a", "t1"), ("b", "t2"), (">>", "t4"), ("e", "t6")]));
        assert_eq!(a.final_marking, apn.net.marking_of(&["p6"]).unwrap());
    }

    #[test]
    fn empty_prefix() {
        let apn = running_example();
        let a = prefix_align(&apn, &[], MoveCostScheme::default(), SearchBudget::default()).unwrap();
        assert!(a.moves.is_empty());
        assert_eq!(a.final_marking, apn.initial);
        assert_eq!(a.cost, 0);
    }

    #[test]
    fn full_alignments() {
        let apn = running_example();
        let costs = MoveCostScheme::default();
        let budget = SearchBudget::default();
        let a = align_full(&apn, &Sequence::parse("a b e e g"), costs, budget).unwrap();
        assert_eq!(a.cost, 2);
        assert_eq!(
            a.describe(&apn),
            pairs(&[("a", "t1"), ("b", "t2"), (">>", "t4"), ("e", "t6"), ("e", ">>"), ("g", "t8")])
        );
        assert_eq!(a.final_marking, apn.final_marking);

        let a = align_full(&apn, &Sequence::parse("a b d e g"), costs, budget).unwrap();
        assert_eq!(a.cost, 0);
        assert!(a.moves.iter().all(|m| m.kind == MoveKind::Synchronous));

        let a = align_full(&apn, &[], costs, budget).unwrap();
        assert_eq!(a.cost, 4);
        assert_eq!(
            a.describe(&apn),
            pairs(&[(">>", "t1"), (">>", "t2"), (">>", "t4"), (">>", "t5"), (">>", "t8")])
        );
    }

    #[test]
    fn unknown_symbols_become_log_moves() {
        let apn = running_example();
        let a = prefix_align(&apn, &Sequence::parse("a zzz b"), MoveCostScheme::default(), SearchBudget::default()).unwrap();
        assert_eq!(a.cost, 1);
        assert_eq!(a.describe(&apn), pairs(&[("a", "t1"), ("zzz", ">>"), ("b", "t2")]));
    }

    #[test]
    fn fitness() {
        let apn = running_example();
        let budget = SearchBudget::default();
        let fitting = SequenceDatabase::from_counts(&[("a b d e g", 3), ("a d c h", 1)]);
        assert!(is_fitting(&apn, &fitting, budget).unwrap());
        let deviating = SequenceDatabase::from_counts(&[("a b e e g", 1)]);
        assert!(!is_fitting(&apn, &deviating, budget).unwrap());

        let mut net = LabeledPetriNet::new();
        net.add_place("i").unwrap();
        net.add_place("o").unwrap();
        net.add_transition("t", Some(Symbol::new("a"))).unwrap();
        net.add_arc("i", "t").unwrap();
        net.add_arc("t", "o").unwrap();
        let (i, o) = (net.marking_of(&["i"]).unwrap(), net.marking_of(&["o"]).unwrap());
        let single = AcceptingPetriNet::new(net, i, o).unwrap();
        assert!(is_fitting(&single, &SequenceDatabase::from_counts(&[("a", 1)]), budget).unwrap());
    }

    #[test]
    fn infeasible_when_final_unreachable() {
        let mut net = LabeledPetriNet::new();
        net.add_place("i").unwrap();
        net.add_place("o").unwrap();
        let i = net.marking_of(&["i"]).unwrap();
        let o = net.marking_of(&["o"]).unwrap();
        let apn = AcceptingPetriNet::new(net, i, o).unwrap();
        let err = prefix_align(&apn, &Sequence::parse("a"), MoveCostScheme::default(), SearchBudget::default()).unwrap_err();
        assert_eq!(err, AlignError::Infeasible);
    }

    #[test]
    fn budget_exhaustion() {
        let apn = running_example();
        let budget = SearchBudget { max_expanded: 3, ..SearchBudget::default() };
        let err = align_full(&apn, &Sequence::parse("a b d e g"), MoveCostScheme::default(), budget).unwrap_err();
        assert!(matches!(err, AlignError::BudgetExhausted { .. }));
    }

    #[test]
    fn invalid_costs_rejected() {
        let apn = running_example();
        let costs = MoveCostScheme { sync: 2, ..MoveCostScheme::default() };
        assert!(matches!(Aligner::new(&apn, costs, SearchBudget::default()), Err(AlignError::Costs(_))));
    }
}
