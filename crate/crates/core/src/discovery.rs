//! Directly-follows graphs, Inductive Miner (plain and infrequent) and the
//! translation of process trees into accepting Petri nets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::eventlog::{Sequence, SequenceDatabase, Symbol, TAU};
use crate::petrinet::{AcceptingPetriNet, LabeledPetriNet};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeParseError {
    #[error("unexpected end of input")]
    Eof,
    #[error("unexpected `{found}` at offset {offset}")]
    Unexpected { found: String, offset: usize },
    #[error("operator `{0}` needs at least two children")]
    Arity(String),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DirectlyFollowsGraph {
    pub nodes: BTreeSet<Symbol>,
    pub edges: BTreeMap<(Symbol, Symbol), u64>,
    pub starts: BTreeMap<Symbol, u64>,
    pub ends: BTreeMap<Symbol, u64>,
}

impl DirectlyFollowsGraph {
    pub fn weight(&self, a: &Symbol, b: &Symbol) -> u64 {
        self.edges.get(&(a.clone(), b.clone())).copied().unwrap_or(0)
    }

    pub fn has_edge(&self, a: &Symbol, b: &Symbol) -> bool {
        self.weight(a, b) > 0
    }
}

pub fn build_dfg(db: &SequenceDatabase) -> DirectlyFollowsGraph {
    let mut dfg = DirectlyFollowsGraph::default();
    for (seq, n) in db.iter() {
        let n = n as u64;
        for s in seq.iter() {
            dfg.nodes.insert(s.clone());
        }
        if let (Some(first), Some(last)) = (seq.first(), seq.last()) {
            *dfg.starts.entry(first.clone()).or_insert(0) += n;
            *dfg.ends.entry(last.clone()).or_insert(0) += n;
        }
        for w in seq.windows(2) {
            *dfg.edges.entry((w[0].clone(), w[1].clone())).or_insert(0) += n;
        }
    }
    dfg
}

/// Drops every out-edge lighter than `threshold` times the heaviest out-edge
/// of its source node; start and end weights are filtered the same way
/// against the heaviest start (end) weight.
pub fn filter_dfg(dfg: &DirectlyFollowsGraph, threshold: f64) -> DirectlyFollowsGraph {
    let threshold = threshold.clamp(0.0, 1.0);
    let mut max_out: BTreeMap<&Symbol, u64> = BTreeMap::new();
    for ((a, _), &w) in &dfg.edges {
        let e = max_out.entry(a).or_insert(0);
        *e = (*e).max(w);
    }
    let keep = |w: u64, max: u64| (w as f64) >= threshold * max as f64;
    let edges = dfg
        .edges
        .iter()
        .filter(|((a, _), &w)| keep(w, max_out[a]))
        .map(|(k, &w)| (k.clone(), w))
        .collect();
    let filter_map = |m: &BTreeMap<Symbol, u64>| {
        let max = m.values().copied().max().unwrap_or(0);
        m.iter()
            .filter(|(_, &w)| keep(w, max))
            .map(|(k, &w)| (k.clone(), w))
            .collect()
    };
    DirectlyFollowsGraph {
        nodes: dfg.nodes.clone(),
        edges,
        starts: filter_map(&dfg.starts),
        ends: filter_map(&dfg.ends),
    }
}

/// Block-structured process model. Loops list the body first, then the redo parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProcessTree {
    Activity(Symbol),
    Tau,
    Sequence(Vec<ProcessTree>),
    Xor(Vec<ProcessTree>),
    Parallel(Vec<ProcessTree>),
    Loop(Vec<ProcessTree>),
}

impl ProcessTree {
    pub fn activity(name: &str) -> Self {
        ProcessTree::Activity(Symbol::new(name))
    }

    /// Parses the notation produced by `Display`, e.g. `seq(a, and(b, c))`.
    pub fn parse(text: &str) -> Result<Self, TreeParseError> {
        let mut p = TreeParser { src: text, pos: 0 };
        let tree = p.tree()?;
        p.skip_ws();
        if p.pos < text.len() {
            return Err(p.unexpected());
        }
        Ok(tree)
    }

    pub fn children(&self) -> &[ProcessTree] {
        match self {
            ProcessTree::Activity(_) | ProcessTree::Tau => &[],
            ProcessTree::Sequence(c) | ProcessTree::Xor(c) | ProcessTree::Parallel(c) | ProcessTree::Loop(c) => c,
        }
    }

    pub fn activities(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.collect_activities(&mut out);
        out
    }

    fn collect_activities(&self, out: &mut BTreeSet<Symbol>) {
        if let ProcessTree::Activity(a) = self {
            out.insert(a.clone());
        }
        for c in self.children() {
            c.collect_activities(out);
        }
    }

    /// Sorts the children of commutative operators so that trees differing
    /// only in xor/parallel child order compare equal.
    pub fn canonical(&self) -> ProcessTree {
        let map = |c: &[ProcessTree]| c.iter().map(ProcessTree::canonical).collect::<Vec<_>>();
        match self {
            ProcessTree::Xor(c) => {
                let mut c = map(c);
                c.sort();
                ProcessTree::Xor(c)
            }
            ProcessTree::Parallel(c) => {
                let mut c = map(c);
                c.sort();
                ProcessTree::Parallel(c)
            }
            ProcessTree::Sequence(c) => ProcessTree::Sequence(map(c)),
            ProcessTree::Loop(c) => {
                let mut c = map(c);
                c[1..].sort();
                ProcessTree::Loop(c)
            }
            leaf => leaf.clone(),
        }
    }
}

impl fmt::Display for ProcessTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (op, children) = match self {
            ProcessTree::Activity(a) => return write!(f, "{a}"),
            ProcessTree::Tau => return f.write_str(TAU),
            ProcessTree::Sequence(c) => ("seq", c),
            ProcessTree::Xor(c) => ("xor", c),
            ProcessTree::Parallel(c) => ("and", c),
            ProcessTree::Loop(c) => ("loop", c),
        };
        write!(f, "{op}(")?;
        for (i, c) in children.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

struct TreeParser<'a> {
    src: &'a str,
    pos: usize,
}

impl TreeParser<'_> {
    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += self.src[self.pos..].chars().next().map_or(1, char::len_utf8);
        }
    }

    fn unexpected(&self) -> TreeParseError {
        match self.src[self.pos..].chars().next() {
            Some(c) => TreeParseError::Unexpected { found: c.to_string(), offset: self.pos },
            None => TreeParseError::Eof,
        }
    }

    fn ident(&mut self) -> Result<&str, TreeParseError> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let len = rest
            .find(|c: char| c == '(' || c == ')' || c == ',' || c.is_whitespace())
            .unwrap_or(rest.len());
        if len == 0 {
            return Err(self.unexpected());
        }
        self.pos += len;
        Ok(&self.src[start..start + len])
    }

    fn tree(&mut self) -> Result<ProcessTree, TreeParseError> {
        let name = self.ident()?.to_string();
        self.skip_ws();
        if !self.src[self.pos..].starts_with('(') {
            return Ok(if name == TAU { ProcessTree::Tau } else { ProcessTree::Activity(Symbol::new(&name)) });
        }
        self.pos += 1;
        let mut children = vec![self.tree()?];
        loop {
            self.skip_ws();
            match self.src[self.pos..].chars().next() {
                Some(',') => {
                    self.pos += 1;
                    children.push(self.tree()?);
                }
                Some(')') => {
                    self.pos += 1;
                    break;
                }
                _ => return Err(self.unexpected()),
            }
        }
        if children.len() < 2 {
            return Err(TreeParseError::Arity(name));
        }
        Ok(match name.as_str() {
            "seq" => ProcessTree::Sequence(children),
            "xor" => ProcessTree::Xor(children),
            "and" => ProcessTree::Parallel(children),
            "loop" => ProcessTree::Loop(children),
            _ => return Err(TreeParseError::Unexpected { found: name, offset: self.pos }),
        })
    }
}

/// Inductive Miner. `noise_threshold == 0` is plain IM; a positive threshold
/// enables infrequent-behaviour filtering (IMf) at every recursion level.
pub fn inductive_miner(db: &SequenceDatabase, noise_threshold: f64) -> ProcessTree {
    mine(db, noise_threshold.clamp(0.0, 1.0))
}

fn mine(log: &SequenceDatabase, threshold: f64) -> ProcessTree {
    let total = log.total_sequences();
    let empty = log.multiplicity(&Sequence::empty());
    if total == 0 || empty == total {
        return ProcessTree::Tau;
    }
    if empty > 0 {
        let rest = without_empty(log);
        if threshold == 0.0 || empty as f64 >= threshold * total as f64 {
            return ProcessTree::Xor(vec![ProcessTree::Tau, mine(&rest, threshold)]);
        }
        return mine(&rest, threshold);
    }

    let activities: BTreeSet<Symbol> = log.alphabet().symbols().iter().cloned().collect();
    if activities.len() == 1 && log.iter().all(|(s, _)| s.len() == 1) {
        return ProcessTree::Activity(activities.into_iter().next().expect("one activity"));
    }

    let mut dfg = build_dfg(log);
    if threshold > 0.0 {
        dfg = filter_dfg(&dfg, threshold);
    }
    let graph = Graph::new(&dfg, &activities);

    if let Some(groups) = graph.xor_cut() {
        let sublogs = split_xor(log, &groups);
        return ProcessTree::Xor(sublogs.iter().map(|l| mine(l, threshold)).collect());
    }
    if let Some(groups) = graph.sequence_cut() {
        let sublogs = split_project(log, &groups);
        return ProcessTree::Sequence(sublogs.iter().map(|l| mine(l, threshold)).collect());
    }
    if let Some(groups) = graph.parallel_cut() {
        let sublogs = split_project(log, &groups);
        return ProcessTree::Parallel(sublogs.iter().map(|l| mine(l, threshold)).collect());
    }
    if let Some(groups) = graph.loop_cut() {
        let sublogs = split_loop(log, &groups);
        return ProcessTree::Loop(sublogs.iter().map(|l| mine(l, threshold)).collect());
    }
    flower(&activities)
}

fn flower(activities: &BTreeSet<Symbol>) -> ProcessTree {
    let mut leaves: Vec<ProcessTree> = activities.iter().cloned().map(ProcessTree::Activity).collect();
    let body = if leaves.len() == 1 { leaves.remove(0) } else { ProcessTree::Xor(leaves) };
    ProcessTree::Loop(vec![body, ProcessTree::Tau])
}

fn without_empty(log: &SequenceDatabase) -> SequenceDatabase {
    let mut out = SequenceDatabase::new();
    for (s, n) in log.iter() {
        if !s.is_empty() {
            out.add(s.clone(), n);
        }
    }
    out
}

/// Dense view of a DFG restricted to one activity set.
struct Graph {
    acts: Vec<Symbol>,
    edge: Vec<Vec<bool>>,
    start: Vec<bool>,
    end: Vec<bool>,
}

type Groups = Vec<Vec<usize>>;

impl Graph {
    fn new(dfg: &DirectlyFollowsGraph, activities: &BTreeSet<Symbol>) -> Self {
        let acts: Vec<Symbol> = activities.iter().cloned().collect();
        let n = acts.len();
        let mut edge = vec![vec![false; n]; n];
        for (i, a) in acts.iter().enumerate() {
            for (j, b) in acts.iter().enumerate() {
                edge[i][j] = dfg.has_edge(a, b);
            }
        }
        let start = acts.iter().map(|a| dfg.starts.contains_key(a)).collect();
        let end = acts.iter().map(|a| dfg.ends.contains_key(a)).collect();
        Graph { acts, edge, start, end }
    }

    fn n(&self) -> usize {
        self.acts.len()
    }

    fn names(&self, groups: Groups) -> Vec<BTreeSet<Symbol>> {
        groups
            .into_iter()
            .map(|g| g.into_iter().map(|i| self.acts[i].clone()).collect())
            .collect()
    }

    /// Connected components of the undirected relation `related`, ordered by smallest member.
    fn components(&self, nodes: &[usize], related: impl Fn(usize, usize) -> bool) -> Groups {
        let mut comp: Vec<Option<usize>> = vec![None; self.n()];
        let mut groups: Groups = Vec::new();
        for &s in nodes {
            if comp[s].is_some() {
                continue;
            }
            let id = groups.len();
            let mut stack = vec![s];
            comp[s] = Some(id);
            let mut members = Vec::new();
            while let Some(u) = stack.pop() {
                members.push(u);
                for &v in nodes {
                    if comp[v].is_none() && related(u, v) {
                        comp[v] = Some(id);
                        stack.push(v);
                    }
                }
            }
            members.sort_unstable();
            groups.push(members);
        }
        groups
    }

    fn all(&self) -> Vec<usize> {
        (0..self.n()).collect()
    }

    fn xor_cut(&self) -> Option<Vec<BTreeSet<Symbol>>> {
        let groups = self.components(&self.all(), |u, v| self.edge[u][v] || self.edge[v][u]);
        (groups.len() >= 2).then(|| self.names(groups))
    }

    /// reach[a][b]: a non-empty path a ⇝ b exists.
    #[allow(clippy::needless_range_loop)]
    fn reachability(&self) -> Vec<Vec<bool>> {
        let n = self.n();
        let mut reach = self.edge.clone();
        for k in 0..n {
            for i in 0..n {
                if reach[i][k] {
                    for j in 0..n {
                        if reach[k][j] {
                            reach[i][j] = true;
                        }
                    }
                }
            }
        }
        reach
    }

    fn sequence_cut(&self) -> Option<Vec<BTreeSet<Symbol>>> {
        let n = self.n();
        let reach = self.reachability();
        // strongly connected components
        let mut groups = self.components(&self.all(), |u, v| u == v || (reach[u][v] && reach[v][u]));
        let group_reaches = |a: &[usize], b: &[usize]| a.iter().any(|&x| b.iter().any(|&y| reach[x][y]));
        // merge groups that are mutually unreachable
        loop {
            let mut merged = false;
            'outer: for i in 0..groups.len() {
                for j in i + 1..groups.len() {
                    if !group_reaches(&groups[i], &groups[j]) && !group_reaches(&groups[j], &groups[i]) {
                        let g = groups.remove(j);
                        groups[i].extend(g);
                        groups[i].sort_unstable();
                        merged = true;
                        break 'outer;
                    }
                }
            }
            if !merged {
                break;
            }
        }
        if groups.len() < 2 {
            return None;
        }
        let preds = |g: &[usize], groups: &Groups| groups.iter().filter(|o| o.as_slice() != g && group_reaches(o, g)).count();
        let snapshot = groups.clone();
        groups.sort_by_key(|g| (preds(g, &snapshot), g[0]));
        for i in 0..groups.len() {
            for j in i + 1..groups.len() {
                for &a in &groups[i] {
                    for &b in &groups[j] {
                        if !reach[a][b] || reach[b][a] {
                            return None;
                        }
                    }
                }
            }
        }
        debug_assert_eq!(groups.iter().map(Vec::len).sum::<usize>(), n);
        Some(self.names(groups))
    }

    fn parallel_cut(&self) -> Option<Vec<BTreeSet<Symbol>>> {
        let groups = self.components(&self.all(), |u, v| u != v && !(self.edge[u][v] && self.edge[v][u]));
        let (mut complete, deficient): (Groups, Groups) = groups
            .into_iter()
            .partition(|g| g.iter().any(|&a| self.start[a]) && g.iter().any(|&a| self.end[a]));
        if complete.is_empty() {
            return None;
        }
        for g in deficient {
            complete[0].extend(g);
        }
        complete[0].sort_unstable();
        complete.sort_by_key(|g| g[0]);
        (complete.len() >= 2).then(|| self.names(complete))
    }

    fn loop_cut(&self) -> Option<Vec<BTreeSet<Symbol>>> {
        let n = self.n();
        let in_body: Vec<bool> = (0..n).map(|a| self.start[a] || self.end[a]).collect();
        let rest: Vec<usize> = (0..n).filter(|&a| !in_body[a]).collect();
        if rest.is_empty() || !(0..n).any(|a| self.start[a]) {
            return None;
        }
        let comps = self.components(&rest, |u, v| self.edge[u][v] || self.edge[v][u]);
        let mut body: Vec<usize> = (0..n).filter(|&a| in_body[a]).collect();
        let body_set = body.clone();
        let mut redos: Groups = Vec::new();
        for c in comps {
            let valid = c.iter().all(|&a| {
                let exits: Vec<usize> = body_set.iter().copied().filter(|&b| self.edge[a][b]).collect();
                let entries: Vec<usize> = body_set.iter().copied().filter(|&b| self.edge[b][a]).collect();
                exits.iter().all(|&b| self.start[b])
                    && entries.iter().all(|&b| self.end[b])
                    && (exits.is_empty() || (0..n).filter(|&s| self.start[s]).all(|s| self.edge[a][s]))
                    && (entries.is_empty() || (0..n).filter(|&e| self.end[e]).all(|e| self.edge[e][a]))
            });
            if valid {
                redos.push(c);
            } else {
                body.extend(c);
            }
        }
        if redos.is_empty() {
            return None;
        }
        body.sort_unstable();
        let mut groups = vec![body];
        groups.extend(redos);
        Some(self.names(groups))
    }
}

fn project(seq: &Sequence, group: &BTreeSet<Symbol>) -> Sequence {
    seq.iter().filter(|s| group.contains(*s)).cloned().collect()
}

fn split_xor(log: &SequenceDatabase, groups: &[BTreeSet<Symbol>]) -> Vec<SequenceDatabase> {
    let mut out = vec![SequenceDatabase::new(); groups.len()];
    for (seq, n) in log.iter() {
        // first group with the largest overlap
        let mut best = 0;
        let mut best_overlap = 0;
        for (i, g) in groups.iter().enumerate() {
            let overlap = seq.iter().filter(|s| g.contains(*s)).count();
            if overlap > best_overlap {
                best = i;
                best_overlap = overlap;
            }
        }
        out[best].add(project(seq, &groups[best]), n);
    }
    out
}

fn split_project(log: &SequenceDatabase, groups: &[BTreeSet<Symbol>]) -> Vec<SequenceDatabase> {
    groups
        .iter()
        .map(|g| {
            let mut sub = SequenceDatabase::new();
            for (seq, n) in log.iter() {
                sub.add(project(seq, g), n);
            }
            sub
        })
        .collect()
}

/// Cuts each trace into alternating body / redo segments, inserting empty
/// body segments where the trace starts, ends or switches between redo parts.
fn split_loop(log: &SequenceDatabase, groups: &[BTreeSet<Symbol>]) -> Vec<SequenceDatabase> {
    let mut out = vec![SequenceDatabase::new(); groups.len()];
    let group_of = |s: &Symbol| groups.iter().position(|g| g.contains(s));
    for (seq, n) in log.iter() {
        let mut segments: Vec<(usize, Sequence)> = Vec::new();
        for s in seq.iter() {
            let Some(g) = group_of(s) else { continue };
            match segments.last_mut() {
                Some((cur, body)) if *cur == g => body.push(s.clone()),
                _ => segments.push((g, Sequence::new(vec![s.clone()]))),
            }
        }
        let mut expect_body = true;
        for (g, part) in segments {
            if expect_body && g != 0 {
                out[0].add(Sequence::empty(), n);
            } else if !expect_body && g == 0 {
                unreachable!("body segments never follow each other");
            }
            out[g].add(part, n);
            expect_body = g != 0;
        }
        if expect_body {
            out[0].add(Sequence::empty(), n);
        }
    }
    out
}

/// Compositional translation; `m0` marks the global source place and `mf` the sink.
pub fn tree_to_net(tree: &ProcessTree) -> AcceptingPetriNet {
    let mut b = NetBuilder { net: LabeledPetriNet::new(), places: 0, transitions: 0 };
    let source = b.place();
    let sink = b.place();
    b.translate(tree, source, sink);
    let net = b.net;
    let m0 = net.marking(&[(net.places()[source].as_str(), 1)]).expect("own place");
    let mf = net.marking(&[(net.places()[sink].as_str(), 1)]).expect("own place");
    AcceptingPetriNet::new(net, m0, mf).expect("markings sized for the net")
}

struct NetBuilder {
    net: LabeledPetriNet,
    places: usize,
    transitions: usize,
}

impl NetBuilder {
    fn place(&mut self) -> usize {
        self.places += 1;
        self.net.add_place(&format!("p{}", self.places)).expect("fresh id")
    }

    fn transition(&mut self, label: Option<Symbol>, from: &[usize], to: &[usize]) {
        self.transitions += 1;
        let t = self
            .net
            .add_transition(&format!("t{}", self.transitions), label)
            .expect("fresh id");
        for &p in from {
            self.net.add_arc_pt(p, t);
        }
        for &p in to {
            self.net.add_arc_tp(t, p);
        }
    }

    fn translate(&mut self, tree: &ProcessTree, entry: usize, exit: usize) {
        match tree {
            ProcessTree::Activity(a) => self.transition(Some(a.clone()), &[entry], &[exit]),
            ProcessTree::Tau => self.transition(None, &[entry], &[exit]),
            ProcessTree::Sequence(children) => {
                let mut cur = entry;
                for (i, c) in children.iter().enumerate() {
                    let next = if i + 1 == children.len() { exit } else { self.place() };
                    self.translate(c, cur, next);
                    cur = next;
                }
            }
            ProcessTree::Xor(children) => {
                for c in children {
                    self.translate(c, entry, exit);
                }
            }
            ProcessTree::Parallel(children) => {
                let ins: Vec<usize> = children.iter().map(|_| self.place()).collect();
                let outs: Vec<usize> = children.iter().map(|_| self.place()).collect();
                self.transition(None, &[entry], &ins);
                for (i, c) in children.iter().enumerate() {
                    self.translate(c, ins[i], outs[i]);
                }
                self.transition(None, &outs, &[exit]);
            }
            ProcessTree::Loop(children) => {
                let start = self.place();
                let end = self.place();
                self.transition(None, &[entry], &[start]);
                self.translate(&children[0], start, end);
                for redo in &children[1..] {
                    self.translate(redo, end, start);
                }
                self.transition(None, &[end], &[exit]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(s: &str) -> Symbol {
        Symbol::new(s)
    }

    fn tree(s: &str) -> ProcessTree {
        ProcessTree::parse(s).unwrap()
    }

    #[test]
    fn dfg_of_example_log() {
        let db = SequenceDatabase::from_counts(&[("a b c", 2), ("b a c", 3)]);
        let dfg = build_dfg(&db);
        let edges: Vec<(&str, &str, u64)> = dfg
            .edges
            .iter()
            .map(|((a, b), &w)| (a.name(), b.name(), w))
            .collect();
        assert_eq!(edges, vec![("a", "b", 2), ("a", "c", 3), ("b", "a", 3), ("b", "c", 2)]);
        assert_eq!(dfg.starts, BTreeMap::from([(sym("a"), 2), (sym("b"), 3)]));
        assert_eq!(dfg.ends, BTreeMap::from([(sym("c"), 5)]));

        let single = build_dfg(&SequenceDatabase::from_counts(&[("a", 1)]));
        assert!(single.edges.is_empty());
        assert_eq!(single.starts, BTreeMap::from([(sym("a"), 1)]));
        assert_eq!(single.ends, BTreeMap::from([(sym("a"), 1)]));

        let self_loop = build_dfg(&SequenceDatabase::from_counts(&[("a a", 1)]));
        assert_eq!(self_loop.weight(&sym("a"), &sym("a")), 1);
    }

    #[test]
    fn filtering() {
        let db = SequenceDatabase::from_counts(&[("a b", 10), ("a c", 1), ("x a", 3), ("x y", 2)]);
        let dfg = build_dfg(&db);
        assert_eq!(filter_dfg(&dfg, 0.0), dfg);
        let f = filter_dfg(&dfg, 0.2);
        assert!(f.has_edge(&sym("a"), &sym("b")));
        assert!(!f.has_edge(&sym("a"), &sym("c")));
        assert_eq!(f.starts.keys().cloned().collect::<Vec<_>>(), vec![sym("a"), sym("x")]);
        let f1 = filter_dfg(&dfg, 1.0);
        assert!(f1.has_edge(&sym("x"), &sym("a")));
        assert!(!f1.has_edge(&sym("x"), &sym("y")));
        assert_eq!(f1.starts.len(), 1);
    }

    #[test]
    fn mines_sequence_of_parallel() {
        let db = SequenceDatabase::from_counts(&[("a b c", 1), ("a c b", 1)]);
        assert_eq!(inductive_miner(&db, 0.0).canonical(), tree("seq(a, and(b, c))"));
    }

    #[test]
    fn mines_choice_and_sequence() {
        assert_eq!(inductive_miner(&SequenceDatabase::from_counts(&[("a", 1), ("b", 1)]), 0.0), tree("xor(a, b)"));
        assert_eq!(inductive_miner(&SequenceDatabase::from_counts(&[("a b", 1)]), 0.0), tree("seq(a, b)"));
    }

    #[test]
    fn mines_loops_and_optional_parts() {
        let db = SequenceDatabase::from_counts(&[("a b", 1), ("a b c a b", 1)]);
        assert_eq!(inductive_miner(&db, 0.0), tree("loop(seq(a, b), c)"));
        let db = SequenceDatabase::from_counts(&[("a", 2), ("", 1)]);
        assert_eq!(inductive_miner(&db, 0.0), tree("xor(tau, a)"));
        let db = SequenceDatabase::from_counts(&[("a a a", 1)]);
        assert_eq!(inductive_miner(&db, 0.0), tree("loop(a, tau)"));
    }

    #[test]
    fn imf_drops_rare_behaviour() {
        let db = SequenceDatabase::from_counts(&[("a b c", 50), ("a c", 1)]);
        assert_eq!(inductive_miner(&db, 0.0), tree("seq(a, xor(tau, b), c)"));
        assert_eq!(inductive_miner(&db, 0.2), tree("seq(a, b, c)"));
    }

    #[test]
    fn tree_round_trips_through_text() {
        let t = tree("seq(a, loop(xor(b, tau), c), and(d, e))");
        assert_eq!(ProcessTree::parse(&t.to_string()).unwrap(), t);
        assert!(matches!(ProcessTree::parse("seq(a)"), Err(TreeParseError::Arity(_))));
        assert!(ProcessTree::parse("seq(a, b").is_err());
        assert!(ProcessTree::parse("foo(a, b)").is_err());
    }

    #[test]
    fn translations_accept_expected_words() {
        let apn = tree_to_net(&tree("xor(a, b)"));
        for (w, ok) in [("a", true), ("b", true), ("", false), ("a b", false)] {
            assert_eq!(apn.accepts(&Sequence::parse(w), 16).unwrap(), ok, "{w}");
        }
        let apn = tree_to_net(&tree("seq(a, and(b, c))"));
        for (w, ok) in [("a b c", true), ("a c b", true), ("a b", false), ("b a c", false)] {
            assert_eq!(apn.accepts(&Sequence::parse(w), 16).unwrap(), ok, "{w}");
        }
        let apn = tree_to_net(&tree("loop(a, tau)"));
        for (w, ok) in [("a", true), ("a a", true), ("a a a", true), ("a a a a", true), ("", false)] {
            assert_eq!(apn.accepts(&Sequence::parse(w), 16).unwrap(), ok, "{w}");
        }
    }
}
