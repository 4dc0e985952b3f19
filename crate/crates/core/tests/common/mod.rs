//! Independent oracles and random generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seqpredict::discovery::ProcessTree;
use seqpredict::{AcceptingPetriNet, LabeledPetriNet, Marking, Sequence, SequenceDatabase, Symbol};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn sym(s: &str) -> Symbol {
    Symbol::new(s)
}

/// Random accepting net with at most 8 places and 8 transitions over {a, b, c, τ}.
pub fn random_net(rng: &mut impl Rng) -> AcceptingPetriNet {
    let n_places = rng.random_range(2..=8);
    let n_trans = rng.random_range(1..=8);
    let mut net = LabeledPetriNet::new();
    for p in 0..n_places {
        net.add_place(&format!("p{p}")).unwrap();
    }
    let labels = [Some("a"), Some("b"), Some("c"), None];
    for t in 0..n_trans {
        let label = labels.choose(rng).unwrap().map(Symbol::new);
        let id = net.add_transition(&format!("t{t}"), label).unwrap();
        let pre: BTreeSet<usize> = (0..rng.random_range(1..=2)).map(|_| rng.random_range(0..n_places)).collect();
        let post: BTreeSet<usize> = (0..rng.random_range(0..=2)).map(|_| rng.random_range(0..n_places)).collect();
        for p in pre {
            net.add_arc_pt(p, id);
        }
        for p in post {
            net.add_arc_tp(id, p);
        }
    }
    let mut m0 = vec![0u32; n_places];
    m0[0] = 1;
    if rng.random_bool(0.2) {
        m0[rng.random_range(0..n_places)] += 1;
    }
    let m0 = Marking::from_counts(m0);
    let tmp = AcceptingPetriNet::new(net.clone(), m0.clone(), m0.clone()).unwrap();
    // usually the end of a short random run, so that most cases are feasible
    let mf = if rng.random_bool(0.85) {
        let mut m = m0.clone();
        for _ in 0..rng.random_range(0..=6) {
            let next = successors(&tmp, &m, 5);
            match next.choose(rng) {
                Some((_, n)) => m = n.clone(),
                None => break,
            }
        }
        m
    } else {
        let mut counts = vec![0u32; n_places];
        counts[rng.random_range(0..n_places)] = 1;
        Marking::from_counts(counts)
    };
    AcceptingPetriNet::new(net, m0, mf).unwrap()
}

pub fn random_word(rng: &mut impl Rng, max_len: usize, symbols: &[&str]) -> Vec<Symbol> {
    let len = rng.random_range(0..=max_len);
    (0..len).map(|_| sym(symbols.choose(rng).unwrap())).collect()
}

/// Firing computed from presets and postsets, independent of the library's `fire`.
pub fn successors(apn: &AcceptingPetriNet, m: &Marking, budget: u32) -> Vec<(usize, Marking)> {
    let net = &apn.net;
    let mut out = Vec::new();
    for t in 0..net.transition_count() {
        let mut counts = m.counts().to_vec();
        let mut enabled = true;
        for &p in net.preset(t) {
            if counts[p] == 0 {
                enabled = false;
                break;
            }
            counts[p] -= 1;
        }
        if !enabled {
            continue;
        }
        for &p in net.postset(t) {
            counts[p] += 1;
        }
        if counts.iter().sum::<u32>() <= budget {
            out.push((t, Marking::from_counts(counts)));
        }
    }
    out
}

pub type ReachGraph = HashMap<Marking, Vec<(usize, Marking)>>;

/// Markings reachable from the initial marking and the subset that can still reach the final one.
pub fn reachability(apn: &AcceptingPetriNet, budget: u32) -> (ReachGraph, HashSet<Marking>) {
    let mut graph: ReachGraph = HashMap::new();
    let mut queue = VecDeque::from([apn.initial.clone()]);
    while let Some(m) = queue.pop_front() {
        if graph.contains_key(&m) {
            continue;
        }
        let next = successors(apn, &m, budget);
        for (_, n) in &next {
            if !graph.contains_key(n) {
                queue.push_back(n.clone());
            }
        }
        graph.insert(m, next);
    }
    let mut coreach: HashSet<Marking> = HashSet::new();
    if graph.contains_key(&apn.final_marking) {
        coreach.insert(apn.final_marking.clone());
    }
    loop {
        let before = coreach.len();
        for (m, next) in &graph {
            if !coreach.contains(m) && next.iter().any(|(_, n)| coreach.contains(n)) {
                coreach.insert(m.clone());
            }
        }
        if coreach.len() == before {
            break;
        }
    }
    (graph, coreach)
}

/// Minimal (prefix-)alignment cost by Bellman-Ford relaxation over the product graph,
/// with log, visible model and τ moves costing 1, 1 and 0. `None` when infeasible.
pub fn oracle_alignment_cost(apn: &AcceptingPetriNet, word: &[Symbol], budget: u32, prefix_mode: bool) -> Option<u64> {
    let (graph, coreach) = reachability(apn, budget);
    let n = word.len();
    let mut dist: HashMap<(usize, Marking), u64> = HashMap::new();
    dist.insert((0, apn.initial.clone()), 0);
    loop {
        let mut changed = false;
        let snapshot: Vec<((usize, Marking), u64)> = dist.iter().map(|(k, v)| (k.clone(), *v)).collect();
        for ((i, m), d) in snapshot {
            let mut relax = |key: (usize, Marking), cost: u64| {
                let e = dist.entry(key).or_insert(u64::MAX);
                if cost < *e {
                    *e = cost;
                    changed = true;
                }
            };
            if i < n {
                relax((i + 1, m.clone()), d + 1);
            }
            for (t, next) in &graph[&m] {
                match apn.net.label(*t) {
                    None => relax((i, next.clone()), d),
                    Some(l) => {
                        relax((i, next.clone()), d + 1);
                        if i < n && &word[i] == l {
                            relax((i + 1, next.clone()), d);
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    dist.iter()
        .filter(|((i, m), _)| *i == n && if prefix_mode { coreach.contains(m) } else { *m == apn.final_marking })
        .map(|(_, d)| *d)
        .min()
}

/// Words of at most `max_len` symbols in the language of `tree`.
pub fn tree_language(tree: &ProcessTree, max_len: usize) -> BTreeSet<Vec<Symbol>> {
    let concat = |a: &BTreeSet<Vec<Symbol>>, b: &BTreeSet<Vec<Symbol>>| -> BTreeSet<Vec<Symbol>> {
        let mut out = BTreeSet::new();
        for x in a {
            for y in b {
                if x.len() + y.len() <= max_len {
                    out.insert(x.iter().chain(y).cloned().collect());
                }
            }
        }
        out
    };
    match tree {
        ProcessTree::Tau => BTreeSet::from([Vec::new()]),
        ProcessTree::Activity(a) => {
            if max_len == 0 {
                BTreeSet::new()
            } else {
                BTreeSet::from([vec![a.clone()]])
            }
        }
        ProcessTree::Sequence(cs) => cs
            .iter()
            .fold(BTreeSet::from([Vec::new()]), |acc, c| concat(&acc, &tree_language(c, max_len))),
        ProcessTree::Xor(cs) => cs.iter().flat_map(|c| tree_language(c, max_len)).collect(),
        ProcessTree::Parallel(cs) => cs.iter().fold(BTreeSet::from([Vec::new()]), |acc, c| {
            let lang = tree_language(c, max_len);
            let mut out = BTreeSet::new();
            for x in &acc {
                for y in &lang {
                    if x.len() + y.len() <= max_len {
                        shuffles(x, y, &mut Vec::new(), &mut out);
                    }
                }
            }
            out
        }),
        ProcessTree::Loop(cs) => {
            let body = tree_language(&cs[0], max_len);
            let redo: BTreeSet<Vec<Symbol>> = cs[1..].iter().flat_map(|c| tree_language(c, max_len)).collect();
            let step = concat(&redo, &body);
            let mut all = body.clone();
            let mut frontier = body;
            loop {
                let next: BTreeSet<Vec<Symbol>> = concat(&frontier, &step).difference(&all).cloned().collect();
                if next.is_empty() {
                    break;
                }
                all.extend(next.iter().cloned());
                frontier = next;
            }
            all
        }
    }
}

fn shuffles(x: &[Symbol], y: &[Symbol], cur: &mut Vec<Symbol>, out: &mut BTreeSet<Vec<Symbol>>) {
    if x.is_empty() && y.is_empty() {
        out.insert(cur.clone());
        return;
    }
    if let Some((h, rest)) = x.split_first() {
        cur.push(h.clone());
        shuffles(rest, y, cur, out);
        cur.pop();
    }
    if let Some((h, rest)) = y.split_first() {
        cur.push(h.clone());
        shuffles(x, rest, cur, out);
        cur.pop();
    }
}

/// Visible words of at most `max_len` symbols that lead from the initial to the final marking.
pub fn net_language(apn: &AcceptingPetriNet, max_len: usize, budget: u32) -> BTreeSet<Vec<Symbol>> {
    let mut out = BTreeSet::new();
    let mut seen: HashSet<(Marking, Vec<Symbol>)> = HashSet::new();
    let mut queue = VecDeque::from([(apn.initial.clone(), Vec::new())]);
    while let Some((m, w)) = queue.pop_front() {
        if !seen.insert((m.clone(), w.clone())) {
            continue;
        }
        if m == apn.final_marking {
            out.insert(w.clone());
        }
        for (t, next) in successors(apn, &m, budget) {
            let mut w2 = w.clone();
            if let Some(l) = apn.net.label(t) {
                if w.len() == max_len {
                    continue;
                }
                w2.push(l.clone());
            }
            queue.push_back((next, w2));
        }
    }
    out
}

pub fn random_tree(rng: &mut impl Rng, depth: usize, activities: &mut Vec<&'static str>) -> ProcessTree {
    if depth == 0 || activities.is_empty() || rng.random_bool(0.35) {
        if activities.is_empty() || rng.random_bool(0.1) {
            return ProcessTree::Tau;
        }
        return ProcessTree::Activity(sym(activities.pop().unwrap()));
    }
    let arity = rng.random_range(2..=3);
    let children: Vec<ProcessTree> = (0..arity).map(|_| random_tree(rng, depth - 1, activities)).collect();
    match rng.random_range(0..4) {
        0 => ProcessTree::Sequence(children),
        1 => ProcessTree::Xor(children),
        2 => ProcessTree::Parallel(children),
        _ => ProcessTree::Loop(children.into_iter().take(2).collect()),
    }
}

pub fn random_db(rng: &mut impl Rng, n_seqs: usize, max_len: usize, symbols: &[&str]) -> SequenceDatabase {
    let mut db = SequenceDatabase::new();
    for _ in 0..n_seqs {
        let len = rng.random_range(1..=max_len);
        let word: Vec<Symbol> = (0..len).map(|_| sym(symbols.choose(rng).unwrap())).collect();
        db.add(Sequence::new(word), rng.random_range(1..=3));
    }
    db
}

/// Likelihood of `obs` as a sum over every hidden state path.
pub fn path_sum_likelihood(initial: &[f64], transition: &[Vec<f64>], emission: &[Vec<f64>], obs: &[usize]) -> f64 {
    let n = initial.len();
    let mut total = 0.0;
    let paths = n.pow(obs.len() as u32);
    for code in 0..paths {
        let mut states = Vec::with_capacity(obs.len());
        let mut c = code;
        for _ in 0..obs.len() {
            states.push(c % n);
            c /= n;
        }
        let mut p = initial[states[0]] * emission[states[0]][obs[0]];
        for i in 1..obs.len() {
            p *= transition[states[i - 1]][states[i]] * emission[states[i]][obs[i]];
        }
        total += p;
    }
    total
}

pub fn random_stochastic(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.random::<f64>() + 0.05).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / sum).collect()
}
