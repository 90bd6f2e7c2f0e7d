//! Language-level operations on generators: reachability, trimming,
//! synchronous product, natural projection, minimization and comparison.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::model::{Alphabet, Event, EventId, Generator, StateId};

/// Keeps the states in `keep`, preserving their relative order. The result is
/// empty when the initial state is dropped.
pub(crate) fn restrict(g: &Generator, keep: &FixedBitSet) -> Generator {
    restrict_indexed(g, keep).0
}

/// As [`restrict`], also returning the original index of every kept state.
pub(crate) fn restrict_indexed(g: &Generator, keep: &FixedBitSet) -> (Generator, Vec<StateId>) {
    let Some(init) = g.initial() else {
        return (g.clone(), Vec::new());
    };
    if !keep.contains(init) {
        return (Generator::empty(g.name(), g.alphabet().clone()), Vec::new());
    }
    let mut index = vec![usize::MAX; g.num_states()];
    let mut n = 0;
    for s in keep.ones() {
        index[s] = n;
        n += 1;
    }
    let mut out = Generator::with_states(g.name(), g.alphabet().clone(), n, index[init]);
    for s in keep.ones() {
        if g.is_marked(s) {
            out.set_marked(index[s], true);
        }
        for (e, t) in g.out(s) {
            if keep.contains(t) {
                out.add_transition(index[s], e, index[t]);
            }
        }
    }
    (out, keep.ones().collect())
}

pub(crate) fn reachable_set(g: &Generator) -> FixedBitSet {
    let mut seen = FixedBitSet::with_capacity(g.num_states());
    let Some(init) = g.initial() else {
        return seen;
    };
    let mut stack = vec![init];
    seen.insert(init);
    while let Some(s) = stack.pop() {
        for (_, t) in g.out(s) {
            if !seen.put(t) {
                stack.push(t);
            }
        }
    }
    seen
}

pub(crate) fn coreachable_set(g: &Generator) -> FixedBitSet {
    let n = g.num_states();
    let mut preds: Vec<Vec<StateId>> = vec![Vec::new(); n];
    for (s, _, t) in g.transitions() {
        preds[t].push(s);
    }
    let mut seen = FixedBitSet::with_capacity(n);
    let mut stack: Vec<StateId> = g.marked_states().collect();
    for &m in &stack {
        seen.insert(m);
    }
    while let Some(t) = stack.pop() {
        for &s in &preds[t] {
            if !seen.put(s) {
                stack.push(s);
            }
        }
    }
    seen
}

pub fn reachable(g: &Generator) -> Generator {
    restrict(g, &reachable_set(g))
}

pub fn coreachable(g: &Generator) -> Generator {
    restrict(g, &coreachable_set(g))
}

/// Reachable and coreachable part; recognizes the same marked language.
pub fn trim(g: &Generator) -> Generator {
    let mut keep = reachable_set(g);
    keep.intersect_with(&coreachable_set(g));
    restrict(g, &keep)
}

/// Every reachable state can reach a marked state. True for the empty generator.
pub fn is_nonblocking(g: &Generator) -> bool {
    let reach = reachable_set(g);
    let coreach = coreachable_set(g);
    reach.is_subset(&coreach)
}

/// Synchronous product: handshake on shared events, interleaving on private ones.
/// States are numbered in BFS discovery order; the result is reachable.
pub fn sync(gs: &[&Generator]) -> Result<Generator> {
    sync_with_components(gs).map(|(g, _)| g)
}

/// Product that also reports, for every product state, the component states.
pub(crate) fn sync_with_components(gs: &[&Generator]) -> Result<(Generator, Vec<Vec<StateId>>)> {
    let Some(first) = gs.first() else {
        return Err(Error::AlphabetMismatch("sync of an empty list".into()));
    };
    let mut alphabet = first.alphabet().clone();
    for g in &gs[1..] {
        alphabet = alphabet.union(g.alphabet())?;
    }
    let name = gs.iter().map(|g| g.name()).collect::<Vec<_>>().join("||");
    if gs.iter().any(|g| g.is_empty()) {
        return Ok((Generator::empty(&name, alphabet), Vec::new()));
    }
    let events: Vec<EventId> = alphabet.iter().map(|e| e.id).collect();
    // participants[i] = component indices whose alphabet contains events[i]
    let participants: Vec<Vec<usize>> = events
        .iter()
        .map(|&e| (0..gs.len()).filter(|&k| gs[k].alphabet().contains(e)).collect())
        .collect();

    let init: Vec<StateId> = gs.iter().map(|g| g.initial().unwrap()).collect();
    let mut index: HashMap<Vec<StateId>, StateId> = HashMap::new();
    let mut tuples: Vec<Vec<StateId>> = Vec::new();
    let mut edges: Vec<(StateId, EventId, StateId)> = Vec::new();
    index.insert(init.clone(), 0);
    tuples.push(init);
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let cur = tuples[i].clone();
        'ev: for (k, &e) in events.iter().enumerate() {
            let mut next = cur.clone();
            for &c in &participants[k] {
                match gs[c].step(cur[c], e) {
                    Some(t) => next[c] = t,
                    None => continue 'ev,
                }
            }
            let j = match index.get(&next) {
                Some(&j) => j,
                None => {
                    let j = tuples.len();
                    index.insert(next.clone(), j);
                    tuples.push(next);
                    queue.push_back(j);
                    j
                }
            };
            edges.push((i, e, j));
        }
    }
    let mut out = Generator::with_states(&name, alphabet, tuples.len(), 0);
    for (i, t) in tuples.iter().enumerate() {
        if t.iter().enumerate().all(|(c, &s)| gs[c].is_marked(s)) {
            out.set_marked(i, true);
        }
    }
    for (s, e, t) in edges {
        out.add_transition(s, e, t);
    }
    Ok((out, tuples))
}

/// Determinized reachable subsets of `g` over the kept events, erased events
/// treated as silent moves. Subsets are numbered in BFS discovery order.
#[derive(Debug, Clone)]
pub(crate) struct SubsetAutomaton {
    pub sets: Vec<FixedBitSet>,
    pub delta: Vec<BTreeMap<EventId, usize>>,
}

pub(crate) fn silent_closure(g: &Generator, set: &mut FixedBitSet, silent: &BTreeSet<EventId>) {
    let mut stack: Vec<StateId> = set.ones().collect();
    while let Some(s) = stack.pop() {
        for (e, t) in g.out(s) {
            if silent.contains(&e) && !set.put(t) {
                stack.push(t);
            }
        }
    }
}

pub(crate) fn subset_construction(g: &Generator, keep: &BTreeSet<EventId>) -> SubsetAutomaton {
    let mut out = SubsetAutomaton {
        sets: Vec::new(),
        delta: Vec::new(),
    };
    let Some(init) = g.initial() else {
        return out;
    };
    let silent: BTreeSet<EventId> = g.alphabet().ids().difference(keep).copied().collect();
    let kept: Vec<EventId> = g.alphabet().ids().intersection(keep).copied().collect();
    let n = g.num_states();
    let mut start = FixedBitSet::with_capacity(n);
    start.insert(init);
    silent_closure(g, &mut start, &silent);
    let mut index: HashMap<FixedBitSet, usize> = HashMap::new();
    index.insert(start.clone(), 0);
    out.sets.push(start);
    out.delta.push(BTreeMap::new());
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        for &e in &kept {
            let mut next = FixedBitSet::with_capacity(n);
            for s in out.sets[i].ones() {
                if let Some(t) = g.step(s, e) {
                    next.insert(t);
                }
            }
            if next.count_ones(..) == 0 {
                continue;
            }
            silent_closure(g, &mut next, &silent);
            let j = match index.get(&next) {
                Some(&j) => j,
                None => {
                    let j = out.sets.len();
                    index.insert(next.clone(), j);
                    out.sets.push(next);
                    out.delta.push(BTreeMap::new());
                    queue.push_back(j);
                    j
                }
            };
            out.delta[i].insert(e, j);
        }
    }
    out
}

/// Natural projection onto `keep`, determinized and minimized.
pub fn project(g: &Generator, keep: &BTreeSet<EventId>) -> Result<Generator> {
    if let Some(e) = keep.iter().find(|e| !g.alphabet().contains(**e)) {
        return Err(Error::UnknownEvent {
            event: *e,
            generator: g.name().to_string(),
        });
    }
    let alphabet = g.alphabet().restrict(keep);
    let sub = subset_construction(g, keep);
    let name = format!("P({})", g.name());
    if sub.sets.is_empty() {
        return Ok(Generator::empty(&name, alphabet));
    }
    let mut out = Generator::with_states(&name, alphabet, sub.sets.len(), 0);
    for (i, set) in sub.sets.iter().enumerate() {
        if set.ones().any(|s| g.is_marked(s)) {
            out.set_marked(i, true);
        }
        for (&e, &j) in &sub.delta[i] {
            out.add_transition(i, e, j);
        }
    }
    Ok(minimize(&out))
}

/// Adds a selfloop on each listed event at every state.
pub fn selfloop(g: &Generator, events: &[Event]) -> Result<Generator> {
    selfloop_where(g, events, |_| true)
}

/// Adds a selfloop on each listed event at the states satisfying `at`.
/// Listed events may already be in the alphabet only if they label nothing but selfloops.
pub fn selfloop_where(g: &Generator, events: &[Event], at: impl Fn(StateId) -> bool) -> Result<Generator> {
    let mut out = g.clone();
    for ev in events {
        out.alphabet_mut().insert(*ev)?;
        if let Some((s, _, _)) = g.transitions().find(|&(s, e, t)| e == ev.id && s != t) {
            return Err(Error::SelfloopCollision { event: ev.id, state: s });
        }
    }
    for s in 0..out.num_states() {
        if at(s) {
            for ev in events {
                out.add_transition(s, ev.id, s);
            }
        }
    }
    Ok(out)
}

/// Extends `g` to `alphabet` by selflooping every event it does not already have.
pub fn lift(g: &Generator, alphabet: &Alphabet) -> Result<Generator> {
    let missing: Vec<Event> = alphabet
        .iter()
        .filter(|e| !g.alphabet().contains(e.id))
        .copied()
        .collect();
    for e in g.alphabet().iter() {
        if let Some(other) = alphabet.get(e.id) {
            if other != e {
                return Err(Error::FlagConflict(e.id));
            }
        }
    }
    selfloop(g, &missing)
}

/// Renumbers reachable states in BFS order with ascending event expansion.
pub(crate) fn canonical(g: &Generator) -> Generator {
    let Some(init) = g.initial() else {
        return g.clone();
    };
    let mut order = vec![usize::MAX; g.num_states()];
    let mut seq = vec![init];
    order[init] = 0;
    let mut head = 0;
    while head < seq.len() {
        let s = seq[head];
        head += 1;
        for (_, t) in g.out(s) {
            if order[t] == usize::MAX {
                order[t] = seq.len();
                seq.push(t);
            }
        }
    }
    let mut out = Generator::with_states(g.name(), g.alphabet().clone(), seq.len(), 0);
    for (i, &s) in seq.iter().enumerate() {
        if g.is_marked(s) {
            out.set_marked(i, true);
        }
        for (e, t) in g.out(s) {
            out.add_transition(i, e, order[t]);
        }
    }
    out
}

/// Canonical minimal recognizer of the (closed, marked) language pair.
///
/// The reachable part is completed with a dump state, refined by marking and
/// successor classes, and the dump class is removed again.
pub fn minimize(g: &Generator) -> Generator {
    let g = reachable(g);
    if g.is_empty() {
        return g;
    }
    let n = g.num_states();
    let dump = n;
    let events: Vec<EventId> = g.alphabet().iter().map(|e| e.id).collect();
    let succ = |s: usize, e: EventId| -> usize {
        if s == dump {
            dump
        } else {
            g.step(s, e).unwrap_or(dump)
        }
    };
    let mut class: Vec<usize> = (0..=n)
        .map(|s| {
            if s == dump {
                0
            } else if g.is_marked(s) {
                2
            } else {
                1
            }
        })
        .collect();
    let mut count = {
        let distinct: BTreeSet<usize> = class.iter().copied().collect();
        distinct.len()
    };
    loop {
        let mut ids: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut next = vec![0; n + 1];
        // dump first so its class id stays 0
        for s in std::iter::once(dump).chain(0..n) {
            let mut sig = Vec::with_capacity(events.len() + 1);
            sig.push(class[s]);
            sig.extend(events.iter().map(|&e| class[succ(s, e)]));
            let fresh = ids.len();
            next[s] = *ids.entry(sig).or_insert(fresh);
        }
        let new_count = ids.len();
        class = next;
        if new_count == count {
            break;
        }
        count = new_count;
    }
    let dump_class = class[dump];
    let init = g.initial().unwrap();
    // the initial partition keeps every real state out of the dump class
    let mut rep: BTreeMap<usize, usize> = BTreeMap::new();
    for (s, &c) in class.iter().enumerate().take(n) {
        rep.entry(c).or_insert(s);
    }
    let classes: Vec<usize> = rep.keys().copied().filter(|&c| c != dump_class).collect();
    let pos: HashMap<usize, usize> = classes.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut q = Generator::with_states(g.name(), g.alphabet().clone(), classes.len(), pos[&class[init]]);
    for (i, &c) in classes.iter().enumerate() {
        let s = rep[&c];
        if g.is_marked(s) {
            q.set_marked(i, true);
        }
        for (e, t) in g.out(s) {
            q.add_transition(i, e, pos[&class[t]]);
        }
    }
    canonical(&q)
}

fn same_structure(a: &Generator, b: &Generator) -> bool {
    a.num_states() == b.num_states()
        && a.initial() == b.initial()
        && a.marked_states().eq(b.marked_states())
        && a.transitions().eq(b.transitions())
}

/// Equality of both the closed and the marked languages.
pub fn language_equal(a: &Generator, b: &Generator) -> bool {
    same_structure(&minimize(a), &minimize(b))
}

/// Closed languages only.
pub fn closed_language_equal(a: &Generator, b: &Generator) -> bool {
    language_equal(&mark_all(a), &mark_all(b))
}

/// Marked languages only.
pub fn marked_language_equal(a: &Generator, b: &Generator) -> bool {
    language_equal(&trim(a), &trim(b))
}

pub(crate) fn mark_all(g: &Generator) -> Generator {
    let mut out = g.clone();
    for s in 0..out.num_states() {
        out.set_marked(s, true);
    }
    out
}

/// `L(a) ⊆ L(b)` and `L_m(a) ⊆ L_m(b)`.
pub fn is_sublanguage(a: &Generator, b: &Generator) -> bool {
    let Some(ia) = a.initial() else {
        return true;
    };
    let Some(ib) = b.initial() else {
        return false;
    };
    let mut seen: BTreeSet<(StateId, StateId)> = BTreeSet::new();
    let mut stack = vec![(ia, ib)];
    seen.insert((ia, ib));
    while let Some((x, y)) = stack.pop() {
        if a.is_marked(x) && !b.is_marked(y) {
            return false;
        }
        for (e, x2) in a.out(x) {
            let Some(y2) = b.step(y, e) else {
                return false;
            };
            if seen.insert((x2, y2)) {
                stack.push((x2, y2));
            }
        }
    }
    true
}

/// `L_m(a) ⊆ L_m(b)`.
pub fn is_marked_sublanguage(a: &Generator, b: &Generator) -> bool {
    is_sublanguage(&trim(a), b)
}

/// A transition-, marking- and initial-preserving bijection between the
/// generators as given (no minimization).
pub fn isomorphic(a: &Generator, b: &Generator) -> bool {
    if a.alphabet().ids() != b.alphabet().ids()
        || a.num_states() != b.num_states()
        || a.num_marked() != b.num_marked()
        || a.num_transitions() != b.num_transitions()
    {
        return false;
    }
    let (Some(ia), Some(ib)) = (a.initial(), b.initial()) else {
        return a.is_empty() && b.is_empty();
    };
    let n = a.num_states();
    let signature = |g: &Generator, s: StateId| -> (bool, Vec<EventId>, usize) {
        let indeg = g.transitions().filter(|&(_, _, t)| t == s).count();
        (g.is_marked(s), g.out(s).map(|(e, _)| e).collect(), indeg)
    };
    let sig_a: Vec<_> = (0..n).map(|s| signature(a, s)).collect();
    let sig_b: Vec<_> = (0..n).map(|s| signature(b, s)).collect();

    fn propagate(
        a: &Generator,
        b: &Generator,
        fwd: &mut [Option<StateId>],
        back: &mut [Option<StateId>],
        x: StateId,
        y: StateId,
    ) -> bool {
        let mut stack = vec![(x, y)];
        while let Some((x, y)) = stack.pop() {
            match (fwd[x], back[y]) {
                (Some(y0), _) if y0 != y => return false,
                (_, Some(x0)) if x0 != x => return false,
                (Some(_), Some(_)) => continue,
                _ => {}
            }
            fwd[x] = Some(y);
            back[y] = Some(x);
            if a.is_marked(x) != b.is_marked(y) {
                return false;
            }
            let ea: Vec<_> = a.out(x).collect();
            let eb: Vec<_> = b.out(y).collect();
            if ea.len() != eb.len() {
                return false;
            }
            for ((e1, t1), (e2, t2)) in ea.into_iter().zip(eb) {
                if e1 != e2 {
                    return false;
                }
                stack.push((t1, t2));
            }
        }
        true
    }

    fn search(
        a: &Generator,
        b: &Generator,
        sig_a: &[(bool, Vec<EventId>, usize)],
        sig_b: &[(bool, Vec<EventId>, usize)],
        fwd: Vec<Option<StateId>>,
        back: Vec<Option<StateId>>,
    ) -> bool {
        let Some(x) = fwd.iter().position(|m| m.is_none()) else {
            return a
                .transitions()
                .all(|(s, e, t)| b.step(fwd[s].unwrap(), e) == Some(fwd[t].unwrap()));
        };
        for y in 0..b.num_states() {
            if back[y].is_some() || sig_a[x] != sig_b[y] {
                continue;
            }
            let (mut f, mut bk) = (fwd.clone(), back.clone());
            if propagate(a, b, &mut f, &mut bk, x, y) && search(a, b, sig_a, sig_b, f, bk) {
                return true;
            }
        }
        false
    }

    let mut fwd = vec![None; n];
    let mut back = vec![None; n];
    if !propagate(a, b, &mut fwd, &mut back, ia, ib) {
        return false;
    }
    search(a, b, &sig_a, &sig_b, fwd, back)
}
