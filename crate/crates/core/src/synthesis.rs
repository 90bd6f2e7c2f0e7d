//! Controllability, relative observability and the supremal controllable,
//! relatively observable sublanguage.

use std::collections::hash_map::Entry;
use std::collections::{BTreeSet, HashMap};

use fixedbitset::FixedBitSet;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{EventId, Generator, StateId};
use crate::ops::{self, minimize, restrict_indexed, sync_with_components, trim};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControllabilityVerdict {
    pub controllable: bool,
    /// Shortlex-least `s·σ` with `s ∈ K̄`, `σ` uncontrollable, `sσ ∈ L(G) \ K̄`.
    pub witness: Option<Vec<EventId>>,
}

fn same_event_ids(a: &Generator, b: &Generator) -> Result<()> {
    if a.alphabet().ids() != b.alphabet().ids() {
        return Err(Error::AlphabetMismatch(format!(
            "`{}` and `{}` have different event sets",
            a.name(),
            b.name()
        )));
    }
    Ok(())
}

/// Decides `K̄Σ_uc ∩ L(G) ⊆ K̄`, where `K` is the marked language of `k`.
pub fn is_controllable(k: &Generator, g: &Generator) -> Result<ControllabilityVerdict> {
    same_event_ids(k, g)?;
    let k = trim(k);
    let uncontrollable = g.alphabet().uncontrollable();
    let (Some(k0), Some(g0)) = (k.initial(), g.initial()) else {
        return Ok(ControllabilityVerdict {
            controllable: true,
            witness: None,
        });
    };
    // BFS in ascending event order visits pairs in shortlex order of their access strings.
    let mut index: HashMap<(StateId, StateId), usize> = HashMap::new();
    let mut pairs = vec![(k0, g0)];
    let mut parent: Vec<Option<(usize, EventId)>> = vec![None];
    index.insert((k0, g0), 0);
    let mut head = 0;
    while head < pairs.len() {
        let (x, q) = pairs[head];
        for (e, q2) in g.out(q) {
            match k.step(x, e) {
                Some(x2) => {
                    if let Entry::Vacant(slot) = index.entry((x2, q2)) {
                        slot.insert(pairs.len());
                        pairs.push((x2, q2));
                        parent.push(Some((head, e)));
                    }
                }
                None if uncontrollable.contains(&e) => {
                    let mut w = trace(&parent, head);
                    w.push(e);
                    return Ok(ControllabilityVerdict {
                        controllable: false,
                        witness: Some(w),
                    });
                }
                None => {}
            }
        }
        head += 1;
    }
    Ok(ControllabilityVerdict {
        controllable: true,
        witness: None,
    })
}

fn trace(parent: &[Option<(usize, EventId)>], mut i: usize) -> Vec<EventId> {
    let mut w = Vec::new();
    while let Some((p, e)) = parent[i] {
        w.push(e);
        i = p;
    }
    w.reverse();
    w
}

/// `E ∩ L_m(G)` as a trim generator over the plant alphabet. The
/// specification may omit plant events; those are selflooped.
pub fn ambient(g: &Generator, e: &Generator) -> Result<Generator> {
    Ok(ambient_tracked(g, e)?.gen)
}

/// A generator whose states each determine a state of the plant and of the
/// ambient automaton; that is what makes state-wise pruning exact.
#[derive(Debug, Clone)]
struct Tracked {
    gen: Generator,
    plant: Vec<StateId>,
    amb: Vec<StateId>,
}

impl Tracked {
    fn restrict(&self, keep: &FixedBitSet) -> Tracked {
        let (gen, old) = restrict_indexed(&self.gen, keep);
        Tracked {
            plant: old.iter().map(|&s| self.plant[s]).collect(),
            amb: old.iter().map(|&s| self.amb[s]).collect(),
            gen,
        }
    }

    fn trim(&self) -> Tracked {
        let mut keep = ops::reachable_set(&self.gen);
        keep.intersect_with(&ops::coreachable_set(&self.gen));
        self.restrict(&keep)
    }
}

fn check_spec_alphabet(g: &Generator, e: &Generator) -> Result<()> {
    for ev in e.alphabet().iter() {
        match g.alphabet().get(ev.id) {
            None => {
                return Err(Error::AlphabetMismatch(format!(
                    "specification `{}` uses event {} outside the plant alphabet",
                    e.name(),
                    ev.id
                )))
            }
            Some(p) if p != ev => return Err(Error::FlagConflict(ev.id)),
            Some(_) => {}
        }
    }
    Ok(())
}

fn ambient_tracked(g: &Generator, e: &Generator) -> Result<Tracked> {
    check_spec_alphabet(g, e)?;
    let (prod, comps) = sync_with_components(&[g, e])?;
    let n = prod.num_states();
    let t = Tracked {
        gen: prod.with_name(&format!("{}∩{}", g.name(), e.name())),
        plant: comps.iter().map(|c| c[0]).collect(),
        amb: (0..n).collect(),
    };
    let t = t.trim();
    // ambient states index themselves
    let n = t.gen.num_states();
    Ok(Tracked {
        amb: (0..n).collect(),
        ..t
    })
}

/// Removes states with an uncontrollable plant continuation missing in `k`, then
/// trims, until stable. Returns the number of transitions cut.
fn enforce_controllability(k: &mut Tracked, g: &Generator) -> usize {
    let uncontrollable = g.alphabet().uncontrollable();
    let mut cut = 0;
    loop {
        let n = k.gen.num_states();
        let mut keep = FixedBitSet::with_capacity(n);
        keep.insert_range(..);
        let mut bad = 0;
        for s in 0..n {
            let q = k.plant[s];
            if g.out(q)
                .any(|(e, _)| uncontrollable.contains(&e) && k.gen.step(s, e).is_none())
            {
                keep.set(s, false);
                bad += 1;
            }
        }
        if bad == 0 {
            let before = k.gen.num_states();
            *k = k.trim();
            if k.gen.num_states() == before {
                return cut;
            }
            continue;
        }
        cut += k.gen.transitions().filter(|&(_, _, t)| !keep.contains(t)).count();
        *k = k.restrict(&keep).trim();
    }
}

/// Supremal controllable sublanguage of `E ∩ L_m(G)`, as a trim generator.
pub fn supcon(g: &Generator, e: &Generator) -> Result<Generator> {
    let mut k = ambient_tracked(g, e)?;
    enforce_controllability(&mut k, g);
    Ok(k.gen.with_name(&format!("supcon({},{})", g.name(), e.name())))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PruneCounts {
    /// transitions into states removed for controllability
    pub controllability: usize,
    /// transitions removed for lookalike extension conflicts
    pub extension: usize,
    /// states unmarked for lookalike marking conflicts
    pub marking: usize,
}

#[derive(Debug, Clone)]
pub struct SynthesisResult {
    pub sup: Generator,
    pub iterations: usize,
    pub pruned: PruneCounts,
}

impl SynthesisResult {
    pub fn is_empty(&self) -> bool {
        self.sup.is_empty()
    }
}

/// Supremal controllable and relatively observable sublanguage of
/// `E ∩ L_m(G)`. Observability is read from the plant's event flags.
///
/// Each outer round enforces controllability and then fixes the ambient
/// language to the controllable candidate of that round. Observability is then
/// enforced against that ambient by repeated refinement: the candidate is
/// paired with the observer of its lookalike tracker, i.e. with the set of
/// (ambient state, candidate state or ⊥) reached by strings of the same
/// projection. On that refinement every string in a state shares the same set
/// of lookalikes, so cutting a transition or a marking removes exactly the
/// violating strings. Rounds repeat until neither step changes the candidate;
/// the result is then controllable and observable relative to itself.
pub fn sup_co(g: &Generator, e: &Generator) -> Result<SynthesisResult> {
    let base = ambient_tracked(g, e)?;
    let observable = g.alphabet().observable();
    let mut k = base.clone();
    let mut pruned = PruneCounts::default();
    let mut iterations = 0;
    loop {
        iterations += 1;
        pruned.controllability += enforce_controllability(&mut k, g);
        if k.gen.is_empty() {
            break;
        }
        let ambient = k.clone();
        let mut changed = false;
        loop {
            let (refined, ext, mark) = observation_round(&k, &ambient, g, &observable);
            if ext == 0 && mark == 0 {
                break;
            }
            changed = true;
            pruned.extension += ext;
            pruned.marking += mark;
            k = compact(&refined.trim(), &base)?;
            if k.gen.is_empty() {
                break;
            }
        }
        if !changed {
            break;
        }
    }
    let k = compact(&k, &base)?;
    if k.gen.is_empty() {
        log::warn!("sup_co({}, {}) is empty", g.name(), e.name());
    }
    Ok(SynthesisResult {
        sup: k.gen.with_name(&format!("supco({},{})", g.name(), e.name())),
        iterations,
        pruned,
    })
}

/// Re-expresses `k` as (minimal recognizer of K) × ambient, keeping the state
/// maps and bounding the size by |min K|·|C|.
fn compact(k: &Tracked, amb: &Tracked) -> Result<Tracked> {
    if k.gen.is_empty() {
        return Ok(k.clone());
    }
    let m = minimize(&k.gen);
    let (prod, comps) = sync_with_components(&[&m, &amb.gen])?;
    let t = Tracked {
        gen: prod.with_name(k.gen.name()),
        plant: comps.iter().map(|c| amb.plant[c[1]]).collect(),
        amb: comps.iter().map(|c| c[1]).collect(),
    };
    Ok(t.trim())
}

/// One refinement round against the ambient `amb`. Returns the refined
/// candidate with violating transitions cut and violating markings removed,
/// plus the two counts.
fn observation_round(
    k: &Tracked,
    amb: &Tracked,
    g: &Generator,
    observable: &BTreeSet<EventId>,
) -> (Tracked, usize, usize) {
    let alphabet = g.alphabet().clone();
    let (tracker, tuples) = lookalike_tracker(k, &amb.gen);
    let obs = ops::subset_construction(&tracker, observable);
    let plant_of = |c: StateId| amb.plant[c];

    let k0 = k.gen.initial().unwrap();
    let mut index: HashMap<(StateId, usize), StateId> = HashMap::new();
    let mut states: Vec<(StateId, usize)> = vec![(k0, 0)];
    index.insert((k0, 0), 0);
    let mut edges: Vec<(StateId, EventId, StateId)> = Vec::new();
    let mut head = 0;
    while head < states.len() {
        let (x, w) = states[head];
        for (e, x2) in k.gen.out(x) {
            let w2 = if observable.contains(&e) { obs.delta[w][&e] } else { w };
            let j = *index.entry((x2, w2)).or_insert_with(|| {
                states.push((x2, w2));
                states.len() - 1
            });
            edges.push((head, e, j));
        }
        head += 1;
    }

    let mut out = Generator::with_states(k.gen.name(), alphabet, states.len(), 0);
    let mut ext = 0;
    let mut mark = 0;
    for (i, &(x, w)) in states.iter().enumerate() {
        if !k.gen.is_marked(x) {
            continue;
        }
        // (ii): a lookalike in C̄ ∩ L_m(G) that is not in K
        let conflict = obs.sets[w].ones().any(|z| {
            let (c2, k2) = tuples[z];
            g.is_marked(plant_of(c2)) && k2.is_none_or(|k2| !k.gen.is_marked(k2))
        });
        if conflict {
            mark += 1;
        } else {
            out.set_marked(i, true);
        }
    }
    for (s, e, t) in edges {
        let w = states[s].1;
        // (i): a lookalike in C̄ whose e-extension is in L(G) but not in K̄
        let conflict = obs.sets[w].ones().any(|z| {
            let (c2, k2) = tuples[z];
            g.step(plant_of(c2), e).is_some() && k2.is_none_or(|k2| k.gen.step(k2, e).is_none())
        });
        if conflict {
            ext += 1;
        } else {
            out.add_transition(s, e, t);
        }
    }
    let refined = Tracked {
        plant: states.iter().map(|&(x, _)| k.plant[x]).collect(),
        amb: states.iter().map(|&(x, _)| k.amb[x]).collect(),
        gen: out,
    };
    (refined, ext, mark)
}

/// Generator over the ambient closed language whose states pair the ambient
/// state with the candidate state of the same string (`None` once the string
/// leaves K̄).
fn lookalike_tracker(k: &Tracked, amb: &Generator) -> (Generator, Vec<(StateId, Option<StateId>)>) {
    let start = (amb.initial().unwrap(), k.gen.initial());
    let mut index: HashMap<(StateId, Option<StateId>), StateId> = HashMap::new();
    let mut tuples = vec![start];
    index.insert(start, 0);
    let mut edges = Vec::new();
    let mut head = 0;
    while head < tuples.len() {
        let (c, x) = tuples[head];
        for (e, c2) in amb.out(c) {
            let x2 = x.and_then(|x| k.gen.step(x, e));
            let next = (c2, x2);
            let j = *index.entry(next).or_insert_with(|| {
                tuples.push(next);
                tuples.len() - 1
            });
            edges.push((head, e, j));
        }
        head += 1;
    }
    let mut gen = Generator::with_states("tracker", amb.alphabet().clone(), tuples.len(), 0);
    for (s, e, t) in edges {
        gen.add_transition(s, e, t);
    }
    (gen, tuples)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservabilityClause {
    /// one-step extension, condition (i)
    Extension,
    /// marking, condition (ii)
    Marking,
}

/// Two strings with equal projection. For the extension clause both end with
/// `event`: `s` is in the candidate's closure and `s_prime` is not.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LookalikeWitness {
    pub clause: ObservabilityClause,
    pub s: Vec<EventId>,
    pub s_prime: Vec<EventId>,
    /// the extending event for [`ObservabilityClause::Extension`]
    pub event: Option<EventId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservabilityVerdict {
    pub observable: bool,
    pub witness: Option<LookalikeWitness>,
}

#[derive(Debug, Clone, Copy)]
enum Mover {
    Both,
    First,
    Second,
}

/// Decides whether the marked language of `k` is relatively observable with
/// respect to the marked language of `c`, over plant `g` and the given
/// observable events. Requires `L_m(k) ⊆ L_m(c) ⊆ L_m(g)`.
pub fn is_relatively_observable(
    k: &Generator,
    c: &Generator,
    g: &Generator,
    observable: &BTreeSet<EventId>,
) -> Result<ObservabilityVerdict> {
    same_event_ids(k, g)?;
    same_event_ids(c, g)?;
    if !ops::is_marked_sublanguage(k, c) {
        return Err(Error::Containment(format!("L_m({}) ⊄ L_m({})", k.name(), c.name())));
    }
    if !ops::is_marked_sublanguage(c, g) {
        return Err(Error::Containment(format!("L_m({}) ⊄ L_m({})", c.name(), g.name())));
    }
    let k = trim(k);
    let c = trim(c);
    let yes = ObservabilityVerdict {
        observable: true,
        witness: None,
    };
    let (Some(k0), Some(c0), Some(g0)) = (k.initial(), c.initial(), g.initial()) else {
        return Ok(yes);
    };
    let events: Vec<EventId> = g.alphabet().iter().map(|e| e.id).collect();

    // (x, x', c', q'): s reaches x in K̄; lookalike s' reaches x' in K̄ (or ⊥),
    // c' in C̄ and q' in G.
    type Pair = (StateId, Option<StateId>, StateId, StateId);
    let start: Pair = (k0, Some(k0), c0, g0);
    let mut index: HashMap<Pair, usize> = HashMap::new();
    let mut pairs = vec![start];
    let mut parent: Vec<Option<(usize, EventId, Mover)>> = vec![None];
    index.insert(start, 0);
    let mut head = 0;
    while head < pairs.len() {
        let (x, x2, c2, q2) = pairs[head];
        let witness = |clause, event: Option<EventId>| {
            let (mut s, mut s2) = (Vec::new(), Vec::new());
            let mut i = head;
            while let Some((p, e, m)) = parent[i] {
                match m {
                    Mover::Both => {
                        s.push(e);
                        s2.push(e);
                    }
                    Mover::First => s.push(e),
                    Mover::Second => s2.push(e),
                }
                i = p;
            }
            s.reverse();
            s2.reverse();
            if let Some(e) = event {
                s.push(e);
                s2.push(e);
            }
            ObservabilityVerdict {
                observable: false,
                witness: Some(LookalikeWitness {
                    clause,
                    s,
                    s_prime: s2,
                    event,
                }),
            }
        };
        for &e in &events {
            if k.step(x, e).is_some() && g.step(q2, e).is_some() && x2.is_none_or(|x2| k.step(x2, e).is_none()) {
                return Ok(witness(ObservabilityClause::Extension, Some(e)));
            }
        }
        if k.is_marked(x) && g.is_marked(q2) && x2.is_none_or(|x2| !k.is_marked(x2)) {
            return Ok(witness(ObservabilityClause::Marking, None));
        }
        let mut push = |next: Pair, e: EventId, m: Mover| {
            if let Entry::Vacant(slot) = index.entry(next) {
                slot.insert(pairs.len());
                pairs.push(next);
                parent.push(Some((head, e, m)));
            }
        };
        for &e in &events {
            let step2 = || -> Option<(Option<StateId>, StateId, StateId)> {
                Some((x2.and_then(|x2| k.step(x2, e)), c.step(c2, e)?, g.step(q2, e)?))
            };
            if observable.contains(&e) {
                if let (Some(xn), Some((x2n, c2n, q2n))) = (k.step(x, e), step2()) {
                    push((xn, x2n, c2n, q2n), e, Mover::Both);
                }
            } else {
                if let Some(xn) = k.step(x, e) {
                    push((xn, x2, c2, q2), e, Mover::First);
                }
                if let Some((x2n, c2n, q2n)) = step2() {
                    push((x, x2n, c2n, q2n), e, Mover::Second);
                }
            }
        }
        head += 1;
    }
    Ok(yes)
}

/// Convenience: relative observability of `k` against the ambient language of
/// `(g, e)`, with observability read from the plant's flags.
pub fn is_relatively_observable_wrt(k: &Generator, g: &Generator, e: &Generator) -> Result<ObservabilityVerdict> {
    let c = ambient(g, e)?;
    let k = ops::lift(k, g.alphabet())?;
    is_relatively_observable(&k, &c, g, &g.alphabet().observable())
}
