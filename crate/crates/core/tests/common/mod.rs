//! Random small instances shared by the property and acceptance tests.

#![allow(dead_code)]

use std::collections::BTreeSet;

use desloc::ops::trim;
use desloc::{Alphabet, Event, EventId, Generator, GeneratorParts};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct Instance {
    pub seed: u64,
    pub plant: Generator,
    pub spec: Generator,
}

#[derive(Debug, Clone, Copy)]
pub struct Bounds {
    pub max_states: usize,
    pub max_events: usize,
    /// probability that a (state, event) pair has a transition
    pub density: f64,
}

pub const DEFAULT: Bounds = Bounds {
    max_states: 6,
    max_events: 6,
    density: 0.55,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random deterministic generator over `events`. State 0 is initial and at
/// least one state is marked.
pub fn random_generator(r: &mut ChaCha8Rng, name: &str, events: &[Event], states: usize, density: f64) -> Generator {
    let mut transitions = Vec::new();
    for s in 0..states {
        for e in events {
            if r.gen_bool(density) {
                transitions.push((s, e.id, r.gen_range(0..states)));
            }
        }
    }
    let mut marked: Vec<usize> = (0..states).filter(|_| r.gen_bool(0.5)).collect();
    if marked.is_empty() {
        marked.push(r.gen_range(0..states));
    }
    Generator::from_parts(GeneratorParts {
        name: name.to_string(),
        events: events.to_vec(),
        states,
        initial: 0,
        marked,
        transitions,
    })
    .unwrap()
}

/// Random flags with at least one controllable event.
pub fn random_events(r: &mut ChaCha8Rng, n: usize) -> Vec<Event> {
    let mut events: Vec<Event> = (1..=n as u32)
        .map(|id| Event::new(id, r.gen_bool(0.6), r.gen_bool(0.7)))
        .collect();
    if !events.iter().any(|e| e.controllable) {
        let i = r.gen_range(0..n);
        events[i].controllable = true;
    }
    events
}

/// Copy of `g` with some transitions and marks dropped, so the specification
/// is related to the plant but usually strictly smaller.
pub fn random_spec(r: &mut ChaCha8Rng, g: &Generator) -> Generator {
    let mut parts = g.to_parts();
    parts.name = "E".into();
    parts.transitions.retain(|_| r.gen_bool(0.9));
    let keep: Vec<usize> = parts.marked.iter().copied().filter(|_| r.gen_bool(0.8)).collect();
    if !keep.is_empty() {
        parts.marked = keep;
    }
    Generator::from_parts(parts).unwrap()
}

pub fn instance(seed: u64, b: Bounds) -> Instance {
    let mut r = rng(seed);
    let n_events = r.gen_range(1..=b.max_events);
    let events = random_events(&mut r, n_events);
    let n_states = r.gen_range(2.min(b.max_states)..=b.max_states);
    let plant = random_generator(&mut r, "G", &events, n_states, b.density);
    let spec = random_spec(&mut r, &plant);
    Instance { seed, plant, spec }
}

/// Same instance with every event observable.
pub fn fully_observable(i: &Instance) -> Instance {
    let all = i.plant.alphabet().ids();
    relabel_obs(i, &all)
}

pub fn relabel_obs(i: &Instance, obs: &BTreeSet<EventId>) -> Instance {
    let a: Alphabet = i.plant.alphabet().with_observable(obs);
    Instance {
        seed: i.seed,
        plant: i.plant.clone().relabel_flags(a.clone()).unwrap(),
        spec: i.spec.clone().relabel_flags(a).unwrap(),
    }
}

/// Random observable set, drawn independently of the instance's own flags.
pub fn random_obs(i: &Instance) -> BTreeSet<EventId> {
    let mut r = rng(i.seed ^ 0x9e37_79b9_7f4a_7c15);
    i.plant
        .alphabet()
        .ids()
        .into_iter()
        .filter(|_| r.gen_bool(0.6))
        .collect()
}

/// All strings of `g`'s closed language up to length `n`, with their end state.
pub fn closed_strings(g: &Generator, n: usize) -> Vec<(Vec<EventId>, usize)> {
    let Some(q0) = g.initial() else { return Vec::new() };
    let mut out = vec![(Vec::new(), q0)];
    let mut frontier = vec![(Vec::new(), q0)];
    for _ in 0..n {
        let mut next = Vec::new();
        for (w, q) in &frontier {
            for (e, t) in g.out(*q) {
                let mut w2 = w.clone();
                w2.push(e);
                next.push((w2, t));
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

pub fn erase(w: &[EventId], keep: &BTreeSet<EventId>) -> Vec<EventId> {
    w.iter().copied().filter(|e| keep.contains(e)).collect()
}

/// `g` trimmed, or `None` when nothing survives.
pub fn trimmed(g: &Generator) -> Option<Generator> {
    let t = trim(g);
    (!t.is_empty()).then_some(t)
}
