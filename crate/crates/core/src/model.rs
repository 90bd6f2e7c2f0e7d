//! Events, alphabets and the deterministic generator type.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type StateId = usize;

/// Event label, rendered as a nonnegative integer in files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventId(pub u32);

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for EventId {
    fn from(id: u32) -> Self {
        EventId(id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub id: EventId,
    pub controllable: bool,
    pub observable: bool,
}

impl Event {
    pub fn new(id: u32, controllable: bool, observable: bool) -> Self {
        Event {
            id: EventId(id),
            controllable,
            observable,
        }
    }

    /// Odd ids are controllable, everything is observable.
    pub fn with_default_flags(id: u32) -> Self {
        Event::new(id, id % 2 == 1, true)
    }
}

/// Ordered event set. Iteration is by ascending id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Alphabet {
    events: BTreeMap<EventId, Event>,
}

impl Alphabet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds an alphabet; a repeated id must carry identical flags.
    pub fn from_events<I: IntoIterator<Item = Event>>(events: I) -> Result<Self> {
        let mut a = Alphabet::new();
        for e in events {
            a.insert(e)?;
        }
        Ok(a)
    }

    pub fn insert(&mut self, e: Event) -> Result<()> {
        match self.events.get(&e.id) {
            Some(old) if old != &e => Err(Error::FlagConflict(e.id)),
            Some(_) => Ok(()),
            None => {
                self.events.insert(e.id, e);
                Ok(())
            }
        }
    }

    pub fn union(&self, other: &Alphabet) -> Result<Alphabet> {
        let mut a = self.clone();
        for e in other.iter() {
            a.insert(*e)?;
        }
        Ok(a)
    }

    /// Restriction to the listed ids (ids absent from `self` are ignored).
    pub fn restrict(&self, keep: &BTreeSet<EventId>) -> Alphabet {
        Alphabet {
            events: self
                .events
                .iter()
                .filter(|(id, _)| keep.contains(id))
                .map(|(id, e)| (*id, *e))
                .collect(),
        }
    }

    pub fn get(&self, id: EventId) -> Option<&Event> {
        self.events.get(&id)
    }

    pub fn contains(&self, id: EventId) -> bool {
        self.events.contains_key(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Event> {
        self.events.values()
    }

    pub fn ids(&self) -> BTreeSet<EventId> {
        self.events.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn is_controllable(&self, id: EventId) -> bool {
        self.events.get(&id).is_some_and(|e| e.controllable)
    }

    pub fn is_observable(&self, id: EventId) -> bool {
        self.events.get(&id).is_some_and(|e| e.observable)
    }

    pub fn controllable(&self) -> BTreeSet<EventId> {
        self.iter().filter(|e| e.controllable).map(|e| e.id).collect()
    }

    pub fn uncontrollable(&self) -> BTreeSet<EventId> {
        self.iter().filter(|e| !e.controllable).map(|e| e.id).collect()
    }

    pub fn observable(&self) -> BTreeSet<EventId> {
        self.iter().filter(|e| e.observable).map(|e| e.id).collect()
    }

    pub fn unobservable(&self) -> BTreeSet<EventId> {
        self.iter().filter(|e| !e.observable).map(|e| e.id).collect()
    }

    /// Same ids with the observable flag replaced by membership in `observable`.
    pub fn with_observable(&self, observable: &BTreeSet<EventId>) -> Alphabet {
        let mut a = self.clone();
        for e in a.events.values_mut() {
            e.observable = observable.contains(&e.id);
        }
        a
    }

    /// Same ids with the controllable flag replaced by membership in `controllable`.
    pub fn with_controllable(&self, controllable: &BTreeSet<EventId>) -> Alphabet {
        let mut a = self.clone();
        for e in a.events.values_mut() {
            e.controllable = controllable.contains(&e.id);
        }
        a
    }
}

/// Unchecked description of a generator, as read from a file.
#[derive(Debug, Clone, Default)]
pub struct GeneratorParts {
    pub name: String,
    pub events: Vec<Event>,
    pub states: usize,
    pub initial: usize,
    pub marked: Vec<StateId>,
    pub transitions: Vec<(StateId, EventId, StateId)>,
}

/// Lists every violated generator invariant; empty iff the parts form a valid generator.
pub fn validate(parts: &GeneratorParts) -> Vec<String> {
    let mut out = Vec::new();
    let mut seen_ids: BTreeMap<EventId, Event> = BTreeMap::new();
    for e in &parts.events {
        if let Some(old) = seen_ids.insert(e.id, *e) {
            if old != *e {
                out.push(format!("event {} declared with conflicting flags", e.id));
            } else {
                out.push(format!("event {} declared twice", e.id));
            }
        }
    }
    if parts.states == 0 {
        if !parts.marked.is_empty() || !parts.transitions.is_empty() {
            out.push("empty generator carries marked states or transitions".to_string());
        }
        return out;
    }
    if parts.initial >= parts.states {
        out.push(format!(
            "initial state {} out of range ({} states)",
            parts.initial, parts.states
        ));
    }
    for &m in &parts.marked {
        if m >= parts.states {
            out.push(format!("marked state {} out of range", m));
        }
    }
    let mut seen: BTreeMap<(StateId, EventId), StateId> = BTreeMap::new();
    for &(src, ev, dst) in &parts.transitions {
        if src >= parts.states {
            out.push(format!("dangling source {} in ({}, {}, {})", src, src, ev, dst));
        }
        if dst >= parts.states {
            out.push(format!("dangling target {} in ({}, {}, {})", dst, src, ev, dst));
        }
        if !seen_ids.contains_key(&ev) {
            out.push(format!("undeclared event {} at state {}", ev, src));
        }
        match seen.get(&(src, ev)) {
            Some(&d) if d != dst => out.push(format!("nondeterministic at ({}, {})", src, ev)),
            Some(_) => out.push(format!("duplicate transition ({}, {}, {})", src, ev, dst)),
            None => {
                seen.insert((src, ev), dst);
            }
        }
    }
    out
}

/// Deterministic generator with a partial transition function.
///
/// States are dense indices `0..num_states`. A generator with no states is the
/// empty generator: both of its languages are empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generator {
    name: String,
    alphabet: Alphabet,
    initial: Option<StateId>,
    marked: FixedBitSet,
    delta: Vec<BTreeMap<EventId, StateId>>,
}

impl Generator {
    pub fn from_parts(parts: GeneratorParts) -> Result<Generator> {
        let violations = validate(&parts);
        if !violations.is_empty() {
            return Err(Error::InvalidGenerator {
                name: parts.name,
                violations,
            });
        }
        let alphabet = Alphabet::from_events(parts.events)?;
        if parts.states == 0 {
            return Ok(Generator::empty(&parts.name, alphabet));
        }
        let mut g = Generator::with_states(&parts.name, alphabet, parts.states, parts.initial);
        for m in parts.marked {
            g.set_marked(m, true);
        }
        for (s, e, t) in parts.transitions {
            g.delta[s].insert(e, t);
        }
        Ok(g)
    }

    pub fn empty(name: &str, alphabet: Alphabet) -> Generator {
        Generator {
            name: name.to_string(),
            alphabet,
            initial: None,
            marked: FixedBitSet::new(),
            delta: Vec::new(),
        }
    }

    /// `n` states with no transitions and nothing marked.
    pub(crate) fn with_states(name: &str, alphabet: Alphabet, n: usize, initial: StateId) -> Generator {
        if n == 0 {
            return Generator::empty(name, alphabet);
        }
        Generator {
            name: name.to_string(),
            alphabet,
            initial: Some(initial),
            marked: FixedBitSet::with_capacity(n),
            delta: vec![BTreeMap::new(); n],
        }
    }

    pub(crate) fn set_marked(&mut self, s: StateId, on: bool) {
        self.marked.set(s, on);
    }

    pub(crate) fn add_transition(&mut self, s: StateId, e: EventId, t: StateId) {
        debug_assert!(self.alphabet.contains(e));
        self.delta[s].insert(e, t);
    }

    pub(crate) fn alphabet_mut(&mut self) -> &mut Alphabet {
        &mut self.alphabet
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: &str) -> Generator {
        self.name = name.to_string();
        self
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Replaces the event flags without touching the transition structure.
    pub fn relabel_flags(mut self, alphabet: Alphabet) -> Result<Generator> {
        if alphabet.ids() != self.alphabet.ids() {
            return Err(Error::AlphabetMismatch(format!(
                "flag override for `{}` changes the event set",
                self.name
            )));
        }
        self.alphabet = alphabet;
        Ok(self)
    }

    pub fn num_states(&self) -> usize {
        self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }

    pub fn initial(&self) -> Option<StateId> {
        self.initial
    }

    pub fn is_marked(&self, s: StateId) -> bool {
        self.marked.contains(s)
    }

    pub fn marked_states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.marked.ones()
    }

    pub fn num_marked(&self) -> usize {
        self.marked.count_ones(..)
    }

    pub fn step(&self, s: StateId, e: EventId) -> Option<StateId> {
        self.delta[s].get(&e).copied()
    }

    /// Runs a string from the initial state.
    pub fn run(&self, word: &[EventId]) -> Option<StateId> {
        let mut s = self.initial?;
        for &e in word {
            s = self.step(s, e)?;
        }
        Some(s)
    }

    pub fn accepts_closed(&self, word: &[EventId]) -> bool {
        self.run(word).is_some()
    }

    pub fn accepts_marked(&self, word: &[EventId]) -> bool {
        self.run(word).is_some_and(|s| self.is_marked(s))
    }

    /// Outgoing transitions of `s` in ascending event order.
    pub fn out(&self, s: StateId) -> impl Iterator<Item = (EventId, StateId)> + '_ {
        self.delta[s].iter().map(|(e, t)| (*e, *t))
    }

    pub fn transitions(&self) -> impl Iterator<Item = (StateId, EventId, StateId)> + '_ {
        self.delta
            .iter()
            .enumerate()
            .flat_map(|(s, m)| m.iter().map(move |(e, t)| (s, *e, *t)))
    }

    pub fn num_transitions(&self) -> usize {
        self.delta.iter().map(|m| m.len()).sum()
    }

    pub fn to_parts(&self) -> GeneratorParts {
        GeneratorParts {
            name: self.name.clone(),
            events: self.alphabet.iter().copied().collect(),
            states: self.num_states(),
            initial: self.initial.unwrap_or(0),
            marked: self.marked_states().collect(),
            transitions: self.transitions().collect(),
        }
    }
}
