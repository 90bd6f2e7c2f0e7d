//! Uncertainty sets of a supervisor under partial observation, the observer
//! SUPO built from them, and the enable/disable/marking tables over SUPO states.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use fixedbitset::FixedBitSet;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Alphabet, Event, EventId, Generator, StateId};
use crate::ops::subset_construction;

/// States of the supervisor reachable by strings with one common projection.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UncertaintySet(FixedBitSet);

impl UncertaintySet {
    pub fn contains(&self, x: StateId) -> bool {
        self.0.contains(x)
    }

    pub fn members(&self) -> Vec<StateId> {
        self.0.ones().collect()
    }

    pub fn len(&self) -> usize {
        self.0.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bits(&self) -> &FixedBitSet {
        &self.0
    }
}

impl Serialize for UncertaintySet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.0.ones())
    }
}

/// Observer of a supervisor over its observable events. Uncertainty sets are
/// numbered in BFS discovery order; index 0 is the initial one.
#[derive(Debug, Clone)]
pub struct SupoAutomaton {
    pub sup_name: String,
    pub alphabet: Alphabet,
    pub usets: Vec<UncertaintySet>,
    pub marked: FixedBitSet,
    pub transitions: Vec<BTreeMap<EventId, usize>>,
}

impl SupoAutomaton {
    pub fn len(&self) -> usize {
        self.usets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.usets.is_empty()
    }

    pub fn initial(&self) -> Option<usize> {
        (!self.usets.is_empty()).then_some(0)
    }

    pub fn step(&self, u: usize, e: EventId) -> Option<usize> {
        self.transitions[u].get(&e).copied()
    }

    pub fn observable(&self) -> BTreeSet<EventId> {
        self.alphabet.observable()
    }

    /// SUPO as a generator over the observable events.
    pub fn to_generator(&self) -> Generator {
        let alphabet = self.alphabet.restrict(&self.observable());
        self.build(alphabet, |_| Vec::new())
    }

    fn build(&self, alphabet: Alphabet, extra: impl Fn(usize) -> Vec<EventId>) -> Generator {
        let name = format!("SUPO({})", self.sup_name);
        if self.usets.is_empty() {
            return Generator::empty(&name, alphabet);
        }
        let mut g = Generator::with_states(&name, alphabet, self.usets.len(), 0);
        for u in 0..self.usets.len() {
            g.set_marked(u, self.marked.contains(u));
            for (&e, &v) in &self.transitions[u] {
                g.add_transition(u, e, v);
            }
            for e in extra(u) {
                g.add_transition(u, e, u);
            }
        }
        g
    }
}

impl Serialize for SupoAutomaton {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Raw<'a> {
            sup: &'a str,
            usets: &'a [UncertaintySet],
            initial: Option<usize>,
            marked: Vec<usize>,
            transitions: Vec<(usize, EventId, usize)>,
        }
        let transitions = self
            .transitions
            .iter()
            .enumerate()
            .flat_map(|(u, m)| m.iter().map(move |(&e, &v)| (u, e, v)))
            .collect();
        Raw {
            sup: &self.sup_name,
            usets: &self.usets,
            initial: self.initial(),
            marked: self.marked.ones().collect(),
            transitions,
        }
        .serialize(s)
    }
}

/// Subset construction of `sup` over its observable events.
pub fn build_supo(sup: &Generator) -> SupoAutomaton {
    let observable = sup.alphabet().observable();
    let sa = subset_construction(sup, &observable);
    let mut marked = FixedBitSet::with_capacity(sa.sets.len());
    for (u, set) in sa.sets.iter().enumerate() {
        if set.ones().any(|x| sup.is_marked(x)) {
            marked.insert(u);
        }
    }
    SupoAutomaton {
        sup_name: sup.name().to_string(),
        alphabet: sup.alphabet().clone(),
        usets: sa.sets.into_iter().map(UncertaintySet).collect(),
        marked,
        transitions: sa.delta,
    }
}

/// SUPO with a selfloop of every unobservable event at each uncertainty set
/// containing a state where that event is defined.
pub fn feasible_form(supo: &SupoAutomaton, sup: &Generator) -> Generator {
    let unobservable: Vec<Event> = sup.alphabet().iter().filter(|e| !e.observable).cloned().collect();
    let mut keep = supo.observable();
    let used: Vec<Vec<EventId>> = supo
        .usets
        .iter()
        .map(|u| {
            unobservable
                .iter()
                .filter(|e| u.0.ones().any(|x| sup.step(x, e.id).is_some()))
                .map(|e| e.id)
                .collect()
        })
        .collect();
    keep.extend(used.iter().flatten().copied());
    supo.build(sup.alphabet().restrict(&keep), |u| used[u].clone())
}

/// Reachable triples (plant state, supervisor state, uncertainty set) along
/// strings of the supervisor's closed language.
struct Walk {
    triples: Vec<(StateId, StateId, usize)>,
}

impl Walk {
    fn new(g: &Generator, sup: &Generator, supo: &SupoAutomaton) -> Walk {
        let mut triples = Vec::new();
        let (Some(q0), Some(x0), Some(u0)) = (g.initial(), sup.initial(), supo.initial()) else {
            return Walk { triples };
        };
        let observable = supo.observable();
        let mut seen = HashSet::new();
        let mut queue = VecDeque::from([(q0, x0, u0)]);
        seen.insert((q0, x0, u0));
        while let Some((q, x, u)) = queue.pop_front() {
            triples.push((q, x, u));
            for (e, x2) in sup.out(x) {
                let Some(q2) = g.step(q, e) else { continue };
                let u2 = if observable.contains(&e) {
                    match supo.step(u, e) {
                        Some(u2) => u2,
                        None => continue,
                    }
                } else {
                    u
                };
                if seen.insert((q2, x2, u2)) {
                    queue.push_back((q2, x2, u2));
                }
            }
        }
        Walk { triples }
    }

    fn disabled_at(&self, g: &Generator, sup: &Generator, x: StateId, u: usize, alpha: EventId) -> bool {
        self.triples
            .iter()
            .any(|&(q, x2, u2)| x2 == x && u2 == u && sup.step(x, alpha).is_none() && g.step(q, alpha).is_some())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControlAction {
    Enabled,
    Disabled,
    Undefined,
}

/// Control action of `alpha` at supervisor state `x` seen as a member of
/// uncertainty set `u`.
pub fn classify(
    x: StateId,
    u: usize,
    alpha: EventId,
    g: &Generator,
    sup: &Generator,
    supo: &SupoAutomaton,
) -> Result<ControlAction> {
    if u >= supo.len() || !supo.usets[u].contains(x) {
        return Err(Error::NotInUncertaintySet { state: x, uset: u });
    }
    if sup.step(x, alpha).is_some() {
        return Ok(ControlAction::Enabled);
    }
    let walk = Walk::new(g, sup, supo);
    Ok(if walk.disabled_at(g, sup, x, u, alpha) {
        ControlAction::Disabled
    } else {
        ControlAction::Undefined
    })
}

/// E_α and D_α for every controllable α, and M and T, indexed by uncertainty set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlTables {
    pub events: Vec<EventId>,
    pub enabled: BTreeMap<EventId, Vec<bool>>,
    pub disabled: BTreeMap<EventId, Vec<bool>>,
    pub marked: Vec<bool>,
    pub target: Vec<bool>,
}

impl ControlTables {
    pub fn len(&self) -> usize {
        self.marked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marked.is_empty()
    }

    pub fn e(&self, alpha: EventId, u: usize) -> bool {
        self.enabled.get(&alpha).is_some_and(|r| r[u])
    }

    pub fn d(&self, alpha: EventId, u: usize) -> bool {
        self.disabled.get(&alpha).is_some_and(|r| r[u])
    }

    pub fn m(&self, u: usize) -> bool {
        self.marked[u]
    }

    pub fn t(&self, u: usize) -> bool {
        self.target[u]
    }

    /// Row `(E_α, D_α, M, T)` of uncertainty set `u` as 0/1.
    pub fn row(&self, alpha: EventId, u: usize) -> [u8; 4] {
        [self.e(alpha, u), self.d(alpha, u), self.m(u), self.t(u)].map(u8::from)
    }

    /// Column headers: `E_α`, `D_α` per event, then `M`, `T`.
    pub fn columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = self
            .events
            .iter()
            .flat_map(|a| [format!("E_{a}"), format!("D_{a}")])
            .collect();
        cols.push("M".into());
        cols.push("T".into());
        cols
    }

    /// Tabular JSON: one row per uncertainty set, values in [`columns`](Self::columns) order.
    pub fn to_json(&self, supo: &SupoAutomaton) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = (0..self.len())
            .map(|u| {
                let mut values: Vec<u8> = Vec::new();
                for &a in &self.events {
                    values.push(self.e(a, u).into());
                    values.push(self.d(a, u).into());
                }
                values.push(self.m(u).into());
                values.push(self.t(u).into());
                serde_json::json!({"uset": u, "members": supo.usets[u], "values": values})
            })
            .collect();
        serde_json::json!({"columns": self.columns(), "rows": rows})
    }
}

/// Tables over the uncertainty sets of `supo`, for the controllable events of `g`.
pub fn control_tables(g: &Generator, sup: &Generator, supo: &SupoAutomaton) -> ControlTables {
    let n = supo.len();
    let events: Vec<EventId> = g.alphabet().controllable().into_iter().collect();
    let walk = Walk::new(g, sup, supo);
    let mut enabled: BTreeMap<EventId, Vec<bool>> = events.iter().map(|&a| (a, vec![false; n])).collect();
    let mut disabled = enabled.clone();
    let mut target = vec![false; n];
    for (u, set) in supo.usets.iter().enumerate() {
        for x in set.0.ones() {
            for &a in &events {
                if sup.step(x, a).is_some() {
                    enabled.get_mut(&a).unwrap()[u] = true;
                }
            }
        }
    }
    for &(q, x, u) in &walk.triples {
        if g.is_marked(q) {
            target[u] = true;
        }
        for &a in &events {
            if sup.step(x, a).is_none() && g.step(q, a).is_some() {
                disabled.get_mut(&a).unwrap()[u] = true;
            }
        }
    }
    let marked = (0..n).map(|u| supo.marked.contains(u)).collect();
    ControlTables {
        events,
        enabled,
        disabled,
        marked,
        target,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Lemma1Witness {
    pub uset: usize,
    pub enabled: StateId,
    pub disabled: StateId,
    pub event: EventId,
}

/// Whether no uncertainty set holds a state enabling and a state disabling the
/// same controllable event. The witness is the first such case in ascending
/// (uset, event, state) order.
pub fn check_lemma1(g: &Generator, sup: &Generator, supo: &SupoAutomaton) -> Option<Lemma1Witness> {
    let walk = Walk::new(g, sup, supo);
    let mut dis: BTreeSet<(usize, EventId, StateId)> = BTreeSet::new();
    for &(q, x, u) in &walk.triples {
        for a in g.alphabet().controllable() {
            if sup.step(x, a).is_none() && g.step(q, a).is_some() {
                dis.insert((u, a, x));
            }
        }
    }
    for (u, a, x_dis) in dis {
        if let Some(x_en) = supo.usets[u].0.ones().find(|&x| sup.step(x, a).is_some()) {
            return Some(Lemma1Witness {
                uset: u,
                enabled: x_en,
                disabled: x_dis,
                event: a,
            });
        }
    }
    None
}

/// Everything localization needs about a supervisor.
#[derive(Debug, Clone)]
pub struct LocalizationInput {
    pub supo: SupoAutomaton,
    pub tables: ControlTables,
    pub controllable: Vec<EventId>,
    pub observable: Vec<EventId>,
}

impl LocalizationInput {
    /// Builds SUPO and the tables, refusing supervisors that fail the
    /// enable/disable check.
    pub fn prepare(g: &Generator, sup: &Generator) -> Result<LocalizationInput> {
        if sup.is_empty() {
            return Err(Error::EmptySupervisor);
        }
        let supo = build_supo(sup);
        if let Some(w) = check_lemma1(g, sup, &supo) {
            return Err(Error::Lemma1Violation {
                uset: w.uset,
                enabled: w.enabled,
                disabled: w.disabled,
                event: w.event,
            });
        }
        let tables = control_tables(g, sup, &supo);
        Ok(LocalizationInput {
            controllable: tables.events.clone(),
            observable: g.alphabet().observable().into_iter().collect(),
            supo,
            tables,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::fig1;

    fn usets(supo: &SupoAutomaton) -> Vec<Vec<usize>> {
        supo.usets.iter().map(|u| u.members()).collect()
    }

    #[test]
    fn fig1_uncertainty_sets_and_observer_moves() {
        let supo = build_supo(&fig1::sup());
        assert_eq!(usets(&supo), vec![vec![0, 2], vec![1, 2], vec![3, 4]]);
        let e = EventId;
        assert_eq!(supo.step(0, e(8)), Some(0));
        assert_eq!(supo.step(1, e(8)), Some(0));
        assert_eq!(supo.step(2, e(8)), Some(1));
        assert_eq!(supo.step(0, e(1)), Some(1));
        assert_eq!(supo.step(1, e(4)), Some(2));
        assert_eq!(supo.marked.ones().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn fig1_classify() {
        let (g, sup) = (fig1::plant(), fig1::sup());
        let supo = build_supo(&sup);
        let three = EventId(3);
        assert_eq!(classify(0, 0, three, &g, &sup, &supo).unwrap(), ControlAction::Enabled);
        assert_eq!(
            classify(2, 0, three, &g, &sup, &supo).unwrap(),
            ControlAction::Undefined
        );
        assert_eq!(classify(1, 1, three, &g, &sup, &supo).unwrap(), ControlAction::Disabled);
        assert!(matches!(
            classify(1, 0, three, &g, &sup, &supo),
            Err(Error::NotInUncertaintySet { state: 1, uset: 0 })
        ));
    }

    #[test]
    fn fig1_feasible_selfloop() {
        let sup = fig1::sup();
        let supo = build_supo(&sup);
        let f = feasible_form(&supo, &sup);
        let loops: Vec<_> = f
            .transitions()
            .filter(|&(s, e, t)| s == t && !f.alphabet().is_observable(e))
            .collect();
        // 2 is defined at x2, a member of U0 and U1; 5 at x3 in U2
        assert_eq!(loops, vec![(0, EventId(2), 0), (1, EventId(2), 1), (2, EventId(5), 2)]);
    }

    #[test]
    fn lemma1_flags_inconsistent_supervisor() {
        // 0 -u-> 1 with u unobservable; α enabled at 0, disabled at 1
        let ev = |id, c, o| Event::new(id, c, o);
        let parts = |name: &str, trans: Vec<(usize, u32, usize)>| crate::model::GeneratorParts {
            name: name.into(),
            events: vec![ev(1, true, true), ev(2, false, false)],
            states: 3,
            initial: 0,
            marked: vec![0, 1, 2],
            transitions: trans.into_iter().map(|(s, e, t)| (s, EventId(e), t)).collect(),
        };
        let g = Generator::from_parts(parts("G", vec![(0, 1, 2), (0, 2, 1), (1, 1, 2)])).unwrap();
        let sup = Generator::from_parts(parts("S", vec![(0, 1, 2), (0, 2, 1)])).unwrap();
        let supo = build_supo(&sup);
        let w = check_lemma1(&g, &sup, &supo).unwrap();
        assert_eq!((w.uset, w.enabled, w.disabled, w.event), (0, 0, 1, EventId(1)));
        assert!(LocalizationInput::prepare(&g, &sup).is_err());
    }
}
