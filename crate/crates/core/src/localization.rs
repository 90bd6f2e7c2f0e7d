//! Localization of a partial-observation supervisor into one local controller
//! per controllable event, plus the checks that the controllers jointly
//! reproduce the supervisor.

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::Serialize;

use crate::error::Result;
use crate::model::{EventId, Generator, StateId};
use crate::ops::{closed_language_equal, marked_language_equal, sync};
use crate::partial_obs::{ControlTables, LocalizationInput, SupoAutomaton};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConsistencyClause {
    EnableDisable,
    Marking,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConsistencyVerdict {
    pub pair: (usize, usize),
    pub event: EventId,
    pub consistent: bool,
    pub failed_clause: Option<ConsistencyClause>,
}

/// Control consistency of two uncertainty sets with respect to `alpha`.
pub fn control_consistent(u: usize, v: usize, alpha: EventId, tables: &ControlTables) -> ConsistencyVerdict {
    let failed_clause = if (tables.e(alpha, u) && tables.d(alpha, v)) || (tables.e(alpha, v) && tables.d(alpha, u)) {
        Some(ConsistencyClause::EnableDisable)
    } else if tables.t(u) == tables.t(v) && tables.m(u) != tables.m(v) {
        Some(ConsistencyClause::Marking)
    } else {
        None
    };
    ConsistencyVerdict {
        pair: (u, v),
        event: alpha,
        consistent: failed_clause.is_none(),
        failed_clause,
    }
}

fn consistent(u: usize, v: usize, alpha: EventId, tables: &ControlTables) -> bool {
    control_consistent(u, v, alpha, tables).consistent
}

/// Cells of uncertainty-set indices, each sorted, listed by least member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ControlCongruence {
    pub event: EventId,
    pub cells: Vec<Vec<usize>>,
}

impl ControlCongruence {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn is_partition(&self, n: usize) -> bool {
        let mut seen = vec![false; n];
        for &u in self.cells.iter().flatten() {
            if u >= n || seen[u] {
                return false;
            }
            seen[u] = true;
        }
        seen.into_iter().all(|b| b)
    }
}

/// Tries to merge the cells of `a` and `b` together with everything the merge
/// forces through shared observable successors. Returns the new labelling, or
/// `None` if some forced pair is inconsistent.
fn try_merge(
    label: &[usize],
    a: usize,
    b: usize,
    alpha: EventId,
    input: &LocalizationInput,
    events: &[EventId],
) -> Option<Vec<usize>> {
    let supo = &input.supo;
    let mut label = label.to_vec();
    let mut queue = VecDeque::from([(a, b)]);
    while let Some((a, b)) = queue.pop_front() {
        let (la, lb) = (label[a], label[b]);
        if la == lb {
            continue;
        }
        let left: Vec<usize> = (0..label.len()).filter(|&u| label[u] == la).collect();
        let right: Vec<usize> = (0..label.len()).filter(|&u| label[u] == lb).collect();
        for &u in &left {
            for &v in &right {
                if !consistent(u, v, alpha, &input.tables) {
                    return None;
                }
            }
        }
        let keep = la.min(lb);
        for &u in left.iter().chain(&right) {
            label[u] = keep;
        }
        for &e in events {
            let mut succ = left.iter().chain(&right).filter_map(|&u| supo.step(u, e));
            if let Some(first) = succ.next() {
                for s in succ {
                    if label[s] != label[first] {
                        queue.push_back((first, s));
                    }
                }
            }
        }
    }
    Some(label)
}

/// Control congruence for `alpha` by pairwise merging from the singleton
/// partition. Pairs are tried in ascending index order, repeated until a pass
/// makes no merge.
pub fn compute_congruence(alpha: EventId, input: &LocalizationInput) -> ControlCongruence {
    let n = input.supo.len();
    let events: Vec<EventId> = input.supo.observable().into_iter().collect();
    let mut label: Vec<usize> = (0..n).collect();
    loop {
        let mut merged = false;
        for i in 0..n {
            if label[i] != i {
                continue;
            }
            for j in i + 1..n {
                if label[j] != j || label[i] == label[j] {
                    continue;
                }
                if let Some(next) = try_merge(&label, i, j, alpha, input, &events) {
                    label = next;
                    merged = true;
                }
            }
        }
        if !merged {
            break;
        }
    }
    let mut cells: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (u, &l) in label.iter().enumerate() {
        cells.entry(l).or_default().push(u);
    }
    ControlCongruence {
        event: alpha,
        cells: cells.into_values().collect(),
    }
}

/// `J_α` over the observable events, with its control function.
#[derive(Debug, Clone)]
pub struct JGenerator {
    pub generator: Generator,
    pub control: Vec<bool>,
}

/// Builds `J_α` from a cover (cells may overlap). Where a choice exists, the
/// least cell index wins.
pub fn build_j(alpha: EventId, cover: &ControlCongruence, supo: &SupoAutomaton, tables: &ControlTables) -> JGenerator {
    let cells = &cover.cells;
    let alphabet = supo.alphabet.restrict(&supo.observable());
    let name = format!("J{alpha}");
    let Some(i0) = cells.iter().position(|c| c.contains(&0)) else {
        return JGenerator {
            generator: Generator::empty(&name, alphabet),
            control: Vec::new(),
        };
    };
    let mut g = Generator::with_states(&name, alphabet, cells.len(), i0);
    let mut control = vec![false; cells.len()];
    for (i, cell) in cells.iter().enumerate() {
        g.set_marked(i, cell.iter().any(|&u| supo.marked.contains(u)));
        control[i] = cell.iter().any(|&u| tables.e(alpha, u));
        let mut targets: BTreeMap<EventId, usize> = BTreeMap::new();
        for &u in cell {
            for (&e, &v) in &supo.transitions[u] {
                let j = cells
                    .iter()
                    .position(|c| c.contains(&v))
                    .expect("cover covers every uncertainty set");
                let t = targets.entry(e).or_insert(j);
                *t = (*t).min(j);
            }
        }
        for (e, j) in targets {
            g.add_transition(i, e, j);
        }
    }
    JGenerator { generator: g, control }
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalController {
    pub event: EventId,
    #[serde(skip)]
    pub generator: Generator,
    /// `ψ_α` per state
    pub control: Vec<bool>,
    pub comm_events: Vec<EventId>,
    pub cells: Vec<Vec<usize>>,
    /// α is nowhere disabled by the supervisor
    pub never_disabled: bool,
}

impl LocalController {
    pub fn num_states(&self) -> usize {
        self.generator.num_states()
    }
}

/// `LOC_α` from `J_α`: keep α and the observable events that change state
/// somewhere; add α-selfloops at enabling states when α is unobservable.
pub fn build_loc(alpha: EventId, j: &JGenerator, plant_alphabet: &crate::model::Alphabet) -> Generator {
    let jg = &j.generator;
    let comm: BTreeSet<EventId> = jg
        .transitions()
        .filter(|&(s, e, t)| s != t && e != alpha)
        .map(|(_, e, _)| e)
        .collect();
    let mut keep = comm.clone();
    keep.insert(alpha);
    let alphabet = plant_alphabet.restrict(&keep);
    let name = format!("LOC{alpha}");
    let Some(init) = jg.initial() else {
        return Generator::empty(&name, alphabet);
    };
    let mut loc = Generator::with_states(&name, alphabet, jg.num_states(), init);
    for s in 0..jg.num_states() {
        loc.set_marked(s, jg.is_marked(s));
    }
    for (s, e, t) in jg.transitions() {
        if keep.contains(&e) {
            loc.add_transition(s, e, t);
        }
    }
    if !plant_alphabet.is_observable(alpha) {
        for (s, &on) in j.control.iter().enumerate() {
            if on {
                loc.add_transition(s, alpha, s);
            }
        }
    }
    loc
}

/// Per-event localization result.
#[derive(Debug, Clone)]
pub struct Localization {
    pub input: LocalizationInput,
    pub controllers: BTreeMap<EventId, LocalController>,
}

impl Localization {
    pub fn generators(&self) -> Vec<&Generator> {
        self.controllers.values().map(|c| &c.generator).collect()
    }
}

/// SUPO, tables, congruence, `J_α` and `LOC_α` for every controllable event of `g`.
pub fn localize(g: &Generator, sup: &Generator) -> Result<Localization> {
    let input = LocalizationInput::prepare(g, sup)?;
    let mut controllers = BTreeMap::new();
    for &alpha in &input.controllable {
        let cong = compute_congruence(alpha, &input);
        let j = build_j(alpha, &cong, &input.supo, &input.tables);
        let generator = build_loc(alpha, &j, g.alphabet());
        let comm_events = generator.alphabet().ids().into_iter().filter(|&e| e != alpha).collect();
        let never_disabled = (0..input.supo.len()).all(|u| !input.tables.d(alpha, u));
        log::debug!(
            "LOC{alpha}: {} states from {} uncertainty sets",
            generator.num_states(),
            input.supo.len()
        );
        controllers.insert(
            alpha,
            LocalController {
                event: alpha,
                generator,
                control: j.control,
                comm_events,
                cells: cong.cells,
                never_disabled,
            },
        );
    }
    Ok(Localization { input, controllers })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Theorem1Report {
    pub closed_equal: bool,
    pub marked_equal: bool,
}

impl Theorem1Report {
    pub fn holds(&self) -> bool {
        self.closed_equal && self.marked_equal
    }
}

/// Whether the plant under all local controllers has exactly the supervisor's
/// closed and marked behavior.
pub fn verify_theorem1(g: &Generator, sup: &Generator, locs: &[&Generator]) -> Result<Theorem1Report> {
    let mut parts = vec![g];
    parts.extend_from_slice(locs);
    let test = sync(&parts)?;
    Ok(Theorem1Report {
        closed_equal: closed_language_equal(&test, sup),
        marked_equal: marked_language_equal(&test, sup),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "clause", rename_all = "kebab-case")]
pub enum ContractViolation {
    /// After `string`, the controller's decision on α disagrees with the supervisor.
    Enablement {
        string: Vec<EventId>,
        supervisor_enables: bool,
    },
    /// A state change on an unobservable event.
    UnobservableMove { from: StateId, event: EventId, to: StateId },
}

/// Checks that `loc` enables α exactly where the supervisor does, along every
/// string of the supervisor, and that only observable events move it.
pub fn check_loc_contract(
    loc: &Generator,
    alpha: EventId,
    g: &Generator,
    sup: &Generator,
) -> Option<ContractViolation> {
    for (s, e, t) in loc.transitions() {
        if s != t && !g.alphabet().is_observable(e) {
            return Some(ContractViolation::UnobservableMove {
                from: s,
                event: e,
                to: t,
            });
        }
    }
    let (Some(q0), Some(x0)) = (g.initial(), sup.initial()) else {
        return None;
    };
    type Triple = (StateId, StateId, Option<StateId>);
    let start: Triple = (q0, x0, loc.initial());
    let mut index: HashMap<Triple, usize> = HashMap::from([(start, 0)]);
    let mut nodes = vec![start];
    let mut parent: Vec<Option<(usize, EventId)>> = vec![None];
    let mut head = 0;
    while head < nodes.len() {
        let (q, x, y) = nodes[head];
        let loc_enables = y.is_some_and(|y| loc.step(y, alpha).is_some());
        let sup_enables = sup.step(x, alpha).is_some();
        if (loc_enables && g.step(q, alpha).is_some()) != sup_enables {
            let mut string = Vec::new();
            let mut i = head;
            while let Some((p, e)) = parent[i] {
                string.push(e);
                i = p;
            }
            string.reverse();
            return Some(ContractViolation::Enablement {
                string,
                supervisor_enables: sup_enables,
            });
        }
        for (e, x2) in sup.out(x) {
            let Some(q2) = g.step(q, e) else { continue };
            let y2 = if loc.alphabet().contains(e) {
                y.and_then(|y| loc.step(y, e))
            } else {
                y
            };
            let next = (q2, x2, y2);
            if let Entry::Vacant(slot) = index.entry(next) {
                slot.insert(nodes.len());
                nodes.push(next);
                parent.push(Some((head, e)));
            }
        }
        head += 1;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::fig1;

    fn input() -> LocalizationInput {
        LocalizationInput::prepare(&fig1::plant(), &fig1::sup()).unwrap()
    }

    #[test]
    fn fig1_consistency_pairs() {
        let t = input().tables;
        let c = |u, v, a| control_consistent(u, v, EventId(a), &t).consistent;
        assert!(c(0, 2, 3) && c(2, 1, 3) && !c(0, 1, 3));
        assert!(c(0, 1, 5) && !c(0, 2, 5) && !c(1, 2, 5));
        assert_eq!(
            control_consistent(0, 1, EventId(3), &t).failed_clause,
            Some(ConsistencyClause::EnableDisable)
        );
    }

    #[test]
    fn fig1_congruences() {
        let input = input();
        let cells = |a| compute_congruence(EventId(a), &input).cells;
        assert_eq!(cells(1), vec![vec![0, 1, 2]]);
        assert_eq!(cells(3), vec![vec![0], vec![1], vec![2]]);
        assert_eq!(cells(5), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn fig1_loc5_drops_event_1() {
        let input = input();
        let cong = compute_congruence(EventId(5), &input);
        let j = build_j(EventId(5), &cong, &input.supo, &input.tables);
        assert_eq!(j.control, vec![false, true]);
        let loc = build_loc(EventId(5), &j, fig1::plant().alphabet());
        let ids: Vec<u32> = loc.alphabet().ids().into_iter().map(|e| e.0).collect();
        assert_eq!(ids, vec![3, 4, 5, 8]);
        assert_eq!(loc.step(1, EventId(5)), Some(1));
        assert_eq!(loc.step(0, EventId(5)), None);
    }

    #[test]
    fn fig1_localize_and_verify() {
        let (g, sup) = (fig1::plant(), fig1::sup());
        let l = localize(&g, &sup).unwrap();
        let sizes: Vec<(u32, usize)> = l.controllers.iter().map(|(a, c)| (a.0, c.num_states())).collect();
        assert_eq!(sizes, vec![(1, 1), (3, 3), (5, 2)]);
        assert!(verify_theorem1(&g, &sup, &l.generators()).unwrap().holds());
        for (a, c) in &l.controllers {
            assert_eq!(check_loc_contract(&c.generator, *a, &g, &sup), None);
        }
        assert!(l.controllers[&EventId(1)].never_disabled);
    }
}
