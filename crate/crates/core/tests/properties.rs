mod common;

use std::collections::BTreeSet;

use common::{closed_strings, erase, instance, random_generator, random_obs, relabel_obs, Bounds, DEFAULT};
use desloc::localization::{compute_congruence, control_consistent, localize, verify_theorem1};
use desloc::ops::{is_marked_sublanguage, is_sublanguage, isomorphic, language_equal, minimize, project, sync, trim};
use desloc::partial_obs::{build_supo, control_tables, LocalizationInput};
use desloc::synthesis::{is_controllable, is_relatively_observable, sup_co, supcon};
use desloc::{Event, EventId, Generator};
use fixedbitset::FixedBitSet;
use proptest::prelude::*;

const SMALL: Bounds = Bounds {
    max_states: 3,
    max_events: 3,
    density: 0.5,
};

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(64)
}

/// Three generators drawn over overlapping subsets of one event pool.
fn three(seed: u64) -> [Generator; 3] {
    let mut r = common::rng(seed);
    let pool = common::random_events(&mut r, 5);
    let mut pick = |name: &str| {
        let events: Vec<Event> = pool
            .iter()
            .filter(|_| rand::Rng::gen_bool(&mut r, 0.6))
            .cloned()
            .collect();
        let events = if events.is_empty() { vec![pool[0]] } else { events };
        let n = rand::Rng::gen_range(&mut r, 1..=3);
        random_generator(&mut r, name, &events, n, 0.5)
    };
    [pick("A"), pick("B"), pick("C")]
}

/// Supervisor for a random instance under its own flags, if nonempty.
fn supervisor(seed: u64) -> Option<(Generator, Generator)> {
    let i = instance(seed, DEFAULT);
    let obs = random_obs(&i);
    let i = relabel_obs(&i, &obs);
    let r = sup_co(&i.plant, &i.spec).unwrap();
    (!r.is_empty()).then_some((i.plant, r.sup))
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn trim_and_minimize_are_idempotent(seed in any::<u64>()) {
        let g = instance(seed, DEFAULT).plant;
        let t = trim(&g);
        prop_assert_eq!(&trim(&t), &t);
        let m = minimize(&g);
        prop_assert!(isomorphic(&minimize(&m), &m));
        prop_assert!(language_equal(&m, &g));
        prop_assert!(m.num_states() <= g.num_states() + 1);
    }

    #[test]
    fn sync_commutes_and_associates(seed in any::<u64>()) {
        let [a, b, c] = three(seed);
        let ab = sync(&[&a, &b]).unwrap();
        let ba = sync(&[&b, &a]).unwrap();
        prop_assert!(isomorphic(&ab, &ba));
        let left = sync(&[&ab, &c]).unwrap();
        let bc = sync(&[&b, &c]).unwrap();
        let right = sync(&[&a, &bc]).unwrap();
        prop_assert!(isomorphic(&left, &right));
        prop_assert!(isomorphic(&left, &sync(&[&a, &b, &c]).unwrap()));
    }

    #[test]
    fn projection_onto_everything_is_minimization(seed in any::<u64>()) {
        let g = instance(seed, DEFAULT).plant;
        let p = project(&g, &g.alphabet().ids()).unwrap();
        prop_assert!(language_equal(&p, &g));
        prop_assert!(isomorphic(&p, &minimize(&g)));
    }

    #[test]
    fn projection_matches_brute_force(seed in any::<u64>(), mask in 0u8..8) {
        let g = instance(seed, SMALL).plant;
        let keep: BTreeSet<EventId> = g.alphabet().ids().into_iter().filter(|e| mask & (1 << (e.0 - 1)) != 0).collect();
        let p = project(&g, &keep).unwrap();
        // every projected string of length <= 6 is in the projection
        for (w, q) in closed_strings(&g, 6) {
            let v = erase(&w, &keep);
            prop_assert!(p.accepts_closed(&v), "{:?} -> {:?}", w, v);
            if g.is_marked(q) {
                prop_assert!(p.accepts_marked(&v));
            }
        }
        // with <= 3 states, a shortest preimage of a length-2 string has length <= 8
        let long = closed_strings(&g, 8);
        let images: BTreeSet<(Vec<EventId>, bool)> = long
            .iter()
            .map(|(w, q)| (erase(w, &keep), g.is_marked(*q)))
            .collect();
        for (v, _) in closed_strings(&p, 2) {
            prop_assert!(images.iter().any(|(x, _)| *x == v), "{:?} has no preimage", v);
            if p.accepts_marked(&v) {
                prop_assert!(images.contains(&(v.clone(), true)), "{:?} has no marked preimage", v);
            }
        }
    }

    #[test]
    fn sup_co_certifies_itself(seed in any::<u64>()) {
        let Some((g, sup)) = supervisor(seed) else { return Ok(()) };
        prop_assert!(is_controllable(&sup, &g).unwrap().controllable);
        let v = is_relatively_observable(&sup, &sup, &g, &g.alphabet().observable()).unwrap();
        prop_assert!(v.observable, "{:?}", v.witness);
        prop_assert!(is_marked_sublanguage(&sup, &g));
        prop_assert!(is_sublanguage(&sup, &g));
        prop_assert_eq!(&trim(&sup), &sup);
    }

    #[test]
    fn sup_co_is_a_fixpoint(seed in any::<u64>()) {
        let Some((g, sup)) = supervisor(seed) else { return Ok(()) };
        let again = sup_co(&g, &sup).unwrap().sup;
        prop_assert!(language_equal(&again, &sup));
    }

    #[test]
    fn full_observation_sup_co_is_supcon(seed in any::<u64>()) {
        let i = common::fully_observable(&instance(seed, DEFAULT));
        let a = sup_co(&i.plant, &i.spec).unwrap().sup;
        let b = supcon(&i.plant, &i.spec).unwrap();
        prop_assert!(language_equal(&a, &b));
    }

    #[test]
    fn more_observation_never_shrinks(seed in any::<u64>()) {
        let i = instance(seed, DEFAULT);
        let small = random_obs(&i);
        let mut r = common::rng(seed.wrapping_add(1));
        let large: BTreeSet<EventId> = i
            .plant
            .alphabet()
            .ids()
            .into_iter()
            .filter(|e| small.contains(e) || rand::Rng::gen_bool(&mut r, 0.5))
            .collect();
        let a = relabel_obs(&i, &small);
        let b = relabel_obs(&i, &large);
        let sa = sup_co(&a.plant, &a.spec).unwrap().sup;
        let sb = sup_co(&b.plant, &b.spec).unwrap().sup;
        prop_assert!(is_marked_sublanguage(&sa, &sb));
        prop_assert!(is_sublanguage(&sa, &sb));
    }

    #[test]
    fn supo_recognizes_the_projection(seed in any::<u64>()) {
        let Some((_, sup)) = supervisor(seed) else { return Ok(()) };
        let supo = build_supo(&sup);
        let p = project(&sup, &sup.alphabet().observable()).unwrap();
        prop_assert!(language_equal(&supo.to_generator(), &p));
        prop_assert!(supo.len() <= 1 << sup.num_states().min(20));
    }

    #[test]
    fn supo_transitions_recompute(seed in any::<u64>()) {
        let Some((_, sup)) = supervisor(seed) else { return Ok(()) };
        let supo = build_supo(&sup);
        let unobs = sup.alphabet().unobservable();
        let closure = |mut set: FixedBitSet| {
            let mut stack: Vec<usize> = set.ones().collect();
            while let Some(x) = stack.pop() {
                for (e, y) in sup.out(x) {
                    if unobs.contains(&e) && !set.contains(y) {
                        set.insert(y);
                        stack.push(y);
                    }
                }
            }
            set
        };
        let mut init = FixedBitSet::with_capacity(sup.num_states());
        init.insert(sup.initial().unwrap());
        prop_assert_eq!(&closure(init), supo.usets[0].bits());
        for (u, row) in supo.transitions.iter().enumerate() {
            for (&e, &v) in row {
                let mut next = FixedBitSet::with_capacity(sup.num_states());
                for x in supo.usets[u].members() {
                    if let Some(y) = sup.step(x, e) {
                        next.insert(y);
                    }
                }
                prop_assert_eq!(&closure(next), supo.usets[v].bits());
            }
        }
    }

    #[test]
    fn table_invariants(seed in any::<u64>()) {
        let Some((g, sup)) = supervisor(seed) else { return Ok(()) };
        let supo = build_supo(&sup);
        let t = control_tables(&g, &sup, &supo);
        for &a in &t.events {
            for u in 0..supo.len() {
                prop_assert!(!(t.e(a, u) && t.d(a, u)), "E and D both set for {} at {}", a, u);
            }
        }
        for u in 0..supo.len() {
            prop_assert!(!t.m(u) || t.t(u));
        }
    }

    #[test]
    fn congruences_are_consistent_and_closed(seed in any::<u64>()) {
        let Some((g, sup)) = supervisor(seed) else { return Ok(()) };
        let input = LocalizationInput::prepare(&g, &sup).unwrap();
        let n = input.supo.len();
        for &a in &input.controllable {
            let c = compute_congruence(a, &input);
            prop_assert!(c.is_partition(n));
            let cell_of = |u: usize| c.cells.iter().position(|cell| cell.contains(&u)).unwrap();
            for cell in &c.cells {
                for &u in cell {
                    for &v in cell {
                        prop_assert!(control_consistent(u, v, a, &input.tables).consistent);
                    }
                }
                for &e in &input.observable {
                    let targets: BTreeSet<usize> = cell.iter().filter_map(|&u| input.supo.step(u, e)).map(cell_of).collect();
                    prop_assert!(targets.len() <= 1, "cell {:?} splits on {}", cell, e);
                }
            }
        }
    }

    #[test]
    fn local_controllers_have_the_right_shape(seed in any::<u64>()) {
        let Some((g, sup)) = supervisor(seed) else { return Ok(()) };
        let l = localize(&g, &sup).unwrap();
        let obs = g.alphabet().observable();
        for (&a, c) in &l.controllers {
            let loc = &c.generator;
            prop_assert!(loc.alphabet().contains(a));
            for e in &c.comm_events {
                prop_assert!(obs.contains(e) && *e != a);
            }
            for (s, e, t) in loc.transitions() {
                if s != t {
                    prop_assert!(obs.contains(&e), "LOC{} moves on unobservable {}", a, e);
                }
            }
            if !obs.contains(&a) {
                for s in 0..loc.num_states() {
                    prop_assert_eq!(loc.step(s, a).is_some(), c.control[s]);
                    if let Some(t) = loc.step(s, a) {
                        prop_assert_eq!(t, s);
                    }
                }
            }
        }
        prop_assert!(verify_theorem1(&g, &sup, &l.generators()).unwrap().holds());
    }

    #[test]
    fn full_observation_controllers_are_no_larger(seed in any::<u64>()) {
        let i = common::fully_observable(&instance(seed, DEFAULT));
        let sup = sup_co(&i.plant, &i.spec).unwrap().sup;
        if sup.is_empty() {
            return Ok(());
        }
        let l = localize(&i.plant, &sup).unwrap();
        for c in l.controllers.values() {
            prop_assert!(c.num_states() <= sup.num_states());
        }
    }
}
