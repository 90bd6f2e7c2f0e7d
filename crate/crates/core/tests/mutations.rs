//! Damaged local controllers must be caught by the checkers.

use desloc::fixtures::{fig1, transfer_line};
use desloc::localization::{check_loc_contract, localize, verify_theorem1, ContractViolation};
use desloc::synthesis::sup_co;
use desloc::{Event, EventId, Generator};

fn rebuild(g: &Generator, edit: impl FnOnce(&mut desloc::GeneratorParts)) -> Generator {
    let mut p = g.to_parts();
    edit(&mut p);
    Generator::from_parts(p).unwrap()
}

fn theorem1_with(g: &Generator, sup: &Generator, locs: &[Generator]) -> bool {
    verify_theorem1(g, sup, &locs.iter().collect::<Vec<_>>())
        .unwrap()
        .holds()
}

#[test]
fn deleting_any_transition_breaks_fig1() {
    let (g, sup) = (fig1::plant(), fig1::sup());
    let l = localize(&g, &sup).unwrap();
    let locs: Vec<Generator> = l.generators().into_iter().cloned().collect();
    assert!(theorem1_with(&g, &sup, &locs));
    let mut tried = 0;
    for (k, loc) in locs.iter().enumerate() {
        for (n, _) in loc.transitions().enumerate() {
            let damaged = rebuild(loc, |p| {
                p.transitions.remove(n);
            });
            let mut set = locs.clone();
            set[k] = damaged;
            assert!(
                !theorem1_with(&g, &sup, &set),
                "{} without transition {n} still passes",
                loc.name()
            );
            tried += 1;
        }
    }
    assert!(tried >= 4);
}

#[test]
fn enabling_a_disabled_event_is_reported() {
    let (g, sup) = (fig1::plant(), fig1::sup());
    let l = localize(&g, &sup).unwrap();
    let c = &l.controllers[&EventId(5)];
    let off = c.control.iter().position(|&on| !on).expect("LOC5 disables somewhere");
    let flipped = rebuild(&c.generator, |p| p.transitions.push((off, EventId(5), off)));
    match check_loc_contract(&flipped, EventId(5), &g, &sup) {
        Some(ContractViolation::Enablement { supervisor_enables, .. }) => assert!(!supervisor_enables),
        other => panic!("expected an enablement violation, got {other:?}"),
    }
}

#[test]
fn disabling_an_enabled_event_is_reported() {
    let (g, sup) = (fig1::plant(), fig1::sup());
    let l = localize(&g, &sup).unwrap();
    let c = &l.controllers[&EventId(3)];
    let flipped = rebuild(&c.generator, |p| p.transitions.retain(|&(_, e, _)| e != EventId(3)));
    match check_loc_contract(&flipped, EventId(3), &g, &sup) {
        Some(ContractViolation::Enablement {
            string,
            supervisor_enables,
        }) => {
            assert!(supervisor_enables);
            assert!(string.is_empty(), "3 is enabled initially, got {string:?}");
        }
        other => panic!("expected an enablement violation, got {other:?}"),
    }
}

#[test]
fn unobservable_move_is_reported() {
    let (g, sup) = (fig1::plant(), fig1::sup());
    let l = localize(&g, &sup).unwrap();
    let loc = &l.controllers[&EventId(3)].generator;
    assert!(loc.num_states() > 1);
    let damaged = rebuild(loc, |p| {
        p.events.push(Event::new(2, false, false));
        p.transitions.retain(|&(s, _, _)| s != 0);
        p.transitions.push((0, EventId(2), 1));
    });
    assert_eq!(
        check_loc_contract(&damaged, EventId(3), &g, &sup),
        Some(ContractViolation::UnobservableMove {
            from: 0,
            event: EventId(2),
            to: 1
        })
    );
}

#[test]
fn dropping_a_disabling_controller_breaks_fig1() {
    let (g, sup) = (fig1::plant(), fig1::sup());
    let l = localize(&g, &sup).unwrap();
    for (&a, c) in &l.controllers {
        let rest: Vec<Generator> = l
            .controllers
            .iter()
            .filter(|&(&b, _)| b != a)
            .map(|(_, c)| c.generator.clone())
            .collect();
        assert_eq!(theorem1_with(&g, &sup, &rest), c.never_disabled, "LOC{a}");
    }
}

/// Another controller may track α as a communication event, so removing
/// LOC_α can be harmless; the full set must still be exact.
#[test]
fn transfer_line_controllers_are_exact() {
    let uo = transfer_line::CASE_I_UNOBSERVABLE;
    let g = transfer_line::plant(&uo);
    let sup = sup_co(&g, &transfer_line::spec(&uo)).unwrap().sup;
    let l = localize(&g, &sup).unwrap();
    let all: Vec<Generator> = l.generators().into_iter().cloned().collect();
    assert!(theorem1_with(&g, &sup, &all));
    assert!(!theorem1_with(&g, &sup, &[]));
}
