//! Bounded brute-force check that sup_co is not beaten by any candidate built
//! from a subset of the ambient automaton's transitions.

mod common;

use common::{instance, random_obs, relabel_obs, Bounds};
use desloc::ops::{is_marked_sublanguage, trim};
use desloc::synthesis::{ambient, is_controllable, is_relatively_observable, sup_co};
use desloc::Generator;

const TINY: Bounds = Bounds {
    max_states: 5,
    max_events: 4,
    density: 0.5,
};

const MAX_TRANSITIONS: usize = 12;

fn candidates(a: &Generator) -> impl Iterator<Item = Generator> + '_ {
    let parts = a.to_parts();
    let n = parts.transitions.len();
    (0u32..1 << n).filter_map(move |mask| {
        let mut p = parts.clone();
        p.transitions = parts
            .transitions
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, t)| *t)
            .collect();
        let k = trim(&Generator::from_parts(p).unwrap());
        (!k.is_empty()).then_some(k)
    })
}

#[test]
fn no_admissible_candidate_escapes_sup_co() {
    let mut checked = 0;
    let mut admissible = 0;
    for seed in 0..300u64 {
        let i = instance(seed, TINY);
        let i = relabel_obs(&i, &random_obs(&i));
        let amb = ambient(&i.plant, &i.spec).unwrap();
        if amb.is_empty() || amb.num_transitions() > MAX_TRANSITIONS {
            continue;
        }
        checked += 1;
        let sup = sup_co(&i.plant, &i.spec).unwrap().sup;
        let obs = i.plant.alphabet().observable();
        for k in candidates(&amb) {
            if !is_controllable(&k, &i.plant).unwrap().controllable {
                continue;
            }
            if !is_relatively_observable(&k, &amb, &i.plant, &obs).unwrap().observable {
                continue;
            }
            admissible += 1;
            assert!(
                is_marked_sublanguage(&k, &sup),
                "seed {seed}: admissible candidate with {} states not contained in sup_co output",
                k.num_states()
            );
        }
    }
    println!("maximality: {checked} instances, {admissible} admissible candidates");
    assert!(checked >= 100, "only {checked} instances small enough");
}
