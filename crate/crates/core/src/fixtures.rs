//! Built-in fixtures: a five-state supervisor with three uncertainty sets, and
//! the Transfer Line (two machines and a test unit linked by two buffers).

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};

use crate::model::{Event, EventId, Generator, GeneratorParts};
use crate::ops::sync;

/// Where an expected value comes from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    /// Reported in the published case study.
    Published,
    /// Forced by the definitions.
    Trivial,
    /// Computed by an independent oracle, named here.
    Derived { oracle: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct Expectation {
    pub key: String,
    pub value: Value,
    pub provenance: Provenance,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: String,
    pub generators: BTreeMap<String, Generator>,
    pub expected: Vec<Expectation>,
}

impl Fixture {
    pub fn generator(&self, name: &str) -> &Generator {
        &self.generators[name]
    }

    pub fn expectation(&self, key: &str) -> Option<&Expectation> {
        self.expected.iter().find(|e| e.key == key)
    }
}

fn build(name: &str, events: &[Event], states: usize, marked: &[usize], trans: &[(usize, u32, usize)]) -> Generator {
    Generator::from_parts(GeneratorParts {
        name: name.to_string(),
        events: events.to_vec(),
        states,
        initial: 0,
        marked: marked.to_vec(),
        transitions: trans.iter().map(|&(s, e, t)| (s, EventId(e), t)).collect(),
    })
    .expect("fixture generator is valid")
}

fn expect(key: &str, value: Value, provenance: Provenance) -> Expectation {
    Expectation {
        key: key.to_string(),
        value,
        provenance,
    }
}

pub mod fig1 {
    //! Controllable events {1,3,5}, observable events {1,3,4,8}. Events 2 and 5
    //! are unobservable. `G` differs from `SUP` by a blocking state reached by
    //! 3 after "1" and by 5 after "2".

    use super::*;

    pub fn events() -> Vec<Event> {
        vec![
            Event::new(1, true, true),
            Event::new(2, false, false),
            Event::new(3, true, true),
            Event::new(4, false, true),
            Event::new(5, true, false),
            Event::new(8, false, true),
        ]
    }

    pub fn plant() -> Generator {
        build(
            "G",
            &events(),
            6,
            &[0],
            &[
                (0, 1, 1),
                (0, 2, 2),
                (0, 3, 3),
                (1, 2, 2),
                (1, 3, 5),
                (1, 4, 3),
                (2, 5, 5),
                (2, 8, 0),
                (3, 5, 4),
                (4, 8, 1),
            ],
        )
    }

    /// The plant's own marked language is the specification.
    pub fn spec() -> Generator {
        plant().with_name("E")
    }

    /// States x0..x4.
    pub fn sup() -> Generator {
        build(
            "SUP",
            &events(),
            5,
            &[0],
            &[
                (0, 1, 1),
                (0, 2, 2),
                (0, 3, 3),
                (1, 2, 2),
                (1, 4, 3),
                (2, 8, 0),
                (3, 5, 4),
                (4, 8, 1),
            ],
        )
    }

    pub fn fixture() -> Fixture {
        let mut generators = BTreeMap::new();
        generators.insert("G".to_string(), plant());
        generators.insert("E".to_string(), spec());
        generators.insert("SUP".to_string(), sup());
        Fixture {
            name: "fig1".into(),
            generators,
            expected: vec![
                expect(
                    "uncertainty_sets",
                    json!([[0, 2], [1, 2], [3, 4]]),
                    Provenance::Published,
                ),
                expect(
                    "tables.3",
                    json!({"E": [1, 0, 0], "D": [0, 1, 0], "M": [1, 0, 0], "T": [1, 0, 0]}),
                    Provenance::Published,
                ),
                expect(
                    "tables.5",
                    json!({"E": [0, 0, 1], "D": [1, 1, 0], "M": [1, 0, 0], "T": [1, 0, 0]}),
                    Provenance::Published,
                ),
                expect("congruence.1", json!([[0, 1, 2]]), Provenance::Published),
                expect("congruence.3", json!([[0], [1], [2]]), Provenance::Published),
                expect("congruence.5", json!([[0, 1], [2]]), Provenance::Published),
                expect("loc_sizes", json!({"1": 1, "3": 3, "5": 2}), Provenance::Published),
                expect(
                    "feasible_selfloops",
                    json!({"2": [5]}),
                    Provenance::Derived {
                        oracle: "unobservable event defined at a member state".into(),
                    },
                ),
            ],
        }
    }
}

pub mod transfer_line {
    //! M1 {1,2}, M2 {3,4}, TU {5,6,8}; Buffer1 holds three workpieces (+2, +8,
    //! −3), Buffer2 holds one (+4, −5). Controllable events are {1,3,5}.
    //! Machines are marked when idle, Buffer2 when empty. Buffer1 is marked at
    //! every level.

    use super::*;

    pub const CASE_I_UNOBSERVABLE: [u32; 2] = [3, 6];
    pub const CASE_II_UNOBSERVABLE: [u32; 3] = [1, 3, 5];

    /// Event `id` with TL controllability and the given unobservable set.
    pub fn event(id: u32, unobservable: &[u32]) -> Event {
        Event::new(id, matches!(id, 1 | 3 | 5), !unobservable.contains(&id))
    }

    fn events(ids: &[u32], unobservable: &[u32]) -> Vec<Event> {
        ids.iter().map(|&id| event(id, unobservable)).collect()
    }

    pub fn m1(uo: &[u32]) -> Generator {
        build("M1", &events(&[1, 2], uo), 2, &[0], &[(0, 1, 1), (1, 2, 0)])
    }

    pub fn m2(uo: &[u32]) -> Generator {
        build("M2", &events(&[3, 4], uo), 2, &[0], &[(0, 3, 1), (1, 4, 0)])
    }

    pub fn tu(uo: &[u32]) -> Generator {
        build(
            "TU",
            &events(&[5, 6, 8], uo),
            2,
            &[0],
            &[(0, 5, 1), (1, 6, 0), (1, 8, 0)],
        )
    }

    pub fn b1(uo: &[u32]) -> Generator {
        build(
            "B1",
            &events(&[2, 3, 8], uo),
            4,
            &[0, 1, 2, 3],
            &[
                (0, 2, 1),
                (0, 8, 1),
                (1, 2, 2),
                (1, 8, 2),
                (1, 3, 0),
                (2, 2, 3),
                (2, 8, 3),
                (2, 3, 1),
                (3, 3, 2),
            ],
        )
    }

    pub fn b2(uo: &[u32]) -> Generator {
        build("B2", &events(&[4, 5], uo), 2, &[0], &[(0, 4, 1), (1, 5, 0)])
    }

    pub fn plant(uo: &[u32]) -> Generator {
        sync(&[&m1(uo), &m2(uo), &tu(uo)]).unwrap().with_name("TL")
    }

    pub fn spec(uo: &[u32]) -> Generator {
        sync(&[&b1(uo), &b2(uo)]).unwrap().with_name("SPEC")
    }

    pub fn fixture(uo: &[u32]) -> Fixture {
        let mut generators = BTreeMap::new();
        for g in [m1(uo), m2(uo), tu(uo), b1(uo), b2(uo), plant(uo), spec(uo)] {
            generators.insert(g.name().to_string(), g);
        }
        let mut expected = vec![
            expect(
                "plant_states",
                json!(8),
                Provenance::Derived {
                    oracle: "product enumeration 2x2x2".into(),
                },
            ),
            expect("controllable", json!([1, 3, 5]), Provenance::Published),
        ];
        if uo == CASE_I_UNOBSERVABLE {
            expected.push(expect("sup_states", json!(39), Provenance::Published));
        } else if uo == CASE_II_UNOBSERVABLE {
            expected.push(expect("sup_states", json!(6), Provenance::Published));
        }
        Fixture {
            name: format!("transfer-line(uo={:?})", uo),
            generators,
            expected,
        }
    }
}
