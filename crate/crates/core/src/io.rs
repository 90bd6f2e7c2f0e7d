//! JSON file format for generators.
//!
//! ```json
//! {"name": "M1",
//!  "events": [{"id": 1, "controllable": true, "observable": true}],
//!  "states": 2, "initial": 0, "marked": [0],
//!  "transitions": [[0, 1, 1], [1, 2, 0]]}
//! ```
//!
//! Event flags may be omitted: odd ids are then controllable and every event is
//! observable.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Event, EventId, Generator, GeneratorParts, StateId};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventRecord {
    pub id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controllable: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<bool>,
}

/// On-disk shape of a generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorRecord {
    pub name: String,
    pub events: Vec<EventRecord>,
    pub states: usize,
    pub initial: usize,
    pub marked: Vec<StateId>,
    pub transitions: Vec<(StateId, u32, StateId)>,
}

impl GeneratorRecord {
    pub fn from_generator(g: &Generator) -> GeneratorRecord {
        let parts = g.to_parts();
        GeneratorRecord {
            name: parts.name,
            events: parts
                .events
                .iter()
                .map(|e| EventRecord {
                    id: e.id.0,
                    controllable: Some(e.controllable),
                    observable: Some(e.observable),
                })
                .collect(),
            states: parts.states,
            initial: parts.initial,
            marked: parts.marked,
            transitions: parts.transitions.iter().map(|&(s, e, t)| (s, e.0, t)).collect(),
        }
    }

    /// Applies default flags where omitted and validates.
    pub fn into_generator(self, context: &str) -> Result<Generator> {
        let mut defaulted = Vec::new();
        let events = self
            .events
            .iter()
            .map(|r| {
                let d = Event::with_default_flags(r.id);
                if r.controllable.is_none() || r.observable.is_none() {
                    defaulted.push(r.id);
                }
                Event::new(
                    r.id,
                    r.controllable.unwrap_or(d.controllable),
                    r.observable.unwrap_or(d.observable),
                )
            })
            .collect();
        if !defaulted.is_empty() {
            log::warn!("{context}: default flags applied to events {defaulted:?}");
        }
        Generator::from_parts(GeneratorParts {
            name: self.name,
            events,
            states: self.states,
            initial: self.initial,
            marked: self.marked,
            transitions: self
                .transitions
                .into_iter()
                .map(|(s, e, t)| (s, EventId(e), t))
                .collect(),
        })
    }
}

pub(crate) fn schema_error(context: &str, e: serde_json::Error) -> Error {
    Error::Schema {
        context: context.to_string(),
        message: e.to_string(),
    }
}

/// Parses a generator from JSON text; `context` names the source in errors.
pub fn parse_generator_str(text: &str, context: &str) -> Result<Generator> {
    let record: GeneratorRecord = serde_json::from_str(text).map_err(|e| schema_error(context, e))?;
    record.into_generator(context)
}

pub fn parse_generator_value(value: serde_json::Value, context: &str) -> Result<Generator> {
    let record: GeneratorRecord = serde_json::from_value(value).map_err(|e| schema_error(context, e))?;
    record.into_generator(context)
}

pub fn parse_generator(path: &Path) -> Result<Generator> {
    let text = fs::read_to_string(path)?;
    parse_generator_str(&text, &path.display().to_string())
}

/// JSON text with one event and one transition per line.
pub fn generator_to_json(g: &Generator) -> String {
    let r = GeneratorRecord::from_generator(g);
    let mut out = String::new();
    let name = serde_json::to_string(&r.name).unwrap();
    let _ = writeln!(out, "{{\n  \"name\": {name},\n  \"events\": [");
    for (i, e) in r.events.iter().enumerate() {
        let sep = if i + 1 < r.events.len() { "," } else { "" };
        let _ = writeln!(
            out,
            "    {{\"id\": {}, \"controllable\": {}, \"observable\": {}}}{sep}",
            e.id,
            e.controllable.unwrap(),
            e.observable.unwrap()
        );
    }
    let marked: Vec<String> = r.marked.iter().map(|m| m.to_string()).collect();
    let _ = writeln!(
        out,
        "  ],\n  \"states\": {},\n  \"initial\": {},\n  \"marked\": [{}],\n  \"transitions\": [",
        r.states,
        r.initial,
        marked.join(", ")
    );
    for (i, (s, e, t)) in r.transitions.iter().enumerate() {
        let sep = if i + 1 < r.transitions.len() { "," } else { "" };
        let _ = writeln!(out, "    [{s}, {e}, {t}]{sep}");
    }
    out.push_str("  ]\n}\n");
    out
}

pub fn write_generator(g: &Generator, path: &Path) -> Result<()> {
    fs::write(path, generator_to_json(g))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::transfer_line;
    use crate::ops::isomorphic;

    #[test]
    fn round_trip_is_isomorphic() {
        let m1 = transfer_line::m1(&[3, 6]);
        let back = parse_generator_str(&generator_to_json(&m1), "m1").unwrap();
        assert!(isomorphic(&m1, &back));
        assert_eq!(back, m1);
    }

    #[test]
    fn missing_initial_is_schema_error() {
        let text = r#"{"name": "X", "events": [], "states": 1, "marked": [], "transitions": []}"#;
        match parse_generator_str(text, "x.json") {
            Err(Error::Schema { context, message }) => {
                assert_eq!(context, "x.json");
                assert!(message.contains("initial"), "{message}");
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn omitted_flags_follow_parity() {
        let text = r#"{"name": "X", "events": [{"id": 1}, {"id": 2, "observable": false}],
            "states": 1, "initial": 0, "marked": [0], "transitions": [[0, 1, 0]]}"#;
        let g = parse_generator_str(text, "x").unwrap();
        assert!(g.alphabet().is_controllable(EventId(1)));
        assert!(g.alphabet().is_observable(EventId(1)));
        assert!(!g.alphabet().is_controllable(EventId(2)));
        assert!(!g.alphabet().is_observable(EventId(2)));
    }

    #[test]
    fn nondeterminism_is_rejected() {
        let text = r#"{"name": "X", "events": [{"id": 1}], "states": 2, "initial": 0,
            "marked": [], "transitions": [[0, 1, 0], [0, 1, 1]]}"#;
        assert!(matches!(
            parse_generator_str(text, "x"),
            Err(Error::InvalidGenerator { .. })
        ));
    }
}
