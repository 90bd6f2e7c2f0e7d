//! Machine-readable run summaries.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::heterarchical::PipelineResult;
use crate::localization::{Localization, Theorem1Report};
use crate::model::EventId;

#[derive(Debug, Clone, Default, Serialize)]
pub struct RunReport {
    pub command: String,
    pub sizes: BTreeMap<String, usize>,
    pub verdicts: BTreeMap<String, bool>,
    pub warnings: Vec<String>,
    /// milliseconds per step; only filled on request so that reports stay byte-stable
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<BTreeMap<String, f64>>,
}

impl RunReport {
    pub fn new(command: &str) -> RunReport {
        RunReport {
            command: command.to_string(),
            ..RunReport::default()
        }
    }

    pub fn size(&mut self, what: impl Into<String>, n: usize) {
        self.sizes.insert(what.into(), n);
    }

    pub fn verdict(&mut self, what: impl Into<String>, ok: bool) {
        self.verdicts.insert(what.into(), ok);
    }

    pub fn time(&mut self, what: impl Into<String>, ms: f64) {
        self.timings_ms
            .get_or_insert_with(BTreeMap::new)
            .insert(what.into(), ms);
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.values().all(|&v| v)
    }
}

#[derive(Debug, Clone, Serialize)]
struct ControllerSummary<'a> {
    event: EventId,
    states: usize,
    comm_events: &'a [EventId],
    cells: &'a [Vec<usize>],
    control: &'a [bool],
    never_disabled: bool,
    removable: bool,
}

/// `report.json` contents for a localization.
pub fn localization_report(l: &Localization, theorem1: Option<Theorem1Report>) -> serde_json::Value {
    let controllers: Vec<ControllerSummary> = l
        .controllers
        .values()
        .map(|c| ControllerSummary {
            event: c.event,
            states: c.num_states(),
            comm_events: &c.comm_events,
            cells: &c.cells,
            control: &c.control,
            never_disabled: c.never_disabled,
            removable: c.never_disabled && c.num_states() == 1 && c.generator.is_marked(0),
        })
        .collect();
    serde_json::json!({
        "supervisor": l.input.supo.sup_name,
        "uncertainty_sets": l.input.supo.usets,
        "controllers": controllers,
        "theorem1": theorem1,
    })
}

/// `report.json` contents for a pipeline run.
pub fn pipeline_report(r: &PipelineResult) -> serde_json::Value {
    let units: Vec<serde_json::Value> = r
        .units
        .iter()
        .map(|u| {
            serde_json::json!({
                "name": u.name,
                "kind": u.kind,
                "level": u.level,
                "plant_states": u.plant.num_states(),
                "states": u.sup.num_states(),
                "controllers": u.localization.controllers.values()
                    .map(|c| serde_json::json!({"event": c.event, "states": c.num_states(), "comm_events": c.comm_events}))
                    .collect::<Vec<_>>(),
                "theorem1": u.theorem1,
                "contracts_hold": u.contracts_hold,
            })
        })
        .collect();
    let subsystems: Vec<serde_json::Value> = r
        .subsystems
        .iter()
        .map(|s| {
            serde_json::json!({
                "name": s.name,
                "level": s.level,
                "states": s.generator.num_states(),
                "nonblocking": s.nonblocking,
                "coordinator": s.coordinator,
            })
        })
        .collect();
    serde_json::json!({
        "units": units,
        "subsystems": subsystems,
        "abstractions": r.abstractions.iter().map(|(n, a)| serde_json::json!({"name": n, "states": a.num_states()})).collect::<Vec<_>>(),
        "monolithic": r.monolithic,
        "verified": r.all_verified(),
    })
}
