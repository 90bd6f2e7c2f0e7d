//! Scale-up pipeline: one supervisor per specification over its coupled agents,
//! subsystems grouped by configuration, coordinators for blocking subsystems,
//! abstraction by natural projection between levels, and localization of
//! every supervisor and coordinator.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{parse_generator, parse_generator_value};
use crate::localization::{check_loc_contract, localize, verify_theorem1, Localization, Theorem1Report};
use crate::model::{Event, EventId, Generator, StateId};
use crate::ops::{is_nonblocking, is_sublanguage, project, selfloop, subset_construction, sync, trim};
use crate::synthesis::sup_co;

/// A generator given inline or as a path relative to the config file.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GeneratorSource {
    Path(String),
    Inline(serde_json::Value),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentEntry {
    pub name: String,
    pub generator: GeneratorSource,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecEntry {
    pub name: String,
    pub generator: GeneratorSource,
    /// names of the agents this specification is coupled with
    pub agents: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupEntry {
    pub name: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelEntry {
    pub groups: Vec<GroupEntry>,
    /// Events kept when abstracting this level's subsystems. Defaults to the
    /// events shared by at least two groups.
    #[serde(default)]
    pub abstraction: Option<Vec<u32>>,
}

/// Pipeline description as read from JSON.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub agents: Vec<AgentEntry>,
    pub specs: Vec<SpecEntry>,
    pub levels: Vec<LevelEntry>,
    /// also synthesize the monolithic supervisor and compare
    #[serde(default)]
    pub monolithic: bool,
}

impl PipelineConfig {
    pub fn from_file(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| crate::io::schema_error(&path.display().to_string(), e))
    }
}

/// Config with every generator loaded.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub agents: Vec<(String, Generator)>,
    pub specs: Vec<(String, Generator, Vec<String>)>,
    pub levels: Vec<LevelEntry>,
    pub monolithic: bool,
}

fn load(src: &GeneratorSource, base: &Path, context: &str) -> Result<Generator> {
    match src {
        GeneratorSource::Path(p) => parse_generator(&base.join(p)),
        GeneratorSource::Inline(v) => parse_generator_value(v.clone(), context),
    }
}

impl Pipeline {
    /// Resolves generator paths against `base`.
    pub fn load(config: &PipelineConfig, base: &Path) -> Result<Pipeline> {
        let mut agents = Vec::new();
        for a in &config.agents {
            agents.push((a.name.clone(), load(&a.generator, base, &a.name)?));
        }
        let mut specs = Vec::new();
        for s in &config.specs {
            specs.push((s.name.clone(), load(&s.generator, base, &s.name)?, s.agents.clone()));
        }
        let p = Pipeline {
            agents,
            specs,
            levels: config.levels.clone(),
            monolithic: config.monolithic,
        };
        p.check_names()?;
        Ok(p)
    }

    fn check_names(&self) -> Result<()> {
        let agents: BTreeSet<&str> = self.agents.iter().map(|(n, _)| n.as_str()).collect();
        for (name, _, coupled) in &self.specs {
            for a in coupled {
                if !agents.contains(a.as_str()) {
                    return Err(config_error(name, format!("unknown agent `{a}`")));
                }
            }
        }
        let mut surviving: BTreeSet<String> = self.specs.iter().map(|(n, _, _)| n.clone()).collect();
        for (l, level) in self.levels.iter().enumerate() {
            let mut seen = BTreeSet::new();
            for g in &level.groups {
                for m in &g.members {
                    if !surviving.contains(m) {
                        return Err(config_error(&g.name, format!("level {l}: unknown module `{m}`")));
                    }
                    if !seen.insert(m.clone()) {
                        return Err(config_error(&g.name, format!("level {l}: module `{m}` grouped twice")));
                    }
                }
            }
            if seen != surviving {
                let missing: Vec<_> = surviving.difference(&seen).collect();
                return Err(config_error(
                    &format!("level {l}"),
                    format!("modules not grouped: {missing:?}"),
                ));
            }
            surviving = level.groups.iter().map(|g| g.name.clone()).collect();
        }
        if surviving.len() > 1 {
            return Err(config_error(
                "levels",
                "the last level must have exactly one group".into(),
            ));
        }
        Ok(())
    }
}

fn config_error(unit: &str, message: String) -> Error {
    Error::Pipeline {
        stage: "config".into(),
        unit: unit.into(),
        message,
    }
}

fn stage_error(stage: &str, unit: &str, e: Error) -> Error {
    Error::Pipeline {
        stage: stage.into(),
        unit: unit.into(),
        message: e.to_string(),
    }
}

/// Supervisor for `spec` over the synchronous product of its coupled agents.
/// Specification events the agents do not have are selflooped into the plant.
pub fn synth_decentralized(name: &str, spec: &Generator, agents: &[&Generator]) -> Result<(Generator, Generator)> {
    let mut plant = sync(agents)?;
    let foreign: Vec<Event> = spec
        .alphabet()
        .iter()
        .filter(|e| !plant.alphabet().contains(e.id))
        .copied()
        .collect();
    if !foreign.is_empty() {
        log::warn!(
            "specification `{name}` uses events {:?} outside its agents; selflooped into the plant",
            foreign.iter().map(|e| e.id.0).collect::<Vec<_>>()
        );
        plant = selfloop(&plant, &foreign)?;
    }
    let r = sup_co(&plant, spec)?;
    if r.is_empty() {
        return Err(Error::Pipeline {
            stage: "decentralized".into(),
            unit: name.into(),
            message: "supervisor is empty".into(),
        });
    }
    Ok((plant, r.sup.with_name(&format!("{name}SUP"))))
}

/// Coordinator removing the blocking strings of `subsystem`.
pub fn synth_coordinator(subsystem: &Generator) -> Result<Generator> {
    let spec = trim(subsystem);
    let r = sup_co(subsystem, &spec)?;
    if r.is_empty() {
        return Err(Error::EmptySupervisor);
    }
    Ok(r.sup)
}

/// Failure of the observer property: after `s`, the projected continuation `t`
/// leads to a projected marked string but cannot be matched.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ObserverWitness {
    pub s: Vec<EventId>,
    pub t: Vec<EventId>,
}

/// Whether the natural projection onto `keep` is an observer for the marked
/// language of `g` (assumed trim).
pub fn check_natural_observer(g: &Generator, keep: &BTreeSet<EventId>) -> Result<Option<ObserverWitness>> {
    for &e in keep {
        if !g.alphabet().contains(e) {
            return Err(Error::UnknownEvent {
                event: e,
                generator: g.name().to_string(),
            });
        }
    }
    let Some(x0) = g.initial() else {
        return Ok(None);
    };
    let proj = subset_construction(g, keep);
    let proj_marked: Vec<bool> = proj.sets.iter().map(|s| s.ones().any(|x| g.is_marked(x))).collect();
    let silent_reach = |x: StateId, goal: &dyn Fn(StateId) -> bool| -> bool {
        let mut seen = BTreeSet::from([x]);
        let mut queue = VecDeque::from([x]);
        while let Some(y) = queue.pop_front() {
            if goal(y) {
                return true;
            }
            for (e, z) in g.out(y) {
                if !keep.contains(&e) && seen.insert(z) {
                    queue.push_back(z);
                }
            }
        }
        false
    };
    // shortest projected continuation from subset `y` to a marked subset
    let to_marked = |y: usize| -> Vec<EventId> {
        let mut parent: HashMap<usize, (usize, EventId)> = HashMap::new();
        let mut queue = VecDeque::from([y]);
        let mut seen = BTreeSet::from([y]);
        while let Some(z) = queue.pop_front() {
            if proj_marked[z] {
                let mut t = Vec::new();
                let mut c = z;
                while let Some(&(p, e)) = parent.get(&c) {
                    t.push(e);
                    c = p;
                }
                t.reverse();
                return t;
            }
            for (&e, &w) in &proj.delta[z] {
                if seen.insert(w) {
                    parent.insert(w, (z, e));
                    queue.push_back(w);
                }
            }
        }
        Vec::new()
    };

    let mut index: HashMap<(StateId, usize), usize> = HashMap::from([((x0, 0), 0)]);
    let mut pairs = vec![(x0, 0usize)];
    let mut parent: Vec<Option<(usize, EventId)>> = vec![None];
    let mut head = 0;
    while head < pairs.len() {
        let (x, y) = pairs[head];
        let path = || {
            let mut s = Vec::new();
            let mut i = head;
            while let Some((p, e)) = parent[i] {
                s.push(e);
                i = p;
            }
            s.reverse();
            s
        };
        for (&sigma, &y2) in &proj.delta[y] {
            if !silent_reach(x, &|z| g.step(z, sigma).is_some()) {
                let mut t = vec![sigma];
                t.extend(to_marked(y2));
                return Ok(Some(ObserverWitness { s: path(), t }));
            }
        }
        if proj_marked[y] && !silent_reach(x, &|z| g.is_marked(z)) {
            return Ok(Some(ObserverWitness {
                s: path(),
                t: Vec::new(),
            }));
        }
        for (e, x2) in g.out(x) {
            let y2 = if keep.contains(&e) { proj.delta[y][&e] } else { y };
            if let std::collections::hash_map::Entry::Vacant(v) = index.entry((x2, y2)) {
                v.insert(pairs.len());
                pairs.push((x2, y2));
                parent.push(Some((head, e)));
            }
        }
        head += 1;
    }
    Ok(None)
}

/// Projection of `g` onto `keep`, refused unless the projection is an observer.
pub fn abstract_model(g: &Generator, keep: &BTreeSet<EventId>) -> Result<Generator> {
    if let Some(w) = check_natural_observer(g, keep)? {
        return Err(Error::NotObserver(format!(
            "projection of `{}` fails after s={:?} with t={:?}",
            g.name(),
            w.s.iter().map(|e| e.0).collect::<Vec<_>>(),
            w.t.iter().map(|e| e.0).collect::<Vec<_>>()
        )));
    }
    project(g, keep)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnitKind {
    Supervisor,
    Coordinator,
}

/// A supervisor or coordinator with its plant scope and local controllers.
#[derive(Debug, Clone)]
pub struct Unit {
    pub name: String,
    pub kind: UnitKind,
    pub level: usize,
    pub plant: Generator,
    pub sup: Generator,
    pub localization: Localization,
    pub theorem1: Theorem1Report,
    pub contracts_hold: bool,
}

#[derive(Debug, Clone)]
pub struct Subsystem {
    pub name: String,
    pub level: usize,
    pub generator: Generator,
    pub nonblocking: bool,
    pub coordinator: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SizeRow {
    pub unit: String,
    pub kind: String,
    pub states: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonolithicComparison {
    pub monolithic_states: usize,
    pub closed_loop_states: usize,
    pub contained: bool,
    pub closed_loop_nonblocking: bool,
}

#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub units: Vec<Unit>,
    pub subsystems: Vec<Subsystem>,
    pub abstractions: Vec<(String, Generator)>,
    pub monolithic: Option<MonolithicComparison>,
}

impl PipelineResult {
    /// Every unit, subsystem, abstraction and local controller with its state count.
    pub fn sizes(&self) -> Vec<SizeRow> {
        let row = |unit: &str, kind: &str, states| SizeRow {
            unit: unit.to_string(),
            kind: kind.to_string(),
            states,
        };
        let mut rows = Vec::new();
        for u in self.units.iter().filter(|u| u.kind == UnitKind::Supervisor) {
            rows.push(row(&u.name, "supervisor", u.sup.num_states()));
        }
        for s in &self.subsystems {
            rows.push(row(&s.name, "subsystem", s.generator.num_states()));
        }
        for u in self.units.iter().filter(|u| u.kind == UnitKind::Coordinator) {
            rows.push(row(&u.name, "coordinator", u.sup.num_states()));
        }
        for (name, a) in &self.abstractions {
            rows.push(row(name, "abstraction", a.num_states()));
        }
        for u in &self.units {
            for (alpha, c) in &u.localization.controllers {
                rows.push(row(
                    &format!("{}LOC{}", u.name, alpha),
                    "local-controller",
                    c.num_states(),
                ));
            }
        }
        rows
    }

    pub fn sizes_csv(&self) -> String {
        let mut out = String::from("unit,kind,states\n");
        for r in self.sizes() {
            out.push_str(&format!("{},{},{}\n", r.unit, r.kind, r.states));
        }
        out
    }

    pub fn all_verified(&self) -> bool {
        self.units.iter().all(|u| u.theorem1.holds() && u.contracts_hold)
            && self
                .monolithic
                .as_ref()
                .is_none_or(|m| m.contained && m.closed_loop_nonblocking)
    }
}

fn localize_unit(name: &str, kind: UnitKind, level: usize, plant: Generator, sup: Generator) -> Result<Unit> {
    let localization = localize(&plant, &sup).map_err(|e| stage_error("localize", name, e))?;
    let theorem1 = verify_theorem1(&plant, &sup, &localization.generators())?;
    let contracts_hold = localization
        .controllers
        .iter()
        .all(|(&a, c)| check_loc_contract(&c.generator, a, &plant, &sup).is_none());
    Ok(Unit {
        name: name.to_string(),
        kind,
        level,
        plant,
        sup,
        localization,
        theorem1,
        contracts_hold,
    })
}

fn default_abstraction(groups: &[(String, Generator)]) -> BTreeSet<EventId> {
    let mut count: BTreeMap<EventId, usize> = BTreeMap::new();
    for (_, g) in groups {
        for e in g.alphabet().ids() {
            *count.entry(e).or_default() += 1;
        }
    }
    count.into_iter().filter(|&(_, c)| c > 1).map(|(e, _)| e).collect()
}

pub fn run_pipeline(p: &Pipeline) -> Result<PipelineResult> {
    let agents: BTreeMap<&str, &Generator> = p.agents.iter().map(|(n, g)| (n.as_str(), g)).collect();
    let mut units = Vec::new();
    let mut modules: BTreeMap<String, Generator> = BTreeMap::new();

    for (name, spec, coupled) in &p.specs {
        let gs: Vec<&Generator> = coupled.iter().map(|a| agents[a.as_str()]).collect();
        let (plant, sup) = synth_decentralized(name, spec, &gs).map_err(|e| match e {
            Error::Pipeline { .. } => e,
            e => stage_error("decentralized", name, e),
        })?;
        log::info!(
            "{name}SUP: {} states over a {}-state plant",
            sup.num_states(),
            plant.num_states()
        );
        modules.insert(name.clone(), sup.clone());
        units.push((format!("{name}SUP"), UnitKind::Supervisor, 0, plant, sup));
    }

    let mut subsystems = Vec::new();
    let mut abstractions = Vec::new();
    let last = p.levels.len().saturating_sub(1);
    for (l, level) in p.levels.iter().enumerate() {
        let mut closed: Vec<(String, Generator)> = Vec::new();
        for group in &level.groups {
            let members: Vec<&Generator> = group.members.iter().map(|m| &modules[m]).collect();
            let sub = sync(&members).map_err(|e| stage_error("group", &group.name, e))?;
            let sub = sub.with_name(&group.name);
            let nonblocking = is_nonblocking(&sub);
            let mut coordinator = None;
            let controlled = if nonblocking {
                trim(&sub)
            } else {
                let co_name = format!("{}CO", group.name);
                let co = synth_coordinator(&sub)
                    .map_err(|e| stage_error("coordinator", &group.name, e))?
                    .with_name(&co_name);
                let both = sync(&[&sub, &co])?;
                if !is_nonblocking(&both) {
                    return Err(Error::Pipeline {
                        stage: "coordinator".into(),
                        unit: co_name,
                        message: "subsystem under coordinator is still blocking".into(),
                    });
                }
                log::info!(
                    "{co_name}: {} states for a {}-state subsystem",
                    co.num_states(),
                    sub.num_states()
                );
                units.push((co_name.clone(), UnitKind::Coordinator, l + 1, sub.clone(), co));
                coordinator = Some(co_name);
                trim(&both)
            };
            subsystems.push(Subsystem {
                name: group.name.clone(),
                level: l + 1,
                generator: sub,
                nonblocking,
                coordinator,
            });
            closed.push((group.name.clone(), controlled.with_name(&group.name)));
        }
        if l == last {
            break;
        }
        let keep: BTreeSet<EventId> = match &level.abstraction {
            Some(ids) => ids.iter().map(|&i| EventId(i)).collect(),
            None => default_abstraction(&closed),
        };
        modules.clear();
        for (name, g) in closed {
            let local: BTreeSet<EventId> = keep.intersection(&g.alphabet().ids()).copied().collect();
            let a = abstract_model(&g, &local)
                .map_err(|e| stage_error("abstraction", &name, e))?
                .with_name(&format!("{name}ABS"));
            abstractions.push((format!("{name}ABS"), a.clone()));
            modules.insert(name, a);
        }
    }

    let mut out = Vec::new();
    for (name, kind, level, plant, sup) in units {
        out.push(localize_unit(&name, kind, level, plant, sup)?);
    }

    let monolithic = if p.monolithic {
        Some(compare_monolithic(p, &out)?)
    } else {
        None
    };
    Ok(PipelineResult {
        units: out,
        subsystems,
        abstractions,
        monolithic,
    })
}

/// Closed loop of every agent with every supervisor and coordinator, against
/// the monolithic supervisor of all agents and specifications.
fn compare_monolithic(p: &Pipeline, units: &[Unit]) -> Result<MonolithicComparison> {
    let agents: Vec<&Generator> = p.agents.iter().map(|(_, g)| g).collect();
    let plant = sync(&agents)?;
    let specs: Vec<&Generator> = p.specs.iter().map(|(_, g, _)| g).collect();
    let spec = sync(&specs)?;
    let mono = sup_co(&plant, &spec)
        .map_err(|e| stage_error("monolithic", "SUP", e))?
        .sup;
    let mut parts = vec![&plant];
    parts.extend(units.iter().map(|u| &u.sup));
    let closed_loop = sync(&parts)?;
    Ok(MonolithicComparison {
        monolithic_states: mono.num_states(),
        closed_loop_states: closed_loop.num_states(),
        contained: is_sublanguage(&closed_loop, &mono),
        closed_loop_nonblocking: is_nonblocking(&closed_loop),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GeneratorParts;

    fn gen(
        name: &str,
        events: &[(u32, bool, bool)],
        n: usize,
        marked: &[usize],
        t: &[(usize, u32, usize)],
    ) -> Generator {
        Generator::from_parts(GeneratorParts {
            name: name.into(),
            events: events.iter().map(|&(i, c, o)| Event::new(i, c, o)).collect(),
            states: n,
            initial: 0,
            marked: marked.to_vec(),
            transitions: t.iter().map(|&(s, e, d)| (s, EventId(e), d)).collect(),
        })
        .unwrap()
    }

    #[test]
    fn observer_check_identity_and_failure() {
        // a.b and c.a marked; with only b kept, ε is a projected marked string
        // but after a no marked state is reachable without b
        let g = gen(
            "G",
            &[(1, true, true), (2, true, true), (3, true, true)],
            5,
            &[2, 4],
            &[(0, 1, 1), (1, 2, 2), (0, 3, 3), (3, 1, 4)],
        );
        let all = g.alphabet().ids();
        assert_eq!(check_natural_observer(&g, &all).unwrap(), None);
        let w = check_natural_observer(&g, &BTreeSet::from([EventId(2)]))
            .unwrap()
            .unwrap();
        assert_eq!(w.s, vec![EventId(1)]);
        assert!(w.t.is_empty());
        assert!(abstract_model(&g, &BTreeSet::from([EventId(2)])).is_err());
    }

    #[test]
    fn foreign_spec_events_are_selflooped() {
        let agent = gen("A", &[(1, true, true)], 1, &[0], &[(0, 1, 0)]);
        let spec = gen("S", &[(3, true, true)], 2, &[0], &[(0, 3, 1), (1, 3, 0)]);
        let (plant, sup) = synth_decentralized("S", &spec, &[&agent]).unwrap();
        assert!(plant.alphabet().contains(EventId(3)));
        assert_eq!(sup.num_states(), 2);
    }
}
