//! Graphviz export. The initial state gets an inbound arrow from an invisible
//! node and marked states are drawn as double circles.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::model::Generator;

/// DOT text for `g`. Parallel edges are merged into one edge with a
/// comma-separated label.
pub fn to_dot(g: &Generator) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", g.name().replace('"', "\\\""));
    out.push_str("  rankdir=LR;\n  node [shape=circle];\n");
    if let Some(init) = g.initial() {
        let _ = writeln!(out, "  init [shape=point, style=invis];\n  init -> {init};");
    }
    for s in 0..g.num_states() {
        let shape = if g.is_marked(s) { "doublecircle" } else { "circle" };
        let _ = writeln!(out, "  {s} [shape={shape}];");
    }
    for s in 0..g.num_states() {
        let mut by_target: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for (e, t) in g.out(s) {
            by_target.entry(t).or_default().push(e.to_string());
        }
        for (t, labels) in by_target {
            let _ = writeln!(out, "  {s} -> {t} [label=\"{}\"];", labels.join(","));
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Event, GeneratorParts};

    #[test]
    fn one_marked_state() {
        let g = Generator::from_parts(GeneratorParts {
            name: "ONE".into(),
            events: vec![Event::new(1, true, true)],
            states: 1,
            initial: 0,
            marked: vec![0],
            transitions: vec![],
        })
        .unwrap();
        let dot = to_dot(&g);
        assert!(dot.contains("0 [shape=doublecircle];"));
        assert!(dot.contains("init -> 0;"));
    }
}
