//! Graphviz rendering of PDGs and variable subgraphs.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::cfront::StmtId;
use crate::pdg::{DepKind, FunctionPdg};
use crate::slicer::VariableSubgraph;

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n")
}

fn render(pdg: &FunctionPdg, name: &str, keep: Option<&BTreeSet<StmtId>>, criteria: &BTreeSet<StmtId>) -> String {
    let shown = |id: StmtId| keep.is_none_or(|k| k.contains(&id));
    let mut out = String::new();
    writeln!(out, "digraph \"{}\" {{", escape(name)).unwrap();
    writeln!(out, "  node [shape=box, fontname=\"monospace\"];").unwrap();
    for s in pdg.nodes.iter().filter(|s| shown(s.id)) {
        let style = if criteria.contains(&s.id) {
            ", style=filled, fillcolor=orange"
        } else {
            ""
        };
        writeln!(
            out,
            "  n{} [label=\"{}: {}\"{}];",
            s.id,
            s.id,
            escape(&s.norm_text),
            style
        )
        .unwrap();
    }
    for e in pdg.edges.iter().filter(|e| shown(e.src) && shown(e.dst)) {
        match (e.kind, &e.var) {
            (DepKind::Data, Some(v)) => {
                writeln!(out, "  n{} -> n{} [label=\"{}\"];", e.src, e.dst, escape(&v.name)).unwrap()
            }
            _ => writeln!(out, "  n{} -> n{} [style=dashed];", e.src, e.dst).unwrap(),
        }
    }
    out.push_str("}\n");
    out
}

/// Whole-function graph. Data edges are solid and labelled with their
/// variable, control edges dashed.
pub fn pdg_to_dot(pdg: &FunctionPdg) -> String {
    render(pdg, &pdg.function, None, &BTreeSet::new())
}

/// One variable's subgraph with its criterion nodes filled orange.
pub fn subgraph_to_dot(pdg: &FunctionPdg, sg: &VariableSubgraph) -> String {
    render(pdg, &sg.variable.to_string(), Some(&sg.nodes), &sg.criteria)
}
