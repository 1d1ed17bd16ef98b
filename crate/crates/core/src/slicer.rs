//! Variable-centric slicing: criterion nodes, 1-hop subgraphs and the
//! deduplicated statement set that goes to the rater.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::cfront::{StmtId, VariableKey};
use crate::pdg::{DepEdge, FunctionPdg};

/// Nodes whose statement defines or uses `v`.
pub fn mark_criteria(pdg: &FunctionPdg, v: &VariableKey) -> BTreeSet<StmtId> {
    pdg.nodes.iter().filter(|s| s.refers_to(v)).map(|s| s.id).collect()
}

/// Criterion nodes of one variable inside one function, their 1-hop
/// neighbourhood and the PDG edges induced on that node set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VariableSubgraph {
    pub variable: VariableKey,
    /// Function whose PDG was sliced; differs from `variable.function` for globals.
    pub function: String,
    pub criteria: BTreeSet<StmtId>,
    pub nodes: BTreeSet<StmtId>,
    pub edges: BTreeSet<DepEdge>,
    /// True when `v` is declared but no statement refers to it.
    pub unreferenced: bool,
}

impl VariableSubgraph {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("subgraph serializes")
    }
}

pub fn extract_subgraph(pdg: &FunctionPdg, v: &VariableKey) -> VariableSubgraph {
    let criteria = mark_criteria(pdg, v);
    let mut nodes = criteria.clone();
    for e in &pdg.edges {
        if criteria.contains(&e.src) {
            nodes.insert(e.dst);
        }
        if criteria.contains(&e.dst) {
            nodes.insert(e.src);
        }
    }
    let edges = pdg
        .edges
        .iter()
        .filter(|e| nodes.contains(&e.src) && nodes.contains(&e.dst))
        .cloned()
        .collect();
    VariableSubgraph {
        variable: v.clone(),
        function: pdg.function.clone(),
        unreferenced: criteria.is_empty(),
        criteria,
        nodes,
        edges,
    }
}

/// Where a normalized statement text came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Origin {
    pub function: String,
    pub node: StmtId,
}

/// Distinct normalized statement texts with every node they came from.
/// Iteration order is lexicographic by text.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct StatementSet {
    pub origins: BTreeMap<String, BTreeSet<Origin>>,
}

impl StatementSet {
    pub fn insert(&mut self, text: impl Into<String>, origin: Origin) {
        self.origins.entry(text.into()).or_default().insert(origin);
    }

    pub fn merge(&mut self, other: StatementSet) {
        for (text, origins) in other.origins {
            self.origins.entry(text).or_default().extend(origins);
        }
    }

    pub fn len(&self) -> usize {
        self.origins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origins.is_empty()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.origins.keys().map(String::as_str)
    }

    pub fn contains(&self, text: &str) -> bool {
        self.origins.contains_key(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("statement set serializes")
    }
}

/// Gather the statements of a batch of subgraphs. Each subgraph is paired
/// with the PDG it was cut from.
pub fn collect_statements<'a>(
    items: impl IntoIterator<Item = (&'a FunctionPdg, &'a VariableSubgraph)>,
) -> StatementSet {
    let mut set = StatementSet::default();
    for (pdg, sg) in items {
        for &id in &sg.nodes {
            set.insert(
                pdg.node(id).norm_text.clone(),
                Origin {
                    function: pdg.function.clone(),
                    node: id,
                },
            );
        }
    }
    set
}
