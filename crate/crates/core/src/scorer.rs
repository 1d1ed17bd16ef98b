//! Per-variable UPR scores from rated subgraphs, and the ranked report.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cfront::{StmtId, VariableKey};
use crate::pdg::FunctionPdg;
use crate::rater::{PromptProfile, RatingMap};
use crate::slicer::VariableSubgraph;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("domain error: {0}")]
pub struct DomainError(pub String);

/// Tolerance for float round-off when checking `normalize` input bounds.
const EPS: f64 = 1e-9;

fn check_lambda(lambda: f64) -> Result<(), DomainError> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(DomainError(format!("lambda {lambda} outside [0, 1]")))
    }
}

/// Map an aggregated score in `[0, 10(1+lambda)]` back to `[0, 10]`.
pub fn normalize(raw: f64, lambda: f64) -> Result<f64, DomainError> {
    check_lambda(lambda)?;
    let hi = 10.0 * (1.0 + lambda);
    if !(-EPS..=hi + EPS).contains(&raw) {
        return Err(DomainError(format!("raw score {raw} outside [0, {hi}]")));
    }
    Ok((raw / (1.0 + lambda)).clamp(0.0, 10.0))
}

/// `normalize(s_c + lambda * s_v, lambda)`, evaluated as
/// `s_c + lambda * (s_v - s_c) / (1 + lambda)` so that `lambda == 0` and
/// `s_c == s_v` give `s_c` exactly instead of a rounded neighbour.
pub fn aggregate(s_c: f64, s_v: f64, lambda: f64) -> Result<f64, DomainError> {
    check_lambda(lambda)?;
    for s in [s_c, s_v] {
        if !(0.0..=10.0).contains(&s) {
            return Err(DomainError(format!("node score {s} outside [0, 10]")));
        }
    }
    Ok((s_c + lambda * (s_v - s_c) / (1.0 + lambda)).clamp(0.0, 10.0))
}

/// A subgraph whose nodes carry their statement ratings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoredSubgraph {
    pub subgraph: VariableSubgraph,
    pub node_scores: BTreeMap<StmtId, u8>,
}

impl ScoredSubgraph {
    /// Look up every node's rating by its normalized text. Statements absent
    /// from `ratings` score 0.
    pub fn annotate(pdg: &FunctionPdg, subgraph: VariableSubgraph, ratings: &RatingMap) -> Self {
        let node_scores = subgraph
            .nodes
            .iter()
            .map(|&id| {
                let text = &pdg.node(id).norm_text;
                let value = ratings.get(text).map_or_else(
                    || {
                        log::warn!("no rating for `{text}`; scoring it 0");
                        0
                    },
                    |r| r.value,
                );
                (id, value)
            })
            .collect();
        ScoredSubgraph { subgraph, node_scores }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionScore {
    pub function: String,
    pub node: StmtId,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UprScore {
    pub variable: VariableKey,
    pub score: f64,
    pub lambda: f64,
    pub per_criterion: Vec<CriterionScore>,
    pub unreferenced: bool,
}

/// Aggregate each criterion node with its best neighbour, then take the max.
/// A node is not its own neighbour, even through a loop-carried self edge.
pub fn score_variable(sg: &ScoredSubgraph, lambda: f64) -> Result<UprScore, DomainError> {
    check_lambda(lambda)?;
    let g = &sg.subgraph;
    let score_of = |id: StmtId| f64::from(sg.node_scores.get(&id).copied().unwrap_or(0));
    let mut adjacency: BTreeMap<StmtId, BTreeSet<StmtId>> = BTreeMap::new();
    for e in g.edges.iter().filter(|e| e.src != e.dst) {
        adjacency.entry(e.src).or_default().insert(e.dst);
        adjacency.entry(e.dst).or_default().insert(e.src);
    }
    let mut per_criterion = Vec::with_capacity(g.criteria.len());
    for &n in &g.criteria {
        let s_c = score_of(n);
        let s_v = adjacency
            .get(&n)
            .into_iter()
            .flatten()
            .map(|&m| score_of(m))
            .fold(0.0, f64::max);
        per_criterion.push(CriterionScore {
            function: g.function.clone(),
            node: n,
            score: aggregate(s_c, s_v, lambda)?,
        });
    }
    let score = per_criterion.iter().map(|c| c.score).fold(0.0, f64::max);
    Ok(UprScore {
        variable: g.variable.clone(),
        score,
        lambda,
        unreferenced: per_criterion.is_empty(),
        per_criterion,
    })
}

/// Merge the per-function scores of one variable (a global referenced from
/// several functions) by max.
pub fn combine(variable: VariableKey, lambda: f64, parts: Vec<UprScore>) -> UprScore {
    let per_criterion: Vec<CriterionScore> = parts.into_iter().flat_map(|p| p.per_criterion).collect();
    UprScore {
        variable,
        score: per_criterion.iter().map(|c| c.score).fold(0.0, f64::max),
        lambda,
        unreferenced: per_criterion.is_empty(),
        per_criterion,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub lambda: f64,
    pub threshold: f64,
    pub provider: String,
    pub profile: PromptProfile,
    pub flagged_statements: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub function: String,
    pub name: String,
    pub score: f64,
    pub candidate: bool,
    pub unreferenced: bool,
    pub per_criterion: Vec<CriterionScore>,
}

impl ReportEntry {
    pub fn key(&self) -> VariableKey {
        VariableKey::new(self.function.clone(), self.name.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UprReport {
    pub meta: ReportMeta,
    pub variables: Vec<ReportEntry>,
}

impl UprReport {
    pub fn candidates(&self) -> BTreeSet<VariableKey> {
        self.variables
            .iter()
            .filter(|v| v.candidate)
            .map(ReportEntry::key)
            .collect()
    }

    pub fn get(&self, key: &VariableKey) -> Option<&ReportEntry> {
        self.variables
            .iter()
            .find(|v| v.function == key.function && v.name == key.name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("function,name,score,candidate\n");
        for v in &self.variables {
            out.push_str(&format!("{},{},{:.6},{}\n", v.function, v.name, v.score, v.candidate));
        }
        out
    }
}

/// Sort by score (descending, ties by function then name) and mark every
/// score at or above `meta.threshold` as a candidate.
pub fn rank(scores: Vec<UprScore>, meta: ReportMeta) -> UprReport {
    let mut variables: Vec<ReportEntry> = scores
        .into_iter()
        .map(|s| ReportEntry {
            candidate: s.score >= meta.threshold,
            function: s.variable.function,
            name: s.variable.name,
            score: s.score,
            unreferenced: s.unreferenced,
            per_criterion: s.per_criterion,
        })
        .collect();
    variables.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.function.cmp(&b.function))
            .then_with(|| a.name.cmp(&b.name))
    });
    UprReport { meta, variables }
}
