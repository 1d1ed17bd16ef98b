//! Evaluation instruments: rating histogram, prompt-ablation recall and the
//! anonymization robustness study.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cfront::{anonymize::anonymize_units, RenameMap, SourceUnit, SyntaxError, VariableKey};
use crate::pdg::{DepEdge, FunctionPdg};
use crate::pipeline::{analyze, PipelineError};
use crate::rater::{PromptProfile, Provider, RateError, Rater, RatingCache, RatingMap};
use crate::scorer::{DomainError, UprReport};
use crate::slicer::StatementSet;

/// Ratings per integer value 0..=10 and the three coarse groups.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BucketCounts {
    pub counts: [u64; 11],
}

impl BucketCounts {
    pub fn from_counts(counts: [u64; 11]) -> Self {
        BucketCounts { counts }
    }

    /// Ratings 0 to 2.
    pub fn low(&self) -> u64 {
        self.counts[0..=2].iter().sum()
    }

    /// Ratings 3 to 7.
    pub fn mid(&self) -> u64 {
        self.counts[3..=7].iter().sum()
    }

    /// Ratings 8 to 10.
    pub fn high(&self) -> u64 {
        self.counts[8..=10].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Middle ratings rarest, low ratings most common.
    pub fn shape_holds(&self) -> bool {
        self.mid() < self.high() && self.high() < self.low()
    }

    pub fn to_json(&self) -> String {
        let v = serde_json::json!({
            "counts": self.counts,
            "low": self.low(),
            "mid": self.mid(),
            "high": self.high(),
        });
        serde_json::to_string_pretty(&v).expect("histogram serializes")
    }
}

pub fn histogram(ratings: &RatingMap) -> BucketCounts {
    let mut b = BucketCounts::default();
    for r in ratings.values() {
        b.counts[usize::from(r.value.min(10))] += 1;
    }
    b
}

/// Share of `confirmed` variables that the report marks as candidates.
pub fn ablation_recall(confirmed: &[VariableKey], report: &UprReport) -> Result<f64, DomainError> {
    if confirmed.is_empty() {
        return Err(DomainError("confirmed variable list is empty".into()));
    }
    let candidates = report.candidates();
    let hits = confirmed.iter().filter(|v| candidates.contains(v)).count();
    Ok(hits as f64 / confirmed.len() as f64)
}

/// Structural comparison and per-statement rating deltas between a corpus
/// and its anonymized copy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnonymizationStudy {
    pub seed: u64,
    pub statements_before: usize,
    pub statements_after: usize,
    pub cfg_edges_before: usize,
    pub cfg_edges_after: usize,
    /// Every function's PDG maps onto its anonymized twin under the rename.
    pub isomorphic: bool,
    /// Anonymized rating minus original rating, one per PDG node.
    pub deltas: Vec<i32>,
    pub mean_delta: f64,
    pub std_delta: f64,
}

fn rename_key(map: &RenameMap, k: &VariableKey) -> VariableKey {
    let ren = |s: &str| map.get(s).map_or_else(|| s.to_string(), str::to_string);
    let name = match k.name.strip_prefix('*') {
        Some(base) => format!("*{}", ren(base)),
        None => ren(&k.name),
    };
    VariableKey::new(ren(&k.function), name)
}

fn isomorphic_under(map: &RenameMap, a: &FunctionPdg, b: &FunctionPdg) -> bool {
    if a.nodes.len() != b.nodes.len() || a.nodes.iter().zip(&b.nodes).any(|(x, y)| x.kind != y.kind) {
        return false;
    }
    let renamed: std::collections::BTreeSet<DepEdge> = a
        .edges
        .iter()
        .map(|e| DepEdge {
            var: e.var.as_ref().map(|v| rename_key(map, v)),
            ..e.clone()
        })
        .collect();
    renamed == b.edges
}

fn rate_nodes(
    provider: &dyn Provider,
    profile: PromptProfile,
    pdgs: &[&FunctionPdg],
) -> Result<BTreeMap<String, u8>, RateError> {
    let mut set = StatementSet::default();
    for p in pdgs {
        for s in &p.nodes {
            set.insert(
                s.norm_text.clone(),
                crate::slicer::Origin {
                    function: p.function.clone(),
                    node: s.id,
                },
            );
        }
    }
    let cache = RatingCache::in_memory();
    let run = Rater::new(provider, profile, &cache).rate_all(&set, 4)?;
    Ok(run.ratings.into_iter().map(|(k, r)| (k, r.value)).collect())
}

#[derive(Debug, thiserror::Error)]
pub enum StudyError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Rate(#[from] RateError),
}

/// Anonymize `units`, re-analyze, and rate every statement of both versions
/// with `provider`.
pub fn anonymization_study(
    units: &[SourceUnit],
    seed: u64,
    rename_all: bool,
    provider: &dyn Provider,
    profile: PromptProfile,
) -> Result<AnonymizationStudy, StudyError> {
    let (anon_units, map) = anonymize_units(units, seed, rename_all)?;
    let before = analyze(units)?;
    let after = analyze(&anon_units)?;
    let count = |a: &crate::pipeline::Analysis| a.functions.iter().map(|f| f.lowered.statements.len()).sum::<usize>();
    let edges = |a: &crate::pipeline::Analysis| a.functions.iter().map(|f| f.lowered.cfg.edges.len()).sum::<usize>();
    let isomorphic = before.functions.len() == after.functions.len()
        && before
            .functions
            .iter()
            .zip(&after.functions)
            .all(|(x, y)| isomorphic_under(&map, &x.pdg, &y.pdg));

    let pdgs_before: Vec<&FunctionPdg> = before.functions.iter().map(|f| &f.pdg).collect();
    let pdgs_after: Vec<&FunctionPdg> = after.functions.iter().map(|f| &f.pdg).collect();
    let r_before = rate_nodes(provider, profile, &pdgs_before)?;
    let r_after = rate_nodes(provider, profile, &pdgs_after)?;
    let mut deltas = Vec::new();
    for (x, y) in pdgs_before.iter().zip(&pdgs_after) {
        for (s, t) in x.nodes.iter().zip(&y.nodes) {
            deltas.push(i32::from(r_after[&t.norm_text]) - i32::from(r_before[&s.norm_text]));
        }
    }
    let n = deltas.len().max(1) as f64;
    let mean = deltas.iter().map(|&d| f64::from(d)).sum::<f64>() / n;
    let var = deltas.iter().map(|&d| (f64::from(d) - mean).powi(2)).sum::<f64>() / n;
    Ok(AnonymizationStudy {
        seed,
        statements_before: count(&before),
        statements_after: count(&after),
        cfg_edges_before: edges(&before),
        cfg_edges_after: edges(&after),
        isomorphic,
        deltas,
        mean_delta: mean,
        std_delta: var.sqrt(),
    })
}
