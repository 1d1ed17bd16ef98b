//! End-to-end orchestration: sources to PDGs, subgraphs, ratings and the
//! ranked report, with every intermediate artifact written to disk.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cfront::{extract_variables, lower_to_statements, parse_unit, LoweredFunction, SourceUnit, VariableKey};
use crate::pdg::{build_pdg, FunctionPdg};
use crate::rater::cache::read_records;
use crate::rater::provider::API_KEY_ENV;
use crate::rater::{
    CacheError, LlmProvider, MockProvider, PromptProfile, Provider, RateError, Rater, RatingCache, RatingMap,
    RatingRun, ReplayProvider, Transcript,
};
use crate::scorer::{combine, rank, score_variable, DomainError, ReportMeta, ScoredSubgraph, UprReport, UprScore};
use crate::slicer::{collect_statements, extract_subgraph, StatementSet, VariableSubgraph};

pub const DEFAULT_LAMBDA: f64 = 0.5;
pub const DEFAULT_THRESHOLD: f64 = 9.0;
pub const DEFAULT_MAX_INFLIGHT: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Llm,
    #[default]
    Mock,
    Replay,
}

impl std::str::FromStr for ProviderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "llm" => Ok(ProviderKind::Llm),
            "mock" => Ok(ProviderKind::Mock),
            "replay" => Ok(ProviderKind::Replay),
            _ => Err(format!("unknown provider `{s}` (expected llm, mock or replay)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Endpoint {
    pub base_url: String,
    pub model: String,
}

impl Default for Endpoint {
    fn default() -> Self {
        Endpoint {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4".into(),
        }
    }
}

/// Run settings. Loaded from a JSON file and then overridden by flags.
/// Credentials are never part of it; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub sources: Vec<PathBuf>,
    pub provider: ProviderKind,
    pub profile: PromptProfile,
    pub lambda: f64,
    pub threshold: f64,
    /// Defaults to `<out_dir>/ratings.jsonl`.
    pub cache_path: Option<PathBuf>,
    /// Recorded ratings for the replay provider.
    pub replay_path: Option<PathBuf>,
    pub endpoint: Endpoint,
    pub max_inflight: usize,
    pub extra_sinks: Vec<String>,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            sources: Vec::new(),
            provider: ProviderKind::Mock,
            profile: PromptProfile::Full,
            lambda: DEFAULT_LAMBDA,
            threshold: DEFAULT_THRESHOLD,
            cache_path: None,
            replay_path: None,
            endpoint: Endpoint::default(),
            max_inflight: DEFAULT_MAX_INFLIGHT,
            extra_sinks: Vec::new(),
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(PipelineError::Config(format!("lambda {} outside [0, 1]", self.lambda)));
        }
        if !(0.0..=10.0).contains(&self.threshold) {
            return Err(PipelineError::Config(format!(
                "threshold {} outside [0, 10]",
                self.threshold
            )));
        }
        if self.max_inflight == 0 {
            return Err(PipelineError::Config("max_inflight must be at least 1".into()));
        }
        if self.provider == ProviderKind::Replay && self.replay_path.is_none() {
            return Err(PipelineError::Config(
                "the replay provider needs a recording (replay_path)".into(),
            ));
        }
        Ok(())
    }

    pub fn cache_path(&self) -> PathBuf {
        self.cache_path
            .clone()
            .unwrap_or_else(|| self.out_dir.join("ratings.jsonl"))
    }

    pub fn provider_id(&self) -> &'static str {
        match self.provider {
            ProviderKind::Llm => "llm",
            ProviderKind::Mock => "mock",
            ProviderKind::Replay => "replay",
        }
    }

    pub fn make_provider(&self) -> Result<Box<dyn Provider>, PipelineError> {
        Ok(match self.provider {
            ProviderKind::Mock => Box::new(MockProvider::new()),
            ProviderKind::Llm => Box::new(
                LlmProvider::from_env(&self.endpoint.base_url, &self.endpoint.model)
                    .ok_or_else(|| PipelineError::Config(format!("the llm provider needs {API_KEY_ENV} to be set")))?,
            ),
            ProviderKind::Replay => {
                let path = self.replay_path.as_ref().ok_or_else(|| {
                    PipelineError::Config("the replay provider needs a recording (replay_path)".into())
                })?;
                Box::new(ReplayProvider::from_file(path)?)
            }
        })
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("analysis: {0}")]
    Analysis(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error(transparent)]
    Rate(RateError),
}

impl From<RateError> for PipelineError {
    fn from(e: RateError) -> Self {
        match e {
            RateError::Cache(c) => PipelineError::Cache(c),
            other => PipelineError::Rate(other),
        }
    }
}

impl PipelineError {
    /// 1 for usage or configuration, 2 for analysis and I/O, 3 when the
    /// rating provider failed beyond tolerance.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Domain(_) => 1,
            PipelineError::Io { .. } | PipelineError::Analysis(_) | PipelineError::Cache(_) => 2,
            PipelineError::Rate(_) => 3,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, contents).map_err(io_err(path))
}

/// Read source files; directories contribute their `.c` files, recursively,
/// in sorted order.
pub fn load_sources(paths: &[PathBuf]) -> Result<Vec<SourceUnit>, PipelineError> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), PipelineError> {
        let mut entries: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(io_err(dir))?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()
            .map_err(io_err(dir))?;
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(&p, out)?;
            } else if p.extension().is_some_and(|e| e == "c") {
                out.push(p);
            }
        }
        Ok(())
    }
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            walk(p, &mut files)?;
        } else {
            files.push(p.clone());
        }
    }
    files.iter().map(|f| SourceUnit::read(f).map_err(io_err(f))).collect()
}

#[derive(Debug, Clone)]
pub struct FunctionAnalysis {
    pub file: PathBuf,
    pub stem: String,
    pub lowered: LoweredFunction,
    pub pdg: FunctionPdg,
}

/// Everything computed before rating.
#[derive(Debug, Clone, Default)]
pub struct Analysis {
    pub functions: Vec<FunctionAnalysis>,
    /// Skipped functions: syntax and lowering errors, with file context.
    pub diagnostics: Vec<String>,
    /// Every variable that gets a report entry.
    pub variables: BTreeSet<VariableKey>,
    /// One subgraph per (variable, function that declares or references it).
    pub subgraphs: Vec<(usize, VariableSubgraph)>,
}

pub fn analyze(units: &[SourceUnit]) -> Result<Analysis, PipelineError> {
    let mut a = Analysis::default();
    let mut seen: BTreeMap<String, PathBuf> = BTreeMap::new();
    for unit in units {
        let parsed = parse_unit(unit);
        for e in &parsed.errors {
            let msg = format!("{}:{e}", unit.path.display());
            log::warn!("skipping: {msg}");
            a.diagnostics.push(msg);
        }
        a.variables.extend(parsed.globals.iter().map(VariableKey::global));
        for f in &parsed.functions {
            if let Some(prev) = seen.insert(f.name.name.clone(), unit.path.clone()) {
                return Err(PipelineError::Analysis(format!(
                    "function `{}` defined in both {} and {}",
                    f.name.name,
                    prev.display(),
                    unit.path.display()
                )));
            }
            match lower_to_statements(unit, &parsed, f) {
                Ok(lowered) => {
                    let pdg = build_pdg(&lowered);
                    a.functions.push(FunctionAnalysis {
                        file: unit.path.clone(),
                        stem: unit.stem(),
                        lowered,
                        pdg,
                    });
                }
                Err(e) => {
                    let msg = format!("{}: {e}", unit.path.display());
                    log::warn!("skipping: {msg}");
                    a.diagnostics.push(msg);
                }
            }
        }
    }
    for (i, fa) in a.functions.iter().enumerate() {
        let vars: BTreeSet<VariableKey> = extract_variables(&fa.lowered)
            .into_iter()
            .chain(fa.lowered.declared.iter().cloned())
            .collect();
        for v in vars {
            a.subgraphs.push((i, extract_subgraph(&fa.pdg, &v)));
            a.variables.insert(v);
        }
    }
    Ok(a)
}

impl Analysis {
    pub fn statement_set(&self) -> StatementSet {
        collect_statements(self.subgraphs.iter().map(|(i, sg)| (&self.functions[*i].pdg, sg)))
    }

    pub fn function(&self, name: &str) -> Option<&FunctionAnalysis> {
        self.functions.iter().find(|f| f.lowered.name == name)
    }

    /// `pdg/<stem>.<fn>.json`, `subgraphs/<stem>.<fn>.json` and
    /// `statements.json` under `out`.
    pub fn write_artifacts(&self, out: &Path) -> Result<(), PipelineError> {
        for (i, fa) in self.functions.iter().enumerate() {
            let name = format!("{}.{}.json", fa.stem, fa.lowered.name);
            write_file(&out.join("pdg").join(&name), &(fa.pdg.to_json() + "\n"))?;
            let sgs: Vec<&VariableSubgraph> = self.subgraphs.iter().filter(|(j, _)| *j == i).map(|(_, s)| s).collect();
            let json = serde_json::to_string_pretty(&sgs).expect("subgraphs serialize");
            write_file(&out.join("subgraphs").join(&name), &(json + "\n"))?;
        }
        write_file(&out.join("statements.json"), &(self.statement_set().to_json() + "\n"))
    }

    /// Scores for every variable; globals take the max over the
    /// functions that reference them.
    pub fn score(&self, ratings: &RatingMap, lambda: f64) -> Result<Vec<UprScore>, DomainError> {
        let mut parts: BTreeMap<&VariableKey, Vec<UprScore>> = BTreeMap::new();
        for (i, sg) in &self.subgraphs {
            let scored = ScoredSubgraph::annotate(&self.functions[*i].pdg, sg.clone(), ratings);
            parts
                .entry(&sg.variable)
                .or_default()
                .push(score_variable(&scored, lambda)?);
        }
        Ok(self
            .variables
            .iter()
            .map(|v| combine(v.clone(), lambda, parts.remove(v).unwrap_or_default()))
            .collect())
    }
}

/// Ratings from a cache-format file, restricted to one provider and
/// profile. Later records win.
pub fn load_ratings(path: &Path, provider: &str, profile: PromptProfile) -> Result<RatingMap, PipelineError> {
    let mut map = RatingMap::new();
    for rec in read_records(path)? {
        if rec.key.provider == provider && rec.key.profile == profile {
            let r = rec.to_rating();
            map.insert(r.statement.clone(), r);
        }
    }
    Ok(map)
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub report: UprReport,
    pub analysis: Analysis,
    pub rating: RatingRun,
}

/// Rate the statement set of `analysis`, appending new ratings to the cache
/// and every prompt to `<out>/transcript.jsonl`.
pub fn rate_statements(
    cfg: &RunConfig,
    analysis: &Analysis,
    provider: &dyn Provider,
) -> Result<RatingRun, PipelineError> {
    fs::create_dir_all(&cfg.out_dir).map_err(io_err(&cfg.out_dir))?;
    let cache = RatingCache::open(cfg.cache_path())?;
    let transcript_path = cfg.out_dir.join("transcript.jsonl");
    let transcript = Transcript::open(&transcript_path).map_err(io_err(&transcript_path))?;
    let set = analysis.statement_set();
    let run = Rater::new(provider, cfg.profile, &cache)
        .with_transcript(&transcript)
        .rate_all(&set, cfg.max_inflight)?;
    log::info!(
        "{} statements: {} rated, {} from cache, {} flagged",
        set.len(),
        run.rated,
        run.cache_hits,
        run.flagged
    );
    Ok(run)
}

pub fn build_report(
    cfg: &RunConfig,
    analysis: &Analysis,
    ratings: &RatingMap,
    provider_id: &str,
) -> Result<UprReport, PipelineError> {
    let scores = analysis.score(ratings, cfg.lambda)?;
    Ok(rank(
        scores,
        ReportMeta {
            lambda: cfg.lambda,
            threshold: cfg.threshold,
            provider: provider_id.to_string(),
            profile: cfg.profile,
            flagged_statements: ratings.values().filter(|r| r.flagged).count(),
        },
    ))
}

pub fn write_report(out: &Path, report: &UprReport) -> Result<(), PipelineError> {
    write_file(&out.join("report.json"), &report.to_json())?;
    write_file(&out.join("report.csv"), &report.to_csv())
}

/// All six stages with an explicit provider.
pub fn run_pipeline_with(cfg: &RunConfig, provider: &dyn Provider) -> Result<PipelineOutput, PipelineError> {
    cfg.validate()?;
    let units = load_sources(&cfg.sources)?;
    let analysis = analyze(&units)?;
    analysis.write_artifacts(&cfg.out_dir)?;
    let rating = rate_statements(cfg, &analysis, provider)?;
    let report = build_report(cfg, &analysis, &rating.ratings, provider.id())?;
    write_report(&cfg.out_dir, &report)?;
    Ok(PipelineOutput {
        report,
        analysis,
        rating,
    })
}

pub fn run_pipeline(cfg: &RunConfig) -> Result<PipelineOutput, PipelineError> {
    cfg.validate()?;
    let provider = cfg.make_provider()?;
    run_pipeline_with(cfg, provider.as_ref())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(dir: &Path, sources: Vec<PathBuf>) -> RunConfig {
        RunConfig {
            sources,
            out_dir: dir.join("out"),
            ..RunConfig::default()
        }
    }

    #[test]
    fn empty_sources_empty_report() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_pipeline(&cfg(dir.path(), vec![])).unwrap();
        assert!(out.report.variables.is_empty());
        assert!(dir.path().join("out/report.json").exists());
        assert!(dir.path().join("out/statements.json").exists());
    }

    #[test]
    fn artifacts_and_globals() {
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("g.c");
        fs::write(
            &src,
            "int current_uid;\nint spare;\nvoid set(int u) { current_uid = u; }\nint get(void) { int unused; return current_uid; }\n",
        )
        .unwrap();
        let out = run_pipeline(&cfg(dir.path(), vec![dir.path().to_path_buf()])).unwrap();
        let r = &out.report;
        let g = r.get(&VariableKey::global("current_uid")).unwrap();
        // isolated criterion nodes: (9 + 0.5 * 0) / 1.5
        assert_eq!(g.score, 6.0);
        assert!(!g.candidate);
        assert_eq!(g.per_criterion.len(), 2);
        assert!(r.get(&VariableKey::global("spare")).unwrap().unreferenced);
        assert!(r.get(&VariableKey::new("get", "unused")).unwrap().unreferenced);
        for f in [
            "pdg/g.set.json",
            "pdg/g.get.json",
            "subgraphs/g.get.json",
            "ratings.jsonl",
            "report.csv",
            "transcript.jsonl",
        ] {
            assert!(dir.path().join("out").join(f).exists(), "{f}");
        }
        let keys: Vec<_> = r.variables.iter().map(ReportEntry::key).collect();
        let unique: BTreeSet<_> = keys.iter().cloned().collect();
        assert_eq!(keys.len(), unique.len());
    }

    use crate::scorer::ReportEntry;

    #[test]
    fn duplicate_functions_rejected() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.c"), "void f(void) { }").unwrap();
        fs::write(dir.path().join("b.c"), "void f(void) { }").unwrap();
        let err = run_pipeline(&cfg(dir.path(), vec![dir.path().to_path_buf()])).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn config_validation() {
        let c = RunConfig {
            lambda: 1.5,
            ..RunConfig::default()
        };
        assert_eq!(c.validate().unwrap_err().exit_code(), 1);
        let c = RunConfig {
            provider: ProviderKind::Replay,
            ..RunConfig::default()
        };
        assert!(c.validate().is_err());
        let c = RunConfig {
            max_inflight: 0,
            ..RunConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_rejects_secrets() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        fs::write(&p, r#"{"lambda": 0.3, "api_key": "sk-123"}"#).unwrap();
        assert!(RunConfig::from_json_file(&p).is_err());
        fs::write(
            &p,
            r#"{"lambda": 0.3, "profile": "none", "endpoint": {"base_url": "http://x", "model": "m"}}"#,
        )
        .unwrap();
        let c = RunConfig::from_json_file(&p).unwrap();
        assert_eq!(
            (c.lambda, c.profile, c.threshold),
            (0.3, PromptProfile::None, DEFAULT_THRESHOLD)
        );
    }

    #[test]
    fn unreachable_provider_exit_code() {
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("a.c");
        fs::write(&src, "void f(int a) { int b = a; g(b); }").unwrap();
        let rec = dir.path().join("rec.jsonl");
        fs::write(&rec, "").unwrap();
        let c = RunConfig {
            provider: ProviderKind::Replay,
            replay_path: Some(rec),
            ..cfg(dir.path(), vec![src])
        };
        assert_eq!(run_pipeline(&c).unwrap_err().exit_code(), 3);
    }
}
