#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use upr_audit::cfront::{StmtId, VariableKey};
use upr_audit::pdg::{DepEdge, DepKind};
use upr_audit::rater::provider::mock_rating;
use upr_audit::rater::{CacheKey, CacheRecord, PromptProfile};
use upr_audit::scorer::ScoredSubgraph;
use upr_audit::slicer::VariableSubgraph;

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

pub fn corpus_file(name: &str) -> PathBuf {
    corpus_dir().join(name)
}

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn key(s: &str) -> VariableKey {
    s.parse().unwrap()
}

/// The scoring rule spelled out literally: for each criterion node collect the scores of
/// nodes sharing an edge with it, take s_v as their max (0 when none),
/// aggregate (s_c + lambda * s_v) / (1 + lambda), and return the max over
/// criteria (0 when there are none).
pub fn brute_force_score(
    criteria: &[StmtId],
    edges: &[(StmtId, StmtId)],
    score: &dyn Fn(StmtId) -> f64,
    lambda: f64,
) -> f64 {
    let mut aggregated: Vec<f64> = Vec::new();
    for &n in criteria {
        let s_c = score(n);
        let mut neighbour_scores: Vec<f64> = Vec::new();
        for &(a, b) in edges {
            if a == n && b != n {
                neighbour_scores.push(score(b));
            } else if b == n && a != n {
                neighbour_scores.push(score(a));
            }
        }
        let mut s_v = 0.0;
        for s in neighbour_scores {
            if s > s_v {
                s_v = s;
            }
        }
        aggregated.push((s_c + lambda * s_v) / (1.0 + lambda));
    }
    let mut best = 0.0;
    for a in aggregated {
        if a > best {
            best = a;
        }
    }
    best
}

pub fn oracle_score(sg: &ScoredSubgraph, lambda: f64) -> f64 {
    let criteria: Vec<StmtId> = sg.subgraph.criteria.iter().copied().collect();
    let edges: Vec<(StmtId, StmtId)> = sg.subgraph.edges.iter().map(|e| (e.src, e.dst)).collect();
    let score = |n: StmtId| f64::from(*sg.node_scores.get(&n).unwrap_or(&0));
    brute_force_score(&criteria, &edges, &score, lambda)
}

/// A random dependence graph over at most 12 nodes, sliced 1-hop around a
/// random criterion set, with random node ratings.
pub fn random_scored_subgraph(rng: &mut ChaCha8Rng) -> ScoredSubgraph {
    let n = rng.gen_range(1..=12);
    let density = rng.gen_range(0.05..0.5);
    let mut all_edges = BTreeSet::new();
    for a in 0..n {
        for b in 0..n {
            if rng.gen_bool(density / 2.0) {
                let kind = if rng.gen_bool(0.5) {
                    DepKind::Control
                } else {
                    DepKind::Data
                };
                let var = (kind == DepKind::Data).then(|| VariableKey::new("f", "v"));
                all_edges.insert(DepEdge {
                    src: a,
                    dst: b,
                    kind,
                    var,
                });
            }
        }
    }
    let criteria: BTreeSet<StmtId> = (0..n).filter(|_| rng.gen_bool(0.3)).collect();
    let mut nodes = criteria.clone();
    for e in &all_edges {
        if criteria.contains(&e.src) {
            nodes.insert(e.dst);
        }
        if criteria.contains(&e.dst) {
            nodes.insert(e.src);
        }
    }
    let edges = all_edges
        .into_iter()
        .filter(|e| nodes.contains(&e.src) && nodes.contains(&e.dst))
        .collect();
    let node_scores = nodes.iter().map(|&id| (id, rng.gen_range(0..=10u8))).collect();
    ScoredSubgraph {
        subgraph: VariableSubgraph {
            variable: VariableKey::new("f", "v"),
            function: "f".into(),
            unreferenced: criteria.is_empty(),
            criteria,
            nodes,
            edges,
        },
        node_scores,
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One hundred identifiers for the keyword rule: every keyword, plural and
/// suffixed forms, letter-prefixed forms, and near misses.
pub const REGEX_TABLE: [&str; 100] = [
    "uid",
    "uids",
    "fluid",
    "guido",
    "passwd",
    "password",
    "token",
    "token_type",
    "key",
    "keyboard",
    "mykey",
    "my_key",
    "auth",
    "authenticate",
    "authorize",
    "author",
    "authority",
    "oauth",
    "auth_token",
    "login",
    "logins",
    "login_ok",
    "relogin",
    "admin",
    "admins",
    "admin_flag",
    "badmin",
    "banned",
    "banned_ip",
    "unbanned",
    "allowed",
    "allowed_users",
    "disallowed",
    "gid",
    "gids",
    "egid",
    "rgid",
    "getgid",
    "username",
    "usernames",
    "user_name",
    "permission",
    "permissions",
    "permission_mask",
    "nopermission",
    "chown",
    "chowned",
    "chown_ok",
    "fchown",
    "lchown",
    "passwds",
    "password_hash",
    "passwordless",
    "PASSWORD",
    "Password",
    "keys",
    "keyS",
    "keyX",
    "key2",
    "_key",
    "key_",
    "api_key",
    "apikey",
    "hotkey",
    "keychain",
    "monkey",
    "turkey",
    "uidX",
    "uid_t",
    "uid2",
    "file_uid",
    "new_uid",
    "euid",
    "ruid",
    "suid",
    "Uid",
    "UID",
    "uidlist",
    "fuid",
    "x_uid_y",
    "loginname",
    "login_name",
    "loginS",
    "admin2",
    "2admin",
    "adminS",
    "authS",
    "authz",
    "auths",
    "auth_",
    "cleartxt_passwd",
    "cleartxt_passwd_len",
    "passwd_len",
    "pwd",
    "pw",
    "secret",
    "state",
    "s",
    "i",
    "n",
];

/// Ratings that get richer with the profile: full keeps the mock value,
/// partial downgrades privilege statements outside the file-access and
/// secret goals to 7, none downgrades every remaining 9 except password
/// handling to 8.
pub fn profile_rating(stmt: &str, profile: PromptProfile) -> u8 {
    let full = mock_rating(stmt);
    if full < 9 {
        return full;
    }
    let lower = stmt.to_ascii_lowercase();
    let words: Vec<&str> = lower
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|w| !w.is_empty())
        .collect();
    let has = |set: &[&str]| words.iter().any(|w| set.contains(w));
    match profile {
        PromptProfile::Full => full,
        PromptProfile::Partial if has(&["chown", "passwd", "password", "key", "token"]) => 9,
        PromptProfile::Partial => 7,
        PromptProfile::None if has(&["passwd", "password"]) => 9,
        PromptProfile::None => 8,
    }
}

/// Cache-format recording of `profile_rating` for every statement and profile.
pub fn ablation_recording<'a>(stmts: impl IntoIterator<Item = &'a str>) -> String {
    let mut out = String::new();
    for s in stmts {
        for p in PromptProfile::ALL {
            let rec = CacheRecord {
                key: CacheKey::new(s, "replay", p),
                stmt: s.to_string(),
                value: profile_rating(s, p),
                flagged: false,
                timestamp: 0,
            };
            out.push_str(&serde_json::to_string(&rec).unwrap());
            out.push('\n');
        }
    }
    out
}

pub fn corpus_analysis() -> upr_audit::pipeline::Analysis {
    let units = upr_audit::pipeline::load_sources(&[corpus_dir()]).unwrap();
    upr_audit::pipeline::analyze(&units).unwrap()
}

fn blessing() -> bool {
    std::env::var_os("UPR_BLESS").is_some()
}

/// Compare `actual` with the fixture at `rel`, or rewrite it under UPR_BLESS.
pub fn check_fixture(rel: &str, actual: &str) -> Result<(), String> {
    let path = fixtures_dir().join(rel);
    if blessing() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return Ok(());
    }
    let expected = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected == actual {
        Ok(())
    } else {
        Err(format!("{rel} differs from fixture"))
    }
}

/// Every corpus PDG against `fixtures/pdg/<stem>.<fn>.json`; returns how
/// many were compared.
pub fn check_pdg_goldens(analysis: &upr_audit::pipeline::Analysis) -> Result<usize, String> {
    let mut errors = Vec::new();
    for fa in &analysis.functions {
        let rel = format!("pdg/{}.{}.json", fa.stem, fa.lowered.name);
        if let Err(e) = check_fixture(&rel, &(fa.pdg.to_json() + "\n")) {
            errors.push(e);
        }
    }
    let on_disk = std::fs::read_dir(fixtures_dir().join("pdg"))
        .map(|d| d.count())
        .unwrap_or(0);
    if on_disk != analysis.functions.len() {
        errors.push(format!(
            "{on_disk} golden files for {} functions",
            analysis.functions.len()
        ));
    }
    if errors.is_empty() {
        Ok(analysis.functions.len())
    } else {
        Err(errors.join("; "))
    }
}

pub fn mock_corpus_report(analysis: &upr_audit::pipeline::Analysis) -> upr_audit::scorer::UprReport {
    use upr_audit::rater::{MockProvider, Rater, RatingCache};
    let cfg = upr_audit::pipeline::RunConfig::default();
    let cache = RatingCache::in_memory();
    let provider = MockProvider::new();
    let run = Rater::new(&provider, PromptProfile::Full, &cache)
        .rate_all(&analysis.statement_set(), 4)
        .unwrap();
    upr_audit::pipeline::build_report(&cfg, analysis, &run.ratings, "mock").unwrap()
}

pub fn candidates_text(report: &upr_audit::scorer::UprReport) -> String {
    report.candidates().iter().map(|k| format!("{k}\n")).collect()
}

pub fn corpus_findings(analysis: &upr_audit::pipeline::Analysis) -> Vec<upr_audit::baseline::Finding> {
    use upr_audit::baseline::{match_syntax, run_taint};
    let mut out = Vec::new();
    for fa in &analysis.functions {
        let file = fa.file.display().to_string();
        out.extend(match_syntax(&file, std::slice::from_ref(&fa.lowered)));
        out.extend(run_taint(&file, &fa.lowered, &[]));
    }
    out.sort();
    out
}

pub fn partition_text(p: &upr_audit::baseline::AbcPartition) -> String {
    let set = |s: &BTreeSet<VariableKey>| s.iter().map(|k| k.to_string()).collect::<Vec<_>>();
    let v = serde_json::json!({ "a": set(&p.set_a), "b": set(&p.set_b), "c": set(&p.set_c) });
    serde_json::to_string_pretty(&v).unwrap() + "\n"
}
