//! Heuristic comparison method: a keyword rule over branch conditions, an
//! input-to-setuid taint rule, and the three-way overlap with scored
//! candidates.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::cfront::lower::Construct;
use crate::cfront::{LoweredFunction, StmtId, StmtKind, VariableKey};
use crate::pdg::{data_dependence, DepKind};

/// The keyword rule, as written.
pub const SYNTAX_PATTERN: &str = r".*(?<![A-Za-z])(auth|authenticate|login|admin|authorize|banned|allowed|uid|gid|username|permission|chown|key|passwd|password)(?![A-RT-Za-rt-z]).*";

pub const SYNTAX_KEYWORDS: &[&str] = &[
    "auth",
    "authenticate",
    "login",
    "admin",
    "authorize",
    "banned",
    "allowed",
    "uid",
    "gid",
    "username",
    "permission",
    "chown",
    "key",
    "passwd",
    "password",
];

/// Callee names matched by the source alternation.
pub const TAINT_SOURCES: &[&str] = &["scanf", "gets", "fscanf", "fgetc", "fgets", "getchar", "fread"];

pub const TAINT_SINKS: &[&str] = &["setuid", "seteuid"];

/// [`SYNTAX_PATTERN`] evaluated on one identifier: some keyword is not
/// preceded by an ASCII letter and not followed by a letter other than `s`
/// or `S`. Returns the first such keyword by position.
pub fn syntax_keyword(name: &str) -> Option<&'static str> {
    // `.` in the pattern does not cross newlines
    if name.contains('\n') {
        return None;
    }
    let bytes = name.as_bytes();
    for i in 0..bytes.len() {
        if i > 0 && bytes[i - 1].is_ascii_alphabetic() {
            continue;
        }
        for kw in SYNTAX_KEYWORDS {
            if !bytes[i..].starts_with(kw.as_bytes()) {
                continue;
            }
            match bytes.get(i + kw.len()) {
                Some(&c) if c.is_ascii_alphabetic() && c != b's' && c != b'S' => {}
                _ => return Some(kw),
            }
        }
    }
    None
}

pub fn syntax_matches(name: &str) -> bool {
    syntax_keyword(name).is_some()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Syntax,
    Taint,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Detail {
    Keyword(String),
    /// Statement ids from the source call to the sink call.
    Path(Vec<StmtId>),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Finding {
    pub rule: Rule,
    pub variable: VariableKey,
    pub file: String,
    pub line: u32,
    pub detail: Detail,
}

/// Keyword-named variables occurring in `if` or `switch` conditions.
pub fn match_syntax(file: &str, fns: &[LoweredFunction]) -> Vec<Finding> {
    let mut out = BTreeSet::new();
    for f in fns {
        for s in &f.statements {
            if s.kind != StmtKind::Condition || !matches!(s.construct, Some(Construct::If | Construct::Switch)) {
                continue;
            }
            for occ in &s.occurrences {
                if let Some(kw) = syntax_keyword(&occ.key.name) {
                    out.insert(Finding {
                        rule: Rule::Syntax,
                        variable: occ.key.clone(),
                        file: file.to_string(),
                        line: occ.line,
                        detail: Detail::Keyword(kw.to_string()),
                    });
                }
            }
        }
    }
    out.into_iter().collect()
}

/// Intraprocedural taint from input calls to privilege-changing calls.
///
/// Variables defined by a source statement are tainted, including plain
/// buffer arguments of the source call (`fgets(buf, ...)`), which count as
/// weak definitions. Taint follows data edges statement to statement; a
/// sink argument is reported when a tainted definition of it reaches the
/// sink, with the shortest source-to-sink path.
pub fn run_taint(file: &str, f: &LoweredFunction, extra_sinks: &[String]) -> Vec<Finding> {
    let is_sink = |callee: &str| TAINT_SINKS.contains(&callee) || extra_sinks.iter().any(|s| s == callee);
    let mut stmts = f.statements.clone();
    let mut sources = Vec::new();
    for s in &mut stmts {
        let src_args: Vec<VariableKey> = s
            .calls
            .iter()
            .filter(|c| TAINT_SOURCES.contains(&c.callee.as_str()))
            .flat_map(|c| c.arg_vars.iter().cloned())
            .collect();
        if s.calls.iter().any(|c| TAINT_SOURCES.contains(&c.callee.as_str())) {
            s.defs.extend(src_args);
            sources.push(s.id);
        }
    }
    let edges: Vec<_> = data_dependence(&f.cfg, &stmts)
        .into_iter()
        .filter(|e| e.kind == DepKind::Data)
        .collect();

    let mut dist: BTreeMap<StmtId, usize> = BTreeMap::new();
    let mut parent: BTreeMap<StmtId, StmtId> = BTreeMap::new();
    let mut queue = VecDeque::new();
    for &s in &sources {
        dist.insert(s, 0);
        queue.push_back(s);
    }
    while let Some(n) = queue.pop_front() {
        for e in edges.iter().filter(|e| e.src == n) {
            if !dist.contains_key(&e.dst) {
                dist.insert(e.dst, dist[&n] + 1);
                parent.insert(e.dst, n);
                queue.push_back(e.dst);
            }
        }
    }
    let path_to = |mut n: StmtId| {
        let mut p = vec![n];
        while let Some(&up) = parent.get(&n) {
            p.push(up);
            n = up;
        }
        p.reverse();
        p
    };

    let mut out = Vec::new();
    for s in &stmts {
        for call in s.calls.iter().filter(|c| is_sink(&c.callee)) {
            for v in &call.arg_vars {
                let best = edges
                    .iter()
                    .filter(|e| e.dst == s.id && e.var.as_ref() == Some(v) && e.src != s.id)
                    .filter_map(|e| dist.get(&e.src).map(|d| (*d, e.src)))
                    .min();
                if let Some((_, from)) = best {
                    let mut path = path_to(from);
                    path.push(s.id);
                    out.push(Finding {
                        rule: Rule::Taint,
                        variable: v.clone(),
                        file: file.to_string(),
                        line: s.span.0,
                        detail: Detail::Path(path),
                    });
                }
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Three-way split of positives: heuristic only, score only, both.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AbcPartition {
    pub set_a: BTreeSet<VariableKey>,
    pub set_b: BTreeSet<VariableKey>,
    pub set_c: BTreeSet<VariableKey>,
}

impl AbcPartition {
    pub fn counts(&self) -> (usize, usize, usize) {
        (self.set_a.len(), self.set_b.len(), self.set_c.len())
    }

    pub fn summary(&self) -> String {
        let (a, b, c) = self.counts();
        format!("set A (heuristic only): {a}, set B (score only): {b}, set C (both): {c}")
    }
}

pub fn partition(score_candidates: &BTreeSet<VariableKey>, findings: &[Finding]) -> AbcPartition {
    let heuristic: BTreeSet<VariableKey> = findings.iter().map(|f| f.variable.clone()).collect();
    AbcPartition {
        set_a: heuristic.difference(score_candidates).cloned().collect(),
        set_b: score_candidates.difference(&heuristic).cloned().collect(),
        set_c: heuristic.intersection(score_candidates).cloned().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfront::{lower_to_statements, parse_unit, SourceUnit};
    use proptest::prelude::*;

    fn lower(src: &str) -> Vec<LoweredFunction> {
        let unit = SourceUnit::new("t.c", src);
        let parsed = parse_unit(&unit);
        assert!(parsed.errors.is_empty(), "{:?}", parsed.errors);
        parsed
            .functions
            .iter()
            .map(|f| lower_to_statements(&unit, &parsed, f).unwrap())
            .collect()
    }

    #[test]
    fn keyword_table() {
        for (name, hit) in [
            ("uid", true),
            ("uids", true),
            ("fluid", false),
            ("guido", false),
            ("file_uid", true),
            ("passwd", true),
            ("token_type", false),
            ("key", true),
            ("keyboard", false),
            ("mykey", false),
            ("my_key", true),
            ("keyS", true),
            ("UID", false),
            ("uid2", true),
            ("", false),
        ] {
            assert_eq!(syntax_matches(name), hit, "{name}");
        }
        let re = fancy_regex::Regex::new(&format!("^(?:{SYNTAX_PATTERN})$")).unwrap();
        assert!(re.is_match("uids").unwrap());
    }

    proptest! {
        #[test]
        fn agrees_with_regex_engine(name in "[a-zA-Z_0-9]{0,12}|(ui|gi|ke|pass|log|au)[a-zA-Z_]{0,4}") {
            let re = fancy_regex::Regex::new(&format!("^(?:{SYNTAX_PATTERN})$")).unwrap();
            prop_assert_eq!(syntax_matches(&name), re.is_match(&name).unwrap());
        }

        #[test]
        fn partition_is_a_partition(
            a in proptest::collection::btree_set(0u8..20, 0..12),
            b in proptest::collection::btree_set(0u8..20, 0..12),
        ) {
            let key = |i: &u8| VariableKey::new("f", format!("v{i}"));
            let cands: BTreeSet<_> = a.iter().map(key).collect();
            let findings: Vec<_> = b.iter().map(|i| Finding {
                rule: Rule::Syntax,
                variable: key(i),
                file: "t.c".into(),
                line: 1,
                detail: Detail::Keyword("uid".into()),
            }).collect();
            let p = partition(&cands, &findings);
            prop_assert!(p.set_a.is_disjoint(&p.set_b) && p.set_a.is_disjoint(&p.set_c) && p.set_b.is_disjoint(&p.set_c));
            let union: BTreeSet<_> = p.set_a.iter().chain(&p.set_b).chain(&p.set_c).cloned().collect();
            let all: BTreeSet<_> = a.iter().chain(&b).map(key).collect();
            prop_assert_eq!(union, all);
        }
    }

    #[test]
    fn syntax_needs_branch_context() {
        let fns = lower("void f(int uid, int fluid) { int password = 0; if (uid == 0) g(); if (fluid > 3) g(); password = uid; while (uid) uid--; switch (password) { default: g(); } }");
        let found: Vec<_> = match_syntax("t.c", &fns).into_iter().map(|f| f.variable.name).collect();
        assert_eq!(found, vec!["password", "uid"]);
    }

    #[test]
    fn scanf_to_setuid() {
        let fns = lower("void f(void) { int u; scanf(\"%d\", &u); setuid(u); }");
        let found = run_taint("t.c", &fns[0], &[]);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].variable, VariableKey::new("f", "u"));
        assert_eq!(found[0].detail, Detail::Path(vec![0, 1]));
    }

    #[test]
    fn no_sink_no_finding() {
        let fns = lower("void f(void) { int u; scanf(\"%d\", &u); printf(\"%d\", u); }");
        assert!(run_taint("t.c", &fns[0], &[]).is_empty());
        assert_eq!(run_taint("t.c", &fns[0], &["printf".to_string()]).len(), 1);
    }

    #[test]
    fn two_step_propagation() {
        let fns = lower("void f(void) { char buf[16]; int n; fgets(buf, 16, stdin); n = atoi(buf); seteuid(n); }");
        let found = run_taint("t.c", &fns[0], &[]);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].variable, VariableKey::new("f", "n"));
        assert_eq!(found[0].detail, Detail::Path(vec![0, 1, 2]));
    }

    #[test]
    fn killed_taint_does_not_reach() {
        let fns = lower("void f(void) { int u; scanf(\"%d\", &u); u = 0; setuid(u); }");
        assert!(run_taint("t.c", &fns[0], &[]).is_empty());
    }

    #[test]
    fn substring_callees_are_not_sources() {
        let fns = lower("void f(void) { int u; u = my_gets(); setuid(u); }");
        assert!(run_taint("t.c", &fns[0], &[]).is_empty());
    }
}
