//! Consistent identifier renaming, used to check how much ratings depend on
//! recognizable names.

use std::collections::{BTreeMap, BTreeSet};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lexer::{is_keyword, tokenize, TokenKind};
use super::{parse_unit, SourceUnit, SyntaxError};

/// Library names that keep their spelling unless `rename_all` is set. The
/// list covers the baseline's taint sources and sinks plus common libc
/// calls whose names carry meaning a rater may rely on.
pub const KEEP_NAMES: &[&str] = &[
    "main", "scanf", "gets", "fscanf", "fgetc", "fgets", "getchar", "fread", "setuid", "seteuid", "setgid", "setegid",
    "getuid", "geteuid", "getgid", "getegid", "chown", "fchown", "lchown", "chmod", "printf", "fprintf", "sprintf",
    "snprintf", "puts", "malloc", "calloc", "realloc", "free", "strlen", "strcmp", "strncmp", "strcpy", "strncpy",
    "strcat", "strdup", "memcpy", "memset", "memcmp", "open", "close", "read", "write", "fopen", "fclose", "access",
    "stat", "getpwnam", "getpwuid", "getspnam", "crypt", "atoi", "atol", "strtol", "exit", "abort", "assert", "errno",
    "stdin", "stdout", "stderr", "size_t", "uid_t", "gid_t", "FILE",
];

/// Injective mapping from original to fresh identifiers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct RenameMap {
    pub pairs: BTreeMap<String, String>,
    pub seed: u64,
}

impl RenameMap {
    /// The `{original: fresh}` object written next to anonymized sources.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.pairs).expect("string map serializes")
    }

    pub fn get(&self, original: &str) -> Option<&str> {
        self.pairs.get(original).map(String::as_str)
    }
}

/// Rename every user-defined identifier of `unit`.
pub fn anonymize(unit: &SourceUnit, seed: u64, rename_all: bool) -> Result<(SourceUnit, RenameMap), SyntaxError> {
    let (mut out, map) = anonymize_units(std::slice::from_ref(unit), seed, rename_all)?;
    Ok((out.remove(0), map))
}

/// Rename consistently across several files that form one program.
pub fn anonymize_units(
    units: &[SourceUnit],
    seed: u64,
    rename_all: bool,
) -> Result<(Vec<SourceUnit>, RenameMap), SyntaxError> {
    let mut defined = BTreeSet::new();
    for u in units {
        let parsed = parse_unit(u);
        if let Some(e) = parsed.errors.into_iter().next() {
            return Err(e);
        }
        defined.extend(parsed.defined_names);
    }

    let mut existing = BTreeSet::new();
    let mut order = Vec::new();
    for u in units {
        for t in tokenize(&u.text) {
            if t.kind != TokenKind::Ident {
                continue;
            }
            let name = t.text(&u.text);
            if existing.insert(name.to_string()) {
                order.push(name.to_string());
            }
        }
    }

    let renamable = |name: &str| -> bool {
        if is_keyword(name) {
            return false;
        }
        rename_all || (defined.contains(name) && !KEEP_NAMES.contains(&name))
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut taken = existing.clone();
    let mut pairs = BTreeMap::new();
    for name in order.iter().filter(|n| renamable(n)) {
        let fresh = loop {
            let candidate = format!("x{:08x}", rng.next_u32());
            if taken.insert(candidate.clone()) {
                break candidate;
            }
        };
        pairs.insert(name.clone(), fresh);
    }

    let rewritten = units
        .iter()
        .map(|u| {
            let mut text = String::with_capacity(u.text.len());
            let mut last = 0;
            for t in tokenize(&u.text) {
                if t.kind != TokenKind::Ident {
                    continue;
                }
                if let Some(fresh) = pairs.get(t.text(&u.text)) {
                    text.push_str(&u.text[last..t.span.start]);
                    text.push_str(fresh);
                    last = t.span.end;
                }
            }
            text.push_str(&u.text[last..]);
            SourceUnit::new(u.path.clone(), text)
        })
        .collect();
    Ok((rewritten, RenameMap { pairs, seed }))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SRC: &str = "int vsf_sysutil_read(int fd, char *buf) { return read(fd, buf, 4); }\nint main(void) { char b[4]; int n = vsf_sysutil_read(0, b); printf(\"%d\", n); return n; }\n";

    #[test]
    fn same_fresh_name_everywhere() {
        let (out, map) = anonymize(&SourceUnit::new("a.c", SRC), 7, false).unwrap();
        let fresh = map.get("vsf_sysutil_read").unwrap();
        assert_eq!(out.text.matches(fresh).count(), 2);
        assert!(!out.text.contains("vsf_sysutil_read"));
        for kept in ["read", "printf", "main", "int", "return"] {
            assert!(map.get(kept).is_none(), "{kept}");
        }
        assert!(out.text.contains("\"%d\""));
    }

    #[test]
    fn deterministic_per_seed() {
        let u = SourceUnit::new("a.c", SRC);
        let (a, ma) = anonymize(&u, 42, false).unwrap();
        let (b, mb) = anonymize(&u, 42, false).unwrap();
        assert_eq!(a.text, b.text);
        assert_eq!(ma, mb);
        let (c, _) = anonymize(&u, 43, false).unwrap();
        assert_ne!(a.text, c.text);
    }

    #[test]
    fn injective_and_collision_free() {
        let u = SourceUnit::new("a.c", SRC);
        let (_, map) = anonymize(&u, 1, true).unwrap();
        let fresh: BTreeSet<_> = map.pairs.values().collect();
        assert_eq!(fresh.len(), map.pairs.len());
        for f in fresh {
            assert!(!SRC.contains(f.as_str()));
        }
        assert!(map.get("read").is_some() && map.get("printf").is_some());
        assert!(map.get("int").is_none());
    }

    #[test]
    fn output_reparses() {
        let (out, _) = anonymize(&SourceUnit::new("a.c", SRC), 3, false).unwrap();
        let parsed = parse_unit(&out);
        assert!(parsed.errors.is_empty());
        assert_eq!(parsed.functions.len(), 2);
    }

    #[test]
    fn syntax_error_propagates() {
        assert!(anonymize(&SourceUnit::new("a.c", "int f(void) { @ }"), 0, false).is_err());
    }
}
