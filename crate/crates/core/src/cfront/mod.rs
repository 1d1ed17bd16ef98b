//! C frontend: parsing, lowering to simple statements, variable discovery
//! and identifier anonymization.

pub mod anonymize;
pub mod ast;
pub mod lexer;
pub mod lower;
pub mod parser;

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use anonymize::{anonymize, RenameMap};
pub use ast::FunctionAst;
pub use lower::{extract_variables, lower_to_statements, Cfg, CfgNode, LoweredFunction, Statement, StmtId, StmtKind};
pub use parser::{parse_unit, ParsedUnit};

/// Function sentinel used by [`VariableKey`] for file-scope variables.
pub const GLOBAL: &str = "GLOBAL";

/// Byte range plus the 1-based line/column of its first byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn to(self, other: Span) -> Span {
        Span {
            start: self.start,
            end: other.end.max(self.end),
            line: self.line,
            col: self.col,
        }
    }
}

/// One C source file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceUnit {
    pub path: PathBuf,
    pub text: String,
    /// Byte offsets of line starts; `line_index[0] == 0`.
    pub line_index: Vec<usize>,
}

impl SourceUnit {
    pub fn new(path: impl Into<PathBuf>, text: impl Into<String>) -> Self {
        let text = text.into();
        let mut line_index = vec![0];
        line_index.extend(
            text.bytes()
                .enumerate()
                .filter(|(_, b)| *b == b'\n')
                .map(|(i, _)| i + 1),
        );
        SourceUnit {
            path: path.into(),
            text,
            line_index,
        }
    }

    pub fn read(path: &Path) -> std::io::Result<Self> {
        let bytes = std::fs::read(path)?;
        let text = String::from_utf8(bytes).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        Ok(Self::new(path, text))
    }

    /// 1-based line containing byte `offset`.
    pub fn line_of(&self, offset: usize) -> u32 {
        match self.line_index.binary_search(&offset) {
            Ok(i) => i as u32 + 1,
            Err(i) => i as u32,
        }
    }

    pub fn slice(&self, span: Span) -> &str {
        &self.text[span.start..span.end]
    }

    /// File stem used to name per-file artifacts.
    pub fn stem(&self) -> String {
        self.path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "unit".to_string())
    }
}

/// A variable as seen by the analysis: owning function (or [`GLOBAL`]) and
/// canonical base name. Dereference writes use the pseudo-name `*p`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VariableKey {
    pub function: String,
    pub name: String,
}

impl VariableKey {
    pub fn new(function: impl Into<String>, name: impl Into<String>) -> Self {
        VariableKey {
            function: function.into(),
            name: name.into(),
        }
    }

    pub fn global(name: impl Into<String>) -> Self {
        Self::new(GLOBAL, name)
    }

    pub fn is_global(&self) -> bool {
        self.function == GLOBAL
    }
}

impl fmt::Display for VariableKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.function, self.name)
    }
}

impl std::str::FromStr for VariableKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            Some((f, n)) if !f.is_empty() && !n.is_empty() => Ok(VariableKey::new(f, n)),
            _ => Err(format!("expected <function:name>, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("{line}:{col}: {message}{}", .function.as_ref().map(|f| format!(" (in function `{f}`)")).unwrap_or_default())]
pub struct SyntaxError {
    pub line: u32,
    pub col: u32,
    pub message: String,
    /// Function whose definition was skipped, when known.
    pub function: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub enum LoweringError {
    #[error("goto targets missing label `{label}` in function `{function}`")]
    MissingLabel { function: String, label: String },
}

/// Collapse whitespace runs to one space and trim the ends.
pub fn normalize_ws(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn line_index_starts_at_zero_and_increases() {
        let u = SourceUnit::new("a.c", "a\nbb\n\nc");
        assert_eq!(u.line_index, vec![0, 2, 5, 6]);
        assert_eq!(u.line_of(0), 1);
        assert_eq!(u.line_of(3), 2);
        assert_eq!(u.line_of(5), 3);
        assert_eq!(u.line_of(6), 4);
    }

    #[test]
    fn variable_key_parses() {
        let k: VariableKey = "do_chown:uid".parse().unwrap();
        assert_eq!(k, VariableKey::new("do_chown", "uid"));
        assert!("nocolon".parse::<VariableKey>().is_err());
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "[ \ta-z=;\n(){}]{0,40}") {
            let once = normalize_ws(&s);
            prop_assert_eq!(normalize_ws(&once), once.clone());
            prop_assert!(!once.starts_with(' ') && !once.ends_with(' '));
            prop_assert!(!once.contains("  "));
        }

        #[test]
        fn line_index_strictly_increasing(s in "[a\n]{0,60}") {
            let u = SourceUnit::new("x.c", s);
            prop_assert_eq!(u.line_index[0], 0);
            prop_assert!(u.line_index.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
