//! Tokenizer for the supported C subset.
//!
//! Comments and whitespace are dropped. Preprocessor directives (including
//! backslash-continued lines) are skipped entirely, which is equivalent to
//! treating them as blank lines: byte offsets and line numbers of the
//! remaining tokens are unchanged.

use super::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Number,
    Str,
    Char,
    Punct,
    /// A byte sequence outside the C character set, such as `@`.
    Unknown,
    Eof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

impl Token {
    pub fn text<'a>(&self, src: &'a str) -> &'a str {
        &src[self.span.start..self.span.end]
    }
}

pub const KEYWORDS: &[&str] = &[
    "auto",
    "break",
    "case",
    "char",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extern",
    "float",
    "for",
    "goto",
    "if",
    "inline",
    "int",
    "long",
    "register",
    "restrict",
    "return",
    "short",
    "signed",
    "sizeof",
    "static",
    "struct",
    "switch",
    "typedef",
    "union",
    "unsigned",
    "void",
    "volatile",
    "while",
    "_Bool",
    "__inline",
    "__restrict",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

// Longest first so that greedy matching picks `<<=` over `<<` over `<`.
const PUNCTS: &[&str] = &[
    "...", "<<=", ">>=", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=", "-=", "*=", "/=",
    "%=", "&=", "^=", "|=", "##", "{", "}", "[", "]", "(", ")", ";", ",", ":", "?", ".", "+", "-", "*", "/", "%", "&",
    "|", "^", "!", "~", "<", ">", "=", "#",
];

pub struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: u32,
    line_start: usize,
    at_line_start: bool,
}

impl<'a> Lexer<'a> {
    pub fn new(src: &'a str) -> Self {
        Lexer {
            src,
            bytes: src.as_bytes(),
            pos: 0,
            line: 1,
            line_start: 0,
            at_line_start: true,
        }
    }

    pub fn tokenize(mut self) -> Vec<Token> {
        let mut out = Vec::new();
        loop {
            let tok = self.next_token();
            let eof = tok.kind == TokenKind::Eof;
            out.push(tok);
            if eof {
                return out;
            }
        }
    }

    fn peek(&self, off: usize) -> u8 {
        self.bytes.get(self.pos + off).copied().unwrap_or(0)
    }

    fn bump(&mut self) {
        if self.peek(0) == b'\n' {
            self.line += 1;
            self.line_start = self.pos + 1;
            self.at_line_start = true;
        }
        self.pos += 1;
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek(0) {
                b' ' | b'\t' | b'\r' | b'\x0c' | b'\x0b' => self.bump(),
                b'\n' => self.bump(),
                b'/' if self.peek(1) == b'/' => {
                    while self.pos < self.bytes.len() && self.peek(0) != b'\n' {
                        self.bump();
                    }
                }
                b'/' if self.peek(1) == b'*' => {
                    self.bump();
                    self.bump();
                    while self.pos < self.bytes.len() && !(self.peek(0) == b'*' && self.peek(1) == b'/') {
                        self.bump();
                    }
                    if self.pos < self.bytes.len() {
                        self.bump();
                        self.bump();
                    }
                }
                b'#' if self.at_line_start => {
                    // directive: runs to end of line, honoring `\` continuations
                    while self.pos < self.bytes.len() {
                        let c = self.peek(0);
                        if c == b'\\' && self.peek(1) == b'\n' {
                            self.bump();
                            self.bump();
                            continue;
                        }
                        if c == b'\\' && self.peek(1) == b'\r' && self.peek(2) == b'\n' {
                            self.bump();
                            self.bump();
                            self.bump();
                            continue;
                        }
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => return,
            }
        }
    }

    fn make(&self, kind: TokenKind, start: usize, line: u32, col: u32) -> Token {
        Token {
            kind,
            span: Span {
                start,
                end: self.pos,
                line,
                col,
            },
        }
    }

    fn next_token(&mut self) -> Token {
        self.skip_trivia();
        let start = self.pos;
        let line = self.line;
        let col = (start - self.line_start) as u32 + 1;
        if self.pos >= self.bytes.len() {
            return self.make(TokenKind::Eof, start, line, col);
        }
        self.at_line_start = false;
        let c = self.peek(0);
        if c.is_ascii_alphabetic() || c == b'_' {
            // L"..." and L'x' prefixes
            if c == b'L' && (self.peek(1) == b'"' || self.peek(1) == b'\'') {
                self.bump();
                return self.next_quoted(start, line, col);
            }
            while self.peek(0).is_ascii_alphanumeric() || self.peek(0) == b'_' {
                self.bump();
            }
            return self.make(TokenKind::Ident, start, line, col);
        }
        if c.is_ascii_digit() || (c == b'.' && self.peek(1).is_ascii_digit()) {
            while self.peek(0).is_ascii_alphanumeric() || self.peek(0) == b'.' || self.peek(0) == b'_' {
                let prev = self.peek(0);
                self.bump();
                if (prev == b'e' || prev == b'E' || prev == b'p' || prev == b'P')
                    && (self.peek(0) == b'+' || self.peek(0) == b'-')
                {
                    self.bump();
                }
            }
            return self.make(TokenKind::Number, start, line, col);
        }
        if c == b'"' || c == b'\'' {
            return self.next_quoted(start, line, col);
        }
        let rest = &self.src[self.pos..];
        for p in PUNCTS {
            if rest.starts_with(p) {
                for _ in 0..p.len() {
                    self.bump();
                }
                return self.make(TokenKind::Punct, start, line, col);
            }
        }
        // unknown: consume one full UTF-8 character
        let ch_len = rest.chars().next().map(char::len_utf8).unwrap_or(1);
        for _ in 0..ch_len {
            self.bump();
        }
        self.make(TokenKind::Unknown, start, line, col)
    }

    fn next_quoted(&mut self, start: usize, line: u32, col: u32) -> Token {
        let quote = self.peek(0);
        self.bump();
        while self.pos < self.bytes.len() {
            let c = self.peek(0);
            if c == b'\\' {
                self.bump();
                self.bump();
                continue;
            }
            if c == quote || c == b'\n' {
                break;
            }
            self.bump();
        }
        if self.peek(0) == quote {
            self.bump();
        }
        let kind = if quote == b'"' { TokenKind::Str } else { TokenKind::Char };
        self.make(kind, start, line, col)
    }
}

pub fn tokenize(src: &str) -> Vec<Token> {
    Lexer::new(src).tokenize()
}
