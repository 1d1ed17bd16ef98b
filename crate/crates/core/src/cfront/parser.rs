//! Recursive-descent parser for the supported C subset.
//!
//! Errors are isolated per external declaration: a malformed function is
//! reported and skipped (up to its closing brace) and parsing resumes with
//! the next definition.

use std::collections::BTreeSet;

use super::ast::*;
use super::lexer::{is_keyword, tokenize, Token, TokenKind};
use super::{normalize_ws, SourceUnit, Span, SyntaxError};

/// Everything recovered from one source file.
#[derive(Debug, Clone, Default)]
pub struct ParsedUnit {
    pub functions: Vec<FunctionAst>,
    /// File-scope variable names.
    pub globals: BTreeSet<String>,
    /// Functions defined or prototyped in the unit.
    pub function_names: BTreeSet<String>,
    pub typedefs: BTreeSet<String>,
    pub enum_constants: BTreeSet<String>,
    /// Every identifier the unit itself declares: functions, variables,
    /// parameters, typedefs, tags, fields, enum constants and labels.
    pub defined_names: BTreeSet<String>,
    pub errors: Vec<SyntaxError>,
}

pub fn parse_unit(unit: &SourceUnit) -> ParsedUnit {
    let mut p = Parser::new(&unit.text);
    p.translation_unit();
    let Parser {
        functions,
        globals,
        function_names,
        typedefs,
        enum_constants,
        defined_names,
        errors,
        ..
    } = p;
    ParsedUnit {
        functions,
        globals,
        function_names,
        typedefs,
        enum_constants,
        defined_names,
        errors,
    }
}

type PResult<T> = Result<T, SyntaxError>;

const TYPE_KEYWORDS: &[&str] = &[
    "void", "char", "short", "int", "long", "float", "double", "signed", "unsigned", "_Bool",
];
const QUALIFIERS: &[&str] = &[
    "typedef",
    "extern",
    "static",
    "auto",
    "register",
    "inline",
    "__inline",
    "const",
    "volatile",
    "restrict",
    "__restrict",
    "_Noreturn",
];
const KNOWN_TYPE_NAMES: &[&str] = &["FILE", "DIR", "va_list", "jmp_buf", "bool", "BOOL"];
const ASSIGN_OPS: &[&str] = &["=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>="];

fn binary_prec(op: &str) -> Option<u8> {
    Some(match op {
        "||" => 1,
        "&&" => 2,
        "|" => 3,
        "^" => 4,
        "&" => 5,
        "==" | "!=" => 6,
        "<" | ">" | "<=" | ">=" => 7,
        "<<" | ">>" => 8,
        "+" | "-" => 9,
        "*" | "/" | "%" => 10,
        _ => return None,
    })
}

fn looks_like_type(name: &str) -> bool {
    name.ends_with("_t") || KNOWN_TYPE_NAMES.contains(&name)
}

struct Specs {
    text: String,
    is_typedef: bool,
}

struct DeclInfo {
    name: Option<Ident>,
    pointer: u8,
    array: bool,
    params: Option<Vec<Param>>,
    fn_pointer: bool,
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token>,
    pos: usize,
    vars: BTreeSet<String>,
    current_fn: Option<String>,
    functions: Vec<FunctionAst>,
    globals: BTreeSet<String>,
    function_names: BTreeSet<String>,
    typedefs: BTreeSet<String>,
    enum_constants: BTreeSet<String>,
    defined_names: BTreeSet<String>,
    errors: Vec<SyntaxError>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src,
            toks: tokenize(src),
            pos: 0,
            vars: BTreeSet::new(),
            current_fn: None,
            functions: Vec::new(),
            globals: BTreeSet::new(),
            function_names: BTreeSet::new(),
            typedefs: BTreeSet::new(),
            enum_constants: BTreeSet::new(),
            defined_names: BTreeSet::new(),
            errors: Vec::new(),
        }
    }

    // ---- token helpers ----

    fn tok(&self, n: usize) -> &Token {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i]
    }

    fn text(&self, n: usize) -> &'a str {
        let t = self.tok(n);
        &self.src[t.span.start..t.span.end]
    }

    fn kind(&self, n: usize) -> TokenKind {
        self.tok(n).kind
    }

    fn is_at(&self, n: usize, s: &str) -> bool {
        matches!(self.kind(n), TokenKind::Ident | TokenKind::Punct) && self.text(n) == s
    }

    fn is(&self, s: &str) -> bool {
        self.is_at(0, s)
    }

    fn eof(&self) -> bool {
        self.kind(0) == TokenKind::Eof
    }

    fn advance(&mut self) -> Span {
        let span = self.tok(0).span;
        if !self.eof() {
            self.pos += 1;
        }
        span
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.is(s) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn error<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let t = self.tok(0);
        let found = match t.kind {
            TokenKind::Eof => "end of file".to_string(),
            _ => format!("`{}`", self.text(0)),
        };
        Err(SyntaxError {
            line: t.span.line,
            col: t.span.col,
            message: format!("{}, found {found}", msg.into()),
            function: None,
        })
    }

    fn expect(&mut self, s: &str) -> PResult<Span> {
        if self.is(s) {
            Ok(self.advance())
        } else {
            self.error(format!("expected `{s}`"))
        }
    }

    fn ident(&mut self) -> PResult<Ident> {
        if self.kind(0) == TokenKind::Ident && !is_keyword(self.text(0)) {
            let name = self.text(0).to_string();
            let span = self.advance();
            Ok(Ident { name, span })
        } else {
            self.error("expected identifier")
        }
    }

    fn skip_balanced(&mut self, open: &str, close: &str) -> PResult<()> {
        self.expect(open)?;
        let mut depth = 1;
        while depth > 0 {
            if self.eof() {
                return self.error(format!("unbalanced `{open}`"));
            }
            if self.is(open) {
                depth += 1;
            } else if self.is(close) {
                depth -= 1;
            }
            self.advance();
        }
        Ok(())
    }

    fn skip_attributes(&mut self) -> PResult<()> {
        while matches!(self.text(0), "__attribute__" | "__asm__" | "asm" | "__asm") && self.kind(0) == TokenKind::Ident
        {
            self.advance();
            if self.is("(") {
                self.skip_balanced("(", ")")?;
            }
        }
        Ok(())
    }

    // ---- top level ----

    fn translation_unit(&mut self) {
        while !self.eof() {
            let start = self.pos;
            if let Err(mut e) = self.external_decl() {
                e.function = self.current_fn.take();
                self.errors.push(e);
                self.recover(start);
            }
            self.current_fn = None;
        }
    }

    /// Skip from `start` past the end of the broken external declaration:
    /// either the first `;` at brace depth 0 or the brace that closes the
    /// first top-level block.
    fn recover(&mut self, start: usize) {
        self.pos = start;
        let mut depth = 0usize;
        while !self.eof() {
            if self.is("{") {
                depth += 1;
            } else if self.is("}") {
                depth = depth.saturating_sub(1);
                if depth == 0 {
                    self.advance();
                    self.eat(";");
                    return;
                }
            } else if self.is(";") && depth == 0 {
                self.advance();
                return;
            }
            self.advance();
        }
    }

    fn external_decl(&mut self) -> PResult<()> {
        if self.eat(";") {
            return Ok(());
        }
        let start = self.tok(0).span;
        let specs = self.decl_specifiers(false)?;
        if self.eat(";") {
            return Ok(());
        }
        let mut first = true;
        loop {
            let d = self.declarator(false)?;
            let name = d.name.clone().expect("non-abstract declarator has a name");
            if first && d.params.is_some() && !d.fn_pointer && !specs.is_typedef && self.is("{") {
                return self.function_definition(start, specs, d, name);
            }
            first = false;
            self.defined_names.insert(name.name.clone());
            if specs.is_typedef {
                self.typedefs.insert(name.name.clone());
            } else if d.params.is_some() && !d.fn_pointer {
                self.function_names.insert(name.name.clone());
            } else {
                self.globals.insert(name.name.clone());
            }
            self.skip_attributes()?;
            if self.eat("=") {
                self.initializer()?;
            }
            if self.eat(",") {
                continue;
            }
            self.expect(";")?;
            return Ok(());
        }
    }

    fn function_definition(&mut self, start: Span, specs: Specs, d: DeclInfo, name: Ident) -> PResult<()> {
        self.current_fn = Some(name.name.clone());
        self.function_names.insert(name.name.clone());
        self.defined_names.insert(name.name.clone());
        let params = d.params.unwrap_or_default();
        self.vars = self.globals.clone();
        for p in &params {
            self.vars.insert(p.name.name.clone());
        }
        let body = self.compound()?;
        let span = start.to(body.span);
        let end_line = self.prev_span().line;
        let mut return_type = specs.text;
        for _ in 0..d.pointer {
            return_type.push('*');
        }
        self.functions.push(FunctionAst {
            name,
            return_type,
            params,
            lines: (start.line, end_line),
            body,
            span,
        });
        self.current_fn = None;
        Ok(())
    }

    fn decl_specifiers(&mut self, in_params: bool) -> PResult<Specs> {
        let start_pos = self.pos;
        let mut is_typedef = false;
        let mut has_type = false;
        loop {
            if self.kind(0) != TokenKind::Ident {
                break;
            }
            let t = self.text(0);
            if QUALIFIERS.contains(&t) {
                is_typedef |= t == "typedef";
                self.advance();
            } else if TYPE_KEYWORDS.contains(&t) {
                has_type = true;
                self.advance();
            } else if t == "struct" || t == "union" {
                self.advance();
                self.skip_attributes()?;
                if self.kind(0) == TokenKind::Ident && !is_keyword(self.text(0)) {
                    let tag = self.ident()?;
                    self.defined_names.insert(tag.name);
                }
                if self.is("{") {
                    self.struct_body()?;
                }
                has_type = true;
            } else if t == "enum" {
                self.advance();
                if self.kind(0) == TokenKind::Ident && !is_keyword(self.text(0)) {
                    let tag = self.ident()?;
                    self.defined_names.insert(tag.name);
                }
                if self.is("{") {
                    self.enum_body()?;
                }
                has_type = true;
            } else if matches!(t, "__attribute__" | "__extension__") {
                if t == "__extension__" {
                    self.advance();
                } else {
                    self.skip_attributes()?;
                }
            } else if !has_type && !is_keyword(t) && self.ident_is_type_here(in_params) {
                has_type = true;
                self.advance();
            } else {
                break;
            }
        }
        if self.pos == start_pos {
            return self.error("expected declaration");
        }
        let span = self.toks[start_pos].span.to(self.prev_span());
        Ok(Specs {
            text: normalize_ws(&self.src[span.start..span.end]),
            is_typedef,
        })
    }

    fn ident_is_type_here(&self, in_params: bool) -> bool {
        let t = self.text(0);
        if self.typedefs.contains(t) || looks_like_type(t) {
            return true;
        }
        if self.vars.contains(t) {
            return false;
        }
        let next_is_name = self.kind(1) == TokenKind::Ident && !is_keyword(self.text(1));
        let next_is_qual = self.kind(1) == TokenKind::Ident && QUALIFIERS.contains(&self.text(1));
        next_is_name || next_is_qual || self.is_at(1, "*") || (in_params && (self.is_at(1, ",") || self.is_at(1, ")")))
    }

    fn struct_body(&mut self) -> PResult<()> {
        self.expect("{")?;
        while !self.eat("}") {
            if self.eof() {
                return self.error("unterminated struct body");
            }
            if self.eat(";") {
                continue;
            }
            self.decl_specifiers(false)?;
            if self.eat(";") {
                continue;
            }
            loop {
                if self.is(":") {
                    // unnamed bit-field
                    self.advance();
                    self.conditional()?;
                } else {
                    let d = self.declarator(false)?;
                    if let Some(n) = d.name {
                        self.defined_names.insert(n.name);
                    }
                    if self.eat(":") {
                        self.conditional()?;
                    }
                }
                self.skip_attributes()?;
                if !self.eat(",") {
                    break;
                }
            }
            self.expect(";")?;
        }
        self.skip_attributes()
    }

    fn enum_body(&mut self) -> PResult<()> {
        self.expect("{")?;
        while !self.eat("}") {
            let c = self.ident()?;
            self.enum_constants.insert(c.name.clone());
            self.defined_names.insert(c.name);
            if self.eat("=") {
                self.conditional()?;
            }
            if !self.eat(",") {
                self.expect("}")?;
                break;
            }
        }
        Ok(())
    }

    fn declarator(&mut self, abstract_ok: bool) -> PResult<DeclInfo> {
        let mut pointer = 0u8;
        while self.eat("*") {
            pointer = pointer.saturating_add(1);
            while matches!(self.text(0), "const" | "volatile" | "restrict" | "__restrict") {
                self.advance();
            }
        }
        let mut name = None;
        let mut fn_pointer = false;
        if self.is("(") && (self.is_at(1, "*") || self.is_at(1, "^")) {
            self.advance();
            while self.eat("*") || self.eat("^") {
                pointer = pointer.saturating_add(1);
            }
            if self.kind(0) == TokenKind::Ident && !is_keyword(self.text(0)) {
                name = Some(self.ident()?);
            }
            while self.is("[") {
                self.skip_balanced("[", "]")?;
            }
            self.expect(")")?;
            fn_pointer = true;
        } else if self.kind(0) == TokenKind::Ident && !is_keyword(self.text(0)) {
            name = Some(self.ident()?);
        }
        if name.is_none() && !abstract_ok {
            return self.error("expected identifier");
        }
        let mut array = false;
        let mut params = None;
        loop {
            if self.is("[") {
                self.skip_balanced("[", "]")?;
                array = true;
            } else if self.is("(") {
                let ps = self.param_list()?;
                if params.is_none() {
                    params = Some(ps);
                }
            } else {
                break;
            }
        }
        self.skip_attributes()?;
        Ok(DeclInfo {
            name,
            pointer,
            array,
            params,
            fn_pointer,
        })
    }

    fn param_list(&mut self) -> PResult<Vec<Param>> {
        self.expect("(")?;
        let mut params: Vec<Param> = Vec::new();
        if self.eat(")") {
            return Ok(params);
        }
        if self.is("void") && self.is_at(1, ")") {
            self.advance();
            self.advance();
            return Ok(params);
        }
        loop {
            if self.eat("...") {
                self.expect(")")?;
                break;
            }
            let specs = self.decl_specifiers(true)?;
            let d = self.declarator(true)?;
            if let Some(name) = d.name {
                if params.iter().any(|p| p.name.name == name.name) {
                    return Err(SyntaxError {
                        line: name.span.line,
                        col: name.span.col,
                        message: format!("duplicate parameter name `{}`", name.name),
                        function: None,
                    });
                }
                let mut ty = specs.text;
                if d.pointer > 0 {
                    ty.push(' ');
                    ty.push_str(&"*".repeat(d.pointer as usize));
                }
                if d.array {
                    ty.push_str("[]");
                }
                self.defined_names.insert(name.name.clone());
                params.push(Param { name, ty });
            }
            if self.eat(",") {
                continue;
            }
            self.expect(")")?;
            break;
        }
        Ok(params)
    }

    fn initializer(&mut self) -> PResult<Expr> {
        if self.is("{") {
            let start = self.advance();
            let mut items = Vec::new();
            while !self.is("}") {
                // designators: .field = / [idx] =
                if self.is(".") && self.kind(1) == TokenKind::Ident && self.is_at(2, "=") {
                    self.advance();
                    self.advance();
                    self.advance();
                } else if self.is("[") {
                    let save = self.pos;
                    self.skip_balanced("[", "]")?;
                    if !self.eat("=") {
                        self.pos = save;
                    }
                }
                items.push(self.initializer()?);
                if !self.eat(",") {
                    break;
                }
            }
            let end = self.expect("}")?;
            Ok(Expr {
                kind: ExprKind::InitList(items),
                span: start.to(end),
            })
        } else {
            self.assignment()
        }
    }

    // ---- statements ----

    fn compound(&mut self) -> PResult<Stmt> {
        let start = self.expect("{")?;
        let saved_vars = self.vars.clone();
        let mut items = Vec::new();
        while !self.is("}") {
            if self.eof() {
                return self.error("expected `}`");
            }
            items.push(self.statement()?);
        }
        let end = self.advance();
        self.vars = saved_vars;
        Ok(Stmt {
            kind: StmtKind::Compound(items),
            span: start.to(end),
        })
    }

    fn paren_cond(&mut self, keyword: Span) -> PResult<(Expr, Span)> {
        self.expect("(")?;
        let cond = self.expr()?;
        let rp = self.expect(")")?;
        Ok((cond, keyword.to(rp)))
    }

    fn statement(&mut self) -> PResult<Stmt> {
        if self.kind(0) == TokenKind::Unknown {
            return self.error("unsupported character");
        }
        if self.is("{") {
            return self.compound();
        }
        let start = self.tok(0).span;
        if self.kind(0) == TokenKind::Ident {
            match self.text(0) {
                "if" => {
                    self.advance();
                    let (cond, header) = self.paren_cond(start)?;
                    let then = Box::new(self.statement()?);
                    let otherwise = if self.eat("else") {
                        Some(Box::new(self.statement()?))
                    } else {
                        None
                    };
                    let end = self.prev_span();
                    return Ok(Stmt {
                        kind: StmtKind::If {
                            cond,
                            header,
                            then,
                            otherwise,
                        },
                        span: start.to(end),
                    });
                }
                "while" => {
                    self.advance();
                    let (cond, header) = self.paren_cond(start)?;
                    let body = Box::new(self.statement()?);
                    return Ok(Stmt {
                        span: start.to(body.span),
                        kind: StmtKind::While { cond, header, body },
                    });
                }
                "do" => {
                    self.advance();
                    let body = Box::new(self.statement()?);
                    let kw = self.expect("while")?;
                    let (cond, header) = self.paren_cond(kw)?;
                    let end = self.expect(";")?;
                    return Ok(Stmt {
                        kind: StmtKind::DoWhile { body, cond, header },
                        span: start.to(end),
                    });
                }
                "for" => return self.for_statement(start),
                "switch" => {
                    self.advance();
                    let (cond, header) = self.paren_cond(start)?;
                    let body = Box::new(self.statement()?);
                    return Ok(Stmt {
                        span: start.to(body.span),
                        kind: StmtKind::Switch { cond, header, body },
                    });
                }
                "case" => {
                    self.advance();
                    let value = self.conditional()?;
                    if self.eat("...") {
                        self.conditional()?;
                    }
                    let end = self.expect(":")?;
                    return Ok(Stmt {
                        kind: StmtKind::Case(Some(value)),
                        span: start.to(end),
                    });
                }
                "default" if self.is_at(1, ":") => {
                    self.advance();
                    let end = self.advance();
                    return Ok(Stmt {
                        kind: StmtKind::Case(None),
                        span: start.to(end),
                    });
                }
                "return" => {
                    self.advance();
                    let value = if self.is(";") { None } else { Some(self.expr()?) };
                    let end = self.expect(";")?;
                    return Ok(Stmt {
                        kind: StmtKind::Return(value),
                        span: start.to(end),
                    });
                }
                "break" | "continue" => {
                    let is_break = self.text(0) == "break";
                    self.advance();
                    let end = self.expect(";")?;
                    return Ok(Stmt {
                        kind: if is_break { StmtKind::Break } else { StmtKind::Continue },
                        span: start.to(end),
                    });
                }
                "goto" => {
                    self.advance();
                    let label = self.ident()?;
                    let end = self.expect(";")?;
                    return Ok(Stmt {
                        kind: StmtKind::Goto(label),
                        span: start.to(end),
                    });
                }
                t if !is_keyword(t) && self.is_at(1, ":") => {
                    let label = self.ident()?;
                    let end = self.advance();
                    self.defined_names.insert(label.name.clone());
                    return Ok(Stmt {
                        kind: StmtKind::Label(label),
                        span: start.to(end),
                    });
                }
                _ => {}
            }
        }
        if self.eat(";") {
            return Ok(Stmt {
                kind: StmtKind::Empty,
                span: start,
            });
        }
        if self.is_decl_start() {
            let decl = self.declaration()?;
            let end = self.expect(";")?;
            return Ok(Stmt {
                span: start.to(end),
                kind: StmtKind::Decl(decl),
            });
        }
        let e = self.expr()?;
        let end = self.expect(";")?;
        Ok(Stmt {
            span: e.span.to(end),
            kind: StmtKind::Expr(e),
        })
    }

    fn for_statement(&mut self, start: Span) -> PResult<Stmt> {
        self.advance();
        self.expect("(")?;
        let saved_vars = self.vars.clone();
        let init = if self.eat(";") {
            None
        } else if self.is_decl_start() {
            let d = self.declaration()?;
            self.expect(";")?;
            Some(ForInit::Decl(d))
        } else {
            let e = self.expr()?;
            self.expect(";")?;
            Some(ForInit::Expr(e))
        };
        let cond = if self.is(";") { None } else { Some(self.expr()?) };
        self.expect(";")?;
        let step = if self.is(")") { None } else { Some(self.expr()?) };
        let rp = self.expect(")")?;
        let body = Box::new(self.statement()?);
        self.vars = saved_vars;
        Ok(Stmt {
            span: start.to(body.span),
            kind: StmtKind::For {
                init,
                cond,
                step,
                header: start.to(rp),
                body,
            },
        })
    }

    fn is_decl_start(&self) -> bool {
        if self.kind(0) != TokenKind::Ident {
            return false;
        }
        let t = self.text(0);
        if TYPE_KEYWORDS.contains(&t)
            || QUALIFIERS.contains(&t)
            || matches!(t, "struct" | "union" | "enum" | "__extension__")
        {
            return true;
        }
        if is_keyword(t) || self.vars.contains(t) {
            return false;
        }
        if self.typedefs.contains(t) {
            return true;
        }
        if self.kind(1) == TokenKind::Ident && !is_keyword(self.text(1)) {
            return true;
        }
        if self.kind(1) == TokenKind::Ident && matches!(self.text(1), "const" | "volatile") {
            return true;
        }
        if self.is_at(1, "*") {
            let mut i = 1;
            while self.is_at(i, "*") {
                i += 1;
            }
            if self.kind(i) == TokenKind::Ident && !is_keyword(self.text(i)) {
                return looks_like_type(t) || [";", "=", ",", "[", ")"].iter().any(|p| self.is_at(i + 1, p));
            }
        }
        false
    }

    /// Declaration without the terminating `;`.
    fn declaration(&mut self) -> PResult<Declaration> {
        let start = self.tok(0).span;
        let specs = self.decl_specifiers(false)?;
        let mut declarators = Vec::new();
        if !self.is(";") {
            loop {
                let d = self.declarator(false)?;
                let name = d.name.expect("non-abstract declarator has a name");
                self.defined_names.insert(name.name.clone());
                if specs.is_typedef {
                    self.typedefs.insert(name.name.clone());
                } else {
                    self.vars.insert(name.name.clone());
                }
                let init = if self.eat("=") { Some(self.initializer()?) } else { None };
                declarators.push(Declarator {
                    name,
                    pointer: d.pointer,
                    array: d.array,
                    function: d.params.is_some() && !d.fn_pointer,
                    init,
                });
                if !self.eat(",") {
                    break;
                }
            }
        }
        Ok(Declaration {
            specifiers: specs.text,
            is_typedef: specs.is_typedef,
            declarators,
            span: start.to(self.prev_span()),
        })
    }

    // ---- expressions ----

    fn expr(&mut self) -> PResult<Expr> {
        let first = self.assignment()?;
        if !self.is(",") {
            return Ok(first);
        }
        let start = first.span;
        let mut items = vec![first];
        while self.eat(",") {
            items.push(self.assignment()?);
        }
        let end = items.last().map(|e| e.span).unwrap_or(start);
        Ok(Expr {
            kind: ExprKind::Comma(items),
            span: start.to(end),
        })
    }

    fn assignment(&mut self) -> PResult<Expr> {
        let lhs = self.conditional()?;
        if self.kind(0) == TokenKind::Punct && ASSIGN_OPS.contains(&self.text(0)) {
            let op = self.text(0).to_string();
            self.advance();
            let rhs = self.assignment()?;
            let span = lhs.span.to(rhs.span);
            return Ok(Expr {
                kind: ExprKind::Assign {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                span,
            });
        }
        Ok(lhs)
    }

    fn conditional(&mut self) -> PResult<Expr> {
        let cond = self.binary(1)?;
        if !self.eat("?") {
            return Ok(cond);
        }
        let then = self.expr()?;
        self.expect(":")?;
        let otherwise = self.conditional()?;
        let span = cond.span.to(otherwise.span);
        Ok(Expr {
            kind: ExprKind::Ternary {
                cond: Box::new(cond),
                then: Box::new(then),
                otherwise: Box::new(otherwise),
            },
            span,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.kind(0) != TokenKind::Punct {
                break;
            }
            let op = self.text(0);
            let Some(prec) = binary_prec(op) else { break };
            if prec < min_prec {
                break;
            }
            self.advance();
            let rhs = self.binary(prec + 1)?;
            let span = lhs.span.to(rhs.span);
            lhs = Expr {
                kind: ExprKind::Binary {
                    op: op.to_string(),
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                span,
            };
        }
        Ok(lhs)
    }

    fn is_type_name_at(&self, n: usize) -> bool {
        if self.kind(n) != TokenKind::Ident {
            return false;
        }
        let t = self.text(n);
        if TYPE_KEYWORDS.contains(&t) || matches!(t, "struct" | "union" | "enum" | "const" | "volatile") {
            return true;
        }
        !is_keyword(t) && !self.vars.contains(t) && (self.typedefs.contains(t) || looks_like_type(t))
    }

    /// `( type-name )` starting at the current `(`; returns the type text.
    fn type_name_in_parens(&mut self) -> PResult<String> {
        self.expect("(")?;
        let start = self.tok(0).span;
        self.decl_specifiers(true)?;
        self.declarator(true)?;
        let end = self.prev_span();
        self.expect(")")?;
        Ok(normalize_ws(&self.src[start.start..end.end]))
    }

    fn unary(&mut self) -> PResult<Expr> {
        let start = self.tok(0).span;
        if self.kind(0) == TokenKind::Punct {
            let op = match self.text(0) {
                "++" => Some(UnaryOp::PreInc),
                "--" => Some(UnaryOp::PreDec),
                "-" => Some(UnaryOp::Neg),
                "+" => Some(UnaryOp::Plus),
                "!" => Some(UnaryOp::Not),
                "~" => Some(UnaryOp::BitNot),
                "*" => Some(UnaryOp::Deref),
                "&" => Some(UnaryOp::AddrOf),
                _ => None,
            };
            if let Some(op) = op {
                self.advance();
                let operand = self.unary()?;
                let span = start.to(operand.span);
                return Ok(Expr {
                    kind: ExprKind::Unary {
                        op,
                        operand: Box::new(operand),
                    },
                    span,
                });
            }
            if self.is("(") && self.is_type_name_at(1) {
                let ty = self.type_name_in_parens()?;
                if self.is("{") {
                    // compound literal
                    let init = self.initializer()?;
                    let span = start.to(init.span);
                    return self.postfix(Expr {
                        kind: ExprKind::Cast {
                            ty,
                            operand: Box::new(init),
                        },
                        span,
                    });
                }
                let operand = self.unary()?;
                let span = start.to(operand.span);
                return Ok(Expr {
                    kind: ExprKind::Cast {
                        ty,
                        operand: Box::new(operand),
                    },
                    span,
                });
            }
        }
        if self.is("sizeof") {
            self.advance();
            if self.is("(") && self.is_type_name_at(1) {
                let ty = self.type_name_in_parens()?;
                return Ok(Expr {
                    kind: ExprKind::SizeofType(ty),
                    span: start.to(self.prev_span()),
                });
            }
            let operand = self.unary()?;
            let span = start.to(operand.span);
            return Ok(Expr {
                kind: ExprKind::Unary {
                    op: UnaryOp::Sizeof,
                    operand: Box::new(operand),
                },
                span,
            });
        }
        let primary = self.primary()?;
        self.postfix(primary)
    }

    fn postfix(&mut self, mut e: Expr) -> PResult<Expr> {
        loop {
            if self.is("(") {
                self.advance();
                let mut args = Vec::new();
                if !self.is(")") {
                    loop {
                        args.push(self.assignment()?);
                        if !self.eat(",") {
                            break;
                        }
                    }
                }
                let end = self.expect(")")?;
                let span = e.span.to(end);
                e = Expr {
                    kind: ExprKind::Call {
                        callee: Box::new(e),
                        args,
                    },
                    span,
                };
            } else if self.is("[") {
                self.advance();
                let index = self.expr()?;
                let end = self.expect("]")?;
                let span = e.span.to(end);
                e = Expr {
                    kind: ExprKind::Index {
                        base: Box::new(e),
                        index: Box::new(index),
                    },
                    span,
                };
            } else if self.is(".") || self.is("->") {
                let arrow = self.is("->");
                self.advance();
                let field = self.ident()?;
                let span = e.span.to(field.span);
                e = Expr {
                    kind: ExprKind::Member {
                        base: Box::new(e),
                        field,
                        arrow,
                    },
                    span,
                };
            } else if self.is("++") || self.is("--") {
                let op = if self.is("++") {
                    UnaryOp::PostInc
                } else {
                    UnaryOp::PostDec
                };
                let end = self.advance();
                let span = e.span.to(end);
                e = Expr {
                    kind: ExprKind::Unary {
                        op,
                        operand: Box::new(e),
                    },
                    span,
                };
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.tok(0).span;
        match self.kind(0) {
            TokenKind::Ident if !is_keyword(self.text(0)) => {
                let id = self.ident()?;
                Ok(Expr {
                    span: id.span,
                    kind: ExprKind::Ident(id),
                })
            }
            TokenKind::Number => {
                self.advance();
                Ok(Expr {
                    kind: ExprKind::Literal(LitKind::Number),
                    span: start,
                })
            }
            TokenKind::Char => {
                self.advance();
                Ok(Expr {
                    kind: ExprKind::Literal(LitKind::Char),
                    span: start,
                })
            }
            TokenKind::Str => {
                let mut end = self.advance();
                // adjacent literals concatenate
                while self.kind(0) == TokenKind::Str {
                    end = self.advance();
                }
                Ok(Expr {
                    kind: ExprKind::Literal(LitKind::Str),
                    span: start.to(end),
                })
            }
            TokenKind::Punct if self.is("(") => {
                self.advance();
                let inner = self.expr()?;
                let end = self.expect(")")?;
                // keep the parenthesized span so statement text stays exact
                Ok(Expr {
                    kind: inner.kind,
                    span: start.to(end),
                })
            }
            TokenKind::Punct if self.is("{") => self.initializer(),
            _ => self.error("expected expression"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(src: &str) -> ParsedUnit {
        parse_unit(&SourceUnit::new("t.c", src))
    }

    #[test]
    fn minimal_function() {
        let u = parse("int f(){return 0;}");
        assert!(u.errors.is_empty(), "{:?}", u.errors);
        assert_eq!(u.functions.len(), 1);
        let f = &u.functions[0];
        assert_eq!(f.name.name, "f");
        assert!(f.params.is_empty());
        match &f.body.kind {
            StmtKind::Compound(items) => {
                assert_eq!(items.len(), 1);
                assert!(matches!(items[0].kind, StmtKind::Return(Some(_))));
            }
            other => panic!("unexpected body {other:?}"),
        }
    }

    #[test]
    fn bad_function_is_isolated() {
        let src = "int ok(int a) { return a + 1; }\nint bad(void) { int x = 1; x = x @ 2; return x; }\nint after(void) { return 2; }\n";
        let u = parse(src);
        let names: Vec<_> = u.functions.iter().map(|f| f.name.name.as_str()).collect();
        assert_eq!(names, vec!["ok", "after"]);
        assert_eq!(u.errors.len(), 1);
        assert_eq!(u.errors[0].line, 2);
        assert_eq!(u.errors[0].function.as_deref(), Some("bad"));
    }

    #[test]
    fn duplicate_params_rejected() {
        let u = parse("int f(int a, int a) { return a; }");
        assert!(u.functions.is_empty());
        assert!(u.errors[0].message.contains("duplicate parameter"));
    }

    #[test]
    fn globals_typedefs_and_prototypes() {
        let src = "typedef unsigned int myuid_t;\nstruct cfg { int port; char *key; };\nint g, h = 3;\nint setuid(int);\nstatic struct cfg conf;\nenum mode { MODE_A, MODE_B = 2 };\nint f(myuid_t u) { return u + g; }";
        let u = parse(src);
        assert!(u.errors.is_empty(), "{:?}", u.errors);
        assert_eq!(u.globals.iter().cloned().collect::<Vec<_>>(), vec!["conf", "g", "h"]);
        assert!(u.typedefs.contains("myuid_t"));
        assert!(u.function_names.contains("setuid"));
        assert!(u.enum_constants.contains("MODE_B"));
        for n in ["port", "key", "cfg", "mode", "u", "f"] {
            assert!(u.defined_names.contains(n), "{n}");
        }
        assert_eq!(u.functions[0].params[0].ty, "myuid_t");
    }

    #[test]
    fn unknown_type_names_declare() {
        let src = "int f(char *name) { struct passwd *pw = getpwnam(name); uid_t uid = pw->pw_uid; FILE *fp; gid_t *gp; return uid; }";
        let u = parse(src);
        assert!(u.errors.is_empty(), "{:?}", u.errors);
        let StmtKind::Compound(items) = &u.functions[0].body.kind else {
            panic!()
        };
        assert_eq!(items.iter().filter(|s| matches!(s.kind, StmtKind::Decl(_))).count(), 4);
    }

    #[test]
    fn expression_precedence_and_casts() {
        let src = "int f(int a, int b) { int c = (int)a * b + -a; c = a > b ? a : b; c += sizeof(int) + sizeof c; return c; }";
        let u = parse(src);
        assert!(u.errors.is_empty(), "{:?}", u.errors);
    }

    #[test]
    fn control_statements() {
        let src = r#"
int f(int n) {
    int i, s = 0;
    for (i = 0; i < n; i++) { if (i % 2) continue; s += i; }
    while (s > 10) s--;
    do { s++; } while (s < 3);
    switch (n) { case 1: s = 1; break; case 2: case 3: s = 2; break; default: s = 0; }
    if (s) goto out; else s = 4;
out:
    return s;
}"#;
        let u = parse(src);
        assert!(u.errors.is_empty(), "{:?}", u.errors);
    }

    #[test]
    fn function_lines() {
        let u = parse("\n\nint f(void)\n{\n  return 1;\n}\n");
        assert_eq!(u.functions[0].lines, (3, 6));
    }
}
