//! Lowering of function bodies into simple statements and a statement-level
//! control-flow graph.
//!
//! Def/use rules:
//! * the base identifier of an assignment target is defined; plain
//!   identifier targets are strong (killing) definitions, array/member
//!   targets are weak;
//! * `*p = e` defines the pseudo-variable `*p` and uses `p`;
//! * `&x` passed as a call argument weakly defines `x` and uses it;
//! * callee names, field selectors, type names, labels, enum constants and
//!   all-caps macro constants are not variables.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::ast::{self, Declaration, Expr, ExprKind, ForInit, FunctionAst, UnaryOp};
use super::parser::ParsedUnit;
use super::{normalize_ws, LoweringError, SourceUnit, Span, VariableKey};

pub type StmtId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StmtKind {
    Assignment,
    Call,
    Assertion,
    Goto,
    Return,
    Condition,
    DeclarationWithInit,
}

impl StmtKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StmtKind::Assignment => "assignment",
            StmtKind::Call => "call",
            StmtKind::Assertion => "assertion",
            StmtKind::Goto => "goto",
            StmtKind::Return => "return",
            StmtKind::Condition => "condition",
            StmtKind::DeclarationWithInit => "declaration-with-init",
        }
    }
}

/// Which construct a condition node controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Construct {
    If,
    While,
    DoWhile,
    For,
    Switch,
}

/// A call appearing inside a statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallSite {
    pub callee: String,
    /// Variables read anywhere in the argument list.
    pub arg_vars: BTreeSet<VariableKey>,
}

/// A resolved variable token inside a statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Occurrence {
    pub key: VariableKey,
    pub line: u32,
}

/// One PDG node: a simple statement or a branch/loop condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Statement {
    pub id: StmtId,
    pub kind: StmtKind,
    pub text: String,
    pub norm_text: String,
    pub defs: BTreeSet<VariableKey>,
    pub uses: BTreeSet<VariableKey>,
    /// First and last source line.
    pub span: (u32, u32),
    /// Strong definitions; a subset of `defs`.
    #[serde(skip)]
    pub kills: BTreeSet<VariableKey>,
    /// Innermost enclosing condition node.
    #[serde(skip)]
    pub governor: Option<StmtId>,
    #[serde(skip)]
    pub construct: Option<Construct>,
    #[serde(skip)]
    pub calls: Vec<CallSite>,
    #[serde(skip)]
    pub occurrences: Vec<Occurrence>,
}

impl Statement {
    pub fn refers_to(&self, v: &VariableKey) -> bool {
        self.defs.contains(v) || self.uses.contains(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CfgNode {
    Entry,
    Stmt(StmtId),
    Exit,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct Cfg {
    pub nodes: Vec<CfgNode>,
    pub edges: BTreeSet<(CfgNode, CfgNode)>,
}

impl Cfg {
    pub fn successors(&self, n: CfgNode) -> impl Iterator<Item = CfgNode> + '_ {
        self.edges
            .range((n, CfgNode::Entry)..=(n, CfgNode::Exit))
            .map(|(_, d)| *d)
    }

    pub fn predecessor_map(&self) -> BTreeMap<CfgNode, Vec<CfgNode>> {
        let mut m: BTreeMap<CfgNode, Vec<CfgNode>> = BTreeMap::new();
        for (s, d) in &self.edges {
            m.entry(*d).or_default().push(*s);
        }
        m
    }

    pub fn reachable_from_entry(&self) -> BTreeSet<CfgNode> {
        let mut seen = BTreeSet::from([CfgNode::Entry]);
        let mut queue = VecDeque::from([CfgNode::Entry]);
        while let Some(n) = queue.pop_front() {
            for s in self.successors(n) {
                if seen.insert(s) {
                    queue.push_back(s);
                }
            }
        }
        seen
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LoweredFunction {
    pub name: String,
    pub statements: Vec<Statement>,
    pub cfg: Cfg,
    /// Parameters and declared locals, referenced or not.
    pub declared: BTreeSet<VariableKey>,
}

/// Name resolution context shared by all functions of a unit.
struct Resolver<'p> {
    function: String,
    locals: BTreeSet<String>,
    unit: &'p ParsedUnit,
}

fn is_macro_constant(name: &str) -> bool {
    name.bytes().any(|b| b.is_ascii_uppercase())
        && name
            .bytes()
            .all(|b| b.is_ascii_uppercase() || b.is_ascii_digit() || b == b'_')
}

impl Resolver<'_> {
    fn resolve(&self, name: &str) -> Option<VariableKey> {
        if self.locals.contains(name) {
            Some(VariableKey::new(&self.function, name))
        } else if self.unit.globals.contains(name) {
            Some(VariableKey::global(name))
        } else if self.unit.function_names.contains(name)
            || self.unit.enum_constants.contains(name)
            || self.unit.typedefs.contains(name)
            || is_macro_constant(name)
        {
            None
        } else {
            // undeclared externals such as `errno` or `optarg`
            Some(VariableKey::global(name))
        }
    }

    fn deref_key(&self, key: &VariableKey) -> VariableKey {
        VariableKey::new(&key.function, format!("*{}", key.name))
    }
}

#[derive(Default)]
struct Effects {
    defs: BTreeSet<VariableKey>,
    kills: BTreeSet<VariableKey>,
    uses: BTreeSet<VariableKey>,
    calls: Vec<CallSite>,
    occurrences: Vec<Occurrence>,
}

impl Effects {
    fn ident(&mut self, r: &Resolver, id: &ast::Ident) -> Option<VariableKey> {
        let key = r.resolve(&id.name)?;
        self.occurrences.push(Occurrence {
            key: key.clone(),
            line: id.span.line,
        });
        Some(key)
    }

    fn read(&mut self, r: &Resolver, e: &Expr) {
        match &e.kind {
            ExprKind::Ident(id) => {
                if let Some(k) = self.ident(r, id) {
                    self.uses.insert(k);
                }
            }
            ExprKind::Literal(_) | ExprKind::SizeofType(_) => {}
            ExprKind::Unary {
                op: UnaryOp::Deref,
                operand,
            } => {
                if let ExprKind::Ident(id) = &operand.kind {
                    if let Some(k) = self.ident(r, id) {
                        self.uses.insert(r.deref_key(&k));
                        self.uses.insert(k);
                    }
                } else {
                    self.read(r, operand);
                }
            }
            ExprKind::Unary { op, operand } if op.is_increment() => {
                self.write(r, operand, true);
                self.read(r, operand);
            }
            ExprKind::Unary { operand, .. } | ExprKind::Cast { operand, .. } => self.read(r, operand),
            ExprKind::Assign { op, lhs, rhs } => {
                self.write(r, lhs, true);
                if op != "=" {
                    self.read(r, lhs);
                }
                self.read(r, rhs);
            }
            ExprKind::Binary { lhs, rhs, .. } => {
                self.read(r, lhs);
                self.read(r, rhs);
            }
            ExprKind::Ternary { cond, then, otherwise } => {
                self.read(r, cond);
                self.read(r, then);
                self.read(r, otherwise);
            }
            ExprKind::Call { callee, args } => {
                let callee_name = match &callee.kind {
                    ExprKind::Ident(id) if r.locals.contains(&id.name) => {
                        self.read(r, callee);
                        id.name.clone()
                    }
                    ExprKind::Ident(id) => id.name.clone(),
                    _ => {
                        self.read(r, callee);
                        String::new()
                    }
                };
                let mut arg_vars = BTreeSet::new();
                for a in args {
                    if let ExprKind::Unary {
                        op: UnaryOp::AddrOf,
                        operand,
                    } = &a.kind
                    {
                        self.weak_write(r, operand);
                    }
                    let mut sub = Effects::default();
                    sub.read(r, a);
                    arg_vars.extend(sub.uses.iter().cloned());
                    self.read(r, a);
                }
                self.calls.push(CallSite {
                    callee: callee_name,
                    arg_vars,
                });
            }
            ExprKind::Index { base, index } => {
                self.read(r, base);
                self.read(r, index);
            }
            ExprKind::Member { base, .. } => self.read(r, base),
            ExprKind::Comma(items) | ExprKind::InitList(items) => items.iter().for_each(|i| self.read(r, i)),
        }
    }

    fn write(&mut self, r: &Resolver, lhs: &Expr, strong: bool) {
        match &lhs.kind {
            ExprKind::Ident(id) => {
                if let Some(k) = self.ident(r, id) {
                    if strong {
                        self.kills.insert(k.clone());
                    }
                    self.defs.insert(k);
                }
            }
            ExprKind::Unary {
                op: UnaryOp::Deref,
                operand,
            } => {
                if let ExprKind::Ident(id) = &operand.kind {
                    if let Some(k) = self.ident(r, id) {
                        let d = r.deref_key(&k);
                        if strong {
                            self.kills.insert(d.clone());
                        }
                        self.defs.insert(d);
                        self.uses.insert(k);
                    }
                } else {
                    self.weak_write(r, operand);
                    self.read(r, operand);
                }
            }
            ExprKind::Index { .. } | ExprKind::Member { .. } => self.weak_write(r, lhs),
            ExprKind::Cast { operand, .. } => self.write(r, operand, strong),
            _ => self.read(r, lhs),
        }
    }

    /// Weak definition of the base identifier of an access path.
    fn weak_write(&mut self, r: &Resolver, e: &Expr) {
        match &e.kind {
            ExprKind::Ident(id) => {
                if let Some(k) = self.ident(r, id) {
                    self.defs.insert(k);
                }
            }
            ExprKind::Index { base, index } => {
                self.read(r, index);
                self.weak_write(r, base);
            }
            ExprKind::Member { base, .. } | ExprKind::Cast { operand: base, .. } => self.weak_write(r, base),
            ExprKind::Unary {
                op: UnaryOp::Deref,
                operand,
            } => match &operand.kind {
                ExprKind::Ident(id) => {
                    if let Some(k) = self.ident(r, id) {
                        self.defs.insert(r.deref_key(&k));
                        self.uses.insert(k);
                    }
                }
                _ => {
                    self.weak_write(r, operand);
                    self.read(r, operand);
                }
            },
            _ => self.read(r, e),
        }
    }
}

fn contains(e: &Expr, pred: &dyn Fn(&Expr) -> bool) -> bool {
    let mut found = false;
    e.walk(&mut |x| found |= pred(x));
    found
}

fn expr_stmt_kind(e: &Expr) -> StmtKind {
    match &e.kind {
        ExprKind::Assign { .. } => StmtKind::Assignment,
        ExprKind::Unary { op, .. } if op.is_increment() => StmtKind::Assignment,
        ExprKind::Call { .. } if e.callee_name() == Some("assert") => StmtKind::Assertion,
        ExprKind::Call { .. } => StmtKind::Call,
        ExprKind::Cast { operand, .. } => expr_stmt_kind(operand),
        _ => {
            if contains(e, &|x| matches!(x.kind, ExprKind::Assign { .. })) {
                StmtKind::Assignment
            } else if contains(e, &|x| matches!(x.kind, ExprKind::Call { .. })) {
                StmtKind::Call
            } else {
                StmtKind::Assignment
            }
        }
    }
}

#[derive(PartialEq)]
enum JumpScope {
    Loop,
    Switch,
}

struct Breakable {
    scope: JumpScope,
    breaks: Vec<CfgNode>,
    continues: Vec<CfgNode>,
}

struct SwitchCtx {
    cond: CfgNode,
    has_default: bool,
}

struct Builder<'a> {
    unit: &'a SourceUnit,
    r: Resolver<'a>,
    stmts: Vec<Statement>,
    /// Governor slot per statement, resolved after lowering.
    stmt_slots: Vec<Option<usize>>,
    slots: Vec<Option<StmtId>>,
    governors: Vec<usize>,
    edges: BTreeSet<(CfgNode, CfgNode)>,
    frontier: Vec<CfgNode>,
    anchors: Vec<Option<CfgNode>>,
    pending_anchors: Vec<usize>,
    deferred: Vec<(CfgNode, usize)>,
    labels: BTreeMap<String, usize>,
    gotos: Vec<(CfgNode, String)>,
    breakables: Vec<Breakable>,
    switches: Vec<SwitchCtx>,
    declared: BTreeSet<VariableKey>,
}

impl<'a> Builder<'a> {
    fn new_anchor(&mut self) -> usize {
        self.anchors.push(None);
        self.anchors.len() - 1
    }

    fn span_lines(&self, span: Span) -> (u32, u32) {
        let end = span.end.max(span.start + 1) - 1;
        (span.line, self.unit.line_of(end))
    }

    fn add_node(&mut self, kind: StmtKind, span: Span, fx: Effects, construct: Option<Construct>) -> CfgNode {
        let id = self.stmts.len();
        let text = self.unit.slice(span).to_string();
        self.stmts.push(Statement {
            id,
            kind,
            norm_text: normalize_ws(&text),
            text,
            defs: fx.defs,
            uses: fx.uses,
            span: self.span_lines(span),
            kills: fx.kills,
            governor: None,
            construct,
            calls: fx.calls,
            occurrences: fx.occurrences,
        });
        self.stmt_slots.push(self.governors.last().copied());
        let node = CfgNode::Stmt(id);
        for p in self.frontier.drain(..) {
            self.edges.insert((p, node));
        }
        for a in self.pending_anchors.drain(..) {
            self.anchors[a] = Some(node);
        }
        self.frontier.push(node);
        node
    }

    fn expr_node(&mut self, kind: StmtKind, e: &Expr, span: Span, construct: Option<Construct>) -> CfgNode {
        let mut fx = Effects::default();
        fx.read(&self.r, e);
        self.add_node(kind, span, fx, construct)
    }

    fn cond_node(&mut self, e: &Expr, span: Span, construct: Construct) -> CfgNode {
        self.expr_node(StmtKind::Condition, e, span, Some(construct))
    }

    fn declaration(&mut self, d: &Declaration, span: Span) -> Option<CfgNode> {
        if d.is_typedef {
            return None;
        }
        let mut fx = Effects::default();
        let mut any_init = false;
        for decl in &d.declarators {
            if decl.function {
                continue;
            }
            let key = VariableKey::new(&self.r.function, &decl.name.name);
            self.declared.insert(key.clone());
            if let Some(init) = &decl.init {
                any_init = true;
                fx.read(&self.r, init);
                fx.occurrences.push(Occurrence {
                    key: key.clone(),
                    line: decl.name.span.line,
                });
                fx.kills.insert(key.clone());
                fx.defs.insert(key);
            }
        }
        any_init.then(|| self.add_node(StmtKind::DeclarationWithInit, span, fx, None))
    }

    fn push_governor(&mut self, node: Option<CfgNode>) -> usize {
        let id = match node {
            Some(CfgNode::Stmt(id)) => Some(id),
            _ => None,
        };
        self.slots.push(id);
        let slot = self.slots.len() - 1;
        self.governors.push(slot);
        slot
    }

    fn lower(&mut self, s: &ast::Stmt) -> Result<(), LoweringError> {
        use ast::StmtKind as S;
        match &s.kind {
            S::Compound(items) => {
                for i in items {
                    self.lower(i)?;
                }
            }
            S::Empty => {}
            S::Expr(e) => {
                self.expr_node(expr_stmt_kind(e), e, s.span, None);
            }
            S::Decl(d) => {
                self.declaration(d, s.span);
            }
            S::Return(value) => {
                let node = match value {
                    Some(e) => self.expr_node(StmtKind::Return, e, s.span, None),
                    None => self.add_node(StmtKind::Return, s.span, Effects::default(), None),
                };
                self.edges.insert((node, CfgNode::Exit));
                self.frontier.clear();
            }
            S::Goto(label) => {
                let node = self.add_node(StmtKind::Goto, s.span, Effects::default(), None);
                self.gotos.push((node, label.name.clone()));
                self.frontier.clear();
            }
            S::Break | S::Continue => {
                let is_break = matches!(s.kind, S::Break);
                let node = self.add_node(StmtKind::Goto, s.span, Effects::default(), None);
                self.frontier.clear();
                let target = if is_break {
                    self.breakables.last_mut()
                } else {
                    self.breakables.iter_mut().rev().find(|b| b.scope == JumpScope::Loop)
                };
                match target {
                    Some(b) if is_break => b.breaks.push(node),
                    Some(b) => b.continues.push(node),
                    // a stray jump behaves like a return
                    None => {
                        self.edges.insert((node, CfgNode::Exit));
                    }
                }
            }
            S::Label(l) => {
                let a = self.new_anchor();
                self.pending_anchors.push(a);
                self.labels.insert(l.name.clone(), a);
            }
            S::Case(value) => {
                let a = self.new_anchor();
                self.pending_anchors.push(a);
                if let Some(sw) = self.switches.last_mut() {
                    sw.has_default |= value.is_none();
                    self.deferred.push((sw.cond, a));
                }
            }
            S::If {
                cond,
                header,
                then,
                otherwise,
            } => {
                let c = self.cond_node(cond, *header, Construct::If);
                self.push_governor(Some(c));
                self.lower(then)?;
                let then_exits = std::mem::replace(&mut self.frontier, vec![c]);
                if let Some(o) = otherwise {
                    self.lower(o)?;
                }
                self.frontier.extend(then_exits);
                self.governors.pop();
            }
            S::While { cond, header, body } => {
                let c = self.cond_node(cond, *header, Construct::While);
                self.push_governor(Some(c));
                self.breakables.push(Breakable {
                    scope: JumpScope::Loop,
                    breaks: vec![],
                    continues: vec![],
                });
                self.lower(body)?;
                let b = self.breakables.pop().expect("pushed above");
                for p in self.frontier.drain(..).chain(b.continues) {
                    self.edges.insert((p, c));
                }
                self.governors.pop();
                self.frontier = std::iter::once(c).chain(b.breaks).collect();
            }
            S::DoWhile { body, cond, header } => {
                let start = self.new_anchor();
                self.pending_anchors.push(start);
                let slot = self.push_governor(None);
                self.breakables.push(Breakable {
                    scope: JumpScope::Loop,
                    breaks: vec![],
                    continues: vec![],
                });
                self.lower(body)?;
                let b = self.breakables.pop().expect("pushed above");
                self.governors.pop();
                self.frontier.extend(b.continues);
                let c = self.cond_node(cond, *header, Construct::DoWhile);
                if let CfgNode::Stmt(id) = c {
                    self.slots[slot] = Some(id);
                }
                self.deferred.push((c, start));
                self.frontier = std::iter::once(c).chain(b.breaks).collect();
            }
            S::For {
                init, cond, step, body, ..
            } => {
                match init {
                    Some(ForInit::Decl(d)) => {
                        self.declaration(d, d.span);
                    }
                    Some(ForInit::Expr(e)) => {
                        self.expr_node(expr_stmt_kind(e), e, e.span, None);
                    }
                    None => {}
                }
                let head = match cond {
                    Some(c) => Loop::Cond(self.cond_node(c, c.span, Construct::For)),
                    None => {
                        let a = self.new_anchor();
                        self.pending_anchors.push(a);
                        Loop::Anchor(a)
                    }
                };
                if let Loop::Cond(c) = head {
                    self.push_governor(Some(c));
                }
                self.breakables.push(Breakable {
                    scope: JumpScope::Loop,
                    breaks: vec![],
                    continues: vec![],
                });
                self.lower(body)?;
                let b = self.breakables.pop().expect("pushed above");
                self.frontier.extend(b.continues);
                if let Some(st) = step {
                    self.expr_node(expr_stmt_kind(st), st, st.span, None);
                }
                if let Loop::Cond(_) = head {
                    self.governors.pop();
                }
                let back: Vec<_> = self.frontier.drain(..).collect();
                match head {
                    Loop::Cond(c) => {
                        for p in back {
                            self.edges.insert((p, c));
                        }
                        self.frontier = std::iter::once(c).chain(b.breaks).collect();
                    }
                    Loop::Anchor(a) => {
                        for p in back {
                            self.deferred.push((p, a));
                        }
                        self.frontier = b.breaks;
                    }
                }
            }
            S::Switch { cond, header, body } => {
                let c = self.cond_node(cond, *header, Construct::Switch);
                self.push_governor(Some(c));
                self.switches.push(SwitchCtx {
                    cond: c,
                    has_default: false,
                });
                self.breakables.push(Breakable {
                    scope: JumpScope::Switch,
                    breaks: vec![],
                    continues: vec![],
                });
                self.frontier.clear();
                self.lower(body)?;
                let b = self.breakables.pop().expect("pushed above");
                let sw = self.switches.pop().expect("pushed above");
                self.governors.pop();
                self.frontier.extend(b.breaks);
                if !sw.has_default {
                    self.frontier.push(c);
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum Loop {
    Cond(CfgNode),
    Anchor(usize),
}

/// Lower one parsed function into simple statements and its CFG.
pub fn lower_to_statements(
    unit: &SourceUnit,
    parsed: &ParsedUnit,
    func: &FunctionAst,
) -> Result<LoweredFunction, LoweringError> {
    let name = func.name.name.clone();
    let mut locals: BTreeSet<String> = func.params.iter().map(|p| p.name.name.clone()).collect();
    collect_locals(&func.body, &mut locals);
    let mut b = Builder {
        unit,
        r: Resolver {
            function: name.clone(),
            locals,
            unit: parsed,
        },
        stmts: Vec::new(),
        stmt_slots: Vec::new(),
        slots: Vec::new(),
        governors: Vec::new(),
        edges: BTreeSet::new(),
        frontier: vec![CfgNode::Entry],
        anchors: Vec::new(),
        pending_anchors: Vec::new(),
        deferred: Vec::new(),
        labels: BTreeMap::new(),
        gotos: Vec::new(),
        breakables: Vec::new(),
        switches: Vec::new(),
        declared: func
            .params
            .iter()
            .map(|p| VariableKey::new(&name, &p.name.name))
            .collect(),
    };
    b.lower(&func.body)?;

    for p in b.frontier.drain(..) {
        b.edges.insert((p, CfgNode::Exit));
    }
    for a in b.pending_anchors.drain(..) {
        b.anchors[a] = Some(CfgNode::Exit);
    }
    for (from, a) in &b.deferred {
        b.edges.insert((*from, b.anchors[*a].unwrap_or(CfgNode::Exit)));
    }
    for (from, label) in &b.gotos {
        let Some(a) = b.labels.get(label) else {
            return Err(LoweringError::MissingLabel {
                function: name,
                label: label.clone(),
            });
        };
        b.edges.insert((*from, b.anchors[*a].unwrap_or(CfgNode::Exit)));
    }
    for (stmt, slot) in b.stmts.iter_mut().zip(&b.stmt_slots) {
        stmt.governor = slot.and_then(|s| b.slots[s]);
    }

    let mut nodes = vec![CfgNode::Entry];
    nodes.extend((0..b.stmts.len()).map(CfgNode::Stmt));
    nodes.push(CfgNode::Exit);
    let mut cfg = Cfg { nodes, edges: b.edges };
    connect_unreachable(&mut cfg);

    Ok(LoweredFunction {
        name,
        statements: b.stmts,
        cfg,
        declared: b.declared,
    })
}

/// Unreachable statements (dead code after a jump, code before the first
/// `case`) get an edge from ENTRY so that every node is reachable.
fn connect_unreachable(cfg: &mut Cfg) {
    loop {
        let reach = cfg.reachable_from_entry();
        let Some(n) = cfg.nodes.iter().find(|n| !reach.contains(n)).copied() else {
            return;
        };
        cfg.edges.insert((CfgNode::Entry, n));
    }
}

fn collect_locals(s: &ast::Stmt, out: &mut BTreeSet<String>) {
    use ast::StmtKind as S;
    let decl = |d: &Declaration, out: &mut BTreeSet<String>| {
        if !d.is_typedef {
            out.extend(
                d.declarators
                    .iter()
                    .filter(|x| !x.function)
                    .map(|x| x.name.name.clone()),
            );
        }
    };
    match &s.kind {
        S::Compound(items) => items.iter().for_each(|i| collect_locals(i, out)),
        S::Decl(d) => decl(d, out),
        S::If { then, otherwise, .. } => {
            collect_locals(then, out);
            if let Some(o) = otherwise {
                collect_locals(o, out);
            }
        }
        S::While { body, .. } | S::DoWhile { body, .. } | S::Switch { body, .. } => collect_locals(body, out),
        S::For { init, body, .. } => {
            if let Some(ForInit::Decl(d)) = init {
                decl(d, out);
            }
            collect_locals(body, out);
        }
        _ => {}
    }
}

/// Every variable referenced by a statement of the function, locals and
/// globals alike.
pub fn extract_variables(f: &LoweredFunction) -> BTreeSet<VariableKey> {
    f.statements
        .iter()
        .flat_map(|s| s.defs.iter().chain(&s.uses).cloned())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfront::parse_unit;

    pub(crate) fn lower_src(src: &str) -> Vec<LoweredFunction> {
        let unit = SourceUnit::new("t.c", src);
        let parsed = parse_unit(&unit);
        assert!(parsed.errors.is_empty(), "{:?}", parsed.errors);
        parsed
            .functions
            .iter()
            .map(|f| lower_to_statements(&unit, &parsed, f).unwrap())
            .collect()
    }

    fn keys(f: &str, names: &[&str]) -> BTreeSet<VariableKey> {
        names.iter().map(|n| VariableKey::new(f, *n)).collect()
    }

    fn succ(cfg: &Cfg, id: StmtId) -> Vec<CfgNode> {
        cfg.successors(CfgNode::Stmt(id)).collect()
    }

    #[test]
    fn single_assignment() {
        let f = &lower_src("void f(int y) { int x; x = y + 1; }")[0];
        assert_eq!(f.statements.len(), 1);
        let s = &f.statements[0];
        assert_eq!(s.kind, StmtKind::Assignment);
        assert_eq!(s.text, "x = y + 1;");
        assert_eq!(s.defs, keys("f", &["x"]));
        assert_eq!(s.uses, keys("f", &["y"]));
    }

    #[test]
    fn scanf_out_parameter() {
        let f = &lower_src("void f(void) { int n; scanf(\"%d\",&n); }")[0];
        let s = &f.statements[0];
        assert_eq!(s.kind, StmtKind::Call);
        assert_eq!(s.defs, keys("f", &["n"]));
        assert_eq!(s.uses, keys("f", &["n"]));
        assert!(s.kills.is_empty());
        assert_eq!(s.calls[0].callee, "scanf");
    }

    #[test]
    fn pointer_and_field_writes() {
        let f =
            &lower_src("void f(int *p, struct s *q, int a[], int i, int v) { *p = v; q->x = v; a[i] = v; v = *p; }")[0];
        let st = &f.statements;
        assert_eq!(st[0].defs, keys("f", &["*p"]));
        assert_eq!(st[0].uses, keys("f", &["p", "v"]));
        assert_eq!(st[1].defs, keys("f", &["q"]));
        assert!(st[1].kills.is_empty());
        assert_eq!(st[2].defs, keys("f", &["a"]));
        assert_eq!(st[2].uses, keys("f", &["i", "v"]));
        assert_eq!(st[3].uses, keys("f", &["*p", "p"]));
    }

    #[test]
    fn self_referential_and_compound_assign() {
        let f = &lower_src("void f(int x) { x = x + 1; x += 2; x++; }")[0];
        for s in &f.statements {
            assert_eq!(s.defs, keys("f", &["x"]));
            assert_eq!(s.uses, keys("f", &["x"]));
        }
    }

    #[test]
    fn if_condition_and_call() {
        let src = "int current_uid;\nint do_chown(char *fname, char *pathname, int new_uid, int new_gid) {\n  int uid = get_file_uid(fname);\n  if (uid == current_uid) {\n    chown(pathname,new_uid,new_gid);\n  }\n  return 0;\n}";
        let f = &lower_src(src)[0];
        let cond = &f.statements[1];
        assert_eq!(cond.kind, StmtKind::Condition);
        assert_eq!(cond.text, "if (uid == current_uid)");
        let mut expect = keys("do_chown", &["uid"]);
        expect.insert(VariableKey::global("current_uid"));
        assert_eq!(cond.uses, expect);
        assert_eq!(f.statements[2].kind, StmtKind::Call);
        assert_eq!(f.statements[2].governor, Some(1));
        assert_eq!(succ(&f.cfg, 1), vec![CfgNode::Stmt(2), CfgNode::Stmt(3)]);
        assert_eq!(f.statements[0].kind, StmtKind::DeclarationWithInit);
    }

    #[test]
    fn loops_break_continue() {
        let src = "void f(int n) { int i; int s = 0; for (i = 0; i < n; i++) { if (i == 3) continue; if (i == 7) break; s += i; } return; }";
        let f = &lower_src(src)[0];
        let t: Vec<_> = f.statements.iter().map(|s| s.norm_text.as_str()).collect();
        assert_eq!(
            t,
            vec![
                "int s = 0;",
                "i = 0",
                "i < n",
                "if (i == 3)",
                "continue;",
                "if (i == 7)",
                "break;",
                "s += i;",
                "i++",
                "return;"
            ]
        );
        let c = &f.cfg;
        assert_eq!(succ(c, 2), vec![CfgNode::Stmt(3), CfgNode::Stmt(9)]);
        assert_eq!(succ(c, 4), vec![CfgNode::Stmt(8)]);
        assert_eq!(succ(c, 6), vec![CfgNode::Stmt(9)]);
        assert_eq!(succ(c, 8), vec![CfgNode::Stmt(2)]);
        assert_eq!(f.statements[8].governor, Some(2));
        assert_eq!(f.statements[4].governor, Some(3));
        assert_eq!(f.statements[4].kind, StmtKind::Goto);
    }

    #[test]
    fn do_while_governs_body() {
        let f = &lower_src("void f(int n) { do { n--; } while (n > 0); }")[0];
        assert_eq!(f.statements[0].governor, Some(1));
        assert_eq!(f.statements[1].governor, None);
        assert_eq!(succ(&f.cfg, 1), vec![CfgNode::Stmt(0), CfgNode::Exit]);
    }

    #[test]
    fn switch_cases() {
        let src = "void f(int n) { int s; switch (n) { case 1: s = 1; break; case 2: s = 2; default: s = 3; } s = 0; }";
        let f = &lower_src(src)[0];
        // 0 switch, 1 s=1, 2 break, 3 s=2, 4 s=3, 5 s=0
        assert_eq!(
            succ(&f.cfg, 0),
            vec![CfgNode::Stmt(1), CfgNode::Stmt(3), CfgNode::Stmt(4)]
        );
        assert_eq!(succ(&f.cfg, 2), vec![CfgNode::Stmt(5)]);
        assert_eq!(succ(&f.cfg, 3), vec![CfgNode::Stmt(4)]);
        assert!(f.statements[1..5].iter().all(|s| s.governor == Some(0)));
        assert_eq!(f.statements[5].governor, None);
    }

    #[test]
    fn goto_and_missing_label() {
        let f = &lower_src("int f(int x) { if (x) goto out; x = 1; out: return x; }")[0];
        assert_eq!(succ(&f.cfg, 1), vec![CfgNode::Stmt(3)]);
        let unit = SourceUnit::new("t.c", "int f(void) { goto nowhere; return 0; }");
        let parsed = parse_unit(&unit);
        let err = lower_to_statements(&unit, &parsed, &parsed.functions[0]).unwrap_err();
        assert!(matches!(err, LoweringError::MissingLabel { ref label, .. } if label == "nowhere"));
    }

    #[test]
    fn unreachable_code_connected_to_entry() {
        let f = &lower_src("int f(void) { return 1; f(); }")[0];
        let reach = f.cfg.reachable_from_entry();
        assert!(f.cfg.nodes.iter().all(|n| reach.contains(n)));
        assert!(f.cfg.edges.contains(&(CfgNode::Entry, CfgNode::Stmt(1))));
    }

    #[test]
    fn extract_variables_cases() {
        let fs = lower_src("int g;\nint lit(void) { return 0; }\nint f(void) { return g; }");
        assert!(extract_variables(&fs[0]).is_empty());
        assert_eq!(extract_variables(&fs[1]), BTreeSet::from([VariableKey::global("g")]));
    }

    #[test]
    fn macros_enums_and_functions_are_not_variables() {
        let src = "enum { RED };\nint helper(int);\nint f(char *p) { if (p == NULL) return RED; return helper(EOF) + errno; }";
        let f = &lower_src(src)[0];
        let vars = extract_variables(f);
        assert_eq!(
            vars,
            BTreeSet::from([VariableKey::new("f", "p"), VariableKey::global("errno")])
        );
    }

    #[test]
    fn declarations_without_init_are_registered_only() {
        let f = &lower_src("void f(int a) { int unused; char buf[8]; }")[0];
        assert!(f.statements.is_empty());
        assert_eq!(f.declared, keys("f", &["a", "buf", "unused"]));
    }
}
