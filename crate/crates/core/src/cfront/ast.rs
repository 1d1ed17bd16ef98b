//! Syntax tree for the supported C subset.

use serde::Serialize;

use super::Span;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum UnaryOp {
    Neg,
    Plus,
    Not,
    BitNot,
    Deref,
    AddrOf,
    PreInc,
    PreDec,
    PostInc,
    PostDec,
    Sizeof,
}

impl UnaryOp {
    pub fn is_increment(self) -> bool {
        matches!(
            self,
            UnaryOp::PreInc | UnaryOp::PreDec | UnaryOp::PostInc | UnaryOp::PostDec
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LitKind {
    Number,
    Str,
    Char,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ExprKind {
    Ident(Ident),
    Literal(LitKind),
    Unary {
        op: UnaryOp,
        operand: Box<Expr>,
    },
    Binary {
        op: String,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Assign {
        op: String,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Ternary {
        cond: Box<Expr>,
        then: Box<Expr>,
        otherwise: Box<Expr>,
    },
    Call {
        callee: Box<Expr>,
        args: Vec<Expr>,
    },
    Index {
        base: Box<Expr>,
        index: Box<Expr>,
    },
    Member {
        base: Box<Expr>,
        field: Ident,
        arrow: bool,
    },
    Cast {
        ty: String,
        operand: Box<Expr>,
    },
    SizeofType(String),
    Comma(Vec<Expr>),
    InitList(Vec<Expr>),
}

impl Expr {
    /// Name of the called function when the callee is a plain identifier.
    pub fn callee_name(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::Call { callee, .. } => match &callee.kind {
                ExprKind::Ident(id) => Some(&id.name),
                _ => None,
            },
            _ => None,
        }
    }

    /// Pre-order walk over this expression and all subexpressions.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Ident(_) | ExprKind::Literal(_) | ExprKind::SizeofType(_) => {}
            ExprKind::Unary { operand, .. } | ExprKind::Cast { operand, .. } => operand.walk(f),
            ExprKind::Binary { lhs, rhs, .. } | ExprKind::Assign { lhs, rhs, .. } => {
                lhs.walk(f);
                rhs.walk(f);
            }
            ExprKind::Ternary { cond, then, otherwise } => {
                cond.walk(f);
                then.walk(f);
                otherwise.walk(f);
            }
            ExprKind::Call { callee, args } => {
                callee.walk(f);
                args.iter().for_each(|a| a.walk(f));
            }
            ExprKind::Index { base, index } => {
                base.walk(f);
                index.walk(f);
            }
            ExprKind::Member { base, .. } => base.walk(f),
            ExprKind::Comma(items) | ExprKind::InitList(items) => items.iter().for_each(|a| a.walk(f)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Declarator {
    pub name: Ident,
    pub pointer: u8,
    pub array: bool,
    pub function: bool,
    pub init: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Declaration {
    pub specifiers: String,
    pub is_typedef: bool,
    pub declarators: Vec<Declarator>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ForInit {
    Expr(Expr),
    Decl(Declaration),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

/// `header` spans cover the keyword through the closing parenthesis of the
/// controlling expression, e.g. `if (uid == 0)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum StmtKind {
    Expr(Expr),
    Decl(Declaration),
    Compound(Vec<Stmt>),
    If {
        cond: Expr,
        header: Span,
        then: Box<Stmt>,
        otherwise: Option<Box<Stmt>>,
    },
    While {
        cond: Expr,
        header: Span,
        body: Box<Stmt>,
    },
    DoWhile {
        body: Box<Stmt>,
        cond: Expr,
        header: Span,
    },
    For {
        init: Option<ForInit>,
        cond: Option<Expr>,
        step: Option<Expr>,
        header: Span,
        body: Box<Stmt>,
    },
    Switch {
        cond: Expr,
        header: Span,
        body: Box<Stmt>,
    },
    /// `case X:` (`Some`) or `default:` (`None`).
    Case(Option<Expr>),
    Label(Ident),
    Goto(Ident),
    Return(Option<Expr>),
    Break,
    Continue,
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Param {
    pub name: Ident,
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionAst {
    pub name: Ident,
    pub return_type: String,
    pub params: Vec<Param>,
    /// Always a `StmtKind::Compound`.
    pub body: Stmt,
    pub span: Span,
    /// First and last source line of the definition.
    pub lines: (u32, u32),
}
