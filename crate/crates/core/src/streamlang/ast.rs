//! Syntax trees for the corecursive definition language.

use std::collections::BTreeMap;
use std::fmt;

/// A source location, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Sorts are integers, declared enumerations, integer streams, or declared
/// coterm sorts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Int,
    Enum(String),
    Stream,
    User(String),
}

impl Sort {
    pub fn is_data(&self) -> bool {
        matches!(self, Sort::Int | Sort::Enum(_))
    }

    pub fn is_coterm(&self) -> bool {
        matches!(self, Sort::Stream | Sort::User(_))
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Int => write!(f, "int"),
            Sort::Enum(n) => write!(f, "{n}"),
            Sort::Stream => write!(f, "stream"),
            Sort::User(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CtorDecl {
    pub name: String,
    pub args: Vec<Sort>,
    pub result: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pattern {
    Var(String, Span),
    /// Stream pattern `h : t`.
    Cons(Box<Pattern>, Box<Pattern>, Span),
    /// Declared-constructor pattern `c p1 ... pk`.
    Ctor(String, Vec<Pattern>, Span),
}

impl Pattern {
    pub fn span(&self) -> Span {
        match self {
            Pattern::Var(_, s) | Pattern::Cons(_, _, s) | Pattern::Ctor(_, _, s) => *s,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Pattern::Var(..))
    }

    /// Variables bound by the pattern with their constructor depth.
    pub fn bindings(&self) -> Vec<(&str, usize)> {
        fn go<'a>(p: &'a Pattern, depth: usize, out: &mut Vec<(&'a str, usize)>) {
            match p {
                Pattern::Var(v, _) => out.push((v, depth)),
                Pattern::Cons(h, t, _) => {
                    go(h, depth + 1, out);
                    go(t, depth + 1, out);
                }
                Pattern::Ctor(_, args, _) => {
                    for a in args {
                        go(a, depth + 1, out);
                    }
                }
            }
        }
        let mut out = Vec::new();
        go(self, 0, &mut out);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Le,
    Lt,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CmpOp::Le => "<=",
            CmpOp::Lt => "<",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    /// Pattern-bound variable.
    Var(String, Span),
    Int(i64, Span),
    /// Enumeration constant.
    EnumConst(String, Span),
    /// Stream cons `h : t`.
    Cons(Box<Expr>, Box<Expr>, Span),
    /// Declared-constructor application.
    Ctor(String, Vec<Expr>, Span),
    /// Call of a defined name.
    Call(String, Vec<Expr>, Span),
    Hd(Box<Expr>, Span),
    Tl(Box<Expr>, Span),
    Arith(ArithOp, Box<Expr>, Box<Expr>, Span),
}

impl Expr {
    pub fn span(&self) -> Span {
        match self {
            Expr::Var(_, s)
            | Expr::Int(_, s)
            | Expr::EnumConst(_, s)
            | Expr::Cons(_, _, s)
            | Expr::Ctor(_, _, s)
            | Expr::Call(_, _, s)
            | Expr::Hd(_, s)
            | Expr::Tl(_, s)
            | Expr::Arith(_, _, _, s) => *s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Guard {
    Always,
    /// Explicit default clause.
    Otherwise,
    If(CmpOp, Expr, Expr),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub patterns: Vec<Pattern>,
    pub rhs: Expr,
    pub guard: Guard,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Definition {
    pub name: String,
    pub clauses: Vec<Clause>,
    /// Inferred parameter sorts.
    pub params: Vec<Sort>,
    /// Inferred result sort.
    pub result: Sort,
}

impl Definition {
    pub fn arity(&self) -> usize {
        self.params.len()
    }

    /// Indices of parameters of coterm sort, the arguments production
    /// functions range over.
    pub fn coterm_params(&self) -> Vec<usize> {
        self.params
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_coterm())
            .map(|(i, _)| i)
            .collect()
    }
}

/// A resolved, sort-checked system of corecursive definitions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EquationSystem {
    /// Enumeration sorts and their constants.
    pub enums: BTreeMap<String, Vec<String>>,
    /// Declared coterm sorts and their constructors.
    pub coterm_sorts: BTreeMap<String, Vec<CtorDecl>>,
    /// Definitions in source order.
    pub defs: Vec<Definition>,
}

impl EquationSystem {
    pub fn def(&self, name: &str) -> Option<&Definition> {
        self.defs.iter().find(|d| d.name == name)
    }

    pub fn ctor_decl(&self, name: &str) -> Option<&CtorDecl> {
        self.coterm_sorts
            .values()
            .flat_map(|cs| cs.iter())
            .find(|c| c.name == name)
    }

    pub fn enum_of_const(&self, name: &str) -> Option<&str> {
        self.enums
            .iter()
            .find(|(_, consts)| consts.iter().any(|c| c == name))
            .map(|(e, _)| e.as_str())
    }
}
