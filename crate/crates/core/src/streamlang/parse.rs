//! Lexer, parser, name resolution and sort inference for the definition
//! language.
//!
//! One item per line: `data` enumerations, `coterm` sort declarations, or
//! definition clauses `name pat* = expr [if cmp | otherwise]`. Comments run
//! from `#` to the end of the line.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use super::ast::*;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{span}: {msg}")]
pub struct ParseError {
    pub msg: String,
    pub span: Span,
}

fn err<T>(msg: impl Into<String>, span: Span) -> Result<T, ParseError> {
    Err(ParseError {
        msg: msg.into(),
        span,
    })
}

// ---------------------------------------------------------------------------
// Lexing

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Eq,
    Colon,
    LParen,
    RParen,
    Comma,
    Pipe,
    Plus,
    Minus,
    Star,
    Cmp(CmpOp),
    Newline,
}

#[derive(Debug, Clone)]
struct Lexed {
    tok: Tok,
    span: Span,
}

fn lex(text: &str) -> Result<Vec<Lexed>, ParseError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = match line.find('#') {
            Some(i) => &line[..i],
            None => line,
        };
        let bytes = line.as_bytes();
        let mut i = 0;
        let mut line_had_tokens = false;
        while i < bytes.len() {
            let span = Span {
                line: lineno + 1,
                col: i + 1,
            };
            let c = bytes[i] as char;
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            line_had_tokens = true;
            let two = if i + 1 < bytes.len() {
                &line[i..i + 2]
            } else {
                ""
            };
            let tok = match two {
                "<=" => Some((Tok::Cmp(CmpOp::Le), 2)),
                ">=" => Some((Tok::Cmp(CmpOp::Ge), 2)),
                "==" => Some((Tok::Cmp(CmpOp::Eq), 2)),
                "!=" => Some((Tok::Cmp(CmpOp::Ne), 2)),
                _ => None,
            };
            let (tok, width) = match tok {
                Some(t) => t,
                None => match c {
                    '=' => (Tok::Eq, 1),
                    ':' => (Tok::Colon, 1),
                    '(' => (Tok::LParen, 1),
                    ')' => (Tok::RParen, 1),
                    ',' => (Tok::Comma, 1),
                    '|' => (Tok::Pipe, 1),
                    '+' => (Tok::Plus, 1),
                    '-' => (Tok::Minus, 1),
                    '*' => (Tok::Star, 1),
                    '<' => (Tok::Cmp(CmpOp::Lt), 1),
                    '>' => (Tok::Cmp(CmpOp::Gt), 1),
                    _ if c.is_ascii_digit() => {
                        let start = i;
                        while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                            i += 1;
                        }
                        let n: i64 = line[start..i]
                            .parse()
                            .map_err(|_| ParseError {
                                msg: "integer literal out of range".into(),
                                span,
                            })?;
                        out.push(Lexed {
                            tok: Tok::Int(n),
                            span,
                        });
                        continue;
                    }
                    _ if c.is_alphabetic() || c == '_' => {
                        let start = i;
                        while i < bytes.len() {
                            let c = bytes[i] as char;
                            if c.is_alphanumeric() || c == '_' || c == '\'' {
                                i += 1;
                            } else {
                                break;
                            }
                        }
                        out.push(Lexed {
                            tok: Tok::Ident(line[start..i].to_string()),
                            span,
                        });
                        continue;
                    }
                    _ => return err(format!("unexpected character `{c}`"), span),
                },
            };
            out.push(Lexed { tok, span });
            i += width;
        }
        if line_had_tokens {
            out.push(Lexed {
                tok: Tok::Newline,
                span: Span {
                    line: lineno + 1,
                    col: line.len() + 1,
                },
            });
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Raw syntax, before name resolution

#[derive(Debug, Clone)]
enum RawPat {
    Ident(String, Span),
    Cons(Box<RawPat>, Box<RawPat>, Span),
    App(String, Vec<RawPat>, Span),
}

impl RawPat {
    fn span(&self) -> Span {
        match self {
            RawPat::Ident(_, s) | RawPat::Cons(_, _, s) | RawPat::App(_, _, s) => *s,
        }
    }
}

#[derive(Debug, Clone)]
enum RawExpr {
    Ident(String, Span),
    Int(i64, Span),
    Cons(Box<RawExpr>, Box<RawExpr>, Span),
    App(String, Vec<RawExpr>, Span),
    Arith(ArithOp, Box<RawExpr>, Box<RawExpr>, Span),
}

impl RawExpr {
    fn span(&self) -> Span {
        match self {
            RawExpr::Ident(_, s)
            | RawExpr::Int(_, s)
            | RawExpr::Cons(_, _, s)
            | RawExpr::App(_, _, s)
            | RawExpr::Arith(_, _, _, s) => *s,
        }
    }
}

#[derive(Debug, Clone)]
enum RawGuard {
    Always,
    Otherwise,
    If(CmpOp, RawExpr, RawExpr),
}

#[derive(Debug, Clone)]
struct RawClause {
    name: String,
    patterns: Vec<RawPat>,
    rhs: RawExpr,
    guard: RawGuard,
    span: Span,
}

struct RawCtorDecl {
    name: String,
    arg_names: Vec<String>,
    span: Span,
}

#[derive(Default)]
struct RawSystem {
    enums: Vec<(String, Vec<String>, Span)>,
    coterm_sorts: Vec<(String, Vec<RawCtorDecl>)>,
    clauses: Vec<RawClause>,
}

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|l| &l.tok)
    }

    fn span(&self) -> Span {
        self.toks
            .get(self.pos.min(self.toks.len().saturating_sub(1)))
            .map(|l| l.span)
            .unwrap_or_default()
    }

    fn next(&mut self) -> Option<Lexed> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<Span, ParseError> {
        let span = self.span();
        match self.next() {
            Some(l) if &l.tok == want => Ok(l.span),
            Some(l) => err(format!("expected {what}"), l.span),
            None => err(format!("expected {what} at end of input"), span),
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Span), ParseError> {
        let span = self.span();
        match self.next() {
            Some(Lexed {
                tok: Tok::Ident(s),
                span,
            }) => Ok((s, span)),
            Some(l) => err(format!("expected {what}"), l.span),
            None => err(format!("expected {what} at end of input"), span),
        }
    }

    fn at_line_end(&self) -> bool {
        matches!(self.peek(), None | Some(Tok::Newline))
    }

    fn end_line(&mut self) -> Result<(), ParseError> {
        match self.next() {
            None | Some(Lexed { tok: Tok::Newline, .. }) => Ok(()),
            Some(l) => err("expected end of line", l.span),
        }
    }

    fn parse_system(&mut self) -> Result<RawSystem, ParseError> {
        let mut sys = RawSystem::default();
        loop {
            while matches!(self.peek(), Some(Tok::Newline)) {
                self.pos += 1;
            }
            if self.peek().is_none() {
                return Ok(sys);
            }
            let (head, head_span) = self.ident("an item")?;
            match head.as_str() {
                "data" => {
                    let (name, span) = self.ident("an enumeration name")?;
                    self.expect(&Tok::Eq, "`=`")?;
                    let mut consts = vec![self.ident("an enumeration constant")?.0];
                    while matches!(self.peek(), Some(Tok::Pipe)) {
                        self.pos += 1;
                        consts.push(self.ident("an enumeration constant")?.0);
                    }
                    self.end_line()?;
                    sys.enums.push((name, consts, span));
                }
                "coterm" => {
                    let (name, _) = self.ident("a coterm sort name")?;
                    self.expect(&Tok::Eq, "`=`")?;
                    let mut ctors = vec![self.ctor_decl()?];
                    while matches!(self.peek(), Some(Tok::Pipe)) {
                        self.pos += 1;
                        ctors.push(self.ctor_decl()?);
                    }
                    self.end_line()?;
                    sys.coterm_sorts.push((name, ctors));
                }
                _ => {
                    let clause = self.def_clause(head, head_span)?;
                    sys.clauses.push(clause);
                }
            }
        }
    }

    fn ctor_decl(&mut self) -> Result<RawCtorDecl, ParseError> {
        let (name, span) = self.ident("a constructor name")?;
        let mut arg_names = Vec::new();
        if matches!(self.peek(), Some(Tok::LParen)) {
            self.pos += 1;
            arg_names.push(self.ident("a sort name")?.0);
            while matches!(self.peek(), Some(Tok::Comma)) {
                self.pos += 1;
                arg_names.push(self.ident("a sort name")?.0);
            }
            self.expect(&Tok::RParen, "`)`")?;
        }
        Ok(RawCtorDecl {
            name,
            arg_names,
            span,
        })
    }

    fn def_clause(&mut self, name: String, span: Span) -> Result<RawClause, ParseError> {
        let mut patterns = Vec::new();
        while !matches!(self.peek(), Some(Tok::Eq)) {
            if self.at_line_end() {
                return err("expected `=` in definition", self.span());
            }
            patterns.push(self.pattern_atom()?);
        }
        self.expect(&Tok::Eq, "`=`")?;
        if self.at_line_end() {
            return err("expected an expression", self.span());
        }
        let rhs = self.expr()?;
        let guard = if let Some(Tok::Ident(w)) = self.peek() {
            match w.as_str() {
                "if" => {
                    self.pos += 1;
                    let lhs = self.expr()?;
                    let op = match self.next() {
                        Some(Lexed {
                            tok: Tok::Cmp(op), ..
                        }) => op,
                        Some(l) => return err("expected a comparison operator", l.span),
                        None => return err("expected a comparison operator", span),
                    };
                    let rhs2 = self.expr()?;
                    RawGuard::If(op, lhs, rhs2)
                }
                "otherwise" => {
                    self.pos += 1;
                    RawGuard::Otherwise
                }
                _ => return err(format!("unexpected `{w}` after expression"), self.span()),
            }
        } else {
            RawGuard::Always
        };
        self.end_line()?;
        Ok(RawClause {
            name,
            patterns,
            rhs,
            guard,
            span,
        })
    }

    // pattern_atom: an identifier or a parenthesized pattern
    fn pattern_atom(&mut self) -> Result<RawPat, ParseError> {
        let span = self.span();
        match self.next() {
            Some(Lexed {
                tok: Tok::Ident(s),
                span,
            }) => Ok(RawPat::Ident(s, span)),
            Some(Lexed {
                tok: Tok::LParen, ..
            }) => {
                let p = self.pattern()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(p)
            }
            Some(l) => err("expected a pattern", l.span),
            None => err("expected a pattern at end of input", span),
        }
    }

    // pattern: constructor application or cons chain
    fn pattern(&mut self) -> Result<RawPat, ParseError> {
        let first = match self.peek() {
            Some(Tok::Ident(_)) => {
                let (name, span) = self.ident("a pattern")?;
                // Application form `c p1 ... pk` inside parentheses.
                let mut args = Vec::new();
                while matches!(self.peek(), Some(Tok::Ident(_)) | Some(Tok::LParen)) {
                    args.push(self.pattern_atom()?);
                }
                if args.is_empty() {
                    RawPat::Ident(name, span)
                } else {
                    RawPat::App(name, args, span)
                }
            }
            _ => self.pattern_atom()?,
        };
        if matches!(self.peek(), Some(Tok::Colon)) {
            let span = self.span();
            self.pos += 1;
            let rest = self.pattern()?;
            return Ok(RawPat::Cons(Box::new(first), Box::new(rest), span));
        }
        Ok(first)
    }

    fn expr(&mut self) -> Result<RawExpr, ParseError> {
        let head = self.arith_expr()?;
        if matches!(self.peek(), Some(Tok::Colon)) {
            let span = self.span();
            self.pos += 1;
            let rest = self.expr()?;
            return Ok(RawExpr::Cons(Box::new(head), Box::new(rest), span));
        }
        Ok(head)
    }

    fn arith_expr(&mut self) -> Result<RawExpr, ParseError> {
        let mut acc = self.mul_expr()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => ArithOp::Add,
                Some(Tok::Minus) => ArithOp::Sub,
                _ => return Ok(acc),
            };
            let span = self.span();
            self.pos += 1;
            let rhs = self.mul_expr()?;
            acc = RawExpr::Arith(op, Box::new(acc), Box::new(rhs), span);
        }
    }

    fn mul_expr(&mut self) -> Result<RawExpr, ParseError> {
        let mut acc = self.app_expr()?;
        while matches!(self.peek(), Some(Tok::Star)) {
            let span = self.span();
            self.pos += 1;
            let rhs = self.app_expr()?;
            acc = RawExpr::Arith(ArithOp::Mul, Box::new(acc), Box::new(rhs), span);
        }
        Ok(acc)
    }

    fn app_expr(&mut self) -> Result<RawExpr, ParseError> {
        if let Some(Tok::Ident(_)) = self.peek() {
            let (name, span) = self.ident("an identifier")?;
            let mut args = Vec::new();
            while self.starts_atom() {
                args.push(self.atom()?);
            }
            if args.is_empty() {
                return Ok(RawExpr::Ident(name, span));
            }
            return Ok(RawExpr::App(name, args, span));
        }
        self.atom()
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            // `if` and `otherwise` end the expression and start the guard.
            Some(Tok::Ident(w)) => w != "if" && w != "otherwise",
            Some(Tok::Int(_)) | Some(Tok::LParen) => true,
            _ => false,
        }
    }

    fn atom(&mut self) -> Result<RawExpr, ParseError> {
        let span = self.span();
        match self.next() {
            Some(Lexed {
                tok: Tok::Ident(s),
                span,
            }) => Ok(RawExpr::Ident(s, span)),
            Some(Lexed {
                tok: Tok::Int(n),
                span,
            }) => Ok(RawExpr::Int(n, span)),
            Some(Lexed {
                tok: Tok::Minus, ..
            }) => match self.next() {
                Some(Lexed {
                    tok: Tok::Int(n),
                    span,
                }) => Ok(RawExpr::Int(-n, span)),
                _ => err("expected an integer after `-`", span),
            },
            Some(Lexed {
                tok: Tok::LParen, ..
            }) => {
                let e = self.expr()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some(l) => err("expected an expression", l.span),
            None => err("expected an expression at end of input", span),
        }
    }
}

// ---------------------------------------------------------------------------
// Name resolution and sort inference

struct Names {
    enums: BTreeMap<String, Vec<String>>,
    enum_of_const: HashMap<String, String>,
    ctor_decls: HashMap<String, CtorDecl>,
    coterm_sorts: BTreeMap<String, Vec<CtorDecl>>,
    def_arity: HashMap<String, usize>,
}

/// Sort inference over a global slot table. Sorts are atomic, so a
/// union-find with an optional resolved sort per class suffices.
struct Slots {
    parent: Vec<usize>,
    sort: Vec<Option<Sort>>,
}

impl Slots {
    fn new() -> Slots {
        Slots {
            parent: Vec::new(),
            sort: Vec::new(),
        }
    }

    fn fresh(&mut self) -> usize {
        self.parent.push(self.parent.len());
        self.sort.push(None);
        self.parent.len() - 1
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn assign(&mut self, slot: usize, sort: Sort, span: Span) -> Result<(), ParseError> {
        let r = self.find(slot);
        match &self.sort[r] {
            None => {
                self.sort[r] = Some(sort);
                Ok(())
            }
            Some(old) if *old == sort => Ok(()),
            Some(old) => err(format!("sort mismatch: `{old}` vs `{sort}`"), span),
        }
    }

    fn union(&mut self, a: usize, b: usize, span: Span) -> Result<(), ParseError> {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return Ok(());
        }
        let merged = match (&self.sort[ra], &self.sort[rb]) {
            (Some(x), Some(y)) if x != y => {
                return err(format!("sort mismatch: `{x}` vs `{y}`"), span)
            }
            (Some(x), _) => Some(x.clone()),
            (_, y) => y.clone(),
        };
        self.parent[ra] = rb;
        self.sort[rb] = merged;
        Ok(())
    }

    fn resolved(&mut self, slot: usize) -> Option<Sort> {
        let r = self.find(slot);
        self.sort[r].clone()
    }
}

struct DefSlots {
    params: Vec<usize>,
    result: usize,
}

struct Resolver {
    names: Names,
    slots: Slots,
    def_slots: HashMap<String, DefSlots>,
}

impl Resolver {
    fn reserved(name: &str) -> bool {
        matches!(
            name,
            "hd" | "tl" | "if" | "otherwise" | "data" | "coterm" | "int" | "stream"
        )
    }

    fn global_kind(&self, name: &str) -> Option<&'static str> {
        if self.names.def_arity.contains_key(name) {
            Some("definition")
        } else if self.names.ctor_decls.contains_key(name) {
            Some("constructor")
        } else if self.names.enum_of_const.contains_key(name) {
            Some("enumeration constant")
        } else {
            None
        }
    }

    fn resolve_pattern(
        &mut self,
        raw: &RawPat,
        expected: usize,
        vars: &mut HashMap<String, usize>,
    ) -> Result<Pattern, ParseError> {
        match raw {
            RawPat::Ident(name, span) => {
                if let Some(decl) = self.names.ctor_decls.get(name).cloned() {
                    if !decl.args.is_empty() {
                        return err(
                            format!(
                                "constructor `{name}` expects {} arguments in pattern",
                                decl.args.len()
                            ),
                            *span,
                        );
                    }
                    self.slots
                        .assign(expected, Sort::User(decl.result.clone()), *span)?;
                    return Ok(Pattern::Ctor(name.clone(), Vec::new(), *span));
                }
                if Self::reserved(name) {
                    return err(format!("`{name}` is reserved"), *span);
                }
                if let Some(kind) = self.global_kind(name) {
                    return err(
                        format!("pattern variable `{name}` collides with a {kind}"),
                        *span,
                    );
                }
                if vars.contains_key(name) {
                    return err(format!("nonlinear pattern: `{name}` bound twice"), *span);
                }
                vars.insert(name.clone(), expected);
                Ok(Pattern::Var(name.clone(), *span))
            }
            RawPat::Cons(h, t, span) => {
                self.slots.assign(expected, Sort::Stream, *span)?;
                let hs = self.slots.fresh();
                self.slots.assign(hs, Sort::Int, *span)?;
                let ts = self.slots.fresh();
                self.slots.assign(ts, Sort::Stream, *span)?;
                let hp = self.resolve_pattern(h, hs, vars)?;
                let tp = self.resolve_pattern(t, ts, vars)?;
                Ok(Pattern::Cons(Box::new(hp), Box::new(tp), *span))
            }
            RawPat::App(name, args, span) => {
                let decl = match self.names.ctor_decls.get(name).cloned() {
                    Some(d) => d,
                    None => return err(format!("unknown constructor `{name}`"), *span),
                };
                if args.len() != decl.args.len() {
                    return err(
                        format!(
                            "constructor `{name}` expects {} arguments, pattern has {}",
                            decl.args.len(),
                            args.len()
                        ),
                        *span,
                    );
                }
                self.slots
                    .assign(expected, Sort::User(decl.result.clone()), *span)?;
                let mut out = Vec::new();
                for (a, s) in args.iter().zip(&decl.args) {
                    let slot = self.slots.fresh();
                    self.slots.assign(slot, s.clone(), a.span())?;
                    out.push(self.resolve_pattern(a, slot, vars)?);
                }
                Ok(Pattern::Ctor(name.clone(), out, *span))
            }
        }
    }

    fn resolve_expr(
        &mut self,
        raw: &RawExpr,
        expected: usize,
        vars: &HashMap<String, usize>,
    ) -> Result<Expr, ParseError> {
        match raw {
            RawExpr::Int(n, span) => {
                self.slots.assign(expected, Sort::Int, *span)?;
                Ok(Expr::Int(*n, *span))
            }
            RawExpr::Ident(name, span) => {
                if let Some(slot) = vars.get(name) {
                    self.slots.union(expected, *slot, *span)?;
                    return Ok(Expr::Var(name.clone(), *span));
                }
                if let Some(e) = self.names.enum_of_const.get(name).cloned() {
                    self.slots.assign(expected, Sort::Enum(e), *span)?;
                    return Ok(Expr::EnumConst(name.clone(), *span));
                }
                if let Some(decl) = self.names.ctor_decls.get(name).cloned() {
                    if !decl.args.is_empty() {
                        return err(
                            format!("constructor `{name}` applied to no arguments"),
                            *span,
                        );
                    }
                    self.slots
                        .assign(expected, Sort::User(decl.result.clone()), *span)?;
                    return Ok(Expr::Ctor(name.clone(), Vec::new(), *span));
                }
                if self.names.def_arity.get(name) == Some(&0) {
                    let d = &self.def_slots[name];
                    let result = d.result;
                    self.slots.union(expected, result, *span)?;
                    return Ok(Expr::Call(name.clone(), Vec::new(), *span));
                }
                if self.names.def_arity.contains_key(name) {
                    return err(format!("definition `{name}` needs arguments"), *span);
                }
                err(format!("unknown identifier `{name}`"), *span)
            }
            RawExpr::Cons(h, t, span) => {
                self.slots.assign(expected, Sort::Stream, *span)?;
                let hs = self.slots.fresh();
                self.slots.assign(hs, Sort::Int, *span)?;
                let ts = self.slots.fresh();
                self.slots.assign(ts, Sort::Stream, *span)?;
                let he = self.resolve_expr(h, hs, vars)?;
                let te = self.resolve_expr(t, ts, vars)?;
                Ok(Expr::Cons(Box::new(he), Box::new(te), *span))
            }
            RawExpr::Arith(op, a, b, span) => {
                self.slots.assign(expected, Sort::Int, *span)?;
                let sa = self.slots.fresh();
                self.slots.assign(sa, Sort::Int, a.span())?;
                let sb = self.slots.fresh();
                self.slots.assign(sb, Sort::Int, b.span())?;
                let ea = self.resolve_expr(a, sa, vars)?;
                let eb = self.resolve_expr(b, sb, vars)?;
                Ok(Expr::Arith(*op, Box::new(ea), Box::new(eb), *span))
            }
            RawExpr::App(name, args, span) => match name.as_str() {
                "hd" | "tl" => {
                    if args.len() != 1 {
                        return err(format!("`{name}` takes one argument"), *span);
                    }
                    let s = self.slots.fresh();
                    self.slots.assign(s, Sort::Stream, *span)?;
                    let inner = self.resolve_expr(&args[0], s, vars)?;
                    if name == "hd" {
                        self.slots.assign(expected, Sort::Int, *span)?;
                        Ok(Expr::Hd(Box::new(inner), *span))
                    } else {
                        self.slots.assign(expected, Sort::Stream, *span)?;
                        Ok(Expr::Tl(Box::new(inner), *span))
                    }
                }
                _ => {
                    if vars.contains_key(name.as_str()) {
                        return err(format!("variable `{name}` cannot be applied"), *span);
                    }
                    if let Some(decl) = self.names.ctor_decls.get(name).cloned() {
                        if args.len() != decl.args.len() {
                            return err(
                                format!(
                                    "constructor `{name}` expects {} arguments, got {}",
                                    decl.args.len(),
                                    args.len()
                                ),
                                *span,
                            );
                        }
                        self.slots
                            .assign(expected, Sort::User(decl.result.clone()), *span)?;
                        let mut out = Vec::new();
                        for (a, s) in args.iter().zip(&decl.args) {
                            let slot = self.slots.fresh();
                            self.slots.assign(slot, s.clone(), a.span())?;
                            out.push(self.resolve_expr(a, slot, vars)?);
                        }
                        return Ok(Expr::Ctor(name.clone(), out, *span));
                    }
                    let arity = match self.names.def_arity.get(name) {
                        Some(a) => *a,
                        None => return err(format!("unknown identifier `{name}`"), *span),
                    };
                    if args.len() != arity {
                        return err(
                            format!("`{name}` expects {arity} arguments, got {}", args.len()),
                            *span,
                        );
                    }
                    let (param_slots, result) = {
                        let d = &self.def_slots[name];
                        (d.params.clone(), d.result)
                    };
                    self.slots.union(expected, result, *span)?;
                    let mut out = Vec::new();
                    for (a, pslot) in args.iter().zip(param_slots) {
                        let slot = self.slots.fresh();
                        self.slots.union(slot, pslot, a.span())?;
                        out.push(self.resolve_expr(a, slot, vars)?);
                    }
                    Ok(Expr::Call(name.clone(), out, *span))
                }
            },
        }
    }

    /// Guard expressions may mention only pattern-bound variables and data
    /// literals: condition functions depend only on the patterns.
    fn resolve_guard_expr(
        &mut self,
        raw: &RawExpr,
        expected: usize,
        vars: &HashMap<String, usize>,
    ) -> Result<Expr, ParseError> {
        match raw {
            RawExpr::Ident(name, span) => {
                if vars.contains_key(name) || self.names.enum_of_const.contains_key(name) {
                    self.resolve_expr(raw, expected, vars)
                } else {
                    err(
                        format!("guard may only mention pattern variables, not `{name}`"),
                        *span,
                    )
                }
            }
            RawExpr::Int(..) => self.resolve_expr(raw, expected, vars),
            RawExpr::Arith(op, a, b, span) => {
                self.slots.assign(expected, Sort::Int, *span)?;
                let sa = self.slots.fresh();
                self.slots.assign(sa, Sort::Int, a.span())?;
                let sb = self.slots.fresh();
                self.slots.assign(sb, Sort::Int, b.span())?;
                let ea = self.resolve_guard_expr(a, sa, vars)?;
                let eb = self.resolve_guard_expr(b, sb, vars)?;
                Ok(Expr::Arith(*op, Box::new(ea), Box::new(eb), *span))
            }
            RawExpr::Cons(_, _, span) | RawExpr::App(_, _, span) => err(
                "guards are data comparisons over pattern variables",
                *span,
            ),
        }
    }
}

/// Parses, resolves and sort-checks a definition system.
pub fn parse_defs(text: &str) -> Result<EquationSystem, ParseError> {
    let toks = lex(text)?;
    let mut parser = Parser { toks, pos: 0 };
    let raw = parser.parse_system()?;

    // Collect declarations.
    let mut enums = BTreeMap::new();
    let mut enum_of_const = HashMap::new();
    for (name, consts, span) in &raw.enums {
        if enums.insert(name.clone(), consts.clone()).is_some() {
            return err(format!("duplicate enumeration `{name}`"), *span);
        }
        for c in consts {
            if enum_of_const.insert(c.clone(), name.clone()).is_some() {
                return err(format!("duplicate enumeration constant `{c}`"), *span);
            }
        }
    }
    let declared_sorts: Vec<String> = raw.coterm_sorts.iter().map(|(n, _)| n.clone()).collect();
    let mut ctor_decls = HashMap::new();
    let mut coterm_sorts = BTreeMap::new();
    for (sort_name, ctors) in &raw.coterm_sorts {
        let mut decls = Vec::new();
        for c in ctors {
            let args = c
                .arg_names
                .iter()
                .map(|a| {
                    if a == "int" {
                        Ok(Sort::Int)
                    } else if enums.contains_key(a) {
                        Ok(Sort::Enum(a.clone()))
                    } else if a == "stream" {
                        Ok(Sort::Stream)
                    } else if declared_sorts.contains(a) {
                        Ok(Sort::User(a.clone()))
                    } else {
                        err(format!("unknown sort `{a}`"), c.span)
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            let decl = CtorDecl {
                name: c.name.clone(),
                args,
                result: sort_name.clone(),
                span: c.span,
            };
            if ctor_decls.insert(c.name.clone(), decl.clone()).is_some() {
                return err(format!("duplicate constructor `{}`", c.name), c.span);
            }
            decls.push(decl);
        }
        if coterm_sorts.insert(sort_name.clone(), decls).is_some() {
            return err(
                format!("duplicate coterm sort `{sort_name}`"),
                Span::default(),
            );
        }
    }

    // Group clauses per definition; arities must agree.
    let mut def_order: Vec<String> = Vec::new();
    let mut grouped: HashMap<String, Vec<RawClause>> = HashMap::new();
    let mut def_arity = HashMap::new();
    for clause in raw.clauses {
        let name = clause.name.clone();
        if Resolver::reserved(&name)
            || ctor_decls.contains_key(&name)
            || enum_of_const.contains_key(&name)
        {
            return err(format!("`{name}` cannot be defined"), clause.span);
        }
        match def_arity.get(&name) {
            None => {
                def_arity.insert(name.clone(), clause.patterns.len());
                def_order.push(name.clone());
            }
            Some(a) if *a == clause.patterns.len() => {}
            Some(a) => {
                return err(
                    format!("clauses of `{name}` disagree on arity ({a} vs {})",
                        clause.patterns.len()),
                    clause.span,
                )
            }
        }
        grouped.entry(name).or_default().push(clause);
    }

    let names = Names {
        enums,
        enum_of_const,
        ctor_decls,
        coterm_sorts,
        def_arity,
    };
    let mut resolver = Resolver {
        names,
        slots: Slots::new(),
        def_slots: HashMap::new(),
    };
    for name in &def_order {
        let params = (0..resolver.names.def_arity[name])
            .map(|_| resolver.slots.fresh())
            .collect();
        let result = resolver.slots.fresh();
        resolver
            .def_slots
            .insert(name.clone(), DefSlots { params, result });
    }

    // Resolve clause by clause.
    let mut defs: Vec<(String, Vec<Clause>)> =
        def_order.iter().map(|n| (n.clone(), Vec::new())).collect();
    for (name, clauses) in defs.iter_mut() {
        for clause in &grouped[name.as_str()] {
            let mut vars: HashMap<String, usize> = HashMap::new();
            let (param_slots, result_slot) = {
                let d = &resolver.def_slots[name.as_str()];
                (d.params.clone(), d.result)
            };
            let mut patterns = Vec::new();
            for (p, slot) in clause.patterns.iter().zip(param_slots) {
                patterns.push(resolver.resolve_pattern(p, slot, &mut vars)?);
            }
            let rhs = resolver.resolve_expr(&clause.rhs, result_slot, &vars)?;
            let guard = match &clause.guard {
                RawGuard::Always => Guard::Always,
                RawGuard::Otherwise => Guard::Otherwise,
                RawGuard::If(op, a, b) => {
                    let slot = resolver.slots.fresh();
                    let ea = resolver.resolve_guard_expr(a, slot, &vars)?;
                    let eb = resolver.resolve_guard_expr(b, slot, &vars)?;
                    if let Some(sort) = resolver.slots.resolved(slot) {
                        let order_ok = sort == Sort::Int || matches!(op, CmpOp::Eq | CmpOp::Ne);
                        if !order_ok {
                            return err(
                                format!("ordering comparison on sort `{sort}`"),
                                clause.span,
                            );
                        }
                    }
                    Guard::If(*op, ea, eb)
                }
            };
            clauses.push(Clause {
                patterns,
                rhs,
                guard,
                span: clause.span,
            });
        }
    }

    // Slots nothing constrained (e.g. a parameter that is only passed
    // through) default to the stream sort.
    let mut out_defs = Vec::new();
    for (name, clauses) in defs {
        let (param_slots, result_slot) = {
            let d = &resolver.def_slots[&name];
            (d.params.clone(), d.result)
        };
        let params = param_slots
            .iter()
            .map(|slot| resolver.slots.resolved(*slot).unwrap_or(Sort::Stream))
            .collect();
        let result = resolver
            .slots
            .resolved(result_slot)
            .unwrap_or(Sort::Stream);
        out_defs.push(Definition {
            name,
            clauses,
            params,
            result,
        });
    }

    Ok(EquationSystem {
        enums: resolver.names.enums,
        coterm_sorts: resolver.names.coterm_sorts,
        defs: out_defs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_even() {
        let sys = parse_defs("even (x : y : t) = x : even t\n").unwrap();
        assert_eq!(sys.defs.len(), 1);
        let d = &sys.defs[0];
        assert_eq!(d.name, "even");
        assert_eq!(d.params, vec![Sort::Stream]);
        assert_eq!(d.result, Sort::Stream);
        // pattern depth 2: the tail variable sits under two constructors
        let binds = d.clauses[0].patterns[0].bindings();
        assert_eq!(binds, vec![("x", 1), ("y", 2), ("t", 2)]);
    }

    #[test]
    fn empty_input_is_empty_system() {
        let sys = parse_defs("").unwrap();
        assert!(sys.defs.is_empty());
    }

    #[test]
    fn incomplete_expression_is_a_syntax_error() {
        let e = parse_defs("f (x : t) = x :").unwrap_err();
        assert!(e.msg.contains("expected an expression"), "{e}");
    }

    #[test]
    fn nonlinear_pattern_rejected() {
        let e = parse_defs("f (x : x) = x : f x\n").unwrap_err();
        assert!(e.msg.contains("nonlinear"), "{e}");
    }

    #[test]
    fn unbound_variable_rejected() {
        let e = parse_defs("f (x : t) = y : f t\n").unwrap_err();
        assert!(e.msg.contains("unknown identifier `y`"), "{e}");
    }

    #[test]
    fn arity_mismatch_rejected() {
        let e = parse_defs("f (x : t) = x : f t t\n").unwrap_err();
        assert!(e.msg.contains("expects 1 arguments, got 2"), "{e}");
    }

    #[test]
    fn guard_must_use_pattern_vars() {
        let e = parse_defs("f (x : t) = x : f t if hd t <= x\n").unwrap_err();
        assert!(e.msg.contains("guard"), "{e}");
    }

    #[test]
    fn user_coterm_sorts_parse() {
        let src = "\
data sym = vx | vy
coterm term = var(sym) | app(term, term) | lam(sym, term)
copy (var v) = var v
copy (app s1 s2) = app (copy s1) (copy s2)
copy (lam v s) = lam v (copy s)
";
        let sys = parse_defs(src).unwrap();
        assert_eq!(sys.defs.len(), 1);
        let d = sys.def("copy").unwrap();
        assert_eq!(d.params, vec![Sort::User("term".into())]);
        assert_eq!(d.result, Sort::User("term".into()));
    }

    #[test]
    fn guards_and_comparisons() {
        let src = "\
merge (x : t1) (y : t2) = x : merge t1 (y : t2) if x <= y
merge (x : t1) (y : t2) = y : merge (x : t1) t2 otherwise
";
        let sys = parse_defs(src).unwrap();
        let d = sys.def("merge").unwrap();
        assert_eq!(d.clauses.len(), 2);
        assert!(matches!(d.clauses[0].guard, Guard::If(CmpOp::Le, ..)));
        assert!(matches!(d.clauses[1].guard, Guard::Otherwise));
    }
}
