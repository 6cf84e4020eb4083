//! Whole-system Kleene iteration on approximants.
//!
//! Level 0 of every definition is bottom; level k+1 evaluates clause bodies
//! with every defined name interpreted at level k. Matching a pattern
//! against bottom, demanding a data value that is bottom, or an undecidable
//! guard all yield bottom for the node at that level. Approximants are
//! nondecreasing in the level, and a position never changes once defined.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use thiserror::Error;

use crate::coterm::{Coterm, CotermError, MemoBudget};
use crate::signature::{CtorTag, Signature};

use super::ast::*;

/// A partial value: a finite tree whose leaves may be bottom. Subtrees are
/// reference-counted so that clones during evaluation are cheap.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Val {
    Bot,
    Int(i64),
    Sym(Rc<str>),
    Node(Rc<str>, Rc<[Val]>),
}

impl Val {
    pub fn node(tag: &str, kids: Vec<Val>) -> Val {
        Val::Node(Rc::from(tag), Rc::from(kids))
    }

    pub fn sym(name: &str) -> Val {
        Val::Sym(Rc::from(name))
    }

    pub fn is_bot(&self) -> bool {
        matches!(self, Val::Bot)
    }

    /// Pointwise information order on partial values.
    pub fn leq(&self, other: &Val) -> bool {
        match (self, other) {
            (Val::Bot, _) => true,
            (Val::Int(a), Val::Int(b)) => a == b,
            (Val::Sym(a), Val::Sym(b)) => a == b,
            (Val::Node(c, xs), Val::Node(d, ys)) => {
                c == d && xs.len() == ys.len() && xs.iter().zip(ys.iter()).all(|(x, y)| x.leq(y))
            }
            _ => false,
        }
    }
}

impl fmt::Display for Val {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Val::Bot => write!(f, "_|_"),
            Val::Int(n) => write!(f, "{n}"),
            Val::Sym(s) => write!(f, "{s}"),
            Val::Node(c, args) => {
                write!(f, "{c}")?;
                if !args.is_empty() {
                    write!(f, "(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{a}")?;
                    }
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("evaluator memo cap of {cap} entries exceeded")]
    MemoCapExceeded { cap: usize },
    #[error("insufficient iterations: `{name}` still has bottoms after {cap} levels (partial: {partial})")]
    InsufficientIterations {
        name: String,
        cap: usize,
        partial: Val,
    },
    #[error("`{0}` is not defined")]
    UnknownDefinition(String),
    #[error("`{name}` does not have a stream result")]
    NotAStream { name: String },
    #[error("evaluator invariant broken: {0}")]
    Internal(String),
}

enum MatchOut {
    Yes,
    No,
    Undecided,
}

pub struct Evaluator {
    sys: Rc<EquationSystem>,
    memo: HashMap<(usize, String, Vec<Val>), Val>,
    memo_cap: Option<usize>,
}

impl Evaluator {
    pub fn new(sys: Rc<EquationSystem>) -> Evaluator {
        Evaluator {
            sys,
            memo: HashMap::new(),
            memo_cap: None,
        }
    }

    pub fn with_memo_cap(sys: Rc<EquationSystem>, cap: usize) -> Evaluator {
        Evaluator {
            sys,
            memo: HashMap::new(),
            memo_cap: Some(cap),
        }
    }

    pub fn system(&self) -> &Rc<EquationSystem> {
        &self.sys
    }

    /// The level-`level` approximant of `name` applied to `args`.
    pub fn approx(&mut self, level: usize, name: &str, args: Vec<Val>) -> Result<Val, EvalError> {
        if level == 0 {
            return Ok(Val::Bot);
        }
        let key = (level, name.to_string(), args);
        if let Some(v) = self.memo.get(&key) {
            return Ok(v.clone());
        }
        let def = self
            .sys
            .def(name)
            .ok_or_else(|| EvalError::UnknownDefinition(name.to_string()))?
            .clone();
        let args = key.2.clone();
        let mut result = Val::Bot;
        for clause in &def.clauses {
            let mut env = HashMap::new();
            let mut verdict = MatchOut::Yes;
            for (pat, val) in clause.patterns.iter().zip(&args) {
                match match_pat(pat, val, &mut env) {
                    MatchOut::Yes => {}
                    MatchOut::No => {
                        verdict = MatchOut::No;
                        break;
                    }
                    MatchOut::Undecided => {
                        verdict = MatchOut::Undecided;
                        break;
                    }
                }
            }
            match verdict {
                MatchOut::No => continue,
                // An undecided pattern hides which clause fires: bottom now.
                MatchOut::Undecided => break,
                MatchOut::Yes => {}
            }
            match eval_guard(&clause.guard, &env)? {
                Some(true) => {
                    result = self.expr(level - 1, &clause.rhs, &env)?;
                    break;
                }
                Some(false) => continue,
                None => break, // undecidable guard: bottom at this level
            }
        }
        if let Some(cap) = self.memo_cap {
            if self.memo.len() >= cap {
                return Err(EvalError::MemoCapExceeded { cap });
            }
        }
        self.memo.insert(key, result.clone());
        Ok(result)
    }

    /// Evaluates an expression with every defined name at `level`.
    fn expr(
        &mut self,
        level: usize,
        e: &Expr,
        env: &HashMap<String, Val>,
    ) -> Result<Val, EvalError> {
        Ok(match e {
            Expr::Var(v, _) => env
                .get(v)
                .cloned()
                .ok_or_else(|| EvalError::Internal(format!("unbound `{v}`")))?,
            Expr::Int(n, _) => Val::Int(*n),
            Expr::EnumConst(c, _) => Val::sym(c),
            Expr::Cons(h, t, _) => {
                let hv = self.expr(level, h, env)?;
                let tv = self.expr(level, t, env)?;
                Val::node("cons", vec![hv, tv])
            }
            Expr::Ctor(c, args, _) => {
                let vals = args
                    .iter()
                    .map(|a| self.expr(level, a, env))
                    .collect::<Result<Vec<_>, _>>()?;
                Val::node(c, vals)
            }
            Expr::Call(g, args, _) => {
                let vals = args
                    .iter()
                    .map(|a| self.expr(level, a, env))
                    .collect::<Result<Vec<_>, _>>()?;
                self.approx(level, g, vals)?
            }
            Expr::Hd(inner, _) => match self.expr(level, inner, env)? {
                Val::Node(_, kids) => kids[0].clone(),
                _ => Val::Bot,
            },
            Expr::Tl(inner, _) => match self.expr(level, inner, env)? {
                Val::Node(_, kids) => kids[1].clone(),
                _ => Val::Bot,
            },
            Expr::Arith(op, a, b, _) => {
                let av = self.expr(level, a, env)?;
                let bv = self.expr(level, b, env)?;
                match (av, bv) {
                    (Val::Int(x), Val::Int(y)) => Val::Int(match op {
                        ArithOp::Add => x + y,
                        ArithOp::Sub => x - y,
                        ArithOp::Mul => x * y,
                    }),
                    _ => Val::Bot,
                }
            }
        })
    }
}

fn match_pat(pat: &Pattern, val: &Val, env: &mut HashMap<String, Val>) -> MatchOut {
    match (pat, val) {
        (Pattern::Var(v, _), _) => {
            env.insert(v.clone(), val.clone());
            MatchOut::Yes
        }
        (_, Val::Bot) => MatchOut::Undecided,
        (Pattern::Cons(h, t, _), Val::Node(c, kids)) if &**c == "cons" => {
            match match_pat(h, &kids[0], env) {
                MatchOut::Yes => match_pat(t, &kids[1], env),
                other => other,
            }
        }
        (Pattern::Ctor(c, ps, _), Val::Node(c2, kids)) => {
            if c.as_str() != &**c2 {
                return MatchOut::No;
            }
            for (p, k) in ps.iter().zip(kids.iter()) {
                match match_pat(p, k, env) {
                    MatchOut::Yes => {}
                    other => return other,
                }
            }
            MatchOut::Yes
        }
        _ => MatchOut::No,
    }
}

/// Guards are call-free data comparisons; `None` means a demanded value is
/// still bottom.
fn eval_guard(guard: &Guard, env: &HashMap<String, Val>) -> Result<Option<bool>, EvalError> {
    let (op, a, b) = match guard {
        Guard::Always | Guard::Otherwise => return Ok(Some(true)),
        Guard::If(op, a, b) => (op, a, b),
    };
    let av = eval_data(a, env)?;
    let bv = eval_data(b, env)?;
    Ok(match (av, bv) {
        (Val::Int(x), Val::Int(y)) => Some(match op {
            CmpOp::Le => x <= y,
            CmpOp::Lt => x < y,
            CmpOp::Eq => x == y,
            CmpOp::Ne => x != y,
            CmpOp::Ge => x >= y,
            CmpOp::Gt => x > y,
        }),
        (Val::Sym(x), Val::Sym(y)) => Some(match op {
            CmpOp::Eq => x == y,
            CmpOp::Ne => x != y,
            _ => return Err(EvalError::Internal("ordering on symbols".into())),
        }),
        _ => None,
    })
}

fn eval_data(e: &Expr, env: &HashMap<String, Val>) -> Result<Val, EvalError> {
    Ok(match e {
        Expr::Var(v, _) => env
            .get(v)
            .cloned()
            .ok_or_else(|| EvalError::Internal(format!("unbound `{v}`")))?,
        Expr::Int(n, _) => Val::Int(*n),
        Expr::EnumConst(c, _) => Val::sym(c),
        Expr::Arith(op, a, b, _) => match (eval_data(a, env)?, eval_data(b, env)?) {
            (Val::Int(x), Val::Int(y)) => Val::Int(match op {
                ArithOp::Add => x + y,
                ArithOp::Sub => x - y,
                ArithOp::Mul => x * y,
            }),
            _ => Val::Bot,
        },
        _ => return Err(EvalError::Internal("non-data expression in guard".into())),
    })
}

/// First `len` elements of a nullary stream definition, iterating levels
/// until the prefix is bottom-free or the cap is hit. The error carries the
/// best partial approximant.
pub fn evaluate_prefix(
    sys: &Rc<EquationSystem>,
    name: &str,
    len: usize,
    iter_cap: usize,
) -> Result<Vec<i64>, EvalError> {
    let def = sys
        .def(name)
        .ok_or_else(|| EvalError::UnknownDefinition(name.to_string()))?;
    if def.arity() != 0 || def.result != Sort::Stream {
        return Err(EvalError::NotAStream {
            name: name.to_string(),
        });
    }
    let mut eval = Evaluator::new(Rc::clone(sys));
    let mut last = Val::Bot;
    for level in 1..=iter_cap {
        let v = eval.approx(level, name, Vec::new())?;
        debug_assert!(last.leq(&v), "levels form a chain");
        if let Some(elems) = stream_elements(&v, len) {
            return Ok(elems);
        }
        last = v;
    }
    Err(EvalError::InsufficientIterations {
        name: name.to_string(),
        cap: iter_cap,
        partial: last,
    })
}

fn stream_elements(v: &Val, len: usize) -> Option<Vec<i64>> {
    let mut out = Vec::with_capacity(len);
    let mut cur = v;
    while out.len() < len {
        match cur {
            Val::Node(c, kids) if &**c == "cons" => {
                match &kids[0] {
                    Val::Int(n) => out.push(*n),
                    _ => return None,
                }
                cur = &kids[1];
            }
            _ => return None,
        }
    }
    Some(out)
}

/// Views a nullary stream definition as a [`Coterm`] over the stream
/// signature. Each node demanded of the coterm iterates the system until
/// the corresponding element stabilizes; exceeding `iter_cap` surfaces as a
/// generator error.
pub fn stream_coterm(
    sys: &Rc<EquationSystem>,
    name: &str,
    sig: &Rc<Signature>,
    budget: MemoBudget,
    iter_cap: usize,
) -> Result<Coterm, EvalError> {
    let def = sys
        .def(name)
        .ok_or_else(|| EvalError::UnknownDefinition(name.to_string()))?;
    if def.arity() != 0 || def.result != Sort::Stream {
        return Err(EvalError::NotAStream {
            name: name.to_string(),
        });
    }

    struct Bridge {
        eval: Evaluator,
        name: String,
        level: usize,
        iter_cap: usize,
        elems: Vec<i64>,
        complete: bool,
    }

    impl Bridge {
        fn element(&mut self, i: usize) -> Result<i64, CotermError> {
            loop {
                if let Some(v) = self.elems.get(i) {
                    return Ok(*v);
                }
                if self.complete {
                    return Err(CotermError::Generator(format!(
                        "`{}` ended before element {i}",
                        self.name
                    )));
                }
                if self.level >= self.iter_cap {
                    return Err(CotermError::Generator(format!(
                        "insufficient iterations: element {i} of `{}` still bottom after {} levels",
                        self.name, self.iter_cap
                    )));
                }
                // Approximants are a chain, so levels may be skipped; double
                // to reach deep elements in logarithmically many passes.
                self.level = (self.level * 2).max(self.level + 1).min(self.iter_cap);
                let v = self
                    .eval
                    .approx(self.level, &self.name.clone(), Vec::new())
                    .map_err(|e| CotermError::Generator(e.to_string()))?;
                // Harvest the defined prefix.
                let mut cur = &v;
                let mut fresh = Vec::new();
                loop {
                    match cur {
                        Val::Node(c, kids) if &**c == "cons" => match &kids[0] {
                            Val::Int(n) => {
                                fresh.push(*n);
                                cur = &kids[1];
                            }
                            _ => break,
                        },
                        _ => break,
                    }
                }
                if fresh.len() > self.elems.len() {
                    self.elems = fresh;
                }
            }
        }
    }

    let bridge = Rc::new(RefCell::new(Bridge {
        eval: Evaluator::new(Rc::clone(sys)),
        name: name.to_string(),
        level: 0,
        iter_cap,
        elems: Vec::new(),
        complete: false,
    }));

    #[derive(Clone, PartialEq, Eq, Hash)]
    enum Seed {
        At(usize),
        Leaf(i64),
    }

    let cons = CtorTag::Named(sig.ctor("cons").expect("stream signature"));
    let s = sig.sort("s").expect("stream signature");
    let step = move |seed: &Seed| match seed {
        Seed::Leaf(v) => Ok((CtorTag::Int(*v), Vec::new())),
        Seed::At(i) => {
            let v = bridge.borrow_mut().element(*i)?;
            Ok((cons.clone(), vec![Seed::Leaf(v), Seed::At(*i + 1)]))
        }
    };
    Ok(Coterm::from_coalgebra(
        Rc::clone(sig),
        s,
        budget,
        Seed::At(0),
        step,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streamlang::parse_defs;

    #[test]
    fn ones_evaluates() {
        let sys = Rc::new(parse_defs("ones = 1 : ones\n").unwrap());
        assert_eq!(evaluate_prefix(&sys, "ones", 5, 32).unwrap(), vec![1; 5]);
    }

    #[test]
    fn merge_of_odds_and_evens_sorts() {
        let src = "\
from n = n : from (n + 2)
merge (x : t1) (y : t2) = x : merge t1 (y : t2) if x <= y
merge (x : t1) (y : t2) = y : merge (x : t1) t2 otherwise
naturals = merge (from 1) (from 2)
";
        let sys = Rc::new(parse_defs(src).unwrap());
        assert_eq!(
            evaluate_prefix(&sys, "naturals", 6, 64).unwrap(),
            vec![1, 2, 3, 4, 5, 6]
        );
    }

    #[test]
    fn mul_by_constant() {
        let src = "\
ones = 1 : ones
mul x (y : t) = (x * y) : mul x t
twos = mul 2 ones
";
        let sys = Rc::new(parse_defs(src).unwrap());
        assert_eq!(evaluate_prefix(&sys, "twos", 3, 32).unwrap(), vec![2, 2, 2]);
    }

    #[test]
    fn non_productive_definition_errors_with_partial() {
        let src = "f = 1 : 2 : g\ng = tl f\n";
        // g = tl f is not constructor-guarded; the system stalls after the
        // prefix 1 : 2 : 2 : ...? No: g needs tl f, f = 1 : 2 : g, so
        // f = 1 : 2 : 2 : g', never reaching depth 4... it actually grows.
        // Use the plainly circular one instead.
        let _ = src;
        let sys = Rc::new(parse_defs("f = hd f : f\n").unwrap());
        let err = evaluate_prefix(&sys, "f", 2, 24).unwrap_err();
        match err {
            EvalError::InsufficientIterations { partial, .. } => {
                assert!(partial.is_bot() || matches!(partial, Val::Node(..)));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn levels_form_a_chain() {
        let src = "\
even (x : y : t) = x : even t
nats n = n : nats (n + 1)
goal = even (nats 0)
";
        let sys = Rc::new(parse_defs(src).unwrap());
        let mut eval = Evaluator::new(Rc::clone(&sys));
        let mut prev = Val::Bot;
        for level in 1..24 {
            let v = eval.approx(level, "goal", Vec::new()).unwrap();
            assert!(prev.leq(&v), "chain property at level {level}");
            prev = v;
        }
    }

    #[test]
    fn coterm_bridge_agrees_with_prefix() {
        use crate::coterm::{bisimilar_to_depth, stream_signature, MemoBudget};
        let src = "\
from n = n : from (n + 1)
nats = from 0
alt = 0 : alt2
alt2 = 1 : alt
";
        let sys = Rc::new(parse_defs(src).unwrap());
        let sig = stream_signature();
        let t = stream_coterm(&sys, "nats", &sig, MemoBudget::unbounded(), 64).unwrap();
        let a = t.approximant(4).unwrap();
        assert_eq!(a.render(), "cons(0,cons(1,cons(2,cons(3,_|_))))");
        let alt = stream_coterm(&sys, "alt", &sig, MemoBudget::unbounded(), 64).unwrap();
        let alt_direct =
            crate::coterm::periodic_stream(&sig, MemoBudget::unbounded(), vec![], vec![0, 1]);
        assert!(bisimilar_to_depth(&alt, &alt_direct, 16).unwrap());
    }
}
