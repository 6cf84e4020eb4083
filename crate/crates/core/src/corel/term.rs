//! Finite representations of regular coterms: term syntax with recursion
//! binders, resolved into node graphs and unfolded as coterms.

use std::collections::HashMap;
use std::rc::Rc;

use thiserror::Error;

use crate::coterm::{Coterm, CotermError, MemoBudget};
use crate::signature::{CtorTag, Signature, SortId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecTerm {
    /// Constructor application or a bare identifier (resolved against the
    /// signature: a declared constructor, else a sym constant).
    App(String, Vec<RecTerm>),
    Int(i64),
    Rec(String, Box<RecTerm>),
    RecRef(String),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TermError {
    #[error("parse error at byte {at}: {msg}")]
    Parse { msg: String, at: usize },
    #[error("unbound recursion reference `{0}`")]
    UnboundRef(String),
    #[error("unguarded recursion binder `{0}`")]
    UnguardedRec(String),
    #[error("`{name}` expects {wanted} arguments, got {got}")]
    Arity {
        name: String,
        wanted: usize,
        got: usize,
    },
    #[error("`{name}` is not a constructor of sort `{sort}`")]
    WrongSort { name: String, sort: String },
}

/// Parses `ctor(t1,...,tk)`, bare identifiers, integers, and `rec X. t`.
pub fn parse_rec_term(text: &str) -> Result<RecTerm, TermError> {
    struct P<'a> {
        b: &'a [u8],
        i: usize,
    }
    impl<'a> P<'a> {
        fn skip_ws(&mut self) {
            while self.i < self.b.len() && (self.b[self.i] as char).is_whitespace() {
                self.i += 1;
            }
        }
        fn ident(&mut self) -> Option<String> {
            self.skip_ws();
            let start = self.i;
            while self.i < self.b.len() {
                let c = self.b[self.i] as char;
                if c.is_alphanumeric() || c == '_' || c == '\'' {
                    self.i += 1;
                } else {
                    break;
                }
            }
            if self.i > start {
                Some(String::from_utf8_lossy(&self.b[start..self.i]).into_owned())
            } else {
                None
            }
        }
        fn eat(&mut self, c: char) -> bool {
            self.skip_ws();
            if self.i < self.b.len() && self.b[self.i] as char == c {
                self.i += 1;
                true
            } else {
                false
            }
        }
        fn term(&mut self) -> Result<RecTerm, TermError> {
            self.skip_ws();
            let at = self.i;
            if self.i < self.b.len() && (self.b[self.i] as char).is_ascii_digit() {
                let start = self.i;
                while self.i < self.b.len() && (self.b[self.i] as char).is_ascii_digit() {
                    self.i += 1;
                }
                let n = String::from_utf8_lossy(&self.b[start..self.i])
                    .parse::<i64>()
                    .map_err(|_| TermError::Parse {
                        msg: "bad integer".into(),
                        at,
                    })?;
                return Ok(RecTerm::Int(n));
            }
            let name = self.ident().ok_or(TermError::Parse {
                msg: "expected a term".into(),
                at,
            })?;
            if name == "rec" {
                let var = self.ident().ok_or(TermError::Parse {
                    msg: "expected a binder name after `rec`".into(),
                    at: self.i,
                })?;
                if !self.eat('.') {
                    return Err(TermError::Parse {
                        msg: "expected `.` after the binder".into(),
                        at: self.i,
                    });
                }
                let body = self.term()?;
                return Ok(RecTerm::Rec(var, Box::new(body)));
            }
            if self.eat('(') {
                let mut args = Vec::new();
                if !self.eat(')') {
                    loop {
                        args.push(self.term()?);
                        if self.eat(')') {
                            break;
                        }
                        if !self.eat(',') {
                            return Err(TermError::Parse {
                                msg: "expected `,` or `)`".into(),
                                at: self.i,
                            });
                        }
                    }
                }
                return Ok(RecTerm::App(name, args));
            }
            Ok(RecTerm::App(name, Vec::new()))
        }
    }
    let mut p = P {
        b: text.as_bytes(),
        i: 0,
    };
    let t = p.term()?;
    p.skip_ws();
    if p.i != p.b.len() {
        return Err(TermError::Parse {
            msg: "trailing input".into(),
            at: p.i,
        });
    }
    // Recursion references must be bound; this also rejects `rec X. X`
    // style bodies via the graph construction later.
    fn check_bound(t: &RecTerm, env: &mut Vec<String>) -> Result<(), TermError> {
        match t {
            RecTerm::App(name, args) => {
                if args.is_empty() && env.iter().any(|b| b == name) {
                    return Ok(()); // a recursion reference
                }
                args.iter().try_for_each(|a| check_bound(a, env))
            }
            RecTerm::Int(_) => Ok(()),
            RecTerm::Rec(x, body) => {
                env.push(x.clone());
                let r = check_bound(body, env);
                env.pop();
                r
            }
            RecTerm::RecRef(x) => {
                if env.iter().any(|b| b == x) {
                    Ok(())
                } else {
                    Err(TermError::UnboundRef(x.clone()))
                }
            }
        }
    }
    check_bound(&t, &mut Vec::new())?;
    Ok(t)
}

/// A resolved regular term: nodes labelled by constructor tags with child
/// node indices; recursion is sharing in the graph.
#[derive(Debug, Clone)]
pub struct TermGraph {
    pub nodes: Vec<(CtorTag, Vec<usize>)>,
    pub root: usize,
}

impl TermGraph {
    /// Resolves a parsed term against a signature with the expected root
    /// sort. Bare identifiers become declared constants when declared, sym
    /// constants otherwise.
    pub fn resolve(
        sig: &Signature,
        sort: SortId,
        term: &RecTerm,
    ) -> Result<TermGraph, TermError> {
        struct Builder<'s> {
            sig: &'s Signature,
            nodes: Vec<Option<(CtorTag, Vec<usize>)>>,
        }
        impl<'s> Builder<'s> {
            fn build(
                &mut self,
                t: &RecTerm,
                sort: SortId,
                env: &mut HashMap<String, usize>,
            ) -> Result<usize, TermError> {
                match t {
                    RecTerm::Int(n) => {
                        if !self.sig.int_constants_allowed(sort) {
                            return Err(TermError::WrongSort {
                                name: n.to_string(),
                                sort: self.sig.sort_name(sort).to_string(),
                            });
                        }
                        self.nodes.push(Some((CtorTag::Int(*n), Vec::new())));
                        Ok(self.nodes.len() - 1)
                    }
                    RecTerm::RecRef(x) => env
                        .get(x)
                        .copied()
                        .ok_or_else(|| TermError::UnboundRef(x.clone())),
                    RecTerm::Rec(x, body) => {
                        // Reserve a slot; references point at it.
                        self.nodes.push(None);
                        let slot = self.nodes.len() - 1;
                        let shadow = env.insert(x.clone(), slot);
                        let inner = self.build(body, sort, env)?;
                        match shadow {
                            Some(old) => {
                                env.insert(x.clone(), old);
                            }
                            None => {
                                env.remove(x);
                            }
                        }
                        if inner == slot || self.nodes[inner].is_none() {
                            return Err(TermError::UnguardedRec(x.clone()));
                        }
                        self.nodes[slot] = Some(self.nodes[inner].clone().unwrap());
                        Ok(slot)
                    }
                    RecTerm::App(name, args) => {
                        if args.is_empty() {
                            if let Some(&slot) = env.get(name) {
                                return Ok(slot);
                            }
                        }
                        match self.sig.ctor(name) {
                            Some(c) => {
                                let decl_args = self.sig.ctor_args(c).to_vec();
                                if self.sig.ctor_result(c) != sort {
                                    return Err(TermError::WrongSort {
                                        name: name.clone(),
                                        sort: self.sig.sort_name(sort).to_string(),
                                    });
                                }
                                if decl_args.len() != args.len() {
                                    return Err(TermError::Arity {
                                        name: name.clone(),
                                        wanted: decl_args.len(),
                                        got: args.len(),
                                    });
                                }
                                self.nodes.push(None);
                                let slot = self.nodes.len() - 1;
                                let kids = args
                                    .iter()
                                    .zip(decl_args)
                                    .map(|(a, s)| self.build(a, s, env))
                                    .collect::<Result<Vec<_>, _>>()?;
                                self.nodes[slot] = Some((CtorTag::Named(c), kids));
                                Ok(slot)
                            }
                            None => {
                                if !args.is_empty() || !self.sig.sym_constants_allowed(sort) {
                                    return Err(TermError::WrongSort {
                                        name: name.clone(),
                                        sort: self.sig.sort_name(sort).to_string(),
                                    });
                                }
                                self.nodes.push(Some((CtorTag::Sym(name.clone()), Vec::new())));
                                Ok(self.nodes.len() - 1)
                            }
                        }
                    }
                }
            }
        }
        let mut b = Builder {
            sig,
            nodes: Vec::new(),
        };
        let root = b.build(term, sort, &mut HashMap::new())?;
        let nodes = b
            .nodes
            .into_iter()
            .map(|n| n.expect("all slots filled"))
            .collect();
        Ok(TermGraph { nodes, root })
    }

    pub fn coterm(&self, sig: &Rc<Signature>, sort: SortId, budget: MemoBudget) -> Coterm {
        let nodes = self.nodes.clone();
        Coterm::from_coalgebra(Rc::clone(sig), sort, budget, self.root, move |&i| {
            let (tag, kids) = &nodes[i];
            Ok::<_, CotermError>((tag.clone(), kids.clone()))
        })
    }
}

/// Parses and resolves in one step.
pub fn term_coterm(
    sig: &Rc<Signature>,
    sort: SortId,
    budget: MemoBudget,
    text: &str,
) -> Result<Coterm, TermError> {
    let t = parse_rec_term(text)?;
    let g = TermGraph::resolve(sig, sort, &t)?;
    Ok(g.coterm(sig, sort, budget))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corel::skolem::t_signature;
    use crate::coterm::Position;

    #[test]
    fn parses_and_unfolds_rec_terms() {
        let sig = t_signature();
        let sort = sig.sort("term").unwrap();
        let t = term_coterm(&sig, sort, MemoBudget::unbounded(), "rec X. A(X)").unwrap();
        let a = t.approximant(3).unwrap();
        assert_eq!(a.render(), "A(A(A(_|_)))");
    }

    #[test]
    fn sym_constants_are_leaves() {
        let sig = t_signature();
        let sort = sig.sort("term").unwrap();
        let t = term_coterm(&sig, sort, MemoBudget::unbounded(), "B(x, A(y))").unwrap();
        assert_eq!(t.approximant(2).unwrap().render(), "B(x,A(y))");
        assert_eq!(
            t.unfold_at(&Position(vec![1, 0])).unwrap(),
            Some(CtorTag::Sym("y".into()))
        );
    }

    #[test]
    fn unguarded_rec_is_rejected() {
        let sig = t_signature();
        let sort = sig.sort("term").unwrap();
        let err = term_coterm(&sig, sort, MemoBudget::unbounded(), "rec X. X").unwrap_err();
        assert!(matches!(err, TermError::UnguardedRec(_)));
        let err2 =
            term_coterm(&sig, sort, MemoBudget::unbounded(), "rec X. rec Y. X").unwrap_err();
        assert!(matches!(err2, TermError::UnguardedRec(_)));
    }

    #[test]
    fn arity_and_sort_errors() {
        let sig = t_signature();
        let sort = sig.sort("term").unwrap();
        assert!(matches!(
            term_coterm(&sig, sort, MemoBudget::unbounded(), "A(x, y)").unwrap_err(),
            TermError::Arity { .. }
        ));
    }
}
