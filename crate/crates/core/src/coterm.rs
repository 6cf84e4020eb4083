//! Lazily unfolded coterms and their finite approximants.
//!
//! A coterm is represented coalgebraically: an opaque seed plus a one-step
//! unfold producing a constructor tag and child seeds. Nodes are forced at
//! most once and memoized, so the partial-function-on-positions view is
//! recovered by [`Coterm::unfold_at`] without recomputation. Live coterms
//! never contain bottom; bottom appears only as a leaf of [`Approximant`].

use std::cell::{Cell, OnceCell, RefCell};
use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;
use std::rc::Rc;

use thiserror::Error;

use crate::extnat::{ExtNat, Fin};
use crate::signature::{CtorTag, Signature, SortId};

/// A path of child indices from the root; the empty path is the root.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Position(pub Vec<usize>);

impl Position {
    pub fn root() -> Position {
        Position(Vec::new())
    }

    pub fn child(&self, i: usize) -> Position {
        let mut p = self.0.clone();
        p.push(i);
        Position(p)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Parses `"e"` (the root) or a dot-separated index path like `"0.1.1"`.
    pub fn parse(text: &str) -> Option<Position> {
        let text = text.trim();
        if text == "e" || text.is_empty() {
            return Some(Position::root());
        }
        text.split('.')
            .map(|part| part.trim().parse::<usize>().ok())
            .collect::<Option<Vec<_>>>()
            .map(Position)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "e");
        }
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "{}", parts.join("."))
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CotermError {
    #[error("constructor `{ctor}` does not produce sort `{expected}`")]
    SortMismatch { ctor: String, expected: String },
    #[error("constructor `{ctor}` expects {expected} children, generator produced {got}")]
    ArityMismatch {
        ctor: String,
        expected: usize,
        got: usize,
    },
    #[error("memo node budget of {cap} nodes exceeded")]
    BudgetExceeded { cap: usize },
    #[error("coterms over different signatures cannot be compared")]
    DifferentSignatures,
    #[error("coterms of different sorts cannot be compared")]
    DifferentSorts,
    #[error("generator failed: {0}")]
    Generator(String),
}

/// Shared unfold budget. Unbounded by default; when capped, forcing a node
/// past the cap is a hard resource error rather than silent truncation.
#[derive(Clone)]
pub struct MemoBudget {
    used: Rc<Cell<usize>>,
    cap: Option<usize>,
}

impl MemoBudget {
    pub fn unbounded() -> MemoBudget {
        MemoBudget {
            used: Rc::new(Cell::new(0)),
            cap: None,
        }
    }

    pub fn capped(cap: usize) -> MemoBudget {
        MemoBudget {
            used: Rc::new(Cell::new(0)),
            cap: Some(cap),
        }
    }

    pub fn used(&self) -> usize {
        self.used.get()
    }

    fn charge(&self) -> Result<(), CotermError> {
        let next = self.used.get() + 1;
        if let Some(cap) = self.cap {
            if next > cap {
                return Err(CotermError::BudgetExceeded { cap });
            }
        }
        self.used.set(next);
        Ok(())
    }
}

type UnfoldOut = Result<(CtorTag, Vec<Coterm>), CotermError>;

struct CotermNode {
    sig: Rc<Signature>,
    sort: SortId,
    cell: OnceCell<UnfoldOut>,
    thunk: RefCell<Option<Box<dyn FnOnce() -> UnfoldOut>>>,
    budget: MemoBudget,
}

/// A finite or infinite well-sorted tree, unfolded on demand.
#[derive(Clone)]
pub struct Coterm {
    node: Rc<CotermNode>,
}

impl Coterm {
    /// Lowest-level constructor: a node of the given sort whose children are
    /// produced by `thunk` on first demand. The thunk's output is validated
    /// against the signature; a violation is a malformed-coterm error that
    /// signals a broken generator.
    pub fn defer(
        sig: Rc<Signature>,
        sort: SortId,
        budget: MemoBudget,
        thunk: impl FnOnce() -> UnfoldOut + 'static,
    ) -> Coterm {
        Coterm {
            node: Rc::new(CotermNode {
                sig,
                sort,
                cell: OnceCell::new(),
                thunk: RefCell::new(Some(Box::new(thunk))),
                budget,
            }),
        }
    }

    /// Builds a coterm from a seed and a pure one-step unfold function.
    /// Nodes are cached per seed, so regular coterms (finitely many distinct
    /// seeds) occupy finitely many nodes.
    pub fn from_coalgebra<S>(
        sig: Rc<Signature>,
        sort: SortId,
        budget: MemoBudget,
        seed: S,
        step: impl Fn(&S) -> Result<(CtorTag, Vec<S>), CotermError> + 'static,
    ) -> Coterm
    where
        S: Clone + Eq + Hash + 'static,
    {
        struct Gen<S> {
            sig: Rc<Signature>,
            budget: MemoBudget,
            step: Box<dyn Fn(&S) -> Result<(CtorTag, Vec<S>), CotermError>>,
            cache: RefCell<HashMap<(S, SortId), Coterm>>,
        }

        fn node_for<S: Clone + Eq + Hash + 'static>(
            gen: &Rc<Gen<S>>,
            seed: S,
            sort: SortId,
        ) -> Coterm {
            if let Some(t) = gen.cache.borrow().get(&(seed.clone(), sort)) {
                return t.clone();
            }
            let gen2 = Rc::clone(gen);
            let seed2 = seed.clone();
            let t = Coterm::defer(
                Rc::clone(&gen.sig),
                sort,
                gen.budget.clone(),
                move || {
                    let (tag, kid_seeds) = (gen2.step)(&seed2)?;
                    let arity = gen2.sig.arity(&tag);
                    if kid_seeds.len() != arity {
                        return Err(CotermError::ArityMismatch {
                            ctor: gen2.sig.tag_display(&tag),
                            expected: arity,
                            got: kid_seeds.len(),
                        });
                    }
                    let kid_sorts: Vec<SortId> = match &tag {
                        CtorTag::Named(c) => gen2.sig.ctor_args(*c).to_vec(),
                        _ => Vec::new(),
                    };
                    let kids = kid_seeds
                        .into_iter()
                        .zip(kid_sorts)
                        .map(|(s, srt)| node_for(&gen2, s, srt))
                        .collect();
                    Ok((tag, kids))
                },
            );
            gen.cache.borrow_mut().insert((seed, sort), t.clone());
            t
        }

        let gen = Rc::new(Gen {
            sig,
            budget,
            step: Box::new(step),
            cache: RefCell::new(HashMap::new()),
        });
        node_for(&gen, seed, sort)
    }

    pub fn sort(&self) -> SortId {
        self.node.sort
    }

    pub fn signature(&self) -> &Rc<Signature> {
        &self.node.sig
    }

    /// Stable identity of the underlying memo node, usable as a cache key.
    /// Distinct ids say nothing about term equality.
    pub fn node_id(&self) -> usize {
        Rc::as_ptr(&self.node) as usize
    }

    /// Forces the root node: runs the unfold once, validates it against the
    /// signature, memoizes, and returns the constructor tag and children.
    pub fn force(&self) -> Result<(CtorTag, Vec<Coterm>), CotermError> {
        if self.node.cell.get().is_none() {
            let thunk = self.node.thunk.borrow_mut().take();
            let out = match thunk {
                Some(thunk) => self.node.budget.charge().and_then(|()| {
                    let (tag, kids) = thunk()?;
                    self.validate(&tag, &kids)?;
                    Ok((tag, kids))
                }),
                // Forced concurrently with itself: the seed graph demands a
                // node while that node's own unfold is running.
                None => Err(CotermError::Generator(
                    "unfold demanded its own node".to_string(),
                )),
            };
            let _ = self.node.cell.set(out);
        }
        self.node.cell.get().expect("cell was just set").clone()
    }

    fn validate(&self, tag: &CtorTag, kids: &[Coterm]) -> Result<(), CotermError> {
        let sig = &self.node.sig;
        if !sig.tag_fits_sort(tag, self.node.sort) {
            return Err(CotermError::SortMismatch {
                ctor: sig.tag_display(tag),
                expected: sig.sort_name(self.node.sort).to_string(),
            });
        }
        let arity = sig.arity(tag);
        if kids.len() != arity {
            return Err(CotermError::ArityMismatch {
                ctor: sig.tag_display(tag),
                expected: arity,
                got: kids.len(),
            });
        }
        if let CtorTag::Named(c) = tag {
            for (kid, expect) in kids.iter().zip(sig.ctor_args(*c)) {
                if kid.sort() != *expect {
                    return Err(CotermError::SortMismatch {
                        ctor: sig.tag_display(tag),
                        expected: sig.sort_name(*expect).to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    /// The constructor labelling this coterm at position `p`, or `None` when
    /// the position is undefined (index past a constructor's arity).
    pub fn unfold_at(&self, p: &Position) -> Result<Option<CtorTag>, CotermError> {
        let mut cur = self.clone();
        for &i in &p.0 {
            let (_, kids) = cur.force()?;
            match kids.get(i) {
                Some(kid) => cur = kid.clone(),
                None => return Ok(None),
            }
        }
        let (tag, _) = cur.force()?;
        Ok(Some(tag))
    }

    /// The depth-`n` approximant: nodes at depth `< n` kept, constants at
    /// depth exactly `n > 0` kept, everything else cut to bottom.
    pub fn approximant(&self, n: usize) -> Result<Approximant, CotermError> {
        fn go(t: &Coterm, remaining: usize, boundary_consts: bool) -> Result<ApproxNode, CotermError> {
            if remaining == 0 {
                if boundary_consts {
                    let (tag, kids) = t.force()?;
                    if kids.is_empty() {
                        return Ok(ApproxNode::Node(tag, Vec::new()));
                    }
                }
                return Ok(ApproxNode::Bottom);
            }
            let (tag, kids) = t.force()?;
            let children = kids
                .iter()
                .map(|k| go(k, remaining - 1, boundary_consts))
                .collect::<Result<_, _>>()?;
            Ok(ApproxNode::Node(tag, children))
        }
        let root = go(self, n, n > 0)?;
        Ok(Approximant {
            sig: Rc::clone(&self.node.sig),
            sort: self.node.sort,
            size: Fin(n as u64),
            root,
        })
    }
}

impl fmt::Debug for Coterm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Coterm(sort {})",
            self.node.sig.sort_name(self.node.sort)
        )
    }
}

/// `true` iff the depth-`n` approximants of `t` and `s` coincide. Antitone
/// in `n`: once distinguished, deeper cuts stay distinguished.
pub fn bisimilar_to_depth(t: &Coterm, s: &Coterm, n: usize) -> Result<bool, CotermError> {
    if !Rc::ptr_eq(t.signature(), s.signature()) {
        return Err(CotermError::DifferentSignatures);
    }
    if t.sort() != s.sort() {
        return Err(CotermError::DifferentSorts);
    }
    Ok(t.approximant(n)? == s.approximant(n)?)
}

/// A finite tree with bottom leaves.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ApproxNode {
    Bottom,
    Node(CtorTag, Vec<ApproxNode>),
}

impl ApproxNode {
    pub fn is_bottom(&self) -> bool {
        matches!(self, ApproxNode::Bottom)
    }
}

/// A depth-bounded truncation of a coterm paired with its size index.
#[derive(Clone)]
pub struct Approximant {
    sig: Rc<Signature>,
    sort: SortId,
    size: ExtNat,
    root: ApproxNode,
}

impl Approximant {
    pub fn size(&self) -> ExtNat {
        self.size
    }

    pub fn sort(&self) -> SortId {
        self.sort
    }

    pub fn root(&self) -> &ApproxNode {
        &self.root
    }

    pub fn signature(&self) -> &Rc<Signature> {
        &self.sig
    }

    pub fn is_bottom(&self) -> bool {
        self.root.is_bottom()
    }

    /// Canonical text encoding: prefix notation with `_|_` for bottom.
    pub fn render(&self) -> String {
        fn go(sig: &Signature, n: &ApproxNode, out: &mut String) {
            match n {
                ApproxNode::Bottom => out.push_str("_|_"),
                ApproxNode::Node(tag, kids) => {
                    out.push_str(&sig.tag_display(tag));
                    if !kids.is_empty() {
                        out.push('(');
                        for (i, k) in kids.iter().enumerate() {
                            if i > 0 {
                                out.push(',');
                            }
                            go(sig, k, out);
                        }
                        out.push(')');
                    }
                }
            }
        }
        let mut out = String::new();
        go(&self.sig, &self.root, &mut out);
        out
    }
}

impl PartialEq for Approximant {
    fn eq(&self, other: &Self) -> bool {
        Rc::ptr_eq(&self.sig, &other.sig)
            && self.sort == other.sort
            && self.size == other.size
            && self.root == other.root
    }
}

impl Eq for Approximant {}

impl fmt::Display for Approximant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

impl fmt::Debug for Approximant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Approximant[{}]({})", self.size, self.render())
    }
}

/// Identity when `size(a) <= n`, otherwise the depth-`n` truncation; the
/// result size is `min(n, size(a))`.
pub fn cut(n: ExtNat, a: &Approximant) -> Approximant {
    if a.size <= n {
        return a.clone();
    }
    // size(a) > n, so n is finite here.
    let k = n.finite().expect("n below a finite size") as usize;
    fn go(node: &ApproxNode, remaining: usize, boundary_consts: bool) -> ApproxNode {
        match node {
            ApproxNode::Bottom => ApproxNode::Bottom,
            ApproxNode::Node(tag, kids) => {
                if remaining == 0 {
                    if boundary_consts && kids.is_empty() {
                        return ApproxNode::Node(tag.clone(), Vec::new());
                    }
                    return ApproxNode::Bottom;
                }
                ApproxNode::Node(
                    tag.clone(),
                    kids.iter()
                        .map(|c| go(c, remaining - 1, boundary_consts))
                        .collect(),
                )
            }
        }
    }
    Approximant {
        sig: Rc::clone(&a.sig),
        sort: a.sort,
        size: n,
        root: go(&a.root, k, k > 0),
    }
}

/// Streams of integers, the running example signature: sorts `d` (integer
/// constants) and `s`, with `cons : (d, s) -> s`.
pub fn stream_signature() -> Rc<Signature> {
    Rc::new(
        Signature::builder()
            .int_sort("d")
            .sort("s")
            .ctor("cons", &["d", "s"], "s")
            .build()
            .expect("stream signature is well-formed"),
    )
}

/// The eventually periodic integer stream `prefix ++ cycle ++ cycle ++ ...`.
pub fn periodic_stream(
    sig: &Rc<Signature>,
    budget: MemoBudget,
    prefix: Vec<i64>,
    cycle: Vec<i64>,
) -> Coterm {
    assert!(!cycle.is_empty(), "cycle must be nonempty");
    let s = sig.sort("s").expect("stream sort");
    let cons = CtorTag::Named(sig.ctor("cons").expect("cons"));
    // Seed: index into prefix+cycle, or a data leaf holding one value.
    #[derive(Clone, PartialEq, Eq, Hash)]
    enum Seed {
        At(usize),
        Leaf(i64),
    }
    let plen = prefix.len();
    let clen = cycle.len();
    let step = move |seed: &Seed| match seed {
        Seed::Leaf(v) => Ok((CtorTag::Int(*v), Vec::new())),
        Seed::At(i) => {
            let v = if *i < plen {
                prefix[*i]
            } else {
                cycle[(*i - plen) % clen]
            };
            let next = if *i < plen {
                Seed::At(*i + 1)
            } else {
                Seed::At(plen + (*i - plen + 1) % clen)
            };
            Ok((cons.clone(), vec![Seed::Leaf(v), next]))
        }
    };
    Coterm::from_coalgebra(Rc::clone(sig), s, budget, Seed::At(0), step)
}
