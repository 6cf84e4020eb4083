//! The tree language `term ::= V | A(term) | B(term, term)`, its coinductive
//! reduction rules, the corecursive Skolem join witnessing the diamond
//! property, and seeded generators for terms and reducts.

use std::rc::Rc;

use crate::coterm::{Coterm, CotermError, MemoBudget};
use crate::signature::{CtorTag, Signature};

use super::rules::{parse_ruleset, RuleSet};

/// Sort `term` with sym-constant leaves (the variables) and constructors
/// `A(term)` and `B(term, term)`.
pub fn t_signature() -> Rc<Signature> {
    Rc::new(
        Signature::builder()
            .sort("term")
            .with_sym_constants()
            .ctor("A", &["term"], "term")
            .ctor("B", &["term", "term"], "term")
            .build()
            .expect("T signature is well-formed"),
    )
}

pub const ARROW_T_RULES: &str = "\
ruleset arrow over term arity 2
rule refl:  @x -> @x
rule congA: A(t) -> A(u)      <- t -> u
rule congB: B(s, t) -> B(u, v) <- s -> u; t -> v
rule dup:   A(t) -> B(u, u)   <- t -> u
";

/// The reduction rules: reflexivity on variables, congruence for `A` and
/// `B`, and duplication `A(t) -> B(t', t')`.
pub fn arrow_t_ruleset(sig: &Rc<Signature>) -> RuleSet {
    parse_ruleset(sig, ARROW_T_RULES).expect("builtin rule set parses")
}

/// Identity of a coterm node usable as a seed component.
#[derive(Clone)]
struct ByNode(Coterm);

impl PartialEq for ByNode {
    fn eq(&self, other: &Self) -> bool {
        self.0.node_id() == other.0.node_id()
    }
}
impl Eq for ByNode {}
impl std::hash::Hash for ByNode {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.node_id().hash(state);
    }
}

/// The corecursive join: given `s -> t` and `s -> t'`, produces a term that
/// both `t` and `t'` reduce to. Cases follow the shapes the rules can
/// produce; when none matches, the join falls back to copying `t`, the
/// arbitrary-term default.
pub fn skolem_join_t(s: &Coterm, t: &Coterm, t2: &Coterm) -> Coterm {
    #[derive(Clone, PartialEq, Eq, Hash)]
    enum Seed {
        Join(ByNode, ByNode, ByNode),
        Copy(ByNode),
    }

    let sig = Rc::clone(s.signature());
    let sort = s.sort();
    let budget = MemoBudget::unbounded();
    let sig2 = Rc::clone(&sig);

    let step = move |seed: &Seed| -> Result<(CtorTag, Vec<Seed>), CotermError> {
        let named = |tag: &CtorTag| -> Option<String> {
            match tag {
                CtorTag::Named(c) => Some(sig2.ctor_name(*c).to_string()),
                _ => None,
            }
        };
        match seed {
            Seed::Copy(node) => {
                let (tag, kids) = node.0.force()?;
                Ok((tag, kids.into_iter().map(|k| Seed::Copy(ByNode(k))).collect()))
            }
            Seed::Join(s, t, t2) => {
                let (st, sk) = s.0.force()?;
                let (tt, tk) = t.0.force()?;
                let (ut, uk) = t2.0.force()?;
                let join =
                    |i: usize, j: usize, k: usize| Seed::Join(ByNode(sk[i].clone()), ByNode(tk[j].clone()), ByNode(uk[k].clone()));
                match (named(&st).as_deref(), named(&tt).as_deref(), named(&ut).as_deref()) {
                    // f(x, x, x) = x
                    (None, None, None) if st == tt && tt == ut => Ok((st, vec![])),
                    ("A", "A", "A") => Ok((tt, vec![join(0, 0, 0)])),
                    // Duplicating reducts share their subterm, which is how
                    // the nonlinear pattern B(t', t') is recognized here.
                    ("A", "A", "B") if uk[0].node_id() == uk[1].node_id() => {
                        let j = join(0, 0, 0);
                        Ok((ut, vec![j.clone(), j]))
                    }
                    ("A", "B", "A") if tk[0].node_id() == tk[1].node_id() => {
                        let j = join(0, 0, 0);
                        Ok((tt, vec![j.clone(), j]))
                    }
                    ("A", "B", "B")
                        if tk[0].node_id() == tk[1].node_id()
                            && uk[0].node_id() == uk[1].node_id() =>
                    {
                        let j = join(0, 0, 0);
                        Ok((tt, vec![j.clone(), j]))
                    }
                    ("B", "B", "B") => Ok((tt, vec![join(0, 0, 0), join(1, 1, 1)])),
                    // Arbitrary-term default: copy the first reduct.
                    _ => {
                        let (tag, kids) = t.0.force()?;
                        Ok((tag, kids.into_iter().map(|k| Seed::Copy(ByNode(k))).collect()))
                    }
                }
            }
        }
    };

    Coterm::from_coalgebra(
        sig,
        sort,
        budget,
        Seed::Join(ByNode(s.clone()), ByNode(t.clone()), ByNode(t2.clone())),
        step,
    )
}

/// A seeded random regular term over the T signature: a small node graph
/// whose back-edges make it infinite.
pub fn random_regular_term(sig: &Rc<Signature>, seed: u64, size: usize) -> Coterm {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = size.max(1);
    let a = sig.ctor("A").expect("A");
    let b = sig.ctor("B").expect("B");
    let vars = ["x", "y", "z"];
    let mut nodes: Vec<(CtorTag, Vec<usize>)> = Vec::with_capacity(n);
    for i in 0..n {
        // Successors prefer later nodes so most of the graph is a dag, with
        // occasional back-edges for regular loops.
        let mut pick = |rng: &mut rand_chacha::ChaCha8Rng| -> usize {
            if i + 1 < n && rng.gen_bool(0.8) {
                rng.gen_range(i + 1..n)
            } else {
                rng.gen_range(0..n)
            }
        };
        let node = match rng.gen_range(0..10) {
            0..=3 => (CtorTag::Named(a), vec![pick(&mut rng)]),
            4..=7 => {
                let l = pick(&mut rng);
                let r = pick(&mut rng);
                (CtorTag::Named(b), vec![l, r])
            }
            _ => (
                CtorTag::Sym(vars[rng.gen_range(0..vars.len())].to_string()),
                vec![],
            ),
        };
        nodes.push(node);
    }
    let sort = sig.sort("term").expect("term");
    Coterm::from_coalgebra(
        Rc::clone(sig),
        sort,
        MemoBudget::unbounded(),
        0usize,
        move |&i| Ok::<_, CotermError>((nodes[i].0.clone(), nodes[i].1.clone())),
    )
}

/// A reduct of `s` under the arrow rules, chosen deterministically from the
/// salt: at each `A` node the salt decides between the congruence and the
/// duplication rule. The result satisfies `s -> reduct` at every stage by
/// construction, with duplicated children shared.
pub fn random_reduct(s: &Coterm, salt: u64) -> Coterm {
    #[derive(Clone, PartialEq, Eq, Hash)]
    struct Seed(ByNode);

    let sig = Rc::clone(s.signature());
    let sort = s.sort();
    let sig2 = Rc::clone(&sig);
    let b_ctor = CtorTag::Named(sig.ctor("B").expect("B"));

    let step = move |Seed(node): &Seed| -> Result<(CtorTag, Vec<Seed>), CotermError> {
        let (tag, kids) = node.0.force()?;
        let is_a = matches!(&tag, CtorTag::Named(c) if sig2.ctor_name(*c) == "A");
        if is_a {
            let mut h = std::collections::hash_map::DefaultHasher::new();
            use std::hash::{Hash, Hasher};
            (node.0.node_id(), salt).hash(&mut h);
            if h.finish() % 2 == 0 {
                let child = Seed(ByNode(kids[0].clone()));
                return Ok((b_ctor.clone(), vec![child.clone(), child]));
            }
        }
        Ok((tag, kids.into_iter().map(|k| Seed(ByNode(k))).collect()))
    };
    Coterm::from_coalgebra(sig, sort, MemoBudget::unbounded(), Seed(ByNode(s.clone())), step)
}
