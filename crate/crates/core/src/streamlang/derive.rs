//! Mechanical derivation of production functions from parsed definitions.
//!
//! Pattern depth contributes destructor atoms, constructors contribute
//! `min + 1`, calls become recursive references, and guards become
//! definedness conditions. Two forms are derived per definition: the full
//! recursive equation over the coterm-sorted parameters, and the diagonal
//! local prefix function in which parameters are complete (size infinity)
//! and self-call results are the tracked argument.

use std::collections::{BTreeMap, HashMap, HashSet};

use thiserror::Error;

use crate::extnat::{Fin, Inf};
use crate::prodfun::{atom_test, compose_cases, PfError, PfSystem, ProdFun};

use super::ast::*;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum DeriveError {
    #[error("`{name}` is mutually recursive through `{via}`; only direct self-recursion is supported by the prefix derivation")]
    MutualRecursion { name: String, via: String },
    #[error("`{name}` has no closed clause for constructor combination {combo}")]
    IncompleteMatch { name: String, combo: String },
    #[error(transparent)]
    Pf(#[from] PfError),
}

#[derive(Debug, Clone)]
pub struct DerivedPfs {
    /// Full recursive production-function equation per definition, with one
    /// argument per coterm-sorted parameter.
    pub system: PfSystem,
    /// Diagonal local prefix production function per definition.
    pub prefixes: BTreeMap<String, ProdFun>,
}

enum Mode<'a> {
    /// Arguments are the sizes of the coterm parameters.
    Full,
    /// Parameters are complete; argument 0 is the size of self-call results.
    Prefix {
        self_name: &'a str,
        reaches_self: &'a dyn Fn(&str) -> bool,
    },
}

struct Deriver<'a> {
    sys: &'a EquationSystem,
    /// var name -> (coterm parameter pf index, binding depth); vars bound in
    /// data parameters are absent (they are ambient constants).
    var_info: HashMap<String, (usize, usize)>,
    var_sorts: HashMap<String, bool>, // true = coterm-sorted variable
}

fn gate(data_pfs: Vec<ProdFun>, value: ProdFun) -> ProdFun {
    if data_pfs.is_empty() {
        value
    } else {
        ProdFun::min_all(data_pfs).min_with(value)
    }
}

impl<'a> Deriver<'a> {
    fn data_var_pf(&self, j: usize, depth: usize, mode: &Mode) -> ProdFun {
        match mode {
            Mode::Prefix { .. } => ProdFun::Const(Inf),
            Mode::Full => ProdFun::threshold(
                ProdFun::proj(j).monus(depth.saturating_sub(1) as u64),
                0,
                ProdFun::Const(Inf),
                ProdFun::Const(Fin(0)),
            ),
        }
    }

    fn expr_pf(&self, e: &Expr, mode: &Mode) -> Result<ProdFun, DeriveError> {
        Ok(match e {
            Expr::Int(..) | Expr::EnumConst(..) => ProdFun::Const(Inf),
            Expr::Var(v, _) => match (self.var_info.get(v), mode) {
                (_, Mode::Prefix { .. }) => ProdFun::Const(Inf),
                (Some((j, depth)), Mode::Full) => {
                    if self.var_sorts[v] {
                        ProdFun::proj(*j).monus(*depth as u64)
                    } else {
                        self.data_var_pf(*j, *depth, mode)
                    }
                }
                // Bound in a data parameter: an ambient constant.
                (None, Mode::Full) => ProdFun::Const(Inf),
            },
            // Data-sorted children gate instead of joining the minimum: a
            // bottom constant cannot sit at a constants-only position of an
            // approximant, so the whole node collapses to size 0 then.
            Expr::Cons(h, t, _) => {
                let gate_pf = self.expr_pf(h, mode)?;
                gate(vec![gate_pf], self.expr_pf(t, mode)?.plus(1))
            }
            Expr::Ctor(c, args, _) => {
                let decl = self.sys.ctor_decl(c).expect("resolved ctor").clone();
                let mut coterm_parts = Vec::new();
                let mut data_gates = Vec::new();
                for (a, s) in args.iter().zip(&decl.args) {
                    let pf = self.expr_pf(a, mode)?;
                    if s.is_coterm() {
                        coterm_parts.push(pf);
                    } else {
                        data_gates.push(pf);
                    }
                }
                gate(data_gates, ProdFun::min_all(coterm_parts).plus(1))
            }
            Expr::Hd(inner, _) => ProdFun::threshold(
                self.expr_pf(inner, mode)?,
                0,
                ProdFun::Const(Inf),
                ProdFun::Const(Fin(0)),
            ),
            Expr::Tl(inner, _) => self.expr_pf(inner, mode)?.monus(1),
            Expr::Arith(_, a, b, _) => ProdFun::threshold(
                self.expr_pf(a, mode)?.min_with(self.expr_pf(b, mode)?),
                0,
                ProdFun::Const(Inf),
                ProdFun::Const(Fin(0)),
            ),
            Expr::Call(g, args, _) => {
                if let Mode::Prefix {
                    self_name,
                    reaches_self,
                } = mode
                {
                    if g == self_name {
                        return Ok(ProdFun::proj(0));
                    }
                    if reaches_self(g) {
                        return Err(DeriveError::MutualRecursion {
                            name: self_name.to_string(),
                            via: g.clone(),
                        });
                    }
                }
                let callee = self.sys.def(g).expect("resolved call");
                let mut coterm_args = Vec::new();
                let mut data_gates = Vec::new();
                for (arg, sort) in args.iter().zip(&callee.params) {
                    let pf = self.expr_pf(arg, mode)?;
                    if sort.is_coterm() {
                        coterm_args.push(pf);
                    } else {
                        data_gates.push(pf);
                    }
                }
                gate(data_gates, ProdFun::call(g, coterm_args))
            }
        })
    }
}

/// Variables bound by `pat` (whose root has sort `root`), with their
/// constructor depth and whether their own sort is a coterm sort.
fn bindings_with_sorts<'p>(
    sys: &EquationSystem,
    pat: &'p Pattern,
    root: &Sort,
) -> Vec<(&'p str, usize, bool)> {
    fn go<'p>(
        sys: &EquationSystem,
        pat: &'p Pattern,
        depth: usize,
        is_coterm: bool,
        out: &mut Vec<(&'p str, usize, bool)>,
    ) {
        match pat {
            Pattern::Var(v, _) => out.push((v, depth, is_coterm)),
            Pattern::Cons(h, t, _) => {
                go(sys, h, depth + 1, false, out);
                go(sys, t, depth + 1, true, out);
            }
            Pattern::Ctor(c, args, _) => {
                let decl = sys.ctor_decl(c).expect("resolved ctor");
                for (a, s) in args.iter().zip(&decl.args) {
                    go(sys, a, depth + 1, s.is_coterm(), out);
                }
            }
        }
    }
    let mut out = Vec::new();
    go(sys, pat, 0, root.is_coterm(), &mut out);
    out
}

fn bind_clause_vars(
    deriver: &mut Deriver,
    def: &Definition,
    clause: &Clause,
    pf_index_of_param: &HashMap<usize, usize>,
) {
    deriver.var_info.clear();
    deriver.var_sorts.clear();
    for (i, pat) in clause.patterns.iter().enumerate() {
        let coterm_param = def.params[i].is_coterm();
        for (v, depth, coterm_var) in bindings_with_sorts(deriver.sys, pat, &def.params[i]) {
            deriver.var_sorts.insert(v.to_string(), coterm_var);
            if coterm_param {
                deriver
                    .var_info
                    .insert(v.to_string(), (pf_index_of_param[&i], depth));
            }
        }
    }
}

/// Guard-definedness conditions: every data variable the guard mentions
/// must be extractable, i.e. the stream is deep enough at its binding site.
fn guard_conditions(
    deriver: &Deriver,
    guard: &Guard,
    out: &mut Vec<ProdFun>,
) {
    fn vars<'e>(e: &'e Expr, acc: &mut Vec<&'e str>) {
        match e {
            Expr::Var(v, _) => acc.push(v),
            Expr::Arith(_, a, b, _) => {
                vars(a, acc);
                vars(b, acc);
            }
            _ => {}
        }
    }
    if let Guard::If(_, a, b) = guard {
        let mut names = Vec::new();
        vars(a, &mut names);
        vars(b, &mut names);
        for v in names {
            if let Some((j, depth)) = deriver.var_info.get(v) {
                let cond = ProdFun::threshold(
                    ProdFun::proj(*j).monus(depth.saturating_sub(1) as u64),
                    0,
                    ProdFun::Const(Fin(1)),
                    ProdFun::Const(Fin(0)),
                );
                if !out.contains(&cond) {
                    out.push(cond);
                }
            }
        }
    }
}

/// Exhaustiveness over root constructors: for every combination of root
/// constructors of the coterm parameters there must be a clause group that
/// matches it and ends in an unconditional clause.
fn check_coverage(sys: &EquationSystem, def: &Definition) -> Result<(), DeriveError> {
    let coterm_idxs = def.coterm_params();
    let mut choices: Vec<Vec<Option<String>>> = Vec::new();
    for &i in &coterm_idxs {
        let ctors: Vec<Option<String>> = match &def.params[i] {
            Sort::Stream => vec![Some("cons".to_string())],
            Sort::User(name) => sys.coterm_sorts[name]
                .iter()
                .map(|c| Some(c.name.clone()))
                .collect(),
            _ => unreachable!("coterm params only"),
        };
        choices.push(ctors);
    }
    let mut combos: Vec<Vec<Option<String>>> = vec![Vec::new()];
    for c in &choices {
        let mut next = Vec::new();
        for combo in &combos {
            for choice in c {
                let mut combo = combo.clone();
                combo.push(choice.clone());
                next.push(combo);
            }
        }
        combos = next;
    }
    for combo in combos {
        let mut closed = false;
        for clause in &def.clauses {
            let matches = coterm_idxs.iter().zip(&combo).all(|(&i, want)| {
                match (&clause.patterns[i], want) {
                    (Pattern::Var(..), _) => true,
                    (Pattern::Cons(..), Some(w)) => w == "cons",
                    (Pattern::Ctor(c, ..), Some(w)) => c == w,
                    _ => false,
                }
            });
            if matches && !matches!(clause.guard, Guard::If(..)) {
                closed = true;
                break;
            }
        }
        if !closed {
            let pretty: Vec<String> = combo
                .iter()
                .map(|c| c.clone().unwrap_or_else(|| "_".to_string()))
                .collect();
            return Err(DeriveError::IncompleteMatch {
                name: def.name.clone(),
                combo: format!("({})", pretty.join(", ")),
            });
        }
    }
    Ok(())
}

/// Derives the full production-function system and the per-definition
/// prefix production functions.
pub fn derive_pf(sys: &EquationSystem) -> Result<DerivedPfs, DeriveError> {
    // Call graph for the mutual-recursion check in prefix mode.
    let mut calls: HashMap<&str, HashSet<&str>> = HashMap::new();
    for def in &sys.defs {
        let entry = calls.entry(def.name.as_str()).or_default();
        for clause in &def.clauses {
            collect_calls(&clause.rhs, entry);
        }
    }
    let reaches = |from: &str, to: &str| -> bool {
        let mut seen = HashSet::new();
        let mut stack = vec![from];
        while let Some(n) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            if n == to {
                return true;
            }
            if let Some(next) = calls.get(n) {
                stack.extend(next.iter().copied());
            }
        }
        false
    };

    let mut system = PfSystem::new();
    let mut prefixes = BTreeMap::new();
    for def in &sys.defs {
        check_coverage(sys, def)?;
        let coterm_idxs = def.coterm_params();
        let pf_index_of_param: HashMap<usize, usize> = coterm_idxs
            .iter()
            .enumerate()
            .map(|(k, &i)| (i, k))
            .collect();
        let mut deriver = Deriver {
            sys,
            var_info: HashMap::new(),
            var_sorts: HashMap::new(),
        };

        // Full equation: branches per clause behind definedness conditions.
        let mut branches = Vec::new();
        let mut conditions = Vec::new();
        for (k, &i) in coterm_idxs.iter().enumerate() {
            let tested = def
                .clauses
                .iter()
                .any(|c| !c.patterns[i].is_var());
            if tested {
                let cond = atom_test(0).substitute(&[ProdFun::proj(k)])?;
                if !conditions.contains(&cond) {
                    conditions.push(cond);
                }
            }
        }
        for clause in &def.clauses {
            bind_clause_vars(&mut deriver, def, clause, &pf_index_of_param);
            guard_conditions(&deriver, &clause.guard, &mut conditions);
            branches.push(deriver.expr_pf(&clause.rhs, &Mode::Full)?);
        }
        let body = compose_cases(&branches, &conditions)?;
        system.insert(&def.name, coterm_idxs.len(), body);

        // Prefix function: parameters complete, self-calls tracked.
        let reaches_self = |g: &str| reaches(g, def.name.as_str());
        let mode = Mode::Prefix {
            self_name: &def.name,
            reaches_self: &reaches_self,
        };
        let mut parts = Vec::new();
        for clause in &def.clauses {
            bind_clause_vars(&mut deriver, def, clause, &pf_index_of_param);
            parts.push(deriver.expr_pf(&clause.rhs, &mode)?);
        }
        prefixes.insert(def.name.clone(), ProdFun::min_all(parts));
    }
    system.validate().map_err(DeriveError::Pf)?;
    Ok(DerivedPfs { system, prefixes })
}

fn collect_calls<'e>(e: &'e Expr, out: &mut HashSet<&'e str>) {
    match e {
        Expr::Var(..) | Expr::Int(..) | Expr::EnumConst(..) => {}
        Expr::Cons(h, t, _) => {
            collect_calls(h, out);
            collect_calls(t, out);
        }
        Expr::Ctor(_, args, _) | Expr::Call(_, args, _) => {
            if let Expr::Call(name, _, _) = e {
                out.insert(name);
            }
            for a in args {
                collect_calls(a, out);
            }
        }
        Expr::Hd(x, _) | Expr::Tl(x, _) => collect_calls(x, out),
        Expr::Arith(_, a, b, _) => {
            collect_calls(a, out);
            collect_calls(b, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extnat::{ExtNat, Fin};
    use crate::prodfun::check_productivity;
    use crate::prodfun::ProductivityStatus;
    use crate::streamlang::parse_defs;

    fn library_src() -> &'static str {
        concat!(
            "even (x : y : t) = x : even t\n",
            "zip (x : t) s = x : zip s t\n",
            "add (x : t) (y : s) = (x + y) : add t s\n",
            "merge (x : t1) (y : t2) = x : merge t1 (y : t2) if x <= y\n",
            "merge (x : t1) (y : t2) = y : merge (x : t1) t2 otherwise\n",
            "mul x (y : t) = (x * y) : mul x t\n",
            "D = 0 : 1 : 1 : zip (add (tl D) (tl (tl D))) (even (tl D))\n",
            "H = 1 : merge (merge (mul 2 H) (mul 3 H)) (mul 5 H)\n",
        )
    }

    #[test]
    fn even_equation_matches_the_recursive_form() {
        let sys = parse_defs("even (x : y : t) = x : even t\n").unwrap();
        let derived = derive_pf(&sys).unwrap();
        // eta(0) = 0, eta(1) = 1 + eta(0), eta(n+2) = 1 + eta(n), i.e. ceil(n/2).
        let reqs: Vec<_> = (0..=16u64)
            .map(|n| ("even".to_string(), vec![Fin(n)]))
            .collect();
        let vals = derived.system.solve_batch(&reqs, 64).unwrap();
        for (n, v) in (0..=16u64).zip(vals) {
            assert!(v.is_exact());
            assert_eq!(v.value, Fin(n.div_ceil(2)), "at {n}");
        }
    }

    #[test]
    fn zip_equation_matches_the_swapped_form() {
        let sys = parse_defs("zip (x : t) s = x : zip s t\n").unwrap();
        let derived = derive_pf(&sys).unwrap();
        let mut reqs = Vec::new();
        for n in 0..=12u64 {
            for m in 0..=12u64 {
                reqs.push(("zip".to_string(), vec![Fin(n), Fin(m)]));
            }
        }
        let vals = derived.system.solve_batch(&reqs, 128).unwrap();
        let mut k = 0;
        for n in 0..=12u64 {
            for m in 0..=12u64 {
                assert!(vals[k].is_exact());
                assert_eq!(vals[k].value, Fin((2 * n).min(2 * m + 1)), "at {n},{m}");
                k += 1;
            }
        }
    }

    #[test]
    fn nested_prefix_matches_the_case_split() {
        let sys = parse_defs(library_src()).unwrap();
        let derived = derive_pf(&sys).unwrap();
        let xi = &derived.prefixes["D"];
        let mut probe = derived.system.clone();
        probe.insert("xi", 1, xi.clone());
        let reqs: Vec<_> = (0..=40u64).map(|n| ("xi".to_string(), vec![Fin(n)])).collect();
        let vals = probe.solve_batch(&reqs, 256).unwrap();
        for (n, v) in (0..=40u64).zip(vals) {
            assert!(v.is_exact());
            let expect = if n < 2 {
                3
            } else {
                3 + (2 * n - 4).min(2 * (n - 1).div_ceil(2) + 1)
            };
            assert_eq!(v.value, Fin(expect), "xi at {n}");
            assert!(v.value > Fin(n));
        }
    }

    #[test]
    fn hamming_prefix_is_successor() {
        let sys = parse_defs(library_src()).unwrap();
        let derived = derive_pf(&sys).unwrap();
        let xi = &derived.prefixes["H"];
        let mut probe = derived.system.clone();
        probe.insert("xi", 1, xi.clone());
        let reqs: Vec<_> = (0..=64u64).map(|n| ("xi".to_string(), vec![Fin(n)])).collect();
        let vals = probe.solve_batch(&reqs, 256).unwrap();
        for (n, v) in (0..=64u64).zip(vals) {
            assert_eq!(v.value, Fin(n + 1), "xi_H at {n}");
        }
    }

    #[test]
    fn consuming_definition_is_not_productive() {
        let sys = parse_defs("f t = f (tl t)\n").unwrap();
        let derived = derive_pf(&sys).unwrap();
        let verdict =
            check_productivity(&derived.prefixes["f"], &derived.system, 64, 256).unwrap();
        assert!(matches!(
            verdict.status,
            ProductivityStatus::NotProductive { .. }
        ));
    }

    #[test]
    fn incomplete_match_is_rejected() {
        let src = "\
data sym = vx
coterm term = var(sym) | eps(term)
f (var v) = var v
";
        let sys = parse_defs(src).unwrap();
        assert!(matches!(
            derive_pf(&sys),
            Err(DeriveError::IncompleteMatch { .. })
        ));
    }

    #[test]
    fn guard_without_default_is_rejected() {
        let src = "f (x : t) = x : f t if x <= 0\n";
        let sys = parse_defs(src).unwrap();
        assert!(matches!(
            derive_pf(&sys),
            Err(DeriveError::IncompleteMatch { .. })
        ));
    }

    #[test]
    fn subst_equation_is_min() {
        let src = "\
data sym = vx | vy | vz
coterm term = var(sym) | app(term, term) | lam(sym, term) | eps(term)
subst (var v) t x = t if v == x
subst (var v) t x = var v otherwise
subst (app s1 s2) t x = app (subst s1 t x) (subst s2 t x)
subst (lam v s) t x = lam v s if v == x
subst (lam v s) t x = lam v (subst s t x) otherwise
subst (eps s) t x = eps (subst s t x)
";
        let sys = parse_defs(src).unwrap();
        let derived = derive_pf(&sys).unwrap();
        let mut reqs = Vec::new();
        for n in 0..=12u64 {
            for m in 0..=12u64 {
                reqs.push(("subst".to_string(), vec![Fin(n), Fin(m)]));
            }
        }
        let vals = derived.system.solve_batch(&reqs, 128).unwrap();
        let mut k = 0;
        for n in 0..=12u64 {
            for m in 0..=12u64 {
                assert!(vals[k].is_exact());
                assert_eq!(vals[k].value, Fin(n.min(m)), "subst at {n},{m}");
                k += 1;
            }
        }
        // And its prefix is min(n, m) + 1-ish above the diagonal.
        let verdict =
            check_productivity(&derived.prefixes["subst"], &derived.system, 32, 256).unwrap();
        assert_eq!(verdict.status, ProductivityStatus::ProductiveVerified);
        let _ = ExtNat::ZERO;
    }
}
