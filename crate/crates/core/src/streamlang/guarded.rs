//! Syntactic guardedness: every clause body is either recursion-free or a
//! constructor applied to non-consuming arguments. Guarded definitions are
//! productive without any production-function reasoning.

use std::collections::BTreeMap;

use super::ast::{Clause, EquationSystem, Expr};

fn recursion_free(e: &Expr) -> bool {
    match e {
        Expr::Var(..) | Expr::Int(..) | Expr::EnumConst(..) => true,
        Expr::Cons(h, t, _) => recursion_free(h) && recursion_free(t),
        Expr::Ctor(_, args, _) => args.iter().all(recursion_free),
        Expr::Call(..) => false,
        Expr::Hd(e, _) | Expr::Tl(e, _) => recursion_free(e),
        Expr::Arith(_, a, b, _) => recursion_free(a) && recursion_free(b),
    }
}

fn constructor_rooted(e: &Expr) -> bool {
    match e {
        Expr::Cons(h, t, _) => non_consuming(h) && non_consuming(t),
        Expr::Ctor(_, args, _) => args.iter().all(non_consuming),
        _ => false,
    }
}

/// Non-consuming argument positions: a recursion-free expression, a direct
/// call whose own arguments are recursion-free, or again something
/// constructor-rooted.
fn non_consuming(e: &Expr) -> bool {
    if recursion_free(e) || constructor_rooted(e) {
        return true;
    }
    matches!(e, Expr::Call(_, args, _) if args.iter().all(recursion_free))
}

fn clause_guarded(c: &Clause) -> bool {
    recursion_free(&c.rhs) || constructor_rooted(&c.rhs)
}

/// Guardedness verdict per defined name. Guard conditions are restricted to
/// pattern variables at parse time, so only the clause bodies matter here.
pub fn check_guarded(sys: &EquationSystem) -> BTreeMap<String, bool> {
    sys.defs
        .iter()
        .map(|d| (d.name.clone(), d.clauses.iter().all(clause_guarded)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streamlang::parse_defs;

    #[test]
    fn plain_recursion_under_constructor_is_guarded() {
        let sys = parse_defs("even (x : y : t) = x : even t\n").unwrap();
        assert!(check_guarded(&sys)["even"]);
    }

    #[test]
    fn self_call_under_other_calls_is_not_guarded() {
        let src = "\
even (x : y : t) = x : even t
zip (x : t) s = x : zip s t
add (x : t) (y : s) = (x + y) : add t s
d = 0 : 1 : 1 : zip (add (tl d) (tl (tl d))) (even (tl d))
";
        let sys = parse_defs(src).unwrap();
        let g = check_guarded(&sys);
        assert!(g["even"] && g["zip"] && g["add"]);
        assert!(!g["d"]);
    }

    #[test]
    fn consuming_self_call_is_not_guarded() {
        let sys = parse_defs("f t = f (tl t)\n").unwrap();
        assert!(!check_guarded(&sys)["f"]);
    }

    #[test]
    fn bare_parameter_clause_is_guarded() {
        let src = "\
data sym = vx | vy
coterm term = var(sym) | eps(term)
subst (var v) t x = t if v == x
subst (var v) t x = var v otherwise
subst (eps s) t x = eps (subst s t x)
";
        let sys = parse_defs(src).unwrap();
        assert!(check_guarded(&sys)["subst"]);
    }
}
