//! The built-in definition library: the worked stream examples and
//! substitution on epsilon-lambda-terms.

use super::ast::EquationSystem;
use super::parse::parse_defs;

pub const LIBRARY_SRC: &str = "\
# Streams of naturals and the classic corecursive definitions.
even (x : y : t) = x : even t
zip (x : t) s = x : zip s t
add (x : t) (y : s) = (x + y) : add t s
merge (x : t1) (y : t2) = x : merge t1 (y : t2) if x < y
merge (x : t1) (y : t2) = y : merge (x : t1) t2 if x > y
merge (x : t1) (y : t2) = x : merge t1 t2 otherwise
mul x (y : t) = (x * y) : mul x t

# A nested self-referential stream and the Hamming numbers.
D = 0 : 1 : 1 : zip (add (tl D) (tl (tl D))) (even (tl D))
H = 1 : merge (merge (mul 2 H) (mul 3 H)) (mul 5 H)

# Substitution on epsilon-lambda-terms over a small variable pool.
data sym = vx | vy | vz | vu | vw
coterm term = var(sym) | app(term, term) | lam(sym, term) | eps(term)
subst (var v) t x = t if v == x
subst (var v) t x = var v otherwise
subst (app s1 s2) t x = app (subst s1 t x) (subst s2 t x)
subst (lam v s) t x = lam v s if v == x
subst (lam v s) t x = lam v (subst s t x) otherwise
subst (eps s) t x = eps (subst s t x)
";

/// The library systems shipped with the tool, parsed from [`LIBRARY_SRC`].
pub fn builtin_library() -> EquationSystem {
    parse_defs(LIBRARY_SRC).expect("builtin library parses")
}
